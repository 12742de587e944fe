#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "equivariant.hpp"
#include "rng.hpp"

namespace equibound {

// ---------------------------------------------------------------------------
// norms

namespace detail {

inline double gram_spectral_norm(const Eigen::MatrixXd& W) {
    Eigen::MatrixXd G = W.rows() <= W.cols() ? Eigen::MatrixXd(W * W.transpose()) : Eigen::MatrixXd(W.transpose() * W);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G, Eigen::EigenvaluesOnly);
    return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

}  // namespace detail

/// Largest singular value. Power iteration on W^T W from a fixed seeded start vector.
inline double spectral_norm(const Eigen::MatrixXd& W, double tol = 1e-10, std::size_t max_iter = 20000) {
    if (!W.allFinite()) throw std::invalid_argument("spectral_norm: non-finite entries");
    if (W.size() == 0) return 0.0;
    if (std::min(W.rows(), W.cols()) <= 16) return detail::gram_spectral_norm(W);

    Rng rng(0x5bd1e995ULL);
    Eigen::VectorXd v = gaussian_vector(rng, W.cols());
    v.normalize();
    double lambda = 0.0;
    for (std::size_t it = 0; it < max_iter; ++it) {
        Eigen::VectorXd u = W * v;
        double next = u.squaredNorm();
        if (next == 0.0) {
            // start vector in the kernel; only possible for W = 0 generically
            if (W.isZero(0.0)) return 0.0;
            v = gaussian_vector(rng, W.cols()).normalized();
            continue;
        }
        Eigen::VectorXd w = W.transpose() * u;
        double residual = (w - next * v).norm();
        v = w / w.norm();
        bool settled = std::abs(next - lambda) <= tol * next && residual <= std::sqrt(tol) * next;
        lambda = next;
        if (settled) return std::sqrt(lambda);
    }
    return detail::gram_spectral_norm(W);
}

/// S_l = sum over blocks ||What(psi,j,i)||_F^2 / dim_psi = squared coefficient norm.
inline double fourier_frobenius_sum(const EquivariantLayer& layer) { return layer.parameters().squaredNorm(); }

/// Direct block evaluation of S_l from the materialized matrix (cross-check path).
inline double fourier_frobenius_sum_from_blocks(const EquivariantLayer& layer) {
    Eigen::MatrixXd Wh = layer.out_rep().basis().apply_transpose(layer.in_rep().basis().right_apply(layer.matrix()));
    double s = 0;
    for (const auto& b : layer.coefficient_blocks()) {
        const auto d = static_cast<Eigen::Index>(b.dim);
        for (std::size_t j = 0; j < b.m_out; ++j)
            for (std::size_t i = 0; i < b.m_in; ++i)
                s += Wh.block(b.out_offset + static_cast<Eigen::Index>(j) * d, b.in_offset + static_cast<Eigen::Index>(i) * d, d, d)
                         .squaredNorm() /
                     double(b.dim);
    }
    return s;
}

// ---------------------------------------------------------------------------
// perturbation and tail quantities

/// max_psi 5 m_{l-1,psi} m_{l,psi} c_psi over irreps shared by the layer's reps
inline double layer_multiplicity_term(const EquivariantLayer& layer) {
    double best = 0;
    for (const auto& b : layer.coefficient_blocks()) best = std::max(best, 5.0 * double(b.m_in * b.m_out * b.c));
    return best;
}

inline double total_output_multiplicity(const EquivariantNetwork& net) {
    double s = 0;
    for (const auto& l : net.layers()) s += double(l.out_rep().total_multiplicity());
    return s;
}

/// M(l, eta) for 1-based layer index l
inline double m_factor(const EquivariantNetwork& net, std::size_t l, double eta) {
    if (!(eta > 0 && eta < 1)) throw std::invalid_argument("eta must lie in (0,1)");
    if (l < 1 || l > net.depth()) throw std::out_of_range("layer index must be in [1, L]");
    return std::log(total_output_multiplicity(net) / (1.0 - eta)) * layer_multiplicity_term(net.layer(l - 1));
}

namespace detail {

inline long double log_xi_extended(std::size_t m) {
    if (m == 0) throw std::invalid_argument("xi requires m >= 1");
    const long double M = static_cast<long double>(m);
    const long double lm = std::log(M);
    const long double lgm = std::lgamma(M + 1.0L);
    std::vector<long double> terms(m + 1);
    long double mx = -std::numeric_limits<long double>::infinity();
    for (std::size_t k = 0; k <= m; ++k) {
        const long double K = static_cast<long double>(k), R = M - K;
        long double t = lgm - std::lgamma(K + 1.0L) - std::lgamma(R + 1.0L);
        if (k > 0) t += K * (std::log(K) - lm);
        if (k < m) t += R * (std::log(R) - lm);
        terms[k] = t;
        mx = std::max(mx, t);
    }
    long double s = 0;
    for (auto t : terms) s += std::exp(t - mx);
    return mx + std::log(s);
}

}  // namespace detail

/// log xi(m), xi(m) = sum_k C(m,k) (k/m)^k (1-k/m)^(m-k), summed in extended precision.
inline double log_xi(std::size_t m) { return static_cast<double>(detail::log_xi_extended(m)); }

inline double xi(std::size_t m) {
    const double v = static_cast<double>(std::exp(detail::log_xi_extended(m)));
    if (!std::isfinite(v)) throw std::overflow_error("xi(" + std::to_string(m) + ") overflows double");
    return v;
}

inline std::vector<double> spectral_norms(const EquivariantNetwork& net) {
    std::vector<double> s;
    for (const auto& l : net.layers()) s.push_back(spectral_norm(l.matrix()));
    return s;
}

namespace detail {

inline void require_positive_norms(const std::vector<double>& norms) {
    for (std::size_t l = 0; l < norms.size(); ++l)
        if (!(norms[l] > 0)) throw std::domain_error("layer " + std::to_string(l + 1) + " has zero spectral norm");
}

inline double sum_sqrt_m(const EquivariantNetwork& net, double eta) {
    double s = 0;
    for (std::size_t l = 1; l <= net.depth(); ++l) s += std::sqrt(m_factor(net, l, eta));
    return s;
}

}  // namespace detail

/// sigma_0 = gamma / (4 e B beta^{L-1} sum_l sqrt(M_l)), beta^L = prod_l ||W_l||_2
inline double posterior_sigma(const std::vector<double>& norms, double sum_sqrt_M, double gamma, double B) {
    detail::require_positive_norms(norms);
    const double L = double(norms.size());
    double log_prod = 0;
    for (double n : norms) log_prod += std::log(n);
    const double beta = std::exp(log_prod / L);
    return gamma / (4.0 * std::numbers::e * B * std::pow(beta, L - 1.0) * sum_sqrt_M);
}

inline double posterior_sigma(const EquivariantNetwork& net, double gamma, double B, double eta) {
    return posterior_sigma(spectral_norms(net), detail::sum_sqrt_m(net, eta), gamma, B);
}

/// KL divergence between the posterior and prior at sigma_0 for the weight-normalized network,
/// sum_l (beta^2 / ||W_l||^2) S_l / (2 sigma_0^2).
inline double kl_term(const std::vector<double>& norms, const std::vector<double>& S, double sigma0) {
    const double L = double(norms.size());
    double log_prod = 0;
    for (double n : norms) log_prod += std::log(n);
    const double beta = std::exp(log_prod / L);
    double s = 0;
    for (std::size_t l = 0; l < norms.size(); ++l) s += beta * beta / (norms[l] * norms[l]) * S[l];
    return s / (2.0 * sigma0 * sigma0);
}

/// e B prod_i ||W_i|| sum_i ||U_i|| / ||W_i||, valid when ||U_l|| <= ||W_l|| / L
inline double perturbation_rhs(const EquivariantNetwork& net, const std::vector<Eigen::MatrixXd>& U, double B) {
    if (U.size() != net.depth()) throw std::invalid_argument("one perturbation per layer expected");
    const double L = double(net.depth());
    std::vector<double> wn = spectral_norms(net);
    double prod = 1, sum = 0;
    for (std::size_t l = 0; l < U.size(); ++l) {
        const auto& W = net.layer(l).matrix();
        if (U[l].rows() != W.rows() || U[l].cols() != W.cols()) throw std::invalid_argument("perturbation shape mismatch");
        const double un = spectral_norm(U[l]);
        if (un > wn[l] / L * (1.0 + 1e-12))
            throw std::domain_error("perturbation of layer " + std::to_string(l + 1) + " exceeds ||W_l||/L");
        if (wn[l] == 0) throw std::domain_error("zero layer");
        prod *= wn[l];
        sum += un / wn[l];
    }
    return std::numbers::e * B * prod * sum;
}

struct TailThreshold {
    double threshold = 0;        // sigma sqrt(max_psi 5 m_{l-1} m_l c t)
    double tight_threshold = 0;  // sigma sqrt(max_psi m_{l-1}(m_l c + 2 m_l c sqrt(t) + 2t))
    double probability_bound = 0;
    bool vacuous() const { return probability_bound >= 1.0; }
};

inline TailThreshold tail_threshold(const RepSpec& in, const RepSpec& out, double sigma, double t) {
    if (!(sigma > 0) || !(t > 0)) throw std::invalid_argument("tail_threshold needs sigma > 0 and t > 0");
    double simple = 0, tight = 0, count = 0;
    for (std::size_t p = 0; p < in.table().size(); ++p) {
        const double mi = double(in.multiplicity(p)), mo = double(out.multiplicity(p));
        if (mi == 0 || mo == 0) continue;
        const double c = in.table().irreps[p].type_c;
        simple = std::max(simple, 5.0 * mi * mo * c * t);
        tight = std::max(tight, mi * (mo * c + 2.0 * mo * c * std::sqrt(t) + 2.0 * t));
        count += mo;
    }
    return {sigma * std::sqrt(simple), sigma * std::sqrt(tight), count * std::exp(-t)};
}

/// sqrt(max_psi max_i m_{l-1,psi} (1/dim) sum_j ||Uhat(psi,j,i)||_F^2), an upper bound on ||U||_2
inline double layer_perturbation_bound(const EquivariantLayer& U) {
    double best = 0;
    const auto& p = U.parameters();
    for (const auto& b : U.coefficient_blocks()) {
        for (std::size_t i = 0; i < b.m_in; ++i) {
            double s = 0;
            for (std::size_t j = 0; j < b.m_out; ++j)
                for (std::size_t k = 0; k < b.c; ++k) s += p(static_cast<Eigen::Index>(b.index(j, i, k))) * p(static_cast<Eigen::Index>(b.index(j, i, k)));
            best = std::max(best, double(b.m_in) * s);
        }
    }
    return std::sqrt(best);
}

// ---------------------------------------------------------------------------
// bounds

struct BoundInputs {
    const EquivariantNetwork* net = nullptr;
    std::size_t m = 0;
    double gamma = 10.0;
    double B = 1.0;
    double delta = 0.05;
    double eta = 0.5;
    double empirical_margin_loss = 0.0;

    void validate() const {
        if (!net) throw std::invalid_argument("bound inputs need a network");
        if (m < 1) throw std::invalid_argument("m must be >= 1");
        if (!(gamma > 0)) throw std::invalid_argument("gamma must be positive");
        if (!(eta > 0 && eta < 1)) throw std::invalid_argument("eta must lie in (0,1)");
        if (!(B > 0)) throw std::invalid_argument("B must be positive");
        if (!(delta > 0 && delta < 1)) throw std::invalid_argument("delta must lie in (0,1)");
    }
};

struct LayerDiagnostics {
    double spectral_norm = 0;
    double frobenius = 0;
    double fourier_frobenius = 0;
    double M = 0;
};

struct BoundReport {
    std::string group_kind;
    std::size_t N = 0;
    std::size_t group_order = 0;
    std::size_t m = 0;
    double gamma = 0, eta = 0, delta = 0, B = 0;
    double train_err = std::numeric_limits<double>::quiet_NaN();
    double train_margin_loss = 0;
    double test_err = std::numeric_limits<double>::quiet_NaN();
    double GE = std::numeric_limits<double>::quiet_NaN();

    std::vector<LayerDiagnostics> layers;
    double beta_product = 0;  // prod_l ||W_l||_2^2
    double sum_sqrt_M = 0;
    double xi_m = 0;
    double sigma0 = 0;
    double kl_term = 0;
    double bound_main = 0;
    double bound_main_as_written = 0;
    bool groupconv_available = false;
    double bound_groupconv = std::numeric_limits<double>::quiet_NaN();
    double D_H = 0, E_H = 0, Q_H = std::numeric_limits<double>::quiet_NaN();
    double h = 0;
    double bound_alt = 0;  // order-level: constants omitted
};

namespace detail {

inline double log_confidence_term(std::size_t m, std::size_t L, double delta) {
    const double lm = std::log(double(m));
    return log_xi(m) + std::log(double(L)) + (1.0 + 1.0 / (2.0 * double(L))) * lm - std::log(delta);
}

}  // namespace detail

/// L + sqrt(32 e^4 B^2 P / (gamma^2 m eta) * (sum sqrt M)^2 * ratio + logterm / (2m))
inline double main_bound_from_terms(double margin_loss, double B, double gamma, std::size_t m, double eta,
                                    double prod_sq, double sum_sqrt_M, double ratio_sum, double log_term) {
    const double e4 = std::pow(std::numbers::e, 4);
    const double lead = 32.0 * e4 * B * B * prod_sq / (gamma * gamma * double(m) * eta) * sum_sqrt_M * sum_sqrt_M * ratio_sum;
    return margin_loss + std::sqrt(lead + log_term / (2.0 * double(m)));
}

/// literal expression: beta^2 with beta = prod ||W_l||, confidence term over 2 gamma^2 m
inline double main_bound_as_written_from_terms(double margin_loss, double B, double gamma, std::size_t m, double eta,
                                               double prod_norms, double sum_sqrt_M, double ratio_sum, double log_term) {
    const double e4 = std::pow(std::numbers::e, 4);
    const double lead =
        32.0 * e4 * B * B * prod_norms * prod_norms / (gamma * gamma * double(m) * eta) * sum_sqrt_M * sum_sqrt_M * ratio_sum;
    return margin_loss + std::sqrt(lead + log_term / (2.0 * gamma * gamma * double(m)));
}

inline double alternative_bound_from_terms(double margin_loss, std::size_t group_order, double max_dim, std::size_t L,
                                           double h, double prod_sq, double frob_ratio_sum, double gamma, std::size_t m) {
    const double Ld = double(L);
    const double inner = max_dim * Ld * Ld * h * std::log(2.0 * Ld * h) * prod_sq * frob_ratio_sum / (gamma * gamma * double(m));
    return margin_loss + std::sqrt(inner) / std::sqrt(double(group_order));
}

/// D_H = max dim^2/c, E_H = sum dim/c
inline std::pair<double, double> group_constants(const IrrepTable& T) {
    double D = 0, E = 0;
    for (const auto& psi : T.irreps) {
        D = std::max(D, double(psi.dim * psi.dim) / psi.type_c);
        E += double(psi.dim) / psi.type_c;
    }
    return {D, E};
}

/// Channel count of a regular-multiple rep, or -1 if it is not one.
inline double regular_channels(const RepSpec& r) {
    const auto& T = r.table();
    const std::size_t c = r.multiplicity(0);
    for (std::size_t p = 0; p < T.size(); ++p)
        if (r.multiplicity(p) != c * T.irreps[p].retained()) return -1.0;
    return c == 0 ? -1.0 : double(c);
}

/// c_0..c_L; inner layers must be regular multiples, input and head may carry dim/|H| effective channels
inline std::vector<double> groupconv_channels(const EquivariantNetwork& net) {
    std::vector<double> c;
    const std::size_t L = net.depth();
    const double order = double(net.group().order());
    for (std::size_t l = 0; l <= L; ++l) {
        const RepSpec& r = l == 0 ? net.layer(0).in_rep() : net.layer(l - 1).out_rep();
        double cl = regular_channels(r);
        if (cl < 0) {
            if (l != 0 && l != L)
                throw std::domain_error("layer " + std::to_string(l) + " is not a regular-representation layer");
            cl = double(r.dim()) / order;
        }
        c.push_back(cl);
    }
    return c;
}

struct GroupConvTerms {
    double D_H = 0, E_H = 0, Q_H = 0;
    double sum_sqrt_cc = 0;
    double leading = 0;  // 5 (sum sqrt(c c))^2 D_H log(E_H sum_{l>=1} c_l / (1 - eta))
};

inline GroupConvTerms groupconv_terms(const EquivariantNetwork& net, double eta = 0.5) {
    auto [D, E] = group_constants(net.input_rep().table());
    std::vector<double> c = groupconv_channels(net);
    GroupConvTerms g;
    g.D_H = D;
    g.E_H = E;
    double sum_prev = 0, sum_cur = 0;
    for (std::size_t l = 1; l < c.size(); ++l) {
        g.sum_sqrt_cc += std::sqrt(c[l - 1] * c[l]);
        sum_prev += c[l - 1];
        sum_cur += c[l];
    }
    g.Q_H = g.sum_sqrt_cc * g.sum_sqrt_cc * D * std::log(2.0 * E * sum_prev);
    g.leading = 5.0 * g.sum_sqrt_cc * g.sum_sqrt_cc * D * std::log(E * sum_cur / (1.0 - eta));
    return g;
}

inline BoundReport compute_bounds(const BoundInputs& in) {
    in.validate();
    const EquivariantNetwork& net = *in.net;
    const std::size_t L = net.depth();
    BoundReport r;
    const auto& G = net.group();
    r.group_kind = to_string(G.kind());
    r.N = G.N();
    r.group_order = G.order();
    r.m = in.m;
    r.gamma = in.gamma;
    r.eta = in.eta;
    r.delta = in.delta;
    r.B = in.B;
    r.train_margin_loss = in.empirical_margin_loss;

    std::vector<double> norms, S;
    double log_prod = 0, ratio = 0, frob_ratio = 0;
    for (std::size_t l = 0; l < L; ++l) {
        LayerDiagnostics d;
        const auto& W = net.layer(l).matrix();
        d.spectral_norm = spectral_norm(W);
        d.frobenius = W.norm();
        d.fourier_frobenius = fourier_frobenius_sum(net.layer(l));
        d.M = m_factor(net, l + 1, in.eta);
        if (!(d.spectral_norm > 0)) throw std::domain_error("layer " + std::to_string(l + 1) + " has zero spectral norm");
        norms.push_back(d.spectral_norm);
        S.push_back(d.fourier_frobenius);
        log_prod += std::log(d.spectral_norm);
        ratio += d.fourier_frobenius / (d.spectral_norm * d.spectral_norm);
        frob_ratio += d.frobenius * d.frobenius / (d.spectral_norm * d.spectral_norm);
        r.sum_sqrt_M += std::sqrt(d.M);
        r.layers.push_back(d);
    }
    r.beta_product = std::exp(2.0 * log_prod);
    r.xi_m = xi(in.m);
    r.sigma0 = posterior_sigma(norms, r.sum_sqrt_M, in.gamma, in.B);
    r.kl_term = kl_term(norms, S, r.sigma0);
    const double log_term = detail::log_confidence_term(in.m, L, in.delta);
    r.bound_main = main_bound_from_terms(in.empirical_margin_loss, in.B, in.gamma, in.m, in.eta, r.beta_product,
                                         r.sum_sqrt_M, ratio, log_term);
    r.bound_main_as_written = main_bound_as_written_from_terms(in.empirical_margin_loss, in.B, in.gamma, in.m, in.eta,
                                                               std::exp(log_prod), r.sum_sqrt_M, ratio, log_term);

    auto [D, E] = group_constants(net.input_rep().table());
    r.D_H = D;
    r.E_H = E;
    try {
        GroupConvTerms g = groupconv_terms(net, 0.5);
        r.Q_H = g.Q_H;
        // the group-conv specialization fixes eta = 1/2
        r.bound_groupconv = in.empirical_margin_loss +
                            std::sqrt(32.0 * std::pow(std::numbers::e, 4) * in.B * in.B * r.beta_product /
                                          (in.gamma * in.gamma * double(in.m) * 0.5) * g.leading * ratio +
                                      log_term / (2.0 * double(in.m)));
        r.groupconv_available = true;
    } catch (const std::domain_error&) {
        r.groupconv_available = false;
    }

    double max_dim = 0;
    for (const auto& psi : net.input_rep().table().irreps) max_dim = std::max(max_dim, double(psi.dim));
    double h = double(net.input_dim());
    for (const auto& l : net.layers()) h = std::max(h, double(l.out_rep().dim()));
    r.h = h;
    r.bound_alt = alternative_bound_from_terms(in.empirical_margin_loss, G.order(), max_dim, L, h, r.beta_product,
                                               frob_ratio, in.gamma, in.m);
    return r;
}

/// groupconv_bound as a standalone entry point; rejects non-group-conv architectures.
inline double groupconv_bound(const BoundInputs& in) {
    groupconv_channels(*in.net);
    BoundReport r = compute_bounds(in);
    return r.bound_groupconv;
}

inline double main_bound(const BoundInputs& in) { return compute_bounds(in).bound_main; }
inline double alternative_bound(const BoundInputs& in) { return compute_bounds(in).bound_alt; }

}  // namespace equibound
