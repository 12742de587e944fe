#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bounds.hpp"
#include "equivariant.hpp"
#include "repr.hpp"
#include "rng.hpp"

namespace equibound {

struct CheckResult {
    std::string name;
    double max_violation = 0.0;
    std::size_t trials = 0;
    double threshold = 0.0;
    bool passed = false;
    std::string detail;

    static CheckResult make(std::string name, double violation, std::size_t trials, double threshold, std::string detail = {}) {
        return {std::move(name), violation, trials, threshold, violation <= threshold, std::move(detail)};
    }
};

namespace detail {

inline std::string short_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

}  // namespace detail

inline std::string format_check(const CheckResult& r) {
    std::ostringstream os;
    os << r.name << " trials=" << r.trials << " max_violation=" << r.max_violation << " threshold=" << r.threshold << " "
       << (r.passed ? "PASS" : "FAIL");
    if (!r.detail.empty()) os << " (" << r.detail << ")";
    return os.str();
}

/// max_g ||W rho_in(g) - rho_out(g) W||_inf
inline double equivariance_violation(const EquivariantLayer& layer) {
    const auto& W = layer.matrix();
    double worst = 0;
    for (std::size_t g = 0; g < layer.in_rep().group().order(); ++g) {
        Eigen::MatrixXd lhs = layer.in_rep().basis().right_apply_transpose(layer.in_rep().basis().apply(layer.in_rep().block_action(g)));
        Eigen::MatrixXd rhs = layer.out_rep().action(g);
        worst = std::max(worst, (W * lhs - rhs * W).cwiseAbs().maxCoeff());
    }
    return worst;
}

inline CheckResult check_equivariance(const EquivariantLayer& layer, double tol = 1e-10) {
    return CheckResult::make("layer_equivariance", equivariance_violation(layer), layer.in_rep().group().order(), tol);
}

/// max over g and inputs of the logit deviation |f(rho_0(g) x) - f(x)|
inline CheckResult check_equivariance(const EquivariantNetwork& net, const Eigen::MatrixXd& X, double tol = 1e-8) {
    Eigen::MatrixXd F0 = net.forward(X);
    double worst = 0;
    for (std::size_t g = 0; g < net.group().order(); ++g) {
        Eigen::MatrixXd Fg = net.forward(Eigen::MatrixXd(net.input_rep().action(g) * X));
        worst = std::max(worst, (Fg - F0).cwiseAbs().maxCoeff());
    }
    double layer_worst = 0;
    for (const auto& l : net.layers()) layer_worst = std::max(layer_worst, equivariance_violation(l));
    return CheckResult::make("network_invariance", worst, net.group().order() * static_cast<std::size_t>(X.cols()), tol,
                             "worst layer violation " + detail::short_num(layer_worst));
}

inline double dense_spectral_oracle(const Eigen::MatrixXd& W) {
    if (W.rows() > 2048 || W.cols() > 2048) throw std::length_error("dense oracle limited to 2048x2048");
    if (W.size() == 0) return 0.0;
    Eigen::BDCSVD<Eigen::MatrixXd> svd(W);
    return svd.singularValues()(0);
}

inline int character_type_oracle(const Irrep& psi, const FiniteGroup& G) {
    double s = 0;
    for (std::size_t g = 0; g < G.order(); ++g) s += psi(g).trace() * psi(g).trace();
    s /= double(G.order());
    int best = 1;
    for (int c : {2, 4})
        if (std::abs(s - c) < std::abs(s - best)) best = c;
    if (std::abs(s - best) > 0.01) throw std::domain_error("character norm " + std::to_string(s) + " is not 1, 2 or 4");
    return best;
}

/// sum a + 2 ||a||_2 sqrt(x) + 2 ||a||_inf x
inline double chi_square_threshold(const Eigen::VectorXd& a, double x) {
    if (!(x > 0)) throw std::invalid_argument("x must be positive");
    if (a.size() == 0) return 0.0;
    return a.sum() + 2.0 * a.norm() * std::sqrt(x) + 2.0 * a.cwiseAbs().maxCoeff() * x;
}

inline CheckResult mc_chi_square_check(const Eigen::VectorXd& a, double x, std::size_t trials, std::uint64_t seed) {
    Rng rng(seed);
    std::normal_distribution<double> nd;
    const double thr = chi_square_threshold(a, x);
    std::size_t hits = 0;
    for (std::size_t t = 0; t < trials; ++t) {
        double s = 0;
        for (Eigen::Index i = 0; i < a.size(); ++i) {
            double z = nd(rng);
            s += a(i) * z * z;
        }
        if (s >= thr && a.size() > 0 && a.cwiseAbs().maxCoeff() > 0) ++hits;
    }
    double emp = double(hits) / double(trials);
    return CheckResult::make("chi_square_tail", emp - std::exp(-x), trials, 0.0,
                             "empirical=" + detail::short_num(emp) + " bound=" + detail::short_num(std::exp(-x)));
}

/// random equivariant perturbation with i.i.d. N(0, sigma^2) coefficients
inline EquivariantLayer random_layer(const RepSpec& in, const RepSpec& out, double sigma, Rng& rng) {
    EquivariantLayer U(in, out);
    U.set_parameters(gaussian_vector(rng, static_cast<Eigen::Index>(U.parameter_count()), sigma));
    return U;
}

/**
 * Empirical P(||U||_2 >= threshold) over random coefficient draws, compared against the
 * probability bound (capped at 1) for both the simplified and the tighter threshold.
 */
inline CheckResult mc_tail_check(const RepSpec& in, const RepSpec& out, double sigma, std::size_t trials,
                                 const std::vector<double>& t_grid, std::uint64_t seed) {
    if (trials < 1000) throw std::invalid_argument("mc_tail_check needs at least 1000 trials");
    Rng rng(seed);
    std::vector<double> norms(trials);
    EquivariantLayer U(in, out);
    for (std::size_t s = 0; s < trials; ++s) {
        U.set_parameters(gaussian_vector(rng, static_cast<Eigen::Index>(U.parameter_count()), sigma));
        norms[s] = spectral_norm(U.matrix());
    }
    double worst = -1.0;
    std::ostringstream det;
    for (double t : t_grid) {
        TailThreshold th = tail_threshold(in, out, sigma, t);
        const double cap = std::min(1.0, th.probability_bound);
        double e1 = 0, e2 = 0;
        for (double n : norms) {
            if (n >= th.threshold) e1 += 1;
            if (n >= th.tight_threshold) e2 += 1;
        }
        e1 /= double(trials);
        e2 /= double(trials);
        worst = std::max({worst, e1 - cap, e2 - cap});
        det << "t=" << t << ":" << e1 << "/" << e2 << "<=" << cap << " ";
    }
    std::string d = det.str();
    if (!d.empty()) d.pop_back();
    return CheckResult::make("tail_" + in.group().name() + "_" + std::to_string(in.dim()) + "x" + std::to_string(out.dim()), worst,
                             trials, 0.0, d);
}

struct PerturbationCheck {
    CheckResult result;
    std::size_t admissible = 0;
    std::size_t rejected = 0;
    double max_ratio_output = 0;  // max lhs / rhs of the output perturbation inequality
    double max_ratio_layer = 0;   // max ||U_l|| / layer bound
};

/**
 * Draw equivariant perturbations U_l with N(0, sigma^2) coefficients; draws violating
 * ||U_l|| <= ||W_l|| / L are rejected and counted. For each admissible draw, checks
 * ||f_{W+U}(x) - f_W(x)|| <= perturbation_rhs for every input column and the per-layer
 * Fourier bound on ||U_l||.
 */
inline PerturbationCheck mc_perturbation_check(const EquivariantNetwork& net, double sigma, std::size_t trials,
                                               const Eigen::MatrixXd& X, std::uint64_t seed, std::size_t max_draws = 0) {
    const double rel_tol = 1e-12;
    if (max_draws == 0) max_draws = 50 * trials + 100;
    PerturbationCheck out;
    const std::size_t L = net.depth();
    std::vector<double> wn = spectral_norms(net);
    const double B = X.cols() > 0 ? X.colwise().norm().maxCoeff() : 0.0;
    Eigen::MatrixXd F0 = net.forward(X);
    Rng rng(seed);
    EquivariantNetwork pert = net;
    std::size_t draws = 0;
    while (out.admissible < trials && draws < max_draws) {
        ++draws;
        std::vector<EquivariantLayer> U;
        std::vector<Eigen::MatrixXd> Um;
        bool ok = true;
        for (std::size_t l = 0; l < L; ++l) {
            U.push_back(random_layer(net.layer(l).in_rep(), net.layer(l).out_rep(), sigma, rng));
            Um.push_back(U.back().matrix());
            if (spectral_norm(Um.back()) > wn[l] / double(L)) ok = false;
        }
        if (!ok) {
            ++out.rejected;
            continue;
        }
        ++out.admissible;
        for (std::size_t l = 0; l < L; ++l) {
            const double un = spectral_norm(Um[l]);
            const double lb = layer_perturbation_bound(U[l]);
            if (lb > 0) out.max_ratio_layer = std::max(out.max_ratio_layer, un / lb);
            else if (un > 0) out.max_ratio_layer = std::max(out.max_ratio_layer, 2.0);
            pert.layer(l).set_parameters(net.layer(l).parameters() + U[l].parameters());
        }
        const double rhs = perturbation_rhs(net, Um, B);
        const double lhs = (pert.forward(X) - F0).colwise().norm().maxCoeff();
        if (rhs > 0) out.max_ratio_output = std::max(out.max_ratio_output, lhs / rhs);
        else if (lhs > 0) out.max_ratio_output = std::max(out.max_ratio_output, 2.0);
    }
    double violation = std::max(out.max_ratio_output, out.max_ratio_layer) - 1.0;
    if (out.admissible == 0) violation = std::max(violation, 0.0);
    out.result = CheckResult::make("perturbation", out.admissible < trials ? std::max(violation, 1.0) : violation,
                                   out.admissible, rel_tol,
                                   "admissible=" + std::to_string(out.admissible) + " rejected=" + std::to_string(out.rejected) +
                                       " max_lhs/rhs=" + detail::short_num(out.max_ratio_output) +
                                       " max_norm/layer_bound=" + detail::short_num(out.max_ratio_layer));
    return out;
}

/// Roundtrip error and shift-property error of the group Fourier transform on random signals.
inline CheckResult fourier_roundtrip(const IrrepTable& T, std::size_t trials, std::uint64_t seed) {
    if (trials < 1) throw std::invalid_argument("need at least one trial");
    const FiniteGroup& G = T.group;
    Rng rng(seed);
    double worst_roundtrip = 0, worst_shift = 0;
    for (std::size_t s = 0; s < trials; ++s) {
        Eigen::VectorXd x = gaussian_vector(rng, static_cast<Eigen::Index>(G.order()));
        FourierCoefficients xh = fourier_transform(T, x);
        worst_roundtrip = std::max(worst_roundtrip, (inverse_fourier(T, xh) - x).cwiseAbs().maxCoeff());
        for (std::size_t g = 0; g < G.order(); ++g) {
            FourierCoefficients sh = fourier_transform(T, regular_action(G, g) * x);
            for (std::size_t p = 0; p < T.size(); ++p)
                worst_shift = std::max(worst_shift, (sh[p] - T.irreps[p](g) * xh[p]).cwiseAbs().maxCoeff());
        }
    }
    return CheckResult::make("fourier_" + G.name(), std::max(worst_roundtrip, worst_shift), trials, 1e-10,
                             "roundtrip=" + detail::short_num(worst_roundtrip) + " shift=" + detail::short_num(worst_shift));
}

}  // namespace equibound
