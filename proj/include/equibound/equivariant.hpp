#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "repr.hpp"
#include "rng.hpp"

namespace equibound {

/// One (psi, j, i) family of coefficient vectors of length c_psi.
struct CoefficientBlock {
    std::size_t irrep;
    std::size_t dim;
    std::size_t c;
    std::size_t m_out;
    std::size_t m_in;
    std::size_t param_offset;
    Eigen::Index out_offset;
    Eigen::Index in_offset;

    std::size_t index(std::size_t j, std::size_t i, std::size_t k) const {
        return param_offset + (j * m_in + i) * c + k;
    }
};

/**
 * @brief Linear map between two representations of H, parametrized in the Fourier domain.
 *
 * W = Q_out * What * Q_in^T, where What holds sum_k w_k B_{psi,k} in every (psi, j, i) block.
 */
class EquivariantLayer {
public:
    EquivariantLayer() = default;

    EquivariantLayer(RepSpec in, RepSpec out) : in_(std::move(in)), out_(std::move(out)) {
        if (!(in_.group() == out_.group())) throw std::invalid_argument("layer reps belong to different groups");
        std::size_t pos = 0;
        const auto& T = in_.table();
        for (std::size_t p = 0; p < T.size(); ++p) {
            std::size_t mi = in_.multiplicity(p), mo = out_.multiplicity(p);
            if (mi == 0 || mo == 0) continue;
            const auto& psi = T.irreps[p];
            CoefficientBlock b{p,
                               psi.dim,
                               static_cast<std::size_t>(psi.type_c),
                               mo,
                               mi,
                               pos,
                               static_cast<Eigen::Index>(out_.offset(p)),
                               static_cast<Eigen::Index>(in_.offset(p))};
            pos += mo * mi * b.c;
            blocks_.push_back(b);
        }
        params_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(pos));
    }

    const RepSpec& in_rep() const { return in_; }
    const RepSpec& out_rep() const { return out_; }
    const std::vector<CoefficientBlock>& coefficient_blocks() const { return blocks_; }
    std::size_t parameter_count() const { return static_cast<std::size_t>(params_.size()); }

    const Eigen::VectorXd& parameters() const { return params_; }
    void set_parameters(const Eigen::VectorXd& p) {
        if (p.size() != params_.size()) throw std::invalid_argument("parameter count mismatch");
        params_ = p;
        dirty_ = true;
    }
    // caller mutates in place; cache is invalidated immediately
    Eigen::VectorXd& mutable_parameters() {
        dirty_ = true;
        return params_;
    }

    const CoefficientBlock* find_block(std::size_t irrep) const {
        for (const auto& b : blocks_)
            if (b.irrep == irrep) return &b;
        return nullptr;
    }

    double coefficient(std::size_t irrep, std::size_t j, std::size_t i, std::size_t k) const {
        return params_(static_cast<Eigen::Index>(require_block(irrep).index(j, i, k)));
    }
    void set_coefficient(std::size_t irrep, std::size_t j, std::size_t i, std::size_t k, double v) {
        params_(static_cast<Eigen::Index>(require_block(irrep).index(j, i, k))) = v;
        dirty_ = true;
    }

    void scale(double lambda) {
        params_ *= lambda;
        dirty_ = true;
    }

    /// What in basis coordinates, shape dim(out) x dim(in)
    Eigen::MatrixXd fourier_matrix() const {
        Eigen::MatrixXd Wh = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(out_.dim()), static_cast<Eigen::Index>(in_.dim()));
        const auto& T = in_.table();
        for (const auto& b : blocks_) {
            const auto& B = T.bases[b.irrep];
            const auto d = static_cast<Eigen::Index>(b.dim);
            for (std::size_t i = 0; i < b.m_in; ++i)
                for (std::size_t j = 0; j < b.m_out; ++j) {
                    const double* w = params_.data() + b.index(j, i, 0);
                    const Eigen::Index r0 = b.out_offset + static_cast<Eigen::Index>(j) * d;
                    const Eigen::Index c0 = b.in_offset + static_cast<Eigen::Index>(i) * d;
                    for (std::size_t k = 0; k < b.c; ++k) {
                        const double* bk = B[k].data();
                        for (Eigen::Index q = 0; q < d; ++q)
                            for (Eigen::Index p = 0; p < d; ++p) Wh(r0 + p, c0 + q) += w[k] * bk[q * d + p];
                    }
                }
        }
        return Wh;
    }

    /// Dense W in the original coordinates, cached until the coefficients change.
    const Eigen::MatrixXd& matrix() const {
        if (dirty_) {
            W_ = in_.basis().right_apply_transpose(out_.basis().apply(fourier_matrix()));
            dirty_ = false;
        }
        return W_;
    }

    /// dL/dw for every coefficient given dL/dW.
    Eigen::VectorXd coefficient_gradient(const Eigen::MatrixXd& dW) const {
        Eigen::MatrixXd Gh = out_.basis().apply_transpose(in_.basis().right_apply(dW));
        return project_blocks(Gh, false);
    }

    /// Orthogonal projection of a dense matrix onto the span of the layer's basis matrices.
    void assign_projection(const Eigen::MatrixXd& W) {
        Eigen::MatrixXd Wh = out_.basis().apply_transpose(in_.basis().right_apply(W));
        params_ = project_blocks(Wh, true);
        dirty_ = true;
    }

private:
    const CoefficientBlock& require_block(std::size_t irrep) const {
        const auto* b = find_block(irrep);
        if (!b) throw std::out_of_range("irrep not shared by layer input and output");
        return *b;
    }

    // <B_k, block> for every coefficient, optionally divided by ||B_k||_F^2 = dim
    Eigen::VectorXd project_blocks(const Eigen::MatrixXd& M, bool normalize) const {
        Eigen::VectorXd g(params_.size());
        const auto& T = in_.table();
        for (const auto& b : blocks_) {
            const auto& B = T.bases[b.irrep];
            const auto d = static_cast<Eigen::Index>(b.dim);
            const double s = normalize ? 1.0 / double(b.dim) : 1.0;
            for (std::size_t i = 0; i < b.m_in; ++i)
                for (std::size_t j = 0; j < b.m_out; ++j) {
                    double* out = g.data() + b.index(j, i, 0);
                    const Eigen::Index r0 = b.out_offset + static_cast<Eigen::Index>(j) * d;
                    const Eigen::Index c0 = b.in_offset + static_cast<Eigen::Index>(i) * d;
                    for (std::size_t k = 0; k < b.c; ++k) {
                        const double* bk = B[k].data();
                        double acc = 0;
                        for (Eigen::Index q = 0; q < d; ++q)
                            for (Eigen::Index p = 0; p < d; ++p) acc += bk[q * d + p] * M(r0 + p, c0 + q);
                        out[k] = s * acc;
                    }
                }
        }
        return g;
    }

    RepSpec in_;
    RepSpec out_;
    std::vector<CoefficientBlock> blocks_;
    Eigen::VectorXd params_;
    mutable Eigen::MatrixXd W_;
    mutable bool dirty_ = true;
};

struct TrainingMetadata {
    double gamma = 0.0;
    std::uint64_t init_seed = 0;
    std::uint64_t seed = 0;
    std::size_t epochs = 0;
    double final_margin_accuracy = 0.0;
    bool reached = false;
};

/**
 * @brief Stack of equivariant layers with ReLU between them and no biases.
 *
 * Inputs are processed column-wise: X has one sample per column.
 */
class EquivariantNetwork {
public:
    EquivariantNetwork() = default;
    explicit EquivariantNetwork(std::vector<EquivariantLayer> layers) : layers_(std::move(layers)) {
        if (layers_.empty()) throw std::invalid_argument("network needs at least one layer");
        for (std::size_t l = 1; l < layers_.size(); ++l)
            if (layers_[l].in_rep().dim() != layers_[l - 1].out_rep().dim())
                throw std::invalid_argument("layer dimensions do not chain");
    }

    std::size_t depth() const { return layers_.size(); }
    const std::vector<EquivariantLayer>& layers() const { return layers_; }
    std::vector<EquivariantLayer>& layers() { return layers_; }
    const EquivariantLayer& layer(std::size_t l) const { return layers_.at(l); }
    EquivariantLayer& layer(std::size_t l) { return layers_.at(l); }
    const RepSpec& input_rep() const { return layers_.front().in_rep(); }
    const FiniteGroup& group() const { return input_rep().group(); }
    std::size_t input_dim() const { return input_rep().dim(); }
    std::size_t output_dim() const { return layers_.back().out_rep().dim(); }

    std::size_t parameter_count() const {
        std::size_t s = 0;
        for (const auto& l : layers_) s += l.parameter_count();
        return s;
    }

    Eigen::MatrixXd forward(const Eigen::MatrixXd& X) const {
        if (static_cast<std::size_t>(X.rows()) != input_dim())
            throw std::invalid_argument("input dimension " + std::to_string(X.rows()) + " != " + std::to_string(input_dim()));
        Eigen::MatrixXd A = X;
        for (std::size_t l = 0; l < layers_.size(); ++l) {
            Eigen::MatrixXd Z = layers_[l].matrix() * A;
            if (l + 1 < layers_.size()) Z = Z.cwiseMax(0.0);
            A.swap(Z);
        }
        return A;
    }

    Eigen::VectorXd forward(const Eigen::VectorXd& x) const {
        return forward(Eigen::MatrixXd(x)).col(0);
    }

    TrainingMetadata metadata;

private:
    std::vector<EquivariantLayer> layers_;
};

/// Gaussian init with variance 1 / (m_in,psi * c_psi), the number of input features reaching
/// each output coordinate of the psi block.
inline void initialize_gaussian(EquivariantLayer& layer, Rng& rng) {
    Eigen::VectorXd p(static_cast<Eigen::Index>(layer.parameter_count()));
    for (const auto& b : layer.coefficient_blocks()) {
        std::normal_distribution<double> nd(0.0, 1.0 / std::sqrt(double(b.m_in * b.c)));
        for (std::size_t t = 0; t < b.m_out * b.m_in * b.c; ++t) p(static_cast<Eigen::Index>(b.param_offset + t)) = nd(rng);
    }
    layer.set_parameters(p);
}

/// Chain of layers through the given reps (reps.size() = L + 1).
inline EquivariantNetwork network_from_reps(const std::vector<RepSpec>& reps, std::uint64_t seed) {
    if (reps.size() < 2) throw std::invalid_argument("need at least input and output reps");
    Rng rng(seed);
    std::vector<EquivariantLayer> layers;
    for (std::size_t l = 0; l + 1 < reps.size(); ++l) {
        layers.emplace_back(reps[l], reps[l + 1]);
        initialize_gaussian(layers.back(), rng);
    }
    EquivariantNetwork net(std::move(layers));
    net.metadata.init_seed = seed;
    return net;
}

/// Hidden layers carry c_l copies of the regular representation; the head maps to
/// n_classes copies of the trivial irrep.
inline EquivariantNetwork build_network(const RepSpec& input_rep, const std::vector<std::size_t>& hidden_channels,
                                        std::size_t n_classes, std::uint64_t seed) {
    if (hidden_channels.empty()) throw std::invalid_argument("empty architecture");
    if (n_classes == 0) throw std::invalid_argument("need at least one class");
    const auto& T = input_rep.table_ptr();
    RepSpec reg = regular_representation(T);
    std::vector<RepSpec> reps{input_rep};
    for (auto c : hidden_channels) {
        if (c == 0) throw std::invalid_argument("channel counts must be >= 1");
        reps.push_back(copies(reg, c));
    }
    reps.push_back(trivial_rep(T, n_classes));
    return network_from_reps(reps, seed);
}

struct LossAndGradient {
    double loss = 0.0;
    std::vector<Eigen::VectorXd> grads;  // per layer, in coefficient order
    Eigen::MatrixXd logits;
};

/// Mean cross-entropy of softmax(f / temperature) over the batch and its gradient w.r.t. every
/// Fourier coefficient.
inline LossAndGradient loss_and_gradient(const EquivariantNetwork& net, const Eigen::MatrixXd& X,
                                         const std::vector<int>& y, double temperature = 1.0) {
    if (!(temperature > 0)) throw std::invalid_argument("temperature must be positive");
    const Eigen::Index B = X.cols();
    if (B == 0) throw std::invalid_argument("empty batch");
    if (static_cast<Eigen::Index>(y.size()) != B) throw std::invalid_argument("label count mismatch");
    const std::size_t L = net.depth();
    std::vector<Eigen::MatrixXd> acts;  // acts[l] = input to layer l
    acts.reserve(L + 1);
    acts.push_back(X);
    for (std::size_t l = 0; l < L; ++l) {
        Eigen::MatrixXd Z = net.layer(l).matrix() * acts.back();
        if (l + 1 < L) Z = Z.cwiseMax(0.0);
        acts.push_back(std::move(Z));
    }
    const Eigen::MatrixXd& F = acts.back();
    const auto K = F.rows();

    LossAndGradient out;
    out.logits = F;
    Eigen::MatrixXd delta(K, B);
    double loss = 0;
    for (Eigen::Index s = 0; s < B; ++s) {
        if (y[static_cast<std::size_t>(s)] < 0 || y[static_cast<std::size_t>(s)] >= K) throw std::invalid_argument("label out of range");
        Eigen::VectorXd z = F.col(s) / temperature;
        double mx = z.maxCoeff();
        Eigen::VectorXd e = (z.array() - mx).exp();
        double Z = e.sum();
        loss += std::log(Z) + mx - z(y[static_cast<std::size_t>(s)]);
        delta.col(s) = e / Z;
        delta(y[static_cast<std::size_t>(s)], s) -= 1.0;
    }
    out.loss = loss / double(B);
    delta /= double(B) * temperature;

    out.grads.resize(L);
    for (std::size_t l = L; l-- > 0;) {
        Eigen::MatrixXd dW = delta * acts[l].transpose();
        out.grads[l] = net.layer(l).coefficient_gradient(dW);
        if (l > 0) {
            Eigen::MatrixXd back = net.layer(l).matrix().transpose() * delta;
            delta = (acts[l].array() > 0.0).select(back, 0.0);
        }
    }
    return out;
}

/// f(x)[y] - max_{j != y} f(x)[j] per column
inline Eigen::VectorXd margins(const Eigen::MatrixXd& logits, const std::vector<int>& y) {
    Eigen::VectorXd m(logits.cols());
    for (Eigen::Index s = 0; s < logits.cols(); ++s) {
        const int t = y[static_cast<std::size_t>(s)];
        double other = -std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < logits.rows(); ++j)
            if (j != t) other = std::max(other, logits(j, s));
        m(s) = logits(t, s) - other;
    }
    return m;
}

inline Eigen::VectorXd margins(const EquivariantNetwork& net, const Eigen::MatrixXd& X, const std::vector<int>& y) {
    return margins(net.forward(X), y);
}

/// fraction of samples with f(x)[y] <= gamma + max_{j != y} f(x)[j]
inline double empirical_margin_loss(const EquivariantNetwork& net, const Eigen::MatrixXd& X, const std::vector<int>& y,
                                    double gamma) {
    if (gamma < 0) throw std::invalid_argument("gamma must be nonnegative");
    if (X.cols() == 0) return 0.0;
    Eigen::VectorXd m = margins(net, X, y);
    return double((m.array() <= gamma).count()) / double(m.size());
}

/// 0-1 error with ties counted as errors
inline double zero_one_error(const EquivariantNetwork& net, const Eigen::MatrixXd& X, const std::vector<int>& y) {
    return empirical_margin_loss(net, X, y, 0.0);
}

}  // namespace equibound
