#pragma once

#include <algorithm>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "equivariant.hpp"

namespace equibound {

struct TrainConfig {
    double gamma = 10.0;
    std::size_t max_epochs = 2000;
    double learning_rate = 1e-3;
    std::size_t batch_size = 64;
    std::uint64_t seed = 0;
    double target_fraction = 0.99;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double temperature = 1.0;  // cross-entropy is taken on f / temperature
};

struct EpochRecord {
    std::size_t epoch = 0;
    double loss = 0.0;
    double margin_accuracy = 0.0;
    // filled by an optional observer (bound-during-training traces)
    std::vector<double> extra;
};

using TrainTrace = std::vector<EpochRecord>;
using EpochObserver = std::function<void(const EquivariantNetwork&, EpochRecord&)>;

struct MarginNotReached : std::runtime_error {
    MarginNotReached(const std::string& what, TrainTrace t) : std::runtime_error(what), trace(std::move(t)) {}
    TrainTrace trace;
};

class Adam {
public:
    Adam(const EquivariantNetwork& net, const TrainConfig& cfg) : cfg_(cfg) {
        for (const auto& l : net.layers()) {
            m_.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(l.parameter_count())));
            v_.push_back(m_.back());
        }
    }

    void step(EquivariantNetwork& net, const std::vector<Eigen::VectorXd>& grads) {
        ++t_;
        const double c1 = 1.0 - std::pow(cfg_.beta1, double(t_));
        const double c2 = 1.0 - std::pow(cfg_.beta2, double(t_));
        for (std::size_t l = 0; l < net.depth(); ++l) {
            m_[l] = cfg_.beta1 * m_[l] + (1.0 - cfg_.beta1) * grads[l];
            v_[l] = cfg_.beta2 * v_[l] + (1.0 - cfg_.beta2) * grads[l].cwiseAbs2();
            auto& p = net.layer(l).mutable_parameters();
            p.array() -= cfg_.learning_rate * (m_[l].array() / c1) / ((v_[l].array() / c2).sqrt() + cfg_.epsilon);
        }
    }

private:
    TrainConfig cfg_;
    std::vector<Eigen::VectorXd> m_, v_;
    std::size_t t_ = 0;
};

inline double margin_accuracy(const EquivariantNetwork& net, const Eigen::MatrixXd& X, const std::vector<int>& y,
                              double gamma) {
    Eigen::VectorXd m = margins(net, X, y);
    return double((m.array() > gamma).count()) / double(m.size());
}

/**
 * Adam on cross-entropy until at least target_fraction of the training points have margin
 * above gamma. The network is updated in place; on failure MarginNotReached carries the trace
 * and the network keeps its last state.
 */
inline TrainTrace train(EquivariantNetwork& net, const Eigen::MatrixXd& X, const std::vector<int>& y,
                        const TrainConfig& cfg, const EpochObserver& observer = {}) {
    if (X.cols() == 0) throw std::invalid_argument("empty training set");
    if (!(cfg.gamma > 0)) throw std::invalid_argument("gamma must be positive");
    if (cfg.batch_size == 0) throw std::invalid_argument("batch size must be positive");
    for (int label : y)
        if (label < 0 || static_cast<std::size_t>(label) >= net.output_dim()) throw std::invalid_argument("label out of range");

    const auto m = static_cast<std::size_t>(X.cols());
    Rng rng(cfg.seed);
    Adam opt(net, cfg);
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    TrainTrace trace;

    for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < m; start += cfg.batch_size) {
            const std::size_t len = std::min(cfg.batch_size, m - start);
            Eigen::MatrixXd Xb(X.rows(), static_cast<Eigen::Index>(len));
            std::vector<int> yb(len);
            for (std::size_t s = 0; s < len; ++s) {
                Xb.col(static_cast<Eigen::Index>(s)) = X.col(static_cast<Eigen::Index>(order[start + s]));
                yb[s] = y[order[start + s]];
            }
            auto lg = loss_and_gradient(net, Xb, yb, cfg.temperature);
            loss_sum += lg.loss * double(len);
            opt.step(net, lg.grads);
        }
        EpochRecord rec;
        rec.epoch = epoch;
        rec.loss = loss_sum / double(m);
        rec.margin_accuracy = margin_accuracy(net, X, y, cfg.gamma);
        if (observer) observer(net, rec);
        trace.push_back(rec);
        net.metadata.gamma = cfg.gamma;
        net.metadata.seed = cfg.seed;
        net.metadata.epochs = epoch;
        net.metadata.final_margin_accuracy = rec.margin_accuracy;
        if (rec.margin_accuracy >= cfg.target_fraction) {
            net.metadata.reached = true;
            return trace;
        }
    }
    net.metadata.reached = false;
    throw MarginNotReached("margin criterion not reached after " + std::to_string(cfg.max_epochs) + " epochs", trace);
}

}  // namespace equibound
