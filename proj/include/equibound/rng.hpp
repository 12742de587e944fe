#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

#include <Eigen/Dense>

namespace equibound {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Derive a child seed from a base seed and a list of stream labels.
inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> labels) {
    std::uint64_t s = splitmix64(base);
    for (auto l : labels) s = splitmix64(s ^ splitmix64(l + 0x632be59bd9b4e019ULL));
    return s;
}

inline Eigen::MatrixXd gaussian_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double sigma = 1.0) {
    std::normal_distribution<double> nd(0.0, sigma);
    Eigen::MatrixXd M(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) M(i, j) = nd(rng);
    return M;
}

inline Eigen::VectorXd gaussian_vector(Rng& rng, Eigen::Index n, double sigma = 1.0) {
    return gaussian_matrix(rng, n, 1, sigma);
}

}  // namespace equibound
