#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "repr.hpp"
#include "rng.hpp"

namespace equibound {

enum class Symmetry { so2, o2, cyclic, dihedral };

inline std::string to_string(Symmetry s) {
    switch (s) {
        case Symmetry::so2: return "so2";
        case Symmetry::o2: return "o2";
        case Symmetry::cyclic: return "cyclic";
        case Symmetry::dihedral: return "dihedral";
    }
    return "?";
}

inline Symmetry symmetry_from_string(const std::string& s) {
    if (s == "so2") return Symmetry::so2;
    if (s == "o2") return Symmetry::o2;
    if (s == "cyclic") return Symmetry::cyclic;
    if (s == "dihedral") return Symmetry::dihedral;
    throw std::invalid_argument("unknown data symmetry: " + s);
}

enum class Augment { none, group };

/**
 * @brief Synthetic symmetric dataset definition.
 *
 * Continuous data lives on D unit circles (so2) or D pairs of circles (o2); each pair is an
 * O(2)-torsor whose reflection swaps the two circles and conjugates. Discrete variants reuse
 * the pair layout with D = F = floor(M/2) pairs.
 */
struct DatasetSpec {
    Symmetry symmetry = Symmetry::so2;
    std::size_t M = 0;  // number of rotations for discrete symmetries
    std::size_t D = 1;
    std::size_t F = 1;
    std::vector<std::size_t> frequencies;
    std::vector<Eigen::VectorXd> representatives;
    std::vector<int> labels;
    double noise_sigma_tangent = 0.1;
    double noise_sigma_ambient = 0.01;
    std::uint64_t seed = 0;

    bool paired() const { return symmetry != Symmetry::so2; }
    std::size_t block_size() const { return paired() ? 4 : 2; }
    std::size_t ambient_dim() const { return D * block_size(); }
    bool discrete() const { return symmetry == Symmetry::cyclic || symmetry == Symmetry::dihedral; }
    bool has_reflections() const { return symmetry == Symmetry::o2 || symmetry == Symmetry::dihedral; }
};

struct Provenance {
    std::size_t representative = 0;
    double angle = 0.0;
    bool reflected = false;
    int original_label = 0;
};

struct Dataset {
    DatasetSpec spec;
    Eigen::MatrixXd X;  // ambient_dim x m, one sample per column
    std::vector<int> y;
    std::vector<Provenance> provenance;
    double B = 0.0;
    Augment augment = Augment::group;
    std::uint64_t sample_seed = 0;
    bool random_labels = false;
    std::uint64_t label_seed = 0;

    std::size_t size() const { return y.size(); }
};

namespace detail {

inline Eigen::Vector2d on_circle(double theta) { return {std::cos(theta), std::sin(theta)}; }

inline Eigen::Matrix2d rotation(double theta) {
    Eigen::Matrix2d R;
    R << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
    return R;
}

// one point of a pair: a unit vector on circle `side` (0 or 1)
inline Eigen::Vector4d on_pair(double theta, int side) {
    Eigen::Vector4d v = Eigen::Vector4d::Zero();
    v.segment<2>(2 * side) = on_circle(theta);
    return v;
}

}  // namespace detail

/// Group action of the data symmetry: rotate by `angle` (circle i at frequency f_i), then
/// reflect if requested (pairs only).
inline Eigen::VectorXd act(const DatasetSpec& spec, const Eigen::VectorXd& x, double angle, bool reflected) {
    if (static_cast<std::size_t>(x.size()) != spec.ambient_dim()) throw std::invalid_argument("point dimension mismatch");
    if (reflected && !spec.paired()) throw std::invalid_argument("reflection needs paired circles");
    Eigen::VectorXd out(x.size());
    Eigen::Matrix2d C;
    C << 1, 0, 0, -1;
    for (std::size_t i = 0; i < spec.D; ++i) {
        Eigen::Matrix2d R = detail::rotation(double(spec.frequencies[i]) * angle);
        if (!spec.paired()) {
            out.segment<2>(static_cast<Eigen::Index>(2 * i)) = R * x.segment<2>(static_cast<Eigen::Index>(2 * i));
            continue;
        }
        const auto o = static_cast<Eigen::Index>(4 * i);
        Eigen::Vector2d a = R * x.segment<2>(o), b = R * x.segment<2>(o + 2);
        if (reflected) {
            out.segment<2>(o) = C * b;
            out.segment<2>(o + 2) = C * a;
        } else {
            out.segment<2>(o) = a;
            out.segment<2>(o + 2) = b;
        }
    }
    return out;
}

/// Conjugation inside every circle without swapping pairs; normalizes the symmetry group but
/// is not part of it.
inline Eigen::VectorXd mirror(const Eigen::VectorXd& x) {
    Eigen::VectorXd out = x;
    for (Eigen::Index k = 1; k < x.size(); k += 2) out(k) = -x(k);
    return out;
}

inline DatasetSpec generate_synthetic(Symmetry symmetry, std::size_t D_or_M, std::size_t F, std::uint64_t seed,
                                      double noise_tangent = 0.1, double noise_ambient = 0.01) {
    using std::numbers::pi;
    if (noise_tangent < 0 || noise_ambient < 0) throw std::invalid_argument("noise must be nonnegative");
    DatasetSpec spec;
    spec.symmetry = symmetry;
    spec.seed = seed;
    spec.noise_sigma_tangent = noise_tangent;
    spec.noise_sigma_ambient = noise_ambient;
    if (spec.discrete()) {
        if (D_or_M < 2) throw std::invalid_argument("discrete symmetry needs M >= 2");
        spec.M = D_or_M;
        spec.F = D_or_M / 2;
        spec.D = spec.F;
        for (std::size_t i = 0; i < spec.D; ++i) spec.frequencies.push_back(i + 1);
    } else {
        if (D_or_M < 1) throw std::invalid_argument("need at least one circle");
        if (F < 1) throw std::invalid_argument("maximum frequency must be >= 1");
        if (D_or_M > 30) throw std::invalid_argument("too many circles for explicit representatives");
        spec.D = D_or_M;
        spec.F = F;
        for (std::size_t i = 0; i < spec.D; ++i) spec.frequencies.push_back(i % F + 1);
    }

    Rng rng(derive_seed(seed, {1}));
    std::uniform_real_distribution<double> angle(0.0, 2.0 * pi);
    std::bernoulli_distribution coin(0.5);
    // per circle (or pair): 1 candidate on the first, 2 on the others
    std::vector<std::vector<Eigen::VectorXd>> pts(spec.D);
    for (std::size_t i = 0; i < spec.D; ++i) {
        const int count = i == 0 ? 1 : 2;
        for (int c = 0; c < count; ++c) {
            double th = angle(rng);
            if (spec.paired()) {
                int side = coin(rng) ? 1 : 0;
                pts[i].push_back(detail::on_pair(th, side));
            } else {
                pts[i].push_back(detail::on_circle(th));
            }
        }
    }
    const std::size_t base = std::size_t{1} << (spec.D - 1);
    const std::size_t bs = spec.block_size();
    std::vector<Eigen::VectorXd> X;
    for (std::size_t combo = 0; combo < base; ++combo) {
        Eigen::VectorXd x(static_cast<Eigen::Index>(spec.ambient_dim()));
        for (std::size_t i = 0; i < spec.D; ++i) {
            std::size_t choice = i == 0 ? 0 : (combo >> (i - 1)) & 1U;
            x.segment(static_cast<Eigen::Index>(i * bs), static_cast<Eigen::Index>(bs)) = pts[i][choice];
        }
        X.push_back(x);
    }

    if (!spec.discrete()) {
        spec.representatives = X;
        for (std::size_t r = 0; r < base; ++r) spec.labels.push_back(coin(rng) ? 1 : 0);
        return spec;
    }

    const double shift = pi / double(spec.M);
    for (const auto& x : X) {
        spec.representatives.push_back(x);
        spec.labels.push_back(0);
    }
    for (const auto& x : X) {
        spec.representatives.push_back(act(spec, x, shift, false));
        spec.labels.push_back(1);
    }
    if (symmetry == Symmetry::dihedral) {
        for (const auto& x : X) {
            spec.representatives.push_back(mirror(x));
            spec.labels.push_back(1);
        }
        for (const auto& x : X) {
            spec.representatives.push_back(mirror(act(spec, x, shift, false)));
            spec.labels.push_back(0);
        }
    }
    return spec;
}

namespace detail {

inline void tangent_noise(Eigen::Ref<Eigen::VectorXd> seg, double sigma, Rng& rng) {
    const double r = seg.norm();
    if (r == 0.0) return;
    std::normal_distribution<double> nd(0.0, sigma);
    Eigen::Vector2d u = seg / r;
    Eigen::Vector2d t(-u(1), u(0));
    Eigen::Vector2d v = u + nd(rng) * t;
    seg = v / v.norm();
}

}  // namespace detail

inline Dataset sample(const DatasetSpec& spec, std::size_t m, Augment augment, std::uint64_t seed) {
    using std::numbers::pi;
    if (m < 1) throw std::invalid_argument("need at least one sample");
    Dataset ds;
    ds.spec = spec;
    ds.augment = augment;
    ds.sample_seed = seed;
    const auto d = static_cast<Eigen::Index>(spec.ambient_dim());
    ds.X.resize(d, static_cast<Eigen::Index>(m));
    Rng rng(derive_seed(seed, {2}));
    std::uniform_int_distribution<std::size_t> pick(0, spec.representatives.size() - 1);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * pi);
    std::bernoulli_distribution coin(0.5);
    std::normal_distribution<double> amb(0.0, spec.noise_sigma_ambient);
    for (std::size_t s = 0; s < m; ++s) {
        Provenance p;
        p.representative = pick(rng);
        p.original_label = spec.labels[p.representative];
        Eigen::VectorXd x = spec.representatives[p.representative];
        if (augment == Augment::group) {
            if (spec.discrete()) {
                std::uniform_int_distribution<std::size_t> rot(0, spec.M - 1);
                p.angle = 2.0 * pi * double(rot(rng)) / double(spec.M);
            } else {
                p.angle = angle(rng);
            }
            p.reflected = spec.has_reflections() && coin(rng);
            x = act(spec, x, p.angle, p.reflected);
        }
        if (spec.noise_sigma_tangent > 0)
            for (Eigen::Index c = 0; c < d / 2; ++c)
                detail::tangent_noise(x.segment(2 * c, 2), spec.noise_sigma_tangent, rng);
        if (spec.noise_sigma_ambient > 0)
            for (Eigen::Index k = 0; k < d; ++k) x(k) += amb(rng);
        ds.X.col(static_cast<Eigen::Index>(s)) = x;
        ds.y.push_back(p.original_label);
        ds.provenance.push_back(p);
    }
    ds.B = ds.X.colwise().norm().maxCoeff();
    return ds;
}

inline Dataset randomize_labels(const Dataset& in, std::uint64_t seed, int n_classes = 2) {
    Dataset out = in;
    Rng rng(derive_seed(seed, {3}));
    std::uniform_int_distribution<int> lab(0, n_classes - 1);
    for (auto& v : out.y) v = lab(rng);
    out.random_labels = true;
    out.label_seed = seed;
    return out;
}

/// Input representation seen by an H-equivariant model: each circle (or pair) restricted to H.
inline RepSpec input_representation(const DatasetSpec& spec, const IrrepTablePtr& T) {
    std::vector<RepSpec> parts;
    for (std::size_t f : spec.frequencies) parts.push_back(restricted_frequency_rep(T, f, spec.paired()));
    return direct_sum(parts);
}

/// Angle and reflection flag of element g of a cyclic/dihedral H acting on the data.
inline std::pair<double, bool> element_as_transform(const FiniteGroup& G, std::size_t g) {
    return {2.0 * std::numbers::pi * double(G.rotation_index(g)) / double(G.N()), G.is_reflection(g)};
}

}  // namespace equibound
