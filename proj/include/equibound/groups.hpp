#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace equibound {

enum class GroupKind { cyclic, dihedral, quaternion };

inline std::string to_string(GroupKind k) {
    switch (k) {
        case GroupKind::cyclic: return "cyclic";
        case GroupKind::dihedral: return "dihedral";
        case GroupKind::quaternion: return "quaternion";
    }
    return "?";
}

inline GroupKind group_kind_from_string(const std::string& s) {
    if (s == "cyclic") return GroupKind::cyclic;
    if (s == "dihedral") return GroupKind::dihedral;
    if (s == "quaternion") return GroupKind::quaternion;
    throw std::invalid_argument("unknown group kind: " + s);
}

struct GroupElement {
    std::size_t index = 0;
    friend bool operator==(GroupElement a, GroupElement b) { return a.index == b.index; }
    friend bool operator!=(GroupElement a, GroupElement b) { return a.index != b.index; }
};

/**
 * @brief Finite group given by its Cayley table.
 *
 * Element order:
 *  - cyclic C_N: r_k (rotation by 2 pi k / N), k = 0..N-1
 *  - dihedral D_N: r_0..r_{N-1}, then s_0..s_{N-1} with s_k = s * r_k
 *    (as matrices S R_k, S = diag(1,-1))
 *  - quaternion Q8: 1, -1, i, -i, j, -j, k, -k
 * Index 0 is always the identity.
 */
class FiniteGroup {
public:
    FiniteGroup() = default;

    GroupKind kind() const { return kind_; }
    std::size_t N() const { return N_; }
    std::size_t order() const { return order_; }

    std::size_t mul(std::size_t a, std::size_t b) const { return cayley_[a * order_ + b]; }
    std::size_t inv(std::size_t a) const { return inverses_[a]; }

    GroupElement identity() const { return {0}; }

    GroupElement compose(GroupElement a, GroupElement b) const {
        check(a);
        check(b);
        return {mul(a.index, b.index)};
    }

    GroupElement inverse(GroupElement a) const {
        check(a);
        return {inverses_[a.index]};
    }

    const std::vector<std::size_t>& cayley() const { return cayley_; }
    const std::vector<std::size_t>& inverses() const { return inverses_; }

    // rotation index and reflection flag; quaternion elements have neither
    std::size_t rotation_index(std::size_t a) const {
        return kind_ == GroupKind::dihedral ? a % N_ : a;
    }
    bool is_reflection(std::size_t a) const { return kind_ == GroupKind::dihedral && a >= N_; }

    bool is_commutative() const {
        for (std::size_t i = 0; i < order_; ++i)
            for (std::size_t j = 0; j < order_; ++j)
                if (mul(i, j) != mul(j, i)) return false;
        return true;
    }

    std::string name() const {
        switch (kind_) {
            case GroupKind::cyclic: return "C" + std::to_string(N_);
            case GroupKind::dihedral: return "D" + std::to_string(N_);
            case GroupKind::quaternion: return "Q8";
        }
        return "?";
    }

    friend bool operator==(const FiniteGroup& a, const FiniteGroup& b) {
        return a.kind_ == b.kind_ && a.N_ == b.N_;
    }

    friend FiniteGroup build_group(GroupKind kind, std::size_t N);

private:
    void check(GroupElement a) const {
        if (a.index >= order_)
            throw std::out_of_range("group element index " + std::to_string(a.index) +
                                    " out of range for " + name());
    }

    GroupKind kind_ = GroupKind::cyclic;
    std::size_t N_ = 1;
    std::size_t order_ = 1;
    std::vector<std::size_t> cayley_{0};
    std::vector<std::size_t> inverses_{0};
};

namespace detail {

using Quat = std::array<int, 4>;

inline Quat quat_mul(const Quat& p, const Quat& q) {
    return {p[0] * q[0] - p[1] * q[1] - p[2] * q[2] - p[3] * q[3],
            p[0] * q[1] + p[1] * q[0] + p[2] * q[3] - p[3] * q[2],
            p[0] * q[2] - p[1] * q[3] + p[2] * q[0] + p[3] * q[1],
            p[0] * q[3] + p[1] * q[2] - p[2] * q[1] + p[3] * q[0]};
}

// unit quaternion of Q8 element index 2u + s
inline Quat q8_element(std::size_t a) {
    Quat q{0, 0, 0, 0};
    q[a / 2] = (a % 2 == 0) ? 1 : -1;
    return q;
}

inline std::size_t q8_index(const Quat& q) {
    for (std::size_t u = 0; u < 4; ++u)
        if (q[u] != 0) return 2 * u + (q[u] > 0 ? 0 : 1);
    throw std::logic_error("zero quaternion");
}

}  // namespace detail

inline FiniteGroup build_group(GroupKind kind, std::size_t N) {
    FiniteGroup G;
    G.kind_ = kind;
    if (kind == GroupKind::quaternion) {
        G.N_ = 4;
        G.order_ = 8;
    } else {
        if (N == 0) throw std::invalid_argument("group order parameter N must be >= 1");
        G.N_ = N;
        G.order_ = kind == GroupKind::cyclic ? N : 2 * N;
    }
    const std::size_t n = G.order_;
    G.cayley_.assign(n * n, 0);
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = 0; b < n; ++b) {
            std::size_t c = 0;
            switch (kind) {
                case GroupKind::cyclic: c = (a + b) % N; break;
                case GroupKind::dihedral: {
                    // (S^p R_j)(S^q R_k) = S^{p+q} R_{(-1)^q j + k}
                    std::size_t p = a / N, j = a % N, q = b / N, k = b % N;
                    std::size_t rot = q ? (N - j + k) % N : (j + k) % N;
                    c = ((p ^ q) ? N : 0) + rot;
                    break;
                }
                case GroupKind::quaternion:
                    c = detail::q8_index(detail::quat_mul(detail::q8_element(a), detail::q8_element(b)));
                    break;
            }
            G.cayley_[a * n + b] = c;
        }
    }
    G.inverses_.assign(n, 0);
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b)
            if (G.cayley_[a * n + b] == 0) G.inverses_[a] = b;
    return G;
}

inline FiniteGroup cyclic_group(std::size_t N) { return build_group(GroupKind::cyclic, N); }
inline FiniteGroup dihedral_group(std::size_t N) { return build_group(GroupKind::dihedral, N); }
inline FiniteGroup quaternion_group() { return build_group(GroupKind::quaternion, 0); }

}  // namespace equibound
