#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "groups.hpp"
#include "rng.hpp"

namespace equibound {

struct Irrep {
    std::string id;
    std::size_t dim = 1;
    int type_c = 1;  // 1 real, 2 complex, 4 quaternionic
    std::vector<Eigen::MatrixXd> matrices;

    const Eigen::MatrixXd& operator()(std::size_t g) const { return matrices[g]; }
    // number of copies of this irrep inside the regular representation
    std::size_t retained() const { return dim / static_cast<std::size_t>(type_c); }
};

namespace detail {

inline Eigen::Matrix2d rot2(double theta) {
    Eigen::Matrix2d R;
    R << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
    return R;
}

inline Irrep scalar_irrep(const FiniteGroup& G, std::string id, const std::vector<double>& values) {
    Irrep psi{std::move(id), 1, 1, {}};
    for (std::size_t g = 0; g < G.order(); ++g) psi.matrices.push_back(Eigen::MatrixXd::Constant(1, 1, values[g]));
    return psi;
}

// left multiplication by the unit quaternion q on R^4 = span(1, i, j, k)
inline Eigen::MatrixXd quat_left(const Quat& q) {
    Eigen::MatrixXd L(4, 4);
    L << q[0], -q[1], -q[2], -q[3],
         q[1],  q[0], -q[3],  q[2],
         q[2],  q[3],  q[0], -q[1],
         q[3], -q[2],  q[1],  q[0];
    return L;
}

}  // namespace detail

/// Complete list of real irreps. Order: trivial first, then the remaining 1D irreps
/// (cyclic: freq:k precede sign), then higher-dimensional ones.
inline std::vector<Irrep> irreps_of(const FiniteGroup& G) {
    using std::numbers::pi;
    const std::size_t n = G.order();
    const std::size_t N = G.N();
    std::vector<Irrep> out;
    out.push_back(detail::scalar_irrep(G, "triv", std::vector<double>(n, 1.0)));

    if (G.kind() == GroupKind::cyclic) {
        for (std::size_t k = 1; 2 * k < N; ++k) {
            Irrep psi{"freq:" + std::to_string(k), 2, 2, {}};
            for (std::size_t g = 0; g < n; ++g)
                psi.matrices.push_back(detail::rot2(2.0 * pi * double(k * g % N) / double(N)));
            out.push_back(std::move(psi));
        }
        if (N % 2 == 0 && N >= 2) {
            std::vector<double> v(n);
            for (std::size_t g = 0; g < n; ++g) v[g] = (g % 2 == 0) ? 1.0 : -1.0;
            out.push_back(detail::scalar_irrep(G, "sign", v));
        }
    } else if (G.kind() == GroupKind::dihedral) {
        std::vector<double> sgn(n), alt(n), alt_sgn(n);
        for (std::size_t g = 0; g < n; ++g) {
            double r = G.is_reflection(g) ? -1.0 : 1.0;
            double a = (G.rotation_index(g) % 2 == 0) ? 1.0 : -1.0;
            sgn[g] = r;
            alt[g] = a;
            alt_sgn[g] = a * r;
        }
        out.push_back(detail::scalar_irrep(G, "sign", sgn));
        if (N % 2 == 0) {
            out.push_back(detail::scalar_irrep(G, "alt", alt));
            out.push_back(detail::scalar_irrep(G, "alt_sign", alt_sgn));
        }
        Eigen::Matrix2d S;
        S << 1, 0, 0, -1;
        for (std::size_t k = 1; 2 * k < N; ++k) {
            Irrep psi{"freq:" + std::to_string(k), 2, 1, {}};
            for (std::size_t g = 0; g < n; ++g) {
                Eigen::Matrix2d M = detail::rot2(2.0 * pi * double(k * G.rotation_index(g) % N) / double(N));
                if (G.is_reflection(g)) M = S * M;
                psi.matrices.push_back(M);
            }
            out.push_back(std::move(psi));
        }
    } else {
        // sign_u is +1 on +-1 and +-u, -1 on the other two axes
        const char* names[3] = {"sign_i", "sign_j", "sign_k"};
        for (std::size_t u = 1; u <= 3; ++u) {
            std::vector<double> v(n);
            for (std::size_t g = 0; g < n; ++g) {
                std::size_t axis = g / 2;
                v[g] = (axis == 0 || axis == u) ? 1.0 : -1.0;
            }
            out.push_back(detail::scalar_irrep(G, names[u - 1], v));
        }
        Irrep psi{"quat", 4, 4, {}};
        for (std::size_t g = 0; g < n; ++g) psi.matrices.push_back(detail::quat_left(detail::q8_element(g)));
        out.push_back(std::move(psi));
    }
    return out;
}

/// Orthonormal basis of the commutant of psi, always starting with the identity.
inline std::vector<Eigen::MatrixXd> intertwiner_basis(const Irrep& psi) {
    const auto dim = static_cast<Eigen::Index>(psi.dim);
    std::vector<Eigen::MatrixXd> B;
    B.push_back(Eigen::MatrixXd::Identity(dim, dim));
    if (psi.type_c == 2) {
        const Eigen::Index d = dim / 2;
        Eigen::MatrixXd J = Eigen::MatrixXd::Zero(dim, dim);
        J.topRightCorner(d, d) = -Eigen::MatrixXd::Identity(d, d);
        J.bottomLeftCorner(d, d) = Eigen::MatrixXd::Identity(d, d);
        B.push_back(J);
    } else if (psi.type_c == 4) {
        const Eigen::Index d = dim / 4;
        const int pattern[3][4][4] = {
            {{0, 0, -1, 0}, {0, 0, 0, -1}, {1, 0, 0, 0}, {0, 1, 0, 0}},
            {{0, -1, 0, 0}, {1, 0, 0, 0}, {0, 0, 0, 1}, {0, 0, -1, 0}},
            {{0, 0, 0, -1}, {0, 0, 1, 0}, {0, -1, 0, 0}, {1, 0, 0, 0}},
        };
        for (const auto& p : pattern) {
            Eigen::MatrixXd M = Eigen::MatrixXd::Zero(dim, dim);
            for (int r = 0; r < 4; ++r)
                for (int c = 0; c < 4; ++c)
                    if (p[r][c] != 0)
                        M.block(r * d, c * d, d, d) = double(p[r][c]) * Eigen::MatrixXd::Identity(d, d);
            B.push_back(M);
        }
    }
    return B;
}

struct IrrepTable {
    FiniteGroup group;
    std::vector<Irrep> irreps;
    std::vector<std::vector<Eigen::MatrixXd>> bases;

    std::size_t size() const { return irreps.size(); }

    std::size_t index_of(const std::string& id) const {
        for (std::size_t i = 0; i < irreps.size(); ++i)
            if (irreps[i].id == id) return i;
        throw std::invalid_argument("no irrep '" + id + "' in " + group.name());
    }
};

using IrrepTablePtr = std::shared_ptr<const IrrepTable>;

inline IrrepTablePtr make_irrep_table(const FiniteGroup& G) {
    auto t = std::make_shared<IrrepTable>();
    t->group = G;
    t->irreps = irreps_of(G);
    for (const auto& psi : t->irreps) t->bases.push_back(intertwiner_basis(psi));
    return t;
}

/**
 * @brief Orthogonal matrix stored as a block-diagonal factor followed by a column permutation.
 *
 * Q(:, col_of[k]) = D(:, k), where D = blockdiag(factors[blocks[b].factor]) with the
 * b-th block occupying rows/columns starting at blocks[b].offset.
 */
class OrthogonalBasis {
public:
    struct Block {
        Eigen::Index offset;
        std::size_t factor;
    };

    OrthogonalBasis() = default;

    static OrthogonalBasis dense(Eigen::MatrixXd Q) {
        OrthogonalBasis b;
        b.n_ = Q.rows();
        b.factors_.push_back(std::move(Q));
        b.blocks_.push_back({0, 0});
        b.col_of_.resize(static_cast<std::size_t>(b.n_));
        for (Eigen::Index k = 0; k < b.n_; ++k) b.col_of_[static_cast<std::size_t>(k)] = k;
        return b;
    }

    static OrthogonalBasis identity(Eigen::Index n) {
        OrthogonalBasis b;
        b.n_ = n;
        b.factors_.push_back(Eigen::MatrixXd::Identity(1, 1));
        for (Eigen::Index k = 0; k < n; ++k) {
            b.blocks_.push_back({k, 0});
            b.col_of_.push_back(k);
        }
        return b;
    }

    static OrthogonalBasis structured(Eigen::Index n, std::vector<Eigen::MatrixXd> factors, std::vector<Block> blocks,
                                      std::vector<Eigen::Index> col_of) {
        OrthogonalBasis b;
        b.n_ = n;
        b.factors_ = std::move(factors);
        b.blocks_ = std::move(blocks);
        b.col_of_ = std::move(col_of);
        Eigen::Index covered = 0;
        for (const auto& blk : b.blocks_) {
            if (blk.offset != covered) throw std::invalid_argument("basis blocks must tile the diagonal");
            covered += b.factors_.at(blk.factor).rows();
        }
        if (covered != n || static_cast<Eigen::Index>(b.col_of_.size()) != n)
            throw std::invalid_argument("basis size mismatch");
        return b;
    }

    Eigen::Index size() const { return n_; }
    const std::vector<Eigen::MatrixXd>& factors() const { return factors_; }
    const std::vector<Block>& blocks() const { return blocks_; }
    const std::vector<Eigen::Index>& col_of() const { return col_of_; }

    bool is_identity() const {
        for (Eigen::Index k = 0; k < n_; ++k)
            if (col_of_[static_cast<std::size_t>(k)] != k) return false;
        for (const auto& f : factors_)
            if (!f.isIdentity(0.0)) return false;
        return true;
    }

    Eigen::MatrixXd matrix() const {
        Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(n_, n_);
        for (const auto& blk : blocks_) {
            const auto& F = factors_[blk.factor];
            for (Eigen::Index c = 0; c < F.cols(); ++c)
                Q.col(col_of_[static_cast<std::size_t>(blk.offset + c)]).segment(blk.offset, F.rows()) = F.col(c);
        }
        return Q;
    }

    // Q * M
    Eigen::MatrixXd apply(const Eigen::MatrixXd& M) const {
        Eigen::MatrixXd G(n_, M.cols());
        for (Eigen::Index k = 0; k < n_; ++k) G.row(k) = M.row(col_of_[static_cast<std::size_t>(k)]);
        return block_left(G, false);
    }

    // Q^T * M
    Eigen::MatrixXd apply_transpose(const Eigen::MatrixXd& M) const {
        Eigen::MatrixXd G = block_left(M, true);
        Eigen::MatrixXd out(n_, M.cols());
        for (Eigen::Index k = 0; k < n_; ++k) out.row(col_of_[static_cast<std::size_t>(k)]) = G.row(k);
        return out;
    }

    // M * Q^T
    Eigen::MatrixXd right_apply_transpose(const Eigen::MatrixXd& M) const {
        Eigen::MatrixXd G(M.rows(), n_);
        for (Eigen::Index k = 0; k < n_; ++k) G.col(k) = M.col(col_of_[static_cast<std::size_t>(k)]);
        return block_right(G, true);
    }

    // M * Q
    Eigen::MatrixXd right_apply(const Eigen::MatrixXd& M) const {
        Eigen::MatrixXd G = block_right(M, false);
        Eigen::MatrixXd out(M.rows(), n_);
        for (Eigen::Index k = 0; k < n_; ++k) out.col(col_of_[static_cast<std::size_t>(k)]) = G.col(k);
        return out;
    }

private:
    Eigen::MatrixXd block_left(const Eigen::MatrixXd& M, bool transpose) const {
        Eigen::MatrixXd out(n_, M.cols());
        for (const auto& blk : blocks_) {
            const auto& F = factors_[blk.factor];
            const Eigen::Index s = F.rows();
            if (s == 1) {
                out.row(blk.offset) = F(0, 0) * M.row(blk.offset);
            } else if (transpose) {
                out.middleRows(blk.offset, s).noalias() = F.transpose() * M.middleRows(blk.offset, s);
            } else {
                out.middleRows(blk.offset, s).noalias() = F * M.middleRows(blk.offset, s);
            }
        }
        return out;
    }

    Eigen::MatrixXd block_right(const Eigen::MatrixXd& M, bool transpose) const {
        Eigen::MatrixXd out(M.rows(), n_);
        for (const auto& blk : blocks_) {
            const auto& F = factors_[blk.factor];
            const Eigen::Index s = F.rows();
            if (s == 1) {
                out.col(blk.offset) = F(0, 0) * M.col(blk.offset);
            } else if (transpose) {
                out.middleCols(blk.offset, s).noalias() = M.middleCols(blk.offset, s) * F.transpose();
            } else {
                out.middleCols(blk.offset, s).noalias() = M.middleCols(blk.offset, s) * F;
            }
        }
        return out;
    }

    Eigen::Index n_ = 0;
    std::vector<Eigen::MatrixXd> factors_;
    std::vector<Block> blocks_;
    std::vector<Eigen::Index> col_of_;
};

struct RepBlock {
    std::size_t irrep;  // index into the irrep table
    std::size_t multiplicity;
};

/**
 * @brief A representation of H in decomposed form: rho(g) = Q (sum_psi sum_i psi(g)) Q^T.
 *
 * Basis coordinates are irrep-major: the block of irrep psi holds its copies one after
 * another, each copy occupying dim_psi consecutive coordinates.
 */
class RepSpec {
public:
    RepSpec() = default;

    RepSpec(IrrepTablePtr table, std::vector<RepBlock> blocks, OrthogonalBasis basis)
        : table_(std::move(table)), blocks_(std::move(blocks)), basis_(std::move(basis)) {
        mult_.assign(table_->size(), 0);
        offset_.assign(table_->size(), 0);
        std::size_t pos = 0;
        std::size_t last = 0;
        bool first = true;
        for (const auto& b : blocks_) {
            if (b.irrep >= table_->size()) throw std::invalid_argument("irrep index out of range");
            if (!first && b.irrep <= last) throw std::invalid_argument("rep blocks must follow irrep order");
            first = false;
            last = b.irrep;
            mult_[b.irrep] = b.multiplicity;
            offset_[b.irrep] = pos;
            pos += b.multiplicity * table_->irreps[b.irrep].dim;
        }
        dim_ = pos;
        if (static_cast<Eigen::Index>(dim_) != basis_.size())
            throw std::invalid_argument("basis dimension " + std::to_string(basis_.size()) +
                                        " does not match rep dimension " + std::to_string(dim_));
    }

    const IrrepTable& table() const { return *table_; }
    const IrrepTablePtr& table_ptr() const { return table_; }
    const FiniteGroup& group() const { return table_->group; }
    const std::vector<RepBlock>& blocks() const { return blocks_; }
    std::size_t dim() const { return dim_; }
    std::size_t multiplicity(std::size_t irrep) const { return mult_[irrep]; }
    std::size_t offset(std::size_t irrep) const { return offset_[irrep]; }
    const OrthogonalBasis& basis() const { return basis_; }
    Eigen::MatrixXd Q() const { return basis_.matrix(); }

    std::size_t total_multiplicity() const {
        std::size_t s = 0;
        for (const auto& b : blocks_) s += b.multiplicity;
        return s;
    }

    Eigen::MatrixXd block_action(std::size_t g) const {
        const auto n = static_cast<Eigen::Index>(dim_);
        Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
        for (const auto& b : blocks_) {
            const auto& psi = table_->irreps[b.irrep];
            const auto d = static_cast<Eigen::Index>(psi.dim);
            for (std::size_t i = 0; i < b.multiplicity; ++i) {
                auto o = static_cast<Eigen::Index>(offset_[b.irrep] + i * psi.dim);
                A.block(o, o, d, d) = psi(g);
            }
        }
        return A;
    }

    // represented action rho(g) in the original coordinates
    Eigen::MatrixXd action(std::size_t g) const {
        return basis_.right_apply_transpose(basis_.apply(block_action(g)));
    }

private:
    IrrepTablePtr table_;
    std::vector<RepBlock> blocks_;
    OrthogonalBasis basis_;
    std::vector<std::size_t> mult_;
    std::vector<std::size_t> offset_;
    std::size_t dim_ = 0;
};

/// Orthonormal real Fourier basis of R^{|H|}: column (psi, j, a) = sqrt(dim/|H|) * psi(.)_{a,j}.
inline Eigen::MatrixXd regular_fourier_basis(const IrrepTable& T) {
    const std::size_t n = T.group.order();
    const auto nn = static_cast<Eigen::Index>(n);
    Eigen::MatrixXd Q(nn, nn);
    Eigen::Index col = 0;
    for (const auto& psi : T.irreps) {
        const double scale = std::sqrt(double(psi.dim) / double(n));
        for (std::size_t j = 0; j < psi.retained(); ++j)
            for (std::size_t a = 0; a < psi.dim; ++a, ++col)
                for (std::size_t g = 0; g < n; ++g)
                    Q(static_cast<Eigen::Index>(g), col) =
                        scale * psi(g)(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(j));
    }
    return Q;
}

inline RepSpec regular_representation(const IrrepTablePtr& T) {
    std::vector<RepBlock> blocks;
    for (std::size_t p = 0; p < T->size(); ++p) blocks.push_back({p, T->irreps[p].retained()});
    return RepSpec(T, std::move(blocks), OrthogonalBasis::dense(regular_fourier_basis(*T)));
}

/// Permutation matrix of the left regular action: entry k moves to entry i with g_i = g g_k.
inline Eigen::MatrixXd regular_action(const FiniteGroup& G, std::size_t g) {
    const auto n = static_cast<Eigen::Index>(G.order());
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t k = 0; k < G.order(); ++k) P(static_cast<Eigen::Index>(G.mul(g, k)), static_cast<Eigen::Index>(k)) = 1.0;
    return P;
}

/// Direct sum of representations of the same group, re-sorted into irrep-major order.
inline RepSpec direct_sum(const std::vector<RepSpec>& parts) {
    if (parts.empty()) throw std::invalid_argument("direct_sum of nothing");
    const auto& T = parts.front().table_ptr();
    const std::size_t P = T->size();
    for (const auto& r : parts)
        if (!(r.group() == T->group)) throw std::invalid_argument("direct_sum across different groups");

    std::vector<std::size_t> total(P, 0);
    for (const auto& r : parts)
        for (std::size_t p = 0; p < P; ++p) total[p] += r.multiplicity(p);
    std::vector<RepBlock> blocks;
    std::vector<std::size_t> start(P, 0);
    std::size_t pos = 0;
    for (std::size_t p = 0; p < P; ++p) {
        start[p] = pos;
        if (total[p] > 0) blocks.push_back({p, total[p]});
        pos += total[p] * T->irreps[p].dim;
    }

    std::vector<Eigen::MatrixXd> factors;
    std::vector<OrthogonalBasis::Block> dblocks;
    std::vector<Eigen::Index> col_of;
    std::vector<std::size_t> copies_used(P, 0);
    Eigen::Index row_offset = 0;
    for (const auto& r : parts) {
        const auto& B = r.basis();
        const std::size_t fbase = factors.size();
        for (const auto& f : B.factors()) factors.push_back(f);
        for (const auto& blk : B.blocks()) dblocks.push_back({blk.offset + row_offset, fbase + blk.factor});
        // local basis coordinate -> global basis coordinate
        std::vector<Eigen::Index> remap(r.dim());
        for (const auto& b : r.blocks()) {
            const std::size_t d = T->irreps[b.irrep].dim;
            for (std::size_t j = 0; j < b.multiplicity; ++j)
                for (std::size_t a = 0; a < d; ++a)
                    remap[r.offset(b.irrep) + j * d + a] =
                        static_cast<Eigen::Index>(start[b.irrep] + (copies_used[b.irrep] + j) * d + a);
        }
        for (const auto& b : r.blocks()) copies_used[b.irrep] += b.multiplicity;
        for (Eigen::Index k = 0; k < B.size(); ++k) col_of.push_back(remap[static_cast<std::size_t>(B.col_of()[static_cast<std::size_t>(k)])]);
        row_offset += B.size();
    }
    return RepSpec(T, std::move(blocks),
                   OrthogonalBasis::structured(static_cast<Eigen::Index>(pos), std::move(factors), std::move(dblocks),
                                               std::move(col_of)));
}

inline RepSpec copies(const RepSpec& rep, std::size_t c) {
    if (c == 0) throw std::invalid_argument("need at least one copy");
    return direct_sum(std::vector<RepSpec>(c, rep));
}

/// n_classes copies of the trivial irrep with identity basis.
inline RepSpec trivial_rep(const IrrepTablePtr& T, std::size_t n) {
    return RepSpec(T, {{0, n}}, OrthogonalBasis::identity(static_cast<Eigen::Index>(n)));
}

// ---------------------------------------------------------------------------
// Fourier analysis on H

using FourierCoefficients = std::vector<Eigen::MatrixXd>;

inline FourierCoefficients fourier_transform_full(const IrrepTable& T, const Eigen::VectorXd& x) {
    if (static_cast<std::size_t>(x.size()) != T.group.order()) throw std::invalid_argument("signal length must equal |H|");
    FourierCoefficients out;
    for (const auto& psi : T.irreps) {
        auto d = static_cast<Eigen::Index>(psi.dim);
        Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(d, d);
        for (std::size_t g = 0; g < T.group.order(); ++g) acc += x(static_cast<Eigen::Index>(g)) * psi(g);
        out.push_back(acc);
    }
    return out;
}

/// x_hat(psi) = sum_g x(g) psi(g), first dim/c columns kept
inline FourierCoefficients fourier_transform(const IrrepTable& T, const Eigen::VectorXd& x) {
    FourierCoefficients full = fourier_transform_full(T, x);
    for (std::size_t p = 0; p < full.size(); ++p)
        full[p] = full[p].leftCols(static_cast<Eigen::Index>(T.irreps[p].retained())).eval();
    return full;
}

/// Coefficient vector in the orthonormal Fourier basis (ordering of regular_fourier_basis).
inline Eigen::VectorXd fourier_to_basis(const IrrepTable& T, const FourierCoefficients& c) {
    if (c.size() != T.size()) throw std::invalid_argument("one coefficient matrix per irrep expected");
    const double n = double(T.group.order());
    Eigen::VectorXd v(static_cast<Eigen::Index>(T.group.order()));
    Eigen::Index pos = 0;
    for (std::size_t p = 0; p < T.size(); ++p) {
        const auto& psi = T.irreps[p];
        if (c[p].rows() != static_cast<Eigen::Index>(psi.dim) || c[p].cols() != static_cast<Eigen::Index>(psi.retained()))
            throw std::invalid_argument("coefficient shape mismatch for irrep " + psi.id);
        const double scale = std::sqrt(double(psi.dim) / n);
        for (Eigen::Index j = 0; j < c[p].cols(); ++j)
            for (Eigen::Index a = 0; a < c[p].rows(); ++a) v(pos++) = scale * c[p](a, j);
    }
    return v;
}

inline Eigen::VectorXd inverse_fourier(const IrrepTable& T, const FourierCoefficients& c) {
    return regular_fourier_basis(T) * fourier_to_basis(T, c);
}

/// W[i][j] = w(g_i^{-1} g_j)
inline Eigen::MatrixXd group_circulant(const FiniteGroup& G, const Eigen::VectorXd& w) {
    const std::size_t n = G.order();
    if (static_cast<std::size_t>(w.size()) != n) throw std::invalid_argument("filter length must equal |H|");
    Eigen::MatrixXd W(w.size(), w.size());
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            W(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                w(static_cast<Eigen::Index>(G.mul(G.inv(i), j)));
    return W;
}

// ---------------------------------------------------------------------------
// Numerical decomposition

struct DecompositionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

// Rotate an isometric intertwiner V by a commutant element so that its first noticeably
// nonzero row starts with a positive entry and is otherwise aligned with e_0.
inline void canonicalize_copy(Eigen::MatrixXd& V, const std::vector<Eigen::MatrixXd>& B) {
    for (Eigen::Index p = 0; p < V.rows(); ++p) {
        Eigen::VectorXd u(static_cast<Eigen::Index>(B.size()));
        for (std::size_t k = 0; k < B.size(); ++k) u(static_cast<Eigen::Index>(k)) = V.row(p).dot(B[k].col(0));
        double nu = u.norm();
        if (nu > 1e-6) {
            Eigen::MatrixXd A = Eigen::MatrixXd::Zero(V.cols(), V.cols());
            for (std::size_t k = 0; k < B.size(); ++k) A += (u(static_cast<Eigen::Index>(k)) / nu) * B[k];
            V = (V * A).eval();
            return;
        }
    }
}

}  // namespace detail

/**
 * Decompose an orthogonal representation given by its per-element matrices.
 * Multiplicities come from characters; each copy is extracted by twirling a random seed
 * matrix and projecting off the copies already found.
 */
inline RepSpec decompose_representation(const IrrepTablePtr& T, const std::vector<Eigen::MatrixXd>& rho,
                                        std::uint64_t seed = 0, int max_seeds_per_copy = 32) {
    const FiniteGroup& G = T->group;
    const std::size_t n = G.order();
    if (rho.size() != n) throw DecompositionError("need one matrix per group element");
    const Eigen::Index dim = rho[0].rows();
    double scale = 1.0;
    for (const auto& R : rho) {
        if (R.rows() != dim || R.cols() != dim) throw DecompositionError("representation matrices must be square and equal size");
        if (!R.allFinite()) throw DecompositionError("non-finite representation matrix");
        scale = std::max(scale, R.cwiseAbs().maxCoeff());
    }
    const double tol = 1e-9 * scale * double(dim);
    if ((rho[0] - Eigen::MatrixXd::Identity(dim, dim)).cwiseAbs().maxCoeff() > tol)
        throw DecompositionError("identity element not mapped to I");
    for (std::size_t a = 0; a < n; ++a) {
        if ((rho[a].transpose() * rho[a] - Eigen::MatrixXd::Identity(dim, dim)).cwiseAbs().maxCoeff() > tol)
            throw DecompositionError("representation matrices must be orthogonal");
        for (std::size_t b = 0; b < n; ++b)
            if ((rho[a] * rho[b] - rho[G.mul(a, b)]).cwiseAbs().maxCoeff() > tol)
                throw DecompositionError("input is not a representation (homomorphism fails at " + std::to_string(a) +
                                         "," + std::to_string(b) + ")");
    }

    std::vector<RepBlock> blocks;
    std::size_t total = 0;
    for (std::size_t p = 0; p < T->size(); ++p) {
        const auto& psi = T->irreps[p];
        double s = 0;
        for (std::size_t g = 0; g < n; ++g) s += rho[g].trace() * psi(g).trace();
        double m = s / (double(n) * psi.type_c);
        double r = std::round(m);
        if (std::abs(m - r) > 1e-6 || r < 0) throw DecompositionError("non-integral multiplicity for " + psi.id);
        if (r > 0) blocks.push_back({p, static_cast<std::size_t>(r)});
        total += static_cast<std::size_t>(r) * psi.dim;
    }
    if (static_cast<Eigen::Index>(total) != dim) throw DecompositionError("multiplicities do not account for the dimension");

    Rng rng(seed);
    Eigen::MatrixXd Q(dim, dim);
    Eigen::Index col = 0;
    for (const auto& b : blocks) {
        const auto& psi = T->irreps[b.irrep];
        const auto d = static_cast<Eigen::Index>(psi.dim);
        std::vector<Eigen::MatrixXd> found;
        int attempts = 0;
        while (found.size() < b.multiplicity) {
            if (attempts++ > max_seeds_per_copy * static_cast<int>(b.multiplicity))
                throw DecompositionError("twirl failed to reach full rank for " + psi.id);
            Eigen::MatrixXd R = gaussian_matrix(rng, d, dim);
            Eigen::MatrixXd Tw = Eigen::MatrixXd::Zero(d, dim);
            for (std::size_t g = 0; g < n; ++g) Tw += psi(g) * R * rho[G.inv(g)];
            Eigen::MatrixXd V = Tw.transpose() / double(n);
            for (int pass = 0; pass < 2; ++pass)
                for (const auto& F : found) V -= F * (F.transpose() * V);
            double s = V.squaredNorm() / double(d);
            if (s < 1e-8) continue;
            V /= std::sqrt(s);
            detail::canonicalize_copy(V, T->bases[b.irrep]);
            found.push_back(V);
        }
        for (const auto& F : found) {
            Q.middleCols(col, d) = F;
            col += d;
        }
    }
    return RepSpec(T, std::move(blocks), OrthogonalBasis::dense(Q));
}

/// Explicit matrices of the frequency-f action of a cyclic or dihedral group on one circle
/// (R^2) or on a pair of circles (R^4, reflection swaps the pair and conjugates).
inline std::vector<Eigen::MatrixXd> frequency_action_matrices(const FiniteGroup& G, std::size_t f, bool reflected) {
    using std::numbers::pi;
    if (G.kind() == GroupKind::quaternion) throw std::invalid_argument("frequency representations need a cyclic or dihedral group");
    const std::size_t N = G.N();
    Eigen::Matrix2d C;
    C << 1, 0, 0, -1;
    std::vector<Eigen::MatrixXd> out;
    for (std::size_t g = 0; g < G.order(); ++g) {
        Eigen::Matrix2d R = detail::rot2(2.0 * pi * double((f % N) * G.rotation_index(g) % N) / double(N));
        if (!reflected) {
            Eigen::MatrixXd M = R;
            if (G.is_reflection(g)) M = C * R;
            out.push_back(M);
        } else {
            Eigen::MatrixXd M = Eigen::MatrixXd::Zero(4, 4);
            if (G.is_reflection(g)) {
                M.block(0, 2, 2, 2) = C * R;
                M.block(2, 0, 2, 2) = C * R;
            } else {
                M.block(0, 0, 2, 2) = R;
                M.block(2, 2, 2, 2) = R;
            }
            out.push_back(M);
        }
    }
    return out;
}

inline RepSpec restricted_frequency_rep(const IrrepTablePtr& T, std::size_t f, bool reflected, std::uint64_t seed = 0) {
    return decompose_representation(T, frequency_action_matrices(T->group, f, reflected), seed);
}

}  // namespace equibound
