#include <gtest/gtest.h>

#include <numbers>

#include "equibound/equivariant.hpp"
#include "equibound/verify.hpp"

using namespace equibound;

namespace {

RepSpec input_for(const IrrepTablePtr& T) {
    if (T->group.kind() == GroupKind::quaternion) {
        // quat irrep plus one sign irrep: a 5-dim faithful input
        return direct_sum({decompose_representation(T, T->irreps[T->index_of("quat")].matrices),
                           decompose_representation(T, T->irreps[T->index_of("sign_j")].matrices)});
    }
    const bool refl = T->group.kind() == GroupKind::dihedral;
    return direct_sum({restricted_frequency_rep(T, 1, refl), restricted_frequency_rep(T, 2, refl), restricted_frequency_rep(T, 3, refl)});
}

double relative_gradient_error(EquivariantNetwork net, const Eigen::MatrixXd& X, const std::vector<int>& y) {
    auto lg = loss_and_gradient(net, X, y);
    const double h = 1e-5;
    double worst = 0;
    for (std::size_t l = 0; l < net.depth(); ++l) {
        Eigen::VectorXd p = net.layer(l).parameters();
        for (Eigen::Index k = 0; k < p.size(); ++k) {
            Eigen::VectorXd q = p;
            q(k) = p(k) + h;
            net.layer(l).set_parameters(q);
            const double up = loss_and_gradient(net, X, y).loss;
            q(k) = p(k) - h;
            net.layer(l).set_parameters(q);
            const double down = loss_and_gradient(net, X, y).loss;
            net.layer(l).set_parameters(p);
            const double fd = (up - down) / (2 * h);
            const double an = lg.grads[l](k);
            worst = std::max(worst, std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-6}));
        }
    }
    return worst;
}

}  // namespace

TEST(Layer, ZeroAndScalarExamples) {
    auto T = make_irrep_table(cyclic_group(4));
    EquivariantLayer L(regular_representation(T), regular_representation(T));
    EXPECT_EQ(L.matrix().norm(), 0.0);
    EquivariantLayer s(trivial_rep(T, 1), trivial_rep(T, 1));
    ASSERT_EQ(s.parameter_count(), 1u);
    s.set_coefficient(0, 0, 0, 0, 3.0);
    EXPECT_EQ(s.matrix()(0, 0), 3.0);
    EXPECT_EQ(s.fourier_matrix()(0, 0), 3.0);
    EXPECT_THROW(s.coefficient(1, 0, 0, 0), std::out_of_range);
}

TEST(Layer, ParameterCountFormula) {
    auto T = make_irrep_table(cyclic_group(4));
    RepSpec in = restricted_frequency_rep(T, 1, false);
    auto net = build_network(in, {8, 4}, 2, 0);
    ASSERT_EQ(net.depth(), 3u);
    EXPECT_EQ(net.layer(0).in_rep().dim(), 2u);
    EXPECT_EQ(net.layer(0).out_rep().dim(), 32u);
    EXPECT_EQ(net.layer(1).out_rep().dim(), 16u);
    EXPECT_EQ(net.output_dim(), 2u);
    for (const auto& layer : net.layers()) {
        std::size_t expect = 0;
        for (std::size_t p = 0; p < T->size(); ++p)
            expect += layer.in_rep().multiplicity(p) * layer.out_rep().multiplicity(p) * static_cast<std::size_t>(T->irreps[p].type_c);
        EXPECT_EQ(layer.parameter_count(), expect);
    }
    // 2->32: only freq:1 shared, m_in = 1, m_out = 8, c = 2
    EXPECT_EQ(net.layer(0).parameter_count(), 16u);
    // 32->16: 8*4 per irrep, c = 1, 2, 1
    EXPECT_EQ(net.layer(1).parameter_count(), 32u * 4u);
    EXPECT_EQ(net.layer(2).parameter_count(), 8u);
}

TEST(Layer, TrivialGroupIsUnconstrained) {
    auto T = make_irrep_table(cyclic_group(1));
    RepSpec in = trivial_rep(T, 5);
    auto net = build_network(in, {7}, 3, 1);
    EXPECT_EQ(net.layer(0).parameter_count(), 35u);
    EXPECT_EQ(net.layer(1).parameter_count(), 21u);
    Rng rng(4);
    Eigen::MatrixXd W = gaussian_matrix(rng, 7, 5);
    net.layer(0).assign_projection(W);
    EXPECT_LT((net.layer(0).matrix() - W).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Layer, CyclicCirculantClosedForm) {
    using std::numbers::pi;
    Rng rng(9);
    for (std::size_t N : {2, 3, 4, 5, 8}) {
        auto T = make_irrep_table(cyclic_group(N));
        RepSpec reg = regular_representation(T);
        Eigen::VectorXd w = gaussian_vector(rng, static_cast<Eigen::Index>(N));
        EquivariantLayer L(reg, reg);
        for (std::size_t p = 0; p < T->size(); ++p) {
            const auto& psi = T->irreps[p];
            if (psi.dim == 1) {
                double s = 0;
                for (std::size_t h = 0; h < N; ++h) s += w(static_cast<Eigen::Index>(h)) * psi(h)(0, 0);
                L.set_coefficient(p, 0, 0, 0, s);
            } else {
                const double theta = 2 * pi * std::stod(psi.id.substr(5)) / double(N);
                double a = 0, b = 0;
                for (std::size_t h = 0; h < N; ++h) {
                    a += w(static_cast<Eigen::Index>(h)) * std::cos(theta * double(h));
                    b += w(static_cast<Eigen::Index>(h)) * std::sin(theta * double(h));
                }
                L.set_coefficient(p, 0, 0, 0, a);
                L.set_coefficient(p, 0, 0, 1, -b);
            }
        }
        EXPECT_LT((L.matrix() - group_circulant(T->group, w)).cwiseAbs().maxCoeff(), 1e-12) << "C" << N;
    }
}

TEST(Layer, ProjectionReproducesCirculantsOnAllGroups) {
    Rng rng(10);
    for (const auto& G : {cyclic_group(4), dihedral_group(3), dihedral_group(4), quaternion_group(), cyclic_group(7)}) {
        auto T = make_irrep_table(G);
        RepSpec reg = regular_representation(T);
        EquivariantLayer L(reg, reg);
        EXPECT_EQ(L.parameter_count(), G.order());
        Eigen::MatrixXd C = group_circulant(G, gaussian_vector(rng, static_cast<Eigen::Index>(G.order())));
        L.assign_projection(C);
        EXPECT_LT((L.matrix() - C).cwiseAbs().maxCoeff(), 1e-12) << G.name();
    }
}

TEST(Layer, MaterializedEquivarianceAfterInit) {
    for (const auto& G : {cyclic_group(1), cyclic_group(3), cyclic_group(8), dihedral_group(4), dihedral_group(6), quaternion_group()}) {
        auto T = make_irrep_table(G);
        auto net = build_network(input_for(T), {3, 2}, 2, 17);
        for (const auto& layer : net.layers()) EXPECT_LT(equivariance_violation(layer), 1e-10) << G.name();
        Rng rng(2);
        Eigen::MatrixXd X = gaussian_matrix(rng, static_cast<Eigen::Index>(net.input_dim()), 20);
        EXPECT_TRUE(check_equivariance(net, X).passed) << G.name();
    }
}

TEST(Layer, CacheInvalidation) {
    auto T = make_irrep_table(cyclic_group(4));
    RepSpec reg = regular_representation(T);
    EquivariantLayer L(reg, reg);
    Eigen::MatrixXd before = L.matrix();
    L.mutable_parameters()(0) = 1.0;
    EXPECT_GT((L.matrix() - before).norm(), 0.5);
    L.scale(2.0);
    EXPECT_NEAR(L.matrix().norm(), 2.0 * std::sqrt(1.0), 1e-12);
}

TEST(Network, HomogeneityAndZeroInput) {
    auto T = make_irrep_table(dihedral_group(3));
    auto net = build_network(input_for(T), {4, 3}, 2, 3);
    Rng rng(5);
    Eigen::VectorXd x = gaussian_vector(rng, static_cast<Eigen::Index>(net.input_dim()));
    EXPECT_EQ(net.forward(Eigen::VectorXd(Eigen::VectorXd::Zero(x.size()))).norm(), 0.0);
    for (double lambda : {0.5, 2.0, 7.0}) EXPECT_LT((net.forward(Eigen::VectorXd(lambda * x)) - lambda * net.forward(x)).norm(), 1e-12);
    EXPECT_THROW(net.forward(Eigen::VectorXd(Eigen::VectorXd::Zero(x.size() + 1))), std::invalid_argument);
}

TEST(Network, Errors) {
    auto T = make_irrep_table(cyclic_group(2));
    RepSpec in = restricted_frequency_rep(T, 1, false);
    EXPECT_THROW(build_network(in, {}, 2, 0), std::invalid_argument);
    EXPECT_THROW(build_network(in, {3, 0}, 2, 0), std::invalid_argument);
    EXPECT_THROW(build_network(in, {3}, 0, 0), std::invalid_argument);
}

TEST(Network, InitVarianceUsesEffectiveFanIn) {
    auto T = make_irrep_table(cyclic_group(8));
    RepSpec reg = regular_representation(T);
    auto net = build_network(copies(reg, 16), {32}, 2, 123);
    const auto& layer = net.layer(0);
    for (const auto& b : layer.coefficient_blocks()) {
        const std::size_t n = b.m_out * b.m_in * b.c;
        double ss = layer.parameters().segment(static_cast<Eigen::Index>(b.param_offset), static_cast<Eigen::Index>(n)).squaredNorm() / double(n);
        EXPECT_NEAR(ss * double(b.m_in * b.c), 1.0, 0.25) << T->irreps[b.irrep].id;
    }
}

TEST(Gradient, MatchesFiniteDifferences) {
    for (const auto& G : {cyclic_group(3), dihedral_group(4), quaternion_group()}) {
        auto T = make_irrep_table(G);
        auto net = build_network(input_for(T), {2, 2}, 3, 31);
        Rng rng(6);
        Eigen::MatrixXd X = gaussian_matrix(rng, static_cast<Eigen::Index>(net.input_dim()), 7);
        std::vector<int> y{0, 1, 2, 1, 0, 2, 2};
        EXPECT_LE(relative_gradient_error(net, X, y), 1e-4) << G.name();
    }
}

TEST(Gradient, TemperatureScalesConsistently) {
    auto T = make_irrep_table(cyclic_group(3));
    auto net = build_network(input_for(T), {2}, 2, 8);
    Rng rng(7);
    Eigen::MatrixXd X = gaussian_matrix(rng, static_cast<Eigen::Index>(net.input_dim()), 5);
    std::vector<int> y{0, 1, 1, 0, 1};
    // CE on f / T equals CE of the network with its last layer scaled by 1/T
    auto a = loss_and_gradient(net, X, y, 4.0);
    auto scaled = net;
    scaled.layer(1).scale(0.25);
    auto b = loss_and_gradient(scaled, X, y, 1.0);
    EXPECT_NEAR(a.loss, b.loss, 1e-12);
    EXPECT_LT((a.grads[0] - b.grads[0]).norm(), 1e-12);
    EXPECT_THROW(loss_and_gradient(net, X, y, 0.0), std::invalid_argument);
}

TEST(Gradient, SymmetricAtZeroHead) {
    auto T = make_irrep_table(cyclic_group(4));
    auto net = build_network(input_for(T), {3}, 2, 2);
    net.layer(1).set_parameters(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(net.layer(1).parameter_count())));
    Rng rng(1);
    Eigen::MatrixXd X = gaussian_matrix(rng, static_cast<Eigen::Index>(net.input_dim()), 2);
    auto lg = loss_and_gradient(net, X, {0, 1});
    EXPECT_NEAR(lg.loss, std::log(2.0), 1e-12);
    EXPECT_EQ(lg.grads[0].norm(), 0.0);
    const auto& b = net.layer(1).coefficient_blocks().front();
    for (std::size_t i = 0; i < b.m_in; ++i)
        EXPECT_NEAR(lg.grads[1](static_cast<Eigen::Index>(b.index(0, i, 0))), -lg.grads[1](static_cast<Eigen::Index>(b.index(1, i, 0))), 1e-15);
}

TEST(Margins, LossProperties) {
    auto T = make_irrep_table(cyclic_group(2));
    auto net = build_network(restricted_frequency_rep(T, 1, false), {4}, 2, 5);
    Rng rng(3);
    Eigen::MatrixXd X = gaussian_matrix(rng, 2, 50);
    std::vector<int> y(50);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = int(i % 2);
    double prev = -1;
    for (double g : {0.0, 0.01, 0.1, 0.5, 1.0, 5.0}) {
        double l = empirical_margin_loss(net, X, y, g);
        EXPECT_GE(l, prev);
        prev = l;
    }
    EXPECT_EQ(empirical_margin_loss(net, X, y, 1e9), 1.0);
    EXPECT_EQ(zero_one_error(net, X, y), empirical_margin_loss(net, X, y, 0.0));
    EXPECT_THROW(empirical_margin_loss(net, X, y, -1.0), std::invalid_argument);
    Eigen::MatrixXd logits(2, 1);
    logits << 3.0, 1.0;
    EXPECT_EQ(margins(logits, {0})(0), 2.0);
    EXPECT_EQ(margins(logits, {1})(0), -2.0);
}
