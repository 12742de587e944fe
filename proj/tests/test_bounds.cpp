#include <gtest/gtest.h>

#include <boost/multiprecision/cpp_int.hpp>
#include <numbers>

#include "equibound/bounds.hpp"

using namespace equibound;

namespace {

// sum_k C(m,k) k^k (m-k)^(m-k) / m^m in exact rational arithmetic
double xi_exact(unsigned m) {
    using boost::multiprecision::cpp_int;
    using boost::multiprecision::cpp_rational;
    using boost::multiprecision::pow;
    cpp_int num = 0, binom = 1;
    for (unsigned k = 0; k <= m; ++k) {
        if (k > 0) binom = binom * (m - k + 1) / k;
        num += binom * pow(cpp_int(k), k) * pow(cpp_int(m - k), m - k);
    }
    return cpp_rational(num, pow(cpp_int(m), m)).convert_to<double>();
}

double svd_norm(const Eigen::MatrixXd& W) { return Eigen::JacobiSVD<Eigen::MatrixXd>(W).singularValues()(0); }

RepSpec c4_input(const IrrepTablePtr& T) { return restricted_frequency_rep(T, 1, false); }

// multiplicity-only evaluation of the main bound, written out term by term
double main_bound_oracle(const EquivariantNetwork& net, std::size_t m, double gamma, double B, double delta, double eta,
                         double margin_loss) {
    const auto& T = net.input_rep().table();
    const std::size_t L = net.depth();
    double total = 0;
    for (const auto& layer : net.layers())
        for (std::size_t p = 0; p < T.size(); ++p) total += double(layer.out_rep().multiplicity(p));
    double sum_sqrt_M = 0, prod = 1, ratio = 0;
    for (const auto& layer : net.layers()) {
        double mx = 0;
        for (std::size_t p = 0; p < T.size(); ++p)
            mx = std::max(mx, 5.0 * double(layer.in_rep().multiplicity(p) * layer.out_rep().multiplicity(p)) * T.irreps[p].type_c);
        sum_sqrt_M += std::sqrt(std::log(total / (1 - eta)) * mx);
        const double s = svd_norm(layer.matrix());
        prod *= s * s;
        ratio += fourier_frobenius_sum_from_blocks(layer) / (s * s);
    }
    const double lead = 32 * std::pow(std::numbers::e, 4) * B * B * prod / (gamma * gamma * double(m) * eta) * sum_sqrt_M * sum_sqrt_M * ratio;
    const double conf = std::log(xi_exact(static_cast<unsigned>(m)) * double(L) * std::pow(double(m), 1 + 1 / (2.0 * double(L))) / delta);
    return margin_loss + std::sqrt(lead + conf / (2 * double(m)));
}

}  // namespace

TEST(Xi, SmallValues) {
    EXPECT_EQ(xi(1), 2.0);
    EXPECT_EQ(xi(2), 2.5);
    EXPECT_THROW(xi(0), std::invalid_argument);
}

TEST(Xi, MatchesExactSumUpTo30) {
    for (unsigned m = 1; m <= 30; ++m) EXPECT_EQ(xi(m), xi_exact(m)) << m;
}

TEST(Xi, MatchesExactSumUpTo1000) {
    for (unsigned m : {31u, 50u, 64u, 100u, 257u, 400u, 512u, 800u, 999u, 1000u}) {
        const double e = xi_exact(m);
        EXPECT_LE(std::abs(xi(m) - e) / e, 1e-10) << m;
        EXPECT_NEAR(log_xi(m), std::log(e), 1e-12);
    }
    // xi(m) = sqrt(pi m / 2) + 2/3 + O(1/sqrt(m))
    EXPECT_NEAR(xi(1000) - std::sqrt(std::numbers::pi * 1000 / 2), 2.0 / 3.0, 0.01);
    EXPECT_GT(log_xi(1000000), 0.0);
}

TEST(SpectralNorm, MatchesSvd) {
    Rng rng(5);
    for (auto [r, c] : std::vector<std::pair<int, int>>{{1, 1}, {3, 7}, {16, 16}, {40, 17}, {64, 200}, {300, 120}}) {
        Eigen::MatrixXd W = gaussian_matrix(rng, r, c);
        EXPECT_NEAR(spectral_norm(W) / svd_norm(W), 1.0, 1e-8) << r << "x" << c;
    }
    EXPECT_EQ(spectral_norm(Eigen::MatrixXd::Zero(30, 30)), 0.0);
    Eigen::MatrixXd R = Eigen::MatrixXd::Zero(20, 20);
    R(3, 4) = -7;
    EXPECT_NEAR(spectral_norm(R), 7.0, 1e-12);
    Eigen::MatrixXd bad = Eigen::MatrixXd::Ones(2, 2);
    bad(0, 0) = std::nan("");
    EXPECT_THROW(spectral_norm(bad), std::invalid_argument);
}

TEST(FourierFrobenius, CoefficientAndBlockPathsAgree) {
    for (const auto& G : {cyclic_group(5), dihedral_group(4), quaternion_group()}) {
        auto T = make_irrep_table(G);
        auto net = network_from_reps({copies(regular_representation(T), 2), copies(regular_representation(T), 3), trivial_rep(T, 2)}, 7);
        for (const auto& layer : net.layers()) {
            EXPECT_NEAR(fourier_frobenius_sum(layer), fourier_frobenius_sum_from_blocks(layer), 1e-12);
            // ||W||_F^2 = sum over blocks of dim_psi * |w|^2
            double f = 0;
            for (const auto& b : layer.coefficient_blocks())
                f += double(b.dim) * layer.parameters().segment(static_cast<Eigen::Index>(b.param_offset), static_cast<Eigen::Index>(b.m_out * b.m_in * b.c)).squaredNorm();
            EXPECT_NEAR(layer.matrix().squaredNorm(), f, 1e-10);
        }
    }
}

TEST(MFactor, C4Example) {
    auto T = make_irrep_table(cyclic_group(4));
    auto net = build_network(c4_input(T), {8, 4}, 2, 0);
    // output multiplicities: 8 copies of 3 irreps, 4 copies, 2 trivial
    EXPECT_EQ(total_output_multiplicity(net), 38.0);
    const double lg = std::log(38.0 / 0.5);
    EXPECT_NEAR(m_factor(net, 1, 0.5), lg * 5 * 16, 1e-12);
    EXPECT_NEAR(m_factor(net, 2, 0.5), lg * 5 * 64, 1e-12);
    EXPECT_NEAR(m_factor(net, 3, 0.5), lg * 5 * 8, 1e-12);
    EXPECT_THROW(m_factor(net, 0, 0.5), std::out_of_range);
    EXPECT_THROW(m_factor(net, 4, 0.5), std::out_of_range);
    EXPECT_THROW(m_factor(net, 1, 1.0), std::invalid_argument);
}

TEST(GroupConstants, Examples) {
    auto c4 = group_constants(*make_irrep_table(cyclic_group(4)));
    EXPECT_EQ(c4.first, 2.0);
    EXPECT_EQ(c4.second, 3.0);
    auto q8 = group_constants(*make_irrep_table(quaternion_group()));
    EXPECT_EQ(q8.first, 4.0);
    EXPECT_EQ(q8.second, 5.0);
    auto d3 = group_constants(*make_irrep_table(dihedral_group(3)));
    EXPECT_EQ(d3.first, 4.0);
    EXPECT_EQ(d3.second, 4.0);
}

TEST(GroupConv, Channels) {
    auto T = make_irrep_table(cyclic_group(4));
    auto net = build_network(c4_input(T), {8, 4}, 2, 0);
    EXPECT_EQ(groupconv_channels(net), (std::vector<double>{0.5, 8, 4, 0.5}));
    auto terms = groupconv_terms(net);
    const double ss = std::sqrt(0.5 * 8) + std::sqrt(32.0) + std::sqrt(2.0);
    EXPECT_NEAR(terms.sum_sqrt_cc, ss, 1e-12);
    EXPECT_NEAR(terms.leading, 5 * ss * ss * 2 * std::log(3 * 12.5 / 0.5), 1e-9);

    auto odd = network_from_reps({c4_input(T), direct_sum({trivial_rep(T, 3), c4_input(T)}), trivial_rep(T, 2)}, 1);
    EXPECT_THROW(groupconv_channels(odd), std::domain_error);
    BoundInputs bi;
    bi.net = &odd;
    bi.m = 100;
    EXPECT_FALSE(compute_bounds(bi).groupconv_available);
    EXPECT_THROW(groupconv_bound(bi), std::domain_error);
}

TEST(MainBound, MatchesTermByTermOracle) {
    for (const auto& G : {cyclic_group(1), cyclic_group(4), dihedral_group(3), quaternion_group()}) {
        auto T = make_irrep_table(G);
        RepSpec in = G.kind() == GroupKind::quaternion ? decompose_representation(T, T->irreps[T->index_of("quat")].matrices)
                                                       : restricted_frequency_rep(T, 1, G.kind() == GroupKind::dihedral);
        auto net = build_network(in, {4, 3}, 2, 13);
        for (std::size_t m : {10u, 640u}) {
            BoundInputs bi;
            bi.net = &net;
            bi.m = m;
            bi.gamma = 2.5;
            bi.B = 1.3;
            bi.empirical_margin_loss = 0.125;
            auto r = compute_bounds(bi);
            const double o = main_bound_oracle(net, m, 2.5, 1.3, 0.05, 0.5, 0.125);
            EXPECT_NEAR(r.bound_main / o, 1.0, 1e-9) << G.name() << " m=" << m;
            EXPECT_GE(r.bound_main, 0.125);
            EXPECT_NEAR(r.xi_m, xi_exact(static_cast<unsigned>(m)), 1e-12 * r.xi_m);
        }
    }
}

TEST(MainBound, InvariantUnderLayerRebalancing) {
    auto T = make_irrep_table(dihedral_group(4));
    auto net = build_network(restricted_frequency_rep(T, 1, true), {3, 3}, 2, 21);
    BoundInputs bi;
    bi.net = &net;
    bi.m = 500;
    const auto base = compute_bounds(bi);
    auto re = net;
    re.layer(0).scale(3.0);
    re.layer(2).scale(1.0 / 3.0);
    bi.net = &re;
    const auto r = compute_bounds(bi);
    EXPECT_NEAR(r.bound_main / base.bound_main, 1.0, 1e-9);
    EXPECT_NEAR(r.bound_alt / base.bound_alt, 1.0, 1e-9);
    // scaling outputs and gamma together leaves the bound unchanged
    auto big = net;
    big.layer(1).scale(4.0);
    bi.net = &big;
    bi.gamma = 40.0;
    EXPECT_NEAR(compute_bounds(bi).bound_main / base.bound_main, 1.0, 1e-9);
}

TEST(MainBound, AsWrittenDiffersOnlyInConfidenceTerm) {
    auto T = make_irrep_table(cyclic_group(2));
    auto net = build_network(restricted_frequency_rep(T, 1, false), {4}, 2, 2);
    BoundInputs bi;
    bi.net = &net;
    bi.m = 200;
    bi.gamma = 1.0;
    auto r = compute_bounds(bi);
    EXPECT_NEAR(r.bound_main, r.bound_main_as_written, 1e-12 * r.bound_main);
    bi.gamma = 3.0;
    r = compute_bounds(bi);
    EXPECT_GT(r.bound_main, r.bound_main_as_written);
}

TEST(MainBound, DecreasesWithMargin) {
    auto T = make_irrep_table(cyclic_group(4));
    auto net = build_network(c4_input(T), {4}, 2, 2);
    BoundInputs bi;
    bi.net = &net;
    bi.m = 1000;
    double prev = std::numeric_limits<double>::infinity();
    for (double g : {0.5, 1.0, 2.0, 8.0}) {
        bi.gamma = g;
        double b = main_bound(bi);
        EXPECT_LT(b, prev);
        prev = b;
    }
}

TEST(Bounds, InputValidation) {
    auto T = make_irrep_table(cyclic_group(2));
    auto net = build_network(restricted_frequency_rep(T, 1, false), {4}, 2, 2);
    BoundInputs bi;
    EXPECT_THROW(compute_bounds(bi), std::invalid_argument);
    bi.net = &net;
    EXPECT_THROW(compute_bounds(bi), std::invalid_argument);
    bi.m = 10;
    bi.delta = 1.0;
    EXPECT_THROW(compute_bounds(bi), std::invalid_argument);
    bi.delta = 0.05;
    bi.gamma = 0;
    EXPECT_THROW(compute_bounds(bi), std::invalid_argument);
    bi.gamma = 1;
    bi.B = -1;
    EXPECT_THROW(compute_bounds(bi), std::invalid_argument);
    bi.B = 1;
    auto zero = net;
    zero.layer(1).scale(0.0);
    bi.net = &zero;
    EXPECT_THROW(compute_bounds(bi), std::domain_error);
}

TEST(AltBound, ScalesWithInverseSqrtOrder) {
    const double a = alternative_bound_from_terms(0.0, 1, 2, 3, 10, 4.0, 3.0, 1.0, 100);
    EXPECT_NEAR(alternative_bound_from_terms(0.0, 16, 2, 3, 10, 4.0, 3.0, 1.0, 100), a / 4, 1e-12);
    EXPECT_NEAR(a, std::sqrt(2 * 9 * 10 * std::log(60.0) * 4 * 3 / 100.0), 1e-12);
}

TEST(Perturbation, RhsAndAdmissibility) {
    auto T = make_irrep_table(cyclic_group(3));
    auto net = build_network(restricted_frequency_rep(T, 1, false), {2, 2}, 2, 4);
    std::vector<Eigen::MatrixXd> U;
    double expect_sum = 0, prod = 1;
    for (const auto& l : net.layers()) {
        const double w = svd_norm(l.matrix());
        U.push_back(l.matrix() * (0.1 / 3.0));
        expect_sum += 0.1 / 3.0;
        prod *= w;
    }
    EXPECT_NEAR(perturbation_rhs(net, U, 2.0), std::numbers::e * 2.0 * prod * expect_sum, 1e-10);
    U[1] = net.layer(1).matrix() * 0.5;
    EXPECT_THROW(perturbation_rhs(net, U, 2.0), std::domain_error);
    U.pop_back();
    EXPECT_THROW(perturbation_rhs(net, U, 2.0), std::invalid_argument);
}

TEST(TailThreshold, RegularC4) {
    auto T = make_irrep_table(cyclic_group(4));
    auto reg = regular_representation(T);
    auto th = tail_threshold(reg, reg, 0.5, 2.0);
    EXPECT_NEAR(th.threshold, 0.5 * std::sqrt(5 * 2 * 2.0), 1e-12);
    EXPECT_NEAR(th.tight_threshold, 0.5 * std::sqrt(2 + 4 * std::sqrt(2.0) + 4), 1e-12);
    EXPECT_NEAR(th.probability_bound, 3 * std::exp(-2.0), 1e-15);
    EXPECT_TRUE(tail_threshold(reg, reg, 1.0, 0.5).vacuous());
    EXPECT_THROW(tail_threshold(reg, reg, 0.0, 1.0), std::invalid_argument);
}

TEST(Perturbation, CoefficientBoundDominatesSpectralNorm) {
    Rng rng(8);
    for (const auto& G : {cyclic_group(4), dihedral_group(5), quaternion_group()}) {
        auto T = make_irrep_table(G);
        EquivariantLayer U(copies(regular_representation(T), 3), copies(regular_representation(T), 2));
        for (int trial = 0; trial < 20; ++trial) {
            U.set_parameters(gaussian_vector(rng, static_cast<Eigen::Index>(U.parameter_count())));
            EXPECT_LE(svd_norm(U.matrix()), layer_perturbation_bound(U) * (1 + 1e-12)) << G.name();
        }
    }
}

TEST(PosteriorSigma, Formula) {
    std::vector<double> n{2.0, 8.0};
    // beta = 4, L = 2: sigma = gamma / (4 e B beta sum)
    EXPECT_NEAR(posterior_sigma(n, 3.0, 1.0, 0.5), 1.0 / (4 * std::numbers::e * 0.5 * 4 * 3), 1e-15);
    EXPECT_NEAR(kl_term(n, {1.0, 2.0}, 0.5), (16.0 / 4 * 1 + 16.0 / 64 * 2) / 0.5, 1e-12);
    EXPECT_THROW(posterior_sigma({1.0, 0.0}, 1.0, 1.0, 1.0), std::domain_error);
}
