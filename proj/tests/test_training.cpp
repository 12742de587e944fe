#include <gtest/gtest.h>

#include "equibound/datasets.hpp"
#include "equibound/training.hpp"
#include "equibound/verify.hpp"

using namespace equibound;

TEST(Train, SeparableTwoPoints) {
    auto T = make_irrep_table(cyclic_group(1));
    auto net = build_network(trivial_rep(T, 2), {8}, 2, 3);
    Eigen::MatrixXd X(2, 2);
    X << 1, -1, 0, 0;
    TrainConfig cfg;
    cfg.gamma = 1.0;
    cfg.learning_rate = 1e-2;
    cfg.batch_size = 2;
    cfg.max_epochs = 5000;
    auto trace = train(net, X, {0, 1}, cfg);
    ASSERT_FALSE(trace.empty());
    EXPECT_TRUE(net.metadata.reached);
    EXPECT_EQ(net.metadata.epochs, trace.size());
    EXPECT_EQ(trace.back().margin_accuracy, 1.0);
    EXPECT_GT(margins(net, X, {0, 1}).minCoeff(), 1.0);
    for (std::size_t e = 0; e < trace.size(); ++e) EXPECT_EQ(trace[e].epoch, e + 1);
}

TEST(Train, ThrowsWithTraceWhenMarginUnreachable) {
    auto T = make_irrep_table(cyclic_group(1));
    auto net = build_network(trivial_rep(T, 1), {2}, 2, 3);
    // identical inputs with different labels cannot both have positive margin
    Eigen::MatrixXd X = Eigen::MatrixXd::Ones(1, 2);
    TrainConfig cfg;
    cfg.gamma = 0.1;
    cfg.max_epochs = 30;
    try {
        train(net, X, {0, 1}, cfg);
        FAIL() << "expected MarginNotReached";
    } catch (const MarginNotReached& e) {
        EXPECT_EQ(e.trace.size(), 30u);
        EXPECT_FALSE(net.metadata.reached);
        EXPECT_EQ(net.metadata.epochs, 30u);
    }
}

TEST(Train, RejectsBadInput) {
    auto T = make_irrep_table(cyclic_group(1));
    auto net = build_network(trivial_rep(T, 1), {2}, 2, 3);
    TrainConfig cfg;
    Eigen::MatrixXd X = Eigen::MatrixXd::Ones(1, 2);
    EXPECT_THROW(train(net, Eigen::MatrixXd(1, 0), {}, cfg), std::invalid_argument);
    EXPECT_THROW(train(net, X, {0, 2}, cfg), std::invalid_argument);
    cfg.gamma = 0;
    EXPECT_THROW(train(net, X, {0, 1}, cfg), std::invalid_argument);
    cfg.gamma = 1;
    cfg.batch_size = 0;
    EXPECT_THROW(train(net, X, {0, 1}, cfg), std::invalid_argument);
}

TEST(Train, DeterministicGivenSeeds) {
    auto T = make_irrep_table(cyclic_group(4));
    auto spec = generate_synthetic(Symmetry::so2, 3, 2, 1);
    auto ds = sample(spec, 128, Augment::group, 2);
    RepSpec in = input_representation(spec, T);
    TrainConfig cfg;
    cfg.gamma = 1.0;
    cfg.max_epochs = 5;
    cfg.batch_size = 16;
    cfg.seed = 4;
    auto run = [&] {
        auto net = build_network(in, {8}, 2, 9);
        try {
            train(net, ds.X, ds.y, cfg);
        } catch (const MarginNotReached&) {
        }
        return net;
    };
    auto a = run(), b = run();
    for (std::size_t l = 0; l < a.depth(); ++l) EXPECT_EQ(a.layer(l).parameters(), b.layer(l).parameters());
}

TEST(Train, ObserverRecordsExtras) {
    auto T = make_irrep_table(cyclic_group(1));
    auto net = build_network(trivial_rep(T, 2), {8}, 2, 3);
    Eigen::MatrixXd X(2, 2);
    X << 1, -1, 0, 0;
    TrainConfig cfg;
    cfg.gamma = 0.5;
    cfg.learning_rate = 1e-2;
    cfg.max_epochs = 5000;
    cfg.batch_size = 2;
    auto trace = train(net, X, {0, 1}, cfg, [](const EquivariantNetwork& n, EpochRecord& r) {
        r.extra.push_back(std::sqrt(n.layer(0).parameters().squaredNorm()));
    });
    for (const auto& r : trace) EXPECT_EQ(r.extra.size(), 1u);
}

TEST(Train, SymmetricDataOnC4TerminatesAndStaysInvariant) {
    auto spec = generate_synthetic(Symmetry::so2, 6, 3, 17);
    auto ds = sample(spec, 1024, Augment::group, 18);
    auto T = make_irrep_table(cyclic_group(4));
    auto net = build_network(input_representation(spec, T), {64, 16}, 2, 19);
    TrainConfig cfg;
    cfg.gamma = 10.0;
    cfg.learning_rate = 5e-3;
    cfg.temperature = 4.0;
    cfg.max_epochs = 12000;
    cfg.seed = 20;
    auto trace = train(net, ds.X, ds.y, cfg);
    EXPECT_TRUE(net.metadata.reached);
    EXPECT_GE(trace.back().margin_accuracy, 0.99);
    for (const auto& layer : net.layers()) EXPECT_LE(equivariance_violation(layer), 1e-10);
    EXPECT_TRUE(check_equivariance(net, ds.X.leftCols(100)).passed);
}

TEST(Train, FitsRandomLabelsGivenEnoughWidth) {
    auto spec = generate_synthetic(Symmetry::so2, 6, 3, 17);
    auto ds = randomize_labels(sample(spec, 256, Augment::group, 18), 5);
    auto T = make_irrep_table(cyclic_group(4));
    auto net = build_network(input_representation(spec, T), {64, 16}, 2, 19);
    TrainConfig cfg;
    cfg.gamma = 10.0;
    cfg.learning_rate = 5e-3;
    cfg.temperature = 4.0;
    cfg.max_epochs = 12000;
    cfg.seed = 20;
    train(net, ds.X, ds.y, cfg);
    EXPECT_TRUE(net.metadata.reached);
    EXPECT_LE(zero_one_error(net, ds.X, ds.y), 0.01);
}
