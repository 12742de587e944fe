#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "equibound/sweep.hpp"

using namespace equibound;

namespace {

SweepConfig tiny_config() {
    SweepConfig c;
    c.D = 2;
    c.F = {1, 2};
    c.groups = {{GroupKind::cyclic, 1}, {GroupKind::cyclic, 2}, {GroupKind::cyclic, 4}};
    c.m = {64};
    c.seeds = {0, 1};
    c.widths = {8};
    c.test_m = 100;
    c.max_epochs = 15;
    c.gamma = 1.0;
    return c;
}

std::size_t count(const std::string& s, char ch) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), ch)); }

}  // namespace

TEST(Channels, EffectiveWidthIsKept) {
    EXPECT_EQ(channels_for({32}, 2), (std::vector<std::size_t>{16}));
    EXPECT_EQ(channels_for({32}, 8), (std::vector<std::size_t>{4}));
    EXPECT_EQ(channels_for({2048, 512}, 16), (std::vector<std::size_t>{128, 32}));
    EXPECT_EQ(channels_for({4}, 16), (std::vector<std::size_t>{1}));
    EXPECT_EQ(channels_for({10}, 4), (std::vector<std::size_t>{3}));
}

TEST(Stats, RanksWithTies) {
    EXPECT_EQ(average_ranks({3, 1, 2}), (std::vector<double>{3, 1, 2}));
    EXPECT_EQ(average_ranks({5, 5, 1, 5}), (std::vector<double>{3, 3, 1, 3}));
}

TEST(Stats, Correlations) {
    EXPECT_NEAR(spearman({1, 2, 3, 4}, {10, 20, 30, 1000}), 1.0, 1e-15);
    EXPECT_NEAR(spearman({1, 2, 3, 4}, {4, 3, 2, 1}), -1.0, 1e-15);
    // 1 - 6 sum d^2 / (n (n^2 - 1)) with d = (0, 1, -1, 0)
    EXPECT_NEAR(spearman({1, 2, 3, 4}, {1, 3, 2, 4}), 0.8, 1e-15);
    EXPECT_NEAR(pearson({1, 2, 3}, {2, 4, 6}), 1.0, 1e-15);
    EXPECT_TRUE(std::isnan(pearson({1, 1, 1}, {1, 2, 3})));
    EXPECT_THROW(pearson({1}, {1}), std::invalid_argument);
    EXPECT_NEAR(regression_slope({0, 1, 2}, {1, 3, 5}), 2.0, 1e-15);
    EXPECT_NEAR(relative_spread({1, 2, 3}), 1.0, 1e-15);
}

TEST(Config, JsonRoundTripAndValidation) {
    SweepConfig c = tiny_config();
    c.as_written = true;
    c.temperature = 2.5;
    auto back = sweep_config_from_json(to_json(c));
    EXPECT_EQ(to_json(back).dump(), to_json(c).dump());
    EXPECT_EQ(config_hash(back), config_hash(c));
    SweepConfig d = c;
    d.gamma = 11;
    EXPECT_NE(config_hash(d), config_hash(c));
    EXPECT_EQ(hex64(config_hash(c)).size(), 16u);

    auto defaults = sweep_config_from_json(json::object());
    EXPECT_EQ(defaults.groups.size(), 5u);
    EXPECT_EQ(defaults.groups.back().N, 16u);
    EXPECT_EQ(defaults.widths, (std::vector<std::size_t>{2048, 512}));
    EXPECT_THROW(sweep_config_from_json(json{{"gama", 10}}), std::invalid_argument);
    EXPECT_THROW(sweep_config_from_json(json{{"eta", 1.5}}), std::invalid_argument);
    EXPECT_THROW(sweep_config_from_json(json{{"seeds", json::array()}}), std::invalid_argument);
    EXPECT_THROW(sweep_config_from_json(json{{"symmetry", "so3"}}), std::invalid_argument);
}

TEST(Sweep, CellsInGridOrder) {
    auto cells = sweep_cells(tiny_config());
    ASSERT_EQ(cells.size(), 12u);
    EXPECT_EQ(cells[0].F, 1u);
    EXPECT_EQ(cells[1].seed, 1u);
    EXPECT_EQ(cells[2].group.N, 2u);
    EXPECT_EQ(cells[6].F, 2u);
}

TEST(Sweep, DeterministicAcrossRunsAndJobCounts) {
    SweepConfig c = tiny_config();
    auto a = run_sweep(c);
    auto b = run_sweep(c);
    c.jobs = 3;
    auto p = run_sweep(c);
    EXPECT_EQ(a.rows_csv, b.rows_csv);
    EXPECT_EQ(a.summary_csv, b.summary_csv);
    EXPECT_EQ(a.groups_csv, b.groups_csv);
    EXPECT_EQ(a.rows_csv, p.rows_csv);

    std::istringstream in(a.rows_csv);
    std::string header, line;
    std::getline(in, header);
    std::size_t n = 0;
    while (std::getline(in, line)) {
        EXPECT_EQ(count(line, ','), count(header, ','));
        EXPECT_NE(line.find(hex64(config_hash(tiny_config()))), std::string::npos);
        ++n;
    }
    EXPECT_EQ(n, 12u);
    for (const char* col : {"config_hash", "dataset_seed", "model_seed", "epochs", "reached", "effective_width_1", "bound_main"})
        EXPECT_NE(header.find(col), std::string::npos) << col;
}

TEST(Sweep, RowsCarryProvenance) {
    SweepConfig c = tiny_config();
    c.F = {1};
    c.groups = {{GroupKind::cyclic, 2}};
    auto r = run_sweep(c);
    ASSERT_EQ(r.rows.size(), 2u);
    for (const auto& row : r.rows) {
        EXPECT_EQ(row.channels, (std::vector<std::size_t>{4}));
        EXPECT_EQ(row.dataset_seed, cell_dataset_seed(c, row.cell));
        EXPECT_EQ(row.model_seed, cell_model_seed(c, row.cell));
        EXPECT_GT(row.epochs, 0u);
        EXPECT_EQ(row.reached, row.error.empty());
        EXPECT_NEAR(row.report.GE, row.report.test_err - row.report.train_err, 1e-15);
        EXPECT_EQ(row.report.m, 64u);
    }
    EXPECT_NE(r.rows[0].dataset_seed, r.rows[1].dataset_seed);
    ASSERT_EQ(r.summary.size(), 1u);
    EXPECT_EQ(r.summary[0].groups.size(), 1u);
    EXPECT_TRUE(std::isnan(r.summary[0].spearman_main_GE));
}

TEST(Sweep, MatchedCellsShareDatasets) {
    SweepConfig c = tiny_config();
    SweepCell a{1, {GroupKind::cyclic, 1}, 64, 0}, b{1, {GroupKind::cyclic, 4}, 64, 0};
    auto da = cell_data(c, a), db = cell_data(c, b);
    EXPECT_EQ(da.train.X, db.train.X);
    EXPECT_EQ(da.test.y, db.test.y);
    c.random_labels = true;
    auto dr = cell_data(c, a);
    EXPECT_EQ(dr.train.X, da.train.X);
    EXPECT_NE(dr.train.y, da.train.y);
    EXPECT_TRUE(dr.train.random_labels);
}

TEST(Sweep, WritesOutputs) {
    SweepConfig c = tiny_config();
    c.F = {1};
    c.seeds = {0};
    c.output_dir = (std::filesystem::temp_directory_path() / "equibound_sweep_test").string();
    std::filesystem::remove_all(c.output_dir);
    auto r = run_sweep(c);
    write_sweep_outputs(c, r);
    for (const char* f : {"rows.csv", "summary.csv", "groups.csv", "config.json"})
        EXPECT_TRUE(std::filesystem::exists(std::filesystem::path(c.output_dir) / f)) << f;
    std::ifstream in(std::filesystem::path(c.output_dir) / "rows.csv");
    std::stringstream ss;
    ss << in.rdbuf();
    EXPECT_EQ(ss.str(), r.rows_csv);
    auto cfg = json::parse(std::ifstream(std::filesystem::path(c.output_dir) / "config.json"));
    EXPECT_EQ(cfg["config_hash"], hex64(config_hash(c)));
    std::filesystem::remove_all(c.output_dir);
    c.output_dir.clear();
    EXPECT_THROW(write_sweep_outputs(c, r), std::invalid_argument);
}
