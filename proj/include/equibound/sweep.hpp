#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "bounds.hpp"
#include "datasets.hpp"
#include "equivariant.hpp"
#include "io.hpp"
#include "training.hpp"

namespace equibound {

struct GroupChoice {
    GroupKind kind = GroupKind::cyclic;
    std::size_t N = 1;
};

struct SweepConfig {
    Symmetry symmetry = Symmetry::so2;
    std::size_t D = 6;
    std::vector<std::size_t> F{6};
    std::vector<GroupChoice> groups;
    std::vector<std::size_t> m{3200};
    std::vector<std::uint64_t> seeds{0, 1, 2};
    double gamma = 10.0;
    double eta = 0.5;
    double delta = 0.05;
    bool as_written = false;
    std::vector<std::size_t> widths{2048, 512};  // effective channels c_l |H| per hidden layer
    bool augment = true;
    bool random_labels = false;
    std::size_t test_m = 10000;
    double noise_tangent = 0.1;
    double noise_ambient = 0.01;
    double learning_rate = 1e-3;
    std::size_t batch_size = 64;
    std::size_t max_epochs = 2000;
    double target_fraction = 0.99;
    double temperature = 4.0;
    std::uint64_t dataset_seed = 0;
    std::size_t jobs = 1;
    std::string output_dir;

    void validate() const {
        if (F.empty() || groups.empty() || m.empty() || seeds.empty() || widths.empty())
            throw std::invalid_argument("sweep grids must be nonempty");
        for (auto w : widths)
            if (w == 0) throw std::invalid_argument("widths must be positive");
        for (auto v : m)
            if (v == 0) throw std::invalid_argument("training sizes must be positive");
        for (auto f : F)
            if (f == 0) throw std::invalid_argument("frequencies must be positive");
        if (!(gamma > 0)) throw std::invalid_argument("gamma must be positive");
        if (!(eta > 0 && eta < 1)) throw std::invalid_argument("eta must lie in (0,1)");
        if (!(delta > 0 && delta < 1)) throw std::invalid_argument("delta must lie in (0,1)");
        if (test_m == 0) throw std::invalid_argument("test_m must be positive");
        if (!(temperature > 0)) throw std::invalid_argument("temperature must be positive");
        if (symmetry == Symmetry::so2 || symmetry == Symmetry::o2) {
            for (const auto& g : groups)
                if (g.kind == GroupKind::quaternion) throw std::invalid_argument("quaternion group cannot act on circle data");
            if (symmetry == Symmetry::so2)
                for (const auto& g : groups)
                    if (g.kind == GroupKind::dihedral) throw std::invalid_argument("dihedral models need o2/dihedral data");
        }
        for (const auto& g : groups) build_group(g.kind, g.N);
    }
};

inline json to_json(const SweepConfig& c) {
    json groups = json::array();
    for (const auto& g : c.groups) groups.push_back({{"kind", to_string(g.kind)}, {"N", g.N}});
    return {{"symmetry", to_string(c.symmetry)}, {"D", c.D},
            {"F", c.F}, {"groups", groups},
            {"m", c.m}, {"seeds", c.seeds},
            {"gamma", c.gamma}, {"eta", c.eta},
            {"delta", c.delta}, {"as_written", c.as_written},
            {"widths", c.widths}, {"augment", c.augment},
            {"random_labels", c.random_labels}, {"test_m", c.test_m},
            {"noise_tangent", c.noise_tangent}, {"noise_ambient", c.noise_ambient},
            {"learning_rate", c.learning_rate}, {"batch_size", c.batch_size},
            {"max_epochs", c.max_epochs}, {"target_fraction", c.target_fraction},
            {"temperature", c.temperature}, {"dataset_seed", c.dataset_seed}};
}

/// Missing keys keep their defaults; unknown keys are rejected.
inline SweepConfig sweep_config_from_json(const json& j) {
    static const std::vector<std::string> known{
        "symmetry", "D", "F", "groups", "m", "seeds", "gamma", "eta", "delta", "as_written", "widths", "augment",
        "random_labels", "test_m", "noise_tangent", "noise_ambient", "learning_rate", "batch_size", "max_epochs",
        "target_fraction", "temperature", "dataset_seed", "jobs", "output_dir"};
    if (!j.is_object()) throw std::invalid_argument("sweep config must be a JSON object");
    for (const auto& [k, v] : j.items())
        if (std::find(known.begin(), known.end(), k) == known.end()) throw std::invalid_argument("unknown sweep config key: " + k);
    SweepConfig c;
    try {
        if (j.contains("symmetry")) c.symmetry = symmetry_from_string(j["symmetry"].get<std::string>());
        if (j.contains("D")) c.D = j["D"].get<std::size_t>();
        if (j.contains("F")) c.F = j["F"].get<std::vector<std::size_t>>();
        if (j.contains("groups"))
            for (const auto& g : j["groups"])
                c.groups.push_back({group_kind_from_string(g.at("kind").get<std::string>()), g.value("N", std::size_t{1})});
        if (j.contains("m")) c.m = j["m"].get<std::vector<std::size_t>>();
        if (j.contains("seeds")) c.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
        if (j.contains("gamma")) c.gamma = j["gamma"].get<double>();
        if (j.contains("eta")) c.eta = j["eta"].get<double>();
        if (j.contains("delta")) c.delta = j["delta"].get<double>();
        if (j.contains("as_written")) c.as_written = j["as_written"].get<bool>();
        if (j.contains("widths")) c.widths = j["widths"].get<std::vector<std::size_t>>();
        if (j.contains("augment")) c.augment = j["augment"].get<bool>();
        if (j.contains("random_labels")) c.random_labels = j["random_labels"].get<bool>();
        if (j.contains("test_m")) c.test_m = j["test_m"].get<std::size_t>();
        if (j.contains("noise_tangent")) c.noise_tangent = j["noise_tangent"].get<double>();
        if (j.contains("noise_ambient")) c.noise_ambient = j["noise_ambient"].get<double>();
        if (j.contains("learning_rate")) c.learning_rate = j["learning_rate"].get<double>();
        if (j.contains("batch_size")) c.batch_size = j["batch_size"].get<std::size_t>();
        if (j.contains("max_epochs")) c.max_epochs = j["max_epochs"].get<std::size_t>();
        if (j.contains("target_fraction")) c.target_fraction = j["target_fraction"].get<double>();
        if (j.contains("temperature")) c.temperature = j["temperature"].get<double>();
        if (j.contains("dataset_seed")) c.dataset_seed = j["dataset_seed"].get<std::uint64_t>();
        if (j.contains("jobs")) c.jobs = j["jobs"].get<std::size_t>();
        if (j.contains("output_dir")) c.output_dir = j["output_dir"].get<std::string>();
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("malformed sweep config: ") + e.what());
    }
    if (c.groups.empty()) c.groups = {{GroupKind::cyclic, 1}, {GroupKind::cyclic, 2}, {GroupKind::cyclic, 4},
                                      {GroupKind::cyclic, 8}, {GroupKind::cyclic, 16}};
    c.validate();
    return c;
}

/// FNV-1a over the canonical config dump (output_dir and jobs excluded).
inline std::uint64_t config_hash(const SweepConfig& c) {
    const std::string s = to_json(c).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex;
    os.width(16);
    os.fill('0');
    os << v;
    return os.str();
}

inline std::vector<std::size_t> channels_for(const std::vector<std::size_t>& widths, std::size_t order) {
    std::vector<std::size_t> c;
    for (auto w : widths) c.push_back(std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(double(w) / double(order)))));
    return c;
}

struct SweepCell {
    std::size_t F = 1;
    GroupChoice group;
    std::size_t m = 1;
    std::uint64_t seed = 0;
};

struct SweepRow {
    SweepCell cell;
    BoundReport report;
    std::uint64_t dataset_seed = 0;
    std::uint64_t model_seed = 0;
    std::size_t epochs = 0;
    bool reached = false;
    double final_margin_accuracy = 0;
    std::vector<std::size_t> channels;
    std::string error;
};

inline std::vector<SweepCell> sweep_cells(const SweepConfig& c) {
    std::vector<SweepCell> cells;
    for (auto F : c.F)
        for (const auto& g : c.groups)
            for (auto m : c.m)
                for (auto s : c.seeds) cells.push_back({F, g, m, s});
    return cells;
}

inline std::uint64_t cell_dataset_seed(const SweepConfig& c, const SweepCell& cell) {
    return derive_seed(c.dataset_seed, {cell.F, cell.seed});
}

inline std::uint64_t cell_model_seed(const SweepConfig& c, const SweepCell& cell) {
    return derive_seed(c.dataset_seed ^ 0xa5a5a5a5ULL,
                       {cell.F, static_cast<std::uint64_t>(cell.group.kind), cell.group.N, cell.m, cell.seed});
}

/// Data for one cell: the dataset depends on (F, seed) only, so every H sees the same points.
struct CellData {
    Dataset train, test;
};

inline CellData cell_data(const SweepConfig& c, const SweepCell& cell) {
    const std::uint64_t ds = cell_dataset_seed(c, cell);
    DatasetSpec spec = generate_synthetic(c.symmetry, c.D, cell.F, ds, c.noise_tangent, c.noise_ambient);
    const Augment aug = c.augment ? Augment::group : Augment::none;
    CellData d{sample(spec, cell.m, aug, derive_seed(ds, {11, cell.m})), sample(spec, c.test_m, aug, derive_seed(ds, {12}))};
    if (c.random_labels) {
        d.train = randomize_labels(d.train, derive_seed(ds, {13, cell.m}));
        d.test = randomize_labels(d.test, derive_seed(ds, {14}));
    }
    return d;
}

inline SweepRow run_cell(const SweepConfig& c, const SweepCell& cell) {
    SweepRow row;
    row.cell = cell;
    row.dataset_seed = cell_dataset_seed(c, cell);
    row.model_seed = cell_model_seed(c, cell);
    CellData data = cell_data(c, cell);
    auto T = make_irrep_table(build_group(cell.group.kind, cell.group.N));
    RepSpec in = input_representation(data.train.spec, T);
    row.channels = channels_for(c.widths, T->group.order());
    EquivariantNetwork net = build_network(in, row.channels, 2, row.model_seed);
    TrainConfig tc;
    tc.gamma = c.gamma;
    tc.max_epochs = c.max_epochs;
    tc.learning_rate = c.learning_rate;
    tc.batch_size = c.batch_size;
    tc.seed = derive_seed(row.model_seed, {1});
    tc.target_fraction = c.target_fraction;
    tc.temperature = c.temperature;
    try {
        train(net, data.train.X, data.train.y, tc);
    } catch (const MarginNotReached& e) {
        row.error = "MarginNotReached";
    }
    row.epochs = net.metadata.epochs;
    row.reached = net.metadata.reached;
    row.final_margin_accuracy = net.metadata.final_margin_accuracy;

    BoundInputs bi;
    bi.net = &net;
    bi.m = cell.m;
    bi.gamma = c.gamma;
    bi.B = data.train.B;
    bi.delta = c.delta;
    bi.eta = c.eta;
    bi.empirical_margin_loss = empirical_margin_loss(net, data.train.X, data.train.y, c.gamma);
    row.report = compute_bounds(bi);
    row.report.train_err = zero_one_error(net, data.train.X, data.train.y);
    row.report.test_err = zero_one_error(net, data.test.X, data.test.y);
    row.report.GE = row.report.test_err - row.report.train_err;
    return row;
}

inline std::vector<std::string> sweep_row_columns(std::size_t L) {
    std::vector<std::string> c = bound_report_columns(L);
    for (const char* s : {"bound", "symmetry", "D", "F", "seed", "config_hash", "dataset_seed", "model_seed", "epochs",
                          "reached", "final_margin_accuracy", "random_labels", "augment"})
        c.emplace_back(s);
    for (std::size_t l = 1; l < L; ++l) {
        c.push_back("channels_" + std::to_string(l));
        c.push_back("effective_width_" + std::to_string(l));
    }
    return c;
}

inline std::vector<std::string> sweep_row_values(const SweepConfig& c, const SweepRow& r) {
    std::vector<std::string> v = bound_report_values(r.report);
    v.push_back(format_double(c.as_written ? r.report.bound_main_as_written : r.report.bound_main));
    v.push_back(to_string(c.symmetry));
    v.push_back(std::to_string(c.D));
    v.push_back(std::to_string(r.cell.F));
    v.push_back(std::to_string(r.cell.seed));
    v.push_back(hex64(config_hash(c)));
    v.push_back(std::to_string(r.dataset_seed));
    v.push_back(std::to_string(r.model_seed));
    v.push_back(std::to_string(r.epochs));
    v.push_back(r.reached ? "1" : "0");
    v.push_back(format_double(r.final_margin_accuracy));
    v.push_back(c.random_labels ? "1" : "0");
    v.push_back(c.augment ? "1" : "0");
    for (auto ch : r.channels) {
        v.push_back(std::to_string(ch));
        v.push_back(std::to_string(ch * r.report.group_order));
    }
    return v;
}

// ---------------------------------------------------------------------------
// summary statistics

inline std::vector<double> average_ranks(const std::vector<double>& x) {
    std::vector<std::size_t> idx(x.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> r(x.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]]) ++j;
        const double avg = 0.5 * double(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
        i = j + 1;
    }
    return r;
}

inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.size() < 2) throw std::invalid_argument("pearson needs two equal-length samples");
    const double n = double(a.size());
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (saa == 0 || sbb == 0) return std::numeric_limits<double>::quiet_NaN();
    return sab / std::sqrt(saa * sbb);
}

inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    return pearson(average_ranks(a), average_ranks(b));
}

/// least-squares slope of y on x
inline double regression_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("regression needs two equal-length samples");
    const double n = double(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxx == 0 ? std::numeric_limits<double>::quiet_NaN() : sxy / sxx;
}

inline double relative_spread(const std::vector<double>& v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
    return (*hi - *lo) / mean;
}

/// Seed-averaged statistics of one group H within a (F, m) slice.
struct GroupAggregate {
    GroupChoice group;
    std::size_t order = 0;
    std::size_t rows = 0;
    std::size_t failed = 0;
    double GE = 0, train_err = 0, test_err = 0, bound_main = 0, bound_main_as_written = 0, bound_alt = 0, sum_sqrt_M = 0;
};

struct SliceSummary {
    std::size_t F = 0;
    std::size_t m = 0;
    std::vector<GroupAggregate> groups;  // sorted by |H|
    double slope_GE_inv_sqrt_H = 0;      // per-row regression
    double spearman_GE_inv_sqrt_H = 0;   // seed-averaged
    double spearman_main_GE = 0;
    double spearman_alt_GE = 0;
    double spearman_sum_sqrt_M_GE = 0;
    double rel_spread_main = 0;
    double rel_spread_alt = 0;
    double saturation_ratio = 0;  // (b[n-2]-b[n-1]) / (b[0]-b[1]) over the sorted group list
    std::size_t failed = 0;
};

inline std::vector<SliceSummary> summarize(const SweepConfig& c, const std::vector<SweepRow>& rows) {
    std::vector<SliceSummary> out;
    for (auto F : c.F)
        for (auto m : c.m) {
            SliceSummary s;
            s.F = F;
            s.m = m;
            std::vector<double> x_rows, ge_rows;
            for (const auto& g : c.groups) {
                GroupAggregate a;
                a.group = g;
                for (const auto& r : rows) {
                    if (r.cell.F != F || r.cell.m != m || r.cell.group.kind != g.kind || r.cell.group.N != g.N) continue;
                    a.order = r.report.group_order;
                    ++a.rows;
                    if (!r.reached) ++a.failed;
                    a.GE += r.report.GE;
                    a.train_err += r.report.train_err;
                    a.test_err += r.report.test_err;
                    a.bound_main += r.report.bound_main;
                    a.bound_main_as_written += r.report.bound_main_as_written;
                    a.bound_alt += r.report.bound_alt;
                    a.sum_sqrt_M += r.report.sum_sqrt_M;
                    x_rows.push_back(1.0 / std::sqrt(double(r.report.group_order)));
                    ge_rows.push_back(r.report.GE);
                }
                if (a.rows == 0) continue;
                const double n = double(a.rows);
                for (double* f : {&a.GE, &a.train_err, &a.test_err, &a.bound_main, &a.bound_main_as_written, &a.bound_alt, &a.sum_sqrt_M})
                    *f /= n;
                s.failed += a.failed;
                s.groups.push_back(a);
            }
            std::stable_sort(s.groups.begin(), s.groups.end(),
                             [](const GroupAggregate& a, const GroupAggregate& b) { return a.order < b.order; });
            std::vector<double> inv, ge, bm, ba, sm;
            for (const auto& a : s.groups) {
                inv.push_back(1.0 / std::sqrt(double(a.order)));
                ge.push_back(a.GE);
                bm.push_back(c.as_written ? a.bound_main_as_written : a.bound_main);
                ba.push_back(a.bound_alt);
                sm.push_back(a.sum_sqrt_M);
            }
            const double nan = std::numeric_limits<double>::quiet_NaN();
            const bool enough = s.groups.size() >= 2;
            s.slope_GE_inv_sqrt_H = x_rows.size() >= 2 ? regression_slope(x_rows, ge_rows) : nan;
            s.spearman_GE_inv_sqrt_H = enough ? spearman(ge, inv) : nan;
            s.spearman_main_GE = enough ? spearman(bm, ge) : nan;
            s.spearman_alt_GE = enough ? spearman(ba, ge) : nan;
            s.spearman_sum_sqrt_M_GE = enough ? spearman(sm, ge) : nan;
            s.rel_spread_main = relative_spread(bm);
            s.rel_spread_alt = relative_spread(ba);
            if (enough) {
                const std::size_t n = bm.size();
                s.saturation_ratio = (bm[n - 2] - bm[n - 1]) / (bm[0] - bm[1]);
            } else {
                s.saturation_ratio = nan;
            }
            out.push_back(s);
        }
    return out;
}

struct SweepResult {
    std::vector<SweepRow> rows;
    std::vector<SliceSummary> summary;
    std::string rows_csv;
    std::string summary_csv;
    std::string groups_csv;
};

inline std::string rows_csv(const SweepConfig& c, const std::vector<SweepRow>& rows) {
    std::string s = csv_line(sweep_row_columns(c.widths.size() + 1)) + "\n";
    for (const auto& r : rows) s += csv_line(sweep_row_values(c, r)) + "\n";
    return s;
}

inline std::string summary_csv(const std::vector<SliceSummary>& summary) {
    std::string s =
        "F,m,n_groups,n_failed,slope_GE_vs_inv_sqrt_H,spearman_GE_inv_sqrt_H,spearman_bound_main_GE,spearman_bound_alt_GE,"
        "spearman_sum_sqrt_M_GE,rel_spread_bound_main,rel_spread_bound_alt,saturation_ratio_bound_main\n";
    for (const auto& r : summary)
        s += csv_line({std::to_string(r.F), std::to_string(r.m), std::to_string(r.groups.size()), std::to_string(r.failed),
                       format_double(r.slope_GE_inv_sqrt_H), format_double(r.spearman_GE_inv_sqrt_H),
                       format_double(r.spearman_main_GE), format_double(r.spearman_alt_GE),
                       format_double(r.spearman_sum_sqrt_M_GE), format_double(r.rel_spread_main),
                       format_double(r.rel_spread_alt), format_double(r.saturation_ratio)}) +
             "\n";
    return s;
}

inline std::string groups_csv(const std::vector<SliceSummary>& summary) {
    std::string s = "F,m,group_kind,N,|H|,rows,failed,GE,train_err,test_err,bound_main,bound_main_as_written,bound_alt,sum_sqrt_M\n";
    for (const auto& r : summary)
        for (const auto& a : r.groups)
            s += csv_line({std::to_string(r.F), std::to_string(r.m), to_string(a.group.kind), std::to_string(a.group.N),
                           std::to_string(a.order), std::to_string(a.rows), std::to_string(a.failed), format_double(a.GE),
                           format_double(a.train_err), format_double(a.test_err), format_double(a.bound_main),
                           format_double(a.bound_main_as_written), format_double(a.bound_alt), format_double(a.sum_sqrt_M)}) +
                 "\n";
    return s;
}

using CellCallback = std::function<void(const SweepRow&, std::size_t done, std::size_t total)>;

/// Runs every (F, H, m, seed) cell; rows come back in grid order regardless of `jobs`.
inline SweepResult run_sweep(const SweepConfig& c, const CellCallback& progress = {}) {
    c.validate();
    const auto cells = sweep_cells(c);
    std::vector<SweepRow> rows(cells.size());
    std::vector<std::string> errors(cells.size());
    std::mutex mu;
    std::size_t next = 0, done = 0;
    auto worker = [&] {
        for (;;) {
            std::size_t i;
            {
                std::lock_guard<std::mutex> lock(mu);
                if (next >= cells.size()) return;
                i = next++;
            }
            try {
                rows[i] = run_cell(c, cells[i]);
            } catch (const std::exception& e) {
                errors[i] = e.what();
            }
            std::lock_guard<std::mutex> lock(mu);
            ++done;
            if (progress && errors[i].empty()) progress(rows[i], done, cells.size());
        }
    };
    const std::size_t jobs = std::max<std::size_t>(1, std::min(c.jobs, cells.size()));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < jobs; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (std::size_t i = 0; i < cells.size(); ++i)
        if (!errors[i].empty()) throw std::runtime_error("sweep cell " + std::to_string(i) + " failed: " + errors[i]);

    SweepResult res;
    res.rows = std::move(rows);
    res.summary = summarize(c, res.rows);
    res.rows_csv = rows_csv(c, res.rows);
    res.summary_csv = summary_csv(res.summary);
    res.groups_csv = groups_csv(res.summary);
    return res;
}

inline void write_sweep_outputs(const SweepConfig& c, const SweepResult& r) {
    if (c.output_dir.empty()) throw std::invalid_argument("sweep output directory not set");
    std::filesystem::create_directories(c.output_dir);
    auto put = [&](const std::string& name, const std::string& body) {
        std::ofstream f(std::filesystem::path(c.output_dir) / name);
        if (!f) throw std::runtime_error("cannot write " + name);
        f << body;
    };
    put("rows.csv", r.rows_csv);
    put("summary.csv", r.summary_csv);
    put("groups.csv", r.groups_csv);
    json cfg = to_json(c);
    cfg["config_hash"] = hex64(config_hash(c));
    put("config.json", cfg.dump(2) + "\n");
}

}  // namespace equibound
