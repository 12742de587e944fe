#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "equibound/sweep.hpp"
#include "equibound/verify.hpp"

using namespace equibound;

namespace {

constexpr int kOk = 0;
constexpr int kFailed = 1;
constexpr int kInvalidConfig = 2;
constexpr int kMarginNotReached = 3;

struct InvalidConfig : std::runtime_error {
    using std::runtime_error::runtime_error;
};

json load(const std::string& path) {
    try {
        return read_json_file(path);
    } catch (const FormatError&) {
        throw;
    } catch (const std::exception& e) {
        throw InvalidConfig(e.what());
    }
}

// ---------------------------------------------------------------------------
// gen-data

struct GenArgs {
    std::string symmetry = "so2";
    std::size_t D = 6, M = 8, F = 6, m = 3200, test_m = 0;
    std::uint64_t seed = 0;
    bool no_augment = false, random_labels = false;
    double noise_tangent = 0.1, noise_ambient = 0.01;
    std::string out, test_out;
};

int gen_data(const GenArgs& a) {
    const Symmetry s = symmetry_from_string(a.symmetry);
    const bool discrete = s == Symmetry::cyclic || s == Symmetry::dihedral;
    DatasetSpec spec = generate_synthetic(s, discrete ? a.M : a.D, a.F, a.seed, a.noise_tangent, a.noise_ambient);
    const Augment aug = a.no_augment ? Augment::none : Augment::group;
    // same seed derivation as sweep cells, so files and sweep rows agree
    Dataset train = sample(spec, a.m, aug, derive_seed(a.seed, {11, a.m}));
    if (a.random_labels) train = randomize_labels(train, derive_seed(a.seed, {13, a.m}));
    write_json_file(a.out, to_json(train));
    std::cout << "wrote " << train.size() << " samples (dim " << spec.ambient_dim() << ", B=" << train.B << ") to " << a.out << "\n";
    if (a.test_m > 0) {
        if (a.test_out.empty()) throw std::invalid_argument("--test-m needs --test-out");
        Dataset test = sample(spec, a.test_m, aug, derive_seed(a.seed, {12}));
        if (a.random_labels) test = randomize_labels(test, derive_seed(a.seed, {14}));
        write_json_file(a.test_out, to_json(test));
        std::cout << "wrote " << test.size() << " samples to " << a.test_out << "\n";
    }
    return kOk;
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
    std::string data, out, trace, group = "cyclic";
    std::size_t N = 1;
    std::vector<std::size_t> widths{2048, 512};
    TrainConfig cfg;
    std::uint64_t seed = 0;
};

int train_cmd(TrainArgs a) {
    Dataset ds = dataset_from_json(load(a.data));
    auto T = make_irrep_table(build_group(group_kind_from_string(a.group), a.N));
    if (ds.spec.has_reflections() && T->group.kind() == GroupKind::quaternion)
        throw std::invalid_argument("quaternion group does not act on this data");
    RepSpec in = input_representation(ds.spec, T);
    EquivariantNetwork net = build_network(in, channels_for(a.widths, T->group.order()), 2, a.seed);
    a.cfg.seed = derive_seed(a.seed, {1});
    int code = kOk;
    TrainTrace trace;
    try {
        trace = train(net, ds.X, ds.y, a.cfg);
    } catch (const MarginNotReached& e) {
        trace = e.trace;
        std::cerr << "MarginNotReached: " << e.what() << "\n";
        code = kMarginNotReached;
    }
    net.metadata.seed = a.seed;
    write_json_file(a.out, to_json(net));
    if (!a.trace.empty()) {
        std::ofstream f(a.trace);
        f << "epoch,loss,margin_accuracy\n";
        for (const auto& r : trace) f << r.epoch << "," << format_double(r.loss) << "," << format_double(r.margin_accuracy) << "\n";
    }
    std::cout << "epochs=" << net.metadata.epochs << " margin_accuracy=" << net.metadata.final_margin_accuracy
              << " train_err=" << zero_one_error(net, ds.X, ds.y) << " reached=" << (net.metadata.reached ? "true" : "false") << "\n";
    return code;
}

// ---------------------------------------------------------------------------
// bound

struct BoundArgs {
    std::string model, data, test, out;
    double gamma = 0, eta = 0.5, delta = 0.05;
    bool as_written = false;
};

int bound_cmd(const BoundArgs& a) {
    EquivariantNetwork net = network_from_json(load(a.model));
    Dataset ds = dataset_from_json(load(a.data));
    const double gamma = a.gamma > 0 ? a.gamma : (net.metadata.gamma > 0 ? net.metadata.gamma : 10.0);
    BoundInputs bi;
    bi.net = &net;
    bi.m = ds.size();
    bi.gamma = gamma;
    bi.B = ds.B;
    bi.delta = a.delta;
    bi.eta = a.eta;
    bi.empirical_margin_loss = empirical_margin_loss(net, ds.X, ds.y, gamma);
    BoundReport r = compute_bounds(bi);
    r.train_err = zero_one_error(net, ds.X, ds.y);
    if (!a.test.empty()) {
        Dataset te = dataset_from_json(load(a.test));
        r.test_err = zero_one_error(net, te.X, te.y);
        r.GE = r.test_err - r.train_err;
    }
    json j = to_json(r);
    j["as_written"] = a.as_written;
    j["bound"] = a.as_written ? r.bound_main_as_written : r.bound_main;
    if (!a.out.empty()) write_json_file(a.out, j, 2);
    std::cout << j.dump(2) << "\n";
    return kOk;
}

// ---------------------------------------------------------------------------
// verify

struct VerifyArgs {
    std::string model, data;
    std::size_t trials = 1000;
    std::uint64_t seed = 0;
};

int verify_cmd(const VerifyArgs& a) {
    std::vector<CheckResult> results;
    {
        double worst = 0;
        std::size_t n = 0;
        std::vector<FiniteGroup> gs;
        for (std::size_t N = 1; N <= 16; ++N) gs.push_back(cyclic_group(N));
        for (std::size_t N = 1; N <= 8; ++N) gs.push_back(dihedral_group(N));
        gs.push_back(quaternion_group());
        for (const auto& G : gs) {
            auto T = make_irrep_table(G);
            std::size_t s = 0;
            for (const auto& psi : T->irreps) {
                s += psi.dim * psi.dim / static_cast<std::size_t>(psi.type_c);
                if (character_type_oracle(psi, G) != psi.type_c) worst = std::max(worst, 1.0);
                ++n;
            }
            worst = std::max(worst, std::abs(double(s) - double(G.order())));
        }
        results.push_back(CheckResult::make("irrep_dimension_identity", worst, n, 0.0));
    }
    for (const auto& G : {cyclic_group(8), dihedral_group(6)}) results.push_back(fourier_roundtrip(*make_irrep_table(G), 100, a.seed));
    {
        auto T = make_irrep_table(cyclic_group(4));
        auto reg = regular_representation(T);
        results.push_back(mc_tail_check(reg, copies(reg, 2), 1.0, std::max<std::size_t>(a.trials, 1000), {0.5, 1, 2, 3}, a.seed));
    }

    EquivariantNetwork net;
    Eigen::MatrixXd X;
    if (!a.model.empty()) {
        net = network_from_json(load(a.model));
    } else {
        auto T = make_irrep_table(cyclic_group(4));
        net = build_network(restricted_frequency_rep(T, 1, false), {4, 2}, 2, a.seed);
    }
    if (!a.data.empty()) {
        Dataset ds = dataset_from_json(load(a.data));
        if (static_cast<std::size_t>(ds.X.rows()) != net.input_dim()) throw std::invalid_argument("data does not match model input");
        X = ds.X.leftCols(std::min<Eigen::Index>(ds.X.cols(), 100));
    } else {
        Rng rng(derive_seed(a.seed, {7}));
        X = gaussian_matrix(rng, static_cast<Eigen::Index>(net.input_dim()), 100);
    }
    double worst_layer = 0;
    for (const auto& l : net.layers()) worst_layer = std::max(worst_layer, equivariance_violation(l));
    results.push_back(CheckResult::make("layer_equivariance", worst_layer, net.depth(), 1e-10));
    results.push_back(check_equivariance(net, X));
    double min_ratio = std::numeric_limits<double>::infinity();
    for (const auto& l : net.layers()) min_ratio = std::min(min_ratio, spectral_norm(l.matrix()));
    // sigma small enough that most draws satisfy ||U_l|| <= ||W_l|| / L
    double unit = 0;
    {
        Rng rng(derive_seed(a.seed, {8}));
        for (std::size_t l = 0; l < net.depth(); ++l)
            unit = std::max(unit, spectral_norm(random_layer(net.layer(l).in_rep(), net.layer(l).out_rep(), 1.0, rng).matrix()));
    }
    const double sigma = unit > 0 ? 0.5 * min_ratio / (double(net.depth()) * unit) : 1e-3;
    results.push_back(mc_perturbation_check(net, sigma, a.trials, X, a.seed).result);

    bool ok = true;
    for (const auto& r : results) {
        std::cout << format_check(r) << "\n";
        ok = ok && r.passed;
    }
    return ok ? kOk : kFailed;
}

// ---------------------------------------------------------------------------
// sweep

struct SweepArgs {
    std::string config, out;
    std::optional<double> gamma, eta, delta;
    bool as_written = false;
    std::optional<std::size_t> jobs;
};

int sweep_cmd(const SweepArgs& a) {
    json j = a.config.empty() ? json::object() : load(a.config);
    if (a.gamma) j["gamma"] = *a.gamma;
    if (a.eta) j["eta"] = *a.eta;
    if (a.delta) j["delta"] = *a.delta;
    if (a.as_written) j["as_written"] = true;
    if (a.jobs) j["jobs"] = *a.jobs;
    if (!a.out.empty()) j["output_dir"] = a.out;
    SweepConfig c = sweep_config_from_json(j);
    if (c.output_dir.empty()) throw std::invalid_argument("sweep needs an output directory (--out or output_dir)");
    SweepResult r = run_sweep(c, [](const SweepRow& row, std::size_t done, std::size_t total) {
        std::cerr << "[" << done << "/" << total << "] F=" << row.cell.F << " " << to_string(row.cell.group.kind) << row.cell.group.N
                  << " m=" << row.cell.m << " seed=" << row.cell.seed << " epochs=" << row.epochs << (row.reached ? "" : " (margin not reached)")
                  << " GE=" << row.report.GE << " bound=" << row.report.bound_main << "\n";
    });
    write_sweep_outputs(c, r);
    std::cout << r.summary_csv;
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Equivariant MLPs over finite groups and their generalization bounds"};
    app.require_subcommand(1);

    GenArgs g;
    auto* gen = app.add_subcommand("gen-data", "generate a synthetic symmetric dataset");
    gen->add_option("--symmetry", g.symmetry, "so2, o2, cyclic or dihedral")->capture_default_str();
    gen->add_option("--D", g.D, "number of circles (continuous symmetries)")->capture_default_str();
    gen->add_option("--M", g.M, "rotation order (discrete symmetries)")->capture_default_str();
    gen->add_option("--F", g.F, "maximum frequency")->capture_default_str();
    gen->add_option("--m", g.m, "number of training samples")->capture_default_str();
    gen->add_option("--test-m", g.test_m, "also emit a test set of this size");
    gen->add_option("--seed", g.seed, "dataset seed")->capture_default_str();
    gen->add_flag("--no-augment", g.no_augment, "emit representatives without group action");
    gen->add_flag("--random-labels", g.random_labels, "replace labels by coin flips");
    gen->add_option("--noise-tangent", g.noise_tangent)->capture_default_str();
    gen->add_option("--noise-ambient", g.noise_ambient)->capture_default_str();
    gen->add_option("--out", g.out, "training set file")->required();
    gen->add_option("--test-out", g.test_out, "test set file");

    TrainArgs t;
    t.cfg.temperature = 4.0;
    auto* tr = app.add_subcommand("train", "train an equivariant MLP to the margin criterion");
    tr->add_option("--data", t.data, "training set file")->required();
    tr->add_option("--group", t.group, "cyclic, dihedral or quaternion")->capture_default_str();
    tr->add_option("--N", t.N, "rotation order")->capture_default_str();
    tr->add_option("--widths", t.widths, "effective hidden widths")->delimiter(',')->capture_default_str();
    tr->add_option("--gamma", t.cfg.gamma)->capture_default_str();
    tr->add_option("--lr", t.cfg.learning_rate)->capture_default_str();
    tr->add_option("--batch-size", t.cfg.batch_size)->capture_default_str();
    tr->add_option("--max-epochs", t.cfg.max_epochs)->capture_default_str();
    tr->add_option("--target-fraction", t.cfg.target_fraction)->capture_default_str();
    tr->add_option("--temperature", t.cfg.temperature, "cross-entropy is taken on logits / temperature")->capture_default_str();
    tr->add_option("--seed", t.seed, "model seed")->capture_default_str();
    tr->add_option("--out", t.out, "model checkpoint")->required();
    tr->add_option("--trace", t.trace, "per-epoch CSV");

    BoundArgs b;
    auto* bd = app.add_subcommand("bound", "compute the generalization bounds of a trained model");
    bd->add_option("--model", b.model)->required();
    bd->add_option("--data", b.data, "training set the model was fit on")->required();
    bd->add_option("--test", b.test, "test set for the measured generalization error");
    bd->add_option("--gamma", b.gamma, "margin (default: the one used in training)");
    bd->add_option("--eta", b.eta)->capture_default_str();
    bd->add_option("--delta", b.delta)->capture_default_str();
    bd->add_flag("--as-written", b.as_written, "use the literal expression, with gamma^2 in the confidence term, as the bound");
    bd->add_option("--out", b.out, "write the report here as well");

    VerifyArgs v;
    auto* vf = app.add_subcommand("verify", "run the numerical checks; exit 0 iff all pass");
    vf->add_option("--model", v.model);
    vf->add_option("--data", v.data);
    vf->add_option("--trials", v.trials)->capture_default_str();
    vf->add_option("--seed", v.seed)->capture_default_str();

    SweepArgs s;
    auto* sw = app.add_subcommand("sweep", "run a grid of (F, H, m, seed) cells and write CSV summaries");
    sw->add_option("--config", s.config, "JSON sweep config");
    sw->add_option("--out", s.out, "output directory");
    sw->add_option("--gamma", s.gamma);
    sw->add_option("--eta", s.eta);
    sw->add_option("--delta", s.delta);
    sw->add_flag("--as-written", s.as_written);
    sw->add_option("--jobs", s.jobs);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kInvalidConfig;
    }

    try {
        if (*gen) return gen_data(g);
        if (*tr) return train_cmd(t);
        if (*bd) return bound_cmd(b);
        if (*vf) return verify_cmd(v);
        if (*sw) return sweep_cmd(s);
    } catch (const InvalidConfig& e) {
        std::cerr << "invalid config: " << e.what() << "\n";
        return kInvalidConfig;
    } catch (const FormatError& e) {
        std::cerr << "invalid input file: " << e.what() << "\n";
        return kInvalidConfig;
    } catch (const json::exception& e) {
        std::cerr << "invalid input file: " << e.what() << "\n";
        return kInvalidConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid config: " << e.what() << "\n";
        return kInvalidConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFailed;
    }
    return kFailed;
}
