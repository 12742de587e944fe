#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "bounds.hpp"
#include "datasets.hpp"
#include "equivariant.hpp"

namespace equibound {

using json = nlohmann::json;

struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline json to_json(const FiniteGroup& G) {
    json j{{"kind", to_string(G.kind())}};
    j["N"] = G.kind() == GroupKind::quaternion ? 0 : G.N();
    return j;
}

inline FiniteGroup group_from_json(const json& j) {
    return build_group(group_kind_from_string(j.at("kind").get<std::string>()), j.value("N", std::size_t{0}));
}

inline json matrix_rows(const Eigen::MatrixXd& M) {
    json a = json::array();
    for (Eigen::Index i = 0; i < M.rows(); ++i)
        for (Eigen::Index k = 0; k < M.cols(); ++k) a.push_back(M(i, k));
    return a;
}

inline Eigen::MatrixXd matrix_from_rows(const json& a, Eigen::Index rows, Eigen::Index cols) {
    if (a.size() != static_cast<std::size_t>(rows * cols)) throw FormatError("matrix size mismatch");
    Eigen::MatrixXd M(rows, cols);
    std::size_t p = 0;
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index k = 0; k < cols; ++k) M(i, k) = a[p++].get<double>();
    return M;
}

inline json to_json(const RepSpec& r) {
    json j;
    json blocks = json::array();
    for (const auto& b : r.blocks()) blocks.push_back(json::array({r.table().irreps[b.irrep].id, b.multiplicity}));
    j["blocks"] = blocks;
    const auto& basis = r.basis();
    if (basis.is_identity()) {
        j["Q"] = "identity";
        return j;
    }
    j["Q"] = matrix_rows(basis.matrix());
    // factored form, so reloaded layers materialize through the same arithmetic
    json factors = json::array();
    for (const auto& f : basis.factors()) factors.push_back(json{{"size", f.rows()}, {"data", matrix_rows(f)}});
    json fb = json::array();
    for (const auto& b : basis.blocks()) fb.push_back(json::array({b.offset, b.factor}));
    j["factors"] = factors;
    j["factor_blocks"] = fb;
    j["col_of"] = basis.col_of();
    return j;
}

inline RepSpec rep_from_json(const json& j, const IrrepTablePtr& T) {
    std::vector<RepBlock> blocks;
    std::size_t dim = 0;
    for (const auto& b : j.at("blocks")) {
        std::size_t p = T->index_of(b.at(0).get<std::string>());
        std::size_t mlt = b.at(1).get<std::size_t>();
        blocks.push_back({p, mlt});
        dim += mlt * T->irreps[p].dim;
    }
    const auto n = static_cast<Eigen::Index>(dim);
    const json& q = j.at("Q");
    if (q.is_string()) {
        if (q.get<std::string>() != "identity") throw FormatError("Q must be a float array or \"identity\"");
        return RepSpec(T, std::move(blocks), OrthogonalBasis::identity(n));
    }
    if (j.contains("factors")) {
        std::vector<Eigen::MatrixXd> factors;
        for (const auto& f : j.at("factors")) {
            auto s = f.at("size").get<Eigen::Index>();
            factors.push_back(matrix_from_rows(f.at("data"), s, s));
        }
        std::vector<OrthogonalBasis::Block> fb;
        for (const auto& b : j.at("factor_blocks")) fb.push_back({b.at(0).get<Eigen::Index>(), b.at(1).get<std::size_t>()});
        auto col_of = j.at("col_of").get<std::vector<Eigen::Index>>();
        return RepSpec(T, std::move(blocks), OrthogonalBasis::structured(n, std::move(factors), std::move(fb), std::move(col_of)));
    }
    return RepSpec(T, std::move(blocks), OrthogonalBasis::dense(matrix_from_rows(q, n, n)));
}

inline json to_json(const EquivariantNetwork& net) {
    json j;
    j["format"] = "equibound-model";
    j["version"] = 1;
    j["group"] = to_json(net.group());
    j["n_classes"] = net.output_dim();
    json layers = json::array();
    for (const auto& l : net.layers()) {
        json lj;
        lj["in_rep"] = to_json(l.in_rep());
        lj["out_rep"] = to_json(l.out_rep());
        json coeffs = json::object();
        const auto& p = l.parameters();
        for (const auto& b : l.coefficient_blocks()) {
            const auto& id = l.in_rep().table().irreps[b.irrep].id;
            for (std::size_t jo = 0; jo < b.m_out; ++jo)
                for (std::size_t i = 0; i < b.m_in; ++i) {
                    json v = json::array();
                    for (std::size_t k = 0; k < b.c; ++k) v.push_back(p(static_cast<Eigen::Index>(b.index(jo, i, k))));
                    coeffs[id + "/" + std::to_string(jo) + "/" + std::to_string(i)] = v;
                }
        }
        lj["coefficients"] = coeffs;
        layers.push_back(lj);
    }
    j["layers"] = layers;
    const auto& md = net.metadata;
    j["metadata"] = {{"gamma", md.gamma},
                     {"init_seed", md.init_seed},
                     {"seed", md.seed},
                     {"epochs", md.epochs},
                     {"final_margin_accuracy", md.final_margin_accuracy},
                     {"reached", md.reached}};
    return j;
}

inline EquivariantNetwork network_from_json(const json& j) {
    if (j.value("format", std::string{}) != "equibound-model") throw FormatError("not a model checkpoint");
    auto T = make_irrep_table(group_from_json(j.at("group")));
    std::vector<EquivariantLayer> layers;
    for (const auto& lj : j.at("layers")) {
        EquivariantLayer layer(rep_from_json(lj.at("in_rep"), T), rep_from_json(lj.at("out_rep"), T));
        Eigen::VectorXd p = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(layer.parameter_count()));
        const json& coeffs = lj.at("coefficients");
        std::size_t seen = 0;
        for (const auto& b : layer.coefficient_blocks()) {
            const auto& id = T->irreps[b.irrep].id;
            for (std::size_t jo = 0; jo < b.m_out; ++jo)
                for (std::size_t i = 0; i < b.m_in; ++i) {
                    const json& v = coeffs.at(id + "/" + std::to_string(jo) + "/" + std::to_string(i));
                    if (v.size() != b.c) throw FormatError("coefficient vector length mismatch for " + id);
                    for (std::size_t k = 0; k < b.c; ++k) p(static_cast<Eigen::Index>(b.index(jo, i, k))) = v[k].get<double>();
                    ++seen;
                }
        }
        if (seen != coeffs.size()) throw FormatError("checkpoint has coefficients for blocks the layer does not have");
        layer.set_parameters(p);
        layers.push_back(std::move(layer));
    }
    EquivariantNetwork net(std::move(layers));
    if (j.contains("metadata")) {
        const json& md = j["metadata"];
        net.metadata.gamma = md.value("gamma", 0.0);
        net.metadata.init_seed = md.value("init_seed", std::uint64_t{0});
        net.metadata.seed = md.value("seed", std::uint64_t{0});
        net.metadata.epochs = md.value("epochs", std::size_t{0});
        net.metadata.final_margin_accuracy = md.value("final_margin_accuracy", 0.0);
        net.metadata.reached = md.value("reached", false);
    }
    return net;
}

inline json to_json(const DatasetSpec& s) {
    json reps = json::array();
    for (const auto& r : s.representatives) reps.push_back(std::vector<double>(r.data(), r.data() + r.size()));
    return {{"symmetry", to_string(s.symmetry)},
            {"M", s.M},
            {"D", s.D},
            {"F", s.F},
            {"frequencies", s.frequencies},
            {"representatives", reps},
            {"labels", s.labels},
            {"noise_sigma_tangent", s.noise_sigma_tangent},
            {"noise_sigma_ambient", s.noise_sigma_ambient},
            {"seed", s.seed}};
}

inline DatasetSpec dataset_spec_from_json(const json& j) {
    DatasetSpec s;
    s.symmetry = symmetry_from_string(j.at("symmetry").get<std::string>());
    s.M = j.at("M").get<std::size_t>();
    s.D = j.at("D").get<std::size_t>();
    s.F = j.at("F").get<std::size_t>();
    s.frequencies = j.at("frequencies").get<std::vector<std::size_t>>();
    for (const auto& r : j.at("representatives")) {
        auto v = r.get<std::vector<double>>();
        s.representatives.push_back(Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
    }
    s.labels = j.at("labels").get<std::vector<int>>();
    s.noise_sigma_tangent = j.at("noise_sigma_tangent").get<double>();
    s.noise_sigma_ambient = j.at("noise_sigma_ambient").get<double>();
    s.seed = j.at("seed").get<std::uint64_t>();
    if (s.frequencies.size() != s.D) throw FormatError("frequency list does not match D");
    return s;
}

inline json to_json(const Dataset& d) {
    json samples = json::array();
    for (Eigen::Index c = 0; c < d.X.cols(); ++c) {
        Eigen::VectorXd x = d.X.col(c);
        samples.push_back(std::vector<double>(x.data(), x.data() + x.size()));
    }
    json prov = json::array();
    for (const auto& p : d.provenance) prov.push_back(json::array({p.representative, p.angle, p.reflected, p.original_label}));
    return {{"format", "equibound-dataset"},
            {"spec", to_json(d.spec)},
            {"samples", samples},
            {"labels", d.y},
            {"provenance", prov},
            {"B", d.B},
            {"augment", d.augment == Augment::group ? "group" : "none"},
            {"sample_seed", d.sample_seed},
            {"random_labels", d.random_labels},
            {"label_seed", d.label_seed}};
}

inline Dataset dataset_from_json(const json& j) {
    if (j.value("format", std::string{}) != "equibound-dataset") throw FormatError("not a dataset file");
    Dataset d;
    d.spec = dataset_spec_from_json(j.at("spec"));
    const json& samples = j.at("samples");
    const auto dim = static_cast<Eigen::Index>(d.spec.ambient_dim());
    d.X.resize(dim, static_cast<Eigen::Index>(samples.size()));
    for (std::size_t c = 0; c < samples.size(); ++c) {
        auto v = samples[c].get<std::vector<double>>();
        if (static_cast<Eigen::Index>(v.size()) != dim) throw FormatError("sample dimension mismatch");
        d.X.col(static_cast<Eigen::Index>(c)) = Eigen::Map<Eigen::VectorXd>(v.data(), dim);
    }
    d.y = j.at("labels").get<std::vector<int>>();
    if (d.y.size() != samples.size()) throw FormatError("label count mismatch");
    for (const auto& p : j.at("provenance"))
        d.provenance.push_back({p.at(0).get<std::size_t>(), p.at(1).get<double>(), p.at(2).get<bool>(), p.at(3).get<int>()});
    d.B = j.at("B").get<double>();
    d.augment = j.at("augment").get<std::string>() == "group" ? Augment::group : Augment::none;
    d.sample_seed = j.at("sample_seed").get<std::uint64_t>();
    d.random_labels = j.at("random_labels").get<bool>();
    d.label_seed = j.at("label_seed").get<std::uint64_t>();
    return d;
}

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw FormatError(path + ": " + e.what());
    }
}

inline void write_json_file(const std::string& path, const json& j, int indent = -1) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(indent) << "\n";
}

// ---------------------------------------------------------------------------
// BoundReport rows

inline std::vector<std::string> bound_report_columns(std::size_t L) {
    std::vector<std::string> c{"group_kind", "N", "|H|", "m", "gamma", "eta", "delta", "B",
                               "train_err", "train_margin_loss", "test_err", "GE"};
    for (std::size_t l = 1; l <= L; ++l) {
        c.push_back("spec_norm_" + std::to_string(l));
        c.push_back("frob_norm_" + std::to_string(l));
        c.push_back("fourier_frob_" + std::to_string(l));
    }
    for (std::size_t l = 1; l <= L; ++l) c.push_back("M_" + std::to_string(l));
    for (const char* s : {"xi_m", "sigma0", "kl_term", "bound_main", "bound_main_as_written", "bound_groupconv", "bound_alt"})
        c.emplace_back(s);
    return c;
}

inline std::vector<std::string> bound_report_values(const BoundReport& r) {
    std::vector<std::string> v{r.group_kind,
                               std::to_string(r.N),
                               std::to_string(r.group_order),
                               std::to_string(r.m),
                               format_double(r.gamma),
                               format_double(r.eta),
                               format_double(r.delta),
                               format_double(r.B),
                               format_double(r.train_err),
                               format_double(r.train_margin_loss),
                               format_double(r.test_err),
                               format_double(r.GE)};
    for (const auto& l : r.layers) {
        v.push_back(format_double(l.spectral_norm));
        v.push_back(format_double(l.frobenius));
        v.push_back(format_double(l.fourier_frobenius));
    }
    for (const auto& l : r.layers) v.push_back(format_double(l.M));
    for (double x : {r.xi_m, r.sigma0, r.kl_term, r.bound_main, r.bound_main_as_written, r.bound_groupconv, r.bound_alt})
        v.push_back(format_double(x));
    return v;
}

inline std::string csv_line(const std::vector<std::string>& cells) {
    std::string s;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) s += ',';
        s += cells[i];
    }
    return s;
}

inline json to_json(const BoundReport& r) {
    json layers = json::array();
    for (const auto& l : r.layers)
        layers.push_back({{"spectral_norm", l.spectral_norm}, {"frobenius", l.frobenius}, {"fourier_frobenius", l.fourier_frobenius}, {"M", l.M}});
    auto num = [](double x) { return std::isfinite(x) ? json(x) : json(nullptr); };
    return {{"group_kind", r.group_kind},
            {"N", r.N},
            {"order", r.group_order},
            {"m", r.m},
            {"gamma", r.gamma},
            {"eta", r.eta},
            {"delta", r.delta},
            {"B", r.B},
            {"train_err", num(r.train_err)},
            {"train_margin_loss", r.train_margin_loss},
            {"test_err", num(r.test_err)},
            {"GE", num(r.GE)},
            {"layers", layers},
            {"beta_product", r.beta_product},
            {"sum_sqrt_M", r.sum_sqrt_M},
            {"xi_m", r.xi_m},
            {"sigma0", r.sigma0},
            {"kl_term", r.kl_term},
            {"bound_main", r.bound_main},
            {"bound_main_as_written", r.bound_main_as_written},
            {"bound_groupconv", num(r.bound_groupconv)},
            {"bound_alt", r.bound_alt},
            {"bound_alt_order_level", true},
            {"D_H", r.D_H},
            {"E_H", r.E_H},
            {"Q_H", num(r.Q_H)},
            {"h", r.h}};
}

}  // namespace equibound
