#include "egren/jobs.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include <fmt/core.h>

#include "egren/causal.hpp"
#include "egren/cone.hpp"
#include "egren/distribution.hpp"
#include "egren/errors.hpp"
#include "egren/extension.hpp"
#include "egren/wick.hpp"

namespace egren {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

TolerancePolicy TolerancePolicy::named(std::string_view profile) {
    TolerancePolicy p;
    p.profile = std::string(profile);
    if (profile == "fast")
        p.rel_tol = 1e-6;
    else if (profile == "default")
        p.rel_tol = 1e-8;
    else if (profile == "strict")
        p.rel_tol = 1e-10;
    else
        fail(ErrorKind::Schema, fmt::format("unknown tolerance profile '{}' (fast, default, strict)", profile));
    return p;
}

TolerancePolicy TolerancePolicy::from_environment() {
    const char* env = std::getenv("EGREN_TOL_PROFILE");
    return named(env && *env ? env : "default");
}

const std::vector<std::string>& job_commands() {
    static const std::vector<std::string> c{"sd", "extend", "wf", "cover", "glue", "wick", "classify", "probe"};
    return c;
}

namespace {

[[noreturn]] void schema(const std::string& what) { fail(ErrorKind::Schema, what); }

// `where` names a nested object; the top level also takes version, seed and tol
void check_keys(const json& j, std::initializer_list<const char*> allowed, std::initializer_list<const char*> required,
                const char* where = nullptr) {
    if (!j.is_object()) schema(where ? fmt::format("'{}' must be a JSON object", where) : "spec must be a JSON object");
    for (const char* k : required)
        if (!j.contains(k)) schema(fmt::format("missing field '{}'", k));
    std::set<std::string> ok;
    if (!where) ok = {"version", "seed", "tol"};
    for (const char* k : allowed) ok.insert(k);
    for (const auto& [k, v] : j.items())
        if (!ok.count(k)) schema(fmt::format("unknown field '{}'", k));
    if (j.contains("version") && !(j["version"].is_number_integer() && j["version"].get<int>() == kSchemaVersion))
        schema(fmt::format("schema version {} is not supported (expected {})", j["version"].dump(), kSchemaVersion));
}

int as_int(const json& j, const std::string& what) {
    if (!j.is_number_integer()) schema(fmt::format("'{}' must be an integer", what));
    return j.get<int>();
}

double as_double(const json& j, const std::string& what) {
    if (!j.is_number()) schema(fmt::format("'{}' must be a number", what));
    return j.get<double>();
}

bool as_bool(const json& j, const std::string& what) {
    if (!j.is_boolean()) schema(fmt::format("'{}' must be true or false", what));
    return j.get<bool>();
}

std::string as_string(const json& j, const std::string& what) {
    if (!j.is_string()) schema(fmt::format("'{}' must be a string", what));
    return j.get<std::string>();
}

int get_int(const json& j, const char* key, int def) { return j.contains(key) ? as_int(j[key], key) : def; }

const json& as_array(const json& j, const std::string& what) {
    if (!j.is_array()) schema(fmt::format("'{}' must be an array", what));
    return j;
}

std::vector<int> int_list(const json& j, const std::string& what) {
    std::vector<int> v;
    for (const auto& e : as_array(j, what)) v.push_back(as_int(e, what));
    return v;
}

mpq_class as_rational(const json& j, const std::string& what) {
    try {
        if (j.is_string()) return parse_rational(j.get<std::string>());
        if (j.is_number()) return parse_rational(j.dump());
    } catch (const Error& e) {
        schema(fmt::format("'{}': {}", what, e.what()));
    }
    schema(fmt::format("'{}' must be a rational (\"p/q\" or a number)", what));
}

std::vector<mpq_class> rational_list(const json& j, const std::string& what) {
    std::vector<mpq_class> v;
    for (const auto& e : as_array(j, what)) v.push_back(as_rational(e, what));
    return v;
}

std::vector<std::vector<mpq_class>> rational_rows(const json& j, const std::string& what) {
    std::vector<std::vector<mpq_class>> v;
    for (const auto& e : as_array(j, what)) v.push_back(rational_list(e, what));
    return v;
}

json rational_json(const std::vector<mpq_class>& v) {
    json a = json::array();
    for (const auto& q : v) a.push_back(format_rational(q));
    return a;
}

Eigen::VectorXd vector_of(const json& j, const std::string& what) {
    const auto& a = as_array(j, what);
    Eigen::VectorXd v(static_cast<Eigen::Index>(a.size()));
    for (std::size_t i = 0; i < a.size(); ++i) v(static_cast<Eigen::Index>(i)) = as_double(a[i], what);
    return v;
}

int positive_dim(const json& spec) {
    const int d = as_int(spec.at("d"), "d");
    if (d < 1) schema("'d' must be at least 1");
    return d;
}

QuadratureConfig quadrature_for(double rel_tol) {
    QuadratureConfig q;
    q.rel_tol = rel_tol;
    return q;
}

CutoffFamily cutoff_of(const json& spec, const char* key) {
    CutoffFamily c;
    if (!spec.contains(key)) return c;
    const json& j = spec[key];
    check_keys(j, {"eps", "R"}, {}, key);
    if (j.contains("eps")) c.eps = as_double(j["eps"], "eps");
    if (j.contains("R")) c.R = as_double(j["R"], "R");
    if (!(c.eps > 0 && c.R > c.eps)) schema(fmt::format("'{}' needs 0 < eps < R", key));
    return c;
}

// kernel string and/or delta list on R^dim
DistributionKernel distribution_of(const json& spec, int dim, double rel_tol) {
    if (!spec.contains("kernel") && !spec.contains("delta")) schema("need 'kernel' and/or 'delta'");
    std::optional<DistributionKernel> t;
    if (spec.contains("kernel")) t = DistributionKernel::regular(dim, as_string(spec["kernel"], "kernel"));
    if (spec.contains("delta")) {
        std::vector<std::pair<MultiIndex, double>> terms;
        for (const auto& e : as_array(spec["delta"], "delta")) {
            check_keys(e, {"alpha", "coeff"}, {"alpha"}, "delta");
            MultiIndex alpha = int_list(e["alpha"], "alpha");
            if (static_cast<int>(alpha.size()) != dim) schema(fmt::format("delta alpha must have {} entries", dim));
            for (int a : alpha)
                if (a < 0) schema("delta alpha entries must be nonnegative");
            terms.emplace_back(std::move(alpha), e.contains("coeff") ? as_double(e["coeff"], "coeff") : 1.0);
        }
        const auto dl = DistributionKernel::delta(dim, terms);
        t = t ? *t + dl : dl;
    }
    t->set_quadrature(quadrature_for(rel_tol));
    return *t;
}

std::vector<std::pair<MultiIndex, double>> constants_of(const json& spec, int dim) {
    std::vector<std::pair<MultiIndex, double>> c;
    if (!spec.contains("constants")) return c;
    for (const auto& e : as_array(spec["constants"], "constants")) {
        check_keys(e, {"alpha", "value"}, {"alpha", "value"}, "constants");
        MultiIndex alpha = int_list(e["alpha"], "alpha");
        if (static_cast<int>(alpha.size()) != dim) schema(fmt::format("constant alpha must have {} entries", dim));
        c.emplace_back(std::move(alpha), as_double(e["value"], "value"));
    }
    return c;
}

ojson scaling_json(const DyadicScalingReport& r, std::string& csv) {
    ojson out;
    out["estimate"] = r.estimate;
    out["residual"] = r.residual;
    out["exact"] = r.exact;
    out["n_max"] = r.n_max;
    ojson probes = ojson::array();
    csv = "probe,n,lambda,abs_value,error,informative\n";
    for (std::size_t i = 0; i < r.probes.size(); ++i) {
        const auto& p = r.probes[i];
        probes.push_back({{"slope", p.slope}, {"residual", p.residual}, {"informative", p.informative}});
        for (const auto& s : p.samples)
            csv += fmt::format("{},{},{:.17g},{:.17g},{:.17g},{}\n", i, s.n, s.lambda, s.abs_value, s.error,
                               s.informative ? 1 : 0);
    }
    out["probes"] = probes;
    return out;
}

struct Ctx {
    const json& spec;
    std::uint64_t seed;
    double rel_tol;
    std::string csv;
};

// ------------------------------------------------------------------ jobs

ojson job_sd(Ctx& c) {
    const json& s = c.spec;
    check_keys(s, {"d", "kernel", "delta", "n_max", "surface"}, {"d"});
    const int d = positive_dim(s);
    ScalingOptions so;
    so.n_max = get_int(s, "n_max", so.n_max);
    if (so.n_max < 4) schema("'n_max' must be at least 4");
    if (s.contains("surface")) {
        check_keys(s["surface"], {"n"}, {}, "surface");
        const int n = get_int(s["surface"], "n", 2);
        if (n < 2) schema("surface 'n' must be at least 2");
        if (s.contains("delta")) schema("surface scaling degrees take a 'kernel' only");
        const DistributionKernel t = distribution_of(s, d * n, c.rel_tol);
        const auto fib = SurfaceFibration::total_diagonal(d, n);
        double fiber_sd = 0;
        for (const auto& comp : chart_kernel(t, fib).components()) fiber_sd = std::max(fiber_sd, comp.block_sd[1]);
        ojson out = scaling_json(
            transversal_scaling_degree(t, fib, surface_probes(fib, fiber_sd < fib.codimension()), so), c.csv);
        out["locus"] = fmt::format("total diagonal of (R^{})^{}", d, n);
        return out;
    }
    const DistributionKernel t = distribution_of(s, d, c.rel_tol);
    ojson out = scaling_json(scaling_degree_estimate(t, probes_for(t), so), c.csv);
    out["locus"] = "origin";
    return out;
}

ojson job_extend(Ctx& c) {
    const json& s = c.spec;
    check_keys(s,
               {"d", "kernel", "mode", "n", "cutoff", "weight", "w_order", "constants", "sd", "shells", "probes",
                "sd_after"},
               {"d", "kernel"});
    const int d = positive_dim(s);
    const std::string mode = s.contains("mode") ? as_string(s["mode"], "mode") : "point";
    if (mode != "point" && mode != "diagonal") schema("'mode' must be point or diagonal");
    ExtensionOptions opt;
    opt.cutoff = cutoff_of(s, "cutoff");
    const CutoffFamily weight = cutoff_of(s, "weight");
    opt.n_max = get_int(s, "shells", opt.n_max);
    if (s.contains("sd")) opt.sd = as_double(s["sd"], "sd");

    int n = 1;
    std::optional<SurfaceFibration> fib;
    if (mode == "diagonal") {
        n = get_int(s, "n", 2);
        if (n < 2) schema("'n' must be at least 2 in diagonal mode");
        if (s.contains("w_order")) schema("'w_order' is only available in point mode");
        fib = SurfaceFibration::total_diagonal(d, n);
    } else if (s.contains("n")) {
        schema("'n' is only used in diagonal mode");
    }
    const int D = d * n;
    const DistributionKernel t0 = distribution_of(s, D, c.rel_tol);
    const int codim = fib ? fib->codimension() : d;
    const auto constants = constants_of(s, codim);

    std::optional<ExtensionResult> e;
    if (fib) {
        e = extend_at_surface(t0, *fib, opt, weight, constants);
    } else if (s.contains("w_order")) {
        const int rho = as_int(s["w_order"], "w_order");
        if (rho < 0) schema("'w_order' must be nonnegative");
        e = extend_with_w(t0, build_w_operator(d, rho, weight), constants, opt);
    } else {
        const double sd = extension_scaling_degree(t0, opt);
        opt.sd = sd;
        if (sd < d) {
            if (!constants.empty()) schema("the extension is unique: no constants can be supplied");
            e = extend_unique(t0, opt);
        } else {
            e = extend_with_w(t0, build_w_operator(d, sd - d, weight), constants, opt);
        }
    }

    int count = 5;
    if (s.contains("probes")) {
        check_keys(s["probes"], {"count"}, {}, "probes");
        count = get_int(s["probes"], "count", count);
        if (count < 0 || count > 1000) schema("probe count must be in 0..1000");
    }
    std::mt19937_64 rng(c.seed);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    ojson probes = ojson::array();
    for (int p = 0; p < count; ++p) {
        Eigen::VectorXd centre(D);
        for (int i = 0; i < D; ++i) centre(i) = 0.5 * U(rng);
        const double radius = 0.75 + 0.25 * U(rng);
        const double tilt = U(rng);
        MultiIndex x1 = zero_index(D);
        x1[0] = 1;
        const TestFunction phi = TestFunction::bump(centre, radius, {{zero_index(D), 1.0}, {x1, tilt}});
        const PairingValue v = e->pair(phi);
        probes.push_back({{"centre", std::vector<double>(centre.data(), centre.data() + D)},
                          {"radius", radius},
                          {"x1_coefficient", tilt},
                          {"value", v.value},
                          {"error", v.error}});
    }

    ojson out;
    out["mode"] = e->mode() == ExtensionMode::Unique ? "Unique" : "Ambiguous";
    out["locus"] = fib ? fmt::format("total diagonal of (R^{})^{}", d, n) : std::string("origin");
    out["codimension"] = codim;
    out["sd_before"] = e->input_sd();
    out["rho"] = e->rho();
    out["ambiguity_dimension"] = e->ambiguity_dim();
    ojson cs = ojson::array();
    for (const auto& [alpha, v] : e->constants()) cs.push_back({{"alpha", alpha}, {"value", v}});
    out["constants"] = cs;
    out["probes"] = probes;
    if (s.contains("sd_after")) {
        check_keys(s["sd_after"], {"n_max"}, {}, "sd_after");
        ScalingOptions so;
        so.n_max = get_int(s["sd_after"], "n_max", 40);
        if (so.n_max < 4) schema("'sd_after.n_max' must be at least 4");
        const DyadicScalingReport r = fib ? transversal_scaling_degree(*e, surface_probes(*fib, true), so)
                                          : scaling_degree_estimate(*e, default_probes(d), so);
        out["sd_after"] = scaling_json(r, c.csv);
    }
    return out;
}

ConeGenerators cone_of(const json& j) {
    check_keys(j, {"base", "generators"}, {"generators"}, "cone");
    ConeGenerators g;
    if (j.contains("base")) g.base = rational_list(j["base"], "base");
    g.generators = rational_rows(j["generators"], "generators");
    try {
        g.validate();
    } catch (const Error& e) {
        schema(e.what());
    }
    return g;
}

ojson verdict_json(const ConeVerdict& v) {
    ojson out;
    out["verdict"] = std::string(to_string(v.verdict));
    out["multiplicity_bound"] = v.multiplicity_bound;
    out["graphs_tried"] = v.graphs_tried;
    out["lp_solves"] = v.lp_solves;
    if (!v.note.empty()) out["note"] = v.note;
    if (v.witness) {
        ojson edges = ojson::array();
        for (const auto& e : v.witness->edges) {
            // k_e = beta (1, n) with n a unit-speed null direction
            const mpq_class beta = e.k[0];
            std::vector<mpq_class> dir(e.k);
            for (auto& q : dir) q /= beta;
            edges.push_back({{"s", e.s}, {"r", e.r}, {"k", rational_json(e.k)}, {"beta", format_rational(beta)},
                             {"direction", rational_json(dir)}});
        }
        out["witness"] = {{"edges", edges}};
    }
    return out;
}

ojson job_wf(Ctx& c) {
    const json& s = c.spec;
    check_keys(s,
               {"mode", "d", "points", "covectors", "degrees", "direction_grid", "multiplicity_bound", "A", "B",
                "cones", "basis"},
               {"mode"});
    const std::string mode = as_string(s["mode"], "mode");
    ojson out;
    out["mode"] = mode;
    if (mode == "hormander") {
        if (!s.contains("A") || !s.contains("B")) schema("hormander needs 'A' and 'B'");
        out["product_allowed"] = hormander_product_check(cone_of(s["A"]), cone_of(s["B"]));
        return out;
    }
    if (mode == "restriction") {
        if (!s.contains("cones") || !s.contains("basis")) schema("restriction needs 'cones' and 'basis'");
        std::vector<ConeGenerators> cones;
        for (const auto& j : as_array(s["cones"], "cones")) cones.push_back(cone_of(j));
        out["restriction_allowed"] = restriction_allowed(cones, rational_rows(s["basis"], "basis"));
        return out;
    }
    if (!s.contains("d") || !s.contains("points") || !s.contains("covectors"))
        schema("this mode needs 'd', 'points' and 'covectors'");
    CovectorConfig cc;
    cc.d = positive_dim(s);
    cc.points = rational_rows(s["points"], "points");
    cc.covectors = rational_rows(s["covectors"], "covectors");
    if (mode == "commutator" || mode == "hadamard" || mode == "feynman") {
        if (cc.points.size() != 2 || cc.covectors.size() != 2) schema("two points and two covectors expected");
        cc.point_config().validate();
        const auto f = mode == "commutator" ? wf_commutator_member
                       : mode == "hadamard" ? wf2_hadamard_member
                                            : wf_feynman_member;
        out["member"] = f(cc.points[0], cc.covectors[0], cc.points[1], cc.covectors[1]);
        return out;
    }
    if (mode != "gamma_to" && mode != "digamma")
        schema("'mode' must be commutator, hadamard, feynman, gamma_to, digamma, hormander or restriction");
    ImmersionOptions io;
    io.multiplicity_bound = get_int(s, "multiplicity_bound", io.multiplicity_bound);
    if (s.contains("direction_grid")) io.direction_grid = rational_rows(s["direction_grid"], "direction_grid");
    ConeVerdict v;
    if (mode == "gamma_to") {
        if (s.contains("degrees")) schema("'degrees' is only used by digamma");
        v = gamma_to_member(cc, io);
    } else {
        if (!s.contains("degrees")) schema("digamma needs 'degrees'");
        v = digamma_member(cc, int_list(s["degrees"], "degrees"), io);
    }
    ojson r = verdict_json(v);
    for (auto& [k, val] : r.items()) out[k] = val;
    return out;
}

PointConfig config_of(const json& s) {
    PointConfig cfg;
    cfg.d = positive_dim(s);
    cfg.points = rational_rows(s["points"], "points");
    cfg.validate();
    return cfg;
}

Subset subset_of(const json& j, const std::string& what, int n) {
    Subset I = int_list(j, what);
    validate_subset(I, n, true);
    return I;
}

ojson job_cover(Ctx& c) {
    const json& s = c.spec;
    check_keys(s, {"d", "points", "subset"}, {"d", "points"});
    const PointConfig cfg = config_of(s);
    ojson out;
    std::optional<Subset> I;
    if (s.contains("subset")) I = subset_of(s["subset"], "subset", cfg.size());
    const CoverResult r = cover_witness(cfg);
    if (r.on_diagonal) {
        out["verdict"] = "OnDiagonal";
        return out;
    }
    out["verdict"] = "Covered";
    out["witness"] = r.witness;
    out["members"] = r.members;
    ojson w = ojson::array();
    for (const auto& [set, q] : partition_weights(cfg).weights) w.push_back({{"subset", set}, {"weight", format_rational(q)}});
    out["weights"] = w;
    if (I) out["subset_member"] = c_i_member(cfg, *I);
    return out;
}

ojson job_glue(Ctx& c) {
    const json& s = c.spec;
    check_keys(s, {"d", "points", "I1", "I2", "trace"}, {"d", "points", "I1", "I2"});
    const PointConfig cfg = config_of(s);
    const Subset I1 = subset_of(s["I1"], "I1", cfg.size());
    const Subset I2 = subset_of(s["I2"], "I2", cfg.size());
    const bool want_trace = s.contains("trace") && as_bool(s["trace"], "trace");
    std::vector<std::string> trace;
    const bool ok = glue_consistency(cfg, I1, I2, want_trace ? &trace : nullptr);
    auto nf = [&](const Subset& I) {
        TOWord w{{TOFactor{I, false}, TOFactor{complement(I, cfg.size()), false}}};
        return causal_factorize(w, cfg).str();
    };
    ojson out;
    out["consistent"] = ok;
    out["normal_form_I1"] = nf(I1);
    out["normal_form_I2"] = nf(I2);
    if (want_trace) out["trace"] = trace;
    return out;
}

ojson job_wick(Ctx& c) {
    const json& s = c.spec;
    check_keys(s, {"m", "saturated", "d"}, {"m"});
    const std::vector<int> m = int_list(s["m"], "m");
    const bool saturated = s.contains("saturated") && as_bool(s["saturated"], "saturated");
    std::optional<int> d;
    if (s.contains("d")) {
        d = as_int(s["d"], "d");
        if (*d < 2) schema("'d' must be at least 2");
    }
    std::vector<WickTerm> terms;
    if (saturated) {
        for (const auto& g : enumerate_saturated_graphs(m))
            terms.push_back({g, wick_coefficient(g, m), std::vector<int>(m.size(), 0)});
    } else {
        terms = wick_expand(m);
    }
    ojson list = ojson::array();
    mpz_class total = 0;
    for (const auto& t : terms) {
        ojson row;
        row["a"] = t.graph.upper();
        row["graph"] = t.graph.str();
        row["coefficient"] = t.coefficient.get_str();
        row["residual"] = t.residual;
        row["edges"] = t.graph.edges();
        row["loops"] = t.graph.loops();
        row["components"] = t.graph.components();
        if (d) {
            row["omega"] = graph_scaling_degree(t.graph, *d);
            row["rho"] = divergence_degree(t.graph, *d);
        }
        total += t.coefficient;
        list.push_back(row);
    }
    ojson out;
    out["m"] = m;
    out["saturated"] = saturated;
    out["count"] = terms.size();
    out["coefficient_sum"] = total.get_str();
    out["terms"] = list;
    return out;
}

ojson job_classify(Ctx& c) {
    const json& s = c.spec;
    check_keys(s, {"d", "terms", "k", "n_max"}, {"d"});
    const int d = as_int(s["d"], "d");
    std::vector<int> powers;
    ojson labels = ojson::array();
    if (s.contains("k") == s.contains("terms")) schema("give exactly one of 'k' and 'terms'");
    if (s.contains("k")) {
        powers.push_back(as_int(s["k"], "k"));
    } else {
        for (const auto& t : as_array(s["terms"], "terms")) {
            check_keys(t, {"power", "label"}, {"power"}, "terms");
            powers.push_back(as_int(t["power"], "power"));
            labels.push_back(t.contains("label") ? as_string(t["label"], "label") : std::string());
        }
    }
    const ClassificationReport r = classify_interaction(d, powers, get_int(s, "n_max", 8));
    ojson out;
    out["d"] = r.d;
    out["powers"] = r.exponents;
    if (!labels.empty()) out["labels"] = labels;
    out["k_max"] = r.k_max;
    out["verdict"] = std::string(to_string(r.verdict));
    if (r.threshold)
        out["threshold"] = *r.threshold;
    else
        out["threshold"] = nullptr;
    out["rho_slope"] = r.slope;
    if (r.verdict == Renormalizability::Superrenormalizable) out["last_divergent_order"] = r.last_divergent_order;
    ojson table = ojson::array();
    c.csv = "n,omega,rho,ambiguity\n";
    for (const auto& row : r.table) {
        table.push_back({{"n", row.n}, {"omega", row.omega}, {"rho", row.rho}, {"ambiguity", row.ambiguity.get_str()}});
        c.csv += fmt::format("{},{},{},{}\n", row.n, row.omega, row.rho, row.ambiguity.get_str());
    }
    out["table"] = table;
    if (!r.note.empty()) out["note"] = r.note;
    return out;
}

ojson job_probe(Ctx& c) {
    const json& s = c.spec;
    check_keys(s, {"d", "kernel", "delta", "chi", "directions", "N", "s_min", "s_max", "samples"},
               {"d", "directions"});
    const int d = positive_dim(s);
    const DistributionKernel t = distribution_of(s, d, c.rel_tol);
    Eigen::VectorXd centre = Eigen::VectorXd::Zero(d);
    double radius = 1.0;
    if (s.contains("chi")) {
        check_keys(s["chi"], {"centre", "radius"}, {}, "chi");
        if (s["chi"].contains("centre")) centre = vector_of(s["chi"]["centre"], "centre");
        if (s["chi"].contains("radius")) radius = as_double(s["chi"]["radius"], "radius");
        if (centre.size() != d || !(radius > 0)) schema("'chi' needs a centre of dimension d and a positive radius");
    }
    std::vector<Eigen::VectorXd> dirs;
    for (const auto& j : as_array(s["directions"], "directions")) {
        dirs.push_back(vector_of(j, "directions"));
        if (dirs.back().size() != d || dirs.back().norm() == 0) schema("directions must be nonzero vectors of dimension d");
    }
    FourierOptions fo;
    if (s.contains("s_min")) fo.s_min = as_double(s["s_min"], "s_min");
    if (s.contains("s_max")) fo.s_max = as_double(s["s_max"], "s_max");
    fo.samples = get_int(s, "samples", fo.samples);
    const int N = get_int(s, "N", 4);
    const auto reps = fourier_decay_probe(t, TestFunction::bump(centre, radius), dirs, N, fo);
    ojson list = ojson::array();
    c.csv = "direction,s,amplitude\n";
    for (std::size_t i = 0; i < reps.size(); ++i) {
        const auto& r = reps[i];
        list.push_back({{"direction", std::vector<double>(r.direction.data(), r.direction.data() + r.direction.size())},
                        {"exponent", r.exponent},
                        {"rapid", r.rapid},
                        {"inconclusive", r.inconclusive},
                        {"note", r.note}});
        for (std::size_t k = 0; k < r.s.size(); ++k) c.csv += fmt::format("{},{:.17g},{:.17g}\n", i, r.s[k], r.amplitude[k]);
    }
    ojson out;
    out["N"] = N;
    out["directions"] = list;
    return out;
}

int exit_code_for(ErrorKind k) {
    switch (k) {
        case ErrorKind::NotConverged:
        case ErrorKind::NonIntegrable:
        case ErrorKind::Inconclusive:
        case ErrorKind::NeedsExtension:
        case ErrorKind::NeedsSubtraction:
            return 3;
        default:
            return 2;
    }
}

}  // namespace

JobOutput run_job(std::string_view command, const json& spec, const JobOptions& opt) {
    JobOutput out;
    ojson& rep = out.report;
    rep["command"] = std::string(command);
    rep["version"] = kSchemaVersion;
    static const std::set<std::string_view> numerical{"sd", "extend", "probe"};
    const bool uses_tol = numerical.count(command) > 0;
    const bool uses_seed = command == "extend";
    try {
        if (std::find(job_commands().begin(), job_commands().end(), command) == job_commands().end())
            schema(fmt::format("unknown command '{}'", command));
        if (!spec.is_object()) schema("spec must be a JSON object");
        // effective seed and tolerance are written back into the echo so that it reruns identically
        json echo = spec;
        std::uint64_t seed = 1;
        if (spec.contains("seed")) {
            if (!spec["seed"].is_number_unsigned()) schema("'seed' must be a nonnegative integer");
            seed = spec["seed"].get<std::uint64_t>();
        }
        if (opt.seed) seed = *opt.seed;
        double rel_tol = opt.policy.rel_tol;
        if (spec.contains("tol")) rel_tol = as_double(spec["tol"], "tol");
        if (opt.tol) rel_tol = *opt.tol;
        if (!(rel_tol > 0 && rel_tol < 1)) schema("tolerance must lie in (0, 1)");
        if (uses_seed) echo["seed"] = seed;
        if (uses_tol) echo["tol"] = rel_tol;
        rep["input"] = echo;
        ojson prov;
        prov["module"] = command == "sd" || command == "probe" ? "distributions-core"
                         : command == "extend"                 ? "extension-engine"
                         : command == "cover" || command == "glue" ? "minkowski-causal"
                         : command == "wf"                         ? "cone-calculus"
                                                                   : "wick-power";
        if (uses_tol) prov["rel_tol"] = rel_tol;
        if (uses_seed) prov["seed"] = seed;
        rep["provenance"] = prov;

        Ctx ctx{spec, seed, rel_tol, {}};
        ojson result;
        if (command == "sd") result = job_sd(ctx);
        else if (command == "extend") result = job_extend(ctx);
        else if (command == "wf") result = job_wf(ctx);
        else if (command == "cover") result = job_cover(ctx);
        else if (command == "glue") result = job_glue(ctx);
        else if (command == "wick") result = job_wick(ctx);
        else if (command == "classify") result = job_classify(ctx);
        else result = job_probe(ctx);
        rep["result"] = result;
        out.csv = std::move(ctx.csv);
        rep["status"] = "ok";
    } catch (const ParseError& e) {
        rep["status"] = "error";
        rep["error"] = {{"kind", "Parse"}, {"message", e.what()}, {"line", e.line()}, {"column", e.column()},
                        {"offset", e.offset()}};
        out.exit_code = 2;
    } catch (const Error& e) {
        rep["status"] = "error";
        rep["error"] = {{"kind", std::string(to_string(e.kind()))}, {"message", e.what()}};
        out.exit_code = exit_code_for(e.kind());
    } catch (const json::exception& e) {
        rep["status"] = "error";
        rep["error"] = {{"kind", "Schema"}, {"message", e.what()}};
        out.exit_code = 2;
    } catch (const std::exception& e) {
        rep["status"] = "error";
        rep["error"] = {{"kind", "Internal"}, {"message", e.what()}};
        out.exit_code = 1;
    }
    return out;
}

void write_atomic(const std::string& path, const std::string& contents) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    fs::path tmp = target;
    tmp += fmt::format(".tmp{}", static_cast<long>(std::random_device{}() & 0xffffff));
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error(fmt::format("cannot write {}", tmp.string()));
        f << contents;
        f.flush();
        if (!f) throw std::runtime_error(fmt::format("cannot write {}", tmp.string()));
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp);
        throw std::runtime_error(fmt::format("cannot move {} into place: {}", tmp.string(), ec.message()));
    }
}

}  // namespace egren
