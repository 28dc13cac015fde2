#include "rung/experiment.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <string_view>

#include "rung/classify.hpp"
#include "rung/csv.hpp"
#include "rung/mean_sim.hpp"
#include "rung/parallel.hpp"
#include "rung/random.hpp"

namespace rung {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------- parsing

std::string join(const std::string& path, std::string_view key) {
    return path.empty() ? std::string(key) : path + "." + std::string(key);
}

[[noreturn]] void fail(const std::string& path, const std::string& msg) { throw ConfigError(path + ": " + msg); }

void check_keys(const json& j, const std::string& path, std::initializer_list<std::string_view> keys) {
    if (!j.is_object()) fail(path.empty() ? "config" : path, "expected an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (std::find(keys.begin(), keys.end(), it.key()) == keys.end()) fail(join(path, it.key()), "unknown field");
    }
}

double as_number(const json& j, const std::string& path) {
    if (!j.is_number()) fail(path, "expected a number");
    return j.get<double>();
}

std::uint64_t as_uint(const json& j, const std::string& path) {
    if (j.is_number_unsigned()) return j.get<std::uint64_t>();
    if (j.is_number_integer() && j.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(j.get<std::int64_t>());
    fail(path, "expected a non-negative integer");
}

bool as_bool(const json& j, const std::string& path) {
    if (!j.is_boolean()) fail(path, "expected true or false");
    return j.get<bool>();
}

std::string as_string(const json& j, const std::string& path) {
    if (!j.is_string()) fail(path, "expected a string");
    return j.get<std::string>();
}

const json& as_array(const json& j, const std::string& path) {
    if (!j.is_array()) fail(path, "expected an array");
    return j;
}

std::vector<double> as_numbers(const json& j, const std::string& path) {
    std::vector<double> out;
    std::size_t i = 0;
    for (const auto& x : as_array(j, path)) out.push_back(as_number(x, path + "[" + std::to_string(i++) + "]"));
    return out;
}

template <typename F>
void field(const json& obj, std::string_view key, const std::string& path, F&& f) {
    auto it = obj.find(std::string(key));
    if (it != obj.end()) f(*it, join(path, key));
}

fs::path resolve(const fs::path& p, const fs::path& base) {
    if (p.is_absolute() || base.empty()) return p;
    return base / p;
}

// Library validation errors become config errors naming the config block.
template <typename F>
void validate_part(const std::string& path, F&& f) {
    try {
        f();
    } catch (const std::invalid_argument& e) {
        fail(path, e.what());
    }
}

Solver parse_solver(const json& j, const std::string& path) {
    check_keys(j, path, {"kind", "eta", "eta_scale", "freeze_eta"});
    if (!j.contains("kind")) fail(join(path, "kind"), "missing");
    const std::string kind = as_string(j.at("kind"), join(path, "kind"));
    if (kind == "qnirls") {
        if (j.size() != 1) fail(path, "qnirls takes no parameters");
        return QnIrlsSolver{};
    }
    if (kind != "irls") fail(join(path, "kind"), "expected 'qnirls' or 'irls'");
    IrlsSolver s;
    field(j, "eta", path, [&](const json& v, const std::string& p) { s.eta = as_number(v, p); });
    field(j, "eta_scale", path, [&](const json& v, const std::string& p) { s.eta_scale = as_number(v, p); });
    field(j, "freeze_eta", path, [&](const json& v, const std::string& p) { s.freeze_eta = as_bool(v, p); });
    return s;
}

json solver_to_json(const Solver& s) {
    if (std::holds_alternative<QnIrlsSolver>(s)) return json{{"kind", "qnirls"}};
    const auto& irls = std::get<IrlsSolver>(s);
    json j{{"kind", "irls"}, {"eta_scale", irls.eta_scale}, {"freeze_eta", irls.freeze_eta}};
    if (irls.eta) j["eta"] = *irls.eta;
    return j;
}

SmootherSettings parse_smoother(const json& j, const std::string& path) {
    check_keys(j, path, {"penalty", "lambda", "lambda_hat", "iterations", "solver", "energy_trace", "power"});
    SmootherSettings s;
    field(j, "penalty", path, [&](const json& v, const std::string& p) { s.base.penalty = parse_penalty(v, p); });
    if (j.contains("lambda") && j.contains("lambda_hat")) fail(path, "give either lambda or lambda_hat, not both");
    field(j, "lambda", path, [&](const json& v, const std::string& p) { s.base.lambda = as_number(v, p); });
    field(j, "lambda_hat", path, [&](const json& v, const std::string& p) {
        const double hat = as_number(v, p);
        if (!(hat > 0.0 && hat < 1.0)) fail(p, "must lie in (0,1)");
        s.base.lambda = lambda_from_hat(hat);
    });
    field(j, "iterations", path, [&](const json& v, const std::string& p) { s.base.iterations = as_uint(v, p); });
    field(j, "energy_trace", path, [&](const json& v, const std::string& p) { s.base.energy_trace = as_bool(v, p); });
    field(j, "power", path, [&](const json& v, const std::string& p) {
        check_keys(v, p, {"tolerance", "max_iterations"});
        field(v, "tolerance", p, [&](const json& x, const std::string& q) { s.base.power.tolerance = as_number(x, q); });
        field(v, "max_iterations", p,
              [&](const json& x, const std::string& q) { s.base.power.max_iterations = as_uint(x, q); });
    });
    field(j, "solver", path, [&](const json& v, const std::string& p) {
        s.solvers.clear();
        if (v.is_array()) {
            for (std::size_t i = 0; i < v.size(); ++i) s.solvers.push_back(parse_solver(v[i], p + "[" + std::to_string(i) + "]"));
        } else {
            s.solvers.push_back(parse_solver(v, p));
        }
        if (s.solvers.empty()) fail(p, "needs at least one solver");
    });
    std::set<std::string> labels;
    for (const auto& sv : s.solvers) {
        if (!labels.insert(solver_label(sv)).second) fail(join(path, "solver"), "duplicate solver " + solver_label(sv));
        auto c = s.base;
        c.solver = sv;
        validate_part(path, [&] { c.validate(); });
    }
    return s;
}

json smoother_to_json(const SmootherSettings& s) {
    json solvers = json::array();
    for (const auto& sv : s.solvers) solvers.push_back(solver_to_json(sv));
    return json{{"penalty", penalty_to_json(s.base.penalty)},
                {"lambda", s.base.lambda},
                {"iterations", s.base.iterations},
                {"solver", solvers},
                {"energy_trace", s.base.energy_trace},
                {"power", {{"tolerance", s.base.power.tolerance}, {"max_iterations", s.base.power.max_iterations}}}};
}

DatasetSettings parse_dataset(const json& j, const std::string& path, const fs::path& base) {
    if (!j.is_object()) fail(path, "expected an object");
    const std::string kind = j.contains("kind") ? as_string(j.at("kind"), join(path, "kind")) : "synthetic";
    DatasetSettings d;
    field(j, "perturbation", path,
          [&](const json& v, const std::string& p) { d.perturbation = resolve(as_string(v, p), base); });
    if (kind == "files") {
        check_keys(j, path, {"kind", "edges", "features", "labels", "self_loops", "perturbation"});
        DatasetFiles f;
        if (!j.contains("edges")) fail(join(path, "edges"), "missing");
        if (!j.contains("features")) fail(join(path, "features"), "missing");
        f.edges = resolve(as_string(j.at("edges"), join(path, "edges")), base);
        f.features = resolve(as_string(j.at("features"), join(path, "features")), base);
        field(j, "labels", path, [&](const json& v, const std::string& p) { f.labels = resolve(as_string(v, p), base); });
        field(j, "self_loops", path, [&](const json& v, const std::string& p) { f.self_loops = as_bool(v, p); });
        d.source = f;
        return d;
    }
    if (kind != "synthetic") fail(join(path, "kind"), "expected 'synthetic' or 'files'");
    check_keys(j, path,
               {"kind", "n", "classes", "intra_p", "inter_q", "feature_dim", "center_scale", "class_centers",
                "feature_sigma", "split", "self_loops", "seed", "perturbation"});
    SyntheticParams s;
    field(j, "n", path, [&](const json& v, const std::string& p) { s.n = as_uint(v, p); });
    field(j, "classes", path, [&](const json& v, const std::string& p) { s.classes = as_uint(v, p); });
    field(j, "intra_p", path, [&](const json& v, const std::string& p) { s.intra_p = as_number(v, p); });
    field(j, "inter_q", path, [&](const json& v, const std::string& p) { s.inter_q = as_number(v, p); });
    field(j, "feature_dim", path, [&](const json& v, const std::string& p) { s.feature_dim = as_uint(v, p); });
    field(j, "center_scale", path, [&](const json& v, const std::string& p) { s.center_scale = as_number(v, p); });
    field(j, "feature_sigma", path, [&](const json& v, const std::string& p) { s.feature_sigma = as_number(v, p); });
    field(j, "self_loops", path, [&](const json& v, const std::string& p) { s.self_loops = as_bool(v, p); });
    field(j, "seed", path, [&](const json& v, const std::string& p) {
        s.seed = as_uint(v, p);
        d.seed_given = true;
    });
    field(j, "class_centers", path, [&](const json& v, const std::string& p) {
        std::vector<std::vector<double>> centers;
        for (std::size_t i = 0; i < as_array(v, p).size(); ++i) centers.push_back(as_numbers(v[i], p + "[" + std::to_string(i) + "]"));
        s.class_centers = centers;
    });
    field(j, "split", path, [&](const json& v, const std::string& p) {
        check_keys(v, p, {"train", "val", "test"});
        field(v, "train", p, [&](const json& x, const std::string& q) { s.split.train = as_number(x, q); });
        field(v, "val", p, [&](const json& x, const std::string& q) { s.split.val = as_number(x, q); });
        field(v, "test", p, [&](const json& x, const std::string& q) { s.split.test = as_number(x, q); });
    });
    validate_part(path, [&] { s.validate(); });
    d.source = s;
    return d;
}

json dataset_to_json(const DatasetSettings& d) {
    json j;
    if (const auto* f = std::get_if<DatasetFiles>(&d.source)) {
        j = {{"kind", "files"}, {"edges", f->edges.string()}, {"features", f->features.string()}, {"self_loops", f->self_loops}};
        if (f->labels) j["labels"] = f->labels->string();
    } else {
        const auto& s = std::get<SyntheticParams>(d.source);
        j = {{"kind", "synthetic"},
             {"n", s.n},
             {"classes", s.classes},
             {"intra_p", s.intra_p},
             {"inter_q", s.inter_q},
             {"feature_dim", s.feature_dim},
             {"center_scale", s.center_scale},
             {"feature_sigma", s.feature_sigma},
             {"split", {{"train", s.split.train}, {"val", s.split.val}, {"test", s.split.test}}},
             {"self_loops", s.self_loops}};
        if (s.class_centers) j["class_centers"] = *s.class_centers;
        if (d.seed_given) j["seed"] = s.seed;
    }
    if (d.perturbation) j["perturbation"] = d.perturbation->string();
    return j;
}

AttackSettings parse_attack(const json& j, const std::string& path) {
    check_keys(j, path,
               {"scope", "targets", "target_count", "budgets", "method", "candidate_pool", "loss", "penalties", "head",
                "histogram_bins"});
    AttackSettings a;
    field(j, "scope", path, [&](const json& v, const std::string& p) {
        const auto s = as_string(v, p);
        if (s != "global" && s != "local") fail(p, "expected 'global' or 'local'");
        a.local = s == "local";
    });
    field(j, "targets", path, [&](const json& v, const std::string& p) {
        for (std::size_t i = 0; i < as_array(v, p).size(); ++i) {
            a.targets.push_back(static_cast<NodeId>(as_uint(v[i], p + "[" + std::to_string(i) + "]")));
        }
    });
    field(j, "target_count", path, [&](const json& v, const std::string& p) { a.target_count = as_uint(v, p); });
    field(j, "budgets", path, [&](const json& v, const std::string& p) {
        a.budgets = as_numbers(v, p);
        for (double b : a.budgets) {
            if (!(b > 0.0)) fail(p, "budget percentages must be positive");
        }
    });
    field(j, "method", path, [&](const json& v, const std::string& p) {
        check_keys(v, p, {"kind", "steps", "step_size", "samples", "fd_step"});
        if (!v.contains("kind")) fail(join(p, "kind"), "missing");
        const auto kind = as_string(v.at("kind"), join(p, "kind"));
        if (kind == "random" || kind == "greedy") {
            if (v.size() != 1) fail(p, kind + " takes no parameters");
            a.method = kind == "random" ? AttackMethod{RandomMethod{}} : AttackMethod{GreedyMethod{}};
            return;
        }
        if (kind != "pgd") fail(join(p, "kind"), "expected 'random', 'greedy' or 'pgd'");
        PgdMethod m;
        field(v, "steps", p, [&](const json& x, const std::string& q) { m.steps = as_uint(x, q); });
        field(v, "step_size", p, [&](const json& x, const std::string& q) { m.step_size = as_number(x, q); });
        field(v, "samples", p, [&](const json& x, const std::string& q) { m.samples = as_uint(x, q); });
        field(v, "fd_step", p, [&](const json& x, const std::string& q) { m.fd_step = as_number(x, q); });
        a.method = m;
    });
    field(j, "candidate_pool", path, [&](const json& v, const std::string& p) { a.candidate_pool = as_uint(v, p); });
    field(j, "loss", path, [&](const json& v, const std::string& p) {
        const auto s = as_string(v, p);
        if (s == "margin") {
            a.loss = AttackLoss::margin;
        } else if (s == "cross_entropy") {
            a.loss = AttackLoss::cross_entropy;
        } else {
            fail(p, "expected 'margin' or 'cross_entropy'");
        }
    });
    field(j, "penalties", path, [&](const json& v, const std::string& p) {
        for (std::size_t i = 0; i < as_array(v, p).size(); ++i) a.penalties.push_back(parse_penalty(v[i], p + "[" + std::to_string(i) + "]"));
    });
    field(j, "head", path, [&](const json& v, const std::string& p) {
        const auto s = as_string(v, p);
        if (s != "features" && s != "labels") fail(p, "expected 'features' or 'labels'");
        a.head = s == "features" ? Head::features : Head::labels;
    });
    field(j, "histogram_bins", path, [&](const json& v, const std::string& p) { a.histogram_bins = as_uint(v, p); });
    if (a.histogram_bins < 1) fail(join(path, "histogram_bins"), "must be positive");
    if (a.local && a.targets.empty() && a.target_count == 0) fail(path, "local scope needs targets or target_count");
    AttackConfig probe;
    probe.method = a.method;
    probe.candidate_pool = a.candidate_pool;
    validate_part(path, [&] { probe.validate(); });
    return a;
}

json attack_to_json(const AttackSettings& a) {
    json method;
    if (const auto* pgd = std::get_if<PgdMethod>(&a.method)) {
        method = {{"kind", "pgd"}, {"steps", pgd->steps}, {"step_size", pgd->step_size}, {"samples", pgd->samples},
                  {"fd_step", pgd->fd_step}};
    } else {
        method = {{"kind", method_name(a.method)}};
    }
    json penalties = json::array();
    for (const auto& p : a.penalties) penalties.push_back(penalty_to_json(p));
    return json{{"scope", a.local ? "local" : "global"},
                {"targets", a.targets},
                {"target_count", a.target_count},
                {"budgets", a.budgets},
                {"method", method},
                {"candidate_pool", a.candidate_pool},
                {"loss", loss_name(a.loss)},
                {"penalties", penalties},
                {"head", a.head == Head::features ? "features" : "labels"},
                {"histogram_bins", a.histogram_bins}};
}

MeanSimSettings parse_mean_sim(const json& j, const std::string& path) {
    check_keys(j, path, {"total", "ratios", "gamma", "max_iter", "tol"});
    MeanSimSettings m;
    field(j, "total", path, [&](const json& v, const std::string& p) { m.total = as_uint(v, p); });
    field(j, "ratios", path, [&](const json& v, const std::string& p) { m.ratios = as_numbers(v, p); });
    field(j, "gamma", path, [&](const json& v, const std::string& p) { m.gamma = as_number(v, p); });
    field(j, "max_iter", path, [&](const json& v, const std::string& p) { m.max_iter = as_uint(v, p); });
    field(j, "tol", path, [&](const json& v, const std::string& p) { m.tol = as_number(v, p); });
    if (m.total < 1) fail(join(path, "total"), "must be positive");
    for (double r : m.ratios) {
        if (!(r >= 0.0 && r < 1.0)) fail(join(path, "ratios"), "ratios must lie in [0,1)");
    }
    if (!(m.gamma > 0.0)) fail(join(path, "gamma"), "must be positive");
    if (!(m.tol > 0.0)) fail(join(path, "tol"), "must be positive");
    return m;
}

SweepSettings parse_sweep(const json& j, const std::string& path) {
    check_keys(j, path, {"lambda_hat", "gamma", "iterations", "max_cells"});
    SweepSettings s;
    field(j, "lambda_hat", path, [&](const json& v, const std::string& p) { s.lambda_hat = as_numbers(v, p); });
    field(j, "gamma", path, [&](const json& v, const std::string& p) { s.gamma = as_numbers(v, p); });
    field(j, "iterations", path, [&](const json& v, const std::string& p) {
        s.iterations.clear();
        for (std::size_t i = 0; i < as_array(v, p).size(); ++i) s.iterations.push_back(as_uint(v[i], p + "[" + std::to_string(i) + "]"));
    });
    field(j, "max_cells", path, [&](const json& v, const std::string& p) { s.max_cells = as_uint(v, p); });
    for (double h : s.lambda_hat) {
        if (!(h > 0.0 && h < 1.0)) fail(join(path, "lambda_hat"), "values must lie in (0,1)");
    }
    for (double g : s.gamma) {
        if (!(g > 0.0)) fail(join(path, "gamma"), "values must be positive");
    }
    for (auto k : s.iterations) {
        if (k < 1) fail(join(path, "iterations"), "values must be at least 1");
    }
    return s;
}

// ---------------------------------------------------------------- running

fs::path prepare_output(const ExperimentConfig& cfg) {
    fs::create_directories(cfg.output_dir);
    return cfg.output_dir;
}

std::string penalty_token(const Penalty& p) {
    return p.kind() == PenaltyKind::mcp ? "mcp_g" + format_double(p.gamma()) : p.name();
}

std::string solver_token(const Solver& s) { return solver_label(s); }

SmootherConfig smoother_for(const ExperimentConfig& cfg, const Penalty& p) {
    SmootherConfig c = cfg.smoother.base;
    c.penalty = p;
    c.solver = cfg.smoother.solvers.front();
    return c;
}

Pipeline make_pipeline(const Dataset& d, const SmootherConfig& c, Head head) {
    if (head == Head::features) {
        if (d.features.cols() != d.split.classes) {
            throw ConfigError("attack.head: the features head needs one feature column per class (" +
                              std::to_string(d.features.cols()) + " columns, " + std::to_string(d.split.classes) +
                              " classes)");
        }
        return [c, f0 = d.features](const SparseGraph& g) { return smooth(g, c, f0).features; };
    }
    return [c, split = d.split](const SparseGraph& g) { return propagate_labels(g, c, split); };
}

std::vector<Penalty> attack_penalties(const ExperimentConfig& cfg) {
    if (cfg.attack && !cfg.attack->penalties.empty()) return cfg.attack->penalties;
    std::vector<Penalty> out{Penalty::l2(), Penalty::l1(cfg.smoother.base.penalty.epsilon())};
    if (cfg.smoother.base.penalty.kind() == PenaltyKind::mcp) out.push_back(cfg.smoother.base.penalty);
    return out;
}

std::vector<NodeId> attack_targets(const ExperimentConfig& cfg, const Dataset& d) {
    const auto& a = *cfg.attack;
    if (!a.targets.empty()) {
        for (NodeId t : a.targets) {
            if (t >= d.graph.num_nodes() || d.split.labels[t] == kUnknownLabel) {
                throw ConfigError("attack.targets: node " + std::to_string(t) + " is out of range or unlabeled");
            }
        }
        return a.targets;
    }
    std::vector<NodeId> pool;
    for (NodeId v : d.split.test) {
        if (d.graph.degree(v) > (d.graph.self_loops() ? 1.0 : 0.0)) pool.push_back(v);
    }
    if (pool.size() < a.target_count) throw ConfigError("attack.target_count: not enough test nodes with edges");
    Rng rng(derive_seed(cfg.seed, "targets"));
    shuffle(std::span<NodeId>(pool), rng);
    pool.resize(a.target_count);
    std::sort(pool.begin(), pool.end());
    return pool;
}

AttackMethod seeded_method(const AttackMethod& m, std::uint64_t seed) {
    if (std::holds_alternative<RandomMethod>(m)) return RandomMethod{seed};
    if (auto p = std::get_if<PgdMethod>(&m)) {
        PgdMethod out = *p;
        out.seed = seed;
        return out;
    }
    return m;
}

struct CurvePoint {
    double budget_pct = 0.0;
    std::size_t budget = 0;
    double accuracy = 0.0;
    double bias = 0.0;
    double loss = 0.0;
    AttackReportRow report;
    std::vector<std::pair<NodeId, bool>> per_target;  // local scope only
    std::optional<PerturbationSet> perturbation;      // global scope only
    std::optional<SparseGraph> attacked;
    std::optional<FeatureMatrix> attacked_scores;
};

// Clean point (budget 0) followed by one point per configured budget.
std::vector<CurvePoint> budget_curve(const ExperimentConfig& cfg, const Dataset& d, const SmootherConfig& sc,
                                     bool keep_graphs) {
    const AttackSettings& a = *cfg.attack;
    const Pipeline pipe = make_pipeline(d, sc, a.head);
    const std::uint64_t root = derive_seed(cfg.seed, "attack");
    const std::string tag = sc.penalty.describe() + "/" + format_double(sc.lambda) + "/" + std::to_string(sc.iterations);
    std::vector<CurvePoint> out;

    if (!a.local) {
        if (d.split.test.empty()) throw ConfigError("attack: the dataset has no test nodes");
        Victim v{pipe, d.split.labels, d.split.test, a.loss};
        const FeatureMatrix clean = pipe(d.graph);
        const double clean_loss = attack_loss(clean, v.labels, v.nodes, v.loss);
        const double clean_acc = accuracy(clean, d.split, d.split.test);
        CurvePoint zero;
        zero.accuracy = clean_acc;
        zero.loss = clean_loss;
        out.push_back(zero);
        for (double pct : a.budgets) {
            AttackConfig ac;
            ac.scope = GlobalScope{pct};
            ac.method = seeded_method(a.method, derive_seed(root, tag + "/" + format_double(pct)));
            ac.candidate_pool = a.candidate_pool;
            ac.loss = a.loss;
            PerturbationSet ps = run_attack(d.graph, v, ac);
            SparseGraph g2 = apply_perturbation(d.graph, ps);
            FeatureMatrix scores = pipe(g2);
            CurvePoint pt;
            pt.budget_pct = pct;
            pt.budget = ps.budget;
            pt.accuracy = accuracy(scores, d.split, d.split.test);
            pt.bias = bias_metric(clean, scores);
            pt.loss = attack_loss(scores, v.labels, v.nodes, v.loss);
            pt.report = {method_name(a.method), ps.budget, clean_loss, pt.loss, clean_acc, pt.accuracy};
            pt.perturbation = ps;
            if (keep_graphs) {
                pt.attacked = std::move(g2);
                pt.attacked_scores = std::move(scores);
            }
            out.push_back(std::move(pt));
        }
        return out;
    }

    const auto targets = attack_targets(cfg, d);
    const FeatureMatrix clean = pipe(d.graph);
    const auto clean_pred = predict(clean);
    double clean_loss = 0.0;
    std::size_t clean_correct = 0;
    for (NodeId t : targets) {
        std::vector<NodeId> one{t};
        clean_loss += attack_loss(clean, d.split.labels, one, a.loss);
        if (clean_pred[t] == d.split.labels[t]) ++clean_correct;
    }
    const double clean_acc = static_cast<double>(clean_correct) / static_cast<double>(targets.size());
    CurvePoint zero;
    zero.accuracy = clean_acc;
    zero.loss = clean_loss;
    for (NodeId t : targets) zero.per_target.emplace_back(t, clean_pred[t] == d.split.labels[t]);
    out.push_back(zero);
    for (double pct : a.budgets) {
        CurvePoint pt;
        pt.budget_pct = pct;
        std::size_t correct = 0;
        for (NodeId t : targets) {
            std::vector<NodeId> one{t};
            Victim v{pipe, d.split.labels, one, a.loss};
            AttackConfig ac;
            ac.scope = LocalScope{{t}, pct};
            ac.method = seeded_method(a.method, derive_seed(root, tag + "/" + format_double(pct) + "/" + std::to_string(t)));
            ac.candidate_pool = a.candidate_pool;
            ac.loss = a.loss;
            FeatureMatrix scores = clean;
            std::size_t budget = 0;
            try {
                budget = attack_budget(d.graph, ac);
            } catch (const std::invalid_argument&) {
                budget = 0;  // rounds to zero for this target: left unattacked
            }
            if (budget > 0) {
                PerturbationSet ps = run_attack(d.graph, v, ac);
                scores = pipe(apply_perturbation(d.graph, ps));
            }
            pt.budget += budget;
            pt.loss += attack_loss(scores, d.split.labels, one, a.loss);
            pt.bias += bias_metric(clean, scores) / static_cast<double>(targets.size());
            const bool ok = predict(scores)[t] == d.split.labels[t];
            if (ok) ++correct;
            pt.per_target.emplace_back(t, ok);
        }
        pt.accuracy = static_cast<double>(correct) / static_cast<double>(targets.size());
        pt.report = {method_name(a.method), pt.budget, clean_loss, pt.loss, clean_acc, pt.accuracy};
        out.push_back(std::move(pt));
    }
    return out;
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

void require_attack(const ExperimentConfig& cfg, const char* command) {
    if (!cfg.attack) throw ConfigError(std::string("attack: block required by '") + command + "'");
}

}  // namespace

// ---------------------------------------------------------------- public

Penalty parse_penalty(const json& j, const std::string& path) {
    check_keys(j, path, {"kind", "gamma", "epsilon"});
    if (!j.contains("kind")) fail(join(path, "kind"), "missing");
    const auto kind = as_string(j.at("kind"), join(path, "kind"));
    double eps = Penalty::kDefaultEpsilon;
    field(j, "epsilon", path, [&](const json& v, const std::string& p) { eps = as_number(v, p); });
    try {
        if (kind == "mcp") {
            if (!j.contains("gamma")) fail(join(path, "gamma"), "missing for mcp");
            return Penalty::mcp(as_number(j.at("gamma"), join(path, "gamma")), eps);
        }
        if (j.contains("gamma")) fail(join(path, "gamma"), "only mcp takes gamma");
        if (kind == "l1") return Penalty::l1(eps);
        if (kind == "l2") return Penalty::l2(eps);
    } catch (const std::invalid_argument& e) {
        fail(path, e.what());
    }
    fail(join(path, "kind"), "expected 'mcp', 'l1' or 'l2'");
}

json penalty_to_json(const Penalty& p) {
    json j{{"kind", p.name()}, {"epsilon", p.epsilon()}};
    if (p.kind() == PenaltyKind::mcp) j["gamma"] = p.gamma();
    return j;
}

ExperimentConfig parse_config(const json& doc, const fs::path& base_dir) {
    const json* root = &doc;
    if (doc.is_object() && doc.contains("format_version") && doc.contains("config")) root = &doc.at("config");
    const json& j = *root;
    check_keys(j, "", {"seed", "output_dir", "dataset", "smoother", "attack", "mean_sim", "sweep"});
    ExperimentConfig c;
    field(j, "seed", "", [&](const json& v, const std::string& p) { c.seed = as_uint(v, p); });
    field(j, "output_dir", "", [&](const json& v, const std::string& p) { c.output_dir = as_string(v, p); });
    field(j, "dataset", "", [&](const json& v, const std::string& p) { c.dataset = parse_dataset(v, p, base_dir); });
    field(j, "smoother", "", [&](const json& v, const std::string& p) { c.smoother = parse_smoother(v, p); });
    field(j, "attack", "", [&](const json& v, const std::string& p) { c.attack = parse_attack(v, p); });
    field(j, "mean_sim", "", [&](const json& v, const std::string& p) { c.mean_sim = parse_mean_sim(v, p); });
    field(j, "sweep", "", [&](const json& v, const std::string& p) { c.sweep = parse_sweep(v, p); });
    return c;
}

ExperimentConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path.string() + ": cannot open config");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return parse_config(doc, path.parent_path());
}

json config_to_json(const ExperimentConfig& cfg) {
    json j{{"seed", cfg.seed},
           {"output_dir", cfg.output_dir.string()},
           {"dataset", dataset_to_json(cfg.dataset)},
           {"smoother", smoother_to_json(cfg.smoother)},
           {"mean_sim",
            {{"total", cfg.mean_sim.total},
             {"ratios", cfg.mean_sim.ratios},
             {"gamma", cfg.mean_sim.gamma},
             {"max_iter", cfg.mean_sim.max_iter},
             {"tol", cfg.mean_sim.tol}}},
           {"sweep",
            {{"lambda_hat", cfg.sweep.lambda_hat},
             {"gamma", cfg.sweep.gamma},
             {"iterations", cfg.sweep.iterations},
             {"max_cells", cfg.sweep.max_cells}}}};
    if (cfg.attack) j["attack"] = attack_to_json(*cfg.attack);
    return j;
}

Dataset materialize_dataset(const ExperimentConfig& cfg) {
    Dataset d = [&] {
        if (const auto* f = std::get_if<DatasetFiles>(&cfg.dataset.source)) {
            return load_dataset(f->edges, f->features, f->labels, f->self_loops);
        }
        SyntheticParams s = std::get<SyntheticParams>(cfg.dataset.source);
        if (!cfg.dataset.seed_given) s.seed = derive_seed(cfg.seed, "dataset");
        return generate_sbm(s);
    }();
    if (cfg.dataset.perturbation) {
        auto flips = read_perturbation(*cfg.dataset.perturbation);
        d.graph = apply_perturbation(d.graph, flips);
    }
    return d;
}

RunOutput run_generate(const ExperimentConfig& cfg) {
    const auto dir = prepare_output(cfg);
    Dataset d = materialize_dataset(cfg);
    save_dataset(d, dir / "edges.csv", dir / "features.csv", dir / "labels.csv");
    RunOutput out{{"edges.csv", "features.csv", "labels.csv"}, {}};
    if (!d.isolated.empty()) out.notes.push_back(std::to_string(d.isolated.size()) + " isolated nodes");
    return out;
}

RunOutput run_smooth(const ExperimentConfig& cfg) {
    Dataset d = materialize_dataset(cfg);
    const auto dir = prepare_output(cfg);
    RunOutput out;
    CsvWriter summary(dir / "smooth_summary.csv");
    summary.row("solver", "iterations", "initial_energy", "final_energy", "degenerate_row_updates");
    for (const auto& s : cfg.smoother.solvers) {
        SmootherConfig c = cfg.smoother.base;
        c.solver = s;
        c.energy_trace = true;
        SmoothResult r = smooth(d.graph, c, d.features);
        const std::string token = solver_token(s);
        if (cfg.smoother.base.energy_trace) {
            write_energy_trace(dir / ("energy_" + token + ".csv"), r.energy_trace);
            out.artifacts.push_back("energy_" + token + ".csv");
        }
        write_features(dir / ("features_" + token + ".csv"), r.features);
        out.artifacts.push_back("features_" + token + ".csv");
        summary.row(token, std::uint64_t{c.iterations}, r.energy_trace.front(), r.energy_trace.back(),
                    std::uint64_t{r.degenerate_row_updates});
    }
    summary.close();
    out.artifacts.push_back("smooth_summary.csv");
    return out;
}

RunOutput run_convergence(const ExperimentConfig& cfg) {
    Dataset d = materialize_dataset(cfg);
    const auto dir = prepare_output(cfg);
    IrlsSolver tenth;
    tenth.eta_scale = 0.1;
    const std::vector<Solver> solvers{QnIrlsSolver{}, IrlsSolver{}, tenth};
    std::vector<std::vector<double>> traces;
    RunOutput out;
    for (const auto& s : solvers) {
        SmootherConfig c = cfg.smoother.base;
        c.solver = s;
        c.energy_trace = true;
        traces.push_back(smooth(d.graph, c, d.features).energy_trace);
        write_energy_trace(dir / ("energy_" + solver_token(s) + ".csv"), traces.back());
        out.artifacts.push_back("energy_" + solver_token(s) + ".csv");
    }
    CsvWriter w(dir / "convergence.csv");
    w << "iter";
    for (const auto& s : solvers) w << solver_token(s);
    w.end_row();
    for (std::size_t k = 0; k < traces.front().size(); ++k) {
        w << std::uint64_t{k};
        for (const auto& t : traces) w << t[k];
        w.end_row();
    }
    w.close();
    out.artifacts.push_back("convergence.csv");
    return out;
}

RunOutput run_mean_sim(const ExperimentConfig& cfg) {
    const auto dir = prepare_output(cfg);
    const auto& m = cfg.mean_sim;
    RunOutput out;
    std::vector<BiasRow> rows;
    const std::uint64_t seed = derive_seed(cfg.seed, "mean_sim");
    for (double ratio : m.ratios) {
        SampleSet s = generate_samples(m.total, ratio, seed);
        const std::string r = format_double(ratio);
        CsvWriter samples(dir / ("samples_r" + r + ".csv"));
        samples.row("x", "y", "outlier");
        for (auto p : s.clean) samples.row(p.x, p.y, 0);
        for (auto p : s.outliers) samples.row(p.x, p.y, 1);
        samples.close();
        out.artifacts.push_back("samples_r" + r + ".csv");
        std::vector<NamedEstimate> est;
        for (const auto& p : {Penalty::l2(), Penalty::l1(), Penalty::mcp(m.gamma)}) {
            est.push_back({p.name(), estimate_mean(s, p, m.max_iter, m.tol)});
            const std::string name = "trajectory_" + p.name() + "_r" + r + ".csv";
            write_trajectory(dir / name, est.back().estimate);
            out.artifacts.push_back(name);
            if (!est.back().estimate.converged) out.notes.push_back(p.name() + " at ratio " + r + " did not converge");
        }
        auto part = bias_report(s, est);
        rows.insert(rows.end(), part.begin(), part.end());
    }
    write_bias_report(dir / "bias_report.csv", rows);
    out.artifacts.push_back("bias_report.csv");
    return out;
}

RunOutput run_attack_eval(const ExperimentConfig& cfg) {
    require_attack(cfg, "attack");
    Dataset d = materialize_dataset(cfg);
    const auto dir = prepare_output(cfg);
    const AttackSettings& a = *cfg.attack;
    RunOutput out;
    CsvWriter curve(dir / "accuracy_curve.csv");
    curve.row("penalty", "budget_pct", "budget", "accuracy", "bias", "loss");
    std::optional<CsvWriter> per_target;
    if (a.local) {
        per_target.emplace(dir / "per_target.csv");
        per_target->row("penalty", "budget_pct", "target", "correct");
    }
    for (const auto& p : attack_penalties(cfg)) {
        const SmootherConfig sc = smoother_for(cfg, p);
        auto points = budget_curve(cfg, d, sc, true);
        const std::string token = penalty_token(p);
        std::vector<AttackReportRow> report;
        for (auto& pt : points) {
            curve.row(p.describe(), pt.budget_pct, std::uint64_t{pt.budget}, pt.accuracy, pt.bias, pt.loss);
            if (per_target) {
                for (auto [t, ok] : pt.per_target) per_target->row(p.describe(), pt.budget_pct, std::uint64_t{t}, ok ? 1 : 0);
            }
            if (pt.budget_pct == 0.0) continue;
            report.push_back(pt.report);
            if (pt.perturbation) {
                const std::string name = "perturbation_" + token + "_b" + format_double(pt.budget_pct) + ".csv";
                write_perturbation(dir / name, d.graph, *pt.perturbation);
                out.artifacts.push_back(name);
                if (pt.perturbation->flagged) out.notes.push_back(p.describe() + " " + name + ": " + pt.perturbation->note);
            }
        }
        const std::string report_name = "attack_report_" + token + ".csv";
        write_attack_report(dir / report_name, report);
        out.artifacts.push_back(report_name);
        // edge-difference histogram of the injected edges at the largest budget
        const CurvePoint& last = points.back();
        if (last.attacked) {
            try {
                Histogram h = attacked_edge_histogram(d.graph, *last.attacked, *last.attacked_scores, a.histogram_bins);
                const std::string name = "histogram_" + token + ".csv";
                write_histogram(dir / name, h);
                out.artifacts.push_back(name);
            } catch (const std::invalid_argument&) {
                out.notes.push_back(p.describe() + ": no injected edges at the largest budget, histogram skipped");
            }
        }
    }
    curve.close();
    out.artifacts.push_back("accuracy_curve.csv");
    if (per_target) {
        per_target->close();
        out.artifacts.push_back("per_target.csv");
    }
    return out;
}

RunOutput run_evaluate(const ExperimentConfig& cfg) {
    Dataset d = materialize_dataset(cfg);
    if (d.split.train.empty()) throw ConfigError("dataset: evaluation needs labeled train nodes");
    const auto dir = prepare_output(cfg);
    const Head head = cfg.attack ? cfg.attack->head : Head::features;
    RunOutput out;
    CsvWriter w(dir / "evaluation.csv");
    w.row("penalty", "split", "accuracy");
    std::vector<Penalty> penalties = cfg.attack ? attack_penalties(cfg) : std::vector<Penalty>{cfg.smoother.base.penalty};
    for (const auto& p : penalties) {
        const Pipeline pipe = make_pipeline(d, smoother_for(cfg, p), head);
        FeatureMatrix scores = pipe(d.graph);
        const std::string name = "predictions_" + penalty_token(p) + ".csv";
        write_predictions(dir / name, scores);
        out.artifacts.push_back(name);
        const std::pair<const char*, const std::vector<NodeId>*> parts[] = {
            {"train", &d.split.train}, {"val", &d.split.val}, {"test", &d.split.test}};
        for (auto [label, nodes] : parts) {
            if (!nodes->empty()) w.row(p.describe(), label, accuracy(scores, d.split, *nodes));
        }
    }
    w.close();
    out.artifacts.push_back("evaluation.csv");
    return out;
}

RunOutput run_sweep(const ExperimentConfig& cfg) {
    const auto& s = cfg.sweep;
    const std::size_t cells = s.lambda_hat.size() * s.gamma.size() * s.iterations.size();
    if (cells == 0) throw ConfigError("sweep: empty grid");
    if (cells > s.max_cells) {
        throw ConfigError("sweep: grid has " + std::to_string(cells) + " cells, more than max_cells " +
                          std::to_string(s.max_cells));
    }
    Dataset d = materialize_dataset(cfg);
    const auto dir = prepare_output(cfg);
    struct Cell {
        double hat, gamma;
        std::size_t iterations;
        std::vector<CurvePoint> points;
    };
    std::vector<Cell> grid;
    for (double h : s.lambda_hat) {
        for (double g : s.gamma) {
            for (auto k : s.iterations) grid.push_back({h, g, k, {}});
        }
    }
    parallel_for(grid.size(), [&](std::size_t i) {
        Cell& cell = grid[i];
        SmootherConfig sc = smoother_for(cfg, Penalty::mcp(cell.gamma, cfg.smoother.base.penalty.epsilon()));
        sc.lambda = lambda_from_hat(cell.hat);
        sc.iterations = cell.iterations;
        if (cfg.attack) {
            cell.points = budget_curve(cfg, d, sc, false);
        } else {
            const Pipeline pipe = make_pipeline(d, sc, Head::features);
            CurvePoint pt;
            pt.accuracy = accuracy(pipe(d.graph), d.split, d.split.test);
            cell.points.push_back(pt);
        }
    });
    CsvWriter w(dir / "sweep.csv");
    w.row("lambda_hat", "gamma", "iterations", "budget_pct", "budget", "accuracy", "bias", "loss");
    for (const auto& cell : grid) {
        for (const auto& pt : cell.points) {
            w.row(cell.hat, cell.gamma, std::uint64_t{cell.iterations}, pt.budget_pct, std::uint64_t{pt.budget},
                  pt.accuracy, pt.bias, pt.loss);
        }
    }
    w.close();
    return {{"sweep.csv"}, {}};
}

const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names{"generate", "smooth",   "mean-sim", "attack",
                                                "evaluate", "convergence", "sweep"};
    return names;
}

RunOutput run_command(const std::string& command, const ExperimentConfig& cfg) {
    RunOutput out;
    if (command == "generate") {
        out = run_generate(cfg);
    } else if (command == "smooth") {
        out = run_smooth(cfg);
    } else if (command == "convergence") {
        out = run_convergence(cfg);
    } else if (command == "mean-sim") {
        out = run_mean_sim(cfg);
    } else if (command == "attack") {
        out = run_attack_eval(cfg);
    } else if (command == "evaluate") {
        out = run_evaluate(cfg);
    } else if (command == "sweep") {
        out = run_sweep(cfg);
    } else {
        throw ConfigError("command: unknown command '" + command + "'");
    }
    for (const auto& a : out.artifacts) {
        if (!fs::exists(cfg.output_dir / a)) throw std::runtime_error("artifact " + a.string() + " was not written");
    }
    std::vector<std::string> names;
    for (const auto& a : out.artifacts) names.push_back(a.generic_string());
    std::sort(names.begin(), names.end());
    json manifest{{"format_version", kManifestFormatVersion},
                  {"command", command},
                  {"seed", cfg.seed},
                  {"config", config_to_json(cfg)},
                  {"artifacts", names},
                  {"notes", out.notes},
                  {"formats",
                   {{"edges", "src,dst"},
                    {"features", "node,f0,..."},
                    {"labels", "node,label,split"},
                    {"energy_trace", "iter,energy"},
                    {"trajectory", "iter,x,y"},
                    {"bias_report", "estimator,ratio,distance"},
                    {"perturbation", "src,dst,action"},
                    {"attack_report", "method,budget,loss_before,loss_after,acc_before,acc_after"},
                    {"predictions", "node,pred,score_0,..."}}}};
    write_json(cfg.output_dir / "manifest.json", manifest);
    out.artifacts.push_back("manifest.json");
    return out;
}

}  // namespace rung
