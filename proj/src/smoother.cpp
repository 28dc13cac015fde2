#include "rung/smoother.hpp"

#include <cmath>
#include <string>

#include "rung/csv.hpp"

namespace rung {

namespace {

void check_shapes(const SparseGraph& g, const FeatureMatrix& a, const FeatureMatrix& b) {
    if (a.rows() != g.num_nodes()) throw std::invalid_argument("feature rows do not match node count");
    if (!a.same_shape(b)) throw std::invalid_argument("feature matrix shape mismatch");
}

double row_difference(const SparseGraph& g, const FeatureMatrix& f, const Edge& ed) {
    const double su = g.inv_sqrt_degree(ed.u);
    const double sv = g.inv_sqrt_degree(ed.v);
    auto fu = f.row(ed.u);
    auto fv = f.row(ed.v);
    double s = 0.0;
    for (std::size_t k = 0; k < fu.size(); ++k) {
        const double t = fu[k] * su - fv[k] * sv;
        s += t * t;
    }
    return std::sqrt(s);
}

double fidelity(const FeatureMatrix& f, const FeatureMatrix& f0) {
    auto a = f.values();
    auto b = f0.values();
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double t = a[i] - b[i];
        s += t * t;
    }
    return s;
}

// Only edges that take part in the penalty: no loops, positive adjacency.
bool active(const SparseGraph& g, std::size_t e) { return !g.edge(e).is_loop() && g.adjacency(e) > 0.0; }

struct Evaluation {
    EdgeWeights weights;
    std::vector<double> q;
    double energy = 0.0;
};

// W, q and H at F in one pass over the edges.
Evaluation evaluate(const SparseGraph& g, const Penalty& p, double lambda, const FeatureMatrix& f,
                    const FeatureMatrix& f0) {
    const std::size_t m = g.num_edges();
    std::vector<double> w(m, 0.0);
    double penalty_sum = 0.0;
    for (std::size_t e = 0; e < m; ++e) {
        if (!active(g, e)) continue;
        const double y = row_difference(g, f, g.edge(e));
        w[e] = p.weight(y);
        penalty_sum += g.adjacency(e) * p.rho(y);
    }
    Evaluation ev{EdgeWeights(g, std::move(w)), {}, 0.0};
    ev.q = weighted_degree_ratio(g, ev.weights);
    ev.energy = penalty_sum + lambda * fidelity(f, f0);
    return ev;
}

// out += (W (.) A~) F
void aggregate(const SparseGraph& g, const EdgeWeights& w, const FeatureMatrix& f, FeatureMatrix& out) {
    const std::size_t d = f.cols();
    for (std::size_t e = 0; e < g.num_edges(); ++e) {
        if (w[e] == 0.0) continue;
        const Edge& ed = g.edge(e);
        if (ed.is_loop()) continue;
        const double c = w[e] * g.normalized_weight(e);
        auto fu = f.row(ed.u);
        auto fv = f.row(ed.v);
        auto ou = out.row(ed.u);
        auto ov = out.row(ed.v);
        for (std::size_t k = 0; k < d; ++k) {
            ou[k] += c * fv[k];
            ov[k] += c * fu[k];
        }
    }
}

FeatureMatrix gradient(const SparseGraph& g, const EdgeWeights& w, std::span<const double> q, double lambda,
                       const FeatureMatrix& f, const FeatureMatrix& f0) {
    FeatureMatrix agg(f.rows(), f.cols());
    aggregate(g, w, f, agg);
    FeatureMatrix grad(f.rows(), f.cols());
    for (std::size_t i = 0; i < f.rows(); ++i) {
        for (std::size_t k = 0; k < f.cols(); ++k) {
            grad(i, k) = 2.0 * ((q[i] + lambda) * f(i, k) - agg(i, k) - lambda * f0(i, k));
        }
    }
    return grad;
}

SmootherState next_state(const SparseGraph& g, const SmootherConfig& cfg, const FeatureMatrix& f,
                         const FeatureMatrix& f0, const SmootherState& prev) {
    Evaluation ev = evaluate(g, cfg.penalty, cfg.lambda, f, f0);
    SmootherState s;
    s.weights = std::move(ev.weights);
    s.q = std::move(ev.q);
    s.energy = ev.energy;
    s.iteration = prev.iteration + 1;
    return s;
}

void check_descent(const SparseGraph& g, const Penalty& p, double before, double after, const char* what) {
    if (after > before + descent_slack(g, p, before)) {
        throw DescentViolation(std::string(what) + " increased the energy from " + format_double(before) + " to " +
                               format_double(after));
    }
}

}  // namespace

std::string solver_label(const Solver& s) {
    if (std::holds_alternative<QnIrlsSolver>(s)) return "qnirls";
    const auto& irls = std::get<IrlsSolver>(s);
    if (irls.eta) return "irls_eta" + format_double(*irls.eta);
    std::string label = "irls_auto";
    if (irls.eta_scale != 1.0) label += "_x" + format_double(irls.eta_scale);
    if (irls.freeze_eta) label += "_frozen";
    return label;
}

double lambda_from_hat(double lambda_hat) {
    if (!(lambda_hat > 0.0 && lambda_hat < 1.0)) throw std::invalid_argument("lambda_hat must lie in (0,1)");
    return 1.0 / lambda_hat - 1.0;
}

double hat_from_lambda(double lambda) {
    if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be non-negative");
    return 1.0 / (1.0 + lambda);
}

void SmootherConfig::validate() const {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("lambda must be a non-negative number");
    if (iterations < 1) throw std::invalid_argument("iterations must be at least 1");
    if (const auto* irls = std::get_if<IrlsSolver>(&solver)) {
        if (irls->eta && !(*irls->eta > 0.0)) throw std::invalid_argument("eta must be positive");
        if (!(irls->eta_scale > 0.0)) throw std::invalid_argument("eta_scale must be positive");
    }
}

double edge_difference(const SparseGraph& g, const FeatureMatrix& f, NodeId i, NodeId j) {
    if (f.rows() != g.num_nodes()) throw std::invalid_argument("feature rows do not match node count");
    auto e = g.find_edge(i, j);
    if (!e) throw std::invalid_argument("(" + std::to_string(i) + "," + std::to_string(j) + ") is not an edge");
    return row_difference(g, f, g.edge(*e));
}

std::vector<double> edge_differences(const SparseGraph& g, const FeatureMatrix& f) {
    if (f.rows() != g.num_nodes()) throw std::invalid_argument("feature rows do not match node count");
    std::vector<double> y(g.num_edges(), 0.0);
    for (std::size_t e = 0; e < g.num_edges(); ++e) {
        if (!g.edge(e).is_loop()) y[e] = row_difference(g, f, g.edge(e));
    }
    return y;
}

double objective(const SparseGraph& g, const Penalty& p, double lambda, const FeatureMatrix& f,
                 const FeatureMatrix& f0) {
    check_shapes(g, f, f0);
    double s = 0.0;
    for (std::size_t e = 0; e < g.num_edges(); ++e) {
        if (!active(g, e)) continue;
        s += g.adjacency(e) * p.rho(row_difference(g, f, g.edge(e)));
    }
    return s + lambda * fidelity(f, f0);
}

EdgeWeights compute_weights(const SparseGraph& g, const Penalty& p, const FeatureMatrix& f) {
    if (f.rows() != g.num_nodes()) throw std::invalid_argument("feature rows do not match node count");
    std::vector<double> w(g.num_edges(), 0.0);
    for (std::size_t e = 0; e < g.num_edges(); ++e) {
        if (active(g, e)) w[e] = p.weight(row_difference(g, f, g.edge(e)));
    }
    return EdgeWeights(g, std::move(w));
}

std::vector<double> weighted_degree_ratio(const SparseGraph& g, const EdgeWeights& w) {
    std::vector<double> q(g.num_nodes(), 0.0);
    for (std::size_t e = 0; e < g.num_edges(); ++e) {
        const Edge& ed = g.edge(e);
        if (ed.is_loop() || w[e] == 0.0) continue;
        const double c = w[e] * g.adjacency(e);
        q[ed.u] += c;
        q[ed.v] += c;
    }
    for (std::size_t i = 0; i < q.size(); ++i) {
        if (g.degree(static_cast<NodeId>(i)) > 0.0) q[i] /= g.degree(static_cast<NodeId>(i));
    }
    return q;
}

double upper_bound(const SparseGraph& g, const Penalty& p, double lambda, const FeatureMatrix& f,
                   const FeatureMatrix& f0, const FeatureMatrix& anchor) {
    check_shapes(g, f, f0);
    check_shapes(g, anchor, f0);
    double quad = 0.0;
    double constant = 0.0;
    for (std::size_t e = 0; e < g.num_edges(); ++e) {
        if (!active(g, e)) continue;
        const double a = g.adjacency(e);
        const double y0 = row_difference(g, anchor, g.edge(e));
        const double w = p.weight(y0);
        const double y = row_difference(g, f, g.edge(e));
        quad += a * w * y * y;
        constant += a * (p.rho(y0) - w * y0 * y0);
    }
    return quad + lambda * fidelity(f, f0) + constant;
}

FeatureMatrix bound_gradient(const SparseGraph& g, const Penalty& p, double lambda, const FeatureMatrix& f,
                             const FeatureMatrix& f0, const FeatureMatrix& anchor) {
    check_shapes(g, f, f0);
    check_shapes(g, anchor, f0);
    EdgeWeights w = compute_weights(g, p, anchor);
    std::vector<double> q = weighted_degree_ratio(g, w);
    return gradient(g, w, q, lambda, f, f0);
}

DenseMatrix bound_hessian_dense(const SparseGraph& g, const Penalty& p, double lambda, const FeatureMatrix& anchor) {
    const std::size_t n = g.num_nodes();
    if (n > 64) throw std::invalid_argument("dense Hessian is limited to 64 nodes");
    EdgeWeights w = compute_weights(g, p, anchor);
    std::vector<double> q = weighted_degree_ratio(g, w);
    DenseMatrix h(n);
    for (std::size_t i = 0; i < n; ++i) h(i, i) = 2.0 * (q[i] + lambda);
    for (std::size_t e = 0; e < g.num_edges(); ++e) {
        const Edge& ed = g.edge(e);
        if (ed.is_loop()) continue;
        const double c = 2.0 * w[e] * g.normalized_weight(e);
        h(ed.u, ed.v) -= c;
        h(ed.v, ed.u) -= c;
    }
    return h;
}

double descent_slack(const SparseGraph& g, const Penalty& p, double energy) {
    return 1e-9 * std::abs(energy) + static_cast<double>(g.num_edges()) * p.epsilon();
}

SmootherState initial_state(const SparseGraph& g, const SmootherConfig& cfg, const FeatureMatrix& f0) {
    if (f0.rows() != g.num_nodes()) throw std::invalid_argument("feature rows do not match node count");
    Evaluation ev = evaluate(g, cfg.penalty, cfg.lambda, f0, f0);
    SmootherState s;
    s.weights = std::move(ev.weights);
    s.q = std::move(ev.q);
    s.energy = ev.energy;
    return s;
}

StepResult irls_step(const SparseGraph& g, const SmootherConfig& cfg, const FeatureMatrix& f,
                     const FeatureMatrix& f0, const SmootherState& state) {
    const auto* solver = std::get_if<IrlsSolver>(&cfg.solver);
    if (!solver) throw std::invalid_argument("irls_step requires an IRLS solver configuration");
    check_shapes(g, f, f0);

    double eta = 0.0;
    if (solver->eta) {
        eta = *solver->eta;
    } else if (solver->freeze_eta && state.eta > 0.0) {
        eta = state.eta;
    } else {
        SpectralNormEstimate norm = spectral_norm(g, state.q, state.weights, cfg.lambda, cfg.power);
        if (norm.value <= 0.0) throw std::runtime_error("step size bound undefined for a zero operator");
        eta = solver->eta_scale / norm.upper;
    }

    FeatureMatrix grad = gradient(g, state.weights, state.q, cfg.lambda, f, f0);
    FeatureMatrix next = f;
    auto nv = next.values();
    auto gv = grad.values();
    for (std::size_t i = 0; i < nv.size(); ++i) nv[i] -= eta * gv[i];

    SmootherState s = next_state(g, cfg, next, f0, state);
    s.eta = eta;
    // Only a per-iteration bound with scale <= 1 carries the descent guarantee.
    const bool guaranteed = !solver->eta && !solver->freeze_eta && solver->eta_scale <= 1.0;
    if (guaranteed) check_descent(g, cfg.penalty, state.energy, s.energy, "IRLS step with automatic step size");
    return {std::move(next), std::move(s)};
}

StepResult qn_irls_step(const SparseGraph& g, const SmootherConfig& cfg, const FeatureMatrix& f,
                        const FeatureMatrix& f0, const SmootherState& state) {
    if (!std::holds_alternative<QnIrlsSolver>(cfg.solver)) {
        throw std::invalid_argument("qn_irls_step requires a QN-IRLS solver configuration");
    }
    check_shapes(g, f, f0);

    FeatureMatrix next(f.rows(), f.cols());
    aggregate(g, state.weights, f, next);
    std::vector<NodeId> degenerate;
    const double lambda = cfg.lambda;
    for (std::size_t i = 0; i < f.rows(); ++i) {
        const double denom = state.q[i] + lambda;
        auto row = next.row(i);
        if (denom == 0.0) {
            auto src = f.row(i);
            std::copy(src.begin(), src.end(), row.begin());
            degenerate.push_back(static_cast<NodeId>(i));
            continue;
        }
        auto r0 = f0.row(i);
        const double inv = 1.0 / denom;
        for (std::size_t k = 0; k < row.size(); ++k) row[k] = (row[k] + lambda * r0[k]) * inv;
    }

    SmootherState s = next_state(g, cfg, next, f0, state);
    s.degenerate_rows = std::move(degenerate);
    check_descent(g, cfg.penalty, state.energy, s.energy, "QN-IRLS step");
    return {std::move(next), std::move(s)};
}

SmoothResult smooth(const SparseGraph& g, const SmootherConfig& cfg, const FeatureMatrix& f0,
                    const SmoothObserver& observer) {
    cfg.validate();
    if (!f0.all_finite()) throw std::invalid_argument("input features must be finite");
    SmoothResult out;
    out.state = initial_state(g, cfg, f0);
    out.features = f0;
    if (cfg.energy_trace) out.energy_trace.push_back(out.state.energy);
    if (observer) observer(out.features, out.state);
    const bool qn = std::holds_alternative<QnIrlsSolver>(cfg.solver);
    for (std::size_t k = 0; k < cfg.iterations; ++k) {
        StepResult r = qn ? qn_irls_step(g, cfg, out.features, f0, out.state)
                          : irls_step(g, cfg, out.features, f0, out.state);
        out.features = std::move(r.features);
        out.state = std::move(r.state);
        out.degenerate_row_updates += out.state.degenerate_rows.size();
        if (cfg.energy_trace) out.energy_trace.push_back(out.state.energy);
        if (observer) observer(out.features, out.state);
    }
    return out;
}

void write_energy_trace(const std::filesystem::path& path, const std::vector<double>& trace) {
    CsvWriter w(path);
    w.row("iter", "energy");
    for (std::size_t k = 0; k < trace.size(); ++k) w.row(std::uint64_t{k}, trace[k]);
    w.close();
}

}  // namespace rung
