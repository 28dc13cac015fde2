#include "rung/attack.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

#include "rung/csv.hpp"
#include "rung/parallel.hpp"
#include "rung/random.hpp"
#include "rung/smoother.hpp"

namespace rung {

namespace {

std::size_t rounded_budget(double pct, double base) {
    // ties to even, so 50% of a single edge is 0
    return static_cast<std::size_t>(std::nearbyint(pct / 100.0 * base));
}

double proper_degree(const SparseGraph& g, NodeId v) {
    double d = 0.0;
    for (const auto& inc : g.incident(v)) {
        if (inc.neighbor != v) d += g.adjacency(inc.edge);
    }
    return d;
}

std::vector<NodeId> sorted_targets(const LocalScope& s, std::size_t n) {
    std::vector<NodeId> t = s.targets;
    std::sort(t.begin(), t.end());
    t.erase(std::unique(t.begin(), t.end()), t.end());
    for (NodeId v : t) {
        if (v >= n) throw std::invalid_argument("attack target " + std::to_string(v) + " out of range");
    }
    return t;
}

void check_binary(const SparseGraph& g) {
    if (!g.is_binary()) throw std::invalid_argument("attacks operate on binary graphs");
}

// Index of the largest value; ties resolved to the lowest index.
std::size_t argmax_first(std::span<const double> v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (v[i] > v[best]) best = i;
    }
    return best;
}

std::vector<Edge> with_flip(std::span<const Edge> flips, const Edge& extra) {
    std::vector<Edge> out(flips.begin(), flips.end());
    out.insert(std::upper_bound(out.begin(), out.end(), extra), extra);
    return out;
}

}  // namespace

void AttackConfig::validate() const {
    std::visit(
        [](const auto& s) {
            if (!(s.budget_pct > 0.0) || !std::isfinite(s.budget_pct)) {
                throw std::invalid_argument("attack budget percentage must be positive");
            }
        },
        scope);
    if (const auto* local = std::get_if<LocalScope>(&scope); local && local->targets.empty()) {
        throw std::invalid_argument("local attack needs at least one target");
    }
    if (const auto* pgd = std::get_if<PgdMethod>(&method)) {
        if (pgd->samples < 1) throw std::invalid_argument("PGD needs at least one sample");
        if (!(pgd->step_size > 0.0)) throw std::invalid_argument("PGD step size must be positive");
        if (!(pgd->fd_step > 0.0 && pgd->fd_step <= 0.5)) throw std::invalid_argument("PGD fd_step must lie in (0, 0.5]");
    }
    if (candidate_pool < 1) throw std::invalid_argument("candidate_pool must be positive");
}

std::string method_name(const AttackMethod& m) {
    if (std::holds_alternative<RandomMethod>(m)) return "random";
    if (std::holds_alternative<GreedyMethod>(m)) return "greedy";
    return "pgd";
}

std::string loss_name(AttackLoss l) { return l == AttackLoss::margin ? "margin" : "cross_entropy"; }

double attack_loss(const FeatureMatrix& scores, std::span<const int> labels, std::span<const NodeId> nodes,
                   AttackLoss loss) {
    if (labels.size() != scores.rows()) throw std::invalid_argument("label count does not match score rows");
    double total = 0.0;
    for (NodeId v : nodes) {
        const int y = labels[v];
        if (y < 0 || static_cast<std::size_t>(y) >= scores.cols()) {
            throw std::invalid_argument("node " + std::to_string(v) + " has no valid label");
        }
        auto r = scores.row(v);
        if (loss == AttackLoss::margin) {
            double other = -std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < r.size(); ++k) {
                if (static_cast<int>(k) != y) other = std::max(other, r[k]);
            }
            // a single class leaves no competitor
            if (r.size() > 1) total += other - r[y];
        } else {
            const double mx = *std::max_element(r.begin(), r.end());
            double z = 0.0;
            for (double x : r) z += std::exp(x - mx);
            total += std::log(z) + mx - r[y];
        }
    }
    return total;
}

double evaluate_loss(const Victim& v, const SparseGraph& g) {
    return attack_loss(v.scores(g), v.labels, v.nodes, v.loss);
}

std::size_t attack_budget(const SparseGraph& g, const AttackConfig& cfg) {
    cfg.validate();
    std::size_t b = 0;
    if (const auto* global = std::get_if<GlobalScope>(&cfg.scope)) {
        b = rounded_budget(global->budget_pct, static_cast<double>(g.num_proper_edges()));
    } else {
        const auto& local = std::get<LocalScope>(cfg.scope);
        for (NodeId t : sorted_targets(local, g.num_nodes())) b += rounded_budget(local.budget_pct, proper_degree(g, t));
    }
    if (b == 0) throw std::invalid_argument("attack budget rounds to zero");
    return b;
}

std::size_t candidate_count(const SparseGraph& g, const AttackScope& scope) {
    const std::size_t n = g.num_nodes();
    if (std::holds_alternative<GlobalScope>(scope)) return n * (n - 1) / 2;
    const std::size_t t = sorted_targets(std::get<LocalScope>(scope), n).size();
    // pairs touching at least one target
    return t * (n - 1) - t * (t - 1) / 2;
}

std::vector<Edge> candidate_flips(const SparseGraph& g, const AttackScope& scope) {
    const std::size_t n = g.num_nodes();
    std::vector<Edge> out;
    if (std::holds_alternative<GlobalScope>(scope)) {
        out.reserve(n * (n - 1) / 2);
        for (NodeId i = 0; i < n; ++i) {
            for (NodeId j = i + 1; j < n; ++j) out.push_back({i, j});
        }
        return out;
    }
    const auto targets = sorted_targets(std::get<LocalScope>(scope), n);
    std::vector<char> is_target(n, 0);
    for (NodeId t : targets) is_target[t] = 1;
    for (NodeId i = 0; i < n; ++i) {
        for (NodeId j = i + 1; j < n; ++j) {
            if (is_target[i] || is_target[j]) out.push_back({i, j});
        }
    }
    return out;
}

PerturbationSet random_attack(const SparseGraph& g, const AttackConfig& cfg, std::uint64_t seed) {
    check_binary(g);
    const std::size_t budget = attack_budget(g, cfg);
    const std::size_t pool = candidate_count(g, cfg.scope);
    if (pool < budget) throw std::invalid_argument("candidate pool smaller than the attack budget");

    Rng rng(seed);
    const std::size_t n = g.num_nodes();
    std::vector<NodeId> targets;
    if (const auto* local = std::get_if<LocalScope>(&cfg.scope)) targets = sorted_targets(*local, n);
    std::set<Edge> chosen;
    std::vector<Edge> order;
    while (chosen.size() < budget) {
        NodeId a, b;
        if (targets.empty()) {
            a = static_cast<NodeId>(uniform_index(rng, n));
            b = static_cast<NodeId>(uniform_index(rng, n));
        } else {
            a = targets[uniform_index(rng, targets.size())];
            b = static_cast<NodeId>(uniform_index(rng, n));
        }
        if (a == b) continue;
        // pairs between two targets are reachable from both; keep them uniform
        if (!targets.empty() && std::binary_search(targets.begin(), targets.end(), b) && a > b) continue;
        chosen.insert(make_edge(a, b));
    }
    PerturbationSet ps;
    ps.flips.assign(chosen.begin(), chosen.end());
    ps.budget = budget;
    ps.pool_size = pool;
    return ps;
}

PerturbationSet greedy_attack(const SparseGraph& g, const Victim& victim, const AttackConfig& cfg) {
    check_binary(g);
    const std::size_t budget = attack_budget(g, cfg);
    const std::size_t pool_size = candidate_count(g, cfg.scope);
    if (pool_size > cfg.candidate_pool) {
        throw std::invalid_argument("greedy attack needs an enumerable pool: " + std::to_string(pool_size) +
                                    " candidates exceed candidate_pool " + std::to_string(cfg.candidate_pool));
    }
    std::vector<Edge> pool = candidate_flips(g, cfg.scope);

    PerturbationSet ps;
    ps.budget = budget;
    ps.pool_size = pool.size();
    double current = evaluate_loss(victim, g);
    std::vector<char> used(pool.size(), 0);
    std::vector<double> gain(pool.size());
    while (ps.flips.size() < budget) {
        parallel_for(pool.size(), [&](std::size_t k) {
            gain[k] = used[k] ? -std::numeric_limits<double>::infinity()
                              : evaluate_loss(victim, apply_perturbation(g, with_flip(ps.flips, pool[k])));
        });
        const std::size_t best = argmax_first(gain);
        if (!(gain[best] > current)) {
            ps.flagged = true;
            ps.note = "no remaining flip increases the loss";
            break;
        }
        used[best] = 1;
        ps.flips = with_flip(ps.flips, pool[best]);
        current = gain[best];
    }
    return ps;
}

std::vector<double> project_capped_simplex(std::span<const double> s, double budget) {
    if (!(budget >= 0.0)) throw std::invalid_argument("projection budget must be non-negative");
    auto clipped = [&](double tau) {
        std::vector<double> out(s.size());
        double sum = 0.0;
        for (std::size_t i = 0; i < s.size(); ++i) {
            out[i] = std::clamp(s[i] - tau, 0.0, 1.0);
            sum += out[i];
        }
        return std::pair{out, sum};
    };
    auto [box, total] = clipped(0.0);
    if (total <= budget) return box;
    // sum of clip(s - tau) is non-increasing in tau; bisect for the budget
    double lo = 0.0;
    double hi = *std::max_element(s.begin(), s.end());
    for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        (clipped(mid).second > budget ? lo : hi) = mid;
    }
    return clipped(hi).first;
}

SparseGraph relaxed_perturbation(const SparseGraph& g, std::span<const Edge> candidates, std::span<const double> s) {
    if (candidates.size() != s.size()) throw std::invalid_argument("relaxation values not aligned with candidates");
    std::vector<Edge> edges;
    std::vector<double> values;
    edges.reserve(g.num_edges() + candidates.size());
    values.reserve(g.num_edges() + candidates.size());
    std::size_t a = 0, b = 0;
    const auto ge = g.edges();
    while (a < ge.size() || b < candidates.size()) {
        if (b == candidates.size() || (a < ge.size() && ge[a] < candidates[b])) {
            edges.push_back(ge[a]);
            values.push_back(g.adjacency(a));
            ++a;
        } else if (a == ge.size() || candidates[b] < ge[a]) {
            edges.push_back(candidates[b]);
            values.push_back(std::clamp(s[b], 0.0, 1.0));
            ++b;
        } else {
            const double base = g.adjacency(a);
            edges.push_back(ge[a]);
            values.push_back(std::clamp(base + (1.0 - 2.0 * base) * s[b], 0.0, 1.0));
            ++a;
            ++b;
        }
    }
    return SparseGraph::relaxed(g.num_nodes(), std::move(edges), std::move(values), g.self_loops());
}

PerturbationSet pgd_attack(const SparseGraph& g, const Victim& victim, const AttackConfig& cfg) {
    check_binary(g);
    const auto& pgd = std::get<PgdMethod>(cfg.method);
    const std::size_t budget = attack_budget(g, cfg);
    std::vector<Edge> pool = candidate_flips(g, cfg.scope);
    if (pool.empty()) throw std::invalid_argument("PGD candidate pool is empty");
    const double clean_loss = evaluate_loss(victim, g);

    PerturbationSet ps;
    ps.budget = budget;
    if (pool.size() > cfg.candidate_pool) {
        std::vector<double> single(pool.size());
        parallel_for(pool.size(), [&](std::size_t k) {
            single[k] = evaluate_loss(victim, apply_perturbation(g, std::span<const Edge>(&pool[k], 1)));
        });
        std::vector<std::size_t> idx(pool.size());
        for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = k;
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) { return single[x] > single[y]; });
        idx.resize(cfg.candidate_pool);
        std::sort(idx.begin(), idx.end());
        std::vector<Edge> kept;
        for (std::size_t k : idx) kept.push_back(pool[k]);
        pool = std::move(kept);
    }
    ps.pool_size = pool.size();
    const std::size_t k = pool.size();

    std::vector<double> s(k, std::min(1.0, static_cast<double>(budget) / static_cast<double>(k)));
    std::vector<double> grad(k);
    for (std::size_t step = 0; step < pgd.steps; ++step) {
        parallel_for(k, [&](std::size_t c) {
            std::vector<double> up(s), down(s);
            up[c] = std::min(1.0, s[c] + pgd.fd_step);
            down[c] = std::max(0.0, s[c] - pgd.fd_step);
            const double hi = evaluate_loss(victim, relaxed_perturbation(g, pool, up));
            const double lo = evaluate_loss(victim, relaxed_perturbation(g, pool, down));
            grad[c] = (hi - lo) / (up[c] - down[c]);
        });
        for (std::size_t c = 0; c < k; ++c) s[c] += pgd.step_size * grad[c];
        s = project_capped_simplex(s, static_cast<double>(budget));
    }

    Rng rng(pgd.seed);
    std::vector<std::vector<Edge>> draws(pgd.samples);
    for (auto& flips : draws) {
        std::vector<std::size_t> picked;
        for (int attempt = 0; attempt < 1000; ++attempt) {
            picked.clear();
            for (std::size_t c = 0; c < k; ++c) {
                if (bernoulli(rng, s[c])) picked.push_back(c);
            }
            if (picked.size() <= budget) break;
        }
        if (picked.size() > budget) {
            // persistent overshoot: keep the most probable flips
            std::stable_sort(picked.begin(), picked.end(), [&](std::size_t x, std::size_t y) { return s[x] > s[y]; });
            picked.resize(budget);
            std::sort(picked.begin(), picked.end());
        }
        for (std::size_t c : picked) flips.push_back(pool[c]);
    }
    std::vector<double> loss(draws.size());
    parallel_for(draws.size(), [&](std::size_t d) { loss[d] = evaluate_loss(victim, apply_perturbation(g, draws[d])); });
    const std::size_t best = argmax_first(loss);

    ps.relaxed = s;
    ps.candidates = pool;
    if (loss[best] < clean_loss) {
        ps.flagged = true;
        ps.note = "every sampled perturbation is weaker than the clean graph";
        return ps;
    }
    ps.flips = draws[best];
    return ps;
}

PerturbationSet run_attack(const SparseGraph& g, const Victim& victim, const AttackConfig& cfg) {
    if (const auto* r = std::get_if<RandomMethod>(&cfg.method)) return random_attack(g, cfg, r->seed);
    if (std::holds_alternative<GreedyMethod>(cfg.method)) return greedy_attack(g, victim, cfg);
    return pgd_attack(g, victim, cfg);
}

SparseGraph apply_perturbation(const SparseGraph& g, std::span<const Edge> flips) {
    check_binary(g);
    std::vector<Edge> sorted;
    for (const Edge& f : flips) {
        if (f.u == f.v) throw std::invalid_argument("flip (" + std::to_string(f.u) + "," + std::to_string(f.v) +
                                                    ") would create a self-loop");
        if (f.u >= g.num_nodes() || f.v >= g.num_nodes()) throw std::out_of_range("flip endpoint out of range");
        sorted.push_back(make_edge(f.u, f.v));
    }
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw std::invalid_argument("duplicate flip in perturbation");
    }
    // symmetric difference of two sorted edge lists
    std::vector<Edge> out;
    out.reserve(g.num_edges() + sorted.size());
    std::set_symmetric_difference(g.edges().begin(), g.edges().end(), sorted.begin(), sorted.end(),
                                  std::back_inserter(out));
    return SparseGraph::build(g.num_nodes(), out, g.self_loops());
}

SparseGraph apply_perturbation(const SparseGraph& g, const PerturbationSet& ps) {
    if (ps.flips.size() > ps.budget) throw std::invalid_argument("perturbation exceeds its budget");
    return apply_perturbation(g, ps.flips);
}

Histogram attacked_edge_histogram(const SparseGraph& g, const SparseGraph& g_attacked, const FeatureMatrix& f,
                                  std::size_t bins) {
    if (bins < 1) throw std::invalid_argument("histogram needs at least one bin");
    if (g.num_nodes() != g_attacked.num_nodes() || f.rows() != g.num_nodes()) {
        throw std::invalid_argument("graphs and features disagree on the node count");
    }
    Histogram h;
    auto y = edge_differences(g_attacked, f);
    for (std::size_t e = 0; e < g_attacked.num_edges(); ++e) {
        const Edge& ed = g_attacked.edge(e);
        if (ed.is_loop() || g_attacked.adjacency(e) == 0.0 || g.has_edge(ed.u, ed.v)) continue;
        h.values.push_back(y[e]);
    }
    if (h.values.empty()) throw std::invalid_argument("no attacked edges to histogram");
    const double hi = *std::max_element(h.values.begin(), h.values.end());
    const double width = hi > 0.0 ? hi / static_cast<double>(bins) : 1.0;
    for (std::size_t b = 0; b <= bins; ++b) h.bin_edges.push_back(b == bins && hi > 0.0 ? hi : width * static_cast<double>(b));
    h.counts.assign(bins, 0);
    for (double v : h.values) {
        auto b = static_cast<std::size_t>(v / width);
        ++h.counts[std::min(b, bins - 1)];
    }
    return h;
}

void write_perturbation(const std::filesystem::path& path, const SparseGraph& g, const PerturbationSet& ps) {
    CsvWriter w(path);
    w.row("src", "dst", "action");
    for (const Edge& f : ps.flips) w.row(std::uint64_t{f.u}, std::uint64_t{f.v}, g.has_edge(f.u, f.v) ? "remove" : "add");
    w.close();
}

std::vector<Edge> read_perturbation(const std::filesystem::path& path) {
    CsvReader r(path);
    const auto& h = r.header();
    if (h.size() != 3 || h[0] != "src" || h[1] != "dst" || h[2] != "action") r.fail("expected header 'src,dst,action'");
    std::vector<Edge> out;
    std::vector<std::string> f;
    while (r.next(f)) {
        if (f.size() != 3) r.fail("expected 3 fields, got " + std::to_string(f.size()));
        const long long a = r.to_int(f[0]), b = r.to_int(f[1]);
        if (a < 0 || b < 0 || a > UINT32_MAX || b > UINT32_MAX) r.fail("node index out of range");
        if (f[2] != "add" && f[2] != "remove") r.fail("action must be 'add' or 'remove'");
        out.push_back(make_edge(static_cast<NodeId>(a), static_cast<NodeId>(b)));
    }
    return out;
}

void write_attack_report(const std::filesystem::path& path, std::span<const AttackReportRow> rows) {
    CsvWriter w(path);
    w.row("method", "budget", "loss_before", "loss_after", "acc_before", "acc_after");
    for (const auto& r : rows) {
        w.row(r.method, std::uint64_t{r.budget}, r.loss_before, r.loss_after, r.acc_before, r.acc_after);
    }
    w.close();
}

void write_histogram(const std::filesystem::path& path, const Histogram& h) {
    CsvWriter w(path);
    w.row("bin_lo", "bin_hi", "count");
    for (std::size_t b = 0; b < h.counts.size(); ++b) {
        w.row(h.bin_edges[b], h.bin_edges[b + 1], std::uint64_t{h.counts[b]});
    }
    w.close();
}

}  // namespace rung
