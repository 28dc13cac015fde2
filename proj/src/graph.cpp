#include "rung/graph.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "rung/csv.hpp"
#include "rung/random.hpp"

namespace rung {

SparseGraph SparseGraph::build(std::size_t n, std::span<const Edge> edges, bool self_loops) {
    if (n == 0) throw std::invalid_argument("graph must have at least one node");
    if (n > std::size_t{UINT32_MAX}) throw std::invalid_argument("too many nodes");
    std::vector<Edge> canon;
    canon.reserve(edges.size() + (self_loops ? n : 0));
    for (const Edge& e : edges) {
        if (e.u >= n || e.v >= n) {
            throw std::out_of_range("edge (" + std::to_string(e.u) + "," + std::to_string(e.v) +
                                    ") references a node >= " + std::to_string(n));
        }
        if (e.u == e.v) continue;
        canon.push_back(make_edge(e.u, e.v));
    }
    if (self_loops) {
        for (NodeId i = 0; i < n; ++i) canon.push_back({i, i});
    }
    std::sort(canon.begin(), canon.end());
    canon.erase(std::unique(canon.begin(), canon.end()), canon.end());

    SparseGraph g;
    g.n_ = n;
    g.self_loops_ = self_loops;
    g.binary_ = true;
    g.edges_ = std::move(canon);
    g.adjacency_.assign(g.edges_.size(), 1.0);
    g.index();
    return g;
}

SparseGraph SparseGraph::relaxed(std::size_t n, std::vector<Edge> edges, std::vector<double> adjacency,
                                 bool self_loops) {
    if (n == 0) throw std::invalid_argument("graph must have at least one node");
    if (edges.size() != adjacency.size()) throw std::invalid_argument("adjacency values not aligned with edges");
    for (std::size_t e = 0; e < edges.size(); ++e) {
        const Edge& ed = edges[e];
        if (ed.u > ed.v || ed.v >= n) throw std::invalid_argument("non-canonical edge in relaxed graph");
        if (e > 0 && !(edges[e - 1] < ed)) throw std::invalid_argument("relaxed graph edges must be sorted and unique");
        if (!(adjacency[e] >= 0.0 && adjacency[e] <= 1.0)) throw std::invalid_argument("adjacency value outside [0,1]");
        if (ed.is_loop() && !self_loops) throw std::invalid_argument("self-loop violates loop policy");
    }
    SparseGraph g;
    g.n_ = n;
    g.self_loops_ = self_loops;
    g.edges_ = std::move(edges);
    g.adjacency_ = std::move(adjacency);
    g.binary_ = std::all_of(g.adjacency_.begin(), g.adjacency_.end(), [](double a) { return a == 1.0; });
    g.index();
    return g;
}

void SparseGraph::index() {
    degree_.assign(n_, 0.0);
    offsets_.assign(n_ + 1, 0);
    loop_count_ = 0;
    for (std::size_t e = 0; e < edges_.size(); ++e) {
        const Edge& ed = edges_[e];
        degree_[ed.u] += adjacency_[e];
        ++offsets_[ed.u + 1];
        if (ed.is_loop()) {
            ++loop_count_;
        } else {
            degree_[ed.v] += adjacency_[e];
            ++offsets_[ed.v + 1];
        }
    }
    for (std::size_t i = 0; i < n_; ++i) offsets_[i + 1] += offsets_[i];
    incidence_.resize(offsets_[n_]);
    std::vector<std::size_t> cursor(offsets_.begin(), offsets_.end() - 1);
    for (std::size_t e = 0; e < edges_.size(); ++e) {
        const Edge& ed = edges_[e];
        incidence_[cursor[ed.u]++] = {ed.v, static_cast<std::uint32_t>(e)};
        if (!ed.is_loop()) incidence_[cursor[ed.v]++] = {ed.u, static_cast<std::uint32_t>(e)};
    }
    // Sorted edge order yields neighbor-sorted lists: (u',i) with u' < i come
    // first, then the loop, then (i,v) with v > i.
    inv_sqrt_degree_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) {
        inv_sqrt_degree_[i] = degree_[i] > 0.0 ? 1.0 / std::sqrt(degree_[i]) : 0.0;
    }
}

std::optional<std::size_t> SparseGraph::find_edge(NodeId i, NodeId j) const {
    if (i >= n_ || j >= n_) throw std::out_of_range("node index out of range");
    auto list = incident(i);
    auto it = std::lower_bound(list.begin(), list.end(), j,
                               [](const Incidence& inc, NodeId x) { return inc.neighbor < x; });
    if (it == list.end() || it->neighbor != j) return std::nullopt;
    return it->edge;
}

double SparseGraph::normalized_weight(NodeId i, NodeId j) const {
    auto e = find_edge(i, j);
    if (!e) return 0.0;
    return normalized_weight(*e);
}

EdgeWeights::EdgeWeights(const SparseGraph& g, std::vector<double> values) : values_(std::move(values)) {
    if (values_.size() != g.num_edges()) throw std::invalid_argument("edge weights not aligned with graph edges");
    for (std::size_t e = 0; e < values_.size(); ++e) {
        if (!(values_[e] >= 0.0)) throw std::invalid_argument("edge weights must be non-negative");
        if (g.edge(e).is_loop()) values_[e] = 0.0;
    }
}

void apply_reweighted_operator(const SparseGraph& g, std::span<const double> diag, const EdgeWeights& w,
                               double shift, std::span<const double> x, std::span<double> y) {
    const std::size_t n = g.num_nodes();
    for (std::size_t i = 0; i < n; ++i) y[i] = (diag[i] + shift) * x[i];
    for (std::size_t e = 0; e < g.num_edges(); ++e) {
        const Edge& ed = g.edge(e);
        if (ed.is_loop() || w[e] == 0.0) continue;
        const double c = w[e] * g.normalized_weight(e);
        y[ed.u] -= c * x[ed.v];
        y[ed.v] -= c * x[ed.u];
    }
}

SpectralNormEstimate spectral_norm(const SparseGraph& g, std::span<const double> diag, const EdgeWeights& w,
                                   double shift, const PowerIterationOptions& opts) {
    const std::size_t n = g.num_nodes();
    if (diag.size() != n) throw std::invalid_argument("diagonal length must equal node count");
    if (w.size() != g.num_edges()) throw std::invalid_argument("edge weights not aligned with graph edges");
    if (!(shift >= 0.0)) throw std::invalid_argument("shift must be non-negative");

    Rng rng(opts.seed);
    std::vector<double> x(n), y(n);
    double norm = 0.0;
    for (auto& xi : x) {
        xi = 2.0 * uniform01(rng) - 1.0;
        norm += xi * xi;
    }
    norm = std::sqrt(norm);
    for (auto& xi : x) xi /= norm;

    SpectralNormEstimate est;
    double prev = 0.0;
    std::size_t stop_at = opts.max_iterations;
    for (std::size_t it = 1; it <= opts.max_iterations; ++it) {
        apply_reweighted_operator(g, diag, w, shift, x, y);
        double s = 0.0, theta = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            s += y[i] * y[i];
            theta += x[i] * y[i];
        }
        s = std::sqrt(s);
        double r = 0.0;
        for (std::size_t i = 0; i < n; ++i) r += (y[i] - theta * x[i]) * (y[i] - theta * x[i]);
        r = std::sqrt(r);
        est.iterations = it;
        // ||M x|| with unit x is non-decreasing along power iterates of a
        // symmetric matrix, so the last value is the best estimate.
        est.value = s;
        est.upper = std::max(s, std::abs(theta) + r);
        if (s == 0.0) {
            est.converged = true;
            return est;
        }
        if (!est.converged && it > 1 && std::abs(s - prev) <= opts.tolerance * s) {
            est.converged = true;
            // the residual shrinks at half the rate of the value: allow as
            // many iterations again for the upper bound to tighten
            stop_at = std::min(opts.max_iterations, 2 * it);
        }
        if (est.converged && (r <= opts.tolerance * s || it >= stop_at)) return est;
        for (std::size_t i = 0; i < n; ++i) x[i] = y[i] / s;
        prev = s;
    }
    return est;
}

std::vector<Edge> read_edge_list(const std::filesystem::path& path, std::optional<std::size_t> node_count) {
    CsvReader r(path);
    if (r.header().size() != 2 || r.header()[0] != "src" || r.header()[1] != "dst") {
        r.fail("expected header 'src,dst'");
    }
    std::vector<Edge> edges;
    std::vector<std::string> f;
    while (r.next(f)) {
        if (f.size() != 2) r.fail("expected 2 fields, got " + std::to_string(f.size()));
        long long a = r.to_int(f[0]);
        long long b = r.to_int(f[1]);
        if (a < 0 || b < 0 || a > UINT32_MAX || b > UINT32_MAX) r.fail("node index out of range");
        if (node_count && (static_cast<std::size_t>(a) >= *node_count || static_cast<std::size_t>(b) >= *node_count)) {
            r.fail("node index " + std::to_string(std::max(a, b)) + " exceeds node count " + std::to_string(*node_count));
        }
        edges.push_back(make_edge(static_cast<NodeId>(a), static_cast<NodeId>(b)));
    }
    return edges;
}

void write_edge_list(const std::filesystem::path& path, const SparseGraph& g) {
    CsvWriter w(path);
    w.row("src", "dst");
    for (const Edge& e : g.edges()) {
        if (e.is_loop()) continue;
        w.row(std::uint64_t{e.u}, std::uint64_t{e.v});
    }
    w.close();
}

}  // namespace rung
