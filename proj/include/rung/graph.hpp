#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace rung {

using NodeId = std::uint32_t;

// Undirected edge stored once with u <= v.
struct Edge {
    NodeId u = 0;
    NodeId v = 0;

    bool is_loop() const { return u == v; }
    friend auto operator<=>(const Edge&, const Edge&) = default;
};

inline Edge make_edge(NodeId a, NodeId b) { return a <= b ? Edge{a, b} : Edge{b, a}; }

// One entry of a node's adjacency list: the other endpoint and the index of
// the edge in SparseGraph::edges().
struct Incidence {
    NodeId neighbor = 0;
    std::uint32_t edge = 0;
};

// Immutable undirected graph. Edges are kept sorted and unique (u <= v), the
// adjacency of node i is available in CSR form through incident(i).
//
// Every stored edge carries an adjacency value, which is 1 for graphs built
// with build(). Relaxed graphs used by the topology attack carry values in
// [0, 1]; degrees are then the weighted sums. A self-loop contributes its
// value once to the degree of its node.
class SparseGraph {
public:
    static SparseGraph build(std::size_t n, std::span<const Edge> edges, bool self_loops);

    // Edges with continuous adjacency values. Values must be in [0, 1] and
    // aligned with `edges` (which must be canonical: sorted, unique, u <= v).
    static SparseGraph relaxed(std::size_t n, std::vector<Edge> edges,
                               std::vector<double> adjacency, bool self_loops);

    std::size_t num_nodes() const { return n_; }
    std::size_t num_edges() const { return edges_.size(); }
    // Edge count without self-loops.
    std::size_t num_proper_edges() const { return edges_.size() - loop_count_; }
    bool self_loops() const { return self_loops_; }
    bool is_binary() const { return binary_; }

    std::span<const Edge> edges() const { return edges_; }
    const Edge& edge(std::size_t e) const { return edges_[e]; }
    double adjacency(std::size_t e) const { return adjacency_[e]; }
    std::span<const double> adjacency() const { return adjacency_; }

    double degree(NodeId i) const { return degree_[i]; }
    std::span<const double> degrees() const { return degree_; }
    // 1/sqrt(d_i), 0 for isolated nodes.
    double inv_sqrt_degree(NodeId i) const { return inv_sqrt_degree_[i]; }

    std::span<const Incidence> incident(NodeId i) const {
        return {incidence_.data() + offsets_[i], incidence_.data() + offsets_[i + 1]};
    }

    std::optional<std::size_t> find_edge(NodeId i, NodeId j) const;
    bool has_edge(NodeId i, NodeId j) const { return find_edge(i, j).has_value(); }

    // Entry of the symmetrically normalized adjacency A_ij / sqrt(d_i d_j).
    double normalized_weight(NodeId i, NodeId j) const;
    // Same, by edge index.
    double normalized_weight(std::size_t e) const {
        const Edge& ed = edges_[e];
        return adjacency_[e] * inv_sqrt_degree_[ed.u] * inv_sqrt_degree_[ed.v];
    }

    // Same node count, loop policy, edges and adjacency values.
    friend bool operator==(const SparseGraph& a, const SparseGraph& b) {
        return a.n_ == b.n_ && a.self_loops_ == b.self_loops_ && a.edges_ == b.edges_ && a.adjacency_ == b.adjacency_;
    }

private:
    SparseGraph() = default;
    void index();

    std::size_t n_ = 0;
    bool self_loops_ = false;
    bool binary_ = true;
    std::size_t loop_count_ = 0;
    std::vector<Edge> edges_;
    std::vector<double> adjacency_;
    std::vector<double> degree_;
    std::vector<double> inv_sqrt_degree_;
    std::vector<std::size_t> offsets_;
    std::vector<Incidence> incidence_;
};

// Per-edge reweighting values W, aligned with SparseGraph::edges(). One value
// serves both (i,j) and (j,i), self-loop entries are always zero.
class EdgeWeights {
public:
    EdgeWeights() = default;
    EdgeWeights(const SparseGraph& g, std::vector<double> values);

    static EdgeWeights zeros(const SparseGraph& g) {
        return EdgeWeights(g, std::vector<double>(g.num_edges(), 0.0));
    }

    std::size_t size() const { return values_.size(); }
    double operator[](std::size_t e) const { return values_[e]; }
    std::span<const double> values() const { return values_; }

private:
    std::vector<double> values_;
};

struct PowerIterationOptions {
    double tolerance = 1e-8;
    std::size_t max_iterations = 10000;
    std::uint64_t seed = 0x5eed;
};

struct SpectralNormEstimate {
    double value = 0.0;
    // Rayleigh quotient plus residual norm of the final iterate: an eigenvalue
    // lies within the residual of the quotient, so this does not fall below
    // the norm once the iterate is aligned with the dominant eigenvector.
    double upper = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
};

// ||diag(diag) - W (.) A~ + shift I||_2 by power iteration. Deterministic for
// a given seed. Non-convergence is reported through the flag, the value is
// the best estimate seen.
SpectralNormEstimate spectral_norm(const SparseGraph& g, std::span<const double> diag,
                                   const EdgeWeights& w, double shift,
                                   const PowerIterationOptions& opts = {});

// y = (diag(diag) - W (.) A~ + shift I) x
void apply_reweighted_operator(const SparseGraph& g, std::span<const double> diag,
                               const EdgeWeights& w, double shift, std::span<const double> x,
                               std::span<double> y);

// Edge-list CSV: header `src,dst`, one undirected edge per row.
// With `node_count`, indices >= node_count are rejected with the offending line.
std::vector<Edge> read_edge_list(const std::filesystem::path& path, std::optional<std::size_t> node_count = {});
void write_edge_list(const std::filesystem::path& path, const SparseGraph& g);

}  // namespace rung
