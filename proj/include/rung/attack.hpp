#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "rung/features.hpp"
#include "rung/graph.hpp"

namespace rung {

// Budgets are percentages: of the edge count (global) or of each target's
// degree (local).
struct GlobalScope {
    double budget_pct = 10.0;
};

struct LocalScope {
    std::vector<NodeId> targets;
    double budget_pct = 100.0;
};

using AttackScope = std::variant<GlobalScope, LocalScope>;

struct RandomMethod {
    std::uint64_t seed = 0;
};

struct GreedyMethod {};

struct PgdMethod {
    std::size_t steps = 200;
    double step_size = 0.1;
    std::size_t samples = 20;
    std::uint64_t seed = 0;
    double fd_step = 0.05;
};

using AttackMethod = std::variant<RandomMethod, GreedyMethod, PgdMethod>;

enum class AttackLoss { margin, cross_entropy };

struct AttackConfig {
    AttackScope scope = GlobalScope{};
    AttackMethod method = GreedyMethod{};
    std::size_t candidate_pool = 2000;
    AttackLoss loss = AttackLoss::margin;

    void validate() const;
};

std::string method_name(const AttackMethod& m);
std::string loss_name(AttackLoss l);

struct PerturbationSet {
    std::vector<Edge> flips;               // toggled pairs, canonical and sorted
    std::optional<std::vector<double>> relaxed;  // PGD: final s over `candidates`
    std::vector<Edge> candidates;          // PGD: the capped candidate pool
    std::size_t budget = 0;
    std::size_t pool_size = 0;             // candidates considered
    bool flagged = false;                  // stopped early or no improving set found
    std::string note;
};

// Maps a (possibly relaxed) graph to n x c class scores. Must be safe to call
// concurrently.
using Pipeline = std::function<FeatureMatrix(const SparseGraph&)>;

struct Victim {
    Pipeline scores;
    std::vector<int> labels;    // true class per node
    std::vector<NodeId> nodes;  // nodes whose loss the attacker maximizes
    AttackLoss loss = AttackLoss::margin;
};

// Margin: sum over nodes of (best other score - true score).
// Cross entropy: sum over nodes of -log softmax(scores)_true.
double attack_loss(const FeatureMatrix& scores, std::span<const int> labels, std::span<const NodeId> nodes,
                   AttackLoss loss);
double evaluate_loss(const Victim& v, const SparseGraph& g);

std::size_t attack_budget(const SparseGraph& g, const AttackConfig& cfg);

// Every non-loop pair within scope in lexicographic order: all pairs for a
// global attack, pairs touching a target for a local one.
std::vector<Edge> candidate_flips(const SparseGraph& g, const AttackScope& scope);
std::size_t candidate_count(const SparseGraph& g, const AttackScope& scope);

PerturbationSet random_attack(const SparseGraph& g, const AttackConfig& cfg, std::uint64_t seed);
PerturbationSet greedy_attack(const SparseGraph& g, const Victim& victim, const AttackConfig& cfg);
PerturbationSet pgd_attack(const SparseGraph& g, const Victim& victim, const AttackConfig& cfg);

// Dispatches on cfg.method.
PerturbationSet run_attack(const SparseGraph& g, const Victim& victim, const AttackConfig& cfg);

// Toggles every flip of a binary graph.
SparseGraph apply_perturbation(const SparseGraph& g, std::span<const Edge> flips);
SparseGraph apply_perturbation(const SparseGraph& g, const PerturbationSet& ps);

// A + (1 - 2A) s over the candidate pairs, as a relaxed graph.
SparseGraph relaxed_perturbation(const SparseGraph& g, std::span<const Edge> candidates, std::span<const double> s);

// Euclidean projection onto {s in [0,1]^k : sum s <= budget}.
std::vector<double> project_capped_simplex(std::span<const double> s, double budget);

struct Histogram {
    std::vector<double> bin_edges;  // bins + 1 values
    std::vector<std::size_t> counts;
    std::vector<double> values;     // the samples, in edge order
};

// Edge differences y_ij (under g_attacked's degrees) of edges in g_attacked
// that are absent from g.
Histogram attacked_edge_histogram(const SparseGraph& g, const SparseGraph& g_attacked, const FeatureMatrix& f,
                                  std::size_t bins);

struct AttackReportRow {
    std::string method;
    std::size_t budget = 0;
    double loss_before = 0.0;
    double loss_after = 0.0;
    double acc_before = 0.0;
    double acc_after = 0.0;
};

// `src,dst,action` with action add/remove relative to g.
void write_perturbation(const std::filesystem::path& path, const SparseGraph& g, const PerturbationSet& ps);
std::vector<Edge> read_perturbation(const std::filesystem::path& path);
void write_attack_report(const std::filesystem::path& path, std::span<const AttackReportRow> rows);
void write_histogram(const std::filesystem::path& path, const Histogram& h);

}  // namespace rung
