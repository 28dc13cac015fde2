#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "rung/features.hpp"
#include "rung/graph.hpp"
#include "rung/smoother.hpp"

namespace rung {

inline constexpr int kUnknownLabel = -1;

struct LabeledSplit {
    std::vector<int> labels;  // class id per node, kUnknownLabel if not known
    std::vector<NodeId> train;
    std::vector<NodeId> val;
    std::vector<NodeId> test;
    std::size_t classes = 0;

    std::size_t num_nodes() const { return labels.size(); }
    // Checks ranges, disjointness and that every split node is labeled.
    void validate() const;

    friend bool operator==(const LabeledSplit&, const LabeledSplit&) = default;
};

// One-hot rows for train nodes, zero rows elsewhere.
FeatureMatrix one_hot_train(const LabeledSplit& split);

// n x c class scores obtained by smoothing the one-hot train labels.
FeatureMatrix propagate_labels(const SparseGraph& g, const SmootherConfig& cfg, const LabeledSplit& split);

// Argmax per row, ties resolved to the lowest class id.
std::vector<int> predict(const FeatureMatrix& scores);

double accuracy(const FeatureMatrix& scores, const LabeledSplit& split, std::span<const NodeId> subset);

// sum_i ||a_i - b_i||^2
double bias_metric(const FeatureMatrix& clean, const FeatureMatrix& attacked);

// Predictions CSV: `node,pred,score_0,...,score_{c-1}`.
void write_predictions(const std::filesystem::path& path, const FeatureMatrix& scores);

}  // namespace rung
