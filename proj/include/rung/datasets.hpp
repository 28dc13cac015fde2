#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "rung/classify.hpp"
#include "rung/features.hpp"
#include "rung/graph.hpp"

namespace rung {

struct SplitRatios {
    double train = 0.1;
    double val = 0.1;
    double test = 0.8;
};

// Stochastic block model with Gaussian class clusters. Classes occupy
// contiguous, balanced node blocks. Centers default to center_scale times the
// unit vectors e_0..e_{c-1}, which needs feature_dim >= classes.
struct SyntheticParams {
    std::size_t n = 500;
    std::size_t classes = 2;
    double intra_p = 0.02;
    double inter_q = 0.002;
    std::size_t feature_dim = 0;  // 0 means `classes`
    double center_scale = 3.0;
    std::optional<std::vector<std::vector<double>>> class_centers;
    double feature_sigma = 1.0;
    SplitRatios split{};
    bool self_loops = false;
    std::uint64_t seed = 0;

    std::size_t dimension() const { return feature_dim == 0 ? classes : feature_dim; }
    std::vector<std::vector<double>> centers() const;
    void validate() const;
};

struct Dataset {
    SparseGraph graph;
    FeatureMatrix features;
    LabeledSplit split;
    std::vector<NodeId> isolated;  // zero-degree nodes (not counting self-loops)
};

std::size_t class_of(std::size_t node, std::size_t n, std::size_t classes);

Dataset generate_sbm(const SyntheticParams& params);

// Uniform simple graph with exactly m distinct non-loop edges.
SparseGraph random_graph(std::size_t n, std::size_t m, std::uint64_t seed, bool self_loops = false);

// Node count comes from the feature file. Without a label file every label is
// unknown and all splits are empty.
Dataset load_dataset(const std::filesystem::path& edge_path, const std::filesystem::path& feature_path,
                     const std::optional<std::filesystem::path>& label_path, bool self_loops = false);
void save_dataset(const Dataset& d, const std::filesystem::path& edge_path, const std::filesystem::path& feature_path,
                  const std::filesystem::path& label_path);

// Labels CSV `node,label[,split]`, label -1 for unknown, split one of
// train/val/test/none. Without the split column labeled nodes become train.
LabeledSplit read_labels(const std::filesystem::path& path, std::size_t n);
void write_labels(const std::filesystem::path& path, const LabeledSplit& split);

}  // namespace rung
