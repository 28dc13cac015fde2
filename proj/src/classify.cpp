#include "rung/classify.hpp"

#include <stdexcept>
#include <string>

#include "rung/csv.hpp"

namespace rung {

void LabeledSplit::validate() const {
    const std::size_t n = labels.size();
    for (int l : labels) {
        if (l != kUnknownLabel && (l < 0 || static_cast<std::size_t>(l) >= classes)) {
            throw std::invalid_argument("label " + std::to_string(l) + " outside [0," + std::to_string(classes) + ")");
        }
    }
    std::vector<char> seen(n, 0);
    auto check = [&](const std::vector<NodeId>& part, const char* name) {
        for (NodeId v : part) {
            if (v >= n) throw std::invalid_argument(std::string(name) + " node " + std::to_string(v) + " out of range");
            if (seen[v]) throw std::invalid_argument("node " + std::to_string(v) + " appears in more than one split");
            if (labels[v] == kUnknownLabel) {
                throw std::invalid_argument(std::string(name) + " node " + std::to_string(v) + " has no label");
            }
            seen[v] = 1;
        }
    };
    check(train, "train");
    check(val, "val");
    check(test, "test");
}

FeatureMatrix one_hot_train(const LabeledSplit& split) {
    FeatureMatrix f(split.num_nodes(), split.classes);
    for (NodeId v : split.train) f(v, static_cast<std::size_t>(split.labels[v])) = 1.0;
    return f;
}

FeatureMatrix propagate_labels(const SparseGraph& g, const SmootherConfig& cfg, const LabeledSplit& split) {
    if (split.train.empty()) throw std::invalid_argument("label propagation needs at least one train node");
    if (split.num_nodes() != g.num_nodes()) throw std::invalid_argument("label count does not match node count");
    if (split.classes == 0) throw std::invalid_argument("label propagation needs at least one class");
    split.validate();
    return smooth(g, cfg, one_hot_train(split)).features;
}

std::vector<int> predict(const FeatureMatrix& scores) {
    std::vector<int> out(scores.rows(), 0);
    for (std::size_t i = 0; i < scores.rows(); ++i) {
        auto r = scores.row(i);
        std::size_t best = 0;
        for (std::size_t k = 1; k < r.size(); ++k) {
            if (r[k] > r[best]) best = k;
        }
        out[i] = static_cast<int>(best);
    }
    return out;
}

double accuracy(const FeatureMatrix& scores, const LabeledSplit& split, std::span<const NodeId> subset) {
    if (subset.empty()) throw std::invalid_argument("accuracy over an empty node set");
    if (scores.rows() != split.num_nodes()) throw std::invalid_argument("score rows do not match label count");
    auto pred = predict(scores);
    std::size_t correct = 0;
    for (NodeId v : subset) {
        if (v >= split.num_nodes() || split.labels[v] == kUnknownLabel) {
            throw std::invalid_argument("node " + std::to_string(v) + " has no label");
        }
        if (pred[v] == split.labels[v]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(subset.size());
}

double bias_metric(const FeatureMatrix& clean, const FeatureMatrix& attacked) {
    if (!clean.same_shape(attacked)) throw std::invalid_argument("shape mismatch");
    auto a = clean.values();
    auto b = attacked.values();
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s;
}

void write_predictions(const std::filesystem::path& path, const FeatureMatrix& scores) {
    CsvWriter w(path);
    w << "node" << "pred";
    for (std::size_t k = 0; k < scores.cols(); ++k) w << ("score_" + std::to_string(k));
    w.end_row();
    auto pred = predict(scores);
    for (std::size_t i = 0; i < scores.rows(); ++i) {
        w << std::uint64_t{i} << pred[i];
        for (double x : scores.row(i)) w << x;
        w.end_row();
    }
    w.close();
}

}  // namespace rung
