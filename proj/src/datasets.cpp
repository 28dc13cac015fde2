#include "rung/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <string>

#include "rung/csv.hpp"
#include "rung/random.hpp"

namespace rung {

namespace {

// Appends every j in [lo, hi) that survives an independent coin with
// probability p, using geometric gaps so sparse rows cost O(hits).
void sample_range(NodeId i, std::size_t lo, std::size_t hi, double p, Rng& rng, std::vector<Edge>& out) {
    if (p <= 0.0 || lo >= hi) return;
    if (p >= 1.0) {
        for (std::size_t j = lo; j < hi; ++j) out.push_back({i, static_cast<NodeId>(j)});
        return;
    }
    const double log_q = std::log1p(-p);
    std::size_t j = lo;
    while (true) {
        const double u = 1.0 - uniform01(rng);  // (0,1]
        const double skip = std::floor(std::log(u) / log_q);
        if (skip >= static_cast<double>(hi - j)) return;
        j += static_cast<std::size_t>(skip);
        out.push_back({i, static_cast<NodeId>(j)});
        ++j;
        if (j >= hi) return;
    }
}

std::size_t class_begin(std::size_t c, std::size_t n, std::size_t classes) {
    const std::size_t base = n / classes, extra = n % classes;
    return c * base + std::min(c, extra);
}

const char* split_name(int tag) {
    switch (tag) {
        case 1:
            return "train";
        case 2:
            return "val";
        case 3:
            return "test";
        default:
            return "none";
    }
}

}  // namespace

std::vector<std::vector<double>> SyntheticParams::centers() const {
    if (class_centers) return *class_centers;
    std::vector<std::vector<double>> c(classes, std::vector<double>(dimension(), 0.0));
    for (std::size_t k = 0; k < classes; ++k) c[k][k] = center_scale;
    return c;
}

void SyntheticParams::validate() const {
    if (n == 0) throw std::invalid_argument("dataset.n must be positive");
    if (classes == 0 || classes > n) throw std::invalid_argument("dataset.classes must lie in [1, n]");
    if (!(inter_q >= 0.0 && inter_q <= intra_p && intra_p <= 1.0)) {
        throw std::invalid_argument("dataset probabilities must satisfy 0 <= inter_q <= intra_p <= 1");
    }
    if (!(center_scale > 0.0)) throw std::invalid_argument("dataset.center_scale must be positive");
    if (!(feature_sigma >= 0.0)) throw std::invalid_argument("dataset.feature_sigma must be non-negative");
    if (class_centers) {
        if (class_centers->size() != classes) throw std::invalid_argument("dataset.class_centers needs one row per class");
        for (const auto& c : *class_centers) {
            if (c.size() != dimension()) throw std::invalid_argument("dataset.class_centers rows must have feature_dim entries");
        }
    } else if (dimension() < classes) {
        throw std::invalid_argument("dataset.feature_dim must be at least classes for one-hot centers");
    }
    const double r[] = {split.train, split.val, split.test};
    for (double x : r) {
        if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("dataset split ratios must lie in [0,1]");
    }
    if (split.train + split.val + split.test > 1.0 + 1e-12) throw std::invalid_argument("dataset split ratios exceed 1");
}

std::size_t class_of(std::size_t node, std::size_t n, std::size_t classes) {
    const std::size_t base = n / classes, extra = n % classes;
    const std::size_t big = extra * (base + 1);
    return node < big ? node / (base + 1) : extra + (node - big) / base;
}

Dataset generate_sbm(const SyntheticParams& params) {
    params.validate();
    const std::size_t n = params.n, c = params.classes;
    Rng graph_rng(derive_seed(params.seed, "graph"));
    std::vector<Edge> edges;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t end = class_begin(class_of(i, n, c) + 1, n, c);
        sample_range(static_cast<NodeId>(i), i + 1, end, params.intra_p, graph_rng, edges);
        sample_range(static_cast<NodeId>(i), end, n, params.inter_q, graph_rng, edges);
    }

    Dataset d{SparseGraph::build(n, edges, params.self_loops), {}, {}, {}};

    Rng feature_rng(derive_seed(params.seed, "features"));
    const auto centers = params.centers();
    d.features = FeatureMatrix(n, params.dimension());
    d.split.classes = c;
    d.split.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t k = class_of(i, n, c);
        d.split.labels[i] = static_cast<int>(k);
        for (std::size_t j = 0; j < params.dimension(); ++j) {
            d.features(i, j) = centers[k][j] + params.feature_sigma * standard_normal(feature_rng);
        }
    }

    Rng split_rng(derive_seed(params.seed, "split"));
    std::vector<NodeId> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<NodeId>(i);
    shuffle(std::span<NodeId>(order), split_rng);
    auto take = [&](double ratio, std::size_t& pos) {
        const auto k = std::min(n - pos, static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n))));
        std::vector<NodeId> part(order.begin() + static_cast<std::ptrdiff_t>(pos),
                                 order.begin() + static_cast<std::ptrdiff_t>(pos + k));
        std::sort(part.begin(), part.end());
        pos += k;
        return part;
    };
    std::size_t pos = 0;
    d.split.train = take(params.split.train, pos);
    d.split.val = take(params.split.val, pos);
    d.split.test = take(params.split.test, pos);

    for (std::size_t i = 0; i < n; ++i) {
        if (d.graph.degree(static_cast<NodeId>(i)) == (params.self_loops ? 1.0 : 0.0)) {
            d.isolated.push_back(static_cast<NodeId>(i));
        }
    }
    return d;
}

SparseGraph random_graph(std::size_t n, std::size_t m, std::uint64_t seed, bool self_loops) {
    if (n < 2) throw std::invalid_argument("random graph needs at least two nodes");
    const double pairs = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
    if (static_cast<double>(m) > pairs) throw std::invalid_argument("more edges requested than node pairs");
    Rng rng(seed);
    std::set<Edge> chosen;
    while (chosen.size() < m) {
        const auto a = static_cast<NodeId>(uniform_index(rng, n));
        const auto b = static_cast<NodeId>(uniform_index(rng, n));
        if (a != b) chosen.insert(make_edge(a, b));
    }
    std::vector<Edge> edges(chosen.begin(), chosen.end());
    return SparseGraph::build(n, edges, self_loops);
}

LabeledSplit read_labels(const std::filesystem::path& path, std::size_t n) {
    CsvReader r(path);
    const auto& h = r.header();
    const bool with_split = h.size() == 3 && h[2] == "split";
    if (h.size() < 2 || h[0] != "node" || h[1] != "label" || (h.size() == 3 && !with_split) || h.size() > 3) {
        r.fail("expected header 'node,label' or 'node,label,split'");
    }
    LabeledSplit s;
    s.labels.assign(n, kUnknownLabel);
    std::vector<char> seen(n, 0);
    std::vector<std::string> f;
    int max_label = -1;
    while (r.next(f)) {
        if (f.size() != h.size()) r.fail("expected " + std::to_string(h.size()) + " fields, got " + std::to_string(f.size()));
        const long long v = r.to_int(f[0]);
        if (v < 0 || static_cast<std::size_t>(v) >= n) r.fail("node index " + f[0] + " outside [0," + std::to_string(n) + ")");
        if (seen[v]) r.fail("duplicate node " + f[0]);
        seen[v] = 1;
        const long long label = r.to_int(f[1]);
        if (label < kUnknownLabel || label > 1'000'000) r.fail("invalid label " + f[1]);
        s.labels[v] = static_cast<int>(label);
        max_label = std::max(max_label, static_cast<int>(label));
        const auto node = static_cast<NodeId>(v);
        std::string part = with_split ? f[2] : (label == kUnknownLabel ? "none" : "train");
        if (part != "none" && label == kUnknownLabel) r.fail("split '" + part + "' needs a known label");
        if (part == "train") {
            s.train.push_back(node);
        } else if (part == "val") {
            s.val.push_back(node);
        } else if (part == "test") {
            s.test.push_back(node);
        } else if (part != "none") {
            r.fail("unknown split '" + part + "'");
        }
    }
    for (auto* part : {&s.train, &s.val, &s.test}) std::sort(part->begin(), part->end());
    s.classes = static_cast<std::size_t>(max_label + 1);
    return s;
}

void write_labels(const std::filesystem::path& path, const LabeledSplit& split) {
    std::vector<int> tag(split.num_nodes(), 0);
    for (NodeId v : split.train) tag[v] = 1;
    for (NodeId v : split.val) tag[v] = 2;
    for (NodeId v : split.test) tag[v] = 3;
    CsvWriter w(path);
    w.row("node", "label", "split");
    for (std::size_t i = 0; i < split.num_nodes(); ++i) w.row(std::uint64_t{i}, split.labels[i], split_name(tag[i]));
    w.close();
}

Dataset load_dataset(const std::filesystem::path& edge_path, const std::filesystem::path& feature_path,
                     const std::optional<std::filesystem::path>& label_path, bool self_loops) {
    FeatureMatrix features = read_features(feature_path);
    const std::size_t n = features.rows();
    auto edges = read_edge_list(edge_path, n);
    Dataset d{SparseGraph::build(n, edges, self_loops), std::move(features), {}, {}};
    if (label_path) {
        d.split = read_labels(*label_path, n);
    } else {
        d.split.labels.assign(n, kUnknownLabel);
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (d.graph.degree(static_cast<NodeId>(i)) == (self_loops ? 1.0 : 0.0)) d.isolated.push_back(static_cast<NodeId>(i));
    }
    return d;
}

void save_dataset(const Dataset& d, const std::filesystem::path& edge_path, const std::filesystem::path& feature_path,
                  const std::filesystem::path& label_path) {
    write_edge_list(edge_path, d.graph);
    write_features(feature_path, d.features);
    write_labels(label_path, d.split);
}

}  // namespace rung
