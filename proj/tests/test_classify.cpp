#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "rung/classify.hpp"
#include "rung/datasets.hpp"

using namespace rung;

namespace {

SmootherConfig config(Penalty p, double lambda = 1.0 / 9.0) {
    SmootherConfig c;
    c.penalty = p;
    c.lambda = lambda;
    return c;
}

Dataset homophilous(std::uint64_t seed) {
    SyntheticParams s;
    s.n = 200;
    s.intra_p = 0.2;
    s.inter_q = 0.01;
    s.seed = seed;
    return generate_sbm(s);
}

}  // namespace

TEST_CASE("label propagation on a homophilous graph") {
    for (std::uint64_t seed : {1, 2, 3}) {
        auto d = homophilous(seed);
        auto scores = propagate_labels(d.graph, config(Penalty::l2()), d.split);
        CHECK(accuracy(scores, d.split, d.split.test) > 0.9);
    }
}

TEST_CASE("L2 scores stay within [0,1]") {
    auto d = homophilous(8);
    for (double lambda : {0.05, 1.0, 5.0}) {
        auto scores = propagate_labels(d.graph, config(Penalty::l2(), lambda), d.split);
        CHECK(scores.all_finite());
        for (double x : scores.values()) {
            CHECK(x >= 0.0);
            CHECK(x <= 1.0);
        }
    }
}

TEST_CASE("robust penalties also propagate labels") {
    auto d = homophilous(4);
    for (auto p : {Penalty::l1(), Penalty::mcp(3.0)}) {
        auto scores = propagate_labels(d.graph, config(p), d.split);
        CHECK(scores.all_finite());
        CHECK(accuracy(scores, d.split, d.split.test) > 0.8);
    }
}

TEST_CASE("single class predicts that class everywhere") {
    SyntheticParams s;
    s.n = 30;
    s.classes = 1;
    s.intra_p = 0.3;
    s.inter_q = 0.0;
    auto d = generate_sbm(s);
    auto scores = propagate_labels(d.graph, config(Penalty::l2()), d.split);
    for (int p : predict(scores)) CHECK(p == 0);
}

TEST_CASE("class permutation permutes predictions") {
    auto d = homophilous(5);
    d.split.classes = 2;
    auto base = predict(propagate_labels(d.graph, config(Penalty::l2()), d.split));
    auto swapped = d.split;
    for (int& l : swapped.labels) l = 1 - l;
    auto perm = predict(propagate_labels(d.graph, config(Penalty::l2()), swapped));
    for (std::size_t i = 0; i < base.size(); ++i) CHECK(perm[i] == 1 - base[i]);
}

TEST_CASE("prediction ties go to the lowest class") {
    FeatureMatrix s(3, 3, std::vector<double>{0.2, 0.2, 0.1, 0, 0, 0, 0.1, 0.5, 0.5});
    CHECK(predict(s) == std::vector<int>{0, 0, 1});
}

TEST_CASE("accuracy worked values") {
    LabeledSplit split;
    split.labels = {0, 1, 0, 1};
    split.classes = 2;
    split.test = {0, 1, 2, 3};
    FeatureMatrix right(4, 2, std::vector<double>{1, 0, 0, 1, 1, 0, 0, 1});
    FeatureMatrix wrong(4, 2, std::vector<double>{0, 1, 1, 0, 0, 1, 1, 0});
    FeatureMatrix half(4, 2, std::vector<double>{1, 0, 1, 0, 1, 0, 1, 0});
    CHECK(accuracy(right, split, split.test) == 1.0);
    CHECK(accuracy(wrong, split, split.test) == 0.0);
    CHECK(accuracy(half, split, split.test) == 0.5);
    std::vector<NodeId> none;
    CHECK_THROWS(accuracy(right, split, none));
}

TEST_CASE("bias metric") {
    FeatureMatrix a(3, 2, 0.5);
    CHECK(bias_metric(a, a) == 0.0);
    auto b = a;
    b(1, 0) += 1.0;
    CHECK(bias_metric(a, b) == 1.0);
    CHECK_THROWS(bias_metric(a, FeatureMatrix(2, 2)));
}

TEST_CASE("preconditions") {
    auto d = homophilous(6);
    auto split = d.split;
    split.train.clear();
    CHECK_THROWS(propagate_labels(d.graph, config(Penalty::l2()), split));
    auto cfg = config(Penalty::l2());
    cfg.iterations = 0;
    CHECK_THROWS(propagate_labels(d.graph, cfg, d.split));
    split = d.split;
    split.val.push_back(split.train.front());
    CHECK_THROWS(split.validate());
}

TEST_CASE("predictions CSV") {
    auto path = std::filesystem::temp_directory_path() / "rung_predictions.csv";
    write_predictions(path, FeatureMatrix(2, 2, std::vector<double>{0.25, 0.5, 1, 0}));
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    CHECK(ss.str() == "node,pred,score_0,score_1\n0,1,0.25,0.5\n1,0,1,0\n");
    std::filesystem::remove(path);
}
