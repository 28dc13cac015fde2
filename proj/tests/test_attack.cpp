#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <set>

#include "rung/attack.hpp"
#include "rung/classify.hpp"
#include "rung/datasets.hpp"
#include "rung/smoother.hpp"
#include "test_support.hpp"

using namespace rung;
using testing_support::graph;

namespace {

Dataset two_clusters(std::size_t n, std::uint64_t seed, double p = 0.3, double q = 0.02) {
    SyntheticParams s;
    s.n = n;
    s.intra_p = p;
    s.inter_q = q;
    s.feature_sigma = 0.3;
    s.seed = seed;
    s.split = {0.2, 0.0, 0.8};
    return generate_sbm(s);
}

Victim feature_victim(const Dataset& d, Penalty p, std::vector<NodeId> nodes) {
    SmootherConfig cfg;
    cfg.penalty = p;
    cfg.lambda = 1.0 / 9.0;
    Victim v;
    v.scores = [cfg, f0 = d.features](const SparseGraph& g) { return smooth(g, cfg, f0).features; };
    v.labels = d.split.labels;
    v.nodes = std::move(nodes);
    return v;
}

// Best loss over every subset of `pool` with at most `budget` flips.
double exhaustive_best(const SparseGraph& g, const Victim& v, const std::vector<Edge>& pool, std::size_t budget) {
    double best = evaluate_loss(v, g);
    const std::size_t k = pool.size();
    for (std::uint32_t mask = 1; mask < (1u << k); ++mask) {
        if (static_cast<std::size_t>(std::popcount(mask)) > budget) continue;
        std::vector<Edge> flips;
        for (std::size_t i = 0; i < k; ++i) {
            if (mask & (1u << i)) flips.push_back(pool[i]);
        }
        best = std::max(best, evaluate_loss(v, apply_perturbation(g, flips)));
    }
    return best;
}

}  // namespace

TEST_CASE("budget arithmetic") {
    auto g = random_graph(100, 1000, 1);
    AttackConfig cfg;
    cfg.scope = GlobalScope{10.0};
    CHECK(attack_budget(g, cfg) == 100);

    auto star = graph(5, {{0, 1}, {0, 2}, {0, 3}, {0, 4}});
    cfg.scope = LocalScope{{0}, 200.0};
    CHECK(attack_budget(star, cfg) == 8);
    cfg.scope = LocalScope{{1}, 50.0};
    CHECK_THROWS(attack_budget(star, cfg));
    cfg.scope = LocalScope{{1, 2}, 150.0};
    CHECK(attack_budget(star, cfg) == 4);
    cfg.scope = GlobalScope{0.0};
    CHECK_THROWS(attack_budget(star, cfg));
}

TEST_CASE("candidate enumeration") {
    auto g = graph(5, {{0, 1}});
    CHECK(candidate_flips(g, GlobalScope{}).size() == 10);
    CHECK(candidate_count(g, GlobalScope{}) == 10);
    auto local = candidate_flips(g, LocalScope{{1, 3}, 100.0});
    CHECK(local.size() == candidate_count(g, LocalScope{{1, 3}, 100.0}));
    CHECK(local.size() == 7);
    for (const auto& e : local) CHECK((e.u == 1 || e.v == 1 || e.u == 3 || e.v == 3));
    CHECK(std::is_sorted(local.begin(), local.end()));
}

TEST_CASE("random attack is deterministic and respects scope") {
    auto d = two_clusters(60, 3);
    AttackConfig cfg;
    cfg.scope = GlobalScope{20.0};
    auto a = random_attack(d.graph, cfg, 9);
    auto b = random_attack(d.graph, cfg, 9);
    CHECK(a.flips == b.flips);
    CHECK(a.flips.size() == attack_budget(d.graph, cfg));
    CHECK(random_attack(d.graph, cfg, 10).flips != a.flips);
    std::set<Edge> unique(a.flips.begin(), a.flips.end());
    CHECK(unique.size() == a.flips.size());

    cfg.scope = LocalScope{{4, 17}, 200.0};
    auto l = random_attack(d.graph, cfg, 1);
    CHECK(l.flips.size() <= l.budget);
    for (const auto& e : l.flips) {
        CHECK(e.u != e.v);
        CHECK((e.u == 4 || e.v == 4 || e.u == 17 || e.v == 17));
    }

    auto tiny = graph(3, {{0, 1}, {1, 2}});
    cfg.scope = GlobalScope{200.0};
    CHECK_THROWS(random_attack(tiny, cfg, 1));
    cfg.scope = GlobalScope{150.0};
    CHECK(random_attack(tiny, cfg, 1).flips.size() == 3);
}

TEST_CASE("applying perturbations") {
    auto g = graph(4, {{0, 1}, {1, 2}});
    std::vector<Edge> flips{{0, 1}, {2, 3}};
    auto h = apply_perturbation(g, flips);
    CHECK_FALSE(h.has_edge(0, 1));
    CHECK(h.has_edge(2, 3));
    CHECK(h.has_edge(1, 2));
    CHECK(apply_perturbation(h, flips) == g);
    std::vector<Edge> loop{{2, 2}};
    CHECK_THROWS(apply_perturbation(g, loop));
    std::vector<Edge> dup{{0, 1}, {1, 0}};
    CHECK_THROWS(apply_perturbation(g, dup));

    std::mt19937_64 rng(2);
    for (int t = 0; t < 30; ++t) {
        auto base = random_graph(30, 60, t);
        AttackConfig cfg;
        cfg.scope = GlobalScope{30.0};
        auto ps = random_attack(base, cfg, t);
        auto att = apply_perturbation(base, ps);
        std::vector<Edge> diff;
        std::set_symmetric_difference(base.edges().begin(), base.edges().end(), att.edges().begin(),
                                      att.edges().end(), std::back_inserter(diff));
        CHECK(diff == ps.flips);
        CHECK(apply_perturbation(att, ps) == base);
    }
}

TEST_CASE("relaxed perturbation interpolates") {
    auto g = graph(4, {{0, 1}, {1, 2}});
    std::vector<Edge> cands{{0, 1}, {0, 3}};
    std::vector<double> zero{0.0, 0.0}, one{1.0, 1.0}, half{0.5, 0.25};
    auto r0 = relaxed_perturbation(g, cands, zero);
    CHECK(r0.degree(0) == 1.0);
    CHECK(r0.degree(3) == 0.0);
    auto r1 = relaxed_perturbation(g, cands, one);
    auto flipped = apply_perturbation(g, cands);
    for (NodeId i = 0; i < 4; ++i) CHECK(r1.degree(i) == flipped.degree(i));
    auto rh = relaxed_perturbation(g, cands, half);
    CHECK(rh.degree(0) == 0.75);
    CHECK(rh.degree(3) == 0.25);
    CHECK_FALSE(rh.is_binary());
}

TEST_CASE("loss functions") {
    FeatureMatrix s(2, 3, std::vector<double>{2.0, 1.0, 0.5, 0.0, 1.0, 3.0});
    std::vector<int> labels{0, 1};
    std::vector<NodeId> nodes{0, 1};
    CHECK(attack_loss(s, labels, nodes, AttackLoss::margin) == doctest::Approx(-1.0 + 2.0));
    const double ce0 = std::log(std::exp(2.0) + std::exp(1.0) + std::exp(0.5)) - 2.0;
    const double ce1 = std::log(std::exp(0.0) + std::exp(1.0) + std::exp(3.0)) - 1.0;
    CHECK(attack_loss(s, labels, nodes, AttackLoss::cross_entropy) == doctest::Approx(ce0 + ce1).epsilon(1e-14));
    std::vector<int> unknown{-1, 1};
    CHECK_THROWS(attack_loss(s, unknown, nodes, AttackLoss::margin));
}

TEST_CASE("greedy single flip matches exhaustive single-flip search") {
    auto d = two_clusters(30, 5);
    auto v = feature_victim(d, Penalty::l2(), d.split.test);
    AttackConfig cfg;
    cfg.scope = GlobalScope{100.0 / static_cast<double>(d.graph.num_edges())};
    REQUIRE(attack_budget(d.graph, cfg) == 1);
    auto ps = greedy_attack(d.graph, v, cfg);
    REQUIRE(ps.flips.size() == 1);
    double best = -1e300;
    Edge arg{};
    for (const auto& e : candidate_flips(d.graph, GlobalScope{})) {
        const double l = evaluate_loss(v, apply_perturbation(d.graph, std::span<const Edge>(&e, 1)));
        if (l > best) {
            best = l;
            arg = e;
        }
    }
    CHECK(ps.flips[0] == arg);
    CHECK_FALSE(d.graph.has_edge(arg.u, arg.v));
    CHECK(d.split.labels[arg.u] != d.split.labels[arg.v]);
}

TEST_CASE("greedy loss grows with the budget") {
    auto d = two_clusters(24, 8);
    auto v = feature_victim(d, Penalty::mcp(1.0), d.split.test);
    double prev = evaluate_loss(v, d.graph);
    const double m = static_cast<double>(d.graph.num_edges());
    for (std::size_t b = 1; b <= 6; ++b) {
        AttackConfig cfg;
        cfg.scope = GlobalScope{100.0 * static_cast<double>(b) / m};
        auto ps = greedy_attack(d.graph, v, cfg);
        CHECK(ps.flips.size() <= ps.budget);
        const double loss = evaluate_loss(v, apply_perturbation(d.graph, ps));
        CHECK(loss >= prev);
        prev = loss;
    }
    AttackConfig small;
    small.candidate_pool = 10;
    CHECK_THROWS(greedy_attack(d.graph, v, small));
}

TEST_CASE("capped simplex projection") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> nd(0.5, 1.0);
    for (int t = 0; t < 200; ++t) {
        std::vector<double> s(1 + t % 40);
        for (auto& x : s) x = nd(rng);
        const double budget = 0.5 * static_cast<double>(t % 7);
        auto p = project_capped_simplex(s, budget);
        double sum = 0.0;
        for (double x : p) {
            CHECK(x >= -1e-12);
            CHECK(x <= 1.0 + 1e-12);
            sum += x;
        }
        CHECK(sum <= budget + 1e-9);
        // optimality: no feasible coordinate pair move lowers the distance
        double box_sum = 0.0;
        for (double x : s) box_sum += std::clamp(x, 0.0, 1.0);
        if (box_sum <= budget) {
            for (std::size_t i = 0; i < s.size(); ++i) CHECK(p[i] == std::clamp(s[i], 0.0, 1.0));
        } else {
            CHECK(sum == doctest::Approx(budget).epsilon(1e-9));
        }
    }
}

TEST_CASE("PGD respects the budget and is reproducible") {
    auto d = two_clusters(16, 2);
    auto v = feature_victim(d, Penalty::l1(), d.split.test);
    AttackConfig cfg;
    cfg.scope = GlobalScope{20.0};
    PgdMethod pgd;
    pgd.steps = 5;
    pgd.samples = 5;
    pgd.seed = 3;
    cfg.method = pgd;
    auto a = pgd_attack(d.graph, v, cfg);
    auto b = pgd_attack(d.graph, v, cfg);
    CHECK(a.flips == b.flips);
    CHECK(a.flips.size() <= a.budget);
    REQUIRE(a.relaxed);
    double sum = 0.0;
    for (double x : *a.relaxed) {
        CHECK(x >= -1e-12);
        CHECK(x <= 1.0 + 1e-12);
        sum += x;
    }
    CHECK(sum <= static_cast<double>(a.budget) + 1e-9);
    if (!a.flagged) CHECK(evaluate_loss(v, apply_perturbation(d.graph, a)) >= evaluate_loss(v, d.graph));

    pgd.steps = 0;
    cfg.method = pgd;
    auto z = pgd_attack(d.graph, v, cfg);
    CHECK(z.flips.size() <= z.budget);
    for (double x : *z.relaxed) CHECK(x == doctest::Approx(static_cast<double>(z.budget) / z.pool_size));

    cfg.candidate_pool = 15;
    pgd.steps = 2;
    cfg.method = pgd;
    auto capped = pgd_attack(d.graph, v, cfg);
    CHECK(capped.pool_size == 15);
    CHECK(capped.candidates.size() == 15);
}

TEST_CASE("exhaustive search dominates greedy and PGD") {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        auto d = two_clusters(13, seed, 0.5, 0.05);
        const NodeId target = d.split.test.front();
        auto v = feature_victim(d, Penalty::l1(), {target});
        const double deg = d.graph.degree(target);
        if (deg == 0.0) continue;
        AttackConfig cfg;
        cfg.scope = LocalScope{{target}, 100.0 * std::min(3.0, deg) / deg};
        auto pool = candidate_flips(d.graph, cfg.scope);
        REQUIRE(pool.size() == 12);
        const std::size_t budget = attack_budget(d.graph, cfg);
        REQUIRE(budget <= 3);
        const double best = exhaustive_best(d.graph, v, pool, budget);
        const double greedy = evaluate_loss(v, apply_perturbation(d.graph, greedy_attack(d.graph, v, cfg)));
        PgdMethod pgd;
        pgd.steps = 20;
        pgd.samples = 10;
        cfg.method = pgd;
        const double pgd_loss = evaluate_loss(v, apply_perturbation(d.graph, pgd_attack(d.graph, v, cfg)));
        CHECK(best >= greedy - 1e-12);
        CHECK(best >= pgd_loss - 1e-12);
    }
}

TEST_CASE("attacked edge histogram") {
    // two far clusters joined by injected edges
    auto g = graph(6, {{0, 1}, {1, 2}, {0, 2}, {3, 4}, {4, 5}, {3, 5}});
    FeatureMatrix f(6, 1);
    for (NodeId i = 3; i < 6; ++i) f(i, 0) = 20.0;
    CHECK_THROWS(attacked_edge_histogram(g, g, f, 4));
    std::vector<Edge> inj{{0, 3}, {1, 4}};
    auto att = apply_perturbation(g, inj);
    auto h = attacked_edge_histogram(g, att, f, 1);
    REQUIRE(h.counts.size() == 1);
    CHECK(h.counts[0] == 2);
    auto h4 = attacked_edge_histogram(g, att, f, 4);
    CHECK(h4.bin_edges.size() == 5);
    for (double y : h4.values) CHECK(y > 5.0);
    std::size_t total = 0;
    for (auto c : h4.counts) total += c;
    CHECK(total == 2);
}

TEST_CASE("perturbation CSV round trip") {
    auto g = graph(4, {{0, 1}});
    PerturbationSet ps;
    ps.flips = {{0, 1}, {2, 3}};
    ps.budget = 2;
    auto path = std::filesystem::temp_directory_path() / "rung_flips.csv";
    write_perturbation(path, g, ps);
    CHECK(read_perturbation(path) == ps.flips);
    std::filesystem::remove(path);
}
