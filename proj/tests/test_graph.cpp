#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "oracles.hpp"
#include "rung/csv.hpp"
#include "rung/graph.hpp"
#include "test_support.hpp"

using namespace rung;
using testing_support::graph;

TEST_CASE("build_graph canonicalizes edges and degrees") {
    SUBCASE("single edge") {
        auto g = graph(2, {{0, 1}});
        CHECK(g.num_edges() == 1);
        CHECK(g.degree(0) == 1.0);
        CHECK(g.degree(1) == 1.0);
    }
    SUBCASE("duplicates collapse") {
        auto g = graph(3, {{0, 1}, {1, 0}, {1, 2}});
        CHECK(g.num_edges() == 2);
        CHECK(g.degree(0) == 1.0);
        CHECK(g.degree(1) == 2.0);
        CHECK(g.degree(2) == 1.0);
    }
    SUBCASE("self-loop policy adds one loop per node") {
        auto g = graph(2, {{0, 1}}, true);
        CHECK(g.num_edges() == 3);
        CHECK(g.num_proper_edges() == 1);
        CHECK(g.degree(0) == 2.0);
        CHECK(g.degree(1) == 2.0);
        CHECK(g.has_edge(0, 0));
    }
    SUBCASE("loops in the input are stripped without the policy") {
        auto g = graph(3, {{0, 0}, {1, 2}});
        CHECK(g.num_edges() == 1);
        CHECK_FALSE(g.has_edge(0, 0));
        CHECK(g.degree(0) == 0.0);
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(graph(0, {}), std::invalid_argument);
        CHECK_THROWS_AS(graph(2, {{0, 2}}), std::out_of_range);
    }
}

TEST_CASE("stored edges are sorted, unique and i <= j") {
    std::mt19937_64 rng(3);
    for (int t = 0; t < 20; ++t) {
        auto pairs = oracle::random_pairs(25, 0.2, rng);
        std::vector<std::pair<int, int>> noisy = pairs;
        for (auto [i, j] : pairs) noisy.emplace_back(j, i);
        auto g = graph(25, noisy);
        REQUIRE(g.num_edges() == pairs.size());
        for (std::size_t e = 0; e < g.num_edges(); ++e) {
            CHECK(g.edge(e).u < g.edge(e).v);
            if (e > 0) CHECK(g.edge(e - 1) < g.edge(e));
        }
        double total = 0;
        for (NodeId i = 0; i < 25; ++i) {
            CHECK(g.degree(i) == static_cast<double>(g.incident(i).size()));
            total += g.degree(i);
        }
        CHECK(total == 2.0 * static_cast<double>(g.num_edges()));
    }
}

TEST_CASE("normalized_weight worked values") {
    auto path = graph(3, {{0, 1}, {1, 2}});
    CHECK(path.normalized_weight(0, 1) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));
    CHECK(path.normalized_weight(1, 0) == path.normalized_weight(0, 1));
    CHECK(path.normalized_weight(0, 2) == 0.0);
    auto pair = graph(2, {{0, 1}});
    CHECK(pair.normalized_weight(0, 1) == 1.0);
    auto isolated = graph(3, {{0, 1}});
    CHECK(isolated.normalized_weight(2, 0) == 0.0);
    CHECK(isolated.inv_sqrt_degree(2) == 0.0);
}

TEST_CASE("normalized adjacency matches a dense builder") {
    std::mt19937_64 rng(11);
    for (int t = 0; t < 30; ++t) {
        const int n = 2 + static_cast<int>(rng() % 49);
        const bool loops = (t % 3 == 0);
        auto pairs = oracle::random_pairs(n, 0.15, rng);
        auto g = graph(n, pairs, loops);
        auto dense = oracle::normalized(oracle::adjacency(n, pairs, loops));
        for (int i = 0; i < n; ++i) {
            double row = 0;
            for (int j = 0; j < n; ++j) {
                const double v = g.normalized_weight(i, j);
                CHECK(v == doctest::Approx(dense[i][j]).epsilon(1e-14));
                CHECK(v == g.normalized_weight(j, i));
                row += v;
            }
            double expect = 0;
            for (auto inc : g.incident(i)) expect += 1.0 / std::sqrt(g.degree(i) * g.degree(inc.neighbor));
            CHECK(row == doctest::Approx(expect).epsilon(1e-12));
        }
    }
}

TEST_CASE("EdgeWeights zeroes self-loops and rejects negatives") {
    auto g = graph(2, {{0, 1}}, true);
    EdgeWeights w(g, {5.0, 1.0, 7.0});
    for (std::size_t e = 0; e < g.num_edges(); ++e) {
        if (g.edge(e).is_loop()) CHECK(w[e] == 0.0);
    }
    CHECK_THROWS(EdgeWeights(g, {1.0, -1.0, 0.0}));
    CHECK_THROWS(EdgeWeights(g, {1.0}));
}

TEST_CASE("spectral_norm worked values") {
    auto g = graph(2, {{0, 1}});
    std::vector<double> diag{0.25, 0.25};
    EdgeWeights w(g, {0.25});
    auto est = spectral_norm(g, diag, w, 1.0);
    CHECK(est.converged);
    CHECK(est.value == doctest::Approx(1.5).epsilon(1e-8));
    CHECK(est.upper >= 1.5);
    CHECK(est.upper == doctest::Approx(1.5).epsilon(1e-8));

    auto path = graph(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}});
    std::vector<double> zero(5, 0.0);
    auto scaled = spectral_norm(path, zero, EdgeWeights::zeros(path), 0.7);
    CHECK(scaled.value == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("spectral_norm agrees with a dense eigensolver") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 2.0);
    for (int t = 0; t < 40; ++t) {
        const int n = 2 + static_cast<int>(rng() % 29);
        auto pairs = oracle::random_pairs(n, 0.25, rng);
        auto g = graph(n, pairs, t % 4 == 0);
        std::vector<double> wv(g.num_edges());
        for (auto& x : wv) x = u(rng);
        EdgeWeights w(g, wv);
        std::vector<double> diag(n);
        for (auto& x : diag) x = u(rng) - 0.5;  // indefinite matrices too
        const double shift = u(rng);

        auto a = oracle::adjacency(n, pairs, t % 4 == 0);
        auto at = oracle::normalized(a);
        oracle::Dense m = oracle::zeros(n);
        for (int i = 0; i < n; ++i) m[i][i] = diag[i] + shift;
        for (std::size_t e = 0; e < g.num_edges(); ++e) {
            auto ed = g.edge(e);
            if (ed.is_loop()) continue;
            m[ed.u][ed.v] -= w[e] * at[ed.u][ed.v];
            m[ed.v][ed.u] -= w[e] * at[ed.v][ed.u];
        }
        const double expect = oracle::spectral_norm(m);
        PowerIterationOptions opts;
        opts.tolerance = 1e-13;
        opts.max_iterations = 200000;
        auto est = spectral_norm(g, diag, w, shift, opts);
        CHECK(est.value == doctest::Approx(expect).epsilon(1e-6));
        auto est_default = spectral_norm(g, diag, w, shift);
        CHECK(est_default.value == doctest::Approx(expect).epsilon(1e-6));
        CHECK(est.value >= 0.0);
        // the upper estimate brackets the norm from above
        CHECK(est_default.upper >= expect * (1.0 - 1e-12));
        // looser than the value when the spectral gap is small
        CHECK(est_default.upper == doctest::Approx(expect).epsilon(1e-4));
    }
}

TEST_CASE("spectral_norm validates inputs and is deterministic") {
    auto g = graph(3, {{0, 1}, {1, 2}});
    std::vector<double> diag{1, 2, 3};
    EdgeWeights w(g, {1.0, 0.5});
    CHECK_THROWS(spectral_norm(g, std::vector<double>{1, 2}, w, 0.0));
    CHECK_THROWS(spectral_norm(g, diag, w, -1.0));
    auto a = spectral_norm(g, diag, w, 0.1);
    auto b = spectral_norm(g, diag, w, 0.1);
    CHECK(a.value == b.value);
    PowerIterationOptions tight;
    tight.max_iterations = 1;
    auto c = spectral_norm(g, diag, w, 0.1, tight);
    CHECK_FALSE(c.converged);
    CHECK(c.value > 0.0);
}

TEST_CASE("edge list CSV round trip and errors") {
    auto dir = std::filesystem::temp_directory_path() / "rung_test_graph";
    std::filesystem::create_directories(dir);
    auto g = graph(4, {{0, 1}, {2, 1}, {3, 0}});
    write_edge_list(dir / "edges.csv", g);
    auto back = SparseGraph::build(4, read_edge_list(dir / "edges.csv"), false);
    CHECK(std::ranges::equal(back.edges(), g.edges()));

    {
        std::ofstream out(dir / "bad.csv");
        out << "src,dst\n0,1\n1,x\n";
    }
    try {
        read_edge_list(dir / "bad.csv");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
    }
    {
        std::ofstream out(dir / "dup.csv");
        out << "src,dst\n0,1\n1,0\n\n2,1\n";
    }
    auto dup = SparseGraph::build(3, read_edge_list(dir / "dup.csv"), false);
    CHECK(dup.num_edges() == 2);
}
