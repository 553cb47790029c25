#include <doctest.h>

#include <cmath>
#include <sstream>

#include <constmoran/io.hpp>
#include <constmoran/spatial_weights.hpp>

#include "oracles.hpp"

using namespace constmoran;

namespace {

// every pair within chebyshev distance 1, scanned pairwise
std::size_t queen_edges_brute(std::size_t rows, std::size_t cols) {
    std::size_t count = 0;
    const auto n = rows * cols;
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) {
            const auto ra = a / cols, ca = a % cols;
            const auto rb = b / cols, cb = b % cols;
            const auto dr = ra > rb ? ra - rb : rb - ra;
            const auto dc = ca > cb ? ca - cb : cb - ca;
            if (dr <= 1 && dc <= 1) ++count;
        }
    }
    return count;
}

} // namespace

TEST_CASE("queen 2x2: every cell has exactly 3 neighbors") {
    const auto adj = build_grid_queen(2, 2);
    CHECK(adj.n_sites() == 4);
    for (auto d : adj.degrees()) CHECK(d == 3);
}

TEST_CASE("queen 3x3: center cell has 8 neighbors") {
    const auto adj = build_grid_queen(3, 3);
    CHECK(adj.degrees()[4] == 8);
}

TEST_CASE("queen 1x5 is a path: interior cells 2 neighbors, ends 1") {
    const auto adj = build_grid_queen(1, 5);
    const auto deg = adj.degrees();
    CHECK(deg[0] == 1);
    CHECK(deg[4] == 1);
    for (std::size_t i = 1; i < 4; ++i) CHECK(deg[i] == 2);
}

TEST_CASE("queen grid rejects 1x1") {
    CHECK_THROWS_AS(build_grid_queen(1, 1), const error&);
    CHECK_THROWS_AS(build_grid_queen(0, 5), const error&);
}

TEST_CASE("queen edge count matches 4rc - 3r - 3c + 2 and the brute-force scan") {
    for (std::size_t r = 2; r <= 10; ++r) {
        for (std::size_t c = 2; c <= 10; ++c) {
            const auto adj = build_grid_queen(r, c);
            const std::size_t analytic = 4 * r * c - 3 * r - 3 * c + 2;
            CHECK(adj.n_edges() == analytic);
            CHECK(adj.n_edges() == queen_edges_brute(r, c));
        }
    }
}

TEST_CASE("adjacency symmetry: (a,b) present iff (b,a) present") {
    Rng rng(7);
    const auto adj = oracles::random_connected_graph(rng, 40, 60);
    for (std::size_t a = 0; a < 40; ++a)
        for (std::size_t b = 0; b < 40; ++b)
            CHECK(adj.has_edge(static_cast<site_index>(a), static_cast<site_index>(b)) ==
                  adj.has_edge(static_cast<site_index>(b), static_cast<site_index>(a)));
}

TEST_CASE("adjacency rejects self-loops and out-of-range endpoints") {
    CHECK_THROWS_AS(AdjacencyList(3, {{1, 1}}), const error&);
    CHECK_THROWS_AS(AdjacencyList(3, {{0, 3}}), const error&);
}

TEST_CASE("row_normalize: rows re-sum to 1 within 1e-12") {
    Rng rng(11);
    for (int rep = 0; rep < 20; ++rep) {
        const auto adj = oracles::random_connected_graph(rng, 5 + rng.below(60), rng.below(80));
        const auto w = row_normalize(adj);
        for (std::size_t i = 0; i < w.n_sites(); ++i) {
            double sum = 0.0;
            for (const auto& nb : w.out(i)) sum += nb.weight;
            CHECK(std::abs(sum - 1.0) <= 1e-12);
        }
    }
}

TEST_CASE("row_normalize: 3x3 corner neighbors each get weight 1/3") {
    const auto w = row_normalize(build_grid_queen(3, 3));
    const auto row = w.out(0);
    REQUIRE(row.size() == 3);
    for (const auto& nb : row) CHECK(nb.weight == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("row_normalize: 2x2 grid has total_weight 4") {
    const auto w = row_normalize(build_grid_queen(2, 2));
    CHECK(w.total_weight() == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("row_normalize: path A-B-C splits B's weight in half") {
    const AdjacencyList adj(3, {{0, 1}, {1, 2}});
    const auto w = row_normalize(adj);
    CHECK(w.weight(1, 0) == doctest::Approx(0.5));
    CHECK(w.weight(1, 2) == doctest::Approx(0.5));
    CHECK(w.weight(0, 1) == doctest::Approx(1.0));
    CHECK(w.weight(0, 2) == 0.0);
}

TEST_CASE("total_weight equals n_sites when nobody is isolated") {
    Rng rng(5);
    for (int rep = 0; rep < 10; ++rep) {
        const std::size_t n = 4 + rng.below(100);
        const auto w = row_normalize(oracles::random_connected_graph(rng, n, rng.below(50)));
        CHECK(std::abs(w.total_weight() - static_cast<double>(n)) <= 1e-9);
    }
}

TEST_CASE("isolated sites rejected by default, kept as zero rows when allowed") {
    // site 3 has no edges
    const AdjacencyList adj(4, {{0, 1}, {1, 2}});
    CHECK_THROWS_AS(row_normalize(adj), const error&);
    const auto w = row_normalize(adj, /*allow_isolated=*/true);
    CHECK(w.has_isolated());
    CHECK(w.out(3).empty());
    CHECK(w.row_sum(3) == 0.0);
    CHECK(w.total_weight() == doctest::Approx(3.0));
}

TEST_CASE("in/out indexes agree with the dense transpose") {
    Rng rng(13);
    const auto w = row_normalize(oracles::random_connected_graph(rng, 25, 30));
    const auto dense = oracles::dense_weights(w);
    for (std::size_t j = 0; j < w.n_sites(); ++j) {
        double col = 0.0;
        for (const auto& nb : w.in(j)) {
            CHECK(dense[nb.site][j] == doctest::Approx(nb.weight).epsilon(1e-15));
            col += nb.weight;
        }
        CHECK(col == doctest::Approx(w.col_sum(j)).epsilon(1e-12));
    }
}

TEST_CASE("load_adjacency: symmetric duplicates collapse") {
    std::istringstream in("# comment\nA B\nB A\nB,C\n");
    const auto labeled = load_adjacency(in);
    CHECK(labeled.adjacency.n_sites() == 3);
    CHECK(labeled.adjacency.n_edges() == 2);
    CHECK(labeled.ids == std::vector<std::string>{"A", "B", "C"});
}

TEST_CASE("load_adjacency: empty document is an error") {
    std::istringstream in("# nothing here\n");
    CHECK_THROWS_AS(load_adjacency(in), const parse_error&);
}

TEST_CASE("load_adjacency: self-loop is an error") {
    std::istringstream in("A A\n");
    CHECK_THROWS_AS(load_adjacency(in), const parse_error&);
}
