#include <doctest.h>

#include <cmath>
#include <vector>

#include <constmoran/field_synth.hpp>
#include <constmoran/moran.hpp>

using namespace constmoran;

TEST_CASE("generate_field is deterministic in its config") {
    const SynthConfig cfg{16, 16, 1.2, 99};
    const auto a = generate_field(cfg);
    const auto b = generate_field(cfg);
    CHECK(a.values == b.values);
    const auto c = generate_field({16, 16, 1.2, 100});
    CHECK(a.values != c.values);
}

TEST_CASE("generate_field output has mean 0 and variance 1 within 1e-9") {
    for (double beta : {0.0, 0.7, 1.5, 2.4, 3.0}) {
        const auto f = generate_field({20, 20, beta, 7});
        const double m = vector_mean(f.values);
        KahanSum ss;
        for (double v : f.values) ss.add((v - m) * (v - m));
        const double var = ss.value() / static_cast<double>(f.size());
        CHECK(std::abs(m) <= 1e-9);
        CHECK(std::abs(var - 1.0) <= 1e-9);
    }
}

TEST_CASE("generate_field handles odd and non-square grids") {
    for (auto [r, c] : {std::pair<std::size_t, std::size_t>{7, 9},
                        {5, 12},
                        {1, 8},
                        {40, 40}}) {
        const auto f = generate_field({r, c, 1.0, 11});
        CHECK(f.size() == r * c);
        CHECK(std::abs(vector_mean(f.values)) <= 1e-9);
    }
}

TEST_CASE("generate_field validates its config") {
    CHECK_THROWS_AS(generate_field({1, 2, 1.0, 0}), const error&);
    CHECK_THROWS_AS(generate_field({4, 4, -1.0, 0}), const error&);
}

TEST_CASE("beta = 0 gives white noise: ensemble mean I near -1/(N-1)") {
    const auto w = row_normalize(build_grid_queen(20, 20));
    std::vector<double> is;
    for (std::uint64_t s = 0; s < 200; ++s)
        is.push_back(moran_i(generate_field({20, 20, 0.0, s}), w));
    const double m = vector_mean(is);
    CHECK(m >= -0.03);
    CHECK(m <= 0.02);
}

TEST_CASE("beta = 3 on 40x40 saturates Moran's I") {
    const auto w = row_normalize(build_grid_queen(40, 40));
    const auto f = generate_field({40, 40, 3.0, 5});
    CHECK(moran_i(f, w) > 0.85);
}

TEST_CASE("mean I increases strictly along beta = 0, 0.5, 1, 1.5, 2 (scaled)") {
    const std::vector<double> betas = {0.0, 0.5, 1.0, 1.5, 2.0};
    const auto curve = moran_beta_curve(betas, 100, 12, 12, 21);
    REQUIRE(curve.size() == betas.size());
    for (std::size_t b = 1; b < curve.size(); ++b)
        CHECK(curve[b].moran.mean > curve[b - 1].moran.mean);
}

TEST_CASE("beta 2.6 and 3.0 distributions overlap near 1") {
    const auto curve = moran_beta_curve(std::vector<double>{2.6, 3.0}, 50, 40, 40, 33);
    CHECK(curve[0].moran.mean > 0.75);
    CHECK(curve[1].moran.mean > 0.85);
    // supports overlap: I alone cannot separate these betas
    CHECK(curve[0].moran.max >= curve[1].moran.min);
}

TEST_CASE("moran_beta_curve stays well-formed with 2 trials") {
    const auto curve = moran_beta_curve(std::vector<double>{1.0}, 2, 8, 8, 3);
    REQUIRE(curve.size() == 1);
    CHECK(curve[0].moran.count == 2);
    CHECK(curve[0].moran.min <= curve[0].moran.max);
    CHECK_THROWS_AS(moran_beta_curve(std::vector<double>{1.0}, 1, 8, 8, 3), const error&);
}
