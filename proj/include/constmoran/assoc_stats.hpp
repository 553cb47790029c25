#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "constmoran/error.hpp"
#include "constmoran/numeric.hpp"

namespace constmoran {

enum class StatKind { pearson, spearman, kendall, ks };

inline std::string to_string(StatKind k) {
    switch (k) {
        case StatKind::pearson: return "pearson";
        case StatKind::spearman: return "spearman";
        case StatKind::kendall: return "kendall";
        case StatKind::ks: return "ks";
    }
    return "?";
}

inline StatKind parse_stat(std::string_view s) {
    if (s == "pearson") return StatKind::pearson;
    if (s == "spearman") return StatKind::spearman;
    if (s == "kendall") return StatKind::kendall;
    if (s == "ks") return StatKind::ks;
    throw error("unknown statistic '" + std::string(s) + "' (expected pearson|spearman|kendall|ks)");
}

namespace detail {

inline void check_pair(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size())
        throw error("statistic inputs differ in length (" + std::to_string(x.size()) + " vs " +
                    std::to_string(y.size()) + ")");
    if (x.size() < 3) throw error("statistic needs at least 3 observations");
    const auto constant = [](std::span<const double> v) {
        const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
        return *lo == *hi;
    };
    if (constant(x) || constant(y))
        throw zero_variance_error("statistic undefined for a constant input");
}

} // namespace detail

inline double pearson(std::span<const double> x, std::span<const double> y) {
    detail::check_pair(x, y);
    const double mx = vector_mean(x);
    const double my = vector_mean(y);
    KahanSum sxx, syy, sxy;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxx.add(dx * dx);
        syy.add(dy * dy);
        sxy.add(dx * dy);
    }
    return sxy.value() / std::sqrt(sxx.value() * syy.value());
}

// Average (fractional) ranks, 1-based; tied values share the mean of their
// rank range.
inline std::vector<double> average_ranks(std::span<const double> v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

inline double spearman(std::span<const double> x, std::span<const double> y) {
    detail::check_pair(x, y);
    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    return pearson(rx, ry);
}

namespace detail {

// Inversion count of v by bottom-up merge sort; strictly-greater pairs only.
inline std::uint64_t count_inversions(std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<double> buf(n);
    std::uint64_t inversions = 0;
    for (std::size_t width = 1; width < n; width *= 2) {
        for (std::size_t lo = 0; lo + width < n; lo += 2 * width) {
            const std::size_t mid = lo + width;
            const std::size_t hi = std::min(lo + 2 * width, n);
            std::size_t a = lo, b = mid, out = lo;
            while (a < mid && b < hi) {
                if (v[b] < v[a]) {
                    inversions += mid - a;
                    buf[out++] = v[b++];
                } else {
                    buf[out++] = v[a++];
                }
            }
            while (a < mid) buf[out++] = v[a++];
            while (b < hi) buf[out++] = v[b++];
            std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo),
                      buf.begin() + static_cast<std::ptrdiff_t>(hi),
                      v.begin() + static_cast<std::ptrdiff_t>(lo));
        }
    }
    return inversions;
}

// sum over tie groups of t * (t - 1) / 2 in a sorted sequence
template <typename Eq>
std::uint64_t tied_pairs(std::span<const std::size_t> order, Eq eq) {
    std::uint64_t pairs = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && eq(order[j + 1], order[i])) ++j;
        const std::uint64_t t = j - i + 1;
        pairs += t * (t - 1) / 2;
        i = j + 1;
    }
    return pairs;
}

} // namespace detail

// Kendall's tau-b (tie-corrected) in O(n log n): sort by (x, y), count
// discordant pairs as inversions of the y sequence, correct for ties.
inline double kendall(std::span<const double> x, std::span<const double> y) {
    detail::check_pair(x, y);
    const std::size_t n = x.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (x[a] != x[b]) return x[a] < x[b];
        return y[a] < y[b];
    });

    const std::uint64_t total = static_cast<std::uint64_t>(n) * (n - 1) / 2;
    const std::uint64_t x_ties =
        detail::tied_pairs(order, [&](std::size_t a, std::size_t b) { return x[a] == x[b]; });

    // joint ties: consecutive equal (x, y) in the sorted order
    std::uint64_t joint_ties = 0;
    {
        std::size_t i = 0;
        while (i < n) {
            std::size_t j = i;
            while (j + 1 < n && x[order[j + 1]] == x[order[i]] && y[order[j + 1]] == y[order[i]]) ++j;
            const std::uint64_t t = j - i + 1;
            joint_ties += t * (t - 1) / 2;
            i = j + 1;
        }
    }

    std::uint64_t y_ties = 0;
    {
        std::vector<std::size_t> yorder(n);
        std::iota(yorder.begin(), yorder.end(), std::size_t{0});
        std::sort(yorder.begin(), yorder.end(),
                  [&](std::size_t a, std::size_t b) { return y[a] < y[b]; });
        y_ties =
            detail::tied_pairs(yorder, [&](std::size_t a, std::size_t b) { return y[a] == y[b]; });
    }

    std::vector<double> y_by_x(n);
    for (std::size_t i = 0; i < n; ++i) y_by_x[i] = y[order[i]];
    const std::uint64_t discordant = detail::count_inversions(y_by_x);

    const double con_minus_dis = static_cast<double>(total) - static_cast<double>(x_ties) -
                                 static_cast<double>(y_ties) + static_cast<double>(joint_ties) -
                                 2.0 * static_cast<double>(discordant);
    const double denom = std::sqrt((static_cast<double>(total) - static_cast<double>(x_ties)) *
                                   (static_cast<double>(total) - static_cast<double>(y_ties)));
    return con_minus_dis / denom;
}

// sup_s |F_x(s) - F_y(s)| between the two empirical distribution functions.
// Samples may differ in length.
inline double ks_statistic(std::span<const double> x, std::span<const double> y) {
    if (x.empty() || y.empty()) throw error("ks_statistic needs non-empty samples");
    std::vector<double> xs(x.begin(), x.end()), ys(y.begin(), y.end());
    std::sort(xs.begin(), xs.end());
    std::sort(ys.begin(), ys.end());
    const double nx = static_cast<double>(xs.size());
    const double ny = static_cast<double>(ys.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < xs.size() && j < ys.size()) {
        const double v = std::min(xs[i], ys[j]);
        while (i < xs.size() && xs[i] == v) ++i;
        while (j < ys.size() && ys[j] == v) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / nx - static_cast<double>(j) / ny));
    }
    return d;
}

namespace detail {

// Continued fraction for the regularized incomplete beta (modified Lentz).
inline double beta_cont_fraction(double a, double b, double x) {
    constexpr double tiny = 1e-300;
    constexpr double eps = 1e-15;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 500; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < eps) return h;
    }
    throw error("incomplete beta continued fraction did not converge");
}

// Regularized incomplete beta I_x(a, b), relative error ~1e-14.
inline double regularized_incomplete_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                             a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cont_fraction(a, b, x) / a;
    return 1.0 - front * beta_cont_fraction(b, a, 1.0 - x) / b;
}

} // namespace detail

// Two-sided p-value of the classical test: t = r sqrt((n-2)/(1-r^2)) against
// Student t with n-2 degrees of freedom, via p = I_{v/(v+t^2)}(v/2, 1/2).
// This is the naive test that ignores spatial autocorrelation.
inline double naive_t_pvalue(double r, std::size_t n) {
    if (n < 3) throw error("naive_t_pvalue needs n >= 3");
    if (!(std::abs(r) <= 1.0)) throw error("correlation must lie in [-1, 1]");
    if (std::abs(r) == 1.0) return 0.0;
    const double dof = static_cast<double>(n - 2);
    const double t2 = r * r * dof / (1.0 - r * r);
    return detail::regularized_incomplete_beta(dof / 2.0, 0.5, dof / (dof + t2));
}

inline double evaluate_stat(StatKind kind, std::span<const double> x, std::span<const double> y) {
    switch (kind) {
        case StatKind::pearson: return pearson(x, y);
        case StatKind::spearman: return spearman(x, y);
        case StatKind::kendall: return kendall(x, y);
        case StatKind::ks: return ks_statistic(x, y);
    }
    throw error("unhandled statistic kind");
}

} // namespace constmoran
