#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "constmoran/error.hpp"

namespace constmoran {

// Neumaier-compensated accumulator. Long chains of small increments (millions
// of accepted moves) must not drift past the 1e-9 verification tolerance.
class KahanSum {
public:
    KahanSum() = default;
    explicit KahanSum(double initial) : sum_(initial) {}

    void add(double x) noexcept {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            comp_ += (sum_ - t) + x;
        } else {
            comp_ += (x - t) + sum_;
        }
        sum_ = t;
    }

    void reset(double value = 0.0) noexcept {
        sum_ = value;
        comp_ = 0.0;
    }

    double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

inline double compensated_sum(std::span<const double> xs) noexcept {
    KahanSum acc;
    for (double x : xs) acc.add(x);
    return acc.value();
}

inline bool all_finite(std::span<const double> xs) noexcept {
    return std::all_of(xs.begin(), xs.end(), [](double v) { return std::isfinite(v); });
}

inline double vector_mean(std::span<const double> xs) {
    if (xs.empty()) throw error("mean of empty vector");
    return compensated_sum(xs) / static_cast<double>(xs.size());
}

// Sample standard deviation, n-1 denominator.
inline double sample_sd(std::span<const double> xs) {
    if (xs.size() < 2) throw error("sd needs at least 2 values");
    const double m = vector_mean(xs);
    KahanSum acc;
    for (double x : xs) acc.add((x - m) * (x - m));
    return std::sqrt(acc.value() / static_cast<double>(xs.size() - 1));
}

// Linear-interpolation quantile on sorted input (R type 7). p in [0, 1].
inline double sorted_quantile(std::span<const double> sorted, double p) {
    if (sorted.empty()) throw error("quantile of empty vector");
    if (p <= 0.0) return sorted.front();
    if (p >= 1.0) return sorted.back();
    const double h = p * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(h);
    const double frac = h - static_cast<double>(lo);
    if (lo + 1 >= sorted.size()) return sorted.back();
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

struct DistSummary {
    std::size_t count = 0;
    double mean = 0.0;
    double sd = 0.0;
    double min = 0.0;
    double q25 = 0.0;
    double median = 0.0;
    double q75 = 0.0;
    double max = 0.0;
};

inline DistSummary summarize(std::span<const double> xs) {
    if (xs.empty()) throw error("summary of empty vector");
    std::vector<double> sorted(xs.begin(), xs.end());
    std::sort(sorted.begin(), sorted.end());
    DistSummary s;
    s.count = xs.size();
    s.mean = vector_mean(xs);
    s.sd = xs.size() >= 2 ? sample_sd(xs) : 0.0;
    s.min = sorted.front();
    s.q25 = sorted_quantile(sorted, 0.25);
    s.median = sorted_quantile(sorted, 0.50);
    s.q75 = sorted_quantile(sorted, 0.75);
    s.max = sorted.back();
    return s;
}

} // namespace constmoran
