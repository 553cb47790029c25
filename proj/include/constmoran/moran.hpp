#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "constmoran/error.hpp"
#include "constmoran/numeric.hpp"
#include "constmoran/spatial_weights.hpp"

namespace constmoran {

// One real value per spatial site, index-aligned with a SpatialWeights.
struct Field {
    std::vector<double> values;
    std::string name;

    Field() = default;
    explicit Field(std::vector<double> v, std::string n = "") : values(std::move(v)), name(std::move(n)) {}

    std::size_t size() const noexcept { return values.size(); }
};

inline void check_compatible(const Field& field, const SpatialWeights& weights) {
    if (field.size() != weights.n_sites())
        throw error("field '" + field.name + "' has " + std::to_string(field.size()) +
                    " values but the weights cover " + std::to_string(weights.n_sites()) + " sites");
    if (!all_finite(field.values))
        throw error("field '" + field.name + "' contains non-finite values");
}

inline bool is_constant(std::span<const double> xs) noexcept {
    const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
    return xs.empty() || *lo == *hi;
}

enum class LagSide { left, right };

// left:  out_i = sum_j w_ij x_j   (average over i's neighbors)
// right: out_j = sum_i x_i w_ij   (transpose aggregation)
inline std::vector<double> spatial_lag(const Field& field, const SpatialWeights& weights,
                                       LagSide side) {
    check_compatible(field, weights);
    const std::size_t n = weights.n_sites();
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        KahanSum acc;
        const auto entries = side == LagSide::left ? weights.out(i) : weights.in(i);
        for (const auto& nb : entries) acc.add(nb.weight * field.values[nb.site]);
        out[i] = acc.value();
    }
    return out;
}

// Moran's I via the lag factorization: I = (N/|W|) * sum_i z_i zl_i / sum_i z_i^2
// with z the centered values. O(edges), identical to the double sum.
inline double moran_i(const Field& field, const SpatialWeights& weights) {
    check_compatible(field, weights);
    if (is_constant(field.values))
        throw zero_variance_error("Moran's I is undefined for a constant field");
    const std::size_t n = weights.n_sites();
    const double mean = vector_mean(field.values);

    KahanSum ss, num;
    for (std::size_t i = 0; i < n; ++i) {
        const double zi = field.values[i] - mean;
        ss.add(zi * zi);
        KahanSum lag;
        for (const auto& nb : weights.out(i)) lag.add(nb.weight * (field.values[nb.site] - mean));
        num.add(zi * lag.value());
    }
    const double sum_squares = ss.value();
    if (sum_squares <= 0.0)
        throw zero_variance_error("Moran's I is undefined for a constant field");
    return static_cast<double>(n) / weights.total_weight() * num.value() / sum_squares;
}

// Independent route: I = sqrt(var(xl)/var(x)) * r(x, xl). Exact for
// row-normalized weights with no isolated sites; kept free of moran_i's code
// path so the two can cross-check each other.
inline double moran_via_lag(const Field& field, const SpatialWeights& weights) {
    check_compatible(field, weights);
    if (weights.has_isolated())
        throw error("moran_via_lag requires row-normalized weights with no isolated sites");
    if (is_constant(field.values))
        throw zero_variance_error("Moran's I is undefined for a constant field");

    const std::vector<double> lag = spatial_lag(field, weights, LagSide::left);
    if (is_constant(lag))
        throw zero_variance_error("degenerate correlation: spatial lag is constant");

    const double mx = vector_mean(field.values);
    const double ml = vector_mean(lag);
    KahanSum ssx, ssl, cross;
    for (std::size_t i = 0; i < field.size(); ++i) {
        const double zx = field.values[i] - mx;
        const double zl = lag[i] - ml;
        ssx.add(zx * zx);
        ssl.add(zl * zl);
        cross.add(zx * zl);
    }
    const double r = cross.value() / std::sqrt(ssx.value() * ssl.value());
    return std::sqrt(ssl.value() / ssx.value()) * r;
}

// Bookkeeping for O(degree) Moran updates under swap and replacement moves.
//
// Internally the state holds the raw working values, their raw left/right
// lags, and compensated scalars: sum of values, centered sum of squares,
// the Moran numerator sum_ij w_ij z_i z_j, and sum_lags = sum_j (xl_j + xr_j).
// Raw (not centered) storage keeps replacement moves O(degree): a replacement
// shifts the mean, which would touch every centered value. Centered views are
// exposed as accessors. Single-owner mutable object; not shared across workers.
class LagState {
public:
    LagState(const Field& field, const SpatialWeights& weights)
        : weights_(&weights), values_(field.values) {
        check_compatible(field, weights);
        if (is_constant(values_))
            throw zero_variance_error("LagState requires a non-constant field");
        rebuild();
    }

    const SpatialWeights& weights() const noexcept { return *weights_; }
    std::size_t size() const noexcept { return values_.size(); }

    const std::vector<double>& values() const noexcept { return values_; }
    const std::vector<double>& lag_left() const noexcept { return lag_left_; }
    const std::vector<double>& lag_right() const noexcept { return lag_right_; }

    double mean() const noexcept { return mean_; }
    double sum_squares() const noexcept { return sum_squares_.value(); }
    // sum_ij w_ij z_i z_j == sum_i z_i * (lag of centered values)_i
    double lag_cross_sum() const noexcept { return numerator_.value(); }
    double sum_lags() const noexcept { return sum_lags_.value(); }

    double moran() const noexcept {
        return static_cast<double>(size()) / weights_->total_weight() * numerator_.value() /
               sum_squares_.value();
    }

    double centered(std::size_t i) const noexcept { return values_[i] - mean_; }
    double centered_lag_left(std::size_t i) const noexcept {
        return lag_left_[i] - mean_ * weights_->row_sum(i);
    }
    double centered_lag_right(std::size_t j) const noexcept {
        return lag_right_[j] - mean_ * weights_->col_sum(j);
    }

    std::vector<double> centered_values() const {
        std::vector<double> z(values_.size());
        for (std::size_t i = 0; i < values_.size(); ++i) z[i] = values_[i] - mean_;
        return z;
    }

    Field field(std::string name = "") const { return Field(values_, std::move(name)); }

    // Swap the values at a and b. delta_numerator is the caller-computed exact
    // change in lag_cross_sum; lags are refreshed only at in/out neighbors of
    // a and b. Mean and sum_squares are permutation-invariant.
    void swap_values(std::size_t a, std::size_t b, double delta_numerator) {
        const double d = values_[a] - values_[b];
        std::swap(values_[a], values_[b]);
        for (const auto& nb : weights_->in(a)) lag_left_[nb.site] -= nb.weight * d;
        for (const auto& nb : weights_->in(b)) lag_left_[nb.site] += nb.weight * d;
        for (const auto& nb : weights_->out(a)) lag_right_[nb.site] -= nb.weight * d;
        for (const auto& nb : weights_->out(b)) lag_right_[nb.site] += nb.weight * d;
        numerator_.add(delta_numerator);
        sum_lags_.add(d * ((weights_->row_sum(b) + weights_->col_sum(b)) -
                           (weights_->row_sum(a) + weights_->col_sum(a))));
    }

    // Replace the value at a. Deltas are the caller-computed exact changes in
    // the numerator and centered sum of squares; the mean shifts by d/N.
    void replace_value(std::size_t a, double new_value, double delta_numerator, double delta_ss) {
        const double d = new_value - values_[a];
        values_[a] = new_value;
        for (const auto& nb : weights_->in(a)) lag_left_[nb.site] += nb.weight * d;
        for (const auto& nb : weights_->out(a)) lag_right_[nb.site] += nb.weight * d;
        sum_values_.add(d);
        mean_ = sum_values_.value() / static_cast<double>(size());
        sum_lags_.add(d * (weights_->row_sum(a) + weights_->col_sum(a)));
        numerator_.add(delta_numerator);
        sum_squares_.add(delta_ss);
    }

    // Recompute lags and running sums from the current values. Called on
    // construction and periodically during long runs to cancel drift.
    void rebuild() {
        const std::size_t n = values_.size();
        sum_values_.reset();
        for (double v : values_) sum_values_.add(v);
        mean_ = sum_values_.value() / static_cast<double>(n);

        lag_left_.assign(n, 0.0);
        lag_right_.assign(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            KahanSum l, r;
            for (const auto& nb : weights_->out(i)) l.add(nb.weight * values_[nb.site]);
            for (const auto& nb : weights_->in(i)) r.add(nb.weight * values_[nb.site]);
            lag_left_[i] = l.value();
            lag_right_[i] = r.value();
        }

        sum_squares_.reset();
        numerator_.reset();
        sum_lags_.reset();
        for (std::size_t i = 0; i < n; ++i) {
            const double z = values_[i] - mean_;
            sum_squares_.add(z * z);
            numerator_.add(z * centered_lag_left(i));
            sum_lags_.add(lag_left_[i] + lag_right_[i]);
        }
    }

private:
    const SpatialWeights* weights_;
    std::vector<double> values_;
    std::vector<double> lag_left_, lag_right_;
    KahanSum sum_values_, sum_squares_, numerator_, sum_lags_;
    double mean_ = 0.0;
};

inline LagState build_lag_state(const Field& field, const SpatialWeights& weights) {
    return LagState(field, weights);
}

} // namespace constmoran
