#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "constmoran/error.hpp"
#include "constmoran/moran.hpp"
#include "constmoran/parallel.hpp"
#include "constmoran/rng.hpp"
#include "constmoran/spatial_weights.hpp"

namespace constmoran {

struct ResampleConfig {
    enum class Mode { swap, replace };

    Mode mode = Mode::swap;
    double epsilon = 1e-3;   // convergence tolerance on |I_target - I|
    double eta = 1e-4;       // pre-freeze plateau tolerance per N-proposal window
    bool prefreeze = true;
    std::size_t max_proposals = 0;   // 0 = auto: 2000 * n_sites
    std::size_t resync_interval = 0; // accepted moves between full rebuilds; 0 = auto: 10 * n_sites
    std::uint64_t seed = 0;

    void validate() const {
        if (!(epsilon > 0.0)) throw error("epsilon must be positive");
        if (!(eta > 0.0)) throw error("eta must be positive");
    }

    std::size_t proposal_budget(std::size_t n_sites) const noexcept {
        return max_proposals > 0 ? max_proposals : 2000 * n_sites;
    }

    std::size_t effective_resync(std::size_t n_sites) const noexcept {
        return resync_interval > 0 ? resync_interval : 10 * n_sites;
    }
};

struct ResampleOutcome {
    Field values;
    double achieved_i = 0.0;
    std::size_t proposals_used = 0;
    bool converged = false;
    bool high_target_warning = false; // targets above ~0.7 are parameter-sensitive
};

// Acceptance gain of the zero-temperature rule for E = (I_target - I)^2:
// dE = E_before - E_after = dI * (2 * (I_target - I) - dI). Accept iff >= 0.
inline double greedy_energy_gain(double delta_i, double target_gap) noexcept {
    return delta_i * (2.0 * target_gap - delta_i);
}

namespace detail {

// Change in sum_ij w_ij z_i z_j if the values at a and b were exchanged:
// (z_a - z_b) * (zl_b - zl_a + zr_b - zr_a - (z_a - z_b) * (w_ab + w_ba)).
inline double swap_numerator_delta(const LagState& state, const SpatialWeights& weights,
                                   std::size_t a, std::size_t b) noexcept {
    const double d = state.values()[a] - state.values()[b];
    const double lag_term = (state.centered_lag_left(b) - state.centered_lag_left(a)) +
                            (state.centered_lag_right(b) - state.centered_lag_right(a));
    return d * (lag_term - d * (weights.weight(a, b) + weights.weight(b, a)));
}

} // namespace detail

// Exact change in I if values at a and b were exchanged. O(degree): mean and
// sum_squares are permutation-invariant, only the numerator moves.
inline double swap_delta(const LagState& state, const SpatialWeights& weights, std::size_t a,
                         std::size_t b) {
    if (a == b) throw error("swap_delta requires two distinct sites");
    const double delta_num = detail::swap_numerator_delta(state, weights, a, b);
    return static_cast<double>(state.size()) / weights.total_weight() * delta_num /
           state.sum_squares();
}

inline void apply_swap(LagState& state, const SpatialWeights& weights, std::size_t a,
                       std::size_t b) {
    if (a == b) throw error("apply_swap requires two distinct sites");
    state.swap_values(a, b, detail::swap_numerator_delta(state, weights, a, b));
}

struct ReplaceDelta {
    double delta_i = 0.0;
    double delta_numerator = 0.0;
    double delta_ss = 0.0;
    double value_delta = 0.0;  // d = new_value - old_value
    bool degenerate = false;   // replacement would collapse the variance
};

// Exact change in I if the value at a were replaced by new_value. The mean
// shifts by d/N, which moves both the numerator and the denominator. With
// centered values z and centered lags zl, zr, writing the update as
// z' = z - (d/N) 1 + d e_a:
//   dNUM = d * (zl_a + zr_a - SL_z/N + d * (|W|/N^2 - (r_a + c_a)/N))
//   dSS  = d * (2 z_a + d (N-1)/N)
// where SL_z = sum_i z_i (r_i + c_i) and r, c are row/column weight sums.
// Centered throughout: a large common offset in the values cancels instead
// of swamping the delta. O(1) given the stored lags.
inline ReplaceDelta replace_delta(const LagState& state, const SpatialWeights& weights,
                                  std::size_t a, double new_value) {
    ReplaceDelta rd;
    const double n = static_cast<double>(state.size());
    const double d = new_value - state.values()[a];
    rd.value_delta = d;
    if (d == 0.0) return rd;

    const double m = state.mean();
    const double total_w = weights.total_weight();
    const double row_col = weights.row_sum(a) + weights.col_sum(a);
    const double z_a = state.values()[a] - m;
    const double centered_sum_lags = state.sum_lags() - 2.0 * m * total_w;

    rd.delta_numerator =
        d * (state.centered_lag_left(a) + state.centered_lag_right(a) - centered_sum_lags / n +
             d * (total_w / (n * n) - row_col / n));

    rd.delta_ss = d * (2.0 * z_a + d * (n - 1.0) / n);

    const double ss = state.sum_squares();
    const double ss_new = ss + rd.delta_ss;
    if (!(ss_new > 1e-9 * ss)) {
        rd.degenerate = true;
        return rd;
    }
    const double num = state.lag_cross_sum();
    rd.delta_i = n / total_w * ((num + rd.delta_numerator) / ss_new - num / ss);
    return rd;
}

inline void apply_replace(LagState& state, const SpatialWeights& weights, std::size_t a,
                          double new_value) {
    const ReplaceDelta rd = replace_delta(state, weights, a, new_value);
    if (rd.degenerate)
        throw zero_variance_error("replacement would make the field constant");
    state.replace_value(a, new_value, rd.delta_numerator, rd.delta_ss);
}

namespace detail {

struct MoveProposal {
    bool valid = false;
    bool is_swap = true;
    std::size_t a = 0, b = 0;
    double new_value = 0.0;
    double delta_i = 0.0;
    double delta_num = 0.0;
    double delta_ss = 0.0;
};

inline MoveProposal propose_move(const LagState& state, const ResampleConfig& cfg,
                                 std::span<const double> pool, Rng& rng) {
    MoveProposal mv;
    const std::size_t n = state.size();
    if (cfg.mode == ResampleConfig::Mode::swap) {
        const auto [a, b] = rng.distinct_pair(n);
        mv.is_swap = true;
        mv.a = a;
        mv.b = b;
        mv.delta_num = swap_numerator_delta(state, state.weights(), a, b);
        mv.delta_i = static_cast<double>(n) / state.weights().total_weight() * mv.delta_num /
                     state.sum_squares();
        mv.valid = true;
    } else {
        mv.is_swap = false;
        mv.a = rng.below(n);
        mv.new_value = pool[rng.below(pool.size())];
        const ReplaceDelta rd = replace_delta(state, state.weights(), mv.a, mv.new_value);
        mv.valid = !rd.degenerate;
        mv.delta_i = rd.delta_i;
        mv.delta_num = rd.delta_numerator;
        mv.delta_ss = rd.delta_ss;
    }
    return mv;
}

inline void apply_move(LagState& state, const MoveProposal& mv) {
    if (mv.is_swap) {
        state.swap_values(mv.a, mv.b, mv.delta_num);
    } else {
        state.replace_value(mv.a, mv.new_value, mv.delta_num, mv.delta_ss);
    }
}

// Greedy maximization of I (accept iff dI >= 0). Stops once I > 2 * i_target,
// or at a plateau: every N proposals, if I improved by no more than eta over
// the window, stop; otherwise the window baseline advances.
inline std::size_t run_prefreeze(LagState& state, double i_target, const ResampleConfig& cfg,
                                 std::span<const double> pool, Rng& rng,
                                 std::size_t& accepted_since_resync) {
    const std::size_t n = state.size();
    const std::size_t resync = cfg.effective_resync(n);
    double window_base = state.moran();
    std::size_t proposals = 0;
    for (;;) {
        const double current = state.moran();
        if (current > 2.0 * i_target) break;
        if (proposals > 0 && proposals % n == 0) {
            if (current - window_base <= cfg.eta) break;
            window_base = current;
        }
        const MoveProposal mv = propose_move(state, cfg, pool, rng);
        ++proposals;
        if (mv.valid && mv.delta_i >= 0.0) {
            apply_move(state, mv);
            if (++accepted_since_resync >= resync) {
                state.rebuild();
                accepted_since_resync = 0;
            }
        }
    }
    return proposals;
}

struct MatchResult {
    std::size_t proposals = 0;
    bool converged = false;
};

// Zero-temperature descent of E = (I_target - I)^2. Convergence is confirmed
// against a fresh rebuild so the reported I is drift-free.
inline MatchResult run_match(LagState& state, double i_target, const ResampleConfig& cfg,
                             std::span<const double> pool, Rng& rng, std::size_t budget,
                             std::size_t& accepted_since_resync,
                             std::vector<double>* accept_trace) {
    const std::size_t resync = cfg.effective_resync(state.size());
    MatchResult res;
    for (;;) {
        if (std::abs(i_target - state.moran()) <= cfg.epsilon) {
            state.rebuild();
            accepted_since_resync = 0;
            if (std::abs(i_target - state.moran()) <= cfg.epsilon) {
                res.converged = true;
                return res;
            }
        }
        if (res.proposals >= budget) return res;
        const MoveProposal mv = propose_move(state, cfg, pool, rng);
        ++res.proposals;
        if (!mv.valid) continue;
        if (greedy_energy_gain(mv.delta_i, i_target - state.moran()) >= 0.0) {
            apply_move(state, mv);
            if (accept_trace) accept_trace->push_back(state.moran());
            if (++accepted_since_resync >= resync) {
                state.rebuild();
                accepted_since_resync = 0;
            }
        }
    }
}

} // namespace detail

// Greedy maximization of I starting from the given configuration (callers
// permute first when a random start is wanted). Always terminates: either
// I exceeds twice the target or the plateau rule fires.
inline Field prefreeze(const Field& field, const SpatialWeights& weights, double i_target,
                       const ResampleConfig& config) {
    config.validate();
    LagState state(field, weights);
    Rng rng(config.seed);
    std::size_t accepted = 0;
    detail::run_prefreeze(state, i_target, config, field.values, rng, accepted);
    state.rebuild();
    return state.field(field.name);
}

// One constrained resample: start from a fresh random permutation of the
// field, pre-freeze when enabled, then descend E = (I_target - I)^2 accepting
// moves with dE >= 0 until |I_target - I| <= epsilon or the budget runs out.
inline ResampleOutcome greedy_match(const Field& field, const SpatialWeights& weights,
                                    double i_target, const ResampleConfig& config,
                                    std::vector<double>* accept_trace = nullptr) {
    config.validate();
    check_compatible(field, weights);
    if (std::abs(i_target) > 1.0 + 1e-12)
        throw error("i_target must lie in [-1, 1]");

    Rng rng(config.seed);
    std::vector<double> start = field.values;
    rng.shuffle(start);
    LagState state(Field(std::move(start)), weights);

    ResampleOutcome out;
    out.high_target_warning = i_target > 0.7;

    std::size_t accepted_since_resync = 0;
    if (config.prefreeze)
        detail::run_prefreeze(state, i_target, config, field.values, rng, accepted_since_resync);

    const auto res = detail::run_match(state, i_target, config, field.values, rng,
                                       config.proposal_budget(state.size()),
                                       accepted_since_resync, accept_trace);
    if (!res.converged) state.rebuild();
    out.values = state.field(field.name);
    out.achieved_i = state.moran();
    out.proposals_used = res.proposals;
    out.converged = res.converged;
    return out;
}

// count independent resamples targeting I(field), each from its own seed
// derived from (config.seed, sample index). Embarrassingly parallel and
// schedule-independent.
inline std::vector<ResampleOutcome> generate_ensemble(const Field& field,
                                                      const SpatialWeights& weights,
                                                      std::size_t count,
                                                      const ResampleConfig& config) {
    if (count < 1) throw error("ensemble count must be at least 1");
    config.validate();
    const double i_target = moran_i(field, weights);
    std::vector<ResampleOutcome> outcomes(count);
    parallel_for(count, [&](std::size_t k) {
        ResampleConfig sample_cfg = config;
        sample_cfg.seed = derive_seed(config.seed, k);
        outcomes[k] = greedy_match(field, weights, i_target, sample_cfg);
    });
    return outcomes;
}

// Strict-mode gate: raise if any resample missed its target.
inline void require_converged(std::span<const ResampleOutcome> outcomes) {
    std::size_t failures = 0;
    std::string detail;
    for (std::size_t k = 0; k < outcomes.size(); ++k) {
        if (!outcomes[k].converged) {
            ++failures;
            if (failures <= 3)
                detail += " #" + std::to_string(k) + " (I=" + std::to_string(outcomes[k].achieved_i) + ")";
        }
    }
    if (failures > 0)
        throw convergence_error(std::to_string(failures) + " of " +
                                std::to_string(outcomes.size()) +
                                " resamples did not converge:" + detail);
}

} // namespace constmoran
