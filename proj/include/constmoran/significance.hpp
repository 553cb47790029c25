#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "constmoran/assoc_stats.hpp"
#include "constmoran/error.hpp"
#include "constmoran/field_synth.hpp"
#include "constmoran/moran.hpp"
#include "constmoran/numeric.hpp"
#include "constmoran/parallel.hpp"
#include "constmoran/resampler.hpp"
#include "constmoran/rng.hpp"
#include "constmoran/spatial_weights.hpp"

namespace constmoran {

enum class NullMethodKind {
    random_permutation, // method 1: destroys autocorrelation
    known_generator,    // method 2: fresh fields from the true spectral slope
    constant_i          // method 3: resampling at fixed Moran's I
};

inline std::string to_string(NullMethodKind k) {
    switch (k) {
        case NullMethodKind::random_permutation: return "random_permutation";
        case NullMethodKind::known_generator: return "known_generator";
        case NullMethodKind::constant_i: return "constant_i";
    }
    return "?";
}

inline NullMethodKind parse_method(std::string_view s) {
    if (s == "perm" || s == "random_permutation" || s == "permutation")
        return NullMethodKind::random_permutation;
    if (s == "generator" || s == "known_generator") return NullMethodKind::known_generator;
    if (s == "constant-i" || s == "constant_i" || s == "constanti")
        return NullMethodKind::constant_i;
    throw error("unknown method '" + std::string(s) + "' (expected perm|constant-i|generator)");
}

// known_generator needs the grid and the spectral slopes; the other methods
// ignore those fields.
struct NullMethod {
    NullMethodKind kind = NullMethodKind::constant_i;
    double beta_x = 0.0;
    double beta_y = 0.0;
    std::size_t rows = 0;
    std::size_t cols = 0;
};

enum class Tail { two_sided, greater };
enum class Pairing { cross_pairs, matched };

inline std::string to_string(Tail t) { return t == Tail::two_sided ? "two_sided" : "greater"; }
inline std::string to_string(Pairing p) {
    return p == Pairing::cross_pairs ? "cross_pairs" : "matched";
}

struct SignificanceConfig {
    std::size_t n_samples = 100; // N_p resamples per field
    NullMethod method;
    StatKind stat = StatKind::pearson;
    Tail tail = Tail::two_sided;
    Pairing pairing = Pairing::cross_pairs;
    ResampleConfig resample;
    std::uint64_t seed = 0;
    bool strict = true; // raise on non-converged resamples

    void validate() const {
        if (n_samples < 2) throw error("n_samples must be at least 2");
        resample.validate();
    }
};

namespace detail {

// One side's resample ensemble. The stream seed is keyed by the master seed
// and the field's contents: identical inputs reproduce identical resamples,
// distinct fields get independent streams.
inline std::vector<std::vector<double>> resample_side(const Field& field,
                                                      const SpatialWeights& weights, double beta,
                                                      const SignificanceConfig& cfg) {
    const std::uint64_t stream = derive_seed(cfg.seed, hash_values(field.values));
    std::vector<std::vector<double>> out(cfg.n_samples);
    switch (cfg.method.kind) {
        case NullMethodKind::random_permutation: {
            for (std::size_t k = 0; k < cfg.n_samples; ++k) {
                Rng rng(derive_seed(stream, k));
                out[k] = field.values;
                rng.shuffle(out[k]);
            }
            break;
        }
        case NullMethodKind::known_generator: {
            if (cfg.method.rows * cfg.method.cols != weights.n_sites())
                throw error("known_generator requires grid dimensions matching the weights");
            parallel_for(cfg.n_samples, [&](std::size_t k) {
                const SynthConfig sc{cfg.method.rows, cfg.method.cols, beta,
                                     derive_seed(stream, k)};
                out[k] = generate_field(sc).values;
            });
            break;
        }
        case NullMethodKind::constant_i: {
            ResampleConfig rc = cfg.resample;
            rc.seed = stream;
            const auto outcomes = generate_ensemble(field, weights, cfg.n_samples, rc);
            if (cfg.strict) require_converged(outcomes);
            for (std::size_t k = 0; k < cfg.n_samples; ++k) out[k] = outcomes[k].values.values;
            break;
        }
    }
    return out;
}

// Evaluate one statistic over the pairing scheme. Spearman is computed as
// Pearson on pre-ranked resamples so each ensemble is ranked once.
inline std::vector<double> paired_stat_values(StatKind stat,
                                              const std::vector<std::vector<double>>& ex,
                                              const std::vector<std::vector<double>>& ey,
                                              Pairing pairing) {
    const std::vector<std::vector<double>>* lhs = &ex;
    const std::vector<std::vector<double>>* rhs = &ey;
    std::vector<std::vector<double>> rx, ry;
    StatKind pair_stat = stat;
    if (stat == StatKind::spearman) {
        rx.reserve(ex.size());
        ry.reserve(ey.size());
        for (const auto& v : ex) rx.push_back(average_ranks(v));
        for (const auto& v : ey) ry.push_back(average_ranks(v));
        lhs = &rx;
        rhs = &ry;
        pair_stat = StatKind::pearson;
    }

    std::vector<double> values;
    const std::size_t n = ex.size();
    if (pairing == Pairing::cross_pairs) {
        values.reserve(n * (n - 1) / 2);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                values.push_back(evaluate_stat(pair_stat, (*lhs)[i], (*rhs)[j]));
    } else {
        values.reserve(n);
        for (std::size_t k = 0; k < n; ++k)
            values.push_back(evaluate_stat(pair_stat, (*lhs)[k], (*rhs)[k]));
    }
    return values;
}

} // namespace detail

// Null sample of the statistic: N_p resamples of each field by the configured
// method, then either all unordered cross pairs (x_i, y_j), i < j, giving
// N_p (N_p - 1) / 2 values, or N_p matched pairs.
inline std::vector<double> null_distribution(const Field& x, const Field& y,
                                             const SpatialWeights& weights,
                                             const SignificanceConfig& config) {
    config.validate();
    check_compatible(x, weights);
    check_compatible(y, weights);
    const auto ex = detail::resample_side(x, weights, config.method.beta_x, config);
    const auto ey = detail::resample_side(y, weights, config.method.beta_y, config);
    return detail::paired_stat_values(config.stat, ex, ey, config.pairing);
}

// Add-one smoothed empirical p-value; never exactly zero. two_sided measures
// extremeness as distance from the null sample mean.
inline double empirical_pvalue(double observed, std::span<const double> nulls, Tail tail) {
    if (nulls.size() < 2) throw error("need at least 2 null samples for a p-value");
    std::size_t at_least_as_extreme = 0;
    if (tail == Tail::two_sided) {
        const double center = vector_mean(nulls);
        const double obs_dev = std::abs(observed - center);
        for (double v : nulls)
            if (std::abs(v - center) >= obs_dev) ++at_least_as_extreme;
    } else {
        for (double v : nulls)
            if (v >= observed) ++at_least_as_extreme;
    }
    return static_cast<double>(1 + at_least_as_extreme) / static_cast<double>(1 + nulls.size());
}

struct TestReport {
    double observed_stat = 0.0;
    double p_value = 1.0;
    std::size_t null_sample_count = 0;
    DistSummary null_summary;
    // method metadata
    std::string method;
    std::string stat;
    std::string tail;
    std::string pairing;
    std::size_t n_samples = 0;
    std::uint64_t seed = 0;
    ResampleConfig resample;
    std::string x_name, y_name;
};

inline TestReport estimate_pvalue(const Field& x, const Field& y, const SpatialWeights& weights,
                                  const SignificanceConfig& config) {
    config.validate();
    const double observed = evaluate_stat(config.stat, x.values, y.values);
    const auto nulls = null_distribution(x, y, weights, config);
    TestReport r;
    r.observed_stat = observed;
    r.p_value = empirical_pvalue(observed, nulls, config.tail);
    r.null_sample_count = nulls.size();
    r.null_summary = summarize(nulls);
    r.method = to_string(config.method.kind);
    r.stat = to_string(config.stat);
    r.tail = to_string(config.tail);
    r.pairing = to_string(config.pairing);
    r.n_samples = config.n_samples;
    r.seed = config.seed;
    r.resample = config.resample;
    r.x_name = x.name;
    r.y_name = y.name;
    return r;
}

struct CalibrationConfig {
    double beta_x = 1.5;
    double beta_y = 1.5;
    std::size_t trials = 200;
    std::size_t rows = 20;
    std::size_t cols = 20;
    std::vector<NullMethodKind> methods = {NullMethodKind::random_permutation,
                                           NullMethodKind::known_generator,
                                           NullMethodKind::constant_i};
    std::vector<StatKind> stats = {StatKind::pearson};
    std::size_t n_samples = 50;
    Tail tail = Tail::two_sided;
    Pairing pairing = Pairing::cross_pairs;
    ResampleConfig resample;
    std::uint64_t seed = 0;
    std::vector<double> alphas = {0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5};
    std::size_t bootstrap_samples = 1000;

    void validate() const {
        if (trials < 50) throw error("calibration needs at least 50 trials");
        if (n_samples < 2) throw error("n_samples must be at least 2");
        if (methods.empty() || stats.empty()) throw error("need at least one method and one statistic");
        if (alphas.empty()) throw error("need at least one alpha level");
        resample.validate();
    }
};

struct CalibrationCell {
    std::string method;
    std::string stat;
    double alpha = 0.0;
    double rate = 0.0;     // observed false-positive fraction
    double lower = 0.0;    // bootstrap band
    double upper = 0.0;
};

struct CalibrationReport {
    double beta_x = 0.0, beta_y = 0.0;
    std::size_t trials = 0, rows = 0, cols = 0, n_samples = 0;
    std::uint64_t seed = 0;
    std::vector<CalibrationCell> cells;
    // trial-level p-values per (method, stat), kept for downstream checks
    std::map<std::pair<std::string, std::string>, std::vector<double>> pvalues;

    double rate_at(NullMethodKind method, StatKind stat, double alpha) const {
        for (const auto& c : cells) {
            if (c.method == to_string(method) && c.stat == to_string(stat) &&
                std::abs(c.alpha - alpha) < 1e-12)
                return c.rate;
        }
        throw error("no calibration cell for that method/stat/alpha");
    }
};

// False-positive calibration: synthesize `trials` independent field pairs,
// compute a p-value per method and statistic on each pair (resample ensembles
// are shared across statistics), then report the fraction of trials with
// p <= alpha and a percentile bootstrap band over the trial set.
inline CalibrationReport calibrate(const CalibrationConfig& config) {
    config.validate();
    const SpatialWeights weights = row_normalize(build_grid_queen(config.rows, config.cols));
    const std::size_t n_methods = config.methods.size();
    const std::size_t n_stats = config.stats.size();

    std::vector<std::vector<std::vector<double>>> pvals(
        n_methods, std::vector<std::vector<double>>(n_stats, std::vector<double>(config.trials)));

    parallel_for(config.trials, [&](std::size_t t) {
        const Field x = generate_field({config.rows, config.cols, config.beta_x,
                                        derive_seed(config.seed, t, 0)});
        const Field y = generate_field({config.rows, config.cols, config.beta_y,
                                        derive_seed(config.seed, t, 1)});
        for (std::size_t m = 0; m < n_methods; ++m) {
            SignificanceConfig sc;
            sc.n_samples = config.n_samples;
            sc.method = {config.methods[m], config.beta_x, config.beta_y, config.rows, config.cols};
            sc.tail = config.tail;
            sc.pairing = config.pairing;
            sc.resample = config.resample;
            sc.seed = derive_seed(config.seed, t, 2 + m);
            const auto ex = detail::resample_side(x, weights, config.beta_x, sc);
            const auto ey = detail::resample_side(y, weights, config.beta_y, sc);
            for (std::size_t s = 0; s < n_stats; ++s) {
                const auto nulls = detail::paired_stat_values(config.stats[s], ex, ey, sc.pairing);
                const double observed = evaluate_stat(config.stats[s], x.values, y.values);
                pvals[m][s][t] = empirical_pvalue(observed, nulls, config.tail);
            }
        }
    });

    CalibrationReport report;
    report.beta_x = config.beta_x;
    report.beta_y = config.beta_y;
    report.trials = config.trials;
    report.rows = config.rows;
    report.cols = config.cols;
    report.n_samples = config.n_samples;
    report.seed = config.seed;

    for (std::size_t m = 0; m < n_methods; ++m) {
        for (std::size_t s = 0; s < n_stats; ++s) {
            const auto& p = pvals[m][s];
            report.pvalues[{to_string(config.methods[m]), to_string(config.stats[s])}] = p;

            // one bootstrap index set per replicate, shared across alphas so
            // the band curves stay coherent in alpha
            Rng rng(derive_seed(config.seed, 0xb0070000ULL + m, s));
            std::vector<std::vector<double>> boot_rates(config.alphas.size());
            for (auto& v : boot_rates) v.reserve(config.bootstrap_samples);
            std::vector<double> replicate(p.size());
            for (std::size_t b = 0; b < config.bootstrap_samples; ++b) {
                for (std::size_t i = 0; i < p.size(); ++i) replicate[i] = p[rng.below(p.size())];
                for (std::size_t a = 0; a < config.alphas.size(); ++a) {
                    const double alpha = config.alphas[a];
                    const auto hits = std::count_if(replicate.begin(), replicate.end(),
                                                    [&](double pv) { return pv <= alpha; });
                    boot_rates[a].push_back(static_cast<double>(hits) /
                                            static_cast<double>(p.size()));
                }
            }
            for (std::size_t a = 0; a < config.alphas.size(); ++a) {
                const double alpha = config.alphas[a];
                const auto hits =
                    std::count_if(p.begin(), p.end(), [&](double pv) { return pv <= alpha; });
                CalibrationCell cell;
                cell.method = to_string(config.methods[m]);
                cell.stat = to_string(config.stats[s]);
                cell.alpha = alpha;
                cell.rate = static_cast<double>(hits) / static_cast<double>(p.size());
                std::sort(boot_rates[a].begin(), boot_rates[a].end());
                cell.lower = sorted_quantile(boot_rates[a], 0.025);
                cell.upper = sorted_quantile(boot_rates[a], 0.975);
                report.cells.push_back(cell);
            }
        }
    }
    return report;
}

struct VarianceSummary {
    DistSummary summary;
    std::size_t n_pairs = 0;
    std::string method;
    std::string pairing;
    std::size_t n_samples = 0;
    std::uint64_t seed = 0;
    double observed_mean = 0.0; // mean ratio of the un-resampled inputs
};

// Distribution of the site-mean of numerator/denominator under the configured
// null. Both fields are resampled; each resample pair contributes
// mean_i(num_i / den_i).
inline VarianceSummary estimate_variance(const Field& numerator, const Field& denominator,
                                         const SpatialWeights& weights,
                                         const SignificanceConfig& config) {
    config.validate();
    check_compatible(numerator, weights);
    check_compatible(denominator, weights);
    for (double v : denominator.values)
        if (!(v > 0.0)) throw error("denominator entries must be strictly positive");

    const auto mean_ratio = [](std::span<const double> num, std::span<const double> den) {
        KahanSum acc;
        for (std::size_t i = 0; i < num.size(); ++i) {
            if (!(den[i] > 0.0))
                throw error("resampled denominator is not strictly positive");
            acc.add(num[i] / den[i]);
        }
        return acc.value() / static_cast<double>(num.size());
    };

    const auto ex = detail::resample_side(numerator, weights, config.method.beta_x, config);
    const auto ey = detail::resample_side(denominator, weights, config.method.beta_y, config);

    std::vector<double> ratios;
    if (config.pairing == Pairing::cross_pairs) {
        ratios.reserve(ex.size() * (ex.size() - 1) / 2);
        for (std::size_t i = 0; i < ex.size(); ++i)
            for (std::size_t j = i + 1; j < ey.size(); ++j) ratios.push_back(mean_ratio(ex[i], ey[j]));
    } else {
        ratios.reserve(ex.size());
        for (std::size_t k = 0; k < ex.size(); ++k) ratios.push_back(mean_ratio(ex[k], ey[k]));
    }

    VarianceSummary vs;
    vs.summary = summarize(ratios);
    vs.n_pairs = ratios.size();
    vs.method = to_string(config.method.kind);
    vs.pairing = to_string(config.pairing);
    vs.n_samples = config.n_samples;
    vs.seed = config.seed;
    vs.observed_mean = mean_ratio(numerator.values, denominator.values);
    return vs;
}

} // namespace constmoran
