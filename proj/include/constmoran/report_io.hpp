#pragma once

#include <string>

#include <json.hpp>

#include "constmoran/io.hpp"
#include "constmoran/significance.hpp"

namespace constmoran {

inline constexpr int schema_version = 1;

inline nlohmann::json to_json(const DistSummary& s) {
    return {{"count", s.count}, {"mean", s.mean},     {"sd", s.sd},   {"min", s.min},
            {"q25", s.q25},     {"median", s.median}, {"q75", s.q75}, {"max", s.max}};
}

inline nlohmann::json to_json(const ResampleConfig& c) {
    return {{"mode", c.mode == ResampleConfig::Mode::swap ? "swap" : "replace"},
            {"epsilon", c.epsilon},
            {"eta", c.eta},
            {"prefreeze", c.prefreeze},
            {"max_proposals", c.max_proposals},
            {"resync_interval", c.resync_interval}};
}

inline nlohmann::json to_json(const TestReport& r) {
    return {{"schema_version", schema_version},
            {"kind", "test_report"},
            {"observed_stat", r.observed_stat},
            {"p_value", r.p_value},
            {"null_sample_count", r.null_sample_count},
            {"null_summary", to_json(r.null_summary)},
            {"method",
             {{"name", r.method},
              {"stat", r.stat},
              {"tail", r.tail},
              {"pairing", r.pairing},
              {"n_samples", r.n_samples},
              {"seed", r.seed},
              {"resample", to_json(r.resample)}}},
            {"variables", {{"x", r.x_name}, {"y", r.y_name}}}};
}

inline nlohmann::json to_json(const CalibrationReport& r) {
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& c : r.cells) {
        cells.push_back({{"method", c.method},
                         {"stat", c.stat},
                         {"alpha", c.alpha},
                         {"rate", c.rate},
                         {"lower", c.lower},
                         {"upper", c.upper}});
    }
    return {{"schema_version", schema_version},
            {"kind", "calibration_report"},
            {"beta_x", r.beta_x},
            {"beta_y", r.beta_y},
            {"trials", r.trials},
            {"rows", r.rows},
            {"cols", r.cols},
            {"n_samples", r.n_samples},
            {"seed", r.seed},
            {"cells", cells}};
}

// One row per method/stat/alpha, ready for external plotting.
inline std::string to_csv(const CalibrationReport& r) {
    std::string out = "method,stat,alpha,rate,lower,upper\n";
    for (const auto& c : r.cells) {
        out += c.method + ',' + c.stat + ',' + format_double(c.alpha) + ',' +
               format_double(c.rate) + ',' + format_double(c.lower) + ',' +
               format_double(c.upper) + '\n';
    }
    return out;
}

inline nlohmann::json to_json(const VarianceSummary& v) {
    return {{"schema_version", schema_version},
            {"kind", "variance_report"},
            {"observed_mean", v.observed_mean},
            {"summary", to_json(v.summary)},
            {"n_pairs", v.n_pairs},
            {"method", v.method},
            {"pairing", v.pairing},
            {"n_samples", v.n_samples},
            {"seed", v.seed}};
}

} // namespace constmoran
