// constmoran: significance testing for spatial data under a fixed-Moran's-I
// null. Subcommands: moran, synth, test, calibrate, variance.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <constmoran/constmoran.hpp>
#include <constmoran/report_io.hpp>

namespace cm = constmoran;

namespace {

struct GraphSpec {
    std::string grid;      // "RxC"
    std::string adjacency; // edge-list path

    bool is_grid() const { return !grid.empty(); }

    std::pair<std::size_t, std::size_t> grid_dims() const {
        const auto sep = grid.find_first_of("xX");
        if (sep == std::string::npos)
            throw cm::error("--grid expects ROWSxCOLS, e.g. 40x40, got '" + grid + "'");
        try {
            const std::size_t rows = std::stoul(grid.substr(0, sep));
            const std::size_t cols = std::stoul(grid.substr(sep + 1));
            return {rows, cols};
        } catch (const std::exception&) {
            throw cm::error("--grid expects ROWSxCOLS, e.g. 40x40, got '" + grid + "'");
        }
    }

    cm::Dataset load(const std::string& values_path) const {
        if (is_grid()) {
            const auto [rows, cols] = grid_dims();
            return cm::load_dataset_grid(values_path, rows, cols);
        }
        return cm::load_dataset(values_path, adjacency);
    }
};

void add_graph_flags(CLI::App* cmd, GraphSpec& spec) {
    auto* grid = cmd->add_option("--grid", spec.grid, "grid dimensions ROWSxCOLS (queen contiguity)");
    auto* adj = cmd->add_option("--adjacency", spec.adjacency, "edge-list file: two site ids per line");
    grid->excludes(adj);
    adj->excludes(grid);
}

struct ResampleFlags {
    double epsilon = 1e-3;
    double eta = 1e-4;
    std::string mode = "swap";
    bool no_prefreeze = false;
    std::size_t max_proposals = 0;

    cm::ResampleConfig to_config() const {
        cm::ResampleConfig rc;
        rc.epsilon = epsilon;
        rc.eta = eta;
        rc.prefreeze = !no_prefreeze;
        rc.max_proposals = max_proposals;
        if (mode == "swap") {
            rc.mode = cm::ResampleConfig::Mode::swap;
        } else if (mode == "replace") {
            rc.mode = cm::ResampleConfig::Mode::replace;
        } else {
            throw cm::error("--mode expects swap or replace, got '" + mode + "'");
        }
        return rc;
    }
};

void add_resample_flags(CLI::App* cmd, ResampleFlags& rf) {
    cmd->add_option("--epsilon", rf.epsilon, "convergence tolerance on |I_target - I|");
    cmd->add_option("--eta", rf.eta, "pre-freeze plateau tolerance");
    cmd->add_option("--mode", rf.mode, "resampler move type: swap|replace");
    cmd->add_flag("--no-prefreeze", rf.no_prefreeze, "skip the pre-freeze warm start");
    cmd->add_option("--max-proposals", rf.max_proposals, "proposal budget (0 = 2000 * n_sites)");
}

void emit(const nlohmann::json& j, const std::string& out_path) {
    const std::string text = j.dump(2) + "\n";
    if (out_path.empty()) {
        std::cout << text;
    } else {
        cm::write_file(out_path, text);
    }
}

cm::Field maybe_ranked(const cm::Field& f, bool rank) {
    return rank ? cm::rank_transform(f) : f;
}

// targets above ~0.7 are parameter-sensitive; say so once per variable
void warn_high_target(const cm::SignificanceConfig& cfg, const cm::Field& f,
                      const cm::SpatialWeights& weights) {
    if (cfg.method.kind != cm::NullMethodKind::constant_i) return;
    const double i = cm::moran_i(f, weights);
    if (i > 0.7) {
        std::cerr << "warning: variable '" << f.name << "' has I = " << i
                  << " > 0.7; constant-I resampling is sensitive to optimizer parameters "
                     "at this level of autocorrelation\n";
    }
}

int run_moran(const std::string& values_path, const GraphSpec& graph,
              const std::vector<std::string>& variables, bool rank, bool as_json,
              const std::string& out_path) {
    const auto ds = graph.load(values_path);
    const auto weights = cm::row_normalize(ds.adjacency);
    const auto names = variables.empty() ? ds.variable_names : variables;
    nlohmann::json values = nlohmann::json::object();
    for (const auto& name : names) {
        const double i = cm::moran_i(maybe_ranked(ds.variable(name), rank), weights);
        values[name] = i;
        if (!as_json) std::cout << name << ": I = " << i << "\n";
    }
    if (as_json) {
        emit({{"schema_version", cm::schema_version}, {"kind", "moran_report"}, {"moran_i", values}},
             out_path);
    }
    return 0;
}

int run_synth(const GraphSpec& graph, double beta, std::uint64_t seed, const std::string& out_path) {
    const auto [rows, cols] = graph.grid_dims();
    const cm::SynthConfig cfg{rows, cols, beta, seed};
    const auto field = cm::generate_field(cfg);
    cm::write_file(out_path, cm::field_to_csv(cm::Field(field.values, "value")));
    const auto weights = cm::row_normalize(cm::build_grid_queen(rows, cols));
    std::cout << "I = " << cm::moran_i(field, weights) << "\n";
    return 0;
}

cm::SignificanceConfig make_significance_config(const std::string& method, const std::string& stat,
                                                std::size_t samples, const ResampleFlags& rf,
                                                std::uint64_t seed, const std::string& tail,
                                                const std::string& pairing, double beta_x,
                                                double beta_y, const GraphSpec& graph) {
    cm::SignificanceConfig cfg;
    cfg.n_samples = samples;
    cfg.method.kind = cm::parse_method(method);
    if (cfg.method.kind == cm::NullMethodKind::known_generator) {
        if (!graph.is_grid())
            throw cm::error("--method generator needs --grid and --beta-x/--beta-y");
        const auto [rows, cols] = graph.grid_dims();
        cfg.method.rows = rows;
        cfg.method.cols = cols;
        cfg.method.beta_x = beta_x;
        cfg.method.beta_y = beta_y;
    }
    cfg.stat = cm::parse_stat(stat);
    if (tail == "two_sided") cfg.tail = cm::Tail::two_sided;
    else if (tail == "greater") cfg.tail = cm::Tail::greater;
    else throw cm::error("--tail expects two_sided or greater");
    if (pairing == "cross_pairs") cfg.pairing = cm::Pairing::cross_pairs;
    else if (pairing == "matched") cfg.pairing = cm::Pairing::matched;
    else throw cm::error("--pairing expects cross_pairs or matched");
    cfg.resample = rf.to_config();
    cfg.seed = seed;
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"significance testing for spatially autocorrelated data "
                 "(constant-Moran's-I resampling)"};
    app.require_subcommand(1);

    // ---- moran ----
    auto* moran_cmd = app.add_subcommand("moran", "Moran's I per variable");
    std::string moran_values;
    GraphSpec moran_graph;
    std::vector<std::string> moran_vars;
    bool moran_rank = false, moran_json = false;
    std::string moran_out;
    moran_cmd->add_option("values", moran_values, "values CSV (site_id + numeric columns)")
        ->required();
    add_graph_flags(moran_cmd, moran_graph);
    moran_cmd->add_option("variables", moran_vars, "variable names (default: all)");
    moran_cmd->add_flag("--rank", moran_rank, "rank-transform variables first");
    moran_cmd->add_flag("--json", moran_json, "emit a JSON report");
    moran_cmd->add_option("--out", moran_out, "write the JSON report here");

    // ---- synth ----
    auto* synth_cmd = app.add_subcommand("synth", "synthesize a power-law random field");
    GraphSpec synth_graph;
    double synth_beta = 0.0;
    std::uint64_t synth_seed = 0;
    std::string synth_out;
    synth_cmd->add_option("--grid", synth_graph.grid, "grid dimensions ROWSxCOLS")->required();
    synth_cmd->add_option("--beta", synth_beta, "spectral slope: S(f) ~ f^-beta")->required();
    synth_cmd->add_option("--seed", synth_seed, "random seed");
    synth_cmd->add_option("--out", synth_out, "output field CSV")->required();

    // ---- test ----
    auto* test_cmd = app.add_subcommand("test", "significance test between two variables");
    std::string test_values, test_x, test_y, test_out;
    GraphSpec test_graph;
    std::string test_stat = "pearson", test_method = "constant-i";
    std::string test_tail = "two_sided", test_pairing = "cross_pairs";
    std::size_t test_samples = 100;
    std::uint64_t test_seed = 0;
    double test_beta_x = 0.0, test_beta_y = 0.0;
    bool test_rank = false;
    ResampleFlags test_rf;
    test_cmd->add_option("values", test_values, "values CSV")->required();
    test_cmd->add_option("var-x", test_x, "first variable")->required();
    test_cmd->add_option("var-y", test_y, "second variable")->required();
    add_graph_flags(test_cmd, test_graph);
    test_cmd->add_option("--stat", test_stat, "pearson|spearman|kendall|ks");
    test_cmd->add_option("--method", test_method, "perm|constant-i|generator");
    test_cmd->add_option("--samples", test_samples, "N_p resamples per field");
    test_cmd->add_option("--seed", test_seed, "random seed");
    test_cmd->add_option("--tail", test_tail, "two_sided|greater");
    test_cmd->add_option("--pairing", test_pairing, "cross_pairs|matched");
    test_cmd->add_option("--beta-x", test_beta_x, "generator method: slope for var-x");
    test_cmd->add_option("--beta-y", test_beta_y, "generator method: slope for var-y");
    test_cmd->add_flag("--rank", test_rank, "rank-transform variables first");
    add_resample_flags(test_cmd, test_rf);
    test_cmd->add_option("--out", test_out, "write the JSON report here (default stdout)");

    // ---- calibrate ----
    auto* cal_cmd = app.add_subcommand("calibrate", "false-positive calibration experiment");
    GraphSpec cal_graph;
    cal_graph.grid = "20x20";
    double cal_beta_x = 1.5, cal_beta_y = 1.5;
    std::size_t cal_trials = 200, cal_samples = 50;
    std::string cal_methods = "perm,generator,constant-i";
    std::string cal_stats = "pearson";
    std::uint64_t cal_seed = 0;
    std::string cal_out;
    bool cal_full_scale = false;
    ResampleFlags cal_rf;
    cal_cmd->add_option("--beta-x", cal_beta_x, "spectral slope for the x fields");
    cal_cmd->add_option("--beta-y", cal_beta_y, "spectral slope for the y fields");
    cal_cmd->add_option("--trials", cal_trials, "independent field pairs");
    cal_cmd->add_option("--grid", cal_graph.grid, "grid dimensions ROWSxCOLS");
    cal_cmd->add_option("--methods", cal_methods, "comma list of perm|generator|constant-i");
    cal_cmd->add_option("--stat", cal_stats, "comma list of pearson|spearman|kendall|ks");
    cal_cmd->add_option("--samples", cal_samples, "N_p resamples per field");
    cal_cmd->add_option("--seed", cal_seed, "random seed");
    cal_cmd->add_flag("--full-scale", cal_full_scale,
                      "1000 trials, N_p = 100, 40x40 (overrides --trials/--samples/--grid)");
    add_resample_flags(cal_cmd, cal_rf);
    cal_cmd->add_option("--out", cal_out, "basename: writes <out>.json and <out>.csv");

    // ---- variance ----
    auto* var_cmd = app.add_subcommand("variance", "variance of a mean ratio under a null");
    std::string var_values, var_num, var_den, var_out;
    GraphSpec var_graph;
    std::string var_method = "constant-i", var_pairing = "matched";
    std::size_t var_samples = 100;
    std::uint64_t var_seed = 0;
    ResampleFlags var_rf;
    var_cmd->add_option("values", var_values, "values CSV")->required();
    var_cmd->add_option("numerator", var_num, "numerator variable")->required();
    var_cmd->add_option("denominator", var_den, "denominator variable (strictly positive)")
        ->required();
    add_graph_flags(var_cmd, var_graph);
    var_cmd->add_option("--method", var_method, "perm|constant-i");
    var_cmd->add_option("--samples", var_samples, "N_p resamples per field");
    var_cmd->add_option("--seed", var_seed, "random seed");
    var_cmd->add_option("--pairing", var_pairing, "matched|cross_pairs");
    add_resample_flags(var_cmd, var_rf);
    var_cmd->add_option("--out", var_out, "write the JSON report here (default stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (moran_cmd->parsed()) {
            return run_moran(moran_values, moran_graph, moran_vars, moran_rank,
                             moran_json || !moran_out.empty(), moran_out);
        }
        if (synth_cmd->parsed()) {
            return run_synth(synth_graph, synth_beta, synth_seed, synth_out);
        }
        if (test_cmd->parsed()) {
            const auto ds = test_graph.load(test_values);
            const auto weights = cm::row_normalize(ds.adjacency);
            const auto cfg = make_significance_config(test_method, test_stat, test_samples,
                                                      test_rf, test_seed, test_tail, test_pairing,
                                                      test_beta_x, test_beta_y, test_graph);
            const auto x = maybe_ranked(ds.variable(test_x), test_rank);
            const auto y = maybe_ranked(ds.variable(test_y), test_rank);
            warn_high_target(cfg, x, weights);
            warn_high_target(cfg, y, weights);
            const auto report = cm::estimate_pvalue(x, y, weights, cfg);
            if (report.observed_stat != report.observed_stat)
                throw cm::error("observed statistic is NaN");
            emit(cm::to_json(report), test_out);
            return 0;
        }
        if (cal_cmd->parsed()) {
            cm::CalibrationConfig cfg;
            if (cal_full_scale) {
                cal_trials = 1000;
                cal_samples = 100;
                cal_graph.grid = "40x40";
            }
            const auto [rows, cols] = cal_graph.grid_dims();
            cfg.rows = rows;
            cfg.cols = cols;
            cfg.beta_x = cal_beta_x;
            cfg.beta_y = cal_beta_y;
            cfg.trials = cal_trials;
            cfg.n_samples = cal_samples;
            cfg.seed = cal_seed;
            cfg.resample = cal_rf.to_config();
            cfg.methods.clear();
            for (const auto& token : cm::detail::split_tokens(cal_methods))
                cfg.methods.push_back(cm::parse_method(token));
            cfg.stats.clear();
            for (const auto& token : cm::detail::split_tokens(cal_stats))
                cfg.stats.push_back(cm::parse_stat(token));
            const auto report = cm::calibrate(cfg);
            if (cal_out.empty()) {
                emit(cm::to_json(report), "");
            } else {
                cm::write_file(cal_out + ".json", cm::to_json(report).dump(2) + "\n");
                cm::write_file(cal_out + ".csv", cm::to_csv(report));
            }
            return 0;
        }
        if (var_cmd->parsed()) {
            const auto ds = var_graph.load(var_values);
            const auto weights = cm::row_normalize(ds.adjacency);
            const auto cfg = make_significance_config(var_method, "pearson", var_samples, var_rf,
                                                      var_seed, "two_sided", var_pairing, 0.0, 0.0,
                                                      var_graph);
            warn_high_target(cfg, ds.variable(var_num), weights);
            warn_high_target(cfg, ds.variable(var_den), weights);
            const auto summary =
                cm::estimate_variance(ds.variable(var_num), ds.variable(var_den), weights, cfg);
            emit(cm::to_json(summary), var_out);
            return 0;
        }
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 1;
    }
    return 0;
}
