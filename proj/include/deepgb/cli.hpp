#pragma once

#include "deepgb/boosting.hpp"
#include "deepgb/eval.hpp"
#include "deepgb/series.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace deepgb {
namespace cli {

/// Everything a run needs, parsed from a flat key = value config file.
/// Unknown keys are rejected; every field has a working default.
/// Environment variables with the DEEPGB_ prefix (e.g. DEEPGB_EPOCHS)
/// override file values; command-line flags override both.
struct RunConfig {
    std::string data;
    CsvLayout layout = CsvLayout::long_form;
    MissingPolicy missing = MissingPolicy::interpolate;
    std::vector<std::string> features = {"dayofweek", "hour"};
    SizeRule size_rule = SizeRule::half;

    double epsilon = 1e-3;
    int max_stages = 0;  // 0 = one stage per feature
    double rho = 1.0;

    int epochs = 100;
    int batch_size = 32;
    std::uint64_t seed = 42;
    double dropout = 0.1;
    std::vector<int> hidden = {32, 32, 32, 32};
    double learning_rate = 0.0002;
    double rms_decay = 0.9;
    double rms_epsilon = 1e-8;
    int time2vec_k = 0;
    int window_size = 1;

    int trees = 800;
    int depth = 3;
    double gbdt_learning_rate = 0.1;
    int min_samples_leaf = 1;

    int train_days = 30;
    int test_days = 3;
    int naive_period = 0;  // 0 = auto
    int ar_order = 0;      // 0 = auto

    std::string out = "out";

    BoostConfig boost_config() const;
    GbdtConfig gbdt_config() const;
    SplitSpec split_spec() const;
};

/// Reads the file (when non-empty) and applies DEEPGB_* environment
/// overrides on top.
RunConfig load_config(const std::string& path);

/// Applies one `key = value` assignment. Throws ConfigError on unknown
/// keys or unparsable values.
void apply_config_entry(RunConfig& config, const std::string& key, const std::string& value);

/// Full key = value dump; parseable by load_config and complete enough to
/// reproduce the run.
std::string effective_config(const RunConfig& config);

/// Loads a data file, or every *.csv in a directory (sorted by filename).
std::vector<TimeSeries> load_input(const std::string& path, CsvLayout layout,
                                   MissingPolicy missing);

/// Fits one model per input series; writes `<out>/<series>.dgb`, the
/// effective config, and a per-stage log to stdout.
void run_fit(const RunConfig& config);

/// Extends the model's series `horizon` steps past its last observation
/// and writes a `timestamp,forecast` CSV to out_path.
void run_forecast(const std::string& model_path, const std::string& data_path, int horizon,
                  const std::string& out_path, const RunConfig& config);

/// Backtests deepgb against the two baselines on every input series;
/// prints the table and writes `<out>/benchmark.csv`.
void run_benchmark(const RunConfig& config);

/// Writes the per-stage decomposition of the model's training window
/// (timestamp, y, stage predictions, residual) to out_path.
void run_export_plot(const std::string& model_path, const std::string& data_path,
                     const std::string& out_path, const RunConfig& config);

} // namespace cli

/// Calendar features and extrapolated time index for arbitrary timestamps,
/// laid out exactly as the model expects.
FeatureMatrix features_for_timestamps(const DeepGbModel& model,
                                      const std::vector<std::int64_t>& timestamps);

} // namespace deepgb
