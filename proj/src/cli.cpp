#include "deepgb/cli.hpp"

#include "deepgb/error.hpp"
#include "deepgb/model_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace deepgb {

FeatureMatrix features_for_timestamps(const DeepGbModel& model,
                                      const std::vector<std::int64_t>& timestamps) {
    FeatureMatrix fm;
    for (std::size_t f = 0; f < model.feature_names.size(); ++f) {
        CalendarFeature feat;
        feat.name = model.feature_names[f];
        feat.cardinality = model.feature_cardinalities[f];
        feat.codes.reserve(timestamps.size());
        for (const std::int64_t t : timestamps) {
            feat.codes.push_back(calendar_code(t, feat.name));
        }
        fm.features.push_back(std::move(feat));
    }
    const double first = static_cast<double>(model.train_timestamps.front());
    const double last = static_cast<double>(model.train_timestamps.back());
    const double span = last > first ? last - first : 1.0;
    fm.time_index.reserve(timestamps.size());
    for (const std::int64_t t : timestamps) {
        fm.time_index.push_back((static_cast<double>(t) - first) / span);
    }
    return fm;
}

namespace cli {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

double to_double(const std::string& key, const std::string& value) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc{} || ptr != value.data() + value.size()) {
        throw ConfigError("config key '" + key + "': bad number '" + value + "'");
    }
    return v;
}

long long to_int(const std::string& key, const std::string& value) {
    long long v = 0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc{} || ptr != value.data() + value.size()) {
        throw ConfigError("config key '" + key + "': bad integer '" + value + "'");
    }
    return v;
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> out;
    std::string cur;
    for (const char c : value) {
        if (c == ',') {
            if (!trim(cur).empty()) out.push_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!trim(cur).empty()) out.push_back(trim(cur));
    return out;
}

const char* kConfigKeys[] = {
    "data",       "layout",        "missing",       "features",         "size_rule",
    "epsilon",    "max_stages",    "rho",           "epochs",           "batch_size",
    "seed",       "dropout",       "hidden",        "learning_rate",    "rms_decay",
    "rms_epsilon", "time2vec_k",   "window_size",   "trees",            "depth",
    "gbdt_learning_rate", "min_samples_leaf", "train_days", "test_days",
    "naive_period", "ar_order",    "out",
};

} // namespace

BoostConfig RunConfig::boost_config() const {
    BoostConfig b;
    b.epsilon = epsilon;
    b.max_stages = max_stages;
    b.rho = rho;
    b.size_rule = size_rule;
    b.time2vec_k = time2vec_k;
    b.train.epochs = epochs;
    b.train.batch_size = batch_size;
    b.train.seed = seed;
    b.train.dropout_rate = dropout;
    b.train.hidden_sizes = hidden;
    b.train.learning_rate = learning_rate;
    b.train.rms_decay = rms_decay;
    b.train.rms_epsilon = rms_epsilon;
    b.train.window_size = window_size;
    return b;
}

GbdtConfig RunConfig::gbdt_config() const {
    GbdtConfig g;
    g.n_trees = trees;
    g.max_depth = depth;
    g.learning_rate = gbdt_learning_rate;
    g.min_samples_leaf = min_samples_leaf;
    return g;
}

SplitSpec RunConfig::split_spec() const { return SplitSpec{train_days, test_days}; }

void apply_config_entry(RunConfig& c, const std::string& key, const std::string& value) {
    if (key == "data") {
        c.data = value;
    } else if (key == "layout") {
        if (value == "long") c.layout = CsvLayout::long_form;
        else if (value == "wide") c.layout = CsvLayout::wide;
        else throw ConfigError("config key 'layout': expected long|wide, got '" + value + "'");
    } else if (key == "missing") {
        if (value == "interpolate") c.missing = MissingPolicy::interpolate;
        else if (value == "drop_leading") c.missing = MissingPolicy::drop_leading;
        else throw ConfigError("config key 'missing': expected interpolate|drop_leading, got '" +
                               value + "'");
    } else if (key == "features") {
        c.features = split_list(value);
        if (c.features.empty()) throw ConfigError("config key 'features': empty list");
    } else if (key == "size_rule") {
        if (value == "half") c.size_rule = SizeRule::half;
        else if (value == "fourth_root") c.size_rule = SizeRule::fourth_root;
        else throw ConfigError("config key 'size_rule': expected half|fourth_root, got '" +
                               value + "'");
    } else if (key == "epsilon") {
        c.epsilon = to_double(key, value);
    } else if (key == "max_stages") {
        c.max_stages = static_cast<int>(to_int(key, value));
    } else if (key == "rho") {
        c.rho = to_double(key, value);
    } else if (key == "epochs") {
        c.epochs = static_cast<int>(to_int(key, value));
    } else if (key == "batch_size") {
        c.batch_size = static_cast<int>(to_int(key, value));
    } else if (key == "seed") {
        c.seed = static_cast<std::uint64_t>(to_int(key, value));
    } else if (key == "dropout") {
        c.dropout = to_double(key, value);
    } else if (key == "hidden") {
        c.hidden.clear();
        for (const auto& item : split_list(value)) {
            c.hidden.push_back(static_cast<int>(to_int(key, item)));
        }
        if (c.hidden.empty()) throw ConfigError("config key 'hidden': empty list");
    } else if (key == "learning_rate") {
        c.learning_rate = to_double(key, value);
    } else if (key == "rms_decay") {
        c.rms_decay = to_double(key, value);
    } else if (key == "rms_epsilon") {
        c.rms_epsilon = to_double(key, value);
    } else if (key == "time2vec_k") {
        c.time2vec_k = static_cast<int>(to_int(key, value));
    } else if (key == "window_size") {
        c.window_size = static_cast<int>(to_int(key, value));
    } else if (key == "trees") {
        c.trees = static_cast<int>(to_int(key, value));
    } else if (key == "depth") {
        c.depth = static_cast<int>(to_int(key, value));
    } else if (key == "gbdt_learning_rate") {
        c.gbdt_learning_rate = to_double(key, value);
    } else if (key == "min_samples_leaf") {
        c.min_samples_leaf = static_cast<int>(to_int(key, value));
    } else if (key == "train_days") {
        c.train_days = static_cast<int>(to_int(key, value));
    } else if (key == "test_days") {
        c.test_days = static_cast<int>(to_int(key, value));
    } else if (key == "naive_period") {
        c.naive_period = static_cast<int>(to_int(key, value));
    } else if (key == "ar_order") {
        c.ar_order = static_cast<int>(to_int(key, value));
    } else if (key == "out") {
        c.out = value;
    } else {
        throw ConfigError("unknown config key '" + key + "'");
    }
}

RunConfig load_config(const std::string& path) {
    RunConfig config;
    if (!path.empty()) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config file: " + path);
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const std::string stripped = trim(line);
            if (stripped.empty() || stripped[0] == '#') continue;
            const std::size_t eq = stripped.find('=');
            if (eq == std::string::npos) {
                throw ConfigError(path + ":" + std::to_string(lineno) +
                                  ": expected 'key = value'");
            }
            apply_config_entry(config, trim(stripped.substr(0, eq)),
                               trim(stripped.substr(eq + 1)));
        }
    }
    // environment overrides: DEEPGB_<KEY> in upper case
    for (const char* key : kConfigKeys) {
        std::string env_name = "DEEPGB_";
        for (const char* p = key; *p; ++p) {
            env_name.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(*p))));
        }
        if (const char* v = std::getenv(env_name.c_str())) {
            apply_config_entry(config, key, v);
        }
    }
    return config;
}

namespace {

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += ",";
        out += items[i];
    }
    return out;
}

std::string join_ints(const std::vector<int>& items) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(items[i]);
    }
    return out;
}

} // namespace

std::string effective_config(const RunConfig& c) {
    std::ostringstream out;
    out << "data = " << c.data << "\n";
    out << "layout = " << (c.layout == CsvLayout::wide ? "wide" : "long") << "\n";
    out << "missing = "
        << (c.missing == MissingPolicy::interpolate ? "interpolate" : "drop_leading") << "\n";
    out << "features = " << join(c.features) << "\n";
    out << "size_rule = " << (c.size_rule == SizeRule::half ? "half" : "fourth_root") << "\n";
    out << "epsilon = " << fmt_double(c.epsilon) << "\n";
    out << "max_stages = " << c.max_stages << "\n";
    out << "rho = " << fmt_double(c.rho) << "\n";
    out << "epochs = " << c.epochs << "\n";
    out << "batch_size = " << c.batch_size << "\n";
    out << "seed = " << c.seed << "\n";
    out << "dropout = " << fmt_double(c.dropout) << "\n";
    out << "hidden = " << join_ints(c.hidden) << "\n";
    out << "learning_rate = " << fmt_double(c.learning_rate) << "\n";
    out << "rms_decay = " << fmt_double(c.rms_decay) << "\n";
    out << "rms_epsilon = " << fmt_double(c.rms_epsilon) << "\n";
    out << "time2vec_k = " << c.time2vec_k << "\n";
    out << "window_size = " << c.window_size << "\n";
    out << "trees = " << c.trees << "\n";
    out << "depth = " << c.depth << "\n";
    out << "gbdt_learning_rate = " << fmt_double(c.gbdt_learning_rate) << "\n";
    out << "min_samples_leaf = " << c.min_samples_leaf << "\n";
    out << "train_days = " << c.train_days << "\n";
    out << "test_days = " << c.test_days << "\n";
    out << "naive_period = " << c.naive_period << "\n";
    out << "ar_order = " << c.ar_order << "\n";
    out << "out = " << c.out << "\n";
    return out.str();
}

std::vector<TimeSeries> load_input(const std::string& path, CsvLayout layout,
                                   MissingPolicy missing) {
    namespace fs = std::filesystem;
    if (path.empty()) throw ConfigError("no data path given (set 'data' or pass --data)");
    if (!fs::exists(path)) throw ConfigError("data path does not exist: " + path);
    if (!fs::is_directory(path)) return load_csv(path, layout, missing);

    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(path)) {
        if (entry.is_regular_file() && entry.path().extension() == ".csv") {
            files.push_back(entry.path().string());
        }
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw ConfigError("no .csv files in directory: " + path);
    std::vector<TimeSeries> all;
    for (const auto& f : files) {
        auto part = load_csv(f, layout, missing);
        for (auto& ts : part) all.push_back(std::move(ts));
    }
    return all;
}

namespace {

std::string model_path_for(const RunConfig& config, const std::string& series) {
    std::string safe;
    for (const char ch : series) {
        safe.push_back((std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_')
                           ? ch
                           : '_');
    }
    return (std::filesystem::path(config.out) / (safe + ".dgb")).string();
}

const TimeSeries& select_series(const std::vector<TimeSeries>& series, const std::string& name) {
    for (const auto& ts : series) {
        if (ts.name == name) return ts;
    }
    return series.front();
}

} // namespace

void run_fit(const RunConfig& config) {
    const auto series = load_input(config.data, config.layout, config.missing);
    atomic_write((std::filesystem::path(config.out) / "effective.conf").string(),
                 effective_config(config));
    for (const auto& ts : series) {
        const FeatureMatrix fm = extract_calendar_features(ts, config.features);
        const TrainTestSplit split = train_test_split(ts, fm, config.split_spec());
        const DeepGbModel model =
            deepgb_fit(split.train_ts, split.train_fm, config.boost_config(),
                       config.gbdt_config());
        for (const auto& stage : model.stages) {
            std::printf("series %s: stage %d feature=%s mean_abs_residual_delta=%.6g\n",
                        ts.name.c_str(), stage.index, stage.feature.c_str(), stage.delta);
        }
        std::printf("series %s: %s after %zu stage%s\n", ts.name.c_str(),
                    model.stopped_early ? "epsilon reached, stopped early" : "completed",
                    model.stages.size(), model.stages.size() == 1 ? "" : "s");
        const std::string path = model_path_for(config, ts.name);
        save_model(model, path);
        std::printf("series %s: wrote %s\n", ts.name.c_str(), path.c_str());
    }
}

void run_forecast(const std::string& model_path, const std::string& data_path, int horizon,
                  const std::string& out_path, const RunConfig& config) {
    if (horizon < 0) throw ConfigError("--horizon must be >= 0");
    const DeepGbModel model = load_model(model_path);
    const auto series = load_input(data_path, config.layout, config.missing);
    const TimeSeries& ts = select_series(series, model.series_name);

    const std::int64_t step = ts.step();
    std::vector<std::int64_t> future;
    future.reserve(static_cast<std::size_t>(horizon));
    for (int h = 1; h <= horizon; ++h) {
        future.push_back(ts.timestamps.back() + step * h);
    }
    std::string csv = "timestamp,forecast\n";
    if (horizon > 0) {
        const FeatureMatrix fm = features_for_timestamps(model, future);
        const std::vector<double> forecast = deepgb_predict(model, fm);
        char buf[80];
        for (std::size_t i = 0; i < future.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%lld,%.17g\n", static_cast<long long>(future[i]),
                          forecast[i]);
            csv += buf;
        }
    }
    atomic_write(out_path, csv);
    std::printf("wrote %s (%d rows)\n", out_path.c_str(), horizon);
}

void run_benchmark(const RunConfig& config) {
    const auto series = load_input(config.data, config.layout, config.missing);

    std::vector<ModelSpec> specs(3);
    specs[0].kind = ForecasterKind::deepgb;
    specs[0].label = "deepgb";
    specs[0].feature_names = config.features;
    specs[0].boost = config.boost_config();
    specs[0].gbdt = config.gbdt_config();
    specs[1].kind = ForecasterKind::seasonal_naive;
    specs[1].label = "seasonal_naive";
    specs[1].period = config.naive_period;
    specs[2].kind = ForecasterKind::linear_ar;
    specs[2].label = "linear_ar";
    specs[2].order = config.ar_order;

    const EvalReport report = backtest(series, specs, config.split_spec());
    std::fputs(render_table(report).c_str(), stdout);
    const std::string csv_path = (std::filesystem::path(config.out) / "benchmark.csv").string();
    atomic_write(csv_path, report_csv(report));
    std::printf("wrote %s\n", csv_path.c_str());
}

void run_export_plot(const std::string& model_path, const std::string& data_path,
                     const std::string& out_path, const RunConfig& config) {
    const DeepGbModel model = load_model(model_path);
    if (model.stages.empty()) {
        throw Error("model has no stage records; nothing to export");
    }
    const auto series = load_input(data_path, config.layout, config.missing);
    const TimeSeries& ts = select_series(series, model.series_name);

    // locate the training window in the series by timestamp
    const auto begin = std::find(ts.timestamps.begin(), ts.timestamps.end(),
                                 model.train_timestamps.front());
    if (begin == ts.timestamps.end()) {
        throw ShapeError("series '" + ts.name +
                         "' does not contain the model's training window");
    }
    const std::size_t offset = static_cast<std::size_t>(begin - ts.timestamps.begin());
    const std::size_t n = model.train_timestamps.size();
    if (offset + n > ts.size()) {
        throw ShapeError("series '" + ts.name + "' shorter than the model's training window");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (ts.timestamps[offset + i] != model.train_timestamps[i]) {
            throw ShapeError("series '" + ts.name +
                             "' timestamps do not align with the model's training window");
        }
    }

    std::string csv = "timestamp,y";
    for (const auto& stage : model.stages) {
        csv += ",stage_" + std::to_string(stage.index) + "_pred";
    }
    csv += ",residual\n";

    const auto& final_pred = model.stages.back().prediction;
    char buf[80];
    for (std::size_t i = 0; i < n; ++i) {
        const double y = ts.values[offset + i];
        std::snprintf(buf, sizeof(buf), "%lld,%.17g",
                      static_cast<long long>(model.train_timestamps[i]), y);
        csv += buf;
        for (const auto& stage : model.stages) {
            std::snprintf(buf, sizeof(buf), ",%.17g", model.scaler.invert(stage.prediction[i]));
            csv += buf;
        }
        std::snprintf(buf, sizeof(buf), ",%.17g\n", y - model.scaler.invert(final_pred[i]));
        csv += buf;
    }
    atomic_write(out_path, csv);
    std::printf("wrote %s (%zu rows, %zu stages)\n", out_path.c_str(), n, model.stages.size());
}

} // namespace cli
} // namespace deepgb
