#include "deepgb/series.hpp"

#include "deepgb/error.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace deepgb {

void TimeSeries::validate() const {
    if (timestamps.size() != values.size()) {
        throw ParseError("series '" + name + "': timestamp/value length mismatch");
    }
    if (values.size() < 2) {
        throw ParseError("series '" + name + "': need at least 2 observations, have " +
                         std::to_string(values.size()));
    }
    const std::int64_t spacing = timestamps[1] - timestamps[0];
    if (spacing <= 0) {
        throw SpacingError("series '" + name + "': timestamps not strictly increasing");
    }
    for (std::size_t i = 1; i < timestamps.size(); ++i) {
        if (timestamps[i] - timestamps[i - 1] != spacing) {
            throw SpacingError("series '" + name + "': non-uniform spacing at index " +
                               std::to_string(i) + " (expected step " + std::to_string(spacing) +
                               ", got " + std::to_string(timestamps[i] - timestamps[i - 1]) + ")");
        }
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i])) {
            throw ParseError("series '" + name + "': non-finite value at index " +
                             std::to_string(i));
        }
    }
}

TimeSeries TimeSeries::slice(std::size_t start, std::size_t count) const {
    TimeSeries out;
    out.name = name;
    out.timestamps.assign(timestamps.begin() + start, timestamps.begin() + start + count);
    out.values.assign(values.begin() + start, values.begin() + start + count);
    return out;
}

const CalendarFeature* FeatureMatrix::find(const std::string& name) const {
    for (const auto& f : features) {
        if (f.name == name) return &f;
    }
    return nullptr;
}

FeatureMatrix FeatureMatrix::slice(std::size_t start, std::size_t count) const {
    FeatureMatrix out;
    out.features.reserve(features.size());
    for (const auto& f : features) {
        CalendarFeature g;
        g.name = f.name;
        g.cardinality = f.cardinality;
        g.codes.assign(f.codes.begin() + start, f.codes.begin() + start + count);
        out.features.push_back(std::move(g));
    }
    out.time_index.assign(time_index.begin() + start, time_index.begin() + start + count);
    return out;
}

std::vector<double> Scaler::transform(const std::vector<double>& v) const {
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = transform(v[i]);
    return out;
}

std::vector<double> Scaler::invert(const std::vector<double>& v) const {
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = invert(v[i]);
    return out;
}

int feature_cardinality(const std::string& name) {
    if (name == "dayofweek") return 7;
    if (name == "hour") return 24;
    if (name == "month") return 12;
    if (name == "dayofmonth") return 31;
    throw ConfigError("unsupported calendar feature '" + name +
                      "' (supported: dayofweek, hour, month, dayofmonth)");
}

int calendar_code(std::int64_t timestamp, const std::string& feature) {
    using namespace std::chrono;
    const sys_seconds tp{seconds{timestamp}};
    const auto day_point = floor<days>(tp);
    if (feature == "dayofweek") {
        // Monday = 0 .. Sunday = 6
        return static_cast<int>(weekday{day_point}.iso_encoding()) - 1;
    }
    if (feature == "hour") {
        return static_cast<int>(duration_cast<hours>(tp - day_point).count());
    }
    const year_month_day ymd{day_point};
    if (feature == "month") {
        return static_cast<int>(unsigned(ymd.month())) - 1;  // 0-based
    }
    if (feature == "dayofmonth") {
        return static_cast<int>(unsigned(ymd.day())) - 1;  // 0-based
    }
    throw ConfigError("unsupported calendar feature '" + feature + "'");
}

FeatureMatrix extract_calendar_features(const TimeSeries& ts,
                                        const std::vector<std::string>& names) {
    if (names.empty()) {
        throw ConfigError("feature list is empty");
    }
    FeatureMatrix fm;
    fm.features.reserve(names.size());
    for (const auto& name : names) {
        CalendarFeature f;
        f.name = name;
        f.cardinality = feature_cardinality(name);
        f.codes.reserve(ts.size());
        for (const std::int64_t t : ts.timestamps) {
            f.codes.push_back(calendar_code(t, name));
        }
        fm.features.push_back(std::move(f));
    }
    fm.time_index.resize(ts.size());
    const double first = static_cast<double>(ts.timestamps.front());
    const double last = static_cast<double>(ts.timestamps.back());
    const double span = last > first ? last - first : 1.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        fm.time_index[i] = (static_cast<double>(ts.timestamps[i]) - first) / span;
    }
    return fm;
}

TrainTestSplit train_test_split(const TimeSeries& ts, const FeatureMatrix& fm,
                                const SplitSpec& spec) {
    if (spec.train_days < 1 || spec.test_days < 1) {
        throw ConfigError("train_days and test_days must both be >= 1");
    }
    if (fm.rows() != ts.size()) {
        throw ShapeError("series '" + ts.name + "': feature matrix has " +
                         std::to_string(fm.rows()) + " rows, series has " +
                         std::to_string(ts.size()));
    }
    const std::int64_t step = ts.step();
    if (step <= 0 || 86400 % step != 0) {
        throw SplitError("series '" + ts.name + "': step " + std::to_string(step) +
                         " s does not divide one day; day-based split undefined");
    }
    const std::size_t per_day = static_cast<std::size_t>(86400 / step);
    const std::size_t train_n = static_cast<std::size_t>(spec.train_days) * per_day;
    const std::size_t test_n = static_cast<std::size_t>(spec.test_days) * per_day;
    if (ts.size() < train_n + test_n) {
        throw SplitError("series '" + ts.name + "': split needs " +
                         std::to_string(train_n + test_n) + " points (" +
                         std::to_string(spec.train_days) + "+" + std::to_string(spec.test_days) +
                         " days at step " + std::to_string(step) + " s), have " +
                         std::to_string(ts.size()));
    }
    const std::size_t test_start = ts.size() - test_n;
    const std::size_t train_start = test_start - train_n;
    TrainTestSplit out;
    out.train_ts = ts.slice(train_start, train_n);
    out.test_ts = ts.slice(test_start, test_n);
    out.train_fm = fm.slice(train_start, train_n);
    out.test_fm = fm.slice(test_start, test_n);
    return out;
}

std::pair<Scaler, std::vector<double>> standardize(const std::vector<double>& values) {
    if (values.size() < 2) {
        throw TrainError("standardize: need at least 2 values");
    }
    const double n = static_cast<double>(values.size());
    double sum = 0.0;
    for (const double v : values) sum += v;
    const double mean = sum / n;
    double ss = 0.0;
    for (const double v : values) ss += (v - mean) * (v - mean);
    double stddev = std::sqrt(ss / n);
    if (stddev == 0.0) stddev = 1.0;
    Scaler scaler{mean, stddev};
    return {scaler, scaler.transform(values)};
}

} // namespace deepgb
