#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace deepgb {

/// Uniformly spaced univariate series with epoch-second timestamps.
///
/// Invariants (checked by validate()): timestamps strictly increasing with
/// constant spacing, same length as values, length >= 2, all values finite.
struct TimeSeries {
    std::string name;
    std::vector<std::int64_t> timestamps;
    std::vector<double> values;

    std::size_t size() const { return values.size(); }

    /// Constant spacing between consecutive timestamps, in seconds.
    std::int64_t step() const { return timestamps[1] - timestamps[0]; }

    /// Throws ParseError / SpacingError if any invariant is violated.
    void validate() const;

    /// Contiguous sub-series [start, start+count).
    TimeSeries slice(std::size_t start, std::size_t count) const;
};

/// One categorical column: integer codes in [0, cardinality), one per step.
struct CalendarFeature {
    std::string name;
    int cardinality = 0;
    std::vector<int> codes;
};

/// Ordered categorical features plus a continuous time index.
///
/// Feature order is the boosting-stage order (coarser features first).
/// time_index maps the first timestep to 0 and the last to 1; it feeds the
/// optional periodic time encoding and is unused otherwise.
struct FeatureMatrix {
    std::vector<CalendarFeature> features;
    std::vector<double> time_index;

    std::size_t rows() const { return time_index.size(); }

    const CalendarFeature* find(const std::string& name) const;

    FeatureMatrix slice(std::size_t start, std::size_t count) const;
};

/// Backtest protocol: a trailing test window of test_days immediately
/// preceded by a train window of train_days.
struct SplitSpec {
    int train_days = 30;
    int test_days = 3;
};

struct TrainTestSplit {
    TimeSeries train_ts;
    TimeSeries test_ts;
    FeatureMatrix train_fm;
    FeatureMatrix test_fm;
};

/// Mean/stddev record. transform(v) = (v - mean) / stddev and invert
/// reverses it exactly. Constant inputs get stddev = 1.
struct Scaler {
    double mean = 0.0;
    double stddev = 1.0;

    double transform(double v) const { return (v - mean) / stddev; }
    double invert(double z) const { return z * stddev + mean; }

    std::vector<double> transform(const std::vector<double>& v) const;
    std::vector<double> invert(const std::vector<double>& v) const;
};

enum class CsvLayout { wide, long_form };
enum class MissingPolicy { drop_leading, interpolate };

/// Loads one CSV file into cleaned series.
///
/// Wide layout: header `series,<ISO-date>,...` with one series per row,
/// daily spacing taken from the header dates. Long layout: header
/// `timestamp,value` (epoch seconds or ISO-8601), one series per file named
/// after the file stem.
///
/// Leading/trailing missing cells are always dropped. Interior gaps are
/// linearly interpolated under MissingPolicy::interpolate and are an error
/// under drop_leading.
std::vector<TimeSeries> load_csv(const std::string& path, CsvLayout layout,
                                 MissingPolicy missing = MissingPolicy::interpolate);

/// Supported calendar feature names with their cardinalities:
/// dayofweek (7, Monday=0), hour (24), month (12, 0-based),
/// dayofmonth (31, 0-based). Timestamps are interpreted as UTC.
int feature_cardinality(const std::string& name);

FeatureMatrix extract_calendar_features(const TimeSeries& ts,
                                        const std::vector<std::string>& names);

/// Calendar codes for a single timestamp (used when extending a series
/// beyond its last observation).
int calendar_code(std::int64_t timestamp, const std::string& feature);

/// Splits series and features into the trailing (train_days, test_days)
/// windows. Day counts convert to points via 86400 / step, so the step must
/// divide one day. Throws SplitError when the series is too short.
TrainTestSplit train_test_split(const TimeSeries& ts, const FeatureMatrix& fm,
                                const SplitSpec& spec);

/// Population mean/stddev of the input, stddev clamped to 1 for constant
/// input. Returns the scaler and the transformed values.
std::pair<Scaler, std::vector<double>> standardize(const std::vector<double>& values);

} // namespace deepgb
