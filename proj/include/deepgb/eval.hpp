#pragma once

#include "deepgb/boosting.hpp"
#include "deepgb/series.hpp"

#include <string>
#include <vector>

namespace deepgb {

/// Symmetric mean absolute percentage error in percent:
///   (100/n) * sum 2|f - a| / (|a| + |f|)
/// Terms with |a| + |f| == 0 contribute 0. Range [0, 200].
double smape(const std::vector<double>& actual, const std::vector<double>& forecast);

/// Repeats the last full period at the same phase over the horizon.
std::vector<double> seasonal_naive(const std::vector<double>& train, int horizon, int period);

/// Ordinary least squares on the lag matrix (with intercept), then
/// recursive multi-step prediction. Singular normal equations fall back to
/// ridge with damping 1e-8.
std::vector<double> linear_ar(const std::vector<double>& train, int order, int horizon);

/// Fitted AR coefficients, intercept first (exposed for inspection).
std::vector<double> linear_ar_coefficients(const std::vector<double>& train, int order);

enum class ForecasterKind { deepgb, seasonal_naive, linear_ar };

/// One entry of the benchmark model list. The staged-embedding forecaster
/// carries its full configuration; the baselines need one integer each.
struct ModelSpec {
    ForecasterKind kind = ForecasterKind::seasonal_naive;
    std::string label;
    // deepgb
    std::vector<std::string> feature_names;
    BoostConfig boost;
    GbdtConfig gbdt;
    // seasonal_naive: samples per season; 0 = auto (one day for intra-day
    // steps, one week for daily steps)
    int period = 0;
    // linear_ar: lag order; 0 = auto (one day / one week as above)
    int order = 0;
};

struct ReportRow {
    std::string series;
    std::string model;
    double smape = 0.0;
    double train_seconds = 0.0;
    std::string error;  // non-empty when this fit/forecast failed

    bool failed() const { return !error.empty(); }
};

struct EvalReport {
    std::vector<ReportRow> rows;
    SplitSpec protocol;
};

/// Per-series step-derived default: one day of points for intra-day data,
/// one week of points for daily-or-coarser data.
int auto_season(std::int64_t step_seconds);

/// Fits every model spec on each series' trailing train window and scores
/// the following test window. Failures are recorded per row; the batch
/// continues. Rows are ordered by series name, then by spec order.
EvalReport backtest(const std::vector<TimeSeries>& series, const std::vector<ModelSpec>& specs,
                    const SplitSpec& split);

/// Human-readable table; the lowest SMAPE per series is flagged with '*'
/// (all of them, on ties). Throws MetricError for an empty report.
std::string render_table(const EvalReport& report);

/// CSV body with header `series,model,smape,train_seconds`.
std::string report_csv(const EvalReport& report);

} // namespace deepgb
