#include "deepgb/eval.hpp"

#include "deepgb/error.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace deepgb {

double smape(const std::vector<double>& actual, const std::vector<double>& forecast) {
    if (actual.empty() || actual.size() != forecast.size()) {
        throw MetricError("smape: need equal non-empty actual/forecast (" +
                          std::to_string(actual.size()) + " vs " +
                          std::to_string(forecast.size()) + ")");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        const double denom = std::abs(actual[i]) + std::abs(forecast[i]);
        if (denom > 0.0) {
            sum += 2.0 * std::abs(forecast[i] - actual[i]) / denom;
        }
    }
    return 100.0 * sum / static_cast<double>(actual.size());
}

std::vector<double> seasonal_naive(const std::vector<double>& train, int horizon, int period) {
    if (period < 1) throw ConfigError("seasonal_naive: period must be >= 1");
    if (train.size() < static_cast<std::size_t>(period)) {
        throw TrainError("seasonal_naive: train length " + std::to_string(train.size()) +
                         " shorter than period " + std::to_string(period));
    }
    std::vector<double> out(static_cast<std::size_t>(std::max(horizon, 0)));
    const std::size_t tail = train.size() - static_cast<std::size_t>(period);
    for (std::size_t h = 0; h < out.size(); ++h) {
        out[h] = train[tail + h % static_cast<std::size_t>(period)];
    }
    return out;
}

namespace {

/// Gaussian elimination with partial pivoting; true on success.
bool solve_linear(std::vector<std::vector<double>> a, std::vector<double> b,
                  std::vector<double>& x) {
    const std::size_t n = b.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r) {
            if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
        }
        if (std::abs(a[pivot][col]) < 1e-12) return false;
        std::swap(a[pivot], a[col]);
        std::swap(b[pivot], b[col]);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double factor = a[r][col] / a[col][col];
            for (std::size_t c = col; c < n; ++c) a[r][c] -= factor * a[col][c];
            b[r] -= factor * b[col];
        }
    }
    x.assign(n, 0.0);
    for (std::size_t row = n; row-- > 0;) {
        double acc = b[row];
        for (std::size_t c = row + 1; c < n; ++c) acc -= a[row][c] * x[c];
        x[row] = acc / a[row][row];
    }
    return true;
}

} // namespace

std::vector<double> linear_ar_coefficients(const std::vector<double>& train, int order) {
    if (order < 1) throw ConfigError("linear_ar: order must be >= 1");
    const std::size_t p = static_cast<std::size_t>(order);
    if (train.size() <= p + 1) {
        throw TrainError("linear_ar: train length " + std::to_string(train.size()) +
                         " too short for order " + std::to_string(order));
    }
    const std::size_t rows = train.size() - p;
    const std::size_t dim = p + 1;  // intercept + lags

    // normal equations X^T X beta = X^T y on the lag matrix
    std::vector<std::vector<double>> xtx(dim, std::vector<double>(dim, 0.0));
    std::vector<double> xty(dim, 0.0);
    std::vector<double> row(dim, 1.0);
    for (std::size_t t = 0; t < rows; ++t) {
        for (std::size_t j = 0; j < p; ++j) row[j + 1] = train[p + t - 1 - j];
        const double y = train[p + t];
        for (std::size_t i = 0; i < dim; ++i) {
            xty[i] += row[i] * y;
            for (std::size_t j = 0; j < dim; ++j) xtx[i][j] += row[i] * row[j];
        }
    }
    std::vector<double> beta;
    if (!solve_linear(xtx, xty, beta)) {
        // ridge fallback with fixed damping
        const double damping = 1e-8;
        for (std::size_t i = 0; i < dim; ++i) xtx[i][i] += damping;
        if (!solve_linear(xtx, xty, beta)) {
            throw TrainError("linear_ar: normal equations singular even with ridge damping");
        }
    }
    return beta;
}

std::vector<double> linear_ar(const std::vector<double>& train, int order, int horizon) {
    const std::vector<double> beta = linear_ar_coefficients(train, order);
    const std::size_t p = static_cast<std::size_t>(order);
    std::vector<double> window(train.end() - static_cast<std::ptrdiff_t>(p), train.end());
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(std::max(horizon, 0)));
    for (int h = 0; h < horizon; ++h) {
        double next = beta[0];
        for (std::size_t j = 0; j < p; ++j) next += beta[j + 1] * window[window.size() - 1 - j];
        out.push_back(next);
        window.erase(window.begin());
        window.push_back(next);
    }
    return out;
}

int auto_season(std::int64_t step_seconds) {
    if (step_seconds < 86400) {
        return static_cast<int>(86400 / step_seconds);
    }
    return 7;  // weekly for daily-or-coarser data
}

namespace {

std::vector<double> run_forecast(const ModelSpec& spec, const TrainTestSplit& split,
                                 double& fit_seconds) {
    using clock = std::chrono::steady_clock;
    const int horizon = static_cast<int>(split.test_ts.size());
    const std::int64_t step = split.train_ts.step();
    switch (spec.kind) {
        case ForecasterKind::deepgb: {
            const auto t0 = clock::now();
            const DeepGbModel model =
                deepgb_fit(split.train_ts, split.train_fm, spec.boost, spec.gbdt);
            fit_seconds = std::chrono::duration<double>(clock::now() - t0).count();
            return deepgb_predict(model, split.test_fm);
        }
        case ForecasterKind::seasonal_naive: {
            const int period = spec.period > 0 ? spec.period : auto_season(step);
            const auto t0 = clock::now();
            auto out = seasonal_naive(split.train_ts.values, horizon, period);
            fit_seconds = std::chrono::duration<double>(clock::now() - t0).count();
            return out;
        }
        case ForecasterKind::linear_ar: {
            const int order = spec.order > 0 ? spec.order : auto_season(step);
            const auto t0 = clock::now();
            auto out = linear_ar(split.train_ts.values, order, horizon);
            fit_seconds = std::chrono::duration<double>(clock::now() - t0).count();
            return out;
        }
    }
    throw ConfigError("backtest: unknown forecaster kind");
}

std::string spec_label(const ModelSpec& spec) {
    if (!spec.label.empty()) return spec.label;
    switch (spec.kind) {
        case ForecasterKind::deepgb: return "deepgb";
        case ForecasterKind::seasonal_naive: return "seasonal_naive";
        case ForecasterKind::linear_ar: return "linear_ar";
    }
    return "?";
}

std::string format_double(const char* fmt, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), fmt, v);
    return buf;
}

} // namespace

EvalReport backtest(const std::vector<TimeSeries>& series, const std::vector<ModelSpec>& specs,
                    const SplitSpec& split_spec) {
    if (series.empty()) throw ConfigError("backtest: no series");
    if (specs.empty()) throw ConfigError("backtest: no model specs");

    std::vector<const TimeSeries*> ordered;
    ordered.reserve(series.size());
    for (const auto& s : series) ordered.push_back(&s);
    std::sort(ordered.begin(), ordered.end(),
              [](const TimeSeries* a, const TimeSeries* b) { return a->name < b->name; });

    EvalReport report;
    report.protocol = split_spec;
    for (const TimeSeries* ts : ordered) {
        for (const auto& spec : specs) {
            ReportRow row;
            row.series = ts->name;
            row.model = spec_label(spec);
            try {
                // features for the widest need (the embedding specs); the
                // baselines ignore them
                std::vector<std::string> names = spec.feature_names;
                if (names.empty()) names = {"dayofweek", "hour"};
                const FeatureMatrix fm = extract_calendar_features(*ts, names);
                const TrainTestSplit split = train_test_split(*ts, fm, split_spec);
                const std::vector<double> forecast = run_forecast(spec, split, row.train_seconds);
                row.smape = smape(split.test_ts.values, forecast);
            } catch (const Error& e) {
                row.error = e.what();
                row.smape = std::numeric_limits<double>::quiet_NaN();
            }
            report.rows.push_back(std::move(row));
        }
    }
    return report;
}

std::string render_table(const EvalReport& report) {
    if (report.rows.empty()) throw MetricError("render_table: empty report");

    // lowest SMAPE per series; ties all flagged
    std::vector<bool> best(report.rows.size(), false);
    for (std::size_t i = 0; i < report.rows.size(); ++i) {
        if (report.rows[i].failed()) continue;
        double min_smape = std::numeric_limits<double>::infinity();
        for (const auto& row : report.rows) {
            if (!row.failed() && row.series == report.rows[i].series) {
                min_smape = std::min(min_smape, row.smape);
            }
        }
        best[i] = report.rows[i].smape == min_smape;
    }

    std::size_t series_w = 6, model_w = 5;
    for (const auto& row : report.rows) {
        series_w = std::max(series_w, row.series.size());
        model_w = std::max(model_w, row.model.size());
    }

    std::ostringstream out;
    out << "protocol: train " << report.protocol.train_days << " days, test "
        << report.protocol.test_days << " days\n";
    char line[512];
    std::snprintf(line, sizeof(line), "%-*s  %-*s  %10s  %14s\n", static_cast<int>(series_w),
                  "series", static_cast<int>(model_w), "model", "smape", "train_seconds");
    out << line;
    for (std::size_t i = 0; i < report.rows.size(); ++i) {
        const auto& row = report.rows[i];
        if (row.failed()) {
            std::snprintf(line, sizeof(line), "%-*s  %-*s  ERROR: %s\n",
                          static_cast<int>(series_w), row.series.c_str(),
                          static_cast<int>(model_w), row.model.c_str(), row.error.c_str());
        } else {
            std::snprintf(line, sizeof(line), "%-*s  %-*s  %9.2f%s  %14.3f\n",
                          static_cast<int>(series_w), row.series.c_str(),
                          static_cast<int>(model_w), row.model.c_str(), row.smape,
                          best[i] ? "*" : " ", row.train_seconds);
        }
        out << line;
    }
    return out.str();
}

std::string report_csv(const EvalReport& report) {
    std::string out = "series,model,smape,train_seconds\n";
    for (const auto& row : report.rows) {
        out += row.series + "," + row.model + ",";
        if (row.failed()) {
            out += "error,";
        } else {
            out += format_double("%.10g", row.smape) + ",";
        }
        out += format_double("%.6f", row.train_seconds) + "\n";
    }
    return out;
}

} // namespace deepgb
