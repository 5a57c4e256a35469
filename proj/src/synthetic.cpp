#include "deepgb/synthetic.hpp"

#include "deepgb/rng.hpp"

#include <cmath>
#include <cstdio>

namespace deepgb {
namespace synthetic {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

double daily_component(std::int64_t timestamp, const SeasonalSpec& spec) {
    const double hour = static_cast<double>((timestamp % 86400 + 86400) % 86400) / 3600.0;
    return spec.daily_amplitude * std::sin(2.0 * kPi * (hour - spec.phase_hours) / 24.0);
}

double weekly_component(std::int64_t timestamp, const SeasonalSpec& spec) {
    const int dow = calendar_code(timestamp, "dayofweek");
    return dow >= 5 ? -spec.weekend_dip : 0.0;
}

double clean_value(std::int64_t timestamp, const SeasonalSpec& spec) {
    return spec.base + daily_component(timestamp, spec) + weekly_component(timestamp, spec);
}

TimeSeries hourly_series(const std::string& name, std::int64_t start_timestamp, int days,
                         const SeasonalSpec& spec) {
    Rng rng(spec.seed);
    TimeSeries ts;
    ts.name = name;
    const int n = days * 24;
    ts.timestamps.reserve(static_cast<std::size_t>(n));
    ts.values.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const std::int64_t t = start_timestamp + static_cast<std::int64_t>(i) * 3600;
        ts.timestamps.push_back(t);
        ts.values.push_back(clean_value(t, spec) + rng.normal(0.0, spec.noise_sigma));
    }
    return ts;
}

std::string to_long_csv(const TimeSeries& ts) {
    std::string out = "timestamp,value\n";
    char buf[64];
    for (std::size_t i = 0; i < ts.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%lld,%.17g\n",
                      static_cast<long long>(ts.timestamps[i]), ts.values[i]);
        out += buf;
    }
    return out;
}

std::vector<TimeSeries> bundled_suite() {
    // all start on a Thursday so the trailing 3-day test window lands on
    // Sat/Sun/Mon, which a one-day naive repeat cannot track
    const std::int64_t thu_2021_01_07 = 1609977600;
    const std::int64_t thu_2021_03_04 = 1614816000;
    const std::int64_t thu_2021_06_03 = 1622678400;

    SeasonalSpec alpha;
    alpha.base = 10.0;
    alpha.daily_amplitude = 5.0;
    alpha.weekend_dip = 3.0;
    alpha.noise_sigma = 0.5;
    alpha.seed = 101;

    SeasonalSpec bravo;
    bravo.base = 50.0;
    bravo.daily_amplitude = 12.0;
    bravo.phase_hours = 6.0;
    bravo.weekend_dip = 8.0;
    bravo.noise_sigma = 1.0;
    bravo.seed = 202;

    SeasonalSpec charlie;
    charlie.base = 20.0;
    charlie.daily_amplitude = 4.0;
    charlie.phase_hours = 3.0;
    charlie.weekend_dip = 6.0;
    charlie.noise_sigma = 0.4;
    charlie.seed = 303;

    return {hourly_series("suite_alpha", thu_2021_01_07, 33, alpha),
            hourly_series("suite_bravo", thu_2021_03_04, 33, bravo),
            hourly_series("suite_charlie", thu_2021_06_03, 33, charlie)};
}

} // namespace synthetic
} // namespace deepgb
