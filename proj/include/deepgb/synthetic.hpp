#pragma once

#include "deepgb/series.hpp"

#include <cstdint>
#include <string>

namespace deepgb {
namespace synthetic {

/// Hourly seasonal generator used by the bundled demo data and the test
/// fixtures: a base level, a sinusoidal daily cycle, a level dip on
/// weekends, and Gaussian noise. Fully determined by the seed.
struct SeasonalSpec {
    double base = 10.0;
    double daily_amplitude = 5.0;
    /// Hour of the daily sinusoid's zero upcrossing.
    double phase_hours = 0.0;
    /// Subtracted from the level on Saturday and Sunday.
    double weekend_dip = 3.0;
    double noise_sigma = 0.5;
    std::uint64_t seed = 1;
};

/// Daily sinusoid value at a timestamp (amplitude * sin of the hour angle).
double daily_component(std::int64_t timestamp, const SeasonalSpec& spec);

/// Weekend dip value at a timestamp (-weekend_dip on Sat/Sun, else 0).
double weekly_component(std::int64_t timestamp, const SeasonalSpec& spec);

/// base + daily + weekly, without noise.
double clean_value(std::int64_t timestamp, const SeasonalSpec& spec);

/// `days * 24` hourly points starting at start_timestamp.
TimeSeries hourly_series(const std::string& name, std::int64_t start_timestamp, int days,
                         const SeasonalSpec& spec);

/// Long-layout CSV (`timestamp,value` header) for a series.
std::string to_long_csv(const TimeSeries& ts);

/// The three bundled demo series (hourly, 33 days each, weekend-aware test
/// windows under the default 30/3 protocol).
std::vector<TimeSeries> bundled_suite();

} // namespace synthetic
} // namespace deepgb
