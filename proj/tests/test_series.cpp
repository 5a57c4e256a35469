#include "deepgb/error.hpp"
#include "deepgb/rng.hpp"
#include "deepgb/series.hpp"

#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

using namespace deepgb;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
    const auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream out(path);
    out << content;
    return path.string();
}

TimeSeries make_series(std::int64_t start, std::int64_t step, std::vector<double> values) {
    TimeSeries ts;
    ts.name = "t";
    for (std::size_t i = 0; i < values.size(); ++i) {
        ts.timestamps.push_back(start + static_cast<std::int64_t>(i) * step);
    }
    ts.values = std::move(values);
    return ts;
}

} // namespace

TEST_CASE("load_csv long layout parses epoch rows") {
    const auto path = write_temp("dg_long.csv", "timestamp,value\n0,1.0\n3600,2.0\n");
    const auto series = load_csv(path, CsvLayout::long_form);
    REQUIRE(series.size() == 1);
    CHECK(series[0].size() == 2);
    CHECK(series[0].step() == 3600);
    CHECK(series[0].values[0] == 1.0);
    CHECK(series[0].values[1] == 2.0);
    CHECK(series[0].name == "dg_long");
}

TEST_CASE("load_csv long layout accepts ISO timestamps") {
    const auto path = write_temp(
        "dg_iso.csv", "timestamp,value\n2020-09-08T00:00:00Z,1\n2020-09-09T00:00:00Z,2\n");
    const auto series = load_csv(path, CsvLayout::long_form);
    CHECK(series[0].timestamps[0] == 1599523200);
    CHECK(series[0].step() == 86400);
}

TEST_CASE("load_csv wide layout interpolates interior gaps") {
    const auto path =
        write_temp("dg_wide.csv", "series,2020-01-01,2020-01-02,2020-01-03\nPageA,5,,7\n");
    const auto series = load_csv(path, CsvLayout::wide, MissingPolicy::interpolate);
    REQUIRE(series.size() == 1);
    CHECK(series[0].name == "PageA");
    // hand oracle: linear midpoint of 5 and 7
    CHECK(series[0].values == std::vector<double>{5.0, 6.0, 7.0});
}

TEST_CASE("load_csv wide layout drops leading and trailing gaps") {
    const auto path = write_temp(
        "dg_wide2.csv", "series,2020-01-01,2020-01-02,2020-01-03,2020-01-04\nP,,3,4,\n");
    const auto series = load_csv(path, CsvLayout::wide);
    CHECK(series[0].values == std::vector<double>{3.0, 4.0});
    CHECK(series[0].timestamps[0] == 1577923200);  // 2020-01-02T00:00Z
}

TEST_CASE("load_csv rejects an all-empty series row") {
    const auto path = write_temp("dg_empty.csv", "series,2020-01-01,2020-01-02\nP,,\n");
    CHECK_THROWS_WITH_AS(static_cast<void>(load_csv(path, CsvLayout::wide)),
                         doctest::Contains("empty after cleaning"), ParseError);
}

TEST_CASE("load_csv names the malformed cell") {
    const auto path =
        write_temp("dg_bad.csv", "series,2020-01-01,2020-01-02\nP,5,oops\n");
    CHECK_THROWS_WITH_AS(static_cast<void>(load_csv(path, CsvLayout::wide)),
                         doctest::Contains("row 2, column 3"), ParseError);
}

TEST_CASE("load_csv drop_leading policy rejects interior gaps") {
    const auto path =
        write_temp("dg_gap.csv", "series,2020-01-01,2020-01-02,2020-01-03\nP,5,,7\n");
    CHECK_THROWS_AS(static_cast<void>(load_csv(path, CsvLayout::wide, MissingPolicy::drop_leading)),
                    SpacingError);
}

TEST_CASE("load_csv long layout flags non-uniform spacing") {
    const auto path = write_temp("dg_sp.csv", "timestamp,value\n0,1\n3600,2\n10800,3\n");
    CHECK_THROWS_AS(static_cast<void>(load_csv(path, CsvLayout::long_form)), SpacingError);
}

TEST_CASE("calendar codes match the civil calendar") {
    // frozen from an independent date utility
    CHECK(calendar_code(0, "dayofweek") == 3);  // 1970-01-01 was a Thursday
    CHECK(calendar_code(0, "hour") == 0);
    CHECK(calendar_code(0, "month") == 0);
    CHECK(calendar_code(0, "dayofmonth") == 0);

    // 2020-09-08T00:00Z, a Tuesday
    CHECK(calendar_code(1599523200, "dayofweek") == 1);
    CHECK(calendar_code(1599523200, "hour") == 0);
    CHECK(calendar_code(1599523200, "month") == 8);
    CHECK(calendar_code(1599523200, "dayofmonth") == 7);

    // 2009-02-13T23:31:30Z, a Friday
    CHECK(calendar_code(1234567890, "dayofweek") == 4);
    CHECK(calendar_code(1234567890, "hour") == 23);
    CHECK(calendar_code(1234567890, "month") == 1);
    CHECK(calendar_code(1234567890, "dayofmonth") == 12);

    CHECK(calendar_code(86399, "hour") == 23);
    CHECK(calendar_code(86400, "dayofweek") == 4);
}

TEST_CASE("extract_calendar_features fills codes and time index") {
    const auto ts = make_series(0, 3600, {1, 2, 3});
    const auto fm = extract_calendar_features(ts, {"dayofweek", "hour"});
    REQUIRE(fm.features.size() == 2);
    CHECK(fm.features[0].name == "dayofweek");
    CHECK(fm.features[0].cardinality == 7);
    CHECK(fm.features[0].codes == std::vector<int>{3, 3, 3});
    CHECK(fm.features[1].codes == std::vector<int>{0, 1, 2});
    CHECK(fm.time_index.front() == 0.0);
    CHECK(fm.time_index.back() == 1.0);
    CHECK(fm.time_index[1] == doctest::Approx(0.5));
}

TEST_CASE("extract_calendar_features two timesteps maps time index to endpoints") {
    const auto ts = make_series(100, 86400, {1, 2});
    const auto fm = extract_calendar_features(ts, {"dayofweek"});
    CHECK(fm.time_index == std::vector<double>{0.0, 1.0});
}

TEST_CASE("extract_calendar_features rejects unknown names") {
    const auto ts = make_series(0, 3600, {1, 2});
    CHECK_THROWS_AS(static_cast<void>(extract_calendar_features(ts, {"weekofyear"})),
                    ConfigError);
}

TEST_CASE("dayofweek advances by one per day") {
    Rng rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        const std::int64_t t =
            static_cast<std::int64_t>(rng.below(4'000'000'000ULL)) - 1'000'000'000;
        const int today = calendar_code(t, "dayofweek");
        const int tomorrow = calendar_code(t + 86400, "dayofweek");
        CHECK(tomorrow == (today + 1) % 7);
    }
}

TEST_CASE("generated codes stay within their cardinality") {
    Rng rng(11);
    const std::vector<std::string> names = {"dayofweek", "hour", "month", "dayofmonth"};
    TimeSeries ts;
    ts.name = "p";
    std::int64_t t = static_cast<std::int64_t>(rng.below(2'000'000'000ULL));
    for (int i = 0; i < 500; ++i) {
        ts.timestamps.push_back(t);
        ts.values.push_back(0.0);
        t += 3600;
    }
    const auto fm = extract_calendar_features(ts, names);
    for (const auto& f : fm.features) {
        CHECK(f.codes.size() == ts.size());
        for (const int c : f.codes) {
            CHECK(c >= 0);
            CHECK(c < f.cardinality);
        }
    }
}

TEST_CASE("train_test_split on daily data") {
    const auto values = std::vector<double>(33, 1.0);
    const auto ts = make_series(0, 86400, values);
    const auto fm = extract_calendar_features(ts, {"dayofweek"});
    const auto split = train_test_split(ts, fm, SplitSpec{30, 3});
    CHECK(split.train_ts.size() == 30);
    CHECK(split.test_ts.size() == 3);
    CHECK(split.train_fm.rows() == 30);
    CHECK(split.test_fm.rows() == 3);
    // test slice is the final window, train immediately precedes it
    CHECK(split.test_ts.timestamps.back() == ts.timestamps.back());
    CHECK(split.train_ts.timestamps.back() + 86400 == split.test_ts.timestamps.front());
}

TEST_CASE("train_test_split on hourly data") {
    const auto ts = make_series(0, 3600, std::vector<double>(792, 2.0));
    const auto fm = extract_calendar_features(ts, {"hour"});
    const auto split = train_test_split(ts, fm, SplitSpec{30, 3});
    CHECK(split.train_ts.size() == 720);
    CHECK(split.test_ts.size() == 72);
}

TEST_CASE("train_test_split reports insufficient data") {
    const auto ts = make_series(0, 86400, std::vector<double>(10, 1.0));
    const auto fm = extract_calendar_features(ts, {"dayofweek"});
    CHECK_THROWS_WITH_AS(static_cast<void>(train_test_split(ts, fm, SplitSpec{30, 3})),
                         doctest::Contains("needs 33"), SplitError);
}

TEST_CASE("split windows concatenate back to the trailing window") {
    Rng rng(3);
    std::vector<double> values(40 * 24);
    for (auto& v : values) v = rng.normal();
    const auto ts = make_series(7200, 3600, values);
    const auto fm = extract_calendar_features(ts, {"hour"});
    const auto split = train_test_split(ts, fm, SplitSpec{30, 3});

    std::vector<double> joined = split.train_ts.values;
    joined.insert(joined.end(), split.test_ts.values.begin(), split.test_ts.values.end());
    const std::size_t tail = 33 * 24;
    const std::vector<double> expected(ts.values.end() - tail, ts.values.end());
    CHECK(joined == expected);
}

TEST_CASE("standardize hand values") {
    const auto [scaler, z] = standardize({2.0, 4.0});
    CHECK(scaler.mean == doctest::Approx(3.0));
    CHECK(scaler.stddev == doctest::Approx(1.0));  // population stddev
    CHECK(z[0] == doctest::Approx(-1.0));
    CHECK(z[1] == doctest::Approx(1.0));
}

TEST_CASE("standardize constant series uses unit stddev") {
    const auto [scaler, z] = standardize({5.0, 5.0, 5.0});
    CHECK(scaler.mean == 5.0);
    CHECK(scaler.stddev == 1.0);
    CHECK(z == std::vector<double>{0.0, 0.0, 0.0});
}

TEST_CASE("standardize round trip is tight on random data") {
    Rng rng(17);
    std::vector<double> values(256);
    for (auto& v : values) v = rng.normal(50.0, 12.0);
    const auto [scaler, z] = standardize(values);
    for (std::size_t i = 0; i < values.size(); ++i) {
        CHECK(scaler.invert(z[i]) ==
              doctest::Approx(values[i]).epsilon(1e-9));
    }
}

TEST_CASE("TimeSeries::validate catches bad inputs") {
    auto ts = make_series(0, 3600, {1, 2, 3});
    CHECK_NOTHROW(ts.validate());
    ts.timestamps[2] = 7300;
    CHECK_THROWS_AS(ts.validate(), SpacingError);
    auto nan_ts = make_series(0, 3600, {1, std::nan(""), 3});
    CHECK_THROWS_AS(nan_ts.validate(), ParseError);
}
