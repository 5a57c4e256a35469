#include "deepgb/error.hpp"
#include "deepgb/series.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace deepgb {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (const char c : line) {
        if (c == ',') {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(trim(cur));
    return out;
}

double parse_number(const std::string& cell, std::size_t row, std::size_t col,
                    const std::string& path) {
    double v = 0.0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last) {
        throw ParseError(path + ": malformed numeric cell '" + cell + "' at row " +
                         std::to_string(row) + ", column " + std::to_string(col));
    }
    return v;
}

bool parse_int_field(const std::string& s, int& out) {
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc{} && ptr == last;
}

/// Accepts `YYYY-MM-DD`, optionally followed by `THH:MM:SS` or ` HH:MM:SS`,
/// optionally suffixed with `Z`. Interpreted as UTC.
std::optional<std::int64_t> parse_iso_timestamp(const std::string& text) {
    std::string s = text;
    if (!s.empty() && s.back() == 'Z') s.pop_back();
    if (s.size() < 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
    int y, mo, d;
    if (!parse_int_field(s.substr(0, 4), y) || !parse_int_field(s.substr(5, 2), mo) ||
        !parse_int_field(s.substr(8, 2), d)) {
        return std::nullopt;
    }
    int hh = 0, mm = 0, ss = 0;
    if (s.size() > 10) {
        if ((s[10] != 'T' && s[10] != ' ') || s.size() < 18 || s[13] != ':' || s[16] != ':') {
            return std::nullopt;
        }
        if (!parse_int_field(s.substr(11, 2), hh) || !parse_int_field(s.substr(14, 2), mm) ||
            !parse_int_field(s.substr(17, 2), ss)) {
            return std::nullopt;
        }
    }
    using namespace std::chrono;
    const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)},
                             day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) return std::nullopt;
    const sys_days dp{ymd};
    return dp.time_since_epoch().count() * std::int64_t{86400} + hh * 3600 + mm * 60 + ss;
}

std::int64_t parse_timestamp(const std::string& cell, std::size_t row, std::size_t col,
                             const std::string& path) {
    std::int64_t epoch = 0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    auto [ptr, ec] = std::from_chars(first, last, epoch);
    if (ec == std::errc{} && ptr == last) return epoch;
    if (auto iso = parse_iso_timestamp(cell)) return *iso;
    throw ParseError(path + ": malformed timestamp '" + cell + "' at row " +
                     std::to_string(row) + ", column " + std::to_string(col));
}

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

/// Drops leading/trailing missing cells, then fills or rejects interior
/// gaps per the policy. `timestamps` is trimmed in lockstep.
void clean_missing(TimeSeries& ts, MissingPolicy policy, const std::string& path) {
    auto& v = ts.values;
    std::size_t begin = 0;
    while (begin < v.size() && std::isnan(v[begin])) ++begin;
    std::size_t end = v.size();
    while (end > begin && std::isnan(v[end - 1])) --end;
    if (begin >= end) {
        throw ParseError(path + ": series '" + ts.name + "' empty after cleaning");
    }
    v.erase(v.begin() + end, v.end());
    v.erase(v.begin(), v.begin() + begin);
    ts.timestamps.erase(ts.timestamps.begin() + end, ts.timestamps.end());
    ts.timestamps.erase(ts.timestamps.begin(), ts.timestamps.begin() + begin);

    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!std::isnan(v[i])) continue;
        if (policy == MissingPolicy::drop_leading) {
            throw SpacingError(path + ": series '" + ts.name + "' has an interior gap at index " +
                               std::to_string(i) + "; use the interpolate policy to fill it");
        }
        std::size_t j = i;
        while (j < v.size() && std::isnan(v[j])) ++j;
        // i-1 and j are valid by the trim above
        const double lo = v[i - 1];
        const double hi = v[j];
        const double gap = static_cast<double>(j - (i - 1));
        for (std::size_t k = i; k < j; ++k) {
            v[k] = lo + (hi - lo) * static_cast<double>(k - (i - 1)) / gap;
        }
        i = j;
    }
}

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open data file: " + path);
    }
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

std::vector<TimeSeries> load_wide(const std::vector<std::string>& lines, MissingPolicy policy,
                                  const std::string& path) {
    if (lines.empty()) throw ParseError(path + ": empty file");
    const auto header = split_fields(lines[0]);
    if (header.size() < 3) {
        throw ParseError(path + ": wide layout needs a series column and at least 2 dates");
    }
    std::vector<std::int64_t> stamps;
    stamps.reserve(header.size() - 1);
    for (std::size_t c = 1; c < header.size(); ++c) {
        const auto t = parse_iso_timestamp(header[c]);
        if (!t) {
            throw ParseError(path + ": malformed ISO date '" + header[c] +
                             "' in header column " + std::to_string(c + 1));
        }
        stamps.push_back(*t);
    }
    const std::int64_t spacing = stamps[1] - stamps[0];
    for (std::size_t i = 1; i < stamps.size(); ++i) {
        if (stamps[i] - stamps[i - 1] != spacing || spacing <= 0) {
            throw SpacingError(path + ": header dates not uniformly spaced at column " +
                               std::to_string(i + 2));
        }
    }

    std::vector<TimeSeries> out;
    for (std::size_t r = 1; r < lines.size(); ++r) {
        if (trim(lines[r]).empty()) continue;
        const auto cells = split_fields(lines[r]);
        if (cells.size() != header.size()) {
            throw ParseError(path + ": row " + std::to_string(r + 1) + " has " +
                             std::to_string(cells.size()) + " cells, header has " +
                             std::to_string(header.size()));
        }
        TimeSeries ts;
        ts.name = cells[0];
        ts.timestamps = stamps;
        ts.values.reserve(cells.size() - 1);
        for (std::size_t c = 1; c < cells.size(); ++c) {
            ts.values.push_back(cells[c].empty() ? kMissing
                                                 : parse_number(cells[c], r + 1, c + 1, path));
        }
        clean_missing(ts, policy, path);
        ts.validate();
        out.push_back(std::move(ts));
    }
    if (out.empty()) throw ParseError(path + ": no series rows");
    return out;
}

std::vector<TimeSeries> load_long(const std::vector<std::string>& lines, MissingPolicy policy,
                                  const std::string& path) {
    if (lines.empty()) throw ParseError(path + ": empty file");
    TimeSeries ts;
    ts.name = std::filesystem::path(path).stem().string();
    std::vector<std::pair<std::int64_t, double>> rows;
    std::size_t start = 0;
    // optional header row
    if (!lines.empty()) {
        const auto first = split_fields(lines[0]);
        if (!first.empty() && (first[0] == "timestamp" || first[0] == "time")) start = 1;
    }
    for (std::size_t r = start; r < lines.size(); ++r) {
        if (trim(lines[r]).empty()) continue;
        const auto cells = split_fields(lines[r]);
        if (cells.size() != 2) {
            throw ParseError(path + ": row " + std::to_string(r + 1) +
                             " needs exactly (timestamp, value)");
        }
        const std::int64_t t = parse_timestamp(cells[0], r + 1, 1, path);
        const double v = cells[1].empty() ? kMissing : parse_number(cells[1], r + 1, 2, path);
        rows.emplace_back(t, v);
    }
    if (rows.empty()) throw ParseError(path + ": no data rows");
    std::stable_sort(rows.begin(), rows.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [t, v] : rows) {
        ts.timestamps.push_back(t);
        ts.values.push_back(v);
    }
    clean_missing(ts, policy, path);
    ts.validate();
    return {std::move(ts)};
}

} // namespace

std::vector<TimeSeries> load_csv(const std::string& path, CsvLayout layout,
                                 MissingPolicy missing) {
    const auto lines = read_lines(path);
    return layout == CsvLayout::wide ? load_wide(lines, missing, path)
                                     : load_long(lines, missing, path);
}

} // namespace deepgb
