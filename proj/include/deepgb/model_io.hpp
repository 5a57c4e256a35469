#pragma once

#include "deepgb/boosting.hpp"

#include <string>

namespace deepgb {

/// Versioned flat text encoding of a fitted forecaster. All reals are
/// written as hex floats, so save/load round-trips are bit-exact and two
/// identical models serialize to identical bytes.
std::string serialize_model(const DeepGbModel& model);
DeepGbModel deserialize_model(const std::string& text);

void save_model(const DeepGbModel& model, const std::string& path);
DeepGbModel load_model(const std::string& path);

/// Writes via a temp file in the same directory plus rename, so readers
/// never observe a half-written file.
void atomic_write(const std::string& path, const std::string& content);

/// Exact double <-> text helpers (hex significand, no 0x prefix).
std::string hex_double(double v);
double parse_hex_double(const std::string& s);

} // namespace deepgb
