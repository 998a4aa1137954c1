// JSON run configuration: strict parsing (unknown keys are errors, violated
// ranges name the offending key), stable serialization, and a content hash
// used to name output directories.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "edgesim/scenario.hpp"

namespace edgesim::sim {

struct SweepConfig {
  std::string axis;           // "servers", "devices", or "capacity"; empty = none
  std::vector<double> values; // axis values, applied in order
  int repeat = 1;             // seeds per value (seed, seed+1, ...)
};

struct RunConfig {
  ScenarioConfig scenario;
  SweepConfig sweep;
};

// Applies one sweep axis value; non-integer counts are rejected.
ScenarioConfig apply_sweep_value(const ScenarioConfig& base, const std::string& axis,
                                 double value);

RunConfig parse_config_text(const std::string& json_text);
RunConfig load_config(const std::string& path); // throws std::invalid_argument / runtime_error

// Canonical form: fixed key order, two-space indent, trailing newline.
// parse(serialize(c)) reproduces c exactly.
std::string serialize_config(const RunConfig& c);

// FNV-1a over the canonical serialization, as 16 hex digits.
std::string config_hash(const RunConfig& c);

} // namespace edgesim::sim
