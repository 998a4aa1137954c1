// Scenario configuration and deterministic materialization: device rosters
// with static demand vectors, server capacities/rates/costs, and every knob
// the engine, detectors, and allocators read.
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "edgesim/behavior.hpp"
#include "edgesim/brdi.hpp"
#include "edgesim/edrl.hpp"
#include "edgesim/rfta.hpp"

namespace edgesim::sim {

struct DevicesConfig {
  std::size_t count = 20;
  // round-robin over this roster pattern; empty = one of each app class
  std::vector<behavior::AppKind> roster;
  double lambda = 0.0; // arrival rate override per device, 0 = class default
  std::pair<double, double> da_range = {5.0, 15.0};
  double pinned_gamma_default = 1.0;   // used while detection is off
  std::map<std::size_t, double> pinned_gamma; // per-device overrides
  std::map<std::size_t, double> xi;           // per-device priority overrides
  // request-level anomaly injection (applies when detection is on)
  double anomaly_rate = 0.0;      // per-request probability
  double anomaly_intensity = 5.0; // multiplicative boost
};

struct ServersConfig {
  std::size_t count = 5;
  double capacity = 1.0; // per resource type, before the multiplier
  double capacity_multiplier = 1.0;
  std::pair<double, double> er_range = {1.0, 5.0};
  std::pair<double, double> cost_range = {0.5, 1.5};
  bool uniform_cost = false; // cost 1 everywhere (isolates placement effects)
};

struct DetectionConfig {
  bool sr_enabled = false;
  bool tr_enabled = false;
  double nu = 0.04;
  int sr_hidden = 32;
  int tr_hidden = 16;
  int epochs = 20;
  int batch = 32;
  int ganed_n_c = 64;
  int ganed_n_o = 16;
  std::size_t bootstrap_records = 512; // SR training corpus size
  std::size_t bootstrap_days = 64;     // TR training corpus size (series)
  int slots_per_day = 144;
};

struct RftaConfig {
  std::vector<double> tau = {1.0, 1.0, 1.0};
  std::vector<double> units = {1.0, 1.0, 1.0};
  bool budget_normalized = true; // budget in bundle-cost units instead of B_U
  double budget_scale = 1.0;     // top-priority full-trust budget, in mean bundle costs
  double fraction_cap = 1.0;     // max served fraction per request
  double oracle_grid = 0.25;
  std::size_t oracle_node_cap = 10'000'000;
  bool floor_mode = false;
};

struct SimConfig {
  long epochs = 30;        // horizon
  int epoch_requests = 50; // processed requests per epoch
  double day_seconds = 86400.0;
};

struct ScenarioConfig {
  std::uint64_t seed = 1;
  DevicesConfig devices;
  ServersConfig servers;
  brdi::Config brdi;
  DetectionConfig detection;
  RftaConfig rfta;
  edrl::Config edrl;
  SimConfig sim;

  void validate() const; // throws std::invalid_argument naming the key
};

// Demands are expressed as fractions of a reference server, so one capacity
// unit of each type is one server.
struct ReferenceScale {
  double cpu_vcpus = 4.0;
  double mem_gb = 16.0;
  double bw_mbps = 240.0;
};

struct Device {
  behavior::DeviceProfile profile;
  rfta::ResourceVector demand; // X_i, drawn once, normalized units
  double data_size = 0.0;      // DA_i
  double budget_unit = 0.0;    // per-request budget at gamma = 1 (see budget mode)
  double pinned_gamma = 1.0;   // used while detection is off
};

struct Server {
  rfta::ResourceVector capacity;
  rfta::ResourceVector unit_cost;
  std::vector<double> processing_rate; // ER_{j,k}
};

struct Scenario {
  ScenarioConfig cfg;
  std::vector<Device> devices;
  std::vector<Server> servers;

  rfta::ServerSpec server_spec(std::size_t j) const;
  std::vector<rfta::ServerSpec> server_specs() const;
};

// Deterministic in cfg.seed; device/server draws use named substreams keyed
// by index, so extending a roster preserves existing entries.
Scenario build_scenario(const ScenarioConfig& cfg);

// T_s = x/(er*y); throws on nonpositive er or y.
double access_time(double demand, double er, double allocated);

} // namespace edgesim::sim
