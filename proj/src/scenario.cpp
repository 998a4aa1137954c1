#include "edgesim/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace edgesim::sim {

namespace {

void require(bool ok, const std::string& key, const std::string& why) {
  if (!ok) throw std::invalid_argument("config " + key + ": " + why);
}

} // namespace

void ScenarioConfig::validate() const {
  require(devices.count > 0, "devices.count", "must be > 0");
  require(devices.lambda >= 0.0, "devices.lambda", "must be >= 0");
  require(devices.da_range.first >= 0.0 && devices.da_range.second >= devices.da_range.first,
          "devices.da_range", "must be a nonnegative interval");
  require(devices.pinned_gamma_default >= 0.0 && devices.pinned_gamma_default <= 1.0,
          "devices.pinned_gamma_default", "must lie in [0,1]");
  for (const auto& [id, g] : devices.pinned_gamma) {
    require(id < devices.count, "devices.pinned_gamma", "device id out of range");
    require(g >= 0.0 && g <= 1.0, "devices.pinned_gamma", "must lie in [0,1]");
  }
  for (const auto& [id, xi] : devices.xi) {
    require(id < devices.count, "devices.xi", "device id out of range");
    require(xi > 0.0, "devices.xi", "must be > 0");
  }
  require(devices.anomaly_rate >= 0.0 && devices.anomaly_rate <= 1.0, "devices.anomaly_rate",
          "must lie in [0,1]");
  require(devices.anomaly_intensity > 0.0, "devices.anomaly_intensity", "must be > 0");

  require(servers.count > 0, "servers.count", "must be > 0");
  require(servers.capacity > 0.0, "servers.capacity", "must be > 0");
  require(servers.capacity_multiplier > 0.0, "servers.capacity_multiplier", "must be > 0");
  require(servers.er_range.first > 0.0 && servers.er_range.second >= servers.er_range.first,
          "servers.er_range", "must be a positive interval");
  require(servers.cost_range.first >= 0.0 && servers.cost_range.second >= servers.cost_range.first,
          "servers.cost_range", "must be a nonnegative interval");

  require(brdi.alpha > 0.0, "brdi.alpha", "must be > 0");
  require(brdi.capacity > 0, "brdi.capacity", "must be > 0");
  require(brdi.beta1 >= 0.0 && brdi.beta2 >= 0.0 &&
              std::abs(brdi.beta1 + brdi.beta2 - 1.0) <= 1e-9,
          "brdi.beta1/beta2", "must be nonnegative and sum to 1");
  require(brdi.empty_prior >= 0.0 && brdi.empty_prior <= 1.0, "brdi.empty_prior",
          "must lie in [0,1]");

  require(detection.nu > 0.0 && detection.nu < 1.0, "detection.nu", "must lie in (0,1)");
  require(detection.sr_hidden > 0 && detection.tr_hidden > 0, "detection.*_hidden",
          "must be > 0");
  require(detection.epochs > 0 && detection.batch > 0, "detection.epochs/batch",
          "must be > 0");
  require(detection.ganed_n_c > 0 && detection.ganed_n_o > 0, "detection.ganed_*",
          "must be > 0");
  require(detection.bootstrap_records > 0, "detection.bootstrap_records", "must be > 0");
  require(detection.bootstrap_days > 0, "detection.bootstrap_days", "must be > 0");
  require(detection.slots_per_day > 0, "detection.slots_per_day", "must be > 0");

  require(rfta.tau.size() == 3 && rfta.units.size() == 3, "rfta.tau/units",
          "must have one entry per resource type");
  for (double t : rfta.tau) require(t > 0.0, "rfta.tau", "must be > 0");
  for (double u : rfta.units) require(u > 0.0, "rfta.units", "must be > 0");
  require(rfta.budget_scale >= 0.0, "rfta.budget_scale", "must be >= 0");
  require(rfta.fraction_cap > 0.0, "rfta.fraction_cap", "must be > 0");
  require(rfta.oracle_grid > 0.0, "rfta.oracle_grid", "must be > 0");
  require(rfta.oracle_node_cap > 0, "rfta.oracle_node_cap", "must be > 0");

  require(edrl.levels > 0, "edrl.levels", "must be > 0");
  require(!edrl.action_grid.empty(), "edrl.action_grid", "must be nonempty");
  bool has_zero = false;
  for (double f : edrl.action_grid) {
    require(f >= 0.0 && f <= 1.0, "edrl.action_grid", "fractions must lie in [0,1]");
    has_zero = has_zero || f == 0.0;
  }
  require(has_zero, "edrl.action_grid", "must include 0");
  require(edrl.epsilon_start >= 0.0 && edrl.epsilon_start <= 1.0, "edrl.epsilon_start",
          "must lie in [0,1]");
  require(edrl.epsilon_end >= 0.0 && edrl.epsilon_end <= 1.0, "edrl.epsilon_end",
          "must lie in [0,1]");
  require(edrl.epsilon_anneal_fraction >= 0.0 && edrl.epsilon_anneal_fraction <= 1.0,
          "edrl.epsilon_anneal_fraction", "must lie in [0,1]");
  require(edrl.theta_ema >= 0.0 && edrl.theta_ema < 1.0, "edrl.theta_ema",
          "must lie in [0,1)");
  require(edrl.feature_hidden > 0, "edrl.feature_hidden", "must be > 0");
  require(edrl.lr > 0.0, "edrl.lr", "must be > 0");

  require(sim.epochs > 0, "sim.epochs", "must be > 0");
  require(sim.epoch_requests > 0, "sim.epoch_requests", "must be > 0");
  require(sim.day_seconds > 0.0, "sim.day_seconds", "must be > 0");
}

rfta::ServerSpec Scenario::server_spec(std::size_t j) const {
  return {servers[j].capacity, servers[j].unit_cost};
}

std::vector<rfta::ServerSpec> Scenario::server_specs() const {
  std::vector<rfta::ServerSpec> out;
  out.reserve(servers.size());
  for (std::size_t j = 0; j < servers.size(); ++j) out.push_back(server_spec(j));
  return out;
}

Scenario build_scenario(const ScenarioConfig& cfg) {
  cfg.validate();
  Scenario sc;
  sc.cfg = cfg;

  const ReferenceScale ref;
  const std::vector<behavior::AppKind> default_roster = {
      behavior::AppKind::EmergencyResponse, behavior::AppKind::HomeVoiceAssistant,
      behavior::AppKind::BuildingAccessFaceDetection, behavior::AppKind::HealthMonitoring};
  const auto& roster = cfg.devices.roster.empty() ? default_roster : cfg.devices.roster;

  // servers first, so mean bundle costs are available for budget units
  for (std::size_t j = 0; j < cfg.servers.count; ++j) {
    Rng r = Rng(substream_seed(cfg.seed, "server", j));
    Server s;
    double cap = cfg.servers.capacity * cfg.servers.capacity_multiplier;
    s.capacity.assign(3, cap);
    for (std::size_t k = 0; k < 3; ++k) {
      s.unit_cost.push_back(cfg.servers.uniform_cost
                                ? 1.0
                                : r.uniform(cfg.servers.cost_range.first,
                                            cfg.servers.cost_range.second));
    }
    for (std::size_t k = 0; k < 3; ++k)
      s.processing_rate.push_back(
          r.uniform(cfg.servers.er_range.first, cfg.servers.er_range.second));
    sc.servers.push_back(std::move(s));
  }

  double xi_max = 0.0;
  std::vector<double> xis(cfg.devices.count);
  for (std::size_t i = 0; i < cfg.devices.count; ++i) {
    behavior::AppKind kind = roster[i % roster.size()];
    double xi = behavior::default_app_class(kind).priority;
    if (auto it = cfg.devices.xi.find(i); it != cfg.devices.xi.end()) xi = it->second;
    xis[i] = xi;
    xi_max = std::max(xi_max, xi);
  }

  for (std::size_t i = 0; i < cfg.devices.count; ++i) {
    Device d;
    d.profile.device_id = i;
    d.profile.app = behavior::default_app_class(roster[i % roster.size()]);
    if (cfg.devices.lambda > 0.0) d.profile.app.lambda = cfg.devices.lambda;
    d.profile.xi_override = xis[i];
    d.profile.rng_stream_id = i;
    if (cfg.devices.anomaly_rate > 0.0) {
      behavior::AnomalyRule rule;
      rule.granularity = behavior::Granularity::SR;
      rule.request_probability = cfg.devices.anomaly_rate;
      rule.intensity = cfg.devices.anomaly_intensity;
      rule.mode = behavior::SrAnomalyMode::Both;
      d.profile.anomaly_schedule.push_back(rule);
    }

    Rng r = Rng(substream_seed(cfg.seed, "device", i));
    const auto& ranges = d.profile.app.demand_ranges;
    d.demand = {r.trunc_normal(ranges[0].lo, ranges[0].hi) / ref.cpu_vcpus,
                r.trunc_normal(ranges[1].lo, ranges[1].hi) / ref.mem_gb,
                r.trunc_normal(ranges[2].lo, ranges[2].hi) / ref.bw_mbps};
    d.data_size = r.uniform(cfg.devices.da_range.first, cfg.devices.da_range.second);

    if (cfg.rfta.budget_normalized) {
      // budget unit: mean cost of the device's full demand bundle, scaled by
      // priority relative to the roster's top priority
      double mean_cost = 0.0;
      for (const auto& s : sc.servers) {
        for (std::size_t k = 0; k < 3; ++k) mean_cost += d.demand[k] * s.unit_cost[k];
      }
      mean_cost /= static_cast<double>(sc.servers.size());
      d.budget_unit = (xis[i] / xi_max) * cfg.rfta.budget_scale * mean_cost;
    } else {
      d.budget_unit = rfta::ultimate_budget(xis[i], d.data_size, cfg.rfta.tau, cfg.rfta.units);
    }

    d.pinned_gamma = cfg.devices.pinned_gamma_default;
    if (auto it = cfg.devices.pinned_gamma.find(i); it != cfg.devices.pinned_gamma.end())
      d.pinned_gamma = it->second;

    sc.devices.push_back(std::move(d));
  }
  return sc;
}

double access_time(double demand, double er, double allocated) {
  if (er <= 0.0) throw std::invalid_argument("processing rate must be > 0");
  if (allocated <= 0.0) throw std::invalid_argument("allocation must be > 0");
  if (demand < 0.0) throw std::invalid_argument("demand must be >= 0");
  return demand / (er * allocated);
}

} // namespace edgesim::sim
