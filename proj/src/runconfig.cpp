#include "edgesim/runconfig.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace edgesim::sim {

namespace {

using Json = nlohmann::ordered_json;

[[noreturn]] void bad(const std::string& what) {
  throw std::invalid_argument("config: " + what);
}

void reject_unknown(const Json& obj, const std::string& group,
                    const std::set<std::string>& known) {
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (!known.count(key))
      bad("unknown key " + (group.empty() ? key : group + "." + key));
  }
}

template <typename T>
void get_to(const Json& obj, const std::string& group, const std::string& key, T& out) {
  if (!obj.contains(key)) return;
  try {
    obj.at(key).get_to(out);
  } catch (const Json::exception&) {
    bad("bad value type for " + (group.empty() ? key : group + "." + key));
  }
}

void get_pair(const Json& obj, const std::string& group, const std::string& lo_key,
              const std::string& hi_key, std::pair<double, double>& out) {
  get_to(obj, group, lo_key, out.first);
  get_to(obj, group, hi_key, out.second);
}

std::map<std::size_t, double> parse_index_map(const Json& obj, const std::string& where) {
  std::map<std::size_t, double> out;
  if (!obj.is_object()) bad(where + " must map device index to number");
  for (const auto& [key, value] : obj.items()) {
    std::size_t idx = 0;
    try {
      std::size_t pos = 0;
      idx = std::stoul(key, &pos);
      if (pos != key.size()) throw std::invalid_argument("");
    } catch (const std::exception&) {
      bad(where + " has non-integer device index '" + key + "'");
    }
    if (!value.is_number()) bad(where + "." + key + " must be a number");
    out[idx] = value.get<double>();
  }
  return out;
}

void parse_devices(const Json& j, DevicesConfig& d) {
  reject_unknown(j, "devices",
                 {"count", "roster", "lambda", "da_min", "da_max", "pinned_gamma_default",
                  "pinned_gamma", "xi", "anomaly_rate", "anomaly_intensity"});
  get_to(j, "devices", "count", d.count);
  if (j.contains("roster")) {
    if (!j.at("roster").is_array()) bad("devices.roster must be an array of class names");
    d.roster.clear();
    for (const auto& entry : j.at("roster")) {
      if (!entry.is_string()) bad("devices.roster entries must be strings");
      try {
        d.roster.push_back(behavior::app_kind_from_string(entry.get<std::string>()));
      } catch (const std::exception& e) {
        bad(std::string("devices.roster: ") + e.what());
      }
    }
  }
  get_to(j, "devices", "lambda", d.lambda);
  get_pair(j, "devices", "da_min", "da_max", d.da_range);
  get_to(j, "devices", "pinned_gamma_default", d.pinned_gamma_default);
  if (j.contains("pinned_gamma"))
    d.pinned_gamma = parse_index_map(j.at("pinned_gamma"), "devices.pinned_gamma");
  if (j.contains("xi")) d.xi = parse_index_map(j.at("xi"), "devices.xi");
  get_to(j, "devices", "anomaly_rate", d.anomaly_rate);
  get_to(j, "devices", "anomaly_intensity", d.anomaly_intensity);
}

void parse_servers(const Json& j, ServersConfig& s) {
  reject_unknown(j, "servers",
                 {"count", "capacity", "capacity_multiplier", "er_min", "er_max", "cost_min",
                  "cost_max", "uniform_cost"});
  get_to(j, "servers", "count", s.count);
  get_to(j, "servers", "capacity", s.capacity);
  get_to(j, "servers", "capacity_multiplier", s.capacity_multiplier);
  get_pair(j, "servers", "er_min", "er_max", s.er_range);
  get_pair(j, "servers", "cost_min", "cost_max", s.cost_range);
  get_to(j, "servers", "uniform_cost", s.uniform_cost);
}

void parse_brdi(const Json& j, brdi::Config& b) {
  reject_unknown(j, "brdi", {"alpha", "capacity", "beta1", "beta2", "empty_prior", "normalized"});
  get_to(j, "brdi", "alpha", b.alpha);
  get_to(j, "brdi", "capacity", b.capacity);
  get_to(j, "brdi", "beta1", b.beta1);
  get_to(j, "brdi", "beta2", b.beta2);
  get_to(j, "brdi", "empty_prior", b.empty_prior);
  get_to(j, "brdi", "normalized", b.normalized);
}

void parse_detection(const Json& j, DetectionConfig& d) {
  reject_unknown(j, "detection",
                 {"sr_enabled", "tr_enabled", "nu", "sr_hidden", "tr_hidden", "epochs", "batch",
                  "ganed_n_c", "ganed_n_o", "bootstrap_records", "bootstrap_days",
                  "slots_per_day"});
  get_to(j, "detection", "sr_enabled", d.sr_enabled);
  get_to(j, "detection", "tr_enabled", d.tr_enabled);
  get_to(j, "detection", "nu", d.nu);
  get_to(j, "detection", "sr_hidden", d.sr_hidden);
  get_to(j, "detection", "tr_hidden", d.tr_hidden);
  get_to(j, "detection", "epochs", d.epochs);
  get_to(j, "detection", "batch", d.batch);
  get_to(j, "detection", "ganed_n_c", d.ganed_n_c);
  get_to(j, "detection", "ganed_n_o", d.ganed_n_o);
  get_to(j, "detection", "bootstrap_records", d.bootstrap_records);
  get_to(j, "detection", "bootstrap_days", d.bootstrap_days);
  get_to(j, "detection", "slots_per_day", d.slots_per_day);
}

void parse_rfta(const Json& j, RftaConfig& r) {
  reject_unknown(j, "rfta",
                 {"tau", "units", "budget_normalized", "budget_scale", "fraction_cap",
                  "oracle_grid", "oracle_node_cap", "floor_mode"});
  get_to(j, "rfta", "tau", r.tau);
  get_to(j, "rfta", "units", r.units);
  get_to(j, "rfta", "budget_normalized", r.budget_normalized);
  get_to(j, "rfta", "budget_scale", r.budget_scale);
  get_to(j, "rfta", "fraction_cap", r.fraction_cap);
  get_to(j, "rfta", "oracle_grid", r.oracle_grid);
  get_to(j, "rfta", "oracle_node_cap", r.oracle_node_cap);
  get_to(j, "rfta", "floor_mode", r.floor_mode);
}

void parse_edrl(const Json& j, edrl::Config& e) {
  reject_unknown(j, "edrl",
                 {"levels", "action_grid", "allow_split", "split_cap", "epsilon_start",
                  "epsilon_end", "epsilon_anneal_fraction", "theta_ema", "feature_hidden",
                  "lr", "indicator_mode"});
  get_to(j, "edrl", "levels", e.levels);
  get_to(j, "edrl", "action_grid", e.action_grid);
  get_to(j, "edrl", "allow_split", e.allow_split);
  get_to(j, "edrl", "split_cap", e.split_cap);
  get_to(j, "edrl", "epsilon_start", e.epsilon_start);
  get_to(j, "edrl", "epsilon_end", e.epsilon_end);
  get_to(j, "edrl", "epsilon_anneal_fraction", e.epsilon_anneal_fraction);
  get_to(j, "edrl", "theta_ema", e.theta_ema);
  get_to(j, "edrl", "feature_hidden", e.feature_hidden);
  get_to(j, "edrl", "lr", e.lr);
  get_to(j, "edrl", "indicator_mode", e.indicator_mode);
}

void parse_sim(const Json& j, SimConfig& s) {
  reject_unknown(j, "sim", {"epochs", "epoch_requests", "day_seconds"});
  get_to(j, "sim", "epochs", s.epochs);
  get_to(j, "sim", "epoch_requests", s.epoch_requests);
  get_to(j, "sim", "day_seconds", s.day_seconds);
}

void parse_sweep(const Json& j, SweepConfig& s) {
  reject_unknown(j, "sweep", {"axis", "values", "repeat"});
  get_to(j, "sweep", "axis", s.axis);
  get_to(j, "sweep", "values", s.values);
  get_to(j, "sweep", "repeat", s.repeat);
  if (!s.axis.empty() && s.axis != "servers" && s.axis != "devices" && s.axis != "capacity")
    bad("sweep.axis must be one of servers, devices, capacity");
  if (!s.axis.empty() && s.values.empty()) bad("sweep.values must not be empty");
  if (s.repeat < 1) bad("sweep.repeat must be >= 1");
}

} // namespace

ScenarioConfig apply_sweep_value(const ScenarioConfig& base, const std::string& axis,
                                 double value) {
  ScenarioConfig out = base;
  const auto as_count = [&](const char* key) {
    if (value < 1.0 || value != std::floor(value))
      bad(std::string("sweep value for ") + key + " must be a positive integer");
    return static_cast<std::size_t>(value);
  };
  if (axis == "servers")
    out.servers.count = as_count("servers");
  else if (axis == "devices")
    out.devices.count = as_count("devices");
  else if (axis == "capacity")
    out.servers.capacity_multiplier = value;
  else
    bad("sweep.axis must be one of servers, devices, capacity");
  return out;
}

RunConfig parse_config_text(const std::string& json_text) {
  Json j;
  try {
    j = Json::parse(json_text);
  } catch (const Json::exception& e) {
    throw std::invalid_argument(std::string("config: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) bad("top level must be an object");
  reject_unknown(j, "",
                 {"seed", "devices", "servers", "brdi", "detection", "rfta", "edrl", "sim",
                  "sweep"});

  RunConfig c;
  get_to(j, "", "seed", c.scenario.seed);
  if (j.contains("devices")) parse_devices(j.at("devices"), c.scenario.devices);
  if (j.contains("servers")) parse_servers(j.at("servers"), c.scenario.servers);
  if (j.contains("brdi")) parse_brdi(j.at("brdi"), c.scenario.brdi);
  if (j.contains("detection")) parse_detection(j.at("detection"), c.scenario.detection);
  if (j.contains("rfta")) parse_rfta(j.at("rfta"), c.scenario.rfta);
  if (j.contains("edrl")) parse_edrl(j.at("edrl"), c.scenario.edrl);
  if (j.contains("sim")) parse_sim(j.at("sim"), c.scenario.sim);
  if (j.contains("sweep")) parse_sweep(j.at("sweep"), c.sweep);

  c.scenario.validate();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

std::string serialize_config(const RunConfig& c) {
  const ScenarioConfig& s = c.scenario;
  Json j;
  j["seed"] = s.seed;

  Json dj;
  dj["count"] = s.devices.count;
  Json roster = Json::array();
  for (behavior::AppKind k : s.devices.roster) roster.push_back(behavior::to_string(k));
  dj["roster"] = roster;
  dj["lambda"] = s.devices.lambda;
  dj["da_min"] = s.devices.da_range.first;
  dj["da_max"] = s.devices.da_range.second;
  dj["pinned_gamma_default"] = s.devices.pinned_gamma_default;
  Json pg = Json::object();
  for (const auto& [idx, v] : s.devices.pinned_gamma) pg[std::to_string(idx)] = v;
  dj["pinned_gamma"] = pg;
  Json xi = Json::object();
  for (const auto& [idx, v] : s.devices.xi) xi[std::to_string(idx)] = v;
  dj["xi"] = xi;
  dj["anomaly_rate"] = s.devices.anomaly_rate;
  dj["anomaly_intensity"] = s.devices.anomaly_intensity;
  j["devices"] = dj;

  Json sj;
  sj["count"] = s.servers.count;
  sj["capacity"] = s.servers.capacity;
  sj["capacity_multiplier"] = s.servers.capacity_multiplier;
  sj["er_min"] = s.servers.er_range.first;
  sj["er_max"] = s.servers.er_range.second;
  sj["cost_min"] = s.servers.cost_range.first;
  sj["cost_max"] = s.servers.cost_range.second;
  sj["uniform_cost"] = s.servers.uniform_cost;
  j["servers"] = sj;

  Json bj;
  bj["alpha"] = s.brdi.alpha;
  bj["capacity"] = s.brdi.capacity;
  bj["beta1"] = s.brdi.beta1;
  bj["beta2"] = s.brdi.beta2;
  bj["empty_prior"] = s.brdi.empty_prior;
  bj["normalized"] = s.brdi.normalized;
  j["brdi"] = bj;

  Json tj;
  tj["sr_enabled"] = s.detection.sr_enabled;
  tj["tr_enabled"] = s.detection.tr_enabled;
  tj["nu"] = s.detection.nu;
  tj["sr_hidden"] = s.detection.sr_hidden;
  tj["tr_hidden"] = s.detection.tr_hidden;
  tj["epochs"] = s.detection.epochs;
  tj["batch"] = s.detection.batch;
  tj["ganed_n_c"] = s.detection.ganed_n_c;
  tj["ganed_n_o"] = s.detection.ganed_n_o;
  tj["bootstrap_records"] = s.detection.bootstrap_records;
  tj["bootstrap_days"] = s.detection.bootstrap_days;
  tj["slots_per_day"] = s.detection.slots_per_day;
  j["detection"] = tj;

  Json rj;
  rj["tau"] = s.rfta.tau;
  rj["units"] = s.rfta.units;
  rj["budget_normalized"] = s.rfta.budget_normalized;
  rj["budget_scale"] = s.rfta.budget_scale;
  rj["fraction_cap"] = s.rfta.fraction_cap;
  rj["oracle_grid"] = s.rfta.oracle_grid;
  rj["oracle_node_cap"] = s.rfta.oracle_node_cap;
  rj["floor_mode"] = s.rfta.floor_mode;
  j["rfta"] = rj;

  Json ej;
  ej["levels"] = s.edrl.levels;
  ej["action_grid"] = s.edrl.action_grid;
  ej["allow_split"] = s.edrl.allow_split;
  ej["split_cap"] = s.edrl.split_cap;
  ej["epsilon_start"] = s.edrl.epsilon_start;
  ej["epsilon_end"] = s.edrl.epsilon_end;
  ej["epsilon_anneal_fraction"] = s.edrl.epsilon_anneal_fraction;
  ej["theta_ema"] = s.edrl.theta_ema;
  ej["feature_hidden"] = s.edrl.feature_hidden;
  ej["lr"] = s.edrl.lr;
  ej["indicator_mode"] = s.edrl.indicator_mode;
  j["edrl"] = ej;

  Json mj;
  mj["epochs"] = s.sim.epochs;
  mj["epoch_requests"] = s.sim.epoch_requests;
  mj["day_seconds"] = s.sim.day_seconds;
  j["sim"] = mj;

  Json wj;
  wj["axis"] = c.sweep.axis;
  wj["values"] = c.sweep.values;
  wj["repeat"] = c.sweep.repeat;
  j["sweep"] = wj;

  return j.dump(2) + "\n";
}

std::string config_hash(const RunConfig& c) {
  const std::string text = serialize_config(c);
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char b : text) {
    h ^= b;
    h *= 1099511628211ull;
  }
  char buf[17];
  static const char* hex = "0123456789abcdef";
  for (int i = 15; i >= 0; --i) {
    buf[i] = hex[h & 0xf];
    h >>= 4;
  }
  buf[16] = '\0';
  return std::string(buf);
}

} // namespace edgesim::sim
