#include "edgesim/rfta.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace edgesim::rfta {

namespace {

constexpr double kSlackTol = 1e-9;
constexpr double kTinyFraction = 1e-12;

// Cost of a full demand bundle at server j; zero-demand types contribute
// nothing. Returns false if any demanded type has zero unit cost (the server
// is then inadmissible for this device).
bool bundle_cost(const DeviceSpec& dev, const ServerSpec& srv, double* cost) {
  double c = 0.0;
  for (std::size_t k = 0; k < dev.demand.size(); ++k) {
    if (dev.demand[k] <= 0.0) continue;
    if (srv.unit_cost[k] <= 0.0) return false;
    c += dev.demand[k] * srv.unit_cost[k];
  }
  *cost = c;
  return true;
}

// Largest demand fraction of device i that fits the server's remaining
// capacity.
double capacity_fraction(const DeviceSpec& dev, const ResourceVector& avail) {
  double f = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < dev.demand.size(); ++k) {
    if (dev.demand[k] <= 0.0) continue;
    f = std::min(f, avail[k] / dev.demand[k]);
  }
  return std::max(f, 0.0);
}

} // namespace

std::size_t Instance::num_types() const {
  if (!devices.empty()) return devices.front().demand.size();
  if (!servers.empty()) return servers.front().capacity.size();
  return tau.size();
}

void Instance::validate() const {
  if (devices.empty()) throw std::invalid_argument("instance has no devices");
  if (servers.empty()) throw std::invalid_argument("instance has no servers");
  const std::size_t K = num_types();
  if (K == 0) throw std::invalid_argument("instance has no resource types");
  if (tau.size() != K || units.size() != K)
    throw std::invalid_argument("tau/units length does not match type count");
  for (std::size_t k = 0; k < K; ++k) {
    if (tau[k] <= 0.0) throw std::invalid_argument("processing factor must be > 0");
    if (units[k] <= 0.0) throw std::invalid_argument("processing units must be > 0");
  }
  for (std::size_t i = 0; i < devices.size(); ++i) {
    const auto& d = devices[i];
    if (d.demand.size() != K)
      throw std::invalid_argument("device " + std::to_string(i) + " demand length mismatch");
    bool any = false;
    for (double x : d.demand) {
      if (x < 0.0) throw std::invalid_argument("device " + std::to_string(i) + " negative demand");
      any = any || x > 0.0;
    }
    if (!any) throw std::invalid_argument("device " + std::to_string(i) + " all-zero demand");
    if (d.gamma < 0.0 || d.gamma > 1.0)
      throw std::invalid_argument("device " + std::to_string(i) + " gamma outside [0,1]");
    if (d.xi <= 0.0) throw std::invalid_argument("device " + std::to_string(i) + " priority must be > 0");
    if (d.data_size < 0.0) throw std::invalid_argument("device " + std::to_string(i) + " negative data size");
  }
  for (std::size_t j = 0; j < servers.size(); ++j) {
    const auto& s = servers[j];
    if (s.capacity.size() != K || s.unit_cost.size() != K)
      throw std::invalid_argument("server " + std::to_string(j) + " vector length mismatch");
    for (double cp : s.capacity)
      if (cp <= 0.0) throw std::invalid_argument("server " + std::to_string(j) + " capacity must be > 0");
    for (double c : s.unit_cost)
      if (c < 0.0) throw std::invalid_argument("server " + std::to_string(j) + " negative cost");
  }
}

Allocation::Allocation(std::size_t devices, std::size_t servers, std::size_t types)
    : devices_(devices), servers_(servers), types_(types),
      data_(devices * servers * types, 0.0) {}

double& Allocation::at(std::size_t i, std::size_t j, std::size_t k) {
  return data_[(i * servers_ + j) * types_ + k];
}

double Allocation::at(std::size_t i, std::size_t j, std::size_t k) const {
  return data_[(i * servers_ + j) * types_ + k];
}

ResourceVector Allocation::device_server_row(std::size_t i, std::size_t j) const {
  ResourceVector row(types_);
  for (std::size_t k = 0; k < types_; ++k) row[k] = at(i, j, k);
  return row;
}

std::vector<ResourceVector> Allocation::device_rows(std::size_t i) const {
  std::vector<ResourceVector> rows;
  rows.reserve(servers_);
  for (std::size_t j = 0; j < servers_; ++j) rows.push_back(device_server_row(i, j));
  return rows;
}

ResourceVector Allocation::server_usage(std::size_t j) const {
  ResourceVector used(types_, 0.0);
  for (std::size_t i = 0; i < devices_; ++i)
    for (std::size_t k = 0; k < types_; ++k) used[k] += at(i, j, k);
  return used;
}

double Allocation::device_cost(std::size_t i, const Instance& inst) const {
  double c = 0.0;
  for (std::size_t j = 0; j < servers_; ++j)
    for (std::size_t k = 0; k < types_; ++k)
      c += at(i, j, k) * inst.servers[j].unit_cost[k];
  return c;
}

bool Allocation::empty_of_allocations() const {
  for (double v : data_)
    if (v != 0.0) return false;
  return true;
}

// ---- Budget model -----------------------------------------------------------

double ultimate_budget(double xi, double data_size, const std::vector<double>& tau,
                       const std::vector<double>& units) {
  if (tau.size() != units.size() || tau.empty())
    throw std::invalid_argument("tau/units must be nonempty and equal length");
  if (data_size < 0.0) throw std::invalid_argument("data size must be >= 0");
  if (xi < 0.0) throw std::invalid_argument("priority must be >= 0");
  double sum = 0.0;
  for (std::size_t k = 0; k < tau.size(); ++k) {
    if (tau[k] <= 0.0 || units[k] <= 0.0)
      throw std::invalid_argument("processing factors and units must be > 0");
    sum += data_size / (tau[k] * units[k]);
  }
  return xi * sum;
}

double device_budget(double gamma, double b_ultimate) {
  if (gamma < 0.0 || gamma > 1.0) throw std::invalid_argument("gamma outside [0,1]");
  if (b_ultimate < 0.0) throw std::invalid_argument("ultimate budget must be >= 0");
  return gamma * b_ultimate;
}

// ---- Gain -------------------------------------------------------------------

double gain(const std::vector<ResourceVector>& per_server_rows,
            const ResourceVector& demand, bool floor_mode) {
  bool any_demand = false;
  for (double x : demand) any_demand = any_demand || x > 0.0;
  if (!any_demand) throw std::invalid_argument("gain needs a positive demand entry");

  double total = 0.0;
  for (const auto& row : per_server_rows) {
    if (row.size() != demand.size())
      throw std::invalid_argument("allocation row length does not match demand");
    double ratio = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < demand.size(); ++k) {
      if (demand[k] <= 0.0) continue;
      ratio = std::min(ratio, row[k] / demand[k]);
    }
    total += floor_mode ? std::floor(ratio) : ratio;
  }
  return total;
}

double device_gain(const Allocation& y, std::size_t i, const Instance& inst,
                   bool floor_mode) {
  return gain(y.device_rows(i), inst.devices[i].demand, floor_mode);
}

double total_gain(const Allocation& y, const Instance& inst, bool floor_mode) {
  double t = 0.0;
  for (std::size_t i = 0; i < y.devices(); ++i) t += device_gain(y, i, inst, floor_mode);
  return t;
}

// ---- Feasibility ------------------------------------------------------------

std::string Violation::describe() const {
  std::string s;
  switch (kind) {
    case Kind::Budget: s = "budget exceeded, device " + std::to_string(device); break;
    case Kind::Capacity:
      s = "capacity exceeded, server " + std::to_string(server) + " type " +
          std::to_string(type);
      break;
    case Kind::Positivity:
      s = "device " + std::to_string(device) + " uses server " + std::to_string(server) +
          " without covering demanded type " + std::to_string(type);
      break;
    case Kind::ZeroCost:
      s = "allocation at zero-cost entry, server " + std::to_string(server) + " type " +
          std::to_string(type) + " device " + std::to_string(device);
      break;
  }
  return s + " (slack " + std::to_string(slack) + ")";
}

std::vector<Violation> feasible(const Allocation& y, const Instance& inst,
                                const std::vector<double>& budgets) {
  inst.validate();
  if (y.devices() != inst.devices.size() || y.servers() != inst.servers.size() ||
      y.types() != inst.num_types())
    throw std::invalid_argument("allocation shape does not match instance");
  if (budgets.size() != inst.devices.size())
    throw std::invalid_argument("budget list length does not match device count");

  std::vector<Violation> out;
  const std::size_t K = inst.num_types();

  for (std::size_t i = 0; i < y.devices(); ++i) {
    double slack = budgets[i] - y.device_cost(i, inst);
    if (slack < -kSlackTol)
      out.push_back({Violation::Kind::Budget, i, SIZE_MAX, SIZE_MAX, slack});
  }

  for (std::size_t j = 0; j < y.servers(); ++j) {
    ResourceVector used = y.server_usage(j);
    for (std::size_t k = 0; k < K; ++k) {
      double slack = inst.servers[j].capacity[k] - used[k];
      if (slack < -kSlackTol)
        out.push_back({Violation::Kind::Capacity, SIZE_MAX, j, k, slack});
    }
  }

  for (std::size_t i = 0; i < y.devices(); ++i) {
    for (std::size_t j = 0; j < y.servers(); ++j) {
      bool uses = false;
      for (std::size_t k = 0; k < K; ++k) uses = uses || y.at(i, j, k) > 0.0;
      for (std::size_t k = 0; k < K; ++k) {
        double v = y.at(i, j, k);
        if (v < 0.0)
          out.push_back({Violation::Kind::Positivity, i, j, k, v});
        else if (uses && inst.devices[i].demand[k] > 0.0 && v <= 0.0)
          out.push_back({Violation::Kind::Positivity, i, j, k, v});
        if (v > 0.0 && inst.servers[j].unit_cost[k] <= 0.0)
          out.push_back({Violation::Kind::ZeroCost, i, j, k, -v});
      }
    }
  }
  return out;
}

// ---- Envy-freeness ----------------------------------------------------------

double envy_freeness_index(const Allocation& y, const Instance& inst,
                           const std::vector<double>& budgets) {
  if (budgets.size() != inst.devices.size())
    throw std::invalid_argument("budget list length does not match device count");
  const std::size_t I = inst.devices.size();
  double ef = std::numeric_limits<double>::infinity();
  bool any_pair = false;

  std::vector<std::vector<ResourceVector>> rows(I);
  std::vector<double> own_gain(I);
  for (std::size_t i = 0; i < I; ++i) {
    rows[i] = y.device_rows(i);
    own_gain[i] = gain(rows[i], inst.devices[i].demand);
  }

  for (std::size_t i = 0; i < I; ++i) {
    if (budgets[i] <= 0.0) continue; // unbudgeted devices cannot envy
    for (std::size_t q = 0; q < I; ++q) {
      if (budgets[q] <= 0.0) continue;
      double scale = budgets[i] / budgets[q];
      std::vector<ResourceVector> scaled = rows[q];
      for (auto& r : scaled)
        for (double& v : r) v *= scale;
      double denom = gain(scaled, inst.devices[i].demand);
      if (denom <= 0.0) continue;
      ef = std::min(ef, own_gain[i] / denom);
      any_pair = true;
    }
  }
  if (!any_pair) throw std::domain_error("no valid device pair for the envy index");
  return ef;
}

// ---- Allocators ---------------------------------------------------------------

namespace {

struct OracleState {
  const Instance* inst;
  double grid_step;
  double fraction_cap;
  std::size_t node_cap;
  std::size_t nodes = 0;

  std::vector<double> budget_left;          // per device
  std::vector<ResourceVector> cap_left;     // per server
  std::vector<double> fraction_left;        // per device, cap minus spent
  std::vector<double> slot_fraction;        // per (device, server) slot, row-major
  std::vector<double> best_fractions;
  double best_gain = -1.0;
  double current_gain = 0.0;
};

void oracle_dfs(OracleState& st, std::size_t slot) {
  if (++st.nodes > st.node_cap)
    throw std::runtime_error("exhaustive search exceeded its node cap");

  const std::size_t J = st.inst->servers.size();
  const std::size_t total_slots = st.inst->devices.size() * J;
  if (slot == total_slots) {
    if (st.current_gain > st.best_gain + kTinyFraction) {
      st.best_gain = st.current_gain;
      st.best_fractions = st.slot_fraction;
    }
    return;
  }

  // optimistic bound: every device with open slots delivers its full
  // remaining fraction
  double bound = st.current_gain;
  for (std::size_t i2 = slot / J; i2 < st.inst->devices.size(); ++i2)
    bound += st.fraction_left[i2];
  if (bound <= st.best_gain + kTinyFraction) return;

  const std::size_t i = slot / J;
  const std::size_t j = slot % J;
  const DeviceSpec& dev = st.inst->devices[i];
  const ServerSpec& srv = st.inst->servers[j];

  double cost1 = 0.0;
  bool admissible = bundle_cost(dev, srv, &cost1);

  for (int step = 0;; ++step) {
    double f = st.grid_step * step;
    if (f > st.fraction_left[i] + kTinyFraction) break;
    if (step > 0) {
      if (!admissible) break;
      if (f * cost1 > st.budget_left[i] + kSlackTol) break;
      bool fits = true;
      for (std::size_t k = 0; k < dev.demand.size() && fits; ++k)
        if (dev.demand[k] > 0.0 && f * dev.demand[k] > st.cap_left[j][k] + kSlackTol)
          fits = false;
      if (!fits) break; // larger f cannot fit either
    }

    st.slot_fraction[slot] = f;
    st.budget_left[i] -= f * cost1;
    st.fraction_left[i] -= f;
    for (std::size_t k = 0; k < dev.demand.size(); ++k)
      st.cap_left[j][k] -= f * dev.demand[k];
    st.current_gain += f;

    oracle_dfs(st, slot + 1);

    st.current_gain -= f;
    for (std::size_t k = 0; k < dev.demand.size(); ++k)
      st.cap_left[j][k] += f * dev.demand[k];
    st.fraction_left[i] += f;
    st.budget_left[i] += f * cost1;
    st.slot_fraction[slot] = 0.0;
  }
}

Allocation fractions_to_allocation(const Instance& inst, const std::vector<double>& fr) {
  const std::size_t J = inst.servers.size();
  const std::size_t K = inst.num_types();
  Allocation y(inst.devices.size(), J, K);
  for (std::size_t i = 0; i < inst.devices.size(); ++i)
    for (std::size_t j = 0; j < J; ++j) {
      double f = fr[i * J + j];
      if (f <= 0.0) continue;
      for (std::size_t k = 0; k < K; ++k)
        y.at(i, j, k) = f * inst.devices[i].demand[k];
    }
  return y;
}

} // namespace

Allocation exhaustive_oracle(const Instance& inst, const std::vector<double>& budgets,
                             double grid_step, double fraction_cap,
                             std::size_t node_cap) {
  inst.validate();
  if (budgets.size() != inst.devices.size())
    throw std::invalid_argument("budget list length does not match device count");
  if (grid_step <= 0.0) throw std::invalid_argument("grid step must be > 0");
  if (fraction_cap < 0.0) throw std::invalid_argument("fraction cap must be >= 0");

  OracleState st;
  st.inst = &inst;
  st.grid_step = grid_step;
  st.fraction_cap = fraction_cap;
  st.node_cap = node_cap;
  st.budget_left = budgets;
  st.fraction_left.assign(inst.devices.size(), fraction_cap);
  for (const auto& s : inst.servers) st.cap_left.push_back(s.capacity);
  st.slot_fraction.assign(inst.devices.size() * inst.servers.size(), 0.0);
  st.best_fractions = st.slot_fraction;
  st.best_gain = -1.0;

  oracle_dfs(st, 0);
  return fractions_to_allocation(inst, st.best_fractions);
}

Allocation greedy_allocate(const Instance& inst, const std::vector<double>& budgets,
                           double fraction_cap) {
  inst.validate();
  if (budgets.size() != inst.devices.size())
    throw std::invalid_argument("budget list length does not match device count");

  const std::size_t J = inst.servers.size();
  const std::size_t K = inst.num_types();
  Allocation y(inst.devices.size(), J, K);

  std::vector<ResourceVector> cap_left;
  for (const auto& s : inst.servers) cap_left.push_back(s.capacity);

  std::vector<std::size_t> order(inst.devices.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return inst.devices[a].xi * inst.devices[a].gamma >
           inst.devices[b].xi * inst.devices[b].gamma;
  });

  for (std::size_t i : order) {
    const DeviceSpec& dev = inst.devices[i];
    double budget = budgets[i];
    double remaining = fraction_cap;
    while (remaining > kTinyFraction) {
      // cheapest admissible server with room, ties to the smaller index
      std::size_t pick = SIZE_MAX;
      double pick_cost = 0.0, pick_f = 0.0;
      for (std::size_t j = 0; j < J; ++j) {
        double cost1 = 0.0;
        if (!bundle_cost(dev, inst.servers[j], &cost1)) continue;
        double f = std::min(remaining, capacity_fraction(dev, cap_left[j]));
        if (cost1 > 0.0) f = std::min(f, budget / cost1);
        if (f <= kTinyFraction) continue;
        if (pick == SIZE_MAX || cost1 < pick_cost) {
          pick = j;
          pick_cost = cost1;
          pick_f = f;
        }
      }
      if (pick == SIZE_MAX) break;
      for (std::size_t k = 0; k < K; ++k) {
        double amt = pick_f * dev.demand[k];
        y.at(i, pick, k) += amt;
        cap_left[pick][k] -= amt;
      }
      budget -= pick_f * pick_cost;
      remaining -= pick_f;
    }
  }
  return y;
}

Allocation random_allocate(const Instance& inst, const std::vector<double>& budgets,
                           Rng& rng, double fraction_cap) {
  inst.validate();
  if (budgets.size() != inst.devices.size())
    throw std::invalid_argument("budget list length does not match device count");

  const std::size_t J = inst.servers.size();
  const std::size_t K = inst.num_types();
  Allocation y(inst.devices.size(), J, K);

  std::vector<ResourceVector> cap_left;
  for (const auto& s : inst.servers) cap_left.push_back(s.capacity);

  for (std::size_t i = 0; i < inst.devices.size(); ++i) {
    const DeviceSpec& dev = inst.devices[i];
    double budget = budgets[i];
    double remaining = fraction_cap;
    while (remaining > kTinyFraction) {
      std::vector<std::size_t> candidates;
      std::vector<double> cand_cost, cand_f;
      for (std::size_t j = 0; j < J; ++j) {
        double cost1 = 0.0;
        if (!bundle_cost(dev, inst.servers[j], &cost1)) continue;
        double f = std::min(remaining, capacity_fraction(dev, cap_left[j]));
        if (cost1 > 0.0) f = std::min(f, budget / cost1);
        if (f <= kTinyFraction) continue;
        candidates.push_back(j);
        cand_cost.push_back(cost1);
        cand_f.push_back(f);
      }
      if (candidates.empty()) break;
      std::size_t c = static_cast<std::size_t>(rng.uniform() * static_cast<double>(candidates.size()));
      if (c >= candidates.size()) c = candidates.size() - 1;
      std::size_t j = candidates[c];
      double f = cand_f[c];
      for (std::size_t k = 0; k < K; ++k) {
        double amt = f * dev.demand[k];
        y.at(i, j, k) += amt;
        cap_left[j][k] -= amt;
      }
      budget -= f * cand_cost[c];
      remaining -= f;
    }
  }
  return y;
}

} // namespace edgesim::rfta
