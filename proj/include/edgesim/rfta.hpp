// Budget-constrained multi-resource allocation: gain (per-server min-ratio
// satisfaction), feasibility diagnostics, the budget-scaled envy-freeness
// index, and three reference allocators (exhaustive grid oracle, priority
// greedy, random placement).
#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "edgesim/rng.hpp"

namespace edgesim::rfta {

using ResourceVector = std::vector<double>; // one entry per resource type

struct DeviceSpec {
  ResourceVector demand;  // X_i, at least one positive entry
  double gamma = 1.0;     // behavior index in [0,1]
  double xi = 1.0;        // application priority
  double data_size = 0.0; // DA_i, drives the ultimate budget
};

struct ServerSpec {
  ResourceVector capacity;  // CP_{j,k}, all > 0
  ResourceVector unit_cost; // c_{j,k} >= 0; a zero cost makes that entry unallocatable
};

struct Instance {
  std::vector<DeviceSpec> devices;
  std::vector<ServerSpec> servers;
  std::vector<double> tau;   // processing factor per type, > 0
  std::vector<double> units; // processing units per type, > 0

  std::size_t num_types() const;
  void validate() const; // throws std::invalid_argument naming the bad field
};

// Dense y_{i,j,k}, devices x servers x types.
class Allocation {
public:
  Allocation() = default;
  Allocation(std::size_t devices, std::size_t servers, std::size_t types);

  double& at(std::size_t i, std::size_t j, std::size_t k);
  double at(std::size_t i, std::size_t j, std::size_t k) const;

  std::size_t devices() const { return devices_; }
  std::size_t servers() const { return servers_; }
  std::size_t types() const { return types_; }

  // Y_{i,j} as a vector over types.
  ResourceVector device_server_row(std::size_t i, std::size_t j) const;
  // All of device i's rows, indexed by server.
  std::vector<ResourceVector> device_rows(std::size_t i) const;
  // Sum over devices for server j.
  ResourceVector server_usage(std::size_t j) const;
  // Total spend of device i under the instance's cost matrix.
  double device_cost(std::size_t i, const Instance& inst) const;

  bool empty_of_allocations() const;

private:
  std::size_t devices_ = 0, servers_ = 0, types_ = 0;
  std::vector<double> data_;
};

// ---- Budget model -----------------------------------------------------------

// B_U = xi * sum_k DA/(tau_k * U_k). All tau/units must be positive.
double ultimate_budget(double xi, double data_size, const std::vector<double>& tau,
                       const std::vector<double>& units);

// B = gamma * B_U; gamma must lie in [0,1].
double device_budget(double gamma, double b_ultimate);

// ---- Gain -------------------------------------------------------------------

// G = sum over servers of min over demanded types of y/x. Types with zero
// demand are ignored; all-zero demand is an error. floor_mode floors each
// server's contribution (whole requests only).
double gain(const std::vector<ResourceVector>& per_server_rows,
            const ResourceVector& demand, bool floor_mode = false);

double device_gain(const Allocation& y, std::size_t i, const Instance& inst,
                   bool floor_mode = false);
double total_gain(const Allocation& y, const Instance& inst, bool floor_mode = false);

// ---- Feasibility ------------------------------------------------------------

struct Violation {
  enum class Kind { Budget, Capacity, Positivity, ZeroCost };
  Kind kind;
  std::size_t device = SIZE_MAX; // SIZE_MAX when not applicable
  std::size_t server = SIZE_MAX;
  std::size_t type = SIZE_MAX;
  double slack = 0.0; // negative slack is the violated amount
  std::string describe() const;
};

// Checks budget (per device), capacity (per server/type), strict positivity
// on servers a device actually uses, and the zero-cost rule. Empty result
// means feasible. Numeric constraints use a 1e-9 slack tolerance.
std::vector<Violation> feasible(const Allocation& y, const Instance& inst,
                                const std::vector<double>& budgets);

// ---- Envy-freeness ----------------------------------------------------------

// EF = min over ordered device pairs (i,q), including i = q, of
// Z_i(y_i) / Z_i((B_i/B_q) * y_q). Pairs with B_q = 0 or a zero denominator
// are skipped; throws std::domain_error when no pair is valid.
double envy_freeness_index(const Allocation& y, const Instance& inst,
                           const std::vector<double>& budgets);

// ---- Allocators ---------------------------------------------------------------

// Exhaustive search over per-device per-server demand fractions
// {0, grid_step, 2*grid_step, ...} up to fraction_cap per device in total.
// Deterministic: the lexicographically smallest maximizer wins. Throws when
// the visited-node count exceeds node_cap.
Allocation exhaustive_oracle(const Instance& inst, const std::vector<double>& budgets,
                             double grid_step, double fraction_cap = 1.0,
                             std::size_t node_cap = 10'000'000);

// Devices in descending xi*gamma order buy balanced demand-fraction bundles
// from the cheapest admissible server until budget, capacity, or the
// per-device fraction cap runs out. Feasible by construction.
Allocation greedy_allocate(const Instance& inst, const std::vector<double>& budgets,
                           double fraction_cap = 1.0);

// Buys the largest feasible balanced bundle at a uniformly chosen admissible
// server (placement is random, the amount is not). Feasible by construction.
Allocation random_allocate(const Instance& inst, const std::vector<double>& budgets,
                           Rng& rng, double fraction_cap = 1.0);

} // namespace edgesim::rfta
