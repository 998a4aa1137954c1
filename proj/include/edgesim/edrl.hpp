// Average-reward RL allocator over the allocation MDP: discretized server
// availability states, demand-fraction actions, a per-server decomposed value
// table weighted by a learned feature network, and semi-gradient TD training.
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "edgesim/nn.hpp"
#include "edgesim/rfta.hpp"
#include "edgesim/rng.hpp"

namespace edgesim::edrl {

struct Config {
  int levels = 8; // availability levels per resource type
  std::vector<double> action_grid = {0.0, 0.25, 0.5, 0.75, 1.0};
  bool allow_split = false;      // two-server combination actions
  std::size_t split_cap = 256;   // cap on generated combination actions
  double epsilon_start = 0.5;
  double epsilon_end = 0.01;
  double epsilon_anneal_fraction = 0.6; // of planned epochs
  double theta_ema = 0.99;              // per-epoch reward-rate smoothing
  int feature_hidden = 64;
  double lr = 1e-3;
  bool indicator_mode = false; // fix every feature weight to 1 (tabular)
};

// level = floor(levels * available/capacity), clamped to [0, levels-1]
int discretize_level(double available, double capacity, int levels);

// mixed-radix index over the per-type levels; the per-server state id
std::size_t partial_state_index(const rfta::ResourceVector& available,
                                const rfta::ResourceVector& capacity, int levels);

struct ComprehensiveState {
  std::vector<rfta::ResourceVector> available; // per server
  rfta::ResourceVector demand;                 // requesting device's demand
  double budget = 0.0;
  std::size_t device = 0;
};

struct AfterActionState {
  std::vector<rfta::ResourceVector> available;
  rfta::ResourceVector demand;
  double budget = 0.0;
};

// Single-server demand fraction (or a two-server split when enabled).
// fraction 0 with no servers is the null action.
struct Action {
  std::vector<std::pair<std::size_t, double>> parts; // (server, fraction)
  bool is_null() const { return parts.empty(); }
  double total_fraction() const;
};

// Everything the policy needs from the hosting simulation to price an action.
struct DecisionContext {
  const std::vector<rfta::ServerSpec>* servers = nullptr;
  const std::vector<std::vector<double>>* processing_rates = nullptr; // ER[j][k]
  double base_beta = 0.0; // arrival rate total plus current release rates
};

// Feasible actions: null first, then per server (most available first, index
// breaking ties) each admissible grid fraction in ascending order. Capacity,
// budget, and the zero-cost rule filter candidates.
std::vector<Action> enumerate_actions(const ComprehensiveState& s,
                                      const DecisionContext& ctx, const Config& cfg);

AfterActionState apply_action(const ComprehensiveState& s, const Action& a,
                              const DecisionContext& ctx);

// Bundle gain of the action (sum of its balanced fractions).
double action_gain(const Action& a);

// Release rate 1/T_s the new allocation adds; 0 for the null action.
double action_release_rate(const ComprehensiveState& s, const Action& a,
                           const DecisionContext& ctx);

// Embedded-jump view of the continuing process: which device requests next
// and how long the current state persists. The hosting simulation applies
// releases that fall inside the sojourn; this samples the chain itself.
struct Transition {
  std::size_t device = 0;
  double sojourn = 0.0;
};

// Next requester drawn with probability lambda_i / sum(lambda); sojourn drawn
// exponential with the total event rate beta (arrivals plus release rates).
Transition sample_transition(const std::vector<double>& lambdas, double beta, Rng& rng);

// Average-reward increment of an action: bundle gain per unit of expected
// state lifetime, rho / beta(after-state).
double reward(double rho, double beta);

// ---- Value model -----------------------------------------------------------

struct ValueModel {
  int levels = 8;
  std::size_t num_servers = 0;
  std::size_t num_types = 0;
  std::size_t omega = 0;                       // levels^num_types
  std::vector<rfta::ResourceVector> capacity;  // per server, for discretization
  nn::Mat V;                                   // omega x num_servers
  nn::Mlp feature_net; // flattened after-state -> one softplus weight per server
  bool indicator_mode = false;
  double theta = 0.0; // reward-rate estimate

  std::vector<nn::Mat*> trainable_params();
};

// Feature net starts at exactly phi = 1 for every server (zero final weights,
// softplus-inverse bias), so a fresh model behaves like the indicator mode.
ValueModel make_value_model(const std::vector<rfta::ServerSpec>& servers,
                            const Config& cfg, Rng& rng);

nn::Mat feature_input(const ValueModel& m, const AfterActionState& s);

// V(s') = sum_j phi_j(s') * V_j(partial index of server j)
double approximate_value(const ValueModel& m, const AfterActionState& s);

struct ScoredAction {
  Action action;
  AfterActionState after;
  double rho = 0.0;       // bundle gain
  double beta = 0.0;      // transition rate after the action
  double objective = 0.0; // (rho - theta)/beta + value(after)
};

// Scores all candidates; greedy_index maximizes the objective (first wins on
// ties), chosen_index applies epsilon-greedy exploration over the candidates.
struct Decision {
  std::vector<ScoredAction> scored;
  std::size_t greedy_index = 0;
  std::size_t chosen_index = 0;
};

Decision select_action(const ComprehensiveState& s, const DecisionContext& ctx,
                       const ValueModel& m, const Config& cfg, double epsilon,
                       Rng& explore_rng);

// One semi-gradient step on 1/2 (target - value(prev_after))^2 where
// target = reward_term + value(target_after) is treated as a constant.
// Returns the loss; throws nn::DivergenceError on non-finite values.
double td_update(ValueModel& m, const AfterActionState& prev_after,
                 const AfterActionState& target_after, double reward_term,
                 nn::Optimizer& opt);

// ---- Training over a pluggable environment ----------------------------------

struct StepResult {
  ComprehensiveState next;
  bool epoch_end = false;
  bool done = false;
};

// Implemented by the simulation engine: a continuing stream of allocation
// decisions grouped into fixed-size epochs.
class Environment {
public:
  virtual ~Environment() = default;
  virtual ComprehensiveState reset() = 0;
  virtual DecisionContext context() const = 0; // valid at the current decision
  virtual StepResult step(const Action& a) = 0;
};

struct CurvePoint {
  long epoch = 0;
  double total_gain = 0.0;
  double epsilon = 0.0;
  double theta = 0.0;
  double loss_mean = 0.0;
};

struct TrainResult {
  ValueModel model;
  std::vector<CurvePoint> curve;
};

double epsilon_at(const Config& cfg, long epoch, long planned_epochs);

// Runs planned_epochs epochs of epsilon-greedy TD training. explore_seed
// derives the exploration stream so runs are reproducible.
TrainResult train(Environment& env, long planned_epochs, const Config& cfg,
                  std::uint64_t explore_seed);

} // namespace edgesim::edrl
