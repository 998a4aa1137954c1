#include "edgesim/edrl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace edgesim::edrl {

namespace {

constexpr double kTol = 1e-12;
constexpr double kSlackTol = 1e-9;

// softplus(x) = 1 at x = ln(e - 1)
const double kIndicatorBias = std::log(std::exp(1.0) - 1.0);

bool server_admissible(const rfta::ServerSpec& srv, const rfta::ResourceVector& demand) {
  for (std::size_t k = 0; k < demand.size(); ++k)
    if (demand[k] > 0.0 && srv.unit_cost[k] <= 0.0) return false;
  return true;
}

double bundle_unit_cost(const rfta::ServerSpec& srv, const rfta::ResourceVector& demand) {
  double c = 0.0;
  for (std::size_t k = 0; k < demand.size(); ++k)
    if (demand[k] > 0.0) c += demand[k] * srv.unit_cost[k];
  return c;
}

bool fraction_fits(const rfta::ResourceVector& avail, const rfta::ResourceVector& demand,
                   double f) {
  for (std::size_t k = 0; k < demand.size(); ++k)
    if (demand[k] > 0.0 && f * demand[k] > avail[k] + kSlackTol) return false;
  return true;
}

} // namespace

double Action::total_fraction() const {
  double t = 0.0;
  for (const auto& [j, f] : parts) t += f;
  return t;
}

int discretize_level(double available, double capacity, int levels) {
  if (levels <= 0) throw std::invalid_argument("levels must be positive");
  if (capacity <= 0.0) throw std::invalid_argument("capacity must be positive");
  int lvl = static_cast<int>(std::floor(static_cast<double>(levels) * available / capacity));
  return std::clamp(lvl, 0, levels - 1);
}

std::size_t partial_state_index(const rfta::ResourceVector& available,
                                const rfta::ResourceVector& capacity, int levels) {
  if (available.size() != capacity.size())
    throw std::invalid_argument("availability/capacity length mismatch");
  std::size_t idx = 0, radix = 1;
  for (std::size_t k = 0; k < available.size(); ++k) {
    idx += radix * static_cast<std::size_t>(discretize_level(available[k], capacity[k], levels));
    radix *= static_cast<std::size_t>(levels);
  }
  return idx;
}

std::vector<Action> enumerate_actions(const ComprehensiveState& s,
                                      const DecisionContext& ctx, const Config& cfg) {
  if (cfg.action_grid.empty()) throw std::invalid_argument("empty action grid");
  bool has_zero = false;
  for (double f : cfg.action_grid) {
    if (f < 0.0 || f > 1.0) throw std::invalid_argument("grid fractions must lie in [0,1]");
    has_zero = has_zero || f == 0.0;
  }
  if (!has_zero) throw std::invalid_argument("action grid must include 0");
  const auto& servers = *ctx.servers;
  if (s.available.size() != servers.size())
    throw std::invalid_argument("state does not match server roster");

  std::vector<double> grid = cfg.action_grid;
  std::sort(grid.begin(), grid.end());

  // most available server first so equal-objective ties spread load
  std::vector<std::size_t> order(servers.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> avail_score(servers.size(), 0.0);
  for (std::size_t j = 0; j < servers.size(); ++j) {
    for (std::size_t k = 0; k < servers[j].capacity.size(); ++k)
      avail_score[j] += s.available[j][k] / servers[j].capacity[k];
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return avail_score[a] > avail_score[b];
  });

  std::vector<Action> out;
  out.push_back(Action{}); // the no-allocation arm is always present

  struct Feas {
    std::size_t server;
    std::vector<double> fractions;
  };
  std::vector<Feas> feas;
  for (std::size_t j : order) {
    if (!server_admissible(servers[j], s.demand)) continue;
    double unit_cost = bundle_unit_cost(servers[j], s.demand);
    Feas fe{j, {}};
    for (double f : grid) {
      if (f <= 0.0) continue;
      if (f * unit_cost > s.budget + kSlackTol) break; // grid is ascending
      if (!fraction_fits(s.available[j], s.demand, f)) break;
      fe.fractions.push_back(f);
    }
    if (!fe.fractions.empty()) feas.push_back(std::move(fe));
  }

  for (const auto& fe : feas)
    for (double f : fe.fractions) out.push_back(Action{{{fe.server, f}}});

  if (cfg.allow_split && feas.size() >= 2) {
    std::size_t added = 0;
    for (std::size_t a = 0; a < feas.size() && added < cfg.split_cap; ++a)
      for (std::size_t b = a + 1; b < feas.size() && added < cfg.split_cap; ++b)
        for (double fa : feas[a].fractions) {
          for (double fb : feas[b].fractions) {
            if (fa + fb > 1.0 + kTol) break;
            double cost = fa * bundle_unit_cost(servers[feas[a].server], s.demand) +
                          fb * bundle_unit_cost(servers[feas[b].server], s.demand);
            if (cost > s.budget + kSlackTol) break;
            out.push_back(Action{{{feas[a].server, fa}, {feas[b].server, fb}}});
            if (++added >= cfg.split_cap) break;
          }
          if (added >= cfg.split_cap) break;
        }
  }
  return out;
}

AfterActionState apply_action(const ComprehensiveState& s, const Action& a,
                              const DecisionContext& ctx) {
  AfterActionState after;
  after.available = s.available;
  after.demand = s.demand;
  after.budget = s.budget;
  const auto& servers = *ctx.servers;
  for (const auto& [j, f] : a.parts) {
    if (j >= servers.size()) throw std::invalid_argument("action names a missing server");
    double cost = f * bundle_unit_cost(servers[j], s.demand);
    if (cost > after.budget + kSlackTol) throw std::invalid_argument("action exceeds budget");
    after.budget -= cost;
    for (std::size_t k = 0; k < s.demand.size(); ++k) {
      double amt = f * s.demand[k];
      if (amt > after.available[j][k] + kSlackTol)
        throw std::invalid_argument("action exceeds server capacity");
      after.available[j][k] = std::max(0.0, after.available[j][k] - amt);
    }
  }
  return after;
}

double action_gain(const Action& a) { return a.total_fraction(); }

Transition sample_transition(const std::vector<double>& lambdas, double beta, Rng& rng) {
  if (lambdas.empty()) throw std::invalid_argument("empty device population");
  double total = 0.0;
  for (double l : lambdas) {
    if (!(l >= 0.0) || !std::isfinite(l))
      throw std::invalid_argument("arrival rates must be finite and nonnegative");
    total += l;
  }
  if (total <= 0.0)
    throw std::invalid_argument("at least one device needs a positive arrival rate");
  if (beta <= 0.0) throw std::invalid_argument("transition rate must be positive");
  double u = rng.uniform() * total;
  Transition t;
  t.device = lambdas.size() - 1;
  double acc = 0.0;
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    acc += lambdas[i];
    if (u < acc) {
      t.device = i;
      break;
    }
  }
  t.sojourn = rng.exponential(beta);
  return t;
}

double reward(double rho, double beta) {
  if (beta <= 0.0) throw std::invalid_argument("transition rate must be positive");
  return rho / beta;
}

double action_release_rate(const ComprehensiveState& s, const Action& a,
                           const DecisionContext& ctx) {
  if (a.is_null()) return 0.0;
  // holding time for a balanced bundle f*X at server j is
  // max_k x_k/(ER_{j,k} * f * x_k) = 1/(f * min_k ER_{j,k}); a split bundle is
  // held until its slowest part finishes
  double t_s = 0.0;
  for (const auto& [j, f] : a.parts) {
    if (f <= 0.0) continue;
    double min_er = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < s.demand.size(); ++k)
      if (s.demand[k] > 0.0) min_er = std::min(min_er, (*ctx.processing_rates)[j][k]);
    if (!std::isfinite(min_er) || min_er <= 0.0)
      throw std::invalid_argument("processing rate must be positive");
    t_s = std::max(t_s, 1.0 / (f * min_er));
  }
  return t_s > 0.0 ? 1.0 / t_s : 0.0;
}

// ---- Value model -----------------------------------------------------------

std::vector<nn::Mat*> ValueModel::trainable_params() {
  std::vector<nn::Mat*> out = {&V};
  if (!indicator_mode) {
    auto fp = feature_net.params();
    out.insert(out.end(), fp.begin(), fp.end());
  }
  return out;
}

ValueModel make_value_model(const std::vector<rfta::ServerSpec>& servers,
                            const Config& cfg, Rng& rng) {
  if (servers.empty()) throw std::invalid_argument("no servers");
  ValueModel m;
  m.levels = cfg.levels;
  m.num_servers = servers.size();
  m.num_types = servers.front().capacity.size();
  m.omega = 1;
  for (std::size_t k = 0; k < m.num_types; ++k) m.omega *= static_cast<std::size_t>(cfg.levels);
  for (const auto& s : servers) m.capacity.push_back(s.capacity);
  m.V = nn::Mat::Zero(static_cast<Eigen::Index>(m.omega), static_cast<Eigen::Index>(m.num_servers));
  m.indicator_mode = cfg.indicator_mode;

  const int in_dim = static_cast<int>(m.num_servers * m.num_types + m.num_types + 1);
  m.feature_net.layers.push_back(
      nn::make_dense(in_dim, cfg.feature_hidden, nn::Act::ReLU, rng));
  m.feature_net.layers.push_back(
      nn::make_dense(cfg.feature_hidden, cfg.feature_hidden, nn::Act::ReLU, rng));
  m.feature_net.layers.push_back(nn::make_dense(
      cfg.feature_hidden, static_cast<int>(m.num_servers), nn::Act::Softplus, rng));
  // start as the indicator: zero final weights, bias solving softplus(b) = 1
  auto& last = m.feature_net.layers.back();
  last.W.setZero();
  last.b.setConstant(kIndicatorBias);
  return m;
}

nn::Mat feature_input(const ValueModel& m, const AfterActionState& s) {
  nn::Mat x(static_cast<Eigen::Index>(m.num_servers * m.num_types + m.num_types + 1), 1);
  Eigen::Index r = 0;
  for (std::size_t j = 0; j < m.num_servers; ++j)
    for (std::size_t k = 0; k < m.num_types; ++k)
      x(r++, 0) = s.available[j][k] / m.capacity[j][k];
  for (std::size_t k = 0; k < m.num_types; ++k) x(r++, 0) = s.demand[k];
  x(r++, 0) = s.budget;
  return x;
}

namespace {

Eigen::VectorXd feature_weights(const ValueModel& m, const AfterActionState& s,
                                nn::MlpCache* cache) {
  if (m.indicator_mode)
    return Eigen::VectorXd::Ones(static_cast<Eigen::Index>(m.num_servers));
  return nn::mlp_forward(m.feature_net, feature_input(m, s), cache).col(0);
}

std::vector<std::size_t> partial_indices(const ValueModel& m, const AfterActionState& s) {
  if (s.available.size() != m.num_servers)
    throw std::invalid_argument("state server count does not match the model");
  std::vector<std::size_t> idx(m.num_servers);
  for (std::size_t j = 0; j < m.num_servers; ++j)
    idx[j] = partial_state_index(s.available[j], m.capacity[j], m.levels);
  return idx;
}

} // namespace

double approximate_value(const ValueModel& m, const AfterActionState& s) {
  auto idx = partial_indices(m, s);
  Eigen::VectorXd phi = feature_weights(m, s, nullptr);
  double v = 0.0;
  for (std::size_t j = 0; j < m.num_servers; ++j)
    v += phi(static_cast<Eigen::Index>(j)) *
         m.V(static_cast<Eigen::Index>(idx[j]), static_cast<Eigen::Index>(j));
  return v;
}

Decision select_action(const ComprehensiveState& s, const DecisionContext& ctx,
                       const ValueModel& m, const Config& cfg, double epsilon,
                       Rng& explore_rng) {
  Decision d;
  auto actions = enumerate_actions(s, ctx, cfg);
  d.scored.reserve(actions.size());
  for (auto& a : actions) {
    ScoredAction sa;
    sa.after = apply_action(s, a, ctx);
    sa.rho = action_gain(a);
    sa.beta = ctx.base_beta + action_release_rate(s, a, ctx);
    if (sa.beta <= 0.0) throw std::invalid_argument("transition rate must be positive");
    sa.objective = (sa.rho - m.theta) / sa.beta + approximate_value(m, sa.after);
    sa.action = std::move(a);
    d.scored.push_back(std::move(sa));
  }
  d.greedy_index = 0;
  for (std::size_t i = 1; i < d.scored.size(); ++i)
    if (d.scored[i].objective > d.scored[d.greedy_index].objective + kTol)
      d.greedy_index = i;
  d.chosen_index = d.greedy_index;
  if (epsilon > 0.0 && explore_rng.uniform() < epsilon) {
    auto pick = static_cast<std::size_t>(explore_rng.uniform() *
                                         static_cast<double>(d.scored.size()));
    if (pick >= d.scored.size()) pick = d.scored.size() - 1;
    d.chosen_index = pick;
  }
  return d;
}

double td_update(ValueModel& m, const AfterActionState& prev_after,
                 const AfterActionState& target_after, double reward_term,
                 nn::Optimizer& opt) {
  double target = reward_term + approximate_value(m, target_after);

  auto idx = partial_indices(m, prev_after);
  nn::MlpCache cache;
  Eigen::VectorXd phi = feature_weights(m, prev_after, &cache);
  double pred = 0.0;
  for (std::size_t j = 0; j < m.num_servers; ++j)
    pred += phi(static_cast<Eigen::Index>(j)) *
            m.V(static_cast<Eigen::Index>(idx[j]), static_cast<Eigen::Index>(j));

  double delta = target - pred;
  double loss = 0.5 * delta * delta;
  if (!std::isfinite(loss)) throw nn::DivergenceError("TD loss diverged");

  // dL/dV_j = -delta * phi_j at the realized partial states
  nn::Mat dV = nn::Mat::Zero(m.V.rows(), m.V.cols());
  for (std::size_t j = 0; j < m.num_servers; ++j)
    dV(static_cast<Eigen::Index>(idx[j]), static_cast<Eigen::Index>(j)) =
        -delta * phi(static_cast<Eigen::Index>(j));

  if (m.indicator_mode) {
    opt.step({&m.V}, {&dV});
    return loss;
  }

  // dL/dphi_j = -delta * V_j, back through the feature net
  nn::Mat dphi(static_cast<Eigen::Index>(m.num_servers), 1);
  for (std::size_t j = 0; j < m.num_servers; ++j)
    dphi(static_cast<Eigen::Index>(j), 0) =
        -delta * m.V(static_cast<Eigen::Index>(idx[j]), static_cast<Eigen::Index>(j));
  nn::MlpGrads fg;
  fg.init_like(m.feature_net);
  nn::mlp_backward(m.feature_net, cache, dphi, fg);

  std::vector<nn::Mat*> params = {&m.V};
  auto fp = m.feature_net.params();
  params.insert(params.end(), fp.begin(), fp.end());
  std::vector<nn::Mat*> grads = {&dV};
  auto gg = fg.flat();
  grads.insert(grads.end(), gg.begin(), gg.end());
  opt.step(params, grads);
  return loss;
}

double epsilon_at(const Config& cfg, long epoch, long planned_epochs) {
  double anneal = cfg.epsilon_anneal_fraction * static_cast<double>(planned_epochs);
  if (anneal <= 0.0) return cfg.epsilon_end;
  double t = static_cast<double>(epoch) / anneal;
  if (t >= 1.0) return cfg.epsilon_end;
  return cfg.epsilon_start + t * (cfg.epsilon_end - cfg.epsilon_start);
}

TrainResult train(Environment& env, long planned_epochs, const Config& cfg,
                  std::uint64_t explore_seed) {
  if (planned_epochs <= 0) throw std::invalid_argument("need at least one epoch");
  Rng explore(explore_seed);
  DecisionContext ctx0 = env.context();
  Rng init_rng(substream_seed(explore_seed, "edrl-init"));
  TrainResult result{make_value_model(*ctx0.servers, cfg, init_rng), {}};
  ValueModel& model = result.model;
  nn::Optimizer opt(nn::Algo::Adam, cfg.lr);

  ComprehensiveState state = env.reset();
  std::optional<AfterActionState> prev_after;
  long epoch = 0;
  double epoch_gain = 0.0, loss_sum = 0.0, rho_sum = 0.0;
  long decisions = 0;

  while (epoch < planned_epochs) {
    double eps = epsilon_at(cfg, epoch, planned_epochs);
    DecisionContext ctx = env.context();
    Decision d = select_action(state, ctx, model, cfg, eps, explore);
    const ScoredAction& greedy = d.scored[d.greedy_index];
    const ScoredAction& chosen = d.scored[d.chosen_index];

    if (prev_after) {
      double reward_term = (greedy.rho - model.theta) / greedy.beta;
      loss_sum += td_update(model, *prev_after, greedy.after, reward_term, opt);
    }
    prev_after = chosen.after;
    epoch_gain += chosen.rho;
    rho_sum += chosen.rho;
    ++decisions;

    StepResult sr = env.step(chosen.action);
    state = sr.next;
    if (sr.epoch_end) {
      double mean_rho = decisions > 0 ? rho_sum / static_cast<double>(decisions) : 0.0;
      model.theta = cfg.theta_ema * model.theta + (1.0 - cfg.theta_ema) * mean_rho;
      CurvePoint p;
      p.epoch = epoch;
      p.total_gain = epoch_gain;
      p.epsilon = eps;
      p.theta = model.theta;
      p.loss_mean = decisions > 0 ? loss_sum / static_cast<double>(decisions) : 0.0;
      result.curve.push_back(p);
      ++epoch;
      epoch_gain = 0.0;
      loss_sum = 0.0;
      rho_sum = 0.0;
      decisions = 0;
    }
    if (sr.done) break;
  }
  return result;
}

} // namespace edgesim::edrl
