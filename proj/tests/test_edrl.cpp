#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "edgesim/edrl.hpp"
#include "edgesim/nn.hpp"
#include "edgesim/rfta.hpp"
#include "edgesim/rng.hpp"

using namespace edgesim;

namespace {

struct Fixture {
  std::vector<rfta::ServerSpec> servers;
  std::vector<std::vector<double>> rates;
  edrl::DecisionContext ctx;

  Fixture(std::size_t J, std::size_t K, double cap, double cost, double er, double base_beta) {
    servers.resize(J);
    rates.resize(J);
    for (std::size_t j = 0; j < J; ++j) {
      servers[j].capacity.assign(K, cap);
      servers[j].unit_cost.assign(K, cost);
      rates[j].assign(K, er);
    }
    ctx.servers = &servers;
    ctx.processing_rates = &rates;
    ctx.base_beta = base_beta;
  }
};

edrl::ComprehensiveState full_state(const Fixture& fx, rfta::ResourceVector demand, double budget) {
  edrl::ComprehensiveState s;
  for (const auto& sv : fx.servers) s.available.push_back(sv.capacity);
  s.demand = std::move(demand);
  s.budget = budget;
  s.device = 0;
  return s;
}

} // namespace

TEST_CASE("availability discretization floors into level buckets") {
  CHECK(edrl::discretize_level(1.0, 1.0, 4) == 3); // full availability clamps to the top
  CHECK(edrl::discretize_level(0.5, 1.0, 4) == 2);
  CHECK(edrl::discretize_level(0.26, 1.0, 4) == 1);
  CHECK(edrl::discretize_level(0.0, 1.0, 4) == 0);
  CHECK_THROWS_AS(edrl::discretize_level(0.5, 1.0, 0), std::invalid_argument);
  CHECK_THROWS_AS(edrl::discretize_level(0.5, 0.0, 4), std::invalid_argument);
}

TEST_CASE("the per-server state id is a mixed-radix composition of levels") {
  // levels (3, 0, 2) in base 4, least significant type first
  CHECK(edrl::partial_state_index({1.0, 0.0, 0.5}, {1.0, 1.0, 1.0}, 4) == 35);
  CHECK(edrl::partial_state_index({1.0, 1.0, 1.0}, {1.0, 1.0, 1.0}, 4) == 63);
  CHECK(edrl::partial_state_index({0.0, 0.0, 0.0}, {1.0, 1.0, 1.0}, 4) == 0);
  CHECK_THROWS_AS(edrl::partial_state_index({1.0}, {1.0, 1.0}, 4), std::invalid_argument);
}

TEST_CASE("action enumeration lists null, then servers by headroom, fractions ascending") {
  edrl::Config cfg;
  cfg.action_grid = {0.0, 0.5, 1.0};

  Fixture fx(1, 1, 10.0, 1.0, 2.0, 1.0);
  auto s = full_state(fx, {1.0}, 100.0);
  auto acts = edrl::enumerate_actions(s, fx.ctx, cfg);
  REQUIRE(acts.size() == 3);
  CHECK(acts[0].is_null());
  CHECK(acts[1].parts == std::vector<std::pair<std::size_t, double>>{{0, 0.5}});
  CHECK(acts[2].parts == std::vector<std::pair<std::size_t, double>>{{0, 1.0}});

  // the emptier server is offered first
  Fixture fx2(2, 1, 1.0, 1.0, 2.0, 1.0);
  auto s2 = full_state(fx2, {0.1}, 100.0);
  s2.available[0] = {0.3};
  s2.available[1] = {0.9};
  edrl::Config quarter;
  quarter.action_grid = {0.0, 0.25};
  auto acts2 = edrl::enumerate_actions(s2, fx2.ctx, quarter);
  REQUIRE(acts2.size() == 3);
  CHECK(acts2[0].is_null());
  CHECK(acts2[1].parts.front().first == 1);
  CHECK(acts2[2].parts.front().first == 0);
}

TEST_CASE("enumeration stops a server's ladder at the first failure") {
  edrl::Config cfg; // grid 0 .. 1 in quarters

  // capacity stop: only 0.6 of a unit-demand bundle fits
  Fixture fx(1, 1, 1.0, 1.0, 2.0, 1.0);
  auto s = full_state(fx, {1.0}, 100.0);
  s.available[0] = {0.6};
  auto acts = edrl::enumerate_actions(s, fx.ctx, cfg);
  REQUIRE(acts.size() == 3);
  CHECK(acts[1].parts.front().second == doctest::Approx(0.25));
  CHECK(acts[2].parts.front().second == doctest::Approx(0.5));

  // budget stop: 0.3 of budget buys at most a 0.25 fraction
  auto s2 = full_state(fx, {1.0}, 0.3);
  auto acts2 = edrl::enumerate_actions(s2, fx.ctx, cfg);
  REQUIRE(acts2.size() == 2);
  CHECK(acts2[1].parts.front().second == doctest::Approx(0.25));

  // no budget at all leaves only the null action
  auto s3 = full_state(fx, {1.0}, 0.0);
  CHECK(edrl::enumerate_actions(s3, fx.ctx, cfg).size() == 1);
}

TEST_CASE("zero-cost servers are never offered") {
  Fixture fx(2, 1, 10.0, 1.0, 2.0, 1.0);
  fx.servers[0].unit_cost = {0.0};
  auto s = full_state(fx, {1.0}, 100.0);
  edrl::Config cfg;
  auto acts = edrl::enumerate_actions(s, fx.ctx, cfg);
  CHECK(acts.size() > 1);
  for (const auto& a : acts)
    for (const auto& [j, f] : a.parts) {
      CHECK(j == 1);
      CHECK(f > 0.0);
    }
}

TEST_CASE("split actions appear only when enabled and respect the cap") {
  Fixture fx(2, 1, 10.0, 1.0, 2.0, 1.0);
  auto s = full_state(fx, {1.0}, 100.0);

  edrl::Config plain;
  for (const auto& a : edrl::enumerate_actions(s, fx.ctx, plain))
    CHECK(a.parts.size() <= 1);

  edrl::Config split = plain;
  split.allow_split = true;
  split.split_cap = 2;
  std::size_t pairs = 0;
  for (const auto& a : edrl::enumerate_actions(s, fx.ctx, split))
    if (a.parts.size() == 2) {
      ++pairs;
      CHECK(a.parts[0].first != a.parts[1].first);
    }
  CHECK(pairs >= 1);
  CHECK(pairs <= 2);
}

TEST_CASE("enumeration validates its inputs") {
  Fixture fx(1, 1, 1.0, 1.0, 2.0, 1.0);
  auto s = full_state(fx, {1.0}, 1.0);

  edrl::Config no_zero;
  no_zero.action_grid = {0.5, 1.0};
  CHECK_THROWS_WITH_AS(edrl::enumerate_actions(s, fx.ctx, no_zero),
                       "action grid must include 0", std::invalid_argument);
  edrl::Config empty_grid;
  empty_grid.action_grid = {};
  CHECK_THROWS_AS(edrl::enumerate_actions(s, fx.ctx, empty_grid), std::invalid_argument);
  edrl::Config over_one;
  over_one.action_grid = {0.0, 1.5};
  CHECK_THROWS_AS(edrl::enumerate_actions(s, fx.ctx, over_one), std::invalid_argument);

  auto bad = s;
  bad.available.emplace_back(rfta::ResourceVector{1.0});
  edrl::Config cfg;
  CHECK_THROWS_WITH_AS(edrl::enumerate_actions(bad, fx.ctx, cfg),
                       "state does not match server roster", std::invalid_argument);
}

TEST_CASE("applying an action drains budget and availability") {
  Fixture fx(1, 2, 1.0, 1.0, 2.0, 1.0);
  auto s = full_state(fx, {0.4, 0.4}, 1.0);
  edrl::Action a;
  a.parts = {{0, 0.5}};
  auto after = edrl::apply_action(s, a, fx.ctx);
  CHECK(after.budget == doctest::Approx(0.6));
  CHECK(after.available[0][0] == doctest::Approx(0.8));
  CHECK(after.available[0][1] == doctest::Approx(0.8));
  CHECK(after.demand == s.demand);

  auto null_after = edrl::apply_action(s, edrl::Action{}, fx.ctx);
  CHECK(null_after.budget == doctest::Approx(1.0));

  auto broke = s;
  broke.budget = 0.1;
  CHECK_THROWS_WITH_AS(edrl::apply_action(broke, a, fx.ctx), "action exceeds budget",
                       std::invalid_argument);
  auto drained = s;
  drained.available[0] = {0.1, 0.1};
  CHECK_THROWS_WITH_AS(edrl::apply_action(drained, a, fx.ctx), "action exceeds server capacity",
                       std::invalid_argument);
  edrl::Action missing;
  missing.parts = {{3, 0.5}};
  CHECK_THROWS_WITH_AS(edrl::apply_action(s, missing, fx.ctx), "action names a missing server",
                       std::invalid_argument);
}

TEST_CASE("action gain and release rate follow the bundle shape") {
  edrl::Action null_action;
  CHECK(edrl::action_gain(null_action) == 0.0);
  edrl::Action single;
  single.parts = {{0, 0.5}};
  CHECK(edrl::action_gain(single) == doctest::Approx(0.5));
  edrl::Action split;
  split.parts = {{0, 0.25}, {1, 0.5}};
  CHECK(edrl::action_gain(split) == doctest::Approx(0.75));

  // holding time 1/(f * min rate): rates (2,4,8), f = 1/2 gives rate exactly 1
  Fixture fx(1, 3, 10.0, 1.0, 2.0, 1.0);
  fx.rates[0] = {2.0, 4.0, 8.0};
  auto s = full_state(fx, {0.2, 0.2, 0.2}, 10.0);
  CHECK(edrl::action_release_rate(s, single, fx.ctx) == doctest::Approx(1.0));
  CHECK(edrl::action_release_rate(s, null_action, fx.ctx) == 0.0);

  edrl::Action whole;
  whole.parts = {{0, 1.0}};
  CHECK(edrl::action_release_rate(s, whole, fx.ctx) == doctest::Approx(2.0));

  // a type with zero demand cannot be the bottleneck
  auto partial = s;
  partial.demand = {0.0, 0.2, 0.2};
  CHECK(edrl::action_release_rate(partial, single, fx.ctx) == doctest::Approx(2.0));
}

TEST_CASE("the embedded chain samples devices by arrival share") {
  Rng rng(7);
  const int n = 10000;
  int first = 0;
  double sojourn_sum = 0.0;
  for (int i = 0; i < n; ++i) {
    auto t = edrl::sample_transition({2.0, 1.0}, 3.0, rng);
    REQUIRE(t.device <= 1);
    REQUIRE(t.sojourn > 0.0);
    if (t.device == 0) ++first;
    sojourn_sum += t.sojourn;
  }
  CHECK(first >= 6526); // three sigma around 2/3
  CHECK(first <= 6808);
  CHECK(sojourn_sum / n > 0.323); // exponential with rate 3
  CHECK(sojourn_sum / n < 0.343);

  Rng r2(8);
  for (int i = 0; i < 50; ++i) CHECK(edrl::sample_transition({1.0, 0.0}, 1.0, r2).device == 0);

  CHECK_THROWS_AS(edrl::sample_transition({}, 1.0, r2), std::invalid_argument);
  CHECK_THROWS_AS(edrl::sample_transition({0.0, 0.0}, 1.0, r2), std::invalid_argument);
  CHECK_THROWS_AS(edrl::sample_transition({1.0}, 0.0, r2), std::invalid_argument);

  CHECK(edrl::reward(1.5, 3.0) == doctest::Approx(0.5));
  CHECK_THROWS_AS(edrl::reward(1.0, 0.0), std::invalid_argument);
}

TEST_CASE("exploration decays linearly and then holds its floor") {
  edrl::Config cfg; // 0.5 -> 0.01 over the first 60% of epochs
  CHECK(edrl::epsilon_at(cfg, 0, 100) == doctest::Approx(0.5));
  CHECK(edrl::epsilon_at(cfg, 30, 100) == doctest::Approx(0.255));
  CHECK(edrl::epsilon_at(cfg, 60, 100) == doctest::Approx(0.01));
  CHECK(edrl::epsilon_at(cfg, 99, 100) == doctest::Approx(0.01));
}

TEST_CASE("a fresh model starts as a plain indicator sum") {
  Fixture fx(2, 2, 1.0, 1.0, 2.0, 1.0);
  edrl::Config cfg;
  cfg.levels = 4;
  cfg.feature_hidden = 16;
  Rng rng(11);
  edrl::ValueModel m = edrl::make_value_model(fx.servers, cfg, rng);

  CHECK(m.omega == 16); // 4^2
  CHECK(m.V.rows() == 16);
  CHECK(m.V.cols() == 2);
  CHECK(m.V.cwiseAbs().maxCoeff() == 0.0);
  CHECK(m.trainable_params().size() == 7);
  CHECK(m.trainable_params()[0] == &m.V);

  edrl::AfterActionState s;
  s.available = {{1.0, 1.0}, {0.4, 0.1}};
  s.demand = {0.2, 0.2};
  s.budget = 0.5;
  CHECK(edrl::feature_input(m, s).rows() == 2 * 2 + 2 + 1);

  auto idx0 = edrl::partial_state_index(s.available[0], fx.servers[0].capacity, 4);
  auto idx1 = edrl::partial_state_index(s.available[1], fx.servers[1].capacity, 4);
  m.V(static_cast<Eigen::Index>(idx0), 0) = 3.0;
  m.V(static_cast<Eigen::Index>(idx1), 1) = 4.0;
  // feature weights are exactly one at initialization
  CHECK(edrl::approximate_value(m, s) == doctest::Approx(7.0).epsilon(1e-12));

  edrl::Config ind = cfg;
  ind.indicator_mode = true;
  edrl::ValueModel mi = edrl::make_value_model(fx.servers, ind, rng);
  CHECK(mi.trainable_params().size() == 1);
  mi.V(static_cast<Eigen::Index>(idx0), 0) = 3.0;
  mi.V(static_cast<Eigen::Index>(idx1), 1) = 4.0;
  CHECK(edrl::approximate_value(mi, s) == doctest::Approx(7.0).epsilon(1e-12));
}

TEST_CASE("greedy selection is deterministic and spends no randomness") {
  Fixture fx(2, 1, 1.0, 1.0, 1.0, 1.0);
  auto s = full_state(fx, {0.5}, 10.0);
  edrl::Config cfg;
  cfg.action_grid = {0.0, 0.5, 1.0};
  Rng rng(3);
  edrl::ValueModel m = edrl::make_value_model(fx.servers, cfg, rng);

  Rng a(5), b(5);
  auto d = edrl::select_action(s, fx.ctx, m, cfg, 0.0, a);
  CHECK(a.uniform() == b.uniform()); // the stream was not touched
  CHECK(d.chosen_index == d.greedy_index);

  // identical servers tie; the first enumerated candidate keeps the argmax
  const auto& best = d.scored[d.greedy_index].action;
  REQUIRE(best.parts.size() == 1);
  CHECK(best.parts.front().first == 0);
  CHECK(best.parts.front().second == doctest::Approx(1.0));
}

TEST_CASE("full exploration picks uniformly among candidates") {
  Fixture fx(1, 1, 10.0, 1.0, 2.0, 1.0);
  auto s = full_state(fx, {1.0}, 100.0);
  edrl::Config cfg;
  cfg.action_grid = {0.0, 0.5, 1.0};
  Rng mrng(4);
  edrl::ValueModel m = edrl::make_value_model(fx.servers, cfg, mrng);

  Rng explore(21);
  int counts[3] = {0, 0, 0};
  for (int i = 0; i < 10000; ++i) {
    auto d = edrl::select_action(s, fx.ctx, m, cfg, 1.0, explore);
    REQUIRE(d.scored.size() == 3);
    ++counts[d.chosen_index];
  }
  for (int c : counts) {
    CHECK(c >= 3100);
    CHECK(c <= 3570);
  }
}

TEST_CASE("a tabular td step moves only the visited entry by the rule") {
  rfta::ServerSpec sv;
  sv.capacity = {1.0};
  sv.unit_cost = {1.0};
  edrl::Config cfg;
  cfg.levels = 2;
  cfg.indicator_mode = true;
  Rng rng(9);
  edrl::ValueModel m = edrl::make_value_model({sv}, cfg, rng);
  m.V(1, 0) = 0.1; // state A, fully available
  m.V(0, 0) = 0.2; // state B, drained

  edrl::AfterActionState a, b;
  a.available = {{1.0}};
  a.demand = {0.5};
  a.budget = 1.0;
  b = a;
  b.available = {{0.0}};

  nn::Optimizer opt(nn::Algo::SGD, 0.1);
  // target = 0.3 + V(B) = 0.5, delta = 0.4, step adds lr*delta
  double loss = edrl::td_update(m, a, b, 0.3, opt);
  CHECK(loss == doctest::Approx(0.5 * 0.4 * 0.4).epsilon(1e-12));
  CHECK(m.V(1, 0) == doctest::Approx(0.14).epsilon(1e-12));
  CHECK(m.V(0, 0) == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("alternating td updates learn a two-state difference") {
  rfta::ServerSpec sv;
  sv.capacity = {1.0, 1.0, 1.0};
  sv.unit_cost = {1.0, 1.0, 1.0};
  edrl::Config cfg;
  cfg.levels = 2;
  cfg.indicator_mode = true;
  Rng rng(13);
  edrl::ValueModel m = edrl::make_value_model({sv}, cfg, rng);

  edrl::AfterActionState A, B;
  A.available = {{1.0, 1.0, 1.0}};
  A.demand = {0.1, 0.1, 0.1};
  A.budget = 1.0;
  B = A;
  B.available = {{0.0, 0.0, 0.0}};

  // rewards 1 and 0 around a pinned average of 0.5
  nn::Optimizer opt(nn::Algo::SGD, 0.1);
  for (int i = 0; i < 2500; ++i) {
    edrl::td_update(m, A, B, 1.0 - 0.5, opt);
    edrl::td_update(m, B, A, 0.0 - 0.5, opt);
  }
  double va = edrl::approximate_value(m, A);
  double vb = edrl::approximate_value(m, B);
  CHECK(std::abs((va - vb) - 0.5) <= 1e-3);
}

TEST_CASE("a positive td error raises the learned value") {
  Fixture fx(1, 1, 1.0, 1.0, 2.0, 1.0);
  edrl::Config cfg;
  cfg.levels = 2;
  cfg.feature_hidden = 8;
  Rng rng(15);
  edrl::ValueModel m = edrl::make_value_model(fx.servers, cfg, rng);
  m.V(1, 0) = 1.0; // give the feature gradient something to push against

  edrl::AfterActionState s;
  s.available = {{1.0}};
  s.demand = {0.3};
  s.budget = 0.8;

  double before = edrl::approximate_value(m, s);
  nn::Optimizer opt(nn::Algo::SGD, 0.01);
  edrl::td_update(m, s, s, 0.7, opt); // target exceeds value, delta > 0
  CHECK(edrl::approximate_value(m, s) > before);
}

TEST_CASE("decision cost grows polynomially, not combinatorially, in servers") {
  auto time_once = [](std::size_t J) {
    Fixture fx(J, 3, 1.0, 1.0, 2.0, 1.0);
    auto s = full_state(fx, {0.2, 0.2, 0.2}, 100.0);
    edrl::Config cfg;
    cfg.levels = 4;
    cfg.feature_hidden = 32;
    Rng rng(1);
    edrl::ValueModel m = edrl::make_value_model(fx.servers, cfg, rng);
    Rng explore(2);
    std::vector<double> samples;
    for (int rep = 0; rep < 9; ++rep) {
      auto t0 = std::chrono::steady_clock::now();
      for (int i = 0; i < 300; ++i) edrl::select_action(s, fx.ctx, m, cfg, 0.0, explore);
      auto t1 = std::chrono::steady_clock::now();
      samples.push_back(std::chrono::duration<double>(t1 - t0).count());
    }
    std::sort(samples.begin(), samples.end());
    return samples[4];
  };

  double t2 = time_once(2);
  double t8 = time_once(8);
  // quadratic growth would allow ~16x; an exhaustive scan would explode
  CHECK(t8 <= 20.0 * t2);
  CHECK(t8 > 0.0);
}

namespace {

// tiny deterministic environment: two interchangeable servers, one type,
// epochs of five decisions, terminates after twenty steps
class StubEnv : public edrl::Environment {
public:
  StubEnv() : fx_(2, 1, 1.0, 1.0, 2.0, 1.0) {}

  edrl::ComprehensiveState reset() override {
    steps_ = 0;
    return full_state(fx_, {0.2}, 0.4);
  }

  edrl::DecisionContext context() const override { return fx_.ctx; }

  edrl::StepResult step(const edrl::Action&) override {
    ++steps_;
    edrl::StepResult r;
    r.next = full_state(fx_, {0.2}, 0.4);
    r.epoch_end = steps_ % 5 == 0;
    r.done = steps_ >= 20;
    return r;
  }

private:
  Fixture fx_;
  int steps_ = 0;
};

} // namespace

TEST_CASE("training walks the environment and reports one point per epoch") {
  StubEnv env;
  edrl::Config cfg;
  cfg.levels = 4;
  cfg.feature_hidden = 8;
  auto result = edrl::train(env, 4, cfg, 77);

  REQUIRE(result.curve.size() == 4);
  for (std::size_t i = 1; i < result.curve.size(); ++i) {
    CHECK(result.curve[i].epsilon <= result.curve[i - 1].epsilon);
    CHECK(result.curve[i].epoch == static_cast<long>(i));
  }
  CHECK(std::isfinite(result.model.theta));
  CHECK(result.model.V.allFinite());
  for (auto* p : result.model.trainable_params()) CHECK(p->allFinite());

  StubEnv env2;
  CHECK_THROWS_AS(edrl::train(env2, 0, cfg, 77), std::invalid_argument);
}
