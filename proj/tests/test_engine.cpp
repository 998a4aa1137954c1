#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <string>

#include "edgesim/engine.hpp"
#include "edgesim/scenario.hpp"

using namespace edgesim;

namespace {

sim::ScenarioConfig tiny_cfg() {
  sim::ScenarioConfig cfg;
  cfg.seed = 7;
  cfg.devices.count = 4;
  cfg.servers.count = 2;
  cfg.sim.epochs = 3;
  cfg.sim.epoch_requests = 20;
  return cfg;
}

} // namespace

TEST_CASE("allocator names round-trip and reject strangers") {
  using sim::AllocatorKind;
  CHECK(sim::allocator_from_name("edrl") == AllocatorKind::Edrl);
  CHECK(sim::allocator_from_name("greedy") == AllocatorKind::Greedy);
  CHECK(sim::allocator_from_name("random") == AllocatorKind::Random);
  CHECK(sim::allocator_from_name("oracle") == AllocatorKind::Oracle);
  CHECK(std::string(sim::allocator_name(AllocatorKind::Greedy)) == "greedy");
  CHECK_THROWS_AS(sim::allocator_from_name("bogus"), std::invalid_argument);
}

TEST_CASE("per-server load statistics are exact on hand inputs") {
  std::vector<rfta::ResourceVector> alloc = {{0.2}, {0.8}};
  std::vector<rfta::ResourceVector> caps = {{1.0}, {1.0}};
  sim::LoadStats s = sim::server_load_stats(alloc, caps);
  REQUIRE(s.per_server.size() == 2);
  CHECK(s.per_server[0] == doctest::Approx(0.2));
  CHECK(s.per_server[1] == doctest::Approx(0.8));
  CHECK(s.mean == doctest::Approx(0.5));
  CHECK(s.variance == doctest::Approx(0.09));

  CHECK_THROWS_AS(sim::server_load_stats({{0.1}}, caps), std::invalid_argument);
  CHECK_THROWS_AS(sim::server_load_stats({}, {}), std::invalid_argument);
  CHECK_THROWS_AS(sim::server_load_stats({{0.1, 0.2}}, {{1.0}}), std::invalid_argument);
  CHECK_THROWS_AS(sim::server_load_stats({{0.1}}, {{0.0}}), std::invalid_argument);
}

TEST_CASE("a run is a pure function of its scenario") {
  sim::Scenario sc = sim::build_scenario(tiny_cfg());
  sim::RunResult a = sim::run_scenario(sc, sim::AllocatorKind::Greedy);
  sim::RunResult b = sim::run_scenario(sc, sim::AllocatorKind::Greedy);

  CHECK(a.metrics.total_gain == b.metrics.total_gain);
  CHECK(a.metrics.trace_hash == b.metrics.trace_hash);
  REQUIRE(a.metrics.epochs.size() == b.metrics.epochs.size());
  for (std::size_t e = 0; e < a.metrics.epochs.size(); ++e) {
    CHECK(a.metrics.epochs[e].total_gain == b.metrics.epochs[e].total_gain);
    CHECK(a.metrics.epochs[e].load_mean == b.metrics.epochs[e].load_mean);
  }
  for (std::size_t i = 0; i < a.metrics.gain_total.size(); ++i)
    CHECK(a.metrics.gain_total[i] == b.metrics.gain_total[i]);
}

TEST_CASE("the event stream and routed load do not depend on the allocator") {
  sim::Scenario sc = sim::build_scenario(tiny_cfg());
  sim::RunResult g = sim::run_scenario(sc, sim::AllocatorKind::Greedy);
  sim::RunResult r = sim::run_scenario(sc, sim::AllocatorKind::Random);

  CHECK(g.metrics.trace_hash == r.metrics.trace_hash);
  REQUIRE(g.metrics.epochs.size() == r.metrics.epochs.size());
  for (std::size_t e = 0; e < g.metrics.epochs.size(); ++e)
    CHECK(g.metrics.epochs[e].load_mean ==
          doctest::Approx(r.metrics.epochs[e].load_mean).epsilon(1e-9));
}

TEST_CASE("a zero behavior index shuts a device out completely") {
  sim::ScenarioConfig cfg = tiny_cfg();
  cfg.devices.pinned_gamma = {{0, 0.0}};
  sim::Scenario sc = sim::build_scenario(cfg);

  for (auto kind : {sim::AllocatorKind::Greedy, sim::AllocatorKind::Random}) {
    sim::RunResult res = sim::run_scenario(sc, kind);
    CHECK(res.metrics.budget_total[0] == 0.0);
    CHECK(res.metrics.gain_total[0] == 0.0);
    for (std::size_t j = 0; j < sc.servers.size(); ++j)
      for (std::size_t k = 0; k < 3; ++k) CHECK(res.metrics.aggregate.at(0, j, k) == 0.0);
    for (const auto& row : res.metrics.devices)
      if (row.device_id == 0) {
        CHECK(row.budget == 0.0);
        CHECK(row.gain == 0.0);
      }
  }
}

TEST_CASE("metric tables have one row per epoch and per device-epoch") {
  sim::Scenario sc = sim::build_scenario(tiny_cfg());
  sim::Metrics m = sim::run_scenario(sc, sim::AllocatorKind::Greedy).metrics;
  CHECK(m.epochs.size() == 3);
  CHECK(m.devices.size() == 3 * 4);
  CHECK(m.brdi_rows.size() == 3 * 4);
  CHECK(m.budget_total.size() == 4);
  CHECK(m.gain_total.size() == 4);
  CHECK(m.events > 0);
  for (const auto& row : m.epochs) {
    CHECK(std::isnan(row.f1_sr)); // detection is off
    CHECK(std::isnan(row.f1_tr));
    CHECK(row.load_mean >= 0.0);
  }
  for (const auto& row : m.brdi_rows) {
    CHECK(row.gamma_total == doctest::Approx(1.0)); // pinned default
  }
}

TEST_CASE("the engine walks as an environment and accrues unspent budgets") {
  sim::Scenario sc = sim::build_scenario(tiny_cfg());
  sim::Engine e(std::move(sc));
  e.reset();
  long steps = 0;
  while (true) {
    auto r = e.step(edrl::Action{}); // always decline to allocate
    ++steps;
    if (r.done) break;
    REQUIRE(steps < 100000);
  }
  CHECK(steps == 3 * 20);
  CHECK(e.done());

  std::uint64_t processed = e.events_processed();
  sim::Metrics m = e.take_metrics();
  CHECK(m.events == processed);
  CHECK(m.total_gain == 0.0);
  double budget_sum = 0.0;
  for (double b : m.budget_total) budget_sum += b;
  CHECK(budget_sum > 0.0); // grants happen even when nothing is bought
  for (const auto& row : m.epochs) CHECK(row.load_mean > 0.0); // demand still routes

  sim::Engine again(sim::build_scenario(tiny_cfg()));
  again.reset();
  CHECK_THROWS_WITH_AS(again.reset(), "engine is single-use; build a fresh one",
                       std::logic_error);
}

TEST_CASE("an all-idle device population cannot start") {
  sim::Scenario sc = sim::build_scenario(tiny_cfg());
  for (auto& d : sc.devices) d.profile.app.lambda = 0.0;
  CHECK_THROWS_AS(
      [&] {
        sim::Engine e(std::move(sc));
        e.reset();
      }(),
      std::invalid_argument);
}

TEST_CASE("learning runs return a curve and a reusable frozen policy") {
  sim::ScenarioConfig cfg = tiny_cfg();
  cfg.sim.epochs = 4;
  cfg.sim.epoch_requests = 15;
  sim::Scenario sc = sim::build_scenario(cfg);

  sim::RunResult train = sim::run_scenario(sc, sim::AllocatorKind::Edrl);
  REQUIRE(train.model.has_value());
  CHECK(train.curve.size() == 4);
  CHECK(train.model->V.allFinite());

  sim::RunResult eval = sim::run_scenario(sc, sim::AllocatorKind::Edrl, &*train.model);
  CHECK(eval.curve.empty());
  CHECK(eval.metrics.trace_hash == train.metrics.trace_hash);
  CHECK(std::isfinite(eval.metrics.total_gain));
}

TEST_CASE("online detection produces bounded behavior indices end to end") {
  sim::ScenarioConfig cfg;
  cfg.seed = 11;
  cfg.devices.count = 4;
  cfg.devices.anomaly_rate = 0.1;
  cfg.servers.count = 2;
  cfg.detection.sr_enabled = true;
  cfg.detection.tr_enabled = true;
  cfg.detection.bootstrap_records = 64;
  cfg.detection.bootstrap_days = 10;
  cfg.detection.slots_per_day = 24;
  cfg.detection.epochs = 3;
  cfg.detection.batch = 8;
  cfg.detection.ganed_n_c = 8;
  cfg.detection.ganed_n_o = 4;
  cfg.detection.sr_hidden = 8;
  cfg.detection.tr_hidden = 8;
  cfg.sim.epochs = 4;
  cfg.sim.epoch_requests = 25;
  cfg.sim.day_seconds = 2000.0;
  sim::Scenario sc = sim::build_scenario(cfg);

  sim::Metrics m = sim::run_scenario(sc, sim::AllocatorKind::Greedy).metrics;
  CHECK(m.epochs.size() == 4);
  for (const auto& row : m.brdi_rows) {
    CHECK(row.gamma_sr >= 0.0);
    CHECK(row.gamma_sr <= 1.0);
    CHECK(row.gamma_tr >= 0.0);
    CHECK(row.gamma_tr <= 1.0);
    CHECK(row.gamma_total >= 0.0);
    CHECK(row.gamma_total <= 1.0);
  }
  for (double b : m.budget_total) CHECK(std::isfinite(b));
}
