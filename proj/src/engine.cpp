#include "edgesim/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace edgesim::sim {

namespace {

constexpr int kPrioExpiry = 0;
constexpr int kPrioArrival = 1;
constexpr int kPrioDaily = 2;
constexpr int kPrioEpoch = 3;

constexpr double kSlackTol = 1e-9;
constexpr double kTinyFraction = 1e-12;
// stand-in capacity for a fully drained server, so instantaneous allocation
// instances stay valid while admitting nothing
constexpr double kDrainedCapacity = 1e-15;

const double kNan = std::numeric_limits<double>::quiet_NaN();

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t n) {
  const auto* b = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= b[i];
    h *= 1099511628211ull;
  }
  return h;
}

constexpr std::uint64_t kFnvBasis = 1469598103934665603ull;

} // namespace

const char* allocator_name(AllocatorKind k) {
  switch (k) {
    case AllocatorKind::Edrl: return "edrl";
    case AllocatorKind::Greedy: return "greedy";
    case AllocatorKind::Random: return "random";
    case AllocatorKind::Oracle: return "oracle";
  }
  throw std::logic_error("unknown allocator kind");
}

AllocatorKind allocator_from_name(const std::string& name) {
  if (name == "edrl") return AllocatorKind::Edrl;
  if (name == "greedy") return AllocatorKind::Greedy;
  if (name == "random") return AllocatorKind::Random;
  if (name == "oracle") return AllocatorKind::Oracle;
  throw std::invalid_argument("unknown allocator '" + name +
                              "' (expected edrl, greedy, random, or oracle)");
}

LoadStats server_load_stats(const std::vector<rfta::ResourceVector>& allocated,
                            const std::vector<rfta::ResourceVector>& capacity) {
  if (allocated.size() != capacity.size())
    throw std::invalid_argument("server_load_stats: size mismatch");
  if (allocated.empty()) throw std::invalid_argument("server_load_stats: no servers");
  LoadStats out;
  out.per_server.reserve(allocated.size());
  for (std::size_t j = 0; j < allocated.size(); ++j) {
    if (allocated[j].size() != capacity[j].size() || capacity[j].empty())
      throw std::invalid_argument("server_load_stats: type count mismatch");
    double acc = 0.0;
    for (std::size_t k = 0; k < capacity[j].size(); ++k) {
      if (capacity[j][k] <= 0.0)
        throw std::invalid_argument("server_load_stats: capacity must be > 0");
      acc += allocated[j][k] / capacity[j][k];
    }
    out.per_server.push_back(acc / static_cast<double>(capacity[j].size()));
  }
  double mean = 0.0;
  for (double v : out.per_server) mean += v;
  mean /= static_cast<double>(out.per_server.size());
  double var = 0.0;
  for (double v : out.per_server) var += (v - mean) * (v - mean);
  var /= static_cast<double>(out.per_server.size());
  out.mean = mean;
  out.variance = var;
  return out;
}

Engine::Engine(Scenario sc) : scenario_(std::move(sc)) {
  const ScenarioConfig& cfg = scenario_.cfg;
  cfg.validate();
  const std::size_t n = scenario_.devices.size();
  const std::size_t j = scenario_.servers.size();
  const std::size_t types = scenario_.servers.at(0).capacity.size();

  server_specs_ = scenario_.server_specs();
  processing_rates_.reserve(j);
  for (const Server& s : scenario_.servers) processing_rates_.push_back(s.processing_rate);

  avail_.reserve(j);
  for (const Server& s : scenario_.servers) avail_.push_back(s.capacity);

  for (std::size_t i = 0; i < n; ++i) {
    arrival_rng_.emplace_back(substream_seed(cfg.seed, "arrival", i));
    attr_rng_.emplace_back(substream_seed(cfg.seed, "attrs", i));
    anomaly_rng_.emplace_back(substream_seed(cfg.seed, "anomaly", i));
    history_.emplace_back(cfg.brdi.capacity);
    base_beta_ += scenario_.devices[i].profile.app.lambda;
  }

  if (cfg.detection.sr_enabled) {
    Rng boot = substream(cfg.seed, "bootstrap-sr");
    std::vector<behavior::SRRecord> corpus;
    corpus.reserve(cfg.detection.bootstrap_records);
    for (std::size_t r = 0; r < cfg.detection.bootstrap_records; ++r)
      corpus.push_back(behavior::generate_sr_record(scenario_.devices[r % n].profile, boot));
    detect::OcnnConfig oc;
    oc.nu = cfg.detection.nu;
    oc.hidden = cfg.detection.sr_hidden;
    oc.epochs = cfg.detection.epochs;
    oc.batch = cfg.detection.batch;
    oc.seed = substream_seed(cfg.seed, "ocnn-sr");
    sr_detector_ = detect::train_ocnn(detect::sr_feature_matrix(corpus), oc);
  }

  if (cfg.detection.tr_enabled) {
    const int interval = 1440 / cfg.detection.slots_per_day;
    Rng boot = substream(cfg.seed, "bootstrap-tr");
    std::vector<behavior::TRSeries> corpus;
    corpus.reserve(cfg.detection.bootstrap_days);
    for (std::size_t d = 0; d < cfg.detection.bootstrap_days; ++d)
      corpus.push_back(behavior::generate_tr_series(scenario_.devices[d % n].profile,
                                                    static_cast<int>(d), interval, boot));
    detect::GanedConfig gc;
    gc.n_c = cfg.detection.ganed_n_c;
    gc.n_o = cfg.detection.ganed_n_o;
    gc.epochs = cfg.detection.epochs;
    gc.batch = cfg.detection.batch;
    gc.seed = substream_seed(cfg.seed, "ganed");
    detect::OcnnConfig hc;
    hc.nu = cfg.detection.nu;
    hc.hidden = cfg.detection.tr_hidden;
    hc.epochs = cfg.detection.epochs;
    hc.batch = cfg.detection.batch;
    hc.seed = substream_seed(cfg.seed, "ocnn-tr");
    tr_detector_ = detect::train_tr_detector(detect::train_gan_ed(corpus, gc), corpus, hc);
    day_slots_.assign(n, std::vector<behavior::TRPoint>(
                             static_cast<std::size_t>(cfg.detection.slots_per_day)));
  }

  epoch_device_gain_.assign(n, 0.0);
  epoch_device_budget_.assign(n, 0.0);
  epoch_gamma_.assign(n, 1.0);
  epoch_gamma_sr_.assign(n, 1.0);
  epoch_gamma_tr_.assign(n, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!cfg.detection.sr_enabled && !cfg.detection.tr_enabled)
      epoch_gamma_[i] = epoch_gamma_sr_[i] = epoch_gamma_tr_[i] = scenario_.devices[i].pinned_gamma;
  }
  epoch_alloc_ = rfta::Allocation(n, j, types);
  epoch_routed_.assign(j, rfta::ResourceVector(types, 0.0));

  metrics_.aggregate = rfta::Allocation(n, j, types);
  metrics_.budget_total.assign(n, 0.0);
  metrics_.gain_total.assign(n, 0.0);
  metrics_.trace_hash = kFnvBasis;
}

void Engine::push_event(double time, int prio, std::size_t payload) {
  queue_.push(Event{time, prio, seq_++, payload});
}

void Engine::schedule_arrival(std::size_t device) {
  const behavior::AppClass& app = scenario_.devices[device].profile.app;
  if (app.lambda <= 0.0) return;
  const double hour_len = scenario_.cfg.sim.day_seconds / 24.0;
  // Piecewise-constant diurnal rate; the exponential clock restarts at hour
  // boundaries (memorylessness makes that exact). Segments are tracked by
  // integer index: deriving each boundary from the previous one in floating
  // point can stall below one ulp of t and never advance.
  auto seg = static_cast<std::int64_t>(std::floor(now_ / hour_len));
  for (;;) {
    const double seg_start = std::max(now_, static_cast<double>(seg) * hour_len);
    const double seg_end = static_cast<double>(seg + 1) * hour_len;
    const double rate =
        app.lambda * app.diurnal[static_cast<std::size_t>(seg % 24)];
    if (rate > 0.0 && seg_end > seg_start) {
      const double cand = seg_start + arrival_rng_[device].exponential(rate);
      if (cand < seg_end) {
        push_event(cand, kPrioArrival, device);
        return;
      }
    }
    ++seg;
  }
}

void Engine::conservation_check() const {
  const std::size_t types = avail_.at(0).size();
  std::vector<rfta::ResourceVector> held(avail_.size(), rfta::ResourceVector(types, 0.0));
  for (const auto& [id, a] : held_) {
    (void)id;
    for (std::size_t k = 0; k < types; ++k) held[a.server][k] += a.amount[k];
  }
  for (std::size_t j = 0; j < avail_.size(); ++j)
    for (std::size_t k = 0; k < types; ++k) {
      const double total = avail_[j][k] + held[j][k];
      if (std::abs(total - scenario_.servers[j].capacity[k]) > kSlackTol)
        throw std::logic_error("resource conservation violated on server " +
                               std::to_string(j));
    }
}

void Engine::process_arrival(std::size_t device) {
  schedule_arrival(device);

  const Device& dev = scenario_.devices[device];
  Pending p;
  p.device = device;

  const DetectionConfig& det = scenario_.cfg.detection;
  if (det.sr_enabled || det.tr_enabled) {
    behavior::SRRecord rec = behavior::generate_sr_record(dev.profile, attr_rng_[device]);
    rec.ts = now_;
    for (const behavior::AnomalyRule& rule : dev.profile.anomaly_schedule) {
      if (rule.granularity != behavior::Granularity::SR) continue;
      // one draw per rule per arrival, hit or miss, so traces stay aligned
      const double u = anomaly_rng_[device].uniform();
      if (u < rule.request_probability)
        rec = behavior::inject_sr_anomaly(rec, rule.intensity, rule.mode);
    }

    if (sr_detector_) {
      const double score =
          sr_detector_->score(detect::sr_feature_matrix({rec}).col(0));
      history_[device].push_sr(now_, score);
      epoch_sr_decisions_.push_back(score < 0.5 ? 1 : 0);
      epoch_sr_labels_.push_back(rec.label == behavior::Label::Anomalous ? 1 : 0);
    }
    if (tr_detector_) {
      const double day = scenario_.cfg.sim.day_seconds;
      const auto slots = day_slots_[device].size();
      auto slot = static_cast<std::size_t>(std::fmod(now_, day) / day *
                                           static_cast<double>(slots));
      slot = std::min(slot, slots - 1);
      behavior::TRPoint& pt = day_slots_[device][slot];
      pt.request_count += 1;
      pt.workload_mb += rec.workload_mb;
      pt.occupancy_s += rec.occupancy_s;
      if (rec.label == behavior::Label::Anomalous) pt.label = behavior::Label::Anomalous;
    }

    p.gamma_sr = brdi::gamma_sr(history_[device], scenario_.cfg.brdi);
    p.gamma_tr = brdi::gamma_tr(history_[device], scenario_.cfg.brdi);
    p.gamma = brdi::brdi_total(p.gamma_sr, p.gamma_tr, scenario_.cfg.brdi.beta1,
                               scenario_.cfg.brdi.beta2);
  } else {
    p.gamma = p.gamma_sr = p.gamma_tr = dev.pinned_gamma;
  }

  epoch_gamma_[device] = p.gamma;
  epoch_gamma_sr_[device] = p.gamma_sr;
  epoch_gamma_tr_[device] = p.gamma_tr;

  p.budget = rfta::device_budget(p.gamma, dev.budget_unit);

  metrics_.trace_hash = fnv1a(metrics_.trace_hash, &device, sizeof(device));
  metrics_.trace_hash = fnv1a(metrics_.trace_hash, &now_, sizeof(now_));

  pending_ = p;
}

void Engine::process_daily(std::size_t day) {
  if (!tr_detector_) return;
  push_event(static_cast<double>(day + 2) * scenario_.cfg.sim.day_seconds, kPrioDaily,
             day + 1);
  const int interval = 1440 / scenario_.cfg.detection.slots_per_day;
  for (std::size_t i = 0; i < scenario_.devices.size(); ++i) {
    behavior::TRSeries series;
    series.device_id = static_cast<int>(i);
    series.day_index = static_cast<int>(day);
    series.interval_minutes = interval;
    series.points = day_slots_[i];

    const double score = tr_detector_->score(series);
    history_[i].push_tr(static_cast<long>(day), score);

    int label = 0;
    for (const behavior::TRPoint& pt : series.points)
      if (pt.label == behavior::Label::Anomalous) label = 1;
    epoch_tr_decisions_.push_back(score < 0.5 ? 1 : 0);
    epoch_tr_labels_.push_back(label);

    day_slots_[i].assign(day_slots_[i].size(), behavior::TRPoint{});
  }
}

void Engine::finalize_epoch() {
  const std::size_t n = scenario_.devices.size();

  // epoch envy-freeness over aggregated bundles and granted budgets
  double ef = kNan;
  {
    rfta::Instance inst;
    inst.servers = server_specs_;
    inst.tau = scenario_.cfg.rfta.tau;
    inst.units = scenario_.cfg.rfta.units;
    for (std::size_t i = 0; i < n; ++i) {
      rfta::DeviceSpec d;
      d.demand = scenario_.devices[i].demand;
      d.gamma = epoch_gamma_[i];
      d.xi = scenario_.devices[i].profile.xi();
      d.data_size = scenario_.devices[i].data_size;
      inst.devices.push_back(std::move(d));
    }
    try {
      ef = rfta::envy_freeness_index(epoch_alloc_, inst, epoch_device_budget_);
    } catch (const std::domain_error&) {
      // no comparable pair this epoch
    }
  }

  // load from routed demand, normalized per processed request
  std::vector<rfta::ResourceVector> routed_mean = epoch_routed_;
  const double denom = std::max(1, epoch_requests_seen_);
  std::vector<rfta::ResourceVector> caps;
  caps.reserve(scenario_.servers.size());
  for (std::size_t j = 0; j < scenario_.servers.size(); ++j) {
    caps.push_back(scenario_.servers[j].capacity);
    for (double& v : routed_mean[j]) v /= denom;
  }
  const LoadStats load = server_load_stats(routed_mean, caps);

  EpochRow row;
  row.epoch = epoch_idx_;
  row.total_gain = epoch_gain_;
  row.ef_index = ef;
  row.load_mean = load.mean;
  row.load_var = load.variance;
  row.f1_sr = kNan;
  row.f1_tr = kNan;
  if (!epoch_sr_decisions_.empty())
    row.f1_sr = detect::f1_score(epoch_sr_decisions_, epoch_sr_labels_).f1;
  if (!epoch_tr_decisions_.empty())
    row.f1_tr = detect::f1_score(epoch_tr_decisions_, epoch_tr_labels_).f1;
  metrics_.epochs.push_back(row);
  metrics_.total_gain += epoch_gain_;

  for (std::size_t i = 0; i < n; ++i) {
    metrics_.devices.push_back(DeviceRow{epoch_idx_, i, epoch_gamma_[i],
                                         epoch_device_budget_[i], epoch_device_gain_[i]});
    metrics_.brdi_rows.push_back(BrdiRow{epoch_idx_, i, epoch_gamma_sr_[i],
                                         epoch_gamma_tr_[i], epoch_gamma_[i]});
  }

  epoch_gain_ = 0.0;
  std::fill(epoch_device_gain_.begin(), epoch_device_gain_.end(), 0.0);
  std::fill(epoch_device_budget_.begin(), epoch_device_budget_.end(), 0.0);
  epoch_alloc_ = rfta::Allocation(n, scenario_.servers.size(), avail_.at(0).size());
  for (auto& r : epoch_routed_) std::fill(r.begin(), r.end(), 0.0);
  epoch_requests_seen_ = 0;
  epoch_sr_decisions_.clear();
  epoch_sr_labels_.clear();
  epoch_tr_decisions_.clear();
  epoch_tr_labels_.clear();

  epoch_end_flag_ = true;
  ++epoch_idx_;
  if (epoch_idx_ >= scenario_.cfg.sim.epochs) done_ = true;
}

void Engine::advance_to_decision() {
  pending_.reset();
  while (!done_) {
    if (queue_.empty()) throw std::logic_error("event queue ran dry before horizon");
    const Event e = queue_.top();
    queue_.pop();
    if (e.time < now_ - kSlackTol) throw std::logic_error("event time went backwards");
    now_ = std::max(now_, e.time);
    ++events_processed_;
    metrics_.events = events_processed_;

    switch (e.prio) {
      case kPrioExpiry: {
        auto it = held_.find(e.payload);
        if (it == held_.end()) throw std::logic_error("expiry for unknown allocation");
        const Active& a = it->second;
        for (std::size_t k = 0; k < a.amount.size(); ++k) avail_[a.server][k] += a.amount[k];
        base_beta_ -= a.release_rate;
        held_.erase(it);
        break;
      }
      case kPrioArrival:
        process_arrival(e.payload);
        conservation_check();
        return;
      case kPrioDaily:
        process_daily(e.payload);
        break;
      case kPrioEpoch:
        finalize_epoch();
        break;
      default:
        throw std::logic_error("unknown event priority");
    }
    conservation_check();
  }
}

edrl::ComprehensiveState Engine::snapshot() const {
  edrl::ComprehensiveState s;
  s.available = avail_;
  if (pending_) {
    s.demand = scenario_.devices[pending_->device].demand;
    s.budget = pending_->budget;
    s.device = pending_->device;
  } else {
    s.demand.assign(avail_.at(0).size(), 0.0);
  }
  return s;
}

edrl::ComprehensiveState Engine::reset() {
  if (started_) throw std::logic_error("engine is single-use; build a fresh one");
  started_ = true;
  bool any = false;
  for (std::size_t i = 0; i < scenario_.devices.size(); ++i) {
    if (scenario_.devices[i].profile.app.lambda > 0.0) any = true;
    schedule_arrival(i);
  }
  if (!any) throw std::invalid_argument("no device has a positive arrival rate");
  if (tr_detector_) push_event(scenario_.cfg.sim.day_seconds, kPrioDaily, 0);
  advance_to_decision();
  return snapshot();
}

edrl::DecisionContext Engine::context() const {
  edrl::DecisionContext ctx;
  ctx.servers = &server_specs_;
  ctx.processing_rates = &processing_rates_;
  ctx.base_beta = base_beta_;
  return ctx;
}

edrl::StepResult Engine::step(const edrl::Action& action) {
  if (!pending_) throw std::logic_error("step without a pending request");
  const Pending p = *pending_;
  const Device& dev = scenario_.devices[p.device];
  const rfta::ResourceVector& x = dev.demand;
  const std::size_t types = x.size();

  double cost = 0.0;
  double worst_ts = 0.0;
  std::vector<std::pair<std::size_t, rfta::ResourceVector>> parts;
  for (const auto& [j, f] : action.parts) {
    if (j >= avail_.size()) throw std::out_of_range("action server index out of range");
    if (f <= 0.0 || f > scenario_.cfg.rfta.fraction_cap + kSlackTol)
      throw std::invalid_argument("action fraction outside (0, cap]");
    rfta::ResourceVector amount(types, 0.0);
    double part_ts = 0.0;
    for (std::size_t k = 0; k < types; ++k) {
      amount[k] = f * x[k];
      if (amount[k] > avail_[j][k] + kSlackTol)
        throw std::logic_error("action exceeds availability");
      cost += amount[k] * scenario_.servers[j].unit_cost[k];
      if (x[k] > 0.0)
        part_ts = std::max(part_ts, access_time(x[k], processing_rates_[j][k], amount[k]));
    }
    worst_ts = std::max(worst_ts, part_ts);
    parts.emplace_back(j, std::move(amount));
  }
  if (cost > p.budget + kSlackTol) throw std::logic_error("action exceeds the granted budget");

  double rho = 0.0;
  if (!parts.empty()) {
    std::vector<rfta::ResourceVector> rows(avail_.size(), rfta::ResourceVector(types, 0.0));
    for (const auto& [j, amount] : parts)
      for (std::size_t k = 0; k < types; ++k) rows[j][k] += amount[k];
    rho = rfta::gain(rows, x);

    const double rate = 1.0 / worst_ts;
    for (const auto& [j, amount] : parts) {
      for (std::size_t k = 0; k < types; ++k) {
        avail_[j][k] -= amount[k];
        if (avail_[j][k] < 0.0) avail_[j][k] = 0.0;
      }
      held_.emplace(next_alloc_id_, Active{p.device, j, amount, 0.0});
      ++next_alloc_id_;
    }
    // the bundle releases as one unit at its access time; beta carries its
    // rate once, on the first part, to avoid double-releasing on splits
    base_beta_ += rate;
    const std::size_t first_id = next_alloc_id_ - parts.size();
    held_.at(first_id).release_rate = rate;
    for (std::size_t off = 0; off < parts.size(); ++off)
      push_event(now_ + worst_ts, kPrioExpiry, first_id + off);
  }
  conservation_check();

  // metrics
  epoch_gain_ += rho;
  epoch_device_gain_[p.device] += rho;
  metrics_.gain_total[p.device] += rho;
  epoch_device_budget_[p.device] += p.budget;
  metrics_.budget_total[p.device] += p.budget;
  for (const auto& [j, amount] : parts)
    for (std::size_t k = 0; k < types; ++k) {
      epoch_alloc_.at(p.device, j, k) += amount[k];
      metrics_.aggregate.at(p.device, j, k) += amount[k];
    }

  // demand-routed load: the full demand counts toward the server holding the
  // largest share, so per-epoch mean load is allocator independent
  std::size_t routed = p.device % avail_.size();
  double best_f = 0.0;
  for (const auto& [j, f] : action.parts)
    if (f > best_f) {
      best_f = f;
      routed = j;
    }
  for (std::size_t k = 0; k < types; ++k) epoch_routed_[routed][k] += x[k];
  ++epoch_requests_seen_;

  ++requests_in_epoch_;
  if (requests_in_epoch_ >= scenario_.cfg.sim.epoch_requests) {
    push_event(now_, kPrioEpoch, static_cast<std::size_t>(epoch_idx_));
    requests_in_epoch_ = 0;
  }

  epoch_end_flag_ = false;
  advance_to_decision();

  edrl::StepResult res;
  res.next = snapshot();
  res.epoch_end = epoch_end_flag_;
  res.done = done_;
  return res;
}

namespace {

// Instantaneous single-device view for the reference allocators: current
// availability acts as capacity (drained servers get a vanishing stand-in).
edrl::Action plan_with_reference(const Engine& eng, const edrl::ComprehensiveState& state,
                                 AllocatorKind kind, Rng& rng) {
  const Scenario& sc = eng.scenario();
  const RftaConfig& rcfg = sc.cfg.rfta;

  rfta::Instance inst;
  rfta::DeviceSpec d;
  d.demand = state.demand;
  d.gamma = 1.0; // budget already carries the behavior index
  d.xi = sc.devices[state.device].profile.xi();
  d.data_size = sc.devices[state.device].data_size;
  inst.devices.push_back(std::move(d));
  for (std::size_t j = 0; j < sc.servers.size(); ++j) {
    rfta::ServerSpec s;
    s.capacity = state.available[j];
    for (double& c : s.capacity) c = std::max(c, kDrainedCapacity);
    s.unit_cost = sc.servers[j].unit_cost;
    inst.servers.push_back(std::move(s));
  }
  inst.tau = rcfg.tau;
  inst.units = rcfg.units;
  const std::vector<double> budgets = {state.budget};

  rfta::Allocation y;
  switch (kind) {
    case AllocatorKind::Greedy:
      y = rfta::greedy_allocate(inst, budgets, rcfg.fraction_cap);
      break;
    case AllocatorKind::Random:
      y = rfta::random_allocate(inst, budgets, rng, rcfg.fraction_cap);
      break;
    case AllocatorKind::Oracle:
      y = rfta::exhaustive_oracle(inst, budgets, rcfg.oracle_grid, rcfg.fraction_cap,
                                  rcfg.oracle_node_cap);
      break;
    default:
      throw std::logic_error("reference planner got a learning allocator");
  }

  edrl::Action a;
  for (std::size_t j = 0; j < inst.servers.size(); ++j) {
    double f = 0.0;
    for (std::size_t k = 0; k < state.demand.size(); ++k)
      if (state.demand[k] > 0.0) {
        f = y.at(0, j, k) / state.demand[k];
        break;
      }
    if (f > kTinyFraction) a.parts.emplace_back(j, f);
  }
  return a;
}

} // namespace

RunResult run_scenario(const Scenario& sc, AllocatorKind kind,
                       const edrl::ValueModel* frozen) {
  Engine eng(sc);
  RunResult out;

  if (kind == AllocatorKind::Edrl && frozen == nullptr) {
    edrl::TrainResult tr = edrl::train(eng, sc.cfg.sim.epochs, sc.cfg.edrl,
                                       substream_seed(sc.cfg.seed, "edrl-explore"));
    out.metrics = eng.take_metrics();
    out.curve = std::move(tr.curve);
    out.model = std::move(tr.model);
    return out;
  }

  Rng policy_rng = substream(sc.cfg.seed,
                             kind == AllocatorKind::Random ? "alloc-random" : "edrl-eval");
  edrl::ComprehensiveState state = eng.reset();
  while (!eng.done()) {
    edrl::Action a;
    if (kind == AllocatorKind::Edrl) {
      const edrl::Decision d =
          edrl::select_action(state, eng.context(), *frozen, sc.cfg.edrl, 0.0, policy_rng);
      a = d.scored[d.chosen_index].action;
    } else {
      a = plan_with_reference(eng, state, kind, policy_rng);
    }
    edrl::StepResult res = eng.step(a);
    if (res.done) break;
    state = std::move(res.next);
  }
  out.metrics = eng.take_metrics();
  return out;
}

} // namespace edgesim::sim
