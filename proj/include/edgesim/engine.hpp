// Discrete-event simulation core. Per arrival: score the request and refresh
// the device's behavior index, grant a budget, then let the chosen allocator
// place a bundle that is held until its access time elapses. Epochs are
// fixed request counts; metrics accumulate per epoch.
#pragma once

#include <cstdint>
#include <optional>
#include <queue>
#include <unordered_map>
#include <vector>

#include "edgesim/brdi.hpp"
#include "edgesim/detect.hpp"
#include "edgesim/edrl.hpp"
#include "edgesim/rfta.hpp"
#include "edgesim/scenario.hpp"

namespace edgesim::sim {

enum class AllocatorKind { Edrl, Greedy, Random, Oracle };

const char* allocator_name(AllocatorKind k);
AllocatorKind allocator_from_name(const std::string& name); // throws on unknown

struct LoadStats {
  std::vector<double> per_server;
  double mean = 0.0;
  double variance = 0.0; // population variance
};

// per-server load = allocated/capacity averaged over types
LoadStats server_load_stats(const std::vector<rfta::ResourceVector>& allocated,
                            const std::vector<rfta::ResourceVector>& capacity);

struct EpochRow {
  long epoch = 0;
  double total_gain = 0.0;
  double ef_index = 0.0; // NaN when no valid pair exists
  double load_mean = 0.0;
  double load_var = 0.0;
  double f1_sr = 0.0; // NaN when detection is off
  double f1_tr = 0.0;
};

struct DeviceRow {
  long epoch = 0;
  std::size_t device_id = 0;
  double brdi = 1.0;
  double budget = 0.0; // granted during the epoch
  double gain = 0.0;
};

struct BrdiRow {
  long epoch = 0;
  std::size_t device_id = 0;
  double gamma_sr = 1.0, gamma_tr = 1.0, gamma_total = 1.0;
};

struct Metrics {
  std::vector<EpochRow> epochs;
  std::vector<DeviceRow> devices;
  std::vector<BrdiRow> brdi_rows;
  rfta::Allocation aggregate; // summed bundles over the whole run
  std::vector<double> budget_total;
  std::vector<double> gain_total;
  double total_gain = 0.0;
  std::uint64_t trace_hash = 0; // fingerprint of (device, arrival time) pairs
  std::uint64_t events = 0;     // queue events processed over the run
};

// One engine drives one run; reset() may be called once. Implements the RL
// environment so the same event stream serves every allocator.
class Engine : public edrl::Environment {
public:
  explicit Engine(Scenario sc);

  edrl::ComprehensiveState reset() override;
  edrl::DecisionContext context() const override;
  edrl::StepResult step(const edrl::Action& a) override;

  bool done() const { return done_; }
  bool has_pending() const { return pending_.has_value(); }
  const Scenario& scenario() const { return scenario_; }
  const std::vector<rfta::ResourceVector>& available() const { return avail_; }
  double now() const { return now_; }
  std::uint64_t events_processed() const { return events_processed_; }

  const Metrics& metrics() const { return metrics_; }
  Metrics take_metrics() {
    metrics_.events = events_processed_;
    return std::move(metrics_);
  }

private:
  struct Event {
    double time;
    int prio; // expiry 0 < arrival 1 < daily detection 2 < epoch boundary 3
    std::uint64_t seq;
    std::size_t payload; // device, allocation id, or day index
    bool operator>(const Event& o) const {
      if (time != o.time) return time > o.time;
      if (prio != o.prio) return prio > o.prio;
      return seq > o.seq;
    }
  };

  struct Active {
    std::size_t device = 0, server = 0;
    rfta::ResourceVector amount;
    double release_rate = 0.0;
  };

  struct Pending {
    std::size_t device = 0;
    double gamma = 1.0, gamma_sr = 1.0, gamma_tr = 1.0;
    double budget = 0.0;
  };

  void push_event(double time, int prio, std::size_t payload);
  void schedule_arrival(std::size_t device);
  void conservation_check() const;
  void process_arrival(std::size_t device);
  void process_daily(std::size_t day);
  void finalize_epoch();
  void advance_to_decision();
  edrl::ComprehensiveState snapshot() const;

  Scenario scenario_;
  std::vector<rfta::ServerSpec> server_specs_;
  std::vector<std::vector<double>> processing_rates_;

  std::priority_queue<Event, std::vector<Event>, std::greater<Event>> queue_;
  std::uint64_t seq_ = 0;
  double now_ = 0.0;
  bool started_ = false;
  bool done_ = false;
  std::uint64_t events_processed_ = 0;

  std::vector<rfta::ResourceVector> avail_;
  std::unordered_map<std::uint64_t, Active> held_;
  std::uint64_t next_alloc_id_ = 0;
  double base_beta_ = 0.0;

  std::vector<Rng> arrival_rng_, attr_rng_, anomaly_rng_;
  std::vector<brdi::BRDHistory> history_;
  std::optional<detect::OcnnModel> sr_detector_;
  std::optional<detect::TrDetector> tr_detector_;

  // day-slot accumulation for the online daily detection pass
  std::vector<std::vector<behavior::TRPoint>> day_slots_;

  std::optional<Pending> pending_;
  bool epoch_end_flag_ = false;

  long epoch_idx_ = 0;
  int requests_in_epoch_ = 0;

  // epoch accumulators
  double epoch_gain_ = 0.0;
  std::vector<double> epoch_device_gain_, epoch_device_budget_;
  std::vector<double> epoch_gamma_, epoch_gamma_sr_, epoch_gamma_tr_;
  rfta::Allocation epoch_alloc_;
  std::vector<rfta::ResourceVector> epoch_routed_; // demand routed per server/type
  int epoch_requests_seen_ = 0;
  std::vector<int> epoch_sr_decisions_, epoch_sr_labels_;
  std::vector<int> epoch_tr_decisions_, epoch_tr_labels_;

  Metrics metrics_;
};

// Runs a full scenario under one allocator. For AllocatorKind::Edrl a fresh
// agent trains online unless `frozen` supplies an existing policy (evaluated
// greedily). The oracle allocator solves each arrival exhaustively and is
// desk-scale only.
struct RunResult {
  Metrics metrics;
  std::vector<edrl::CurvePoint> curve; // training runs only
  std::optional<edrl::ValueModel> model;
};

RunResult run_scenario(const Scenario& sc, AllocatorKind kind,
                       const edrl::ValueModel* frozen = nullptr);

} // namespace edgesim::sim
