// Device behavior-of-resource-demand profiles: application classes, per-request
// (SR) records, day-long (TR) series, anomaly injection and Poisson arrivals.
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "edgesim/rng.hpp"

namespace edgesim::behavior {

enum class AppKind { EmergencyResponse, HomeVoiceAssistant, BuildingAccessFaceDetection, HealthMonitoring };

std::string to_string(AppKind k);
AppKind app_kind_from_string(const std::string& s);

enum class Transport { TCP, UDP };
enum class AppProtocol { HTTPS, HTTP, MQTT, COAP };
enum class Label { Normal, Anomalous };

std::string to_string(Transport t);
std::string to_string(AppProtocol p);
std::string to_string(Label l);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool valid() const { return lo >= 0.0 && lo <= hi; }
};

// Attribute ranges for one application class. Numeric fields are drawn from
// normals centered in the range and truncated to it; the arrival process is
// Poisson at `lambda` requests/second shaped by the 24 per-hour multipliers.
struct AppClass {
  AppKind kind = AppKind::HealthMonitoring;
  double priority = 0.8;                 // xi in (0, 1]
  std::vector<Interval> demand_ranges;   // physical units per resource type
  double lambda = 0.05;                  // requests per second (daily average)
  std::array<double, 24> diurnal{};      // per-hour rate multipliers, mean 1

  Interval duration_s{0.1, 1.0};
  Interval workload_mb{0.5, 2.0};
  Interval cpu_usage{0.05, 0.3};
  Interval mem_usage{0.05, 0.3};
  Interval disk_io_usage{0.01, 0.1};
  Interval occupancy_s{0.1, 1.0};
  Interval conn_count{1, 2};
  Transport transport = Transport::TCP;
  AppProtocol app_protocol = AppProtocol::HTTP;

  void validate() const; // throws std::invalid_argument on bad ranges
};

// Built-in class defaults; demand ranges are in physical units
// (vCPU, GB, Mbps) and get normalized by the scenario's reference scale.
AppClass default_app_class(AppKind kind);

struct SRRecord {
  int device_id = 0;
  double ts = 0.0;
  double duration_s = 0.0;
  double workload_mb = 0.0;
  double cpu = 0.0;
  double mem = 0.0;
  double disk_io = 0.0;
  double occupancy_s = 0.0;
  std::uint32_t conn_count = 0;
  Transport transport = Transport::TCP;
  AppProtocol app_protocol = AppProtocol::HTTP;
  Label label = Label::Normal; // ground truth, evaluation only
};

struct TRPoint {
  std::uint32_t request_count = 0;
  double workload_mb = 0.0;
  double occupancy_s = 0.0;
  Label label = Label::Normal;
};

struct TRSeries {
  int device_id = 0;
  int day_index = 0;
  int interval_minutes = 10;
  std::vector<TRPoint> points; // length = 1440 / interval_minutes
};

enum class Granularity { SR, TR };
enum class SrAnomalyMode { Workload, Occupancy, Both };

// One injected-irregularity rule. SR rules hit each request independently
// with `request_probability`; TR rules hit a day range and slot range.
struct AnomalyRule {
  Granularity granularity = Granularity::SR;
  double request_probability = 0.0;
  int day_from = 0, day_to = 0;   // [from, to)
  int slot_from = 0, slot_to = 0; // [from, to)
  SrAnomalyMode mode = SrAnomalyMode::Workload;
  double intensity = 5.0;
};

struct DeviceProfile {
  int device_id = 0;
  AppClass app;
  std::optional<double> xi_override;
  std::vector<AnomalyRule> anomaly_schedule;
  std::uint64_t rng_stream_id = 0;

  double xi() const { return xi_override ? *xi_override : app.priority; }
};

// ---- Generators -----------------------------------------------------------

SRRecord generate_sr_record(const DeviceProfile& device, Rng& rng);

// Aggregates simulated per-request records into fixed-interval day points.
// `sr_log`, when given, receives every underlying record.
TRSeries generate_tr_series(const DeviceProfile& device, int day_index,
                            int interval_minutes, Rng& rng,
                            std::vector<SRRecord>* sr_log = nullptr);

SRRecord inject_sr_anomaly(const SRRecord& record, double intensity,
                           SrAnomalyMode mode = SrAnomalyMode::Workload);

TRSeries inject_tr_anomaly(const TRSeries& series, int slot_from, int slot_to,
                           double intensity);

// Poisson arrival timestamps in [0, horizon_s), rate lambda shaped by the
// diurnal profile (hour = floor(t/3600) mod 24).
std::vector<double> request_arrivals(const DeviceProfile& device, double horizon_s,
                                     Rng& rng);

// Integrated diurnal rate multiplier over [t0, t1) in seconds-of-day terms.
double diurnal_rate_integral(const AppClass& app, double t0, double t1);

// ---- Corpus CSV -----------------------------------------------------------

void write_sr_csv(const std::string& path, const std::vector<SRRecord>& records);
std::vector<SRRecord> read_sr_csv(const std::string& path);
void write_tr_csv(const std::string& path, const std::vector<TRSeries>& series);
std::vector<TRSeries> read_tr_csv(const std::string& path);

} // namespace edgesim::behavior
