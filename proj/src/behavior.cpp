#include "edgesim/behavior.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "edgesim/csv.hpp"

namespace edgesim::behavior {

std::string to_string(AppKind k) {
  switch (k) {
    case AppKind::EmergencyResponse: return "emergency_response";
    case AppKind::HomeVoiceAssistant: return "home_voice_assistant";
    case AppKind::BuildingAccessFaceDetection: return "building_access_face_detection";
    case AppKind::HealthMonitoring: return "health_monitoring";
  }
  throw std::logic_error("bad AppKind");
}

AppKind app_kind_from_string(const std::string& s) {
  if (s == "emergency_response") return AppKind::EmergencyResponse;
  if (s == "home_voice_assistant") return AppKind::HomeVoiceAssistant;
  if (s == "building_access_face_detection") return AppKind::BuildingAccessFaceDetection;
  if (s == "health_monitoring") return AppKind::HealthMonitoring;
  throw std::invalid_argument("unknown application class: " + s);
}

std::string to_string(Transport t) { return t == Transport::TCP ? "TCP" : "UDP"; }

std::string to_string(AppProtocol p) {
  switch (p) {
    case AppProtocol::HTTPS: return "HTTPS";
    case AppProtocol::HTTP: return "HTTP";
    case AppProtocol::MQTT: return "MQTT";
    case AppProtocol::COAP: return "COAP";
  }
  throw std::logic_error("bad AppProtocol");
}

std::string to_string(Label l) { return l == Label::Normal ? "normal" : "anomalous"; }

namespace {
Transport transport_from_string(const std::string& s) {
  if (s == "TCP") return Transport::TCP;
  if (s == "UDP") return Transport::UDP;
  throw std::invalid_argument("unknown transport: " + s);
}

AppProtocol app_protocol_from_string(const std::string& s) {
  if (s == "HTTPS") return AppProtocol::HTTPS;
  if (s == "HTTP") return AppProtocol::HTTP;
  if (s == "MQTT") return AppProtocol::MQTT;
  if (s == "COAP") return AppProtocol::COAP;
  throw std::invalid_argument("unknown app protocol: " + s);
}

Label label_from_string(const std::string& s) {
  if (s == "normal") return Label::Normal;
  if (s == "anomalous") return Label::Anomalous;
  throw std::invalid_argument("unknown label: " + s);
}

std::array<double, 24> normalized_profile(std::array<double, 24> p) {
  double sum = 0.0;
  for (double v : p) sum += v;
  if (sum <= 0.0) throw std::invalid_argument("diurnal profile sums to zero");
  for (double& v : p) v *= 24.0 / sum;
  return p;
}

std::array<double, 24> flat_profile() {
  std::array<double, 24> p;
  p.fill(1.0);
  return p;
}
} // namespace

void AppClass::validate() const {
  if (!(priority > 0.0 && priority <= 1.0))
    throw std::invalid_argument("priority must be in (0, 1]");
  if (lambda < 0.0) throw std::invalid_argument("lambda must be >= 0");
  for (const auto& r : demand_ranges)
    if (!r.valid()) throw std::invalid_argument("invalid demand range");
  for (const Interval* r : {&duration_s, &workload_mb, &cpu_usage, &mem_usage,
                            &disk_io_usage, &occupancy_s, &conn_count})
    if (!r->valid()) throw std::invalid_argument("invalid attribute range");
  if (cpu_usage.hi > 1.0 || mem_usage.hi > 1.0 || disk_io_usage.hi > 1.0)
    throw std::invalid_argument("usage fractions must stay <= 1");
}

AppClass default_app_class(AppKind kind) {
  AppClass a;
  a.kind = kind;
  a.diurnal = flat_profile();
  switch (kind) {
    case AppKind::EmergencyResponse:
      a.priority = 1.0;
      a.demand_ranges = {{0.4, 0.8}, {1.5, 4.0}, {30.0, 60.0}};
      a.lambda = 0.05;
      a.duration_s = {0.5, 2.0};
      a.workload_mb = {2.0, 8.0};
      a.cpu_usage = {0.2, 0.6};
      a.mem_usage = {0.1, 0.4};
      a.disk_io_usage = {0.05, 0.2};
      a.occupancy_s = {0.5, 3.0};
      a.conn_count = {1, 4};
      a.transport = Transport::TCP;
      a.app_protocol = AppProtocol::HTTPS;
      break;
    case AppKind::HomeVoiceAssistant: {
      a.priority = 0.4;
      a.demand_ranges = {{0.2, 0.5}, {1.0, 2.5}, {15.0, 40.0}};
      a.lambda = 0.05;
      a.duration_s = {0.2, 1.5};
      a.workload_mb = {0.5, 4.0};
      a.cpu_usage = {0.1, 0.5};
      a.mem_usage = {0.1, 0.3};
      a.disk_io_usage = {0.02, 0.1};
      a.occupancy_s = {0.3, 2.0};
      a.conn_count = {1, 2};
      a.transport = Transport::TCP;
      a.app_protocol = AppProtocol::HTTP;
      // evening peaked: voice interaction clusters after work hours
      std::array<double, 24> p{0.3, 0.2, 0.2, 0.2, 0.2, 0.3, 0.6, 1.0,
                               1.0, 0.8, 0.8, 0.8, 0.9, 0.8, 0.8, 0.9,
                               1.2, 1.8, 2.2, 2.4, 2.2, 1.8, 1.2, 0.6};
      a.diurnal = normalized_profile(p);
      break;
    }
    case AppKind::BuildingAccessFaceDetection: {
      a.priority = 0.6;
      a.demand_ranges = {{0.3, 0.8}, {2.0, 4.0}, {20.0, 60.0}};
      a.lambda = 0.05;
      a.duration_s = {0.5, 3.0};
      a.workload_mb = {5.0, 20.0};
      a.cpu_usage = {0.3, 0.8};
      a.mem_usage = {0.2, 0.6};
      a.disk_io_usage = {0.05, 0.3};
      a.occupancy_s = {1.0, 5.0};
      a.conn_count = {1, 3};
      a.transport = Transport::TCP;
      a.app_protocol = AppProtocol::HTTPS;
      // day peaked: entrance traffic follows building hours
      std::array<double, 24> p{0.1, 0.1, 0.1, 0.1, 0.1, 0.3, 0.8, 1.6,
                               2.2, 2.0, 1.6, 1.4, 1.6, 1.5, 1.4, 1.5,
                               1.8, 2.0, 1.4, 0.8, 0.5, 0.3, 0.2, 0.1};
      a.diurnal = normalized_profile(p);
      break;
    }
    case AppKind::HealthMonitoring:
      a.priority = 0.8;
      a.demand_ranges = {{0.1, 0.3}, {0.8, 1.5}, {10.0, 20.0}};
      a.lambda = 0.05;
      a.duration_s = {0.1, 0.8};
      a.workload_mb = {0.05, 0.5};
      a.cpu_usage = {0.05, 0.2};
      a.mem_usage = {0.05, 0.15};
      a.disk_io_usage = {0.01, 0.05};
      a.occupancy_s = {0.1, 1.0};
      a.conn_count = {1, 2};
      a.transport = Transport::TCP;
      a.app_protocol = AppProtocol::MQTT;
      break;
  }
  return a;
}

SRRecord generate_sr_record(const DeviceProfile& device, Rng& rng) {
  device.app.validate();
  const AppClass& a = device.app;
  SRRecord r;
  r.device_id = device.device_id;
  r.duration_s = rng.trunc_normal(a.duration_s.lo, a.duration_s.hi);
  r.workload_mb = rng.trunc_normal(a.workload_mb.lo, a.workload_mb.hi);
  r.cpu = rng.trunc_normal(a.cpu_usage.lo, a.cpu_usage.hi);
  r.mem = rng.trunc_normal(a.mem_usage.lo, a.mem_usage.hi);
  r.disk_io = rng.trunc_normal(a.disk_io_usage.lo, a.disk_io_usage.hi);
  r.occupancy_s = rng.trunc_normal(a.occupancy_s.lo, a.occupancy_s.hi);
  r.conn_count = static_cast<std::uint32_t>(
      std::llround(rng.trunc_normal(a.conn_count.lo, a.conn_count.hi)));
  r.transport = a.transport;
  r.app_protocol = a.app_protocol;
  r.label = Label::Normal;
  return r;
}

double diurnal_rate_integral(const AppClass& app, double t0, double t1) {
  if (t1 <= t0) return 0.0;
  double total = 0.0;
  double t = t0;
  while (t < t1) {
    const double day_t = std::fmod(t, 86400.0);
    const int hour = static_cast<int>(day_t / 3600.0) % 24;
    const double hour_end = t - day_t + (hour + 1) * 3600.0;
    const double seg_end = std::min(t1, hour_end);
    total += app.diurnal[static_cast<std::size_t>(hour)] * (seg_end - t);
    t = seg_end;
  }
  return total;
}

TRSeries generate_tr_series(const DeviceProfile& device, int day_index,
                            int interval_minutes, Rng& rng,
                            std::vector<SRRecord>* sr_log) {
  if (interval_minutes <= 0 || 1440 % interval_minutes != 0)
    throw std::invalid_argument("interval_minutes must divide 1440");
  device.app.validate();
  const int n = 1440 / interval_minutes;
  const double slot_s = interval_minutes * 60.0;

  TRSeries s;
  s.device_id = device.device_id;
  s.day_index = day_index;
  s.interval_minutes = interval_minutes;
  s.points.resize(static_cast<std::size_t>(n));

  for (int slot = 0; slot < n; ++slot) {
    const double t0 = slot * slot_s;
    const double mean = device.app.lambda * diurnal_rate_integral(device.app, t0, t0 + slot_s);
    const std::uint64_t count = rng.poisson(mean);
    TRPoint& p = s.points[static_cast<std::size_t>(slot)];
    p.request_count = static_cast<std::uint32_t>(count);
    for (std::uint64_t i = 0; i < count; ++i) {
      SRRecord rec = generate_sr_record(device, rng);
      rec.ts = day_index * 86400.0 + t0 + (i + 0.5) * slot_s / (count + 1.0);
      p.workload_mb += rec.workload_mb;
      p.occupancy_s += rec.occupancy_s;
      if (sr_log) sr_log->push_back(rec);
    }
  }
  return s;
}

SRRecord inject_sr_anomaly(const SRRecord& record, double intensity, SrAnomalyMode mode) {
  if (intensity <= 1.0) throw std::invalid_argument("anomaly intensity must be > 1");
  SRRecord out = record;
  if (mode == SrAnomalyMode::Workload || mode == SrAnomalyMode::Both)
    out.workload_mb *= intensity;
  if (mode == SrAnomalyMode::Occupancy || mode == SrAnomalyMode::Both)
    out.occupancy_s *= intensity;
  out.label = Label::Anomalous;
  return out;
}

TRSeries inject_tr_anomaly(const TRSeries& series, int slot_from, int slot_to,
                           double intensity) {
  if (intensity <= 1.0) throw std::invalid_argument("anomaly intensity must be > 1");
  const int n = static_cast<int>(series.points.size());
  if (slot_from < 0 || slot_to > n || slot_from >= slot_to)
    throw std::out_of_range("anomaly slot range out of range");
  TRSeries out = series;
  for (int i = slot_from; i < slot_to; ++i) {
    TRPoint& p = out.points[static_cast<std::size_t>(i)];
    const TRPoint before = p;
    p.request_count = static_cast<std::uint32_t>(
        std::llround(p.request_count * intensity));
    p.workload_mb *= intensity;
    p.occupancy_s *= intensity;
    const bool changed = p.request_count != before.request_count ||
                         p.workload_mb != before.workload_mb ||
                         p.occupancy_s != before.occupancy_s;
    if (changed) p.label = Label::Anomalous;
  }
  return out;
}

std::vector<double> request_arrivals(const DeviceProfile& device, double horizon_s,
                                     Rng& rng) {
  if (horizon_s <= 0.0) throw std::invalid_argument("horizon must be > 0");
  device.app.validate();
  std::vector<double> out;
  if (device.app.lambda <= 0.0) return out;
  // Piecewise-constant rate: restart the exponential clock at each hour
  // boundary (valid by memorylessness).
  double t = 0.0;
  while (t < horizon_s) {
    const double day_t = std::fmod(t, 86400.0);
    const int hour = static_cast<int>(day_t / 3600.0) % 24;
    const double seg_end = std::min(horizon_s, t - day_t + (hour + 1) * 3600.0);
    const double rate = device.app.lambda * device.app.diurnal[static_cast<std::size_t>(hour)];
    if (rate <= 0.0) {
      t = seg_end;
      continue;
    }
    double clock = t;
    for (;;) {
      clock += rng.exponential(rate);
      if (clock >= seg_end) break;
      out.push_back(clock);
    }
    t = seg_end;
  }
  return out;
}

void write_sr_csv(const std::string& path, const std::vector<SRRecord>& records) {
  CsvWriter w(path, {"device_id", "ts", "duration_s", "workload_mb", "cpu", "mem",
                     "disk_io", "occupancy_s", "conn_count", "transport",
                     "app_proto", "label"});
  for (const auto& r : records) {
    w.field(r.device_id)
        .field(r.ts)
        .field(r.duration_s)
        .field(r.workload_mb)
        .field(r.cpu)
        .field(r.mem)
        .field(r.disk_io)
        .field(r.occupancy_s)
        .field(static_cast<std::uint64_t>(r.conn_count))
        .field(to_string(r.transport))
        .field(to_string(r.app_protocol))
        .field(to_string(r.label));
    w.end_row();
  }
}

std::vector<SRRecord> read_sr_csv(const std::string& path) {
  std::vector<SRRecord> out;
  for (const auto& row : read_csv(path)) {
    if (row.size() != 12) throw std::runtime_error("bad sr_records row in " + path);
    SRRecord r;
    r.device_id = std::stoi(row[0]);
    r.ts = std::stod(row[1]);
    r.duration_s = std::stod(row[2]);
    r.workload_mb = std::stod(row[3]);
    r.cpu = std::stod(row[4]);
    r.mem = std::stod(row[5]);
    r.disk_io = std::stod(row[6]);
    r.occupancy_s = std::stod(row[7]);
    r.conn_count = static_cast<std::uint32_t>(std::stoul(row[8]));
    r.transport = transport_from_string(row[9]);
    r.app_protocol = app_protocol_from_string(row[10]);
    r.label = label_from_string(row[11]);
    out.push_back(r);
  }
  return out;
}

void write_tr_csv(const std::string& path, const std::vector<TRSeries>& series) {
  CsvWriter w(path, {"device_id", "day", "slot", "count", "workload_mb",
                     "occupancy_s", "label"});
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.points.size(); ++i) {
      const TRPoint& p = s.points[i];
      w.field(s.device_id)
          .field(s.day_index)
          .field(i)
          .field(static_cast<std::uint64_t>(p.request_count))
          .field(p.workload_mb)
          .field(p.occupancy_s)
          .field(to_string(p.label));
      w.end_row();
    }
  }
}

std::vector<TRSeries> read_tr_csv(const std::string& path) {
  std::vector<TRSeries> out;
  for (const auto& row : read_csv(path)) {
    if (row.size() != 7) throw std::runtime_error("bad tr_series row in " + path);
    const int device_id = std::stoi(row[0]);
    const int day = std::stoi(row[1]);
    const std::size_t slot = std::stoul(row[2]);
    if (out.empty() || out.back().device_id != device_id || out.back().day_index != day) {
      TRSeries s;
      s.device_id = device_id;
      s.day_index = day;
      out.push_back(std::move(s));
    }
    TRSeries& s = out.back();
    if (s.points.size() != slot) throw std::runtime_error("tr_series rows out of order");
    TRPoint p;
    p.request_count = static_cast<std::uint32_t>(std::stoul(row[3]));
    p.workload_mb = std::stod(row[4]);
    p.occupancy_s = std::stod(row[5]);
    p.label = label_from_string(row[6]);
    s.points.push_back(p);
  }
  for (auto& s : out)
    s.interval_minutes = static_cast<int>(1440 / std::max<std::size_t>(1, s.points.size()));
  return out;
}

} // namespace edgesim::behavior
