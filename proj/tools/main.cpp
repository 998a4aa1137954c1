// edgesim command line: scenario simulation, detector benchmarking, allocator
// comparison, and offline behavior-index computation. All runs are
// deterministic under a fixed seed and write a manifest next to their CSVs.
#include <sys/resource.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "edgesim/csv.hpp"
#include "edgesim/engine.hpp"
#include "edgesim/nn.hpp"
#include "edgesim/runconfig.hpp"

namespace fs = std::filesystem;
using namespace edgesim;
using Clock = std::chrono::steady_clock;

namespace {

constexpr const char* kToolVersion = "edgesim 0.1.0";

struct GlobalOpts {
  std::string config_path;
  std::string out_dir = "runs";
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string allocator = "edrl";
  bool quiet = false;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double peak_memory_mb() {
  rusage u{};
  getrusage(RUSAGE_SELF, &u);
  return static_cast<double>(u.ru_maxrss) / 1024.0; // ru_maxrss is KiB on Linux
}

std::string hex64(std::uint64_t h) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[static_cast<std::size_t>(i)] = digits[h & 0xf];
    h >>= 4;
  }
  return s;
}

sim::RunConfig load_effective_config(const GlobalOpts& g) {
  sim::RunConfig c;
  if (!g.config_path.empty()) c = sim::load_config(g.config_path);
  if (g.seed_set) c.scenario.seed = g.seed;
  c.scenario.validate();
  return c;
}

void write_manifest(const fs::path& dir, const sim::RunConfig& c,
                    const std::string& allocator, const nlohmann::ordered_json& extra) {
  nlohmann::ordered_json m;
  m["tool"] = kToolVersion;
  m["compiler"] = __VERSION__;
  m["config_hash"] = sim::config_hash(c);
  m["seed"] = c.scenario.seed;
  m["allocator"] = allocator;
  for (const auto& [k, v] : extra.items()) m[k] = v;
  std::ofstream out(dir / "manifest.json");
  out << m.dump(2) << "\n";
  std::ofstream cfg(dir / "config.json");
  cfg << sim::serialize_config(c);
}

void write_metrics_csv(const fs::path& dir, const sim::Metrics& m) {
  CsvWriter w((dir / "metrics.csv").string(),
              {"epoch", "total_gain", "ef_index", "load_mean", "load_var",
               "detector_f1_sr", "detector_f1_tr"});
  for (const sim::EpochRow& r : m.epochs) {
    w.field(static_cast<std::int64_t>(r.epoch))
        .field(r.total_gain)
        .field(r.ef_index)
        .field(r.load_mean)
        .field(r.load_var)
        .field(r.f1_sr)
        .field(r.f1_tr);
    w.end_row();
  }
}

void write_devices_csv(const fs::path& dir, const sim::Metrics& m) {
  CsvWriter w((dir / "devices.csv").string(), {"epoch", "device_id", "brdi", "budget", "gain"});
  for (const sim::DeviceRow& r : m.devices) {
    w.field(static_cast<std::int64_t>(r.epoch))
        .field(r.device_id)
        .field(r.brdi)
        .field(r.budget)
        .field(r.gain);
    w.end_row();
  }
}

void write_brdi_csv(const fs::path& dir, const sim::Metrics& m) {
  CsvWriter w((dir / "brdi.csv").string(),
              {"epoch", "device_id", "gamma_sr", "gamma_tr", "gamma_total"});
  for (const sim::BrdiRow& r : m.brdi_rows) {
    w.field(static_cast<std::int64_t>(r.epoch))
        .field(r.device_id)
        .field(r.gamma_sr)
        .field(r.gamma_tr)
        .field(r.gamma_total);
    w.end_row();
  }
}

void write_fairness_csv(const fs::path& dir, const sim::Metrics& m) {
  CsvWriter w((dir / "fairness.csv").string(), {"epoch", "ef_index"});
  for (const sim::EpochRow& r : m.epochs) {
    w.field(static_cast<std::int64_t>(r.epoch)).field(r.ef_index);
    w.end_row();
  }
}

void write_allocation_csv(const fs::path& dir, const sim::Metrics& m,
                          const sim::Scenario& sc) {
  CsvWriter w((dir / "allocation.csv").string(),
              {"device_id", "server_id", "type", "amount", "unit_cost"});
  const rfta::Allocation& y = m.aggregate;
  for (std::size_t i = 0; i < y.devices(); ++i)
    for (std::size_t j = 0; j < y.servers(); ++j)
      for (std::size_t k = 0; k < y.types(); ++k) {
        if (y.at(i, j, k) == 0.0) continue;
        w.field(i).field(j).field(k).field(y.at(i, j, k)).field(sc.servers[j].unit_cost[k]);
        w.end_row();
      }
}

void write_curve_csv(const fs::path& dir, const std::vector<edrl::CurvePoint>& curve) {
  CsvWriter w((dir / "learning_curve.csv").string(),
              {"epoch", "total_gain", "epsilon", "theta", "loss_mean"});
  for (const edrl::CurvePoint& p : curve) {
    w.field(static_cast<std::int64_t>(p.epoch))
        .field(p.total_gain)
        .field(p.epsilon)
        .field(p.theta)
        .field(p.loss_mean);
    w.end_row();
  }
}

void write_policy_params(const fs::path& path, const edrl::ValueModel& m) {
  std::vector<std::pair<std::string, const nn::Mat*>> tensors;
  tensors.emplace_back("V", &m.V);
  for (std::size_t l = 0; l < m.feature_net.layers.size(); ++l) {
    tensors.emplace_back("feature_W" + std::to_string(l), &m.feature_net.layers[l].W);
    tensors.emplace_back("feature_b" + std::to_string(l), &m.feature_net.layers[l].b);
  }
  nn::save_params(path.string(), tensors);
}

double mean_ignoring_nan(const std::vector<double>& v) {
  double acc = 0.0;
  std::size_t n = 0;
  for (double x : v)
    if (!std::isnan(x)) {
      acc += x;
      ++n;
    }
  return n == 0 ? std::numeric_limits<double>::quiet_NaN() : acc / static_cast<double>(n);
}

void write_failed_marker(const fs::path& dir, const std::string& why) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  std::ofstream out(dir / "FAILED");
  out << why << "\n";
}

// ---- simulate ----------------------------------------------------------------

int cmd_simulate(const GlobalOpts& g) {
  const sim::RunConfig base = load_effective_config(g);
  const sim::AllocatorKind kind = sim::allocator_from_name(g.allocator);

  struct Point {
    sim::ScenarioConfig cfg;
    std::string tag;
  };
  std::vector<Point> points;
  if (base.sweep.axis.empty()) {
    points.push_back({base.scenario, ""});
  } else {
    for (double v : base.sweep.values)
      points.push_back({sim::apply_sweep_value(base.scenario, base.sweep.axis, v),
                        base.sweep.axis + "-" + format_double(v)});
  }

  int failures = 0;
  for (const Point& pt : points) {
    for (int r = 0; r < std::max(1, base.sweep.repeat); ++r) {
      sim::RunConfig one;
      one.scenario = pt.cfg;
      one.scenario.seed = base.scenario.seed + static_cast<std::uint64_t>(r);
      std::string name = sim::config_hash(one) + "-s" + std::to_string(one.scenario.seed);
      if (!pt.tag.empty()) name = pt.tag + "-" + name;
      const fs::path dir = fs::path(g.out_dir) / name;
      try {
        fs::create_directories(dir);
        const auto t0 = Clock::now();
        const sim::Scenario sc = sim::build_scenario(one.scenario);
        const sim::RunResult res = sim::run_scenario(sc, kind);
        write_metrics_csv(dir, res.metrics);
        write_devices_csv(dir, res.metrics);
        write_brdi_csv(dir, res.metrics);
        write_fairness_csv(dir, res.metrics);
        write_allocation_csv(dir, res.metrics, sc);
        if (res.model) {
          write_curve_csv(dir, res.curve);
          write_policy_params(dir / "policy.params", *res.model);
        }
        nlohmann::ordered_json extra;
        extra["trace_hash"] = hex64(res.metrics.trace_hash);
        extra["total_gain"] = res.metrics.total_gain;
        extra["wall_seconds"] = seconds_since(t0);
        write_manifest(dir, one, g.allocator, extra);
        if (!g.quiet)
          std::cout << "run " << dir.string() << " allocator=" << g.allocator
                    << " total_gain=" << format_double(res.metrics.total_gain) << "\n";
      } catch (const std::exception& e) {
        write_failed_marker(dir, e.what());
        std::cerr << "run " << dir.string() << " failed: " << e.what() << "\n";
        ++failures;
      }
    }
  }
  return failures == 0 ? 0 : 1;
}

// ---- detect --------------------------------------------------------------------

int cmd_detect(const GlobalOpts& g, const std::string& granularity) {
  const sim::RunConfig base = load_effective_config(g);
  const sim::ScenarioConfig& scfg = base.scenario;
  const sim::DetectionConfig& det = scfg.detection;

  const fs::path dir =
      fs::path(g.out_dir) / ("detect-" + sim::config_hash(base) + "-s" +
                             std::to_string(scfg.seed));
  fs::create_directories(dir);

  const sim::Scenario sc = sim::build_scenario(scfg);
  const std::size_t n = sc.devices.size();
  const double sr_rate = scfg.devices.anomaly_rate > 0.0 ? scfg.devices.anomaly_rate : 0.04;
  const double intensity = scfg.devices.anomaly_intensity;

  CsvWriter w((dir / "detection.csv").string(),
              {"model", "precision", "recall", "f1", "train_seconds", "score_ms_mean",
               "peak_mem_mb"});
  int failures = 0;

  if (granularity == "both" || granularity == "sr") {
    try {
      Rng train_rng = substream(scfg.seed, "detect-sr-train");
      std::vector<behavior::SRRecord> train;
      train.reserve(det.bootstrap_records);
      for (std::size_t i = 0; i < det.bootstrap_records; ++i)
        train.push_back(behavior::generate_sr_record(sc.devices[i % n].profile, train_rng));

      Rng test_rng = substream(scfg.seed, "detect-sr-test");
      std::vector<behavior::SRRecord> test;
      test.reserve(det.bootstrap_records);
      for (std::size_t i = 0; i < det.bootstrap_records; ++i) {
        behavior::SRRecord rec = behavior::generate_sr_record(sc.devices[i % n].profile, test_rng);
        if (test_rng.uniform() < sr_rate)
          rec = behavior::inject_sr_anomaly(rec, intensity, behavior::SrAnomalyMode::Workload);
        test.push_back(rec);
      }
      behavior::write_sr_csv((dir / "sr_train.csv").string(), train);
      behavior::write_sr_csv((dir / "sr_test.csv").string(), test);

      detect::OcnnConfig oc;
      oc.nu = det.nu;
      oc.hidden = det.sr_hidden;
      oc.epochs = det.epochs;
      oc.batch = det.batch;
      oc.seed = substream_seed(scfg.seed, "detect-ocnn");
      const auto t0 = Clock::now();
      const detect::OcnnModel model = detect::train_ocnn(detect::sr_feature_matrix(train), oc);
      const double train_s = seconds_since(t0);

      const detect::Mat feats = detect::sr_feature_matrix(test);
      std::vector<int> decisions;
      decisions.reserve(test.size());
      const auto t1 = Clock::now();
      for (Eigen::Index i = 0; i < feats.cols(); ++i)
        decisions.push_back(model.score(feats.col(i)) < 0.5 ? 1 : 0);
      const double score_ms = seconds_since(t1) * 1000.0 / static_cast<double>(test.size());

      const detect::F1 f = detect::f1_score(decisions, detect::sr_labels(test));
      w.field("ocnn").field(f.precision).field(f.recall).field(f.f1).field(train_s)
          .field(score_ms).field(peak_memory_mb());
      w.end_row();

      const nn::Mat scaler_mean = model.scaler.mean;
      const nn::Mat scaler_sd = model.scaler.sd;
      nn::save_params((dir / "ocnn.params").string(),
                      {{"hidden_W", &model.hidden_layer.W},
                       {"readout_W", &model.readout.W},
                       {"scaler_mean", &scaler_mean},
                       {"scaler_sd", &scaler_sd}});
    } catch (const std::exception& e) {
      std::cerr << "sr detector failed: " << e.what() << "\n";
      ++failures;
    }
  }

  if (granularity == "both" || granularity == "tr") {
    try {
      const int interval = 1440 / det.slots_per_day;
      Rng train_rng = substream(scfg.seed, "detect-tr-train");
      std::vector<behavior::TRSeries> train;
      train.reserve(det.bootstrap_days);
      for (std::size_t d = 0; d < det.bootstrap_days; ++d)
        train.push_back(behavior::generate_tr_series(sc.devices[d % n].profile,
                                                     static_cast<int>(d), interval, train_rng));

      Rng test_rng = substream(scfg.seed, "detect-tr-test");
      std::vector<behavior::TRSeries> test;
      test.reserve(det.bootstrap_days);
      const int night_end = det.slots_per_day / 6; // first four hours of the day
      for (std::size_t d = 0; d < det.bootstrap_days; ++d) {
        behavior::TRSeries s = behavior::generate_tr_series(
            sc.devices[d % n].profile, static_cast<int>(d), interval, test_rng);
        if (d % 4 == 0) s = behavior::inject_tr_anomaly(s, 0, night_end, intensity);
        test.push_back(s);
      }
      behavior::write_tr_csv((dir / "tr_train.csv").string(), train);
      behavior::write_tr_csv((dir / "tr_test.csv").string(), test);

      detect::GanedConfig gc;
      gc.n_c = det.ganed_n_c;
      gc.n_o = det.ganed_n_o;
      gc.epochs = det.epochs;
      gc.batch = det.batch;
      gc.seed = substream_seed(scfg.seed, "detect-ganed");
      detect::OcnnConfig hc;
      hc.nu = det.nu;
      hc.hidden = det.tr_hidden;
      hc.epochs = det.epochs;
      hc.batch = det.batch;
      hc.seed = substream_seed(scfg.seed, "detect-ocnn-tr");

      const auto t0 = Clock::now();
      const detect::TrDetector model =
          detect::train_tr_detector(detect::train_gan_ed(train, gc), train, hc);
      const double train_s = seconds_since(t0);

      std::vector<int> decisions;
      decisions.reserve(test.size());
      const auto t1 = Clock::now();
      for (const behavior::TRSeries& s : test)
        decisions.push_back(model.score(s) < 0.5 ? 1 : 0);
      const double score_ms = seconds_since(t1) * 1000.0 / static_cast<double>(test.size());

      const detect::F1 f = detect::f1_score(decisions, detect::tr_labels(test));
      w.field("gan_ed").field(f.precision).field(f.recall).field(f.f1).field(train_s)
          .field(score_ms).field(peak_memory_mb());
      w.end_row();

      std::vector<std::pair<std::string, const nn::Mat*>> tensors = {
          {"enc_lstm_Wx", &model.ganed.enc_lstm.Wx},
          {"enc_lstm_Wh", &model.ganed.enc_lstm.Wh},
          {"enc_lstm_b", &model.ganed.enc_lstm.b},
          {"enc_head_W", &model.ganed.enc_head.W},
          {"enc_head_b", &model.ganed.enc_head.b},
          {"head_hidden_W", &model.head.hidden_layer.W},
          {"head_readout_W", &model.head.readout.W},
      };
      nn::save_params((dir / "tr_detector.params").string(), tensors);
    } catch (const std::exception& e) {
      std::cerr << "tr detector failed: " << e.what() << "\n";
      ++failures;
    }
  }

  write_manifest(dir, base, "-", {});
  if (!g.quiet) std::cout << "detection results in " << dir.string() << "\n";
  return failures == 0 ? 0 : 1;
}

// ---- compare ---------------------------------------------------------------------

int cmd_compare(const GlobalOpts& g) {
  const sim::RunConfig base = load_effective_config(g);
  const sim::ScenarioConfig& scfg = base.scenario;

  const fs::path dir =
      fs::path(g.out_dir) / ("compare-" + sim::config_hash(base) + "-s" +
                             std::to_string(scfg.seed));
  fs::create_directories(dir);

  std::vector<sim::AllocatorKind> kinds = {sim::AllocatorKind::Edrl,
                                           sim::AllocatorKind::Greedy,
                                           sim::AllocatorKind::Random};
  // include the oracle only when its per-arrival search stays desk-scale
  {
    const double levels = std::floor(scfg.rfta.fraction_cap / scfg.rfta.oracle_grid) + 1.0;
    const double per_arrival = std::pow(levels, static_cast<double>(scfg.servers.count));
    const double total =
        per_arrival * static_cast<double>(scfg.sim.epochs) * scfg.sim.epoch_requests;
    if (total <= 5e7) kinds.push_back(sim::AllocatorKind::Oracle);
  }

  struct Row {
    std::string name;
    double gain = 0.0, ef = 0.0, load_var = 0.0;
    std::uint64_t trace = 0;
  };
  std::vector<Row> rows;
  try {
    for (sim::AllocatorKind k : kinds) {
      const sim::Scenario sc = sim::build_scenario(scfg);
      const sim::RunResult res = sim::run_scenario(sc, k);
      std::vector<double> efs, vars;
      for (const sim::EpochRow& r : res.metrics.epochs) {
        efs.push_back(r.ef_index);
        vars.push_back(r.load_var);
      }
      rows.push_back(Row{sim::allocator_name(k), res.metrics.total_gain,
                         mean_ignoring_nan(efs), mean_ignoring_nan(vars),
                         res.metrics.trace_hash});
    }
  } catch (const std::exception& e) {
    write_failed_marker(dir, e.what());
    std::cerr << "compare failed: " << e.what() << "\n";
    return 1;
  }

  for (const Row& r : rows)
    if (r.trace != rows.front().trace) {
      write_failed_marker(dir, "arrival traces diverged across allocators");
      std::cerr << "compare failed: arrival traces diverged across allocators\n";
      return 1;
    }

  CsvWriter w((dir / "comparison.csv").string(), {"allocator", "total_gain", "ef", "load_var"});
  for (const Row& r : rows) {
    w.field(r.name).field(r.gain).field(r.ef).field(r.load_var);
    w.end_row();
  }

  std::vector<Row> ranked = rows;
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const Row& a, const Row& b) { return a.gain > b.gain; });
  if (!g.quiet) {
    std::cout << "ranking (total gain, seed " << scfg.seed << "):\n";
    for (std::size_t i = 0; i < ranked.size(); ++i)
      std::cout << "  " << (i + 1) << ". " << ranked[i].name << " "
                << format_double(ranked[i].gain) << "\n";
    for (const Row& r : rows)
      if (r.name == std::string("oracle")) {
        const double edrl_gain = rows.front().gain;
        std::cout << "edrl/oracle gain ratio: "
                  << format_double(r.gain > 0.0 ? edrl_gain / r.gain : 0.0) << "\n";
      }
    std::cout << "trace hash: " << hex64(rows.front().trace) << " (identical across allocators)\n";
  }

  nlohmann::ordered_json extra;
  extra["trace_hash"] = hex64(rows.front().trace);
  write_manifest(dir, base, "all", extra);
  return 0;
}

// ---- brdi ------------------------------------------------------------------------

int cmd_brdi(const GlobalOpts& g, const std::string& history_path) {
  const sim::RunConfig base = load_effective_config(g);
  const brdi::Config& bc = base.scenario.brdi;

  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  try {
    rows = read_csv(history_path, true, &header);
  } catch (const std::exception& e) {
    std::cerr << "history: " << e.what() << "\n";
    return 2;
  }
  const std::vector<std::string> expect = {"device_id", "granularity", "timestamp", "score"};
  if (header != expect) {
    std::cerr << "history: expected header device_id,granularity,timestamp,score\n";
    return 2;
  }

  struct Item {
    double ts;
    double score;
    bool tr;
  };
  std::map<std::size_t, std::vector<Item>> per_device;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& row = rows[r];
    // +2 for the header line and 1-based numbering
    const std::string where = "history row " + std::to_string(r + 2);
    if (row.size() != 4) {
      std::cerr << where << ": expected 4 fields, got " << row.size() << "\n";
      return 2;
    }
    try {
      const std::size_t dev = std::stoul(row[0]);
      const std::string& gran = row[1];
      if (gran != "sr" && gran != "tr") throw std::invalid_argument("granularity must be sr or tr");
      const double ts = std::stod(row[2]);
      const double score = std::stod(row[3]);
      if (score < 0.0 || score > 1.0) throw std::invalid_argument("score must be in [0,1]");
      per_device[dev].push_back(Item{ts, score, gran == "tr"});
    } catch (const std::exception& e) {
      std::cerr << where << ": " << e.what() << "\n";
      return 2;
    }
  }

  if (per_device.empty())
    std::cerr << "warning: empty history; indices fall back to the prior "
              << format_double(bc.empty_prior) << "\n";

  std::cout << "device_id,gamma_sr,gamma_tr,gamma_total\n";
  for (auto& [dev, items] : per_device) {
    std::stable_sort(items.begin(), items.end(),
                     [](const Item& a, const Item& b) { return a.ts < b.ts; });
    brdi::BRDHistory h(bc.capacity);
    for (const Item& it : items) {
      if (it.tr)
        h.push_tr(static_cast<long>(it.ts), it.score);
      else
        h.push_sr(it.ts, it.score);
    }
    const double gsr = brdi::gamma_sr(h, bc);
    const double gtr = brdi::gamma_tr(h, bc);
    const double gt = brdi::brdi_total(gsr, gtr, bc.beta1, bc.beta2);
    std::cout << dev << "," << format_double(gsr) << "," << format_double(gtr) << ","
              << format_double(gt) << "\n";
  }
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Edge resource management simulator: behavior profiling, one-class "
               "detection, budgeted allocation, and an RL allocator"};
  app.require_subcommand(1);

  GlobalOpts g;
  app.add_option("--config", g.config_path, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "override the config seed")
      ->each([&g](const std::string&) { g.seed_set = true; });
  app.add_option("--out", g.out_dir, "output directory (default: runs)");
  app.add_option("--allocator", g.allocator,
                 "allocator for simulate: edrl, greedy, random, oracle");
  app.add_flag("--quiet", g.quiet, "suppress progress output");

  CLI::App* simulate = app.add_subcommand("simulate", "run scenario sweeps and write metrics");
  CLI::App* detect_cmd = app.add_subcommand("detect", "train and benchmark the detectors");
  std::string granularity = "both";
  detect_cmd->add_option("--granularity", granularity, "both, sr, or tr")
      ->check(CLI::IsMember({"both", "sr", "tr"}));
  CLI::App* compare = app.add_subcommand("compare", "run all allocators on identical seeds");
  CLI::App* brdi_cmd = app.add_subcommand("brdi", "offline behavior index from a history CSV");
  std::string history_path;
  brdi_cmd->add_option("--history", history_path, "history CSV (device_id,granularity,timestamp,score)")
      ->required()
      ->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(g);
    if (detect_cmd->parsed()) return cmd_detect(g, granularity);
    if (compare->parsed()) return cmd_compare(g);
    if (brdi_cmd->parsed()) return cmd_brdi(g, history_path);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
