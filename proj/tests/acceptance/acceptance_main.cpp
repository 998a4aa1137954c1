// End-to-end acceptance checks. Each check prints one [PASS]/[FAIL] line and
// the process exits with the number of failures. argv[1] names the CLI binary
// used by the command-line checks.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "edgesim/behavior.hpp"
#include "edgesim/brdi.hpp"
#include "edgesim/detect.hpp"
#include "edgesim/edrl.hpp"
#include "edgesim/engine.hpp"
#include "edgesim/nn.hpp"
#include "edgesim/rfta.hpp"
#include "edgesim/rng.hpp"
#include "edgesim/runconfig.hpp"
#include "edgesim/scenario.hpp"

using namespace edgesim;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;
using nn::Mat;

namespace {

int failures = 0;

void report(const std::string& label, bool ok, const std::string& detail) {
  std::cout << (ok ? "[PASS] " : "[FAIL] ") << label << ": " << detail << "\n" << std::flush;
  if (!ok) ++failures;
}

std::string fmt(double v, int prec = 4) {
  std::ostringstream os;
  os << std::setprecision(prec) << v;
  return os.str();
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double elapsed_s(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double mean_ef(const sim::Metrics& m) {
  std::vector<double> vals;
  for (const auto& row : m.epochs)
    if (!std::isnan(row.ef_index)) vals.push_back(row.ef_index);
  return vals.empty() ? -1.0 : mean_of(vals);
}

// ---- 1: learned policy against the exhaustive reference ------------------------

void check_policy_vs_oracle() {
  const auto t0 = Clock::now();
  std::vector<double> ratios;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    sim::ScenarioConfig cfg;
    cfg.seed = seed;
    cfg.devices.count = 4;
    cfg.servers.count = 2;
    cfg.rfta.oracle_grid = 0.25;
    cfg.edrl.levels = 4;
    cfg.sim.epochs = 40;
    cfg.sim.epoch_requests = 50;

    sim::RunResult trained = sim::run_scenario(sim::build_scenario(cfg), sim::AllocatorKind::Edrl);
    sim::ScenarioConfig eval_cfg = cfg;
    eval_cfg.sim.epochs = 10;
    sim::Scenario eval_sc = sim::build_scenario(eval_cfg);
    double policy =
        sim::run_scenario(eval_sc, sim::AllocatorKind::Edrl, &*trained.model).metrics.total_gain;
    double oracle = sim::run_scenario(eval_sc, sim::AllocatorKind::Oracle).metrics.total_gain;
    ratios.push_back(oracle > 0.0 ? policy / oracle : 0.0);
  }
  const double m = mean_of(ratios);
  const double secs = elapsed_s(t0);
  report("1", m >= 0.95 && secs < 120.0,
         "trained policy reaches " + fmt(100.0 * m) +
             "% of the exhaustive reference on the tiny instance (5-seed mean, " + fmt(secs) +
             " s)");
}

// ---- 2: envy-freeness on the standard small scenario ---------------------------

sim::ScenarioConfig standard_small(std::uint64_t seed) {
  sim::ScenarioConfig cfg;
  cfg.seed = seed;
  cfg.devices.count = 8;
  cfg.devices.roster = {behavior::AppKind::HealthMonitoring};
  cfg.servers.count = 3;
  cfg.servers.uniform_cost = true;
  cfg.servers.capacity_multiplier = 4.0;
  cfg.sim.epochs = 40;
  cfg.sim.epoch_requests = 50;
  return cfg;
}

std::vector<edrl::CurvePoint> check_envy_freeness() {
  std::vector<edrl::CurvePoint> first_curve;
  std::vector<double> policy_ef, greedy_ef;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    sim::ScenarioConfig cfg = standard_small(seed);
    sim::RunResult trained = sim::run_scenario(sim::build_scenario(cfg), sim::AllocatorKind::Edrl);
    if (seed == 1) first_curve = trained.curve;

    sim::ScenarioConfig eval_cfg = cfg;
    eval_cfg.sim.epochs = 10;
    sim::Scenario eval_sc = sim::build_scenario(eval_cfg);
    policy_ef.push_back(
        mean_ef(sim::run_scenario(eval_sc, sim::AllocatorKind::Edrl, &*trained.model).metrics));
    greedy_ef.push_back(mean_ef(sim::run_scenario(eval_sc, sim::AllocatorKind::Greedy).metrics));
  }
  const double pe = mean_of(policy_ef);
  const double ge = mean_of(greedy_ef);
  const bool ok = pe >= 0.95 && pe <= 1.0 + 1e-9 && ge >= 0.95 && ge <= 1.0 + 1e-9;
  report("2", ok,
         "envy-freeness index: policy " + fmt(pe, 6) + ", greedy " + fmt(ge, 6) +
             " (5-seed means, target [0.95, 1])");
  return first_curve;
}

// ---- 3: a zero behavior index blocks every grant -------------------------------

void check_zero_gamma_exclusion() {
  sim::ScenarioConfig cfg;
  cfg.seed = 4;
  cfg.devices.count = 6;
  cfg.devices.pinned_gamma = {{0, 0.0}};
  cfg.servers.count = 2;
  cfg.sim.epochs = 6;
  cfg.sim.epoch_requests = 30;
  sim::Scenario sc = sim::build_scenario(cfg);

  bool ok = true;
  for (auto kind : {sim::AllocatorKind::Greedy, sim::AllocatorKind::Edrl}) {
    sim::Metrics m = sim::run_scenario(sc, kind).metrics;
    ok = ok && m.budget_total[0] == 0.0 && m.gain_total[0] == 0.0;
    for (std::size_t j = 0; j < sc.servers.size(); ++j)
      for (std::size_t k = 0; k < 3; ++k) ok = ok && m.aggregate.at(0, j, k) == 0.0;
    for (const auto& row : m.devices)
      if (row.device_id == 0) ok = ok && row.budget == 0.0 && row.gain == 0.0;
  }
  report("3", ok, "a pinned zero index yields exactly zero budget, gain, and allocation");
}

// ---- 4: detector quality under planted irregularities --------------------------

void check_detector_quality() {
  using behavior::AppKind;
  const AppKind kinds[4] = {AppKind::EmergencyResponse, AppKind::HomeVoiceAssistant,
                            AppKind::BuildingAccessFaceDetection, AppKind::HealthMonitoring};

  std::vector<double> sr_f1s;
  for (int run = 0; run < 10; ++run) {
    Rng gen(900 + run);
    // one application class per run, cycling through all four; a detector is
    // fit per workload population, not across unrelated populations
    behavior::DeviceProfile prof;
    prof.app = behavior::default_app_class(kinds[run % 4]);
    auto make_corpus = [&](int n) {
      std::vector<behavior::SRRecord> recs;
      recs.reserve(n);
      for (int i = 0; i < n; ++i) {
        behavior::SRRecord r = behavior::generate_sr_record(prof, gen);
        // 4% contamination, matching the assumed outlier fraction
        if (i % 25 == 0) r = behavior::inject_sr_anomaly(r, 5.0, behavior::SrAnomalyMode::Both);
        recs.push_back(r);
      }
      return recs;
    };
    auto train = make_corpus(400);
    detect::OcnnConfig oc;
    oc.nu = 0.04;
    oc.hidden = 16;
    oc.epochs = 60;
    oc.batch = 32;
    oc.seed = 7000 + run;
    detect::OcnnModel model = detect::train_ocnn(detect::sr_feature_matrix(train), oc);

    auto test = make_corpus(400);
    detect::Mat F = detect::sr_feature_matrix(test);
    std::vector<int> dec;
    for (Eigen::Index c = 0; c < F.cols(); ++c) dec.push_back(model.score(F.col(c)) < 0.5 ? 1 : 0);
    sr_f1s.push_back(detect::f1_score(dec, detect::sr_labels(test)).f1);
  }
  const double sr_mean = mean_of(sr_f1s);

  std::vector<double> tr_f1s;
  for (int run = 0; run < 10; ++run) {
    Rng gen(3000 + run);
    behavior::DeviceProfile hm;
    hm.app = behavior::default_app_class(AppKind::HealthMonitoring);
    std::vector<behavior::TRSeries> corpus;
    for (int d = 0; d < 48; ++d) corpus.push_back(behavior::generate_tr_series(hm, d, 30, gen));
    detect::GanedConfig gc;
    gc.n_c = 12;
    gc.n_o = 6;
    gc.epochs = 10;
    gc.batch = 12;
    gc.seed = 7100 + run;
    detect::OcnnConfig hc;
    hc.nu = 0.04;
    hc.hidden = 16;
    hc.epochs = 40;
    hc.batch = 12;
    hc.seed = 7200 + run;
    detect::TrDetector det = detect::train_tr_detector(detect::train_gan_ed(corpus, gc), corpus, hc);

    std::vector<behavior::TRSeries> test;
    for (int d = 0; d < 24; ++d) {
      behavior::TRSeries s = behavior::generate_tr_series(hm, 48 + d, 30, gen);
      if (d % 4 == 0) s = behavior::inject_tr_anomaly(s, 0, 8, 8.0); // boosted night slots
      test.push_back(s);
    }
    std::vector<int> dec;
    for (const auto& s : test) dec.push_back(det.score(s) < 0.5 ? 1 : 0);
    tr_f1s.push_back(detect::f1_score(dec, detect::tr_labels(test)).f1);
  }
  const double tr_mean = mean_of(tr_f1s);

  report("4", sr_mean >= 0.90 && tr_mean >= 0.80,
         "10-run mean F1: per-request " + fmt(sr_mean) + " (target 0.90), day-series " +
             fmt(tr_mean) + " (target 0.80)");
}

// ---- 5: monotone scaling sweeps -------------------------------------------------

void check_scaling_sweeps() {
  auto total_gain = [](const sim::ScenarioConfig& cfg) {
    return sim::run_scenario(sim::build_scenario(cfg), sim::AllocatorKind::Greedy)
        .metrics.total_gain;
  };
  sim::ScenarioConfig base;
  base.seed = 6;
  base.servers.uniform_cost = true;
  base.devices.lambda = 1.0; // saturating arrivals so capacity actually binds
  base.sim.epochs = 6;
  base.sim.epoch_requests = 50;

  bool ok = true;
  std::string notes;

  auto t0 = Clock::now();
  {
    sim::ScenarioConfig cfg = base;
    cfg.devices.count = 16;
    cfg.servers.capacity = 0.6;
    std::vector<double> gains;
    for (std::size_t n : {2, 4, 8}) {
      cfg.servers.count = n;
      gains.push_back(total_gain(cfg));
    }
    for (std::size_t i = 1; i < gains.size(); ++i) ok = ok && gains[i] >= gains[i - 1] - 1e-9;
    notes += "servers {2,4,8} -> gain {" + fmt(gains[0]) + ", " + fmt(gains[1]) + ", " +
             fmt(gains[2]) + "}";
    ok = ok && elapsed_s(t0) < 300.0;
  }

  t0 = Clock::now();
  {
    sim::ScenarioConfig cfg = base;
    cfg.servers.count = 4;
    cfg.servers.capacity = 0.5;
    std::vector<double> per_device;
    for (std::size_t n : {8, 16, 32}) {
      cfg.devices.count = n;
      per_device.push_back(total_gain(cfg) / static_cast<double>(n));
    }
    for (std::size_t i = 1; i < per_device.size(); ++i)
      ok = ok && per_device[i] <= per_device[i - 1] + 1e-9;
    notes += "; devices {8,16,32} -> per-device {" + fmt(per_device[0]) + ", " +
             fmt(per_device[1]) + ", " + fmt(per_device[2]) + "}";
    ok = ok && elapsed_s(t0) < 300.0;
  }

  t0 = Clock::now();
  {
    sim::ScenarioConfig cfg = base;
    cfg.devices.count = 16;
    cfg.servers.count = 2;
    cfg.servers.capacity = 0.3;
    std::vector<double> gains;
    for (double mult : {1.0, 2.0, 4.0}) {
      cfg.servers.capacity_multiplier = mult;
      gains.push_back(total_gain(cfg));
    }
    for (std::size_t i = 1; i < gains.size(); ++i) ok = ok && gains[i] >= gains[i - 1] - 1e-9;
    notes += "; capacity x{1,2,4} -> gain {" + fmt(gains[0]) + ", " + fmt(gains[1]) + ", " +
             fmt(gains[2]) + "}";
    ok = ok && elapsed_s(t0) < 300.0;
  }

  report("5", ok, notes);
}

// ---- 6: priority-weighted index ordering on a fixed roster ----------------------

void check_index_priority_ordering() {
  using behavior::AppKind;
  sim::ScenarioConfig cfg;
  cfg.seed = 12;
  cfg.devices.count = 8;
  cfg.devices.roster = {AppKind::HealthMonitoring,  AppKind::HealthMonitoring,
                        AppKind::EmergencyResponse, AppKind::EmergencyResponse,
                        AppKind::HomeVoiceAssistant, AppKind::HomeVoiceAssistant,
                        AppKind::BuildingAccessFaceDetection,
                        AppKind::BuildingAccessFaceDetection};
  cfg.devices.pinned_gamma = {{0, 0.98}, {1, 0.75}, {2, 0.85}, {3, 0.98},
                              {4, 0.65}, {5, 0.89}, {6, 0.78}, {7, 0.95}};
  cfg.devices.lambda = 0.002; // requests essentially never overlap
  cfg.servers.count = 2;
  cfg.servers.uniform_cost = true;
  cfg.servers.capacity_multiplier = 8.0;
  cfg.sim.epochs = 8;
  cfg.sim.epoch_requests = 50;

  sim::Scenario sc = sim::build_scenario(cfg);
  sim::Metrics m = sim::run_scenario(sc, sim::AllocatorKind::Greedy).metrics;

  // per-request budget buys exactly gamma * xi of the demand bundle here
  const double expect[8] = {0.784, 0.6, 0.85, 0.98, 0.26, 0.356, 0.468, 0.57};
  bool ok = true;
  std::vector<double> mean_gain(8, 0.0);
  for (std::size_t i = 0; i < 8; ++i) {
    const double gamma = cfg.devices.pinned_gamma.at(i);
    const long n = std::llround(m.budget_total[i] / (sc.devices[i].budget_unit * gamma));
    if (n < 1) {
      ok = false;
      continue;
    }
    mean_gain[i] = m.gain_total[i] / static_cast<double>(n);
    ok = ok && std::abs(mean_gain[i] - expect[i]) <= 1e-6;
  }
  for (std::size_t i = 0; i < 8; ++i)
    if (i != 3) ok = ok && mean_gain[3] > mean_gain[i] + 1e-9;
  // equal indices, different app priorities: the higher-priority class wins
  ok = ok && mean_gain[3] > mean_gain[0] + 1e-9;

  std::string got;
  for (double g : mean_gain) got += (got.empty() ? "" : ", ") + fmt(g);
  report("6", ok, "per-request served fractions {" + got + "} match gamma*xi; device 3 leads");
}

// ---- 7: identical routed load, distinct balance --------------------------------

void check_load_profiles() {
  sim::ScenarioConfig cfg;
  cfg.seed = 3;
  cfg.devices.count = 12;
  cfg.devices.lambda = 0.5;
  cfg.servers.count = 3;
  cfg.servers.capacity = 0.8;
  cfg.servers.er_range = {3.0, 3.0}; // identical rates keep placement a free choice
  cfg.servers.uniform_cost = true;
  cfg.sim.epochs = 12;
  cfg.sim.epoch_requests = 50;
  sim::Scenario sc = sim::build_scenario(cfg);

  sim::Metrics greedy = sim::run_scenario(sc, sim::AllocatorKind::Greedy).metrics;
  sim::Metrics random = sim::run_scenario(sc, sim::AllocatorKind::Random).metrics;
  sim::RunResult trained = sim::run_scenario(sc, sim::AllocatorKind::Edrl);
  sim::Metrics policy =
      sim::run_scenario(sc, sim::AllocatorKind::Edrl, &*trained.model).metrics;

  bool ok = true;
  for (std::size_t e = 0; e < greedy.epochs.size(); ++e) {
    const double g = greedy.epochs[e].load_mean;
    ok = ok && std::abs(g - random.epochs[e].load_mean) <= 1e-9;
    ok = ok && std::abs(g - policy.epochs[e].load_mean) <= 1e-9;
  }
  auto var_mean = [](const sim::Metrics& m) {
    std::vector<double> v;
    for (const auto& row : m.epochs) v.push_back(row.load_var);
    return mean_of(v);
  };
  const double gv = var_mean(greedy), rv = var_mean(random), pv = var_mean(policy);
  ok = ok && std::abs(gv - rv) > 1e-12; // the balance signatures must differ
  ok = ok && pv <= rv + 1e-12;          // the learned policy spreads at least as well
  report("7", ok,
         "load means agree; balance variance greedy " + fmt(gv, 6) + ", random " + fmt(rv, 6) +
             ", policy " + fmt(pv, 6));
}

// ---- 8: the learning curve improves and settles --------------------------------

void check_learning_curve(const std::vector<edrl::CurvePoint>& curve) {
  bool ok = curve.size() >= 20;
  double first = 0.0, last = 0.0, cov = 0.0;
  if (ok) {
    std::vector<double> head, tail;
    for (std::size_t i = 0; i < 10; ++i) head.push_back(curve[i].total_gain);
    for (std::size_t i = curve.size() - 10; i < curve.size(); ++i)
      tail.push_back(curve[i].total_gain);
    first = mean_of(head);
    last = mean_of(tail);
    double var = 0.0;
    for (double v : tail) var += (v - last) * (v - last);
    var /= 10.0;
    cov = last > 0.0 ? std::sqrt(var) / last : 1e9;
    ok = last >= first - 1e-12 && cov < 0.1;
  }
  report("8", ok,
         "training gain first-10 mean " + fmt(first) + ", last-10 mean " + fmt(last) +
             ", last-10 dispersion " + fmt(cov, 3) + " (target < 0.1)");
}

// ---- 9: analytic gradients and conservation -------------------------------------

double ocnn_grad_err() {
  Rng r(17);
  Mat X(2, 100);
  for (int i = 0; i < 96; ++i) {
    X(0, i) = 0.5 * r.normal();
    X(1, i) = 0.5 * r.normal();
  }
  for (int i = 96; i < 100; ++i) {
    X(0, i) = 6.0 + 0.1 * r.normal();
    X(1, i) = 0.1 * r.normal();
  }
  detect::OcnnConfig cfg;
  cfg.nu = 0.05;
  cfg.hidden = 8;
  cfg.epochs = 30;
  cfg.batch = 20;
  cfg.seed = 5;
  detect::OcnnModel model = detect::train_ocnn(X, cfg);

  nn::Mlp net;
  net.layers = {model.hidden_layer, model.readout};
  // evaluate at the detector's operating point: standardized features passed
  // through the same bell response the model applies internally
  const double width = 3.5;
  const Mat Xs = (-(model.scaler.transform(X).array() / width).square() / 2.0).exp().matrix();
  auto loss = [&] { return nn::mlp_forward(net, Xs).sum(); };
  auto analytic = [&] {
    nn::MlpCache cache;
    nn::mlp_forward(net, Xs, &cache);
    nn::MlpGrads g;
    g.init_like(net);
    nn::mlp_backward(net, cache, Mat::Ones(1, Xs.cols()), g);
    return std::vector<Mat>{g.dW[0], g.db[0], g.dW[1]}; // readout is bias-free
  };
  return nn::grad_check(net.params(), loss, analytic);
}

std::vector<Mat> series_inputs(const detect::GanedModel& m, const behavior::TRSeries& s) {
  Mat raw(3, static_cast<Eigen::Index>(s.points.size()));
  for (std::size_t t = 0; t < s.points.size(); ++t) {
    raw(0, static_cast<Eigen::Index>(t)) = s.points[t].request_count;
    raw(1, static_cast<Eigen::Index>(t)) = s.points[t].workload_mb;
    raw(2, static_cast<Eigen::Index>(t)) = s.points[t].occupancy_s;
  }
  const Mat scaled = m.scaler.transform(raw);
  std::vector<Mat> seq;
  for (Eigen::Index t = 0; t < scaled.cols(); ++t) seq.push_back(scaled.col(t));
  return seq;
}

void ganed_grad_errs(double& enc_err, double& gen_err, double& dis_err) {
  Rng gen(31);
  behavior::DeviceProfile hm;
  hm.app = behavior::default_app_class(behavior::AppKind::HealthMonitoring);
  std::vector<behavior::TRSeries> corpus;
  for (int d = 0; d < 24; ++d) corpus.push_back(behavior::generate_tr_series(hm, d, 60, gen));
  detect::GanedConfig cfg;
  cfg.n_c = 8;
  cfg.n_o = 4;
  cfg.epochs = 4;
  cfg.batch = 8;
  cfg.seed = 9;
  detect::GanedModel m = detect::train_gan_ed(corpus, cfg);

  const std::vector<Mat> seq = series_inputs(m, corpus.front());
  const int T = static_cast<int>(seq.size());
  const int n_c = m.enc_lstm.hidden();

  // encoder: sum of the encoded feature vector (head reads the time-mean state)
  {
    auto pooled = [&](const std::vector<Mat>& hs) {
      Mat p = Mat::Zero(n_c, 1);
      for (const auto& h : hs) p += h;
      return Mat(p / static_cast<double>(hs.size()));
    };
    auto loss = [&] {
      auto hs = nn::lstm_forward(m.enc_lstm, seq);
      return nn::dense_forward(m.enc_head, pooled(hs)).sum();
    };
    auto analytic = [&] {
      nn::LstmCache lc;
      auto hs = nn::lstm_forward(m.enc_lstm, seq, &lc);
      nn::DenseCache hc;
      nn::dense_forward(m.enc_head, pooled(hs), &hc);
      Mat dW = Mat::Zero(m.enc_head.W.rows(), m.enc_head.W.cols());
      Mat db = Mat::Zero(m.enc_head.b.rows(), 1);
      Mat dpool = nn::dense_backward(m.enc_head, hc, Mat::Ones(m.enc_head.W.rows(), 1), dW, db);
      std::vector<Mat> dH(T, Mat(dpool / static_cast<double>(T)));
      nn::LstmGrads lg;
      lg.init_like(m.enc_lstm);
      nn::lstm_backward(m.enc_lstm, lc, dH, lg);
      return std::vector<Mat>{lg.dWx, lg.dWh, lg.db, dW, db};
    };
    enc_err = nn::grad_check(
        {&m.enc_lstm.Wx, &m.enc_lstm.Wh, &m.enc_lstm.b, &m.enc_head.W, &m.enc_head.b}, loss,
        analytic);
  }

  // generator: sum of the reconstruction from one fixed encoding
  {
    const Eigen::VectorXd z = m.encode(corpus.front());
    const std::vector<Mat> zeros(static_cast<std::size_t>(m.series_len), Mat::Zero(1, 1));
    auto loss = [&] {
      const Mat h0 = nn::dense_forward(m.gen_h0, z);
      const Mat c0 = nn::dense_forward(m.gen_c0, z);
      auto hs = nn::lstm_forward(m.gen_lstm, zeros, nullptr, &h0, &c0);
      double total = 0.0;
      for (const auto& h : hs) total += nn::dense_forward(m.gen_head, h).sum();
      return total;
    };
    auto analytic = [&] {
      nn::DenseCache h0c, c0c;
      const Mat h0 = nn::dense_forward(m.gen_h0, z, &h0c);
      const Mat c0 = nn::dense_forward(m.gen_c0, z, &c0c);
      nn::LstmCache lc;
      auto hs = nn::lstm_forward(m.gen_lstm, zeros, &lc, &h0, &c0);
      Mat dW_head = Mat::Zero(m.gen_head.W.rows(), m.gen_head.W.cols());
      Mat db_head = Mat::Zero(m.gen_head.b.rows(), 1);
      std::vector<Mat> dH;
      for (const auto& h : hs) {
        nn::DenseCache hc;
        nn::dense_forward(m.gen_head, h, &hc);
        dH.push_back(
            nn::dense_backward(m.gen_head, hc, Mat::Ones(m.gen_head.W.rows(), 1), dW_head, db_head));
      }
      nn::LstmGrads lg;
      lg.init_like(m.gen_lstm);
      Mat dh0, dc0;
      nn::lstm_backward(m.gen_lstm, lc, dH, lg, &dh0, &dc0);
      Mat dW_h0 = Mat::Zero(m.gen_h0.W.rows(), m.gen_h0.W.cols());
      Mat db_h0 = Mat::Zero(m.gen_h0.b.rows(), 1);
      nn::dense_backward(m.gen_h0, h0c, dh0, dW_h0, db_h0);
      Mat dW_c0 = Mat::Zero(m.gen_c0.W.rows(), m.gen_c0.W.cols());
      Mat db_c0 = Mat::Zero(m.gen_c0.b.rows(), 1);
      nn::dense_backward(m.gen_c0, c0c, dc0, dW_c0, db_c0);
      return std::vector<Mat>{dW_h0, db_h0, dW_c0,       db_c0,        lg.dWx,
                              lg.dWh, lg.db, dW_head, db_head};
    };
    gen_err = nn::grad_check({&m.gen_h0.W, &m.gen_h0.b, &m.gen_c0.W, &m.gen_c0.b, &m.gen_lstm.Wx,
                              &m.gen_lstm.Wh, &m.gen_lstm.b, &m.gen_head.W, &m.gen_head.b},
                             loss, analytic);
  }

  // discriminator: validity logit of the series against a fixed encoding
  {
    const Eigen::VectorXd z = m.encode(corpus.front());
    auto logit = [&]() {
      auto hs = nn::lstm_forward(m.dis_lstm, seq);
      Mat x(n_c + z.size(), 1);
      x.topRows(n_c) = hs.back();
      x.bottomRows(z.size()) = z;
      return nn::dense_forward(m.dis_head, x);
    };
    auto loss = [&] { return logit()(0, 0); };
    auto analytic = [&] {
      nn::LstmCache lc;
      auto hs = nn::lstm_forward(m.dis_lstm, seq, &lc);
      Mat x(n_c + z.size(), 1);
      x.topRows(n_c) = hs.back();
      x.bottomRows(z.size()) = z;
      nn::DenseCache hc;
      nn::dense_forward(m.dis_head, x, &hc);
      Mat dW = Mat::Zero(m.dis_head.W.rows(), m.dis_head.W.cols());
      Mat db = Mat::Zero(m.dis_head.b.rows(), 1);
      Mat dx = nn::dense_backward(m.dis_head, hc, Mat::Ones(1, 1), dW, db);
      std::vector<Mat> dH(T, Mat::Zero(n_c, 1));
      dH.back() = dx.topRows(n_c);
      nn::LstmGrads lg;
      lg.init_like(m.dis_lstm);
      nn::lstm_backward(m.dis_lstm, lc, dH, lg);
      return std::vector<Mat>{lg.dWx, lg.dWh, lg.db, dW, db};
    };
    dis_err = nn::grad_check(
        {&m.dis_lstm.Wx, &m.dis_lstm.Wh, &m.dis_lstm.b, &m.dis_head.W, &m.dis_head.b}, loss,
        analytic);
  }
}

double value_model_grad_err() {
  sim::ScenarioConfig cfg;
  cfg.seed = 3;
  cfg.devices.count = 4;
  cfg.servers.count = 2;
  cfg.edrl.levels = 4;
  cfg.sim.epochs = 6;
  cfg.sim.epoch_requests = 30;
  sim::Scenario sc = sim::build_scenario(cfg);
  edrl::ValueModel vm = *sim::run_scenario(sc, sim::AllocatorKind::Edrl).model;

  edrl::AfterActionState s;
  for (const auto& server : sc.servers) {
    rfta::ResourceVector avail = server.capacity;
    for (double& a : avail) a *= 0.6;
    s.available.push_back(avail);
  }
  s.demand = {0.1, 0.2, 0.1};
  s.budget = 0.5;

  // make sure the probed table entries are live so the feature path matters
  for (std::size_t j = 0; j < vm.num_servers; ++j) {
    const std::size_t idx = edrl::partial_state_index(s.available[j], vm.capacity[j], vm.levels);
    vm.V(static_cast<Eigen::Index>(idx), static_cast<Eigen::Index>(j)) += 0.25;
  }

  auto loss = [&] { return edrl::approximate_value(vm, s); };
  auto analytic = [&] {
    const Mat x = edrl::feature_input(vm, s);
    nn::MlpCache cache;
    const Mat phi = nn::mlp_forward(vm.feature_net, x, &cache);
    Mat dV = Mat::Zero(vm.V.rows(), vm.V.cols());
    Mat dy = Mat::Zero(phi.rows(), 1);
    for (std::size_t j = 0; j < vm.num_servers; ++j) {
      const std::size_t idx = edrl::partial_state_index(s.available[j], vm.capacity[j], vm.levels);
      dV(static_cast<Eigen::Index>(idx), static_cast<Eigen::Index>(j)) =
          phi(static_cast<Eigen::Index>(j), 0);
      dy(static_cast<Eigen::Index>(j), 0) =
          vm.V(static_cast<Eigen::Index>(idx), static_cast<Eigen::Index>(j));
    }
    nn::MlpGrads g;
    g.init_like(vm.feature_net);
    nn::mlp_backward(vm.feature_net, cache, dy, g);
    return std::vector<Mat>{dV,      g.dW[0], g.db[0], g.dW[1],
                            g.db[1], g.dW[2], g.db[2]};
  };
  return nn::grad_check(vm.trainable_params(), loss, analytic);
}

void check_gradients_and_conservation() {
  double worst = ocnn_grad_err();
  double enc = 0.0, genr = 0.0, dis = 0.0;
  ganed_grad_errs(enc, genr, dis);
  worst = std::max({worst, enc, genr, dis, value_model_grad_err()});

  bool conserved = true;
  std::uint64_t events = 0;
  std::string why;
  try {
    sim::ScenarioConfig cfg;
    cfg.seed = 8;
    cfg.devices.count = 12;
    cfg.devices.lambda = 0.5;
    cfg.servers.count = 3;
    cfg.servers.capacity = 0.5;
    cfg.sim.epochs = 110;
    cfg.sim.epoch_requests = 50;
    // the engine revalidates resource conservation after every queue event
    events = sim::run_scenario(sim::build_scenario(cfg), sim::AllocatorKind::Greedy)
                 .metrics.events;
  } catch (const std::exception& e) {
    conserved = false;
    why = e.what();
  }

  report("9", worst < 1e-4 && conserved && events >= 10000,
         "worst analytic-vs-numeric gradient error " + fmt(worst, 3) +
             " (target < 1e-4); conservation held over " + std::to_string(events) + " events" +
             (why.empty() ? "" : " (" + why + ")"));
}

// ---- 10 and CLI conformance -----------------------------------------------------

int run_cmd(const std::string& cmd) {
  const int rc = std::system(cmd.c_str());
  if (rc == -1) return -1;
  if (WIFEXITED(rc)) return WEXITSTATUS(rc);
  return -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    out.push_back(line);
  }
  return out;
}

std::map<std::string, fs::path> tree_files(const fs::path& root) {
  std::map<std::string, fs::path> out;
  for (const auto& entry : fs::recursive_directory_iterator(root))
    if (entry.is_regular_file()) out[fs::relative(entry.path(), root).string()] = entry.path();
  return out;
}

void check_cli(const std::string& cli) {
  const fs::path tmp =
      fs::temp_directory_path() / ("edgesim-accept-" + std::to_string(::getpid()));
  fs::remove_all(tmp);
  fs::create_directories(tmp);

  const fs::path cfg = tmp / "base.json";
  std::ofstream(cfg) << R"({"seed": 5, "devices": {"count": 4}, "servers": {"count": 2},
                           "sim": {"epochs": 6, "epoch_requests": 20}})";

  // 10: byte-identical outputs for identical seeds
  {
    const fs::path out_a = tmp / "outA", out_b = tmp / "outB";
    const int rc_a = run_cmd(cli + " --config " + cfg.string() + " --out " + out_a.string() +
                             " --quiet simulate");
    const int rc_b = run_cmd(cli + " --config " + cfg.string() + " --out " + out_b.string() +
                             " --quiet simulate");
    bool ok = rc_a == 0 && rc_b == 0;
    std::size_t compared = 0;
    if (ok) {
      auto fa = tree_files(out_a);
      auto fb = tree_files(out_b);
      ok = !fa.empty() && fa.size() == fb.size();
      for (const auto& [rel, path] : fa) {
        if (!fb.count(rel)) {
          ok = false;
          break;
        }
        if (fs::path(rel).filename() == "manifest.json") continue; // carries wall-clock timing
        ok = ok && slurp(path) == slurp(fb.at(rel));
        ++compared;
      }
      ok = ok && compared >= 8;
    }
    report("10", ok,
           "repeat runs with one seed write byte-identical outputs (" +
               std::to_string(compared) + " files compared)");
  }

  // sweep fan-out
  {
    const fs::path cfg_sweep = tmp / "sweep.json";
    std::ofstream(cfg_sweep) << R"({"seed": 5, "devices": {"count": 6},
      "sim": {"epochs": 3, "epoch_requests": 15},
      "sweep": {"axis": "servers", "values": [2, 4, 8]}})";
    const fs::path out_s = tmp / "outS";
    const int rc = run_cmd(cli + " --config " + cfg_sweep.string() + " --out " + out_s.string() +
                           " --allocator greedy --quiet simulate");
    std::size_t dirs = 0, tagged = 0;
    if (rc == 0 && fs::exists(out_s))
      for (const auto& entry : fs::directory_iterator(out_s))
        if (entry.is_directory()) {
          ++dirs;
          if (entry.path().filename().string().rfind("servers-", 0) == 0) ++tagged;
        }
    report("cli-sweep", rc == 0 && dirs == 3 && tagged == 3,
           "a three-value server sweep produced " + std::to_string(dirs) + " tagged run dirs");
  }

  // detector benchmark honors the granularity filter
  {
    const fs::path cfg_det = tmp / "det.json";
    std::ofstream(cfg_det) << R"({"seed": 3, "devices": {"count": 4},
      "detection": {"bootstrap_records": 64, "epochs": 3, "batch": 16, "sr_hidden": 8}})";
    const fs::path out_d = tmp / "outD";
    const int rc = run_cmd(cli + " --config " + cfg_det.string() + " --out " + out_d.string() +
                           " --quiet detect --granularity sr");
    bool ok = rc == 0;
    std::size_t rows = 0;
    if (ok) {
      fs::path csv;
      if (fs::exists(out_d))
        for (const auto& entry : fs::recursive_directory_iterator(out_d))
          if (entry.path().filename() == "detection.csv") csv = entry.path();
      ok = !csv.empty();
      if (ok) {
        auto ls = lines_of(slurp(csv));
        ok = ls.size() >= 2 && ls[0].rfind("model,", 0) == 0;
        for (std::size_t i = 1; i < ls.size(); ++i) {
          if (ls[i].empty()) continue;
          ++rows;
          ok = ok && ls[i].rfind("ocnn,", 0) == 0;
        }
        ok = ok && rows == 1;
      }
    }
    report("cli-detect", ok, "per-request-only benchmark wrote a single ocnn row");
  }

  // offline index from a history file
  {
    const fs::path cfg_brdi = tmp / "brdi.json";
    std::ofstream(cfg_brdi) << R"({"brdi": {"alpha": 0.6931471805599453}})";
    const fs::path hist = tmp / "history.csv";
    std::ofstream(hist) << "device_id,granularity,timestamp,score\n0,sr,1,0\n0,sr,2,1\n";
    const fs::path out_txt = tmp / "brdi_out.txt";
    const int rc = run_cmd(cli + " --config " + cfg_brdi.string() + " brdi --history " +
                           hist.string() + " > " + out_txt.string());
    bool ok = rc == 0;
    if (ok) {
      auto ls = lines_of(slurp(out_txt));
      ok = ls.size() == 2 && ls[0] == "device_id,gamma_sr,gamma_tr,gamma_total";
      if (ok) {
        std::istringstream row(ls[1]);
        std::string dev, gsr, gtr, gt;
        std::getline(row, dev, ',');
        std::getline(row, gsr, ',');
        std::getline(row, gtr, ',');
        std::getline(row, gt, ',');
        // cooled average of [1, 0] newest-first with half-life decay
        ok = dev == "0" && std::abs(std::stod(gsr) - 2.0 / 3.0) < 1e-9 && gtr == "1";
      }
    }
    report("cli-brdi", ok, "offline index reproduces the cooled-average arithmetic");
  }

  // empty history warns and falls back to the prior
  {
    const fs::path hist = tmp / "empty.csv";
    std::ofstream(hist) << "device_id,granularity,timestamp,score\n";
    const fs::path err_txt = tmp / "brdi_err.txt";
    const int rc =
        run_cmd(cli + " brdi --history " + hist.string() + " 2> " + err_txt.string());
    const std::string err = slurp(err_txt);
    report("cli-empty-history", rc == 0 && err.find("empty history") != std::string::npos,
           "an empty history exits cleanly with a prior fallback warning");
  }

  // a missing config path is a usage error
  {
    const int rc = run_cmd(cli + " --config " + (tmp / "absent.json").string() +
                           " simulate 2> /dev/null");
    report("cli-missing-config", rc == 2, "a missing config path exits with code 2");
  }

  fs::remove_all(tmp);
}

} // namespace

int main(int argc, char** argv) {
  std::cout << "acceptance checks\n";
  const auto t0 = Clock::now();

  check_policy_vs_oracle();
  const std::vector<edrl::CurvePoint> curve = check_envy_freeness();
  check_zero_gamma_exclusion();
  check_detector_quality();
  check_scaling_sweeps();
  check_index_priority_ordering();
  check_load_profiles();
  check_learning_curve(curve);
  check_gradients_and_conservation();

  if (argc > 1) {
    check_cli(argv[1]);
  } else {
    report("10", false, "no CLI binary path was supplied");
  }

  std::cout << (failures == 0 ? "all checks passed" : std::to_string(failures) + " check(s) failed")
            << " in " << fmt(elapsed_s(t0)) << " s\n";
  return failures;
}
