// Behavior index bookkeeping: per-device detection histories and the decayed
// normality average that feeds budget assignment.
#pragma once

#include <cstddef>
#include <deque>
#include <vector>

namespace edgesim::brdi {

struct Config {
  double alpha = 0.1;     // cooling decay rate, > 0
  std::size_t capacity = 50; // retained per-request records
  double beta1 = 0.5;     // weight of the per-request index
  double beta2 = 0.5;     // weight of the daily index
  double empty_prior = 1.0; // index reported before any evidence exists
  bool normalized = true; // divide the cooled sum by the weight total
};

// Rolling evidence for one device. Per-request scores are capacity-trimmed,
// daily scores are kept for the whole run (one per simulated day).
class BRDHistory {
public:
  explicit BRDHistory(std::size_t capacity = 50);

  // score is a normality probability in [0,1]; timestamps must not decrease.
  void push_sr(double timestamp, double score);
  void push_tr(long day, double score);

  // newest first, trimmed to capacity
  std::vector<double> sr_scores_newest_first() const;
  std::vector<double> tr_scores_newest_first() const;

  std::size_t sr_size() const { return sr_.size(); }
  std::size_t tr_size() const { return tr_.size(); }
  std::size_t capacity() const { return capacity_; }

private:
  std::size_t capacity_;
  std::deque<std::pair<double, double>> sr_; // (timestamp, score), oldest first
  std::vector<std::pair<long, double>> tr_;  // (day, score), oldest first
};

// Cooled average of scores ordered newest first (t = 1 is the newest):
// sum P_t e^{-alpha t}, divided by sum e^{-alpha t} when normalized.
// Empty input returns prior.
double cooled_average(const std::vector<double>& newest_first, double alpha,
                      bool normalized = true, double prior = 1.0);

double gamma_sr(const BRDHistory& h, const Config& cfg);
double gamma_tr(const BRDHistory& h, const Config& cfg);

// Weighted fusion; beta1 + beta2 must equal 1 within 1e-9.
double brdi_total(double gamma_sr, double gamma_tr, double beta1, double beta2);

double brdi(const BRDHistory& h, const Config& cfg);

} // namespace edgesim::brdi
