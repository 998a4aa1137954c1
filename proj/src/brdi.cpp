#include "edgesim/brdi.hpp"

#include <cmath>
#include <stdexcept>

namespace edgesim::brdi {

namespace {

void check_score(double score) {
  if (!(score >= 0.0 && score <= 1.0))
    throw std::invalid_argument("normality score outside [0,1]");
}

} // namespace

BRDHistory::BRDHistory(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("history capacity must be > 0");
}

void BRDHistory::push_sr(double timestamp, double score) {
  check_score(score);
  if (!sr_.empty() && timestamp < sr_.back().first)
    throw std::invalid_argument("per-request history must stay time-ordered");
  sr_.emplace_back(timestamp, score);
  if (sr_.size() > capacity_) sr_.pop_front();
}

void BRDHistory::push_tr(long day, double score) {
  check_score(score);
  if (!tr_.empty() && day < tr_.back().first)
    throw std::invalid_argument("daily history must stay time-ordered");
  tr_.emplace_back(day, score);
}

std::vector<double> BRDHistory::sr_scores_newest_first() const {
  std::vector<double> out;
  out.reserve(sr_.size());
  for (auto it = sr_.rbegin(); it != sr_.rend(); ++it) out.push_back(it->second);
  return out;
}

std::vector<double> BRDHistory::tr_scores_newest_first() const {
  std::vector<double> out;
  out.reserve(tr_.size());
  for (auto it = tr_.rbegin(); it != tr_.rend(); ++it) out.push_back(it->second);
  return out;
}

double cooled_average(const std::vector<double>& newest_first, double alpha,
                      bool normalized, double prior) {
  if (alpha <= 0.0) throw std::invalid_argument("decay rate must be > 0");
  if (newest_first.empty()) return prior;
  double num = 0.0, den = 0.0;
  for (std::size_t t = 0; t < newest_first.size(); ++t) {
    check_score(newest_first[t]);
    double w = std::exp(-alpha * static_cast<double>(t + 1));
    num += newest_first[t] * w;
    den += w;
  }
  return normalized ? num / den : num;
}

double gamma_sr(const BRDHistory& h, const Config& cfg) {
  return cooled_average(h.sr_scores_newest_first(), cfg.alpha, cfg.normalized,
                        cfg.empty_prior);
}

double gamma_tr(const BRDHistory& h, const Config& cfg) {
  return cooled_average(h.tr_scores_newest_first(), cfg.alpha, cfg.normalized,
                        cfg.empty_prior);
}

double brdi_total(double gamma_sr, double gamma_tr, double beta1, double beta2) {
  if (beta1 < 0.0 || beta2 < 0.0)
    throw std::invalid_argument("fusion weights must be nonnegative");
  if (std::abs(beta1 + beta2 - 1.0) > 1e-9)
    throw std::invalid_argument("fusion weights must sum to 1");
  check_score(gamma_sr);
  check_score(gamma_tr);
  return beta1 * gamma_sr + beta2 * gamma_tr;
}

double brdi(const BRDHistory& h, const Config& cfg) {
  return brdi_total(gamma_sr(h, cfg), gamma_tr(h, cfg), cfg.beta1, cfg.beta2);
}

} // namespace edgesim::brdi
