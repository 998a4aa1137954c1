// One-class detectors: a neural one-class classifier over per-request
// feature vectors, and a minimax-trained encoder/generator/discriminator
// triple whose encoder feeds a second one-class head for day-long series.
#pragma once

#include <cstdint>
#include <vector>

#include "edgesim/behavior.hpp"
#include "edgesim/nn.hpp"

namespace edgesim::detect {

using Mat = nn::Mat;

// Per-feature standardization, fit on training data only. Constant features
// get unit scale so transform stays finite.
struct Scaler {
  Eigen::VectorXd mean, sd;
  void fit(const Mat& X); // X is features x samples
  Mat transform(const Mat& X) const;
  bool fitted() const { return mean.size() > 0; }
};

struct F1 {
  double precision = 0.0, recall = 0.0, f1 = 0.0;
};

// decisions/labels: 1 = anomalous (positive class), 0 = normal.
F1 f1_score(const std::vector<int>& decisions, const std::vector<int>& labels);

// ---- One-class classifier ---------------------------------------------------

struct OcnnConfig {
  double nu = 0.04;   // assumed contamination fraction, in (0,1)
  int hidden = 16;
  int epochs = 60;
  int batch = 32;
  double kappa = 4.0; // sharpness of the margin-to-probability squash
  double lr = 5e-2;
  std::uint64_t seed = 1;
};

struct OcnnModel {
  nn::DenseLayer hidden_layer; // sigmoid; bias included in the norm penalty
  nn::DenseLayer readout;      // 1-row linear, no bias (r plays that role)
  double r = 0.0;              // decision boundary bias
  double nu = 0.04;
  double kappa = 4.0;
  Scaler scaler;
  std::vector<double> loss_curve;

  // margin = <w, g(V psi(x))> - r, where x is the standardized feature
  // vector and psi is a per-coordinate bell response that decays away from
  // the training bulk
  Eigen::VectorXd margins(const Mat& raw) const;
  double margin(const Eigen::VectorXd& raw) const;
  // normality probability sigmoid(kappa * margin)
  double score(const Eigen::VectorXd& raw) const;
};

// corpus_raw is features x N, unscaled and unlabeled. Throws
// nn::DivergenceError if the loss goes non-finite.
OcnnModel train_ocnn(const Mat& corpus_raw, const OcnnConfig& cfg);

// ---- Encoder / generator / discriminator triple -------------------------------

struct GanedConfig {
  int n_c = 64;  // recurrent width
  int n_o = 16;  // encoded feature count
  int epochs = 20;
  int batch = 32;
  double lr = 1e-3;
  std::uint64_t seed = 1;
};

struct GanedModel {
  // encoder: series -> feature vector
  nn::LstmCell enc_lstm;
  nn::DenseLayer enc_head; // n_c -> n_o, linear, on the time-mean recurrent state
  // generator: noise -> series, via mapped initial recurrent state and zero inputs
  nn::DenseLayer gen_h0;   // n_o -> n_c, linear
  nn::DenseLayer gen_c0;   // n_o -> n_c, linear
  nn::LstmCell gen_lstm;   // 1 -> n_c, inputs are zeros
  nn::DenseLayer gen_head; // n_c -> attrs, linear, shared across steps
  // discriminator: (series, feature) -> validity logit
  nn::LstmCell dis_lstm;
  nn::DenseLayer dis_head; // (n_c + n_o) -> 1, linear logit

  Scaler scaler; // per attribute, over every slot of the training corpus
  int series_len = 0;
  int attrs = 3; // request count, workload, occupancy
  std::vector<double> d_loss_curve, eg_loss_curve;

  Eigen::VectorXd encode(const behavior::TRSeries& series) const;
  // reconstruction from noise, in scaled space: attrs x series_len
  Mat generate(const Eigen::VectorXd& z) const;
  double discriminate(const behavior::TRSeries& series) const; // D(x, E(x)) in (0,1)
};

GanedModel train_gan_ed(const std::vector<behavior::TRSeries>& corpus,
                        const GanedConfig& cfg);

// ---- Composite day-series detector --------------------------------------------

struct TrDetector {
  GanedModel ganed; // encoder frozen
  OcnnModel head;   // one-class head on encoded features
  double score(const behavior::TRSeries& series) const;
};

TrDetector train_tr_detector(GanedModel ganed,
                             const std::vector<behavior::TRSeries>& corpus,
                             const OcnnConfig& head_cfg);

// ---- Corpus plumbing -----------------------------------------------------------

// Numeric per-request features: duration, workload, cpu, mem, disk io,
// occupancy, connection count. Returns features x N.
Mat sr_feature_matrix(const std::vector<behavior::SRRecord>& records);
std::vector<int> sr_labels(const std::vector<behavior::SRRecord>& records);

// A series is anomalous if any point in it is labeled anomalous.
std::vector<int> tr_labels(const std::vector<behavior::TRSeries>& corpus);

} // namespace edgesim::detect
