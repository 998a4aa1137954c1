#include "edgesim/detect.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace edgesim::detect {

using nn::Act;
using nn::DenseCache;
using nn::LstmCache;
using nn::Mat;

namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

double softplus(double z) {
  if (z > 30.0) return z;
  if (z < -30.0) return std::exp(z);
  return std::log1p(std::exp(z));
}

// In-place Fisher-Yates with the substrate RNG, so shuffles are seeded.
void shuffle_indices(std::vector<std::size_t>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng.uniform() * static_cast<double>(i));
    if (j >= i) j = i - 1;
    std::swap(v[i - 1], v[j]);
  }
}

Mat fill_normal(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Mat m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = rng.normal();
  return m;
}

} // namespace

// ---- Scaler -------------------------------------------------------------------

void Scaler::fit(const Mat& X) {
  if (X.cols() == 0) throw std::invalid_argument("scaler needs at least one sample");
  mean = X.rowwise().mean();
  Eigen::VectorXd var = (X.colwise() - mean).array().square().matrix().rowwise().mean();
  sd = var.array().sqrt();
  for (Eigen::Index i = 0; i < sd.size(); ++i)
    if (sd(i) < 1e-12) sd(i) = 1.0; // constant feature, leave it centered only
}

Mat Scaler::transform(const Mat& X) const {
  if (!fitted()) throw std::logic_error("scaler used before fit");
  if (X.rows() != mean.size()) throw std::invalid_argument("scaler feature count mismatch");
  return (X.colwise() - mean).array().colwise() / sd.array();
}

// ---- F1 -----------------------------------------------------------------------

F1 f1_score(const std::vector<int>& decisions, const std::vector<int>& labels) {
  if (decisions.empty() || decisions.size() != labels.size())
    throw std::invalid_argument("decision/label lists must be nonempty and equal length");
  double tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < decisions.size(); ++i) {
    if (decisions[i] == 1 && labels[i] == 1) ++tp;
    else if (decisions[i] == 1 && labels[i] == 0) ++fp;
    else if (decisions[i] == 0 && labels[i] == 1) ++fn;
  }
  F1 out;
  out.precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
  out.recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
  out.f1 = out.precision + out.recall > 0
               ? 2.0 * out.precision * out.recall / (out.precision + out.recall)
               : 0.0;
  return out;
}

// ---- One-class classifier -------------------------------------------------------

namespace {

// how many standard deviations of displacement still count as the bulk
constexpr double kResponseWidth = 3.5;

// Per-coordinate bell response exp(-(z/width)^2/2) on standardized features.
// Every coordinate of a far point decays toward zero together, so outliers
// land on a common score floor with vanishing gradients there. That matters
// for the hinge term: raw coordinates would let the boundary update push
// individual far points back above r, and training then walks the margin of
// exactly the points it should leave behind.
Mat bulk_response(const Mat& scaled) {
  return (-(scaled.array() / kResponseWidth).square() / 2.0).exp().matrix();
}

} // namespace

Eigen::VectorXd OcnnModel::margins(const Mat& raw) const {
  Mat x = bulk_response(scaler.transform(raw));
  if (!x.allFinite()) throw std::invalid_argument("non-finite features");
  Mat h = nn::dense_forward(hidden_layer, x);
  Mat s = nn::dense_forward(readout, h);
  return (s.row(0).array() - r).matrix().transpose();
}

double OcnnModel::margin(const Eigen::VectorXd& raw) const { return margins(raw)(0); }

double OcnnModel::score(const Eigen::VectorXd& raw) const {
  return sigmoid(kappa * margin(raw));
}

OcnnModel train_ocnn(const Mat& corpus_raw, const OcnnConfig& cfg) {
  if (corpus_raw.cols() == 0) throw std::invalid_argument("empty training corpus");
  if (!(cfg.nu > 0.0 && cfg.nu < 1.0)) throw std::invalid_argument("nu must lie in (0,1)");
  if (cfg.hidden <= 0 || cfg.epochs <= 0 || cfg.batch <= 0)
    throw std::invalid_argument("hidden/epochs/batch must be positive");

  Rng rng(cfg.seed);
  OcnnModel m;
  m.nu = cfg.nu;
  m.kappa = cfg.kappa;
  m.scaler.fit(corpus_raw);
  Mat X = bulk_response(m.scaler.transform(corpus_raw));
  const auto N = X.cols();

  // Nonnegative weights with a fixed negative bias start every unit as an
  // increasing function of the bell features, so bulk points score high and
  // far points score near the floor from the first epoch. A sign-mixed start
  // leaves outliers on a knife edge where the boundary cannot rank them.
  m.hidden_layer = nn::make_dense(static_cast<int>(X.rows()), cfg.hidden, Act::Sigmoid,
                                  rng, /*use_bias=*/true);
  m.hidden_layer.W = m.hidden_layer.W.cwiseAbs();
  m.hidden_layer.b.setConstant(-1.0);
  m.readout = nn::make_dense(cfg.hidden, 1, Act::Linear, rng, /*use_bias=*/false);
  m.readout.W = m.readout.W.cwiseAbs();
  m.r = 0.0;

  nn::Optimizer opt(nn::Algo::SGD, cfg.lr);
  std::vector<std::size_t> order(static_cast<std::size_t>(N));
  std::iota(order.begin(), order.end(), 0);

  auto raw_scores = [&]() {
    Mat h = nn::dense_forward(m.hidden_layer, X);
    Mat s = nn::dense_forward(m.readout, h);
    return s;
  };

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_indices(order, rng);
    double epoch_loss = 0.0;
    int batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
      std::size_t B = std::min<std::size_t>(cfg.batch, order.size() - start);
      Mat xb(X.rows(), B);
      for (std::size_t b = 0; b < B; ++b)
        xb.col(b) = X.col(static_cast<Eigen::Index>(order[start + b]));

      DenseCache c1, c2;
      Mat h = nn::dense_forward(m.hidden_layer, xb, &c1);
      Mat s = nn::dense_forward(m.readout, h, &c2);

      double hinge = 0.0;
      Mat ds = Mat::Zero(1, B);
      double inv = 1.0 / (cfg.nu * static_cast<double>(B));
      for (std::size_t b = 0; b < B; ++b) {
        double gap = m.r - s(0, static_cast<Eigen::Index>(b));
        if (gap > 0.0) {
          hinge += gap * inv;
          ds(0, static_cast<Eigen::Index>(b)) = -inv;
        }
      }
      double loss = 0.5 * (m.hidden_layer.W.squaredNorm() + m.hidden_layer.b.squaredNorm() +
                           m.readout.W.squaredNorm()) +
                    hinge - m.r;
      if (!std::isfinite(loss)) throw nn::DivergenceError("one-class training diverged");
      epoch_loss += loss;
      ++batches;

      Mat dW1 = Mat::Zero(m.hidden_layer.W.rows(), m.hidden_layer.W.cols());
      Mat dW2 = Mat::Zero(m.readout.W.rows(), m.readout.W.cols());
      Mat db1 = Mat::Zero(m.hidden_layer.b.rows(), 1);
      Mat db_unused2 = Mat::Zero(m.readout.b.rows(), 1);
      Mat dh = nn::dense_backward(m.readout, c2, ds, dW2, db_unused2);
      nn::dense_backward(m.hidden_layer, c1, dh, dW1, db1);
      // norm-penalty gradient; the hidden bias shrinks too, otherwise it
      // could saturate every unit and flatten the score
      dW1 += m.hidden_layer.W;
      db1 += m.hidden_layer.b;
      dW2 += m.readout.W;
      opt.step({&m.hidden_layer.W, &m.hidden_layer.b, &m.readout.W},
               {&dW1, &db1, &dW2});
    }
    // boundary update: r tracks the nu-quantile of the raw scores
    Mat s = raw_scores();
    std::vector<double> vals(s.data(), s.data() + s.size());
    std::sort(vals.begin(), vals.end());
    std::size_t qi = static_cast<std::size_t>(cfg.nu * static_cast<double>(vals.size()));
    if (qi >= vals.size()) qi = vals.size() - 1;
    m.r = vals[qi];
    m.loss_curve.push_back(epoch_loss / std::max(batches, 1));
  }
  return m;
}

// ---- Encoder / generator / discriminator ----------------------------------------

namespace {

// corpus rows for one series: attrs x T in scaled space
Mat series_columns(const behavior::TRSeries& s) {
  Mat m(3, static_cast<Eigen::Index>(s.points.size()));
  for (std::size_t t = 0; t < s.points.size(); ++t) {
    m(0, static_cast<Eigen::Index>(t)) = static_cast<double>(s.points[t].request_count);
    m(1, static_cast<Eigen::Index>(t)) = s.points[t].workload_mb;
    m(2, static_cast<Eigen::Index>(t)) = s.points[t].occupancy_s;
  }
  return m;
}

// gather a scaled minibatch as per-step matrices (attrs x B)
std::vector<Mat> gather_steps(const std::vector<behavior::TRSeries>& corpus,
                              const std::vector<std::size_t>& idx, std::size_t start,
                              std::size_t B, const Scaler& scaler, int T) {
  std::vector<Mat> steps(static_cast<std::size_t>(T), Mat(3, B));
  for (std::size_t b = 0; b < B; ++b) {
    Mat cols = scaler.transform(series_columns(corpus[idx[start + b]]));
    for (int t = 0; t < T; ++t) steps[static_cast<std::size_t>(t)].col(static_cast<Eigen::Index>(b)) = cols.col(t);
  }
  return steps;
}

struct EncoderPass {
  LstmCache lstm;
  DenseCache head;
  Mat features; // n_o x B
};

// recurrent states are pooled over time before the head so that every slot
// keeps a direct path into the feature vector; reading only the final state
// lets the cell forget deviations early in the day
Mat pooled_states(const std::vector<Mat>& hs) {
  Mat pooled = Mat::Zero(hs.front().rows(), hs.front().cols());
  for (const auto& h : hs) pooled += h;
  return pooled / static_cast<double>(hs.size());
}

EncoderPass encode_batch(const GanedModel& m, const std::vector<Mat>& steps) {
  EncoderPass p;
  auto hs = nn::lstm_forward(m.enc_lstm, steps, &p.lstm);
  p.features = nn::dense_forward(m.enc_head, pooled_states(hs), &p.head);
  return p;
}

struct GeneratorPass {
  DenseCache h0, c0;
  LstmCache lstm;
  std::vector<DenseCache> head;
  std::vector<Mat> series; // per step, attrs x B
};

GeneratorPass generate_batch(const GanedModel& m, const Mat& z, int T) {
  GeneratorPass p;
  Mat h0 = nn::dense_forward(m.gen_h0, z, &p.h0);
  Mat c0 = nn::dense_forward(m.gen_c0, z, &p.c0);
  std::vector<Mat> zero_steps(static_cast<std::size_t>(T), Mat::Zero(1, z.cols()));
  auto hs = nn::lstm_forward(m.gen_lstm, zero_steps, &p.lstm, &h0, &c0);
  p.head.resize(static_cast<std::size_t>(T));
  p.series.resize(static_cast<std::size_t>(T));
  for (int t = 0; t < T; ++t) {
    auto ti = static_cast<std::size_t>(t);
    p.series[ti] = nn::dense_forward(m.gen_head, hs[ti], &p.head[ti]);
  }
  return p;
}

struct DiscriminatorPass {
  LstmCache lstm;
  DenseCache head;
  Mat concat; // (n_c + n_o) x B
  Mat logit;  // 1 x B
};

DiscriminatorPass discriminate_batch(const GanedModel& m, const std::vector<Mat>& steps,
                                     const Mat& features) {
  DiscriminatorPass p;
  auto hs = nn::lstm_forward(m.dis_lstm, steps, &p.lstm);
  const Mat& hT = hs.back();
  p.concat.resize(hT.rows() + features.rows(), hT.cols());
  p.concat.topRows(hT.rows()) = hT;
  p.concat.bottomRows(features.rows()) = features;
  p.logit = nn::dense_forward(m.dis_head, p.concat, &p.head);
  return p;
}

struct DisGrads {
  nn::LstmGrads lstm;
  Mat dW_head, db_head;
  void init(const GanedModel& m) {
    lstm.init_like(m.dis_lstm);
    dW_head = Mat::Zero(m.dis_head.W.rows(), m.dis_head.W.cols());
    db_head = Mat::Zero(m.dis_head.b.rows(), 1);
  }
};

// Backprop a logit gradient through the discriminator. Returns the gradient
// with respect to the concat input; optionally also the gradient with
// respect to the input sequence (needed when training the generator).
Mat dis_backward(const GanedModel& m, DiscriminatorPass& p, const Mat& dlogit,
                 DisGrads& g, std::vector<Mat>* dseq) {
  Mat dconcat = nn::dense_backward(m.dis_head, p.head, dlogit, g.dW_head, g.db_head);
  if (dseq) {
    const auto H = m.dis_lstm.hidden();
    std::vector<Mat> dH(p.lstm.steps.size(),
                        Mat::Zero(H, dconcat.cols()));
    dH.back() = dconcat.topRows(H);
    *dseq = nn::lstm_backward(m.dis_lstm, p.lstm, dH, g.lstm);
  }
  return dconcat;
}

} // namespace

Eigen::VectorXd GanedModel::encode(const behavior::TRSeries& series) const {
  if (static_cast<int>(series.points.size()) != series_len)
    throw std::invalid_argument("series length does not match the trained model");
  Mat cols = scaler.transform(series_columns(series));
  std::vector<Mat> steps(static_cast<std::size_t>(series_len));
  for (int t = 0; t < series_len; ++t)
    steps[static_cast<std::size_t>(t)] = cols.col(t);
  auto hs = nn::lstm_forward(enc_lstm, steps);
  return nn::dense_forward(enc_head, pooled_states(hs)).col(0);
}

Mat GanedModel::generate(const Eigen::VectorXd& z) const {
  GeneratorPass p = generate_batch(*this, z, series_len);
  Mat out(attrs, series_len);
  for (int t = 0; t < series_len; ++t) out.col(t) = p.series[static_cast<std::size_t>(t)].col(0);
  return out;
}

double GanedModel::discriminate(const behavior::TRSeries& series) const {
  Mat cols = scaler.transform(series_columns(series));
  std::vector<Mat> steps(static_cast<std::size_t>(series_len));
  for (int t = 0; t < series_len; ++t)
    steps[static_cast<std::size_t>(t)] = cols.col(t);
  Mat feat = encode(series);
  DiscriminatorPass p = discriminate_batch(*this, steps, feat);
  return sigmoid(p.logit(0, 0));
}

GanedModel train_gan_ed(const std::vector<behavior::TRSeries>& corpus,
                        const GanedConfig& cfg) {
  if (corpus.empty()) throw std::invalid_argument("empty training corpus");
  if (cfg.n_c <= 0 || cfg.n_o <= 0 || cfg.epochs <= 0 || cfg.batch <= 0)
    throw std::invalid_argument("n_c/n_o/epochs/batch must be positive");
  if (corpus.size() < static_cast<std::size_t>(cfg.batch))
    throw std::invalid_argument("corpus smaller than batch size");
  const int T = static_cast<int>(corpus.front().points.size());
  if (T == 0) throw std::invalid_argument("series have no points");
  for (const auto& s : corpus)
    if (static_cast<int>(s.points.size()) != T)
      throw std::invalid_argument("all series must share one length");

  Rng rng(cfg.seed);
  GanedModel m;
  m.series_len = T;

  { // per-attribute scaling over every slot
    Mat all(3, static_cast<Eigen::Index>(corpus.size()) * T);
    Eigen::Index c = 0;
    for (const auto& s : corpus) {
      all.middleCols(c, T) = series_columns(s);
      c += T;
    }
    m.scaler.fit(all);
  }

  m.enc_lstm = nn::make_lstm(3, cfg.n_c, rng);
  m.enc_head = nn::make_dense(cfg.n_c, cfg.n_o, Act::Linear, rng);
  m.gen_h0 = nn::make_dense(cfg.n_o, cfg.n_c, Act::Linear, rng);
  m.gen_c0 = nn::make_dense(cfg.n_o, cfg.n_c, Act::Linear, rng);
  m.gen_lstm = nn::make_lstm(1, cfg.n_c, rng);
  m.gen_head = nn::make_dense(cfg.n_c, 3, Act::Linear, rng);
  m.dis_lstm = nn::make_lstm(3, cfg.n_c, rng);
  m.dis_head = nn::make_dense(cfg.n_c + cfg.n_o, 1, Act::Linear, rng);

  std::vector<Mat*> d_params = {&m.dis_lstm.Wx, &m.dis_lstm.Wh, &m.dis_lstm.b,
                                &m.dis_head.W, &m.dis_head.b};
  std::vector<Mat*> eg_params = {&m.enc_lstm.Wx, &m.enc_lstm.Wh, &m.enc_lstm.b,
                                 &m.enc_head.W, &m.enc_head.b,
                                 &m.gen_h0.W,   &m.gen_h0.b,
                                 &m.gen_c0.W,   &m.gen_c0.b,
                                 &m.gen_lstm.Wx, &m.gen_lstm.Wh, &m.gen_lstm.b,
                                 &m.gen_head.W, &m.gen_head.b};

  nn::Optimizer opt_d(nn::Algo::Adam, cfg.lr);
  nn::Optimizer opt_eg(nn::Algo::Adam, cfg.lr);

  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_indices(order, rng);
    double d_sum = 0.0, eg_sum = 0.0;
    int batches = 0;
    for (std::size_t start = 0; start + cfg.batch <= order.size();
         start += cfg.batch) {
      const std::size_t B = cfg.batch;
      auto x_steps = gather_steps(corpus, order, start, B, m.scaler, T);
      Mat z = fill_normal(cfg.n_o, static_cast<Eigen::Index>(B), rng);
      const double invB = 1.0 / static_cast<double>(B);

      { // discriminator step: real pairs up, generated pairs down
        EncoderPass enc = encode_batch(m, x_steps);
        GeneratorPass gen = generate_batch(m, z, T);
        DiscriminatorPass real = discriminate_batch(m, x_steps, enc.features);
        DiscriminatorPass fake = discriminate_batch(m, gen.series, z);

        double loss = 0.0;
        Mat dl_real(1, real.logit.cols()), dl_fake(1, fake.logit.cols());
        for (Eigen::Index b = 0; b < real.logit.cols(); ++b) {
          loss += (softplus(-real.logit(0, b)) + softplus(fake.logit(0, b))) * invB;
          dl_real(0, b) = (sigmoid(real.logit(0, b)) - 1.0) * invB;
          dl_fake(0, b) = sigmoid(fake.logit(0, b)) * invB;
        }
        if (!std::isfinite(loss)) throw nn::DivergenceError("discriminator loss diverged");
        d_sum += loss;

        DisGrads dg;
        dg.init(m);
        std::vector<Mat> dseq_real, dseq_fake;
        dis_backward(m, real, dl_real, dg, &dseq_real); // sequence grads discarded
        dis_backward(m, fake, dl_fake, dg, &dseq_fake);
        opt_d.step(d_params, {&dg.lstm.dWx, &dg.lstm.dWh, &dg.lstm.db, &dg.dW_head,
                              &dg.db_head});
      }

      { // encoder+generator step against the updated discriminator
        EncoderPass enc = encode_batch(m, x_steps);
        GeneratorPass gen = generate_batch(m, z, T);
        DiscriminatorPass real = discriminate_batch(m, x_steps, enc.features);
        DiscriminatorPass fake = discriminate_batch(m, gen.series, z);

        double loss = 0.0;
        Mat dl_real(1, real.logit.cols()), dl_fake(1, fake.logit.cols());
        for (Eigen::Index b = 0; b < real.logit.cols(); ++b) {
          // encoder makes real pairs look generated; generator the reverse
          loss += (softplus(real.logit(0, b)) + softplus(-fake.logit(0, b))) * invB;
          dl_real(0, b) = sigmoid(real.logit(0, b)) * invB;
          dl_fake(0, b) = (sigmoid(fake.logit(0, b)) - 1.0) * invB;
        }
        if (!std::isfinite(loss)) throw nn::DivergenceError("encoder/generator loss diverged");
        eg_sum += loss;

        DisGrads scratch; // discriminator stays frozen here
        scratch.init(m);

        // encoder path: only the feature half of the concat reaches E
        Mat dconcat_real = dis_backward(m, real, dl_real, scratch, nullptr);
        Mat dfeat = dconcat_real.bottomRows(m.enc_head.W.rows());
        nn::LstmGrads enc_lstm_g;
        enc_lstm_g.init_like(m.enc_lstm);
        Mat dW_ehead = Mat::Zero(m.enc_head.W.rows(), m.enc_head.W.cols());
        Mat db_ehead = Mat::Zero(m.enc_head.b.rows(), 1);
        Mat dpool = nn::dense_backward(m.enc_head, enc.head, dfeat, dW_ehead, db_ehead);
        // the pooled state spreads its gradient evenly over the steps
        std::vector<Mat> dH(enc.lstm.steps.size(),
                            dpool / static_cast<double>(enc.lstm.steps.size()));
        nn::lstm_backward(m.enc_lstm, enc.lstm, dH, enc_lstm_g);

        // generator path: gradient reaches G through the discriminator's input
        std::vector<Mat> dseq_fake;
        dis_backward(m, fake, dl_fake, scratch, &dseq_fake);
        nn::LstmGrads gen_lstm_g;
        gen_lstm_g.init_like(m.gen_lstm);
        Mat dW_ghead = Mat::Zero(m.gen_head.W.rows(), m.gen_head.W.cols());
        Mat db_ghead = Mat::Zero(m.gen_head.b.rows(), 1);
        std::vector<Mat> gen_dH(static_cast<std::size_t>(T));
        for (int t = 0; t < T; ++t) {
          auto ti = static_cast<std::size_t>(t);
          gen_dH[ti] = nn::dense_backward(m.gen_head, gen.head[ti], dseq_fake[ti],
                                          dW_ghead, db_ghead);
        }
        Mat dh0, dc0;
        nn::lstm_backward(m.gen_lstm, gen.lstm, gen_dH, gen_lstm_g, &dh0, &dc0);
        Mat dW_h0 = Mat::Zero(m.gen_h0.W.rows(), m.gen_h0.W.cols());
        Mat db_h0 = Mat::Zero(m.gen_h0.b.rows(), 1);
        Mat dW_c0 = Mat::Zero(m.gen_c0.W.rows(), m.gen_c0.W.cols());
        Mat db_c0 = Mat::Zero(m.gen_c0.b.rows(), 1);
        nn::dense_backward(m.gen_h0, gen.h0, dh0, dW_h0, db_h0);
        nn::dense_backward(m.gen_c0, gen.c0, dc0, dW_c0, db_c0);

        std::vector<Mat*> eg_grads = {&enc_lstm_g.dWx, &enc_lstm_g.dWh, &enc_lstm_g.db,
                                      &dW_ehead, &db_ehead,
                                      &dW_h0, &db_h0,
                                      &dW_c0, &db_c0,
                                      &gen_lstm_g.dWx, &gen_lstm_g.dWh, &gen_lstm_g.db,
                                      &dW_ghead, &db_ghead};
        opt_eg.step(eg_params, eg_grads);
      }
      ++batches;
    }
    m.d_loss_curve.push_back(d_sum / std::max(batches, 1));
    m.eg_loss_curve.push_back(eg_sum / std::max(batches, 1));
  }
  return m;
}

// ---- Composite day-series detector ----------------------------------------------

double TrDetector::score(const behavior::TRSeries& series) const {
  return head.score(ganed.encode(series));
}

TrDetector train_tr_detector(GanedModel ganed,
                             const std::vector<behavior::TRSeries>& corpus,
                             const OcnnConfig& head_cfg) {
  if (corpus.empty()) throw std::invalid_argument("empty training corpus");
  Mat feats(ganed.enc_head.W.rows(), static_cast<Eigen::Index>(corpus.size()));
  for (std::size_t i = 0; i < corpus.size(); ++i)
    feats.col(static_cast<Eigen::Index>(i)) = ganed.encode(corpus[i]);
  TrDetector det;
  det.head = train_ocnn(feats, head_cfg);
  det.ganed = std::move(ganed);
  return det;
}

// ---- Corpus plumbing -------------------------------------------------------------

Mat sr_feature_matrix(const std::vector<behavior::SRRecord>& records) {
  if (records.empty()) throw std::invalid_argument("no records");
  Mat X(7, static_cast<Eigen::Index>(records.size()));
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    auto c = static_cast<Eigen::Index>(i);
    X(0, c) = r.duration_s;
    X(1, c) = r.workload_mb;
    X(2, c) = r.cpu;
    X(3, c) = r.mem;
    X(4, c) = r.disk_io;
    X(5, c) = r.occupancy_s;
    X(6, c) = static_cast<double>(r.conn_count);
  }
  return X;
}

std::vector<int> sr_labels(const std::vector<behavior::SRRecord>& records) {
  std::vector<int> out(records.size());
  for (std::size_t i = 0; i < records.size(); ++i)
    out[i] = records[i].label == behavior::Label::Anomalous ? 1 : 0;
  return out;
}

std::vector<int> tr_labels(const std::vector<behavior::TRSeries>& corpus) {
  std::vector<int> out(corpus.size(), 0);
  for (std::size_t i = 0; i < corpus.size(); ++i)
    for (const auto& p : corpus[i].points)
      if (p.label == behavior::Label::Anomalous) {
        out[i] = 1;
        break;
      }
  return out;
}

} // namespace edgesim::detect
