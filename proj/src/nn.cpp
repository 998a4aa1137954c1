#include "edgesim/nn.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

#include "edgesim/csv.hpp"

namespace edgesim::nn {

namespace {

double sigmoid_scalar(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

double softplus_scalar(double z) {
  // log(1+e^z) without overflow; for large |z| the linear/zero asymptote is
  // exact to double precision.
  if (z > 30.0) return z;
  if (z < -30.0) return std::exp(z);
  return std::log1p(std::exp(z));
}

} // namespace

Mat activate(Act a, const Mat& z) {
  switch (a) {
    case Act::Linear: return z;
    case Act::ReLU: return z.cwiseMax(0.0);
    case Act::Sigmoid: return z.unaryExpr(&sigmoid_scalar);
    case Act::Tanh: return z.array().tanh().matrix();
    case Act::Softplus: return z.unaryExpr(&softplus_scalar);
  }
  throw std::logic_error("unknown activation");
}

Mat activate_deriv(Act a, const Mat& z) {
  switch (a) {
    case Act::Linear: return Mat::Ones(z.rows(), z.cols());
    case Act::ReLU:
      return z.unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; });
    case Act::Sigmoid:
      return z.unaryExpr([](double v) {
        double s = sigmoid_scalar(v);
        return s * (1.0 - s);
      });
    case Act::Tanh: {
      Mat t = z.array().tanh().matrix();
      return (1.0 - t.array().square()).matrix();
    }
    case Act::Softplus: return z.unaryExpr(&sigmoid_scalar);
  }
  throw std::logic_error("unknown activation");
}

// ---- Dense / MLP ----------------------------------------------------------

DenseLayer make_dense(int in, int out, Act act, Rng& rng, bool use_bias) {
  if (in <= 0 || out <= 0) throw std::invalid_argument("dense dims must be positive");
  DenseLayer l;
  l.act = act;
  l.use_bias = use_bias;
  double limit = std::sqrt(6.0 / (in + out));
  l.W.resize(out, in);
  for (int r = 0; r < out; ++r)
    for (int c = 0; c < in; ++c) l.W(r, c) = rng.uniform(-limit, limit);
  l.b = Mat::Zero(out, 1);
  return l;
}

Mat dense_forward(const DenseLayer& l, const Mat& x, DenseCache* cache) {
  if (x.rows() != l.W.cols())
    throw std::invalid_argument("dense input dim mismatch");
  Mat z = l.W * x;
  if (l.use_bias) z.colwise() += Eigen::VectorXd(l.b.col(0));
  if (cache) {
    cache->x = x;
    cache->z = z;
  }
  return activate(l.act, z);
}

Mat dense_backward(const DenseLayer& l, const DenseCache& cache, const Mat& dy,
                   Mat& dW, Mat& db) {
  Mat dz = dy.cwiseProduct(activate_deriv(l.act, cache.z));
  dW += dz * cache.x.transpose();
  if (l.use_bias) db += dz.rowwise().sum();
  return l.W.transpose() * dz;
}

std::vector<Mat*> Mlp::params() {
  std::vector<Mat*> out;
  for (auto& l : layers) {
    out.push_back(&l.W);
    if (l.use_bias) out.push_back(&l.b);
  }
  return out;
}

void MlpGrads::init_like(const Mlp& net) {
  dW.clear();
  db.clear();
  for (const auto& l : net.layers) {
    dW.push_back(Mat::Zero(l.W.rows(), l.W.cols()));
    db.push_back(Mat::Zero(l.b.rows(), 1));
  }
}

std::vector<Mat*> MlpGrads::flat() {
  std::vector<Mat*> out;
  for (size_t i = 0; i < dW.size(); ++i) {
    out.push_back(&dW[i]);
    out.push_back(&db[i]);
  }
  return out;
}

Mat mlp_forward(const Mlp& net, const Mat& x, MlpCache* cache) {
  if (cache) cache->layers.assign(net.layers.size(), DenseCache{});
  Mat cur = x;
  for (size_t i = 0; i < net.layers.size(); ++i)
    cur = dense_forward(net.layers[i], cur, cache ? &cache->layers[i] : nullptr);
  return cur;
}

Mat mlp_backward(const Mlp& net, const MlpCache& cache, const Mat& dy, MlpGrads& grads) {
  if (cache.layers.size() != net.layers.size())
    throw std::invalid_argument("mlp cache does not match network");
  if (grads.dW.size() != net.layers.size()) grads.init_like(net);
  Mat cur = dy;
  for (size_t i = net.layers.size(); i-- > 0;)
    cur = dense_backward(net.layers[i], cache.layers[i], cur, grads.dW[i], grads.db[i]);
  return cur;
}

// ---- LSTM -----------------------------------------------------------------

LstmCell make_lstm(int in, int hidden, Rng& rng) {
  if (in <= 0 || hidden <= 0) throw std::invalid_argument("lstm dims must be positive");
  LstmCell cell;
  auto fill = [&](Mat& m, int rows, int cols) {
    m.resize(rows, cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) m(r, c) = rng.uniform(-0.08, 0.08);
  };
  fill(cell.Wx, 4 * hidden, in);
  fill(cell.Wh, 4 * hidden, hidden);
  cell.b = Mat::Zero(4 * hidden, 1);
  // forget gate opens by default, the usual fix for vanishing cell state
  cell.b.block(hidden, 0, hidden, 1).setConstant(1.0);
  return cell;
}

void LstmGrads::init_like(const LstmCell& cell) {
  dWx = Mat::Zero(cell.Wx.rows(), cell.Wx.cols());
  dWh = Mat::Zero(cell.Wh.rows(), cell.Wh.cols());
  db = Mat::Zero(cell.b.rows(), 1);
}

std::vector<Mat> lstm_forward(const LstmCell& cell, const std::vector<Mat>& seq,
                              LstmCache* cache, const Mat* h0, const Mat* c0) {
  if (seq.empty()) throw std::invalid_argument("lstm sequence is empty");
  const int H = cell.hidden();
  const auto B = seq[0].cols();
  Mat h = h0 ? *h0 : Mat::Zero(H, B);
  Mat c = c0 ? *c0 : Mat::Zero(H, B);
  if (h.rows() != H || c.rows() != H || h.cols() != B || c.cols() != B)
    throw std::invalid_argument("lstm initial state shape mismatch");

  if (cache) cache->steps.assign(seq.size(), LstmStepCache{});
  std::vector<Mat> hs;
  hs.reserve(seq.size());
  for (size_t t = 0; t < seq.size(); ++t) {
    const Mat& x = seq[t];
    if (x.rows() != cell.input() || x.cols() != B)
      throw std::invalid_argument("lstm input shape mismatch");
    Mat a = cell.Wx * x + cell.Wh * h;
    a.colwise() += Eigen::VectorXd(cell.b.col(0));
    Mat i = activate(Act::Sigmoid, a.topRows(H));
    Mat f = activate(Act::Sigmoid, a.middleRows(H, H));
    Mat g = activate(Act::Tanh, a.middleRows(2 * H, H));
    Mat o = activate(Act::Sigmoid, a.bottomRows(H));
    Mat c_new = f.cwiseProduct(c) + i.cwiseProduct(g);
    Mat tc = c_new.array().tanh().matrix();
    Mat h_new = o.cwiseProduct(tc);
    if (cache) {
      auto& s = cache->steps[t];
      s.x = x;
      s.h_prev = h;
      s.c_prev = c;
      s.i = i;
      s.f = f;
      s.g = g;
      s.o = o;
      s.c = c_new;
      s.tanh_c = tc;
    }
    h = h_new;
    c = c_new;
    hs.push_back(h);
  }
  return hs;
}

std::vector<Mat> lstm_backward(const LstmCell& cell, const LstmCache& cache,
                               const std::vector<Mat>& dH, LstmGrads& grads,
                               Mat* dh0, Mat* dc0) {
  const size_t T = cache.steps.size();
  if (dH.size() != T) throw std::invalid_argument("lstm dH length mismatch");
  if (grads.dWx.size() == 0) grads.init_like(cell);
  const int H = cell.hidden();
  const auto B = cache.steps[0].x.cols();

  std::vector<Mat> dX(T);
  Mat dh_next = Mat::Zero(H, B);
  Mat dc_next = Mat::Zero(H, B);
  for (size_t t = T; t-- > 0;) {
    const auto& s = cache.steps[t];
    Mat dh = dH[t] + dh_next;
    Mat dc = dh.cwiseProduct(s.o)
                 .cwiseProduct((1.0 - s.tanh_c.array().square()).matrix()) +
             dc_next;
    Mat da(4 * H, B);
    // gate preactivation grads, same packing order as the forward pass
    da.topRows(H) =
        dc.cwiseProduct(s.g).cwiseProduct(s.i.cwiseProduct((1.0 - s.i.array()).matrix()));
    da.middleRows(H, H) = dc.cwiseProduct(s.c_prev)
                              .cwiseProduct(s.f.cwiseProduct((1.0 - s.f.array()).matrix()));
    da.middleRows(2 * H, H) =
        dc.cwiseProduct(s.i).cwiseProduct((1.0 - s.g.array().square()).matrix());
    da.bottomRows(H) = dh.cwiseProduct(s.tanh_c)
                           .cwiseProduct(s.o.cwiseProduct((1.0 - s.o.array()).matrix()));

    grads.dWx += da * s.x.transpose();
    grads.dWh += da * s.h_prev.transpose();
    grads.db += da.rowwise().sum();
    dX[t] = cell.Wx.transpose() * da;
    dh_next = cell.Wh.transpose() * da;
    dc_next = dc.cwiseProduct(s.f);
  }
  if (dh0) *dh0 = dh_next;
  if (dc0) *dc0 = dc_next;
  return dX;
}

// ---- Optimizers -----------------------------------------------------------

bool all_finite(const Mat& m) { return m.allFinite(); }

void Optimizer::step(const std::vector<Mat*>& params, const std::vector<Mat*>& grads) {
  if (params.size() != grads.size())
    throw std::invalid_argument("optimizer param/grad count mismatch");
  for (size_t i = 0; i < params.size(); ++i) {
    if (params[i]->rows() != grads[i]->rows() || params[i]->cols() != grads[i]->cols())
      throw std::invalid_argument("optimizer param/grad shape mismatch");
    if (!all_finite(*grads[i]))
      throw DivergenceError("non-finite gradient, aborting update");
  }

  if (algo_ == Algo::SGD) {
    for (size_t i = 0; i < params.size(); ++i) *params[i] -= lr_ * (*grads[i]);
    ++step_count_;
    return;
  }

  if (m_.empty()) {
    for (auto* p : params) {
      m_.push_back(Mat::Zero(p->rows(), p->cols()));
      v_.push_back(Mat::Zero(p->rows(), p->cols()));
    }
  }
  if (m_.size() != params.size())
    throw std::invalid_argument("optimizer was initialized with a different parameter list");
  ++step_count_;
  double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(step_count_));
  double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(step_count_));
  for (size_t i = 0; i < params.size(); ++i) {
    const Mat& g = *grads[i];
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g.cwiseProduct(g);
    Mat mhat = m_[i] / bc1;
    Mat vhat = v_[i] / bc2;
    *params[i] -=
        lr_ * mhat.cwiseQuotient((vhat.cwiseSqrt().array() + eps_).matrix());
  }
}

// ---- Gradient checking ----------------------------------------------------

double grad_check(const std::vector<Mat*>& params,
                  const std::function<double()>& loss,
                  const std::function<std::vector<Mat>()>& analytic, double h) {
  if (h <= 0.0) throw std::invalid_argument("grad_check step must be > 0");
  std::vector<Mat> an = analytic();
  if (an.size() != params.size())
    throw std::invalid_argument("grad_check analytic/param count mismatch");

  double worst = 0.0;
  for (size_t pi = 0; pi < params.size(); ++pi) {
    Mat& p = *params[pi];
    if (an[pi].rows() != p.rows() || an[pi].cols() != p.cols())
      throw std::invalid_argument("grad_check analytic/param shape mismatch");
    for (Eigen::Index j = 0; j < p.size(); ++j) {
      double saved = p.data()[j];
      p.data()[j] = saved + h;
      double lp = loss();
      p.data()[j] = saved - h;
      double lm = loss();
      p.data()[j] = saved;
      double num = (lp - lm) / (2.0 * h);
      double a = an[pi].data()[j];
      double denom = std::max(std::abs(a), std::abs(num));
      double rel = denom < 1e-7 ? std::abs(a - num) : std::abs(a - num) / denom;
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

// ---- Serialization --------------------------------------------------------

void save_params(const std::string& path,
                 const std::vector<std::pair<std::string, const Mat*>>& tensors) {
  std::ofstream out(path, std::ios::binary); // binary keeps LF on every platform
  if (!out) throw std::runtime_error("cannot open for write: " + path);
  out << "edgesim-params v1\n" << tensors.size() << "\n";
  for (const auto& [name, m] : tensors) {
    if (name.find_first_of(" \t\n") != std::string::npos)
      throw std::invalid_argument("tensor name contains whitespace: " + name);
    out << name << " " << m->rows() << " " << m->cols() << "\n";
    for (Eigen::Index r = 0; r < m->rows(); ++r) {
      for (Eigen::Index c = 0; c < m->cols(); ++c) {
        if (c) out << " ";
        out << format_double((*m)(r, c));
      }
      out << "\n";
    }
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

namespace {

double parse_double_token(const std::string& tok, const std::string& path) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size())
    throw std::runtime_error("bad numeric token in " + path + ": " + tok);
  return v;
}

} // namespace

void load_params(const std::string& path,
                 const std::vector<std::pair<std::string, Mat*>>& tensors) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for read: " + path);
  std::string magic, version;
  in >> magic >> version;
  if (magic != "edgesim-params" || version != "v1")
    throw std::runtime_error("unrecognized parameter file header in " + path);
  size_t count = 0;
  in >> count;
  if (count != tensors.size())
    throw std::runtime_error("parameter file holds " + std::to_string(count) +
                             " tensors, expected " + std::to_string(tensors.size()));
  for (const auto& [name, m] : tensors) {
    std::string stored;
    Eigen::Index rows = 0, cols = 0;
    in >> stored >> rows >> cols;
    if (!in) throw std::runtime_error("truncated parameter file: " + path);
    if (stored != name)
      throw std::runtime_error("tensor order mismatch in " + path + ": expected " +
                               name + ", found " + stored);
    if (m->size() != 0 && (m->rows() != rows || m->cols() != cols))
      throw std::runtime_error("tensor shape mismatch for " + name + " in " + path);
    m->resize(rows, cols);
    std::string tok;
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) {
        in >> tok;
        if (!in) throw std::runtime_error("truncated parameter file: " + path);
        (*m)(r, c) = parse_double_token(tok, path);
      }
  }
}

} // namespace edgesim::nn
