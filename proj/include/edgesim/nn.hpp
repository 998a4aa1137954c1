// Minimal trainable blocks: dense layers, an LSTM cell with backpropagation
// through time, SGD/Adam, finite-difference gradient checking and parameter
// file serialization. 64-bit floats throughout; batches are column-major
// (one sample per column).
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "edgesim/rng.hpp"

namespace edgesim::nn {

using Mat = Eigen::MatrixXd;

enum class Act { Linear, ReLU, Sigmoid, Tanh, Softplus };

Mat activate(Act a, const Mat& z);
Mat activate_deriv(Act a, const Mat& z); // d act / d z at preactivation z

struct DivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---- Dense / MLP ----------------------------------------------------------

struct DenseLayer {
  Mat W;          // out x in
  Mat b;          // out x 1
  Act act = Act::Linear;
  bool use_bias = true;

  int in_dim() const { return static_cast<int>(W.cols()); }
  int out_dim() const { return static_cast<int>(W.rows()); }
};

DenseLayer make_dense(int in, int out, Act act, Rng& rng, bool use_bias = true);

struct DenseCache {
  Mat x, z;
};

Mat dense_forward(const DenseLayer& l, const Mat& x, DenseCache* cache = nullptr);
// Accumulates dW/db and returns dL/dx given dL/dy.
Mat dense_backward(const DenseLayer& l, const DenseCache& cache, const Mat& dy,
                   Mat& dW, Mat& db);

struct Mlp {
  std::vector<DenseLayer> layers;
  std::vector<Mat*> params();
};

struct MlpCache {
  std::vector<DenseCache> layers;
};

struct MlpGrads {
  std::vector<Mat> dW, db;
  void init_like(const Mlp& net);
  std::vector<Mat*> flat();
};

Mat mlp_forward(const Mlp& net, const Mat& x, MlpCache* cache = nullptr);
// Returns dL/dinput; requires the cache produced by mlp_forward.
Mat mlp_backward(const Mlp& net, const MlpCache& cache, const Mat& dy, MlpGrads& grads);

// ---- LSTM -----------------------------------------------------------------

// Gates packed row-wise as [input; forget; cell; output].
struct LstmCell {
  Mat Wx; // 4H x in
  Mat Wh; // 4H x H
  Mat b;  // 4H x 1

  int hidden() const { return static_cast<int>(Wx.rows()) / 4; }
  int input() const { return static_cast<int>(Wx.cols()); }
  std::vector<Mat*> params() { return {&Wx, &Wh, &b}; }
};

LstmCell make_lstm(int in, int hidden, Rng& rng);

struct LstmStepCache {
  Mat x, h_prev, c_prev, i, f, g, o, c, tanh_c;
};

struct LstmCache {
  std::vector<LstmStepCache> steps;
};

struct LstmGrads {
  Mat dWx, dWh, db;
  void init_like(const LstmCell& cell);
  std::vector<Mat*> flat() { return {&dWx, &dWh, &db}; }
};

// seq: T inputs of shape in x B. Returns the T hidden states (H x B each).
std::vector<Mat> lstm_forward(const LstmCell& cell, const std::vector<Mat>& seq,
                              LstmCache* cache = nullptr, const Mat* h0 = nullptr,
                              const Mat* c0 = nullptr);

// dH holds dL/dh_t per step (zero matrices where unused). Accumulates
// parameter grads, returns dL/dx_t, and optionally dL/dh0, dL/dc0.
std::vector<Mat> lstm_backward(const LstmCell& cell, const LstmCache& cache,
                               const std::vector<Mat>& dH, LstmGrads& grads,
                               Mat* dh0 = nullptr, Mat* dc0 = nullptr);

// ---- Optimizers -----------------------------------------------------------

enum class Algo { SGD, Adam };

class Optimizer {
public:
  explicit Optimizer(Algo algo = Algo::Adam, double lr = 1e-3)
      : algo_(algo), lr_(lr) {
    if (lr <= 0.0) throw std::invalid_argument("learning rate must be > 0");
  }

  // Applies one update. Moment slots are keyed by position, so the same
  // parameter list must be passed on every call.
  void step(const std::vector<Mat*>& params, const std::vector<Mat*>& grads);

  double lr() const { return lr_; }
  long steps_taken() const { return step_count_; }

private:
  Algo algo_;
  double lr_;
  double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  std::vector<Mat> m_, v_;
  long step_count_ = 0;
};

// ---- Gradient checking ----------------------------------------------------

// Central-difference check of `analytic` (evaluated once up front) against
// `loss` under per-entry perturbations of `params`. Returns the worst
// relative error.
double grad_check(const std::vector<Mat*>& params,
                  const std::function<double()>& loss,
                  const std::function<std::vector<Mat>()>& analytic,
                  double h = 1e-5);

// ---- Serialization --------------------------------------------------------

// Text format: "edgesim-params v1" header, tensor count, then per tensor a
// "name rows cols" manifest line followed by row-major values in shortest
// round-trip decimal form.
void save_params(const std::string& path,
                 const std::vector<std::pair<std::string, const Mat*>>& tensors);
void load_params(const std::string& path,
                 const std::vector<std::pair<std::string, Mat*>>& tensors);

bool all_finite(const Mat& m);

} // namespace edgesim::nn
