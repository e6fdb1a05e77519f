#pragma once

#include <memory>
#include <vector>

#include "humo/errors.hpp"
#include "humo/rng.hpp"

namespace humo {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Scaled orthogonal init (QR of a Gaussian matrix, sign-corrected).
MatrixXd orthogonal_init(Eigen::Index rows, Eigen::Index cols, double gain, Rng& rng);

enum class Activation { relu, tanh_act };

struct MlpCache {
  std::vector<VectorXd> inputs;  // input to each layer
  std::vector<VectorXd> pre;     // pre-activation of hidden layers
};

// Plain MLP with a linear output layer. Parameters live in one flat vector;
// gradients accumulate into an equally shaped vector.
class MlpNet {
 public:
  MlpNet() = default;
  MlpNet(std::vector<int> dims, Activation act, Rng& rng, double out_gain = 1.0);

  const std::vector<int>& dims() const { return dims_; }
  Eigen::Index param_count() const { return params_.size(); }
  VectorXd& params() { return params_; }
  const VectorXd& params() const { return params_; }

  VectorXd forward(const VectorXd& x, MlpCache* cache = nullptr) const;
  void backward(const MlpCache& cache, const VectorXd& dout, VectorXd* dx,
                VectorXd* dparams) const;

 private:
  Eigen::Map<const MatrixXd> weight(int layer, const VectorXd& p) const;
  Eigen::Map<const VectorXd> bias(int layer, const VectorXd& p) const;

  std::vector<int> dims_;
  std::vector<Eigen::Index> w_off_, b_off_;
  Activation act_ = Activation::relu;
  VectorXd params_;
};

struct GruCache {
  VectorXd x, h, z, r, hc, rh;
};

// Single GRU cell: z = sig(Wz x + Uz h + bz), r = sig(Wr x + Ur h + br),
// hc = tanh(Wh x + Uh (r o h) + bh), h' = (1 - z) o h + z o hc.
// A saturated-closed update gate (z -> 0) leaves the hidden state unchanged.
class GruCell {
 public:
  GruCell() = default;
  GruCell(int input_dim, int hidden_dim, Rng& rng);

  int input_dim() const { return in_; }
  int hidden_dim() const { return hidden_; }
  Eigen::Index param_count() const { return params_.size(); }
  VectorXd& params() { return params_; }
  const VectorXd& params() const { return params_; }

  VectorXd step(const VectorXd& x, const VectorXd& h, GruCache* cache = nullptr) const;
  // Adjoint of one step: given d h', accumulate dx, dh, dparams.
  void backward(const GruCache& cache, const VectorXd& dh_new, VectorXd* dx, VectorXd* dh,
                VectorXd* dparams) const;

  VectorXd initial_hidden() const { return VectorXd::Zero(hidden_); }

 private:
  int in_ = 0, hidden_ = 0;
  VectorXd params_;
};

// Diagonal-Gaussian log density with fixed log-std.
double gaussian_log_prob(const VectorXd& mean, const VectorXd& log_std, const VectorXd& action);
// d log p / d mean.
VectorXd gaussian_log_prob_dmean(const VectorXd& mean, const VectorXd& log_std,
                                 const VectorXd& action);

// Multiplicative-composition closed form for a shared fixed covariance:
// normalized-weight convex combination of the primitive means.
// means: one row per primitive. weights: non-negative, not all zero.
VectorXd mcp_compose(const MatrixXd& primitive_means, const VectorXd& composer_weights);

// Adam with bias correction. Moments are exposed for checkpointing.
class Adam {
 public:
  Adam() = default;
  Adam(Eigen::Index n, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  void step(VectorXd& params, const VectorXd& grad);

  double lr = 1e-3, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  long t = 0;
  VectorXd m, v;
};

}  // namespace humo
