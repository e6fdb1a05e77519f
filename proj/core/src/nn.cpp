#include "humo/nn.hpp"

#include <cmath>

#include <Eigen/QR>

#include "humo/math.hpp"

namespace humo {

MatrixXd orthogonal_init(Eigen::Index rows, Eigen::Index cols, double gain, Rng& rng) {
  const Eigen::Index n = std::max(rows, cols);
  MatrixXd a(n, std::min(rows, cols));
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i) a(i, j) = rng.gaussian();
  Eigen::HouseholderQR<MatrixXd> qr(a);
  MatrixXd q = qr.householderQ() * MatrixXd::Identity(n, a.cols());
  const MatrixXd r = qr.matrixQR().topRows(a.cols()).triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < q.cols(); ++j)
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  MatrixXd out = (rows >= cols) ? q : MatrixXd(q.transpose());
  return gain * out;
}

MlpNet::MlpNet(std::vector<int> dims, Activation act, Rng& rng, double out_gain)
    : dims_(std::move(dims)), act_(act) {
  if (dims_.size() < 2) throw Error("MlpNet: need at least input and output dims");
  Eigen::Index total = 0;
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
    w_off_.push_back(total);
    total += static_cast<Eigen::Index>(dims_[l + 1]) * dims_[l];
    b_off_.push_back(total);
    total += dims_[l + 1];
  }
  params_.setZero(total);
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
    const bool last = (l + 2 == dims_.size());
    const double gain = last ? out_gain : (act_ == Activation::relu ? std::sqrt(2.0) : 1.0);
    const MatrixXd w = orthogonal_init(dims_[l + 1], dims_[l], gain, rng);
    Eigen::Map<MatrixXd>(params_.data() + w_off_[l], dims_[l + 1], dims_[l]) = w;
  }
}

Eigen::Map<const MatrixXd> MlpNet::weight(int layer, const VectorXd& p) const {
  return {p.data() + w_off_[layer], dims_[layer + 1], dims_[layer]};
}

Eigen::Map<const VectorXd> MlpNet::bias(int layer, const VectorXd& p) const {
  return {p.data() + b_off_[layer], dims_[layer + 1]};
}

VectorXd MlpNet::forward(const VectorXd& x, MlpCache* cache) const {
  if (x.size() != dims_.front()) throw ShapeError("MlpNet::forward: input dim mismatch");
  if (cache) {
    cache->inputs.clear();
    cache->pre.clear();
  }
  VectorXd h = x;
  const int layers = static_cast<int>(dims_.size()) - 1;
  for (int l = 0; l < layers; ++l) {
    if (cache) cache->inputs.push_back(h);
    VectorXd z = weight(l, params_) * h + bias(l, params_);
    if (l + 1 < layers) {
      if (cache) cache->pre.push_back(z);
      if (act_ == Activation::relu)
        h = z.cwiseMax(0.0);
      else
        h = z.array().tanh().matrix();
    } else {
      h = std::move(z);
    }
  }
  return h;
}

void MlpNet::backward(const MlpCache& cache, const VectorXd& dout, VectorXd* dx,
                      VectorXd* dparams) const {
  const int layers = static_cast<int>(dims_.size()) - 1;
  VectorXd grad = dout;
  for (int l = layers - 1; l >= 0; --l) {
    if (l + 1 < layers) {
      const VectorXd& z = cache.pre[l];
      if (act_ == Activation::relu) {
        for (Eigen::Index i = 0; i < grad.size(); ++i)
          if (z[i] <= 0.0) grad[i] = 0.0;
      } else {
        const VectorXd th = z.array().tanh().matrix();
        grad = grad.cwiseProduct((1.0 - th.array().square()).matrix());
      }
    }
    if (dparams) {
      Eigen::Map<MatrixXd> dW(dparams->data() + w_off_[l], dims_[l + 1], dims_[l]);
      Eigen::Map<VectorXd> db(dparams->data() + b_off_[l], dims_[l + 1]);
      dW.noalias() += grad * cache.inputs[l].transpose();
      db += grad;
    }
    if (l > 0 || dx) {
      VectorXd next = weight(l, params_).transpose() * grad;
      if (l == 0) {
        if (dx) *dx += next;
      } else {
        grad = std::move(next);
      }
    }
  }
}

namespace {
// GRU parameter layout: Wz Uz bz | Wr Ur br | Wh Uh bh.
struct GruOffsets {
  Eigen::Index wz, uz, bz, wr, ur, br, wh, uh, bh;
};
GruOffsets gru_offsets(int in, int h) {
  GruOffsets o{};
  Eigen::Index p = 0;
  auto block = [&](Eigen::Index n) {
    const Eigen::Index at = p;
    p += n;
    return at;
  };
  o.wz = block(static_cast<Eigen::Index>(h) * in);
  o.uz = block(static_cast<Eigen::Index>(h) * h);
  o.bz = block(h);
  o.wr = block(static_cast<Eigen::Index>(h) * in);
  o.ur = block(static_cast<Eigen::Index>(h) * h);
  o.br = block(h);
  o.wh = block(static_cast<Eigen::Index>(h) * in);
  o.uh = block(static_cast<Eigen::Index>(h) * h);
  o.bh = block(h);
  return o;
}
}  // namespace

GruCell::GruCell(int input_dim, int hidden_dim, Rng& rng) : in_(input_dim), hidden_(hidden_dim) {
  const GruOffsets o = gru_offsets(in_, hidden_);
  params_.setZero(o.bh + hidden_);
  auto setw = [&](Eigen::Index off, int rows, int cols, double gain) {
    Eigen::Map<MatrixXd>(params_.data() + off, rows, cols) =
        orthogonal_init(rows, cols, gain, rng);
  };
  setw(o.wz, hidden_, in_, 1.0);
  setw(o.uz, hidden_, hidden_, 1.0);
  setw(o.wr, hidden_, in_, 1.0);
  setw(o.ur, hidden_, hidden_, 1.0);
  setw(o.wh, hidden_, in_, 1.0);
  setw(o.uh, hidden_, hidden_, 1.0);
}

VectorXd GruCell::step(const VectorXd& x, const VectorXd& h, GruCache* cache) const {
  if (x.size() != in_ || h.size() != hidden_) throw ShapeError("GruCell::step: dim mismatch");
  const GruOffsets o = gru_offsets(in_, hidden_);
  auto W = [&](Eigen::Index off, int cols) {
    return Eigen::Map<const MatrixXd>(params_.data() + off, hidden_, cols);
  };
  auto b = [&](Eigen::Index off) {
    return Eigen::Map<const VectorXd>(params_.data() + off, hidden_);
  };
  VectorXd z = W(o.wz, in_) * x + W(o.uz, hidden_) * h + b(o.bz);
  VectorXd r = W(o.wr, in_) * x + W(o.ur, hidden_) * h + b(o.br);
  for (Eigen::Index i = 0; i < hidden_; ++i) {
    z[i] = sigmoid(z[i]);
    r[i] = sigmoid(r[i]);
  }
  const VectorXd rh = r.cwiseProduct(h);
  VectorXd hc = W(o.wh, in_) * x + W(o.uh, hidden_) * rh + b(o.bh);
  hc = hc.array().tanh().matrix();
  VectorXd h_new = (VectorXd::Ones(hidden_) - z).cwiseProduct(h) + z.cwiseProduct(hc);
  if (cache) {
    cache->x = x;
    cache->h = h;
    cache->z = z;
    cache->r = r;
    cache->hc = hc;
    cache->rh = rh;
  }
  return h_new;
}

void GruCell::backward(const GruCache& c, const VectorXd& dh_new, VectorXd* dx, VectorXd* dh,
                       VectorXd* dparams) const {
  const GruOffsets o = gru_offsets(in_, hidden_);
  auto W = [&](Eigen::Index off, int cols) {
    return Eigen::Map<const MatrixXd>(params_.data() + off, hidden_, cols);
  };
  const VectorXd dz = dh_new.cwiseProduct(c.hc - c.h);
  const VectorXd dhc = dh_new.cwiseProduct(c.z);
  VectorXd dh_acc = dh_new.cwiseProduct((VectorXd::Ones(hidden_) - c.z));

  const VectorXd dhc_pre = dhc.cwiseProduct((1.0 - c.hc.array().square()).matrix());
  const VectorXd drh = W(o.uh, hidden_).transpose() * dhc_pre;
  const VectorXd dr = drh.cwiseProduct(c.h);
  dh_acc += drh.cwiseProduct(c.r);

  const VectorXd dz_pre =
      dz.cwiseProduct(c.z.cwiseProduct((VectorXd::Ones(hidden_) - c.z)));
  const VectorXd dr_pre =
      dr.cwiseProduct(c.r.cwiseProduct((VectorXd::Ones(hidden_) - c.r)));

  if (dparams) {
    auto addW = [&](Eigen::Index off, const VectorXd& g, const VectorXd& in) {
      Eigen::Map<MatrixXd>(dparams->data() + off, hidden_, in.size()).noalias() +=
          g * in.transpose();
    };
    auto addB = [&](Eigen::Index off, const VectorXd& g) {
      Eigen::Map<VectorXd>(dparams->data() + off, hidden_) += g;
    };
    addW(o.wh, dhc_pre, c.x);
    addW(o.uh, dhc_pre, c.rh);
    addB(o.bh, dhc_pre);
    addW(o.wz, dz_pre, c.x);
    addW(o.uz, dz_pre, c.h);
    addB(o.bz, dz_pre);
    addW(o.wr, dr_pre, c.x);
    addW(o.ur, dr_pre, c.h);
    addB(o.br, dr_pre);
  }
  if (dx) {
    *dx += W(o.wh, in_).transpose() * dhc_pre + W(o.wz, in_).transpose() * dz_pre +
           W(o.wr, in_).transpose() * dr_pre;
  }
  if (dh) {
    *dh += dh_acc + W(o.uz, hidden_).transpose() * dz_pre +
           W(o.ur, hidden_).transpose() * dr_pre;
  }
}

double gaussian_log_prob(const VectorXd& mean, const VectorXd& log_std, const VectorXd& action) {
  if (mean.size() != log_std.size() || mean.size() != action.size())
    throw ShapeError("gaussian_log_prob: dim mismatch");
  double lp = -0.5 * static_cast<double>(mean.size()) * std::log(2.0 * kPi);
  for (Eigen::Index i = 0; i < mean.size(); ++i) {
    const double s = std::exp(log_std[i]);
    const double d = (action[i] - mean[i]) / s;
    lp += -0.5 * d * d - log_std[i];
  }
  return lp;
}

VectorXd gaussian_log_prob_dmean(const VectorXd& mean, const VectorXd& log_std,
                                 const VectorXd& action) {
  VectorXd g(mean.size());
  for (Eigen::Index i = 0; i < mean.size(); ++i) {
    const double s2 = std::exp(2.0 * log_std[i]);
    g[i] = (action[i] - mean[i]) / s2;
  }
  return g;
}

VectorXd mcp_compose(const MatrixXd& primitive_means, const VectorXd& composer_weights) {
  if (primitive_means.rows() != composer_weights.size())
    throw ShapeError("mcp_compose: one weight per primitive required");
  if ((composer_weights.array() < 0.0).any())
    throw Error("mcp_compose: weights must be non-negative");
  const double total = composer_weights.sum();
  if (!(total > 0.0)) throw Error("mcp_compose: degenerate composer (all-zero weights)");
  return primitive_means.transpose() * (composer_weights / total);
}

Adam::Adam(Eigen::Index n, double lr_, double beta1_, double beta2_, double eps_)
    : lr(lr_), beta1(beta1_), beta2(beta2_), eps(eps_) {
  m = VectorXd::Zero(n);
  v = VectorXd::Zero(n);
}

void Adam::step(VectorXd& params, const VectorXd& grad) {
  if (params.size() != m.size() || grad.size() != m.size())
    throw ShapeError("Adam::step: dim mismatch");
  ++t;
  m = beta1 * m + (1.0 - beta1) * grad;
  v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  params -= (lr / bc1) * m.cwiseQuotient(((v / bc2).cwiseSqrt().array() + eps).matrix());
}

}  // namespace humo
