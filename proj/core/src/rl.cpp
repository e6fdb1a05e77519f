#include "humo/rl.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace humo {

double TrajectoryBuffer::mean_reward() const {
  double sum = 0.0;
  std::size_t n = 0;
  for (const Episode& e : episodes)
    for (const Transition& t : e.steps) {
      sum += t.reward;
      ++n;
    }
  return n ? sum / static_cast<double>(n) : 0.0;
}

double TrajectoryBuffer::mean_episode_length() const {
  if (episodes.empty()) return 0.0;
  double sum = 0.0;
  for (const Episode& e : episodes) sum += static_cast<double>(e.steps.size());
  return sum / static_cast<double>(episodes.size());
}

void compute_advantages(TrajectoryBuffer& buffer, double gamma, double lambda, bool normalize) {
  for (Episode& e : buffer.episodes) {
    double next_adv = 0.0;
    double next_value = e.final_value;
    for (int t = static_cast<int>(e.steps.size()) - 1; t >= 0; --t) {
      Transition& tr = e.steps[t];
      const double not_done = tr.done ? 0.0 : 1.0;
      const double delta = tr.reward + gamma * next_value * not_done - tr.value;
      tr.advantage = delta + gamma * lambda * not_done * next_adv;
      tr.ret = tr.advantage + tr.value;
      next_adv = tr.advantage;
      next_value = tr.value;
    }
  }
  if (!normalize) return;
  double mean = 0.0, count = 0.0;
  for (const Episode& e : buffer.episodes)
    for (const Transition& t : e.steps) {
      mean += t.advantage;
      count += 1.0;
    }
  if (count < 2.0) return;
  mean /= count;
  double var = 0.0;
  for (const Episode& e : buffer.episodes)
    for (const Transition& t : e.steps) var += (t.advantage - mean) * (t.advantage - mean);
  var /= count;
  const double std = std::sqrt(std::max(var, 1e-12));
  for (Episode& e : buffer.episodes)
    for (Transition& t : e.steps) t.advantage = (t.advantage - mean) / std;
}

ValueNet::ValueNet(int obs_dim, std::vector<int> hidden, Rng& rng) {
  std::vector<int> dims;
  dims.push_back(obs_dim);
  for (int h : hidden) dims.push_back(h);
  dims.push_back(1);
  net_ = MlpNet(dims, Activation::relu, rng, 1.0);
}

double ValueNet::value(const VectorXd& obs) const { return net_.forward(obs)[0]; }

double ValueNet::value(const VectorXd& obs, MlpCache* cache) const {
  return net_.forward(obs, cache)[0];
}

void clip_gradient(VectorXd& grad, double max_norm) {
  if (max_norm <= 0.0) return;
  const double n = grad.norm();
  if (n > max_norm) grad *= max_norm / n;
}

PpoStats ppo_update(TrajectoryBuffer& buffer, SequencePolicy& policy, ValueNet& value,
                    Adam& policy_opt, Adam& value_opt, const PpoConfig& cfg, int iteration) {
  if (buffer.episodes.empty()) throw Error("ppo_update: empty buffer");

  PpoStats stats;
  stats.mean_reward = buffer.mean_reward();
  stats.mean_episode_len = buffer.mean_episode_length();

  const int n_ep = static_cast<int>(buffer.episodes.size());
  std::vector<int> order(n_ep);
  std::iota(order.begin(), order.end(), 0);

  Rng shuffle_rng(split_seed(cfg.shuffle_seed, static_cast<std::uint64_t>(iteration)));
  const VectorXd& log_std = policy.log_std();

  double last_policy_loss = 0.0, last_value_loss = 0.0;
  double ratio_sum = 0.0, ratio_count = 0.0, clip_count = 0.0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    // Fisher-Yates with the deterministic RNG.
    for (int i = n_ep - 1; i > 0; --i) {
      const int j = shuffle_rng.uniform_int(0, i);
      std::swap(order[i], order[j]);
    }

    std::size_t batch_start = 0;
    while (batch_start < order.size()) {
      // Accumulate whole episodes up to the minibatch sample budget.
      std::size_t batch_end = batch_start;
      std::size_t samples = 0;
      while (batch_end < order.size() &&
             (samples < static_cast<std::size_t>(cfg.minibatch_samples) ||
              batch_end == batch_start)) {
        samples += buffer.episodes[order[batch_end]].steps.size();
        ++batch_end;
      }

      VectorXd dpolicy = VectorXd::Zero(policy.param_count());
      VectorXd dvalue = VectorXd::Zero(value.net().params().size());
      double policy_loss = 0.0, value_loss = 0.0;

      for (std::size_t bi = batch_start; bi < batch_end; ++bi) {
        const Episode& ep = buffer.episodes[order[bi]];
        std::vector<VectorXd> obs;
        obs.reserve(ep.steps.size());
        for (const Transition& t : ep.steps) obs.push_back(t.obs);

        std::unique_ptr<SequencePolicy::Cache> cache;
        const std::vector<VectorXd> means = policy.forward_episode(obs, &cache);

        std::vector<VectorXd> dmeans(ep.steps.size());
        for (std::size_t t = 0; t < ep.steps.size(); ++t) {
          const Transition& tr = ep.steps[t];
          const double logp = gaussian_log_prob(means[t], log_std, tr.act);
          const double ratio = std::exp(logp - tr.logp);
          const double a = tr.advantage;
          const double unclipped = ratio * a;
          const double clipped =
              std::clamp(ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps) * a;
          const double obj = std::min(unclipped, clipped);
          policy_loss -= obj;
          if (epoch == 0) {
            ratio_sum += ratio;
            ratio_count += 1.0;
          }
          double dobj_dratio = 0.0;
          if (unclipped <= clipped) {
            dobj_dratio = a;
          } else if (ratio > 1.0 - cfg.clip_eps && ratio < 1.0 + cfg.clip_eps) {
            dobj_dratio = a;
          } else {
            clip_count += 1.0;
          }
          // dL/dmean = -dobj_dratio * ratio * dlogp/dmean
          dmeans[t] = (-dobj_dratio * ratio) *
                      gaussian_log_prob_dmean(means[t], log_std, tr.act);

          // Value regression on returns.
          MlpCache vcache;
          const double v = value.value(tr.obs, &vcache);
          const double verr = v - tr.ret;
          value_loss += 0.5 * verr * verr;
          value.net().backward(vcache, VectorXd::Constant(1, verr), nullptr, &dvalue);
        }
        policy.backward_episode(*cache, dmeans, &dpolicy);
      }

      const double inv_n = 1.0 / static_cast<double>(samples);
      dpolicy *= inv_n;
      dvalue *= inv_n;
      policy_loss *= inv_n;
      value_loss *= inv_n;
      if (!std::isfinite(policy_loss) || !std::isfinite(value_loss) ||
          !dpolicy.allFinite() || !dvalue.allFinite())
        throw NumericError("ppo_update: non-finite loss or gradient");
      clip_gradient(dpolicy, cfg.grad_clip);
      clip_gradient(dvalue, cfg.grad_clip);
      VectorXd pparams = policy.get_params();
      policy_opt.step(pparams, dpolicy);
      policy.set_params(pparams);
      value_opt.step(value.net().params(), dvalue);

      last_policy_loss = policy_loss;
      last_value_loss = value_loss;
      batch_start = batch_end;
    }
  }

  stats.policy_loss = last_policy_loss;
  stats.value_loss = last_value_loss;
  stats.mean_ratio = ratio_count > 0 ? ratio_sum / ratio_count : 1.0;
  const double total = static_cast<double>(buffer.total_samples()) * cfg.epochs;
  stats.clip_fraction = total > 0 ? clip_count / total : 0.0;
  return stats;
}

}  // namespace humo
