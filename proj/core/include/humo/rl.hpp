#pragma once

#include <memory>
#include <string>
#include <vector>

#include "humo/nn.hpp"

namespace humo {

// One policy step collected during rollout. aux holds module-specific
// supervision targets (e.g. ground-truth / kinematic poses) by index into a
// side table owned by the trainer.
struct Transition {
  VectorXd obs;
  VectorXd act;
  double logp = 0.0;
  double reward = 0.0;
  double value = 0.0;
  bool done = false;  // true when this step terminated the episode
  int aux = -1;
  double advantage = 0.0;
  double ret = 0.0;
};

struct Episode {
  std::vector<Transition> steps;
  double final_value = 0.0;  // bootstrap value when truncated (0 if terminal)
  int clip_id = -1;
  int start_frame = 0;
};

struct TrajectoryBuffer {
  std::vector<Episode> episodes;
  std::size_t capacity = 50000;  // in samples

  std::size_t total_samples() const {
    std::size_t n = 0;
    for (const Episode& e : episodes) n += e.steps.size();
    return n;
  }
  bool full() const { return total_samples() >= capacity; }
  void clear() { episodes.clear(); }
  double mean_reward() const;
  double mean_episode_length() const;
};

// GAE(lambda) with batch normalization of the advantages (zero mean, unit
// variance). Returns are advantage + value.
void compute_advantages(TrajectoryBuffer& buffer, double gamma, double lambda,
                        bool normalize = true);

// Gaussian policy over observation sequences with fixed diagonal log-std.
// Implementations own their parameters; forward/backward run per episode so
// recurrent policies can carry hidden state.
class SequencePolicy {
 public:
  struct Cache {
    virtual ~Cache() = default;
  };

  virtual ~SequencePolicy() = default;
  virtual Eigen::Index obs_dim() const = 0;
  virtual Eigen::Index act_dim() const = 0;
  virtual const VectorXd& log_std() const = 0;
  virtual Eigen::Index param_count() const = 0;
  virtual VectorXd get_params() const = 0;     // gather across sub-networks
  virtual void set_params(const VectorXd&) = 0;

  // Means for every step of an episode; cache is optional.
  virtual std::vector<VectorXd> forward_episode(const std::vector<VectorXd>& obs,
                                                std::unique_ptr<Cache>* cache) const = 0;
  // Accumulate parameter gradients given per-step dL/dmean.
  virtual void backward_episode(const Cache& cache, const std::vector<VectorXd>& dmeans,
                                VectorXd* dparams) const = 0;

  VectorXd mean_single(const VectorXd& obs) const {
    std::vector<VectorXd> m = forward_episode({obs}, nullptr);
    return m[0];
  }
};

// Value function: MLP over observations.
class ValueNet {
 public:
  ValueNet() = default;
  ValueNet(int obs_dim, std::vector<int> hidden, Rng& rng);
  double value(const VectorXd& obs) const;
  double value(const VectorXd& obs, MlpCache* cache) const;
  MlpNet& net() { return net_; }
  const MlpNet& net() const { return net_; }

 private:
  MlpNet net_;
};

struct PpoConfig {
  double gamma = 0.95;
  double lambda_gae = 0.95;
  double clip_eps = 0.2;
  double policy_lr = 5e-5;
  double value_lr = 3e-4;
  int epochs = 10;
  int minibatch_samples = 2048;
  double grad_clip = 10.0;  // L2 norm cap; 0 disables
  std::uint64_t shuffle_seed = 17;
};

struct PpoStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double mean_ratio = 1.0;
  double clip_fraction = 0.0;
  double mean_reward = 0.0;
  double mean_episode_len = 0.0;
};

// Clipped-surrogate PPO update over the buffer. Advantages must have been
// computed. Minibatches are whole episodes accumulated up to
// minibatch_samples. Throws on empty buffers; aborts on non-finite losses.
PpoStats ppo_update(TrajectoryBuffer& buffer, SequencePolicy& policy, ValueNet& value,
                    Adam& policy_opt, Adam& value_opt, const PpoConfig& cfg, int iteration);

// Clip gradient to an L2 norm ceiling (no-op when max_norm <= 0).
void clip_gradient(VectorXd& grad, double max_norm);

}  // namespace humo
