#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "humo/checkpoint.hpp"
#include "humo/metrics.hpp"
#include "humo/motion.hpp"
#include "humo/rl.hpp"
#include "humo/sim.hpp"

namespace humo {

// ---------------------------------------------------------------------------
// Features

// Dimension of the agent-centric feature vector for a model:
// 4 + 2*(1+4+A) + (7+A) + (6+A) + 1 + 2*3*(B-1) + 2*4*(B-1),
// which is 640 for the default 25-body / 69-angle humanoid.
int uhc_feature_dim(const HumanoidModel& model);

// Agent-centric feature concatenation, in order: de-headed simulated root
// orientation (4); agent-centric simulated pose [z, rot, angles]; the same
// for the target; pose difference [target-minus-sim position (agent frame),
// rotation difference, angle difference]; generalized velocity in the agent
// frame; heading difference (sim minus target); agent-centric target joint
// positions; sim-minus-target joint position differences; agent-centric
// target joint rotations (quaternions); joint rotation differences.
// All quantities use the simulated root's heading/position for the frame, so
// the vector is invariant to a joint global yaw + horizontal translation.
VectorXd uhc_features(const HumanoidModel& model, const Pose& q, const QVel& qdot,
                      const Pose& q_hat_next);

// ---------------------------------------------------------------------------
// Actions

// Action layout: [delta PD target (A), residual force (3), residual torque (3)].
inline int uhc_action_dim(const HumanoidModel& model) { return model.num_angles() + 6; }

// Residual action representation: PD target = target joint angles + delta;
// the residual wrench passes through.
ControlInput residual_action_to_pd_target(const HumanoidModel& model, const Pose& q_hat_next,
                                          const VectorXd& action);

// ---------------------------------------------------------------------------
// Reward

struct UhcRewardWeights {
  double w_jr = 0.3, w_jp = 0.55, w_jv = 0.1, w_res = 0.05;
  double k_jr = 2.0, k_jp = 5.0, k_jv = 0.005, k_res = 1.0;
};

struct UhcRewardTerms {
  double r_jr = 0.0, r_jp = 0.0, r_jv = 0.0, r_res = 0.0, total = 0.0;
};

// Imitation reward in (0, 1]: world-frame joint rotation / position / velocity
// tracking over every body (root included) plus the residual-force penalty.
UhcRewardTerms uhc_reward(const HumanoidModel& model, const Pose& q, const Pose& q_hat,
                          const QVel& qvel, const QVel& qvel_hat, const Vector3d& eta_force,
                          const Vector3d& eta_torque, const UhcRewardWeights& w = {});

// ---------------------------------------------------------------------------
// Policy

struct UhcNetConfig {
  int num_primitives = 8;
  std::vector<int> primitive_hidden = {512, 256};
  std::vector<int> composer_hidden = {300, 200};
  std::vector<int> value_hidden = {512, 256};
  double cov_std = 0.1;
};

// Multiplicative compositional policy: n primitive MLPs plus a composer MLP
// whose softplus weights select the normalized mean combination.
class UhcPolicy final : public SequencePolicy {
 public:
  UhcPolicy() = default;
  UhcPolicy(int obs_dim, int act_dim, const UhcNetConfig& cfg, Rng& rng);

  Eigen::Index obs_dim() const override { return obs_dim_; }
  Eigen::Index act_dim() const override { return act_dim_; }
  const VectorXd& log_std() const override { return log_std_; }
  Eigen::Index param_count() const override;
  VectorXd get_params() const override;
  void set_params(const VectorXd& p) override;

  std::vector<VectorXd> forward_episode(const std::vector<VectorXd>& obs,
                                        std::unique_ptr<Cache>* cache) const override;
  void backward_episode(const Cache& cache, const std::vector<VectorXd>& dmeans,
                        VectorXd* dparams) const override;

  VectorXd mean(const VectorXd& obs) const { return mean_single(obs); }
  int num_primitives() const { return static_cast<int>(primitives_.size()); }

  void save(Checkpoint* ck, const std::string& prefix) const;
  void load(const Checkpoint& ck, const std::string& prefix);

 private:
  Eigen::Index obs_dim_ = 0, act_dim_ = 0;
  std::vector<MlpNet> primitives_;
  MlpNet composer_;
  VectorXd log_std_;
};

// ---------------------------------------------------------------------------
// Value-guided sequence sampling

struct FrameRef {
  int clip = 0;
  int frame = 0;
};

struct ValueGuidedSampler {
  VectorXd probs;  // normalized over all eligible dataset frames
  std::vector<FrameRef> refs;

  FrameRef sample(Rng& rng) const {
    if (refs.empty()) throw Error("value_guided_sample: empty dataset");
    return refs[rng.sample_discrete(probs)];
  }
};

// Scores every frame j by V(features((q_j, 0), q_{j+1})) and builds the
// softmax(-v / temperature) distribution. Scores refresh once per call.
ValueGuidedSampler build_value_guided_sampler(const HumanoidModel& model, const Dataset& dataset,
                                              const ValueNet& value, double temperature);

// Softmax probabilities for raw scores (exposed for tests).
VectorXd value_sampling_probs(const VectorXd& values, double temperature);

// ---------------------------------------------------------------------------
// Rollout / training / evaluation

struct UhcConfig {
  UhcNetConfig net;
  SimConfig sim;
  PpoConfig ppo{/*gamma*/ 0.95, /*lambda*/ 0.95, /*clip*/ 0.2,
                /*policy_lr*/ 5e-5, /*value_lr*/ 3e-4,
                /*epochs*/ 10, /*minibatch*/ 2048, /*grad_clip*/ 10.0, /*seed*/ 17};
  std::size_t batch_size = 50000;  // samples per PPO round
  double temperature = 2.0;        // value-guided sampling
  int episode_len = 300;           // fixed-length window, clipped at clip end
  double termination_threshold = 0.5;  // mean body position error, m
  int iterations = 100;
  int checkpoint_every = 0;  // 0: only final
  int workers = 1;
  std::uint64_t seed = 0;
};

struct UhcRolloutInfo {
  Episode episode;
  bool fell = false;
  bool diverged = false;
  std::vector<Pose> sim_poses;  // pose after each step
};

// One imitation episode: init at (clip[start], 0), step the policy at 30 Hz.
// `playback` bypasses dynamics and sets the target state directly (oracle
// path used by tests and ground-truth evaluation).
UhcRolloutInfo uhc_rollout(const HumanoidModel& model, const Scene& scene, const UhcConfig& cfg,
                           const UhcPolicy& policy, const ValueNet& value,
                           const MotionSequence& clip, const std::vector<QVel>& clip_vels,
                           int start, int max_len, Rng& rng, bool stochastic,
                           bool playback = false);

class UhcTrainer {
 public:
  UhcTrainer(const HumanoidModel& model, const Scene& scene, const Dataset& dataset,
             UhcConfig cfg);

  // One sampling round: refresh frame scores, collect to capacity, PPO update.
  PpoStats iterate();
  int iteration() const { return iteration_; }

  UhcPolicy& policy() { return policy_; }
  const UhcPolicy& policy() const { return policy_; }
  ValueNet& value() { return value_; }
  const ValueNet& value() const { return value_; }
  const UhcConfig& config() const { return cfg_; }

  void save_checkpoint(const std::string& path) const;
  void load_checkpoint(const std::string& path);

  using LogFn = std::function<void(int iteration, const PpoStats&)>;
  void set_logger(LogFn fn) { log_ = std::move(fn); }

 private:
  const HumanoidModel* model_;
  Scene scene_;
  Dataset dataset_;
  std::vector<std::vector<QVel>> clip_vels_;
  UhcConfig cfg_;
  UhcPolicy policy_;
  ValueNet value_;
  Adam policy_opt_, value_opt_;
  Rng rng_;
  int iteration_ = 0;
  LogFn log_;
};

// Save/load a standalone UHC checkpoint (policy + value + config meta).
void save_uhc_checkpoint(const std::string& path, const UhcPolicy& policy, const ValueNet& value,
                         const UhcConfig& cfg, const std::string& rng_state,
                         const Adam* policy_opt = nullptr, const Adam* value_opt = nullptr);
struct UhcBundle {
  UhcPolicy policy;
  ValueNet value;
  UhcConfig cfg;
  Checkpoint raw;
};
UhcBundle load_uhc_checkpoint(const std::string& path, const HumanoidModel& model);

// Mean-action imitation evaluation over a dataset: S_inter (no fall),
// E_root, E_mpjpe, E_acc (FS/PT filled too). `playback` uses the oracle
// set-state path instead of dynamics.
MetricsReport imitation_eval(const HumanoidModel& model, const Scene& scene, const UhcConfig& cfg,
                             const UhcPolicy& policy, const ValueNet& value,
                             const Dataset& dataset, bool playback = false);

}  // namespace humo
