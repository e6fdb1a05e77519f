#pragma once

#include <optional>
#include <string>
#include <vector>

#include "humo/metrics.hpp"
#include "humo/motion.hpp"
#include "humo/rl.hpp"
#include "humo/uhc.hpp"

namespace humo {

// ---------------------------------------------------------------------------
// Scene context

// Per-frame slice of the scene context channel. The object block is zeroed
// entirely (one-hot included) when there is no object in the scene.
struct KinStepContext {
  VectorXd phi;  // opaque image-feature stand-in
  bool has_object = false;
  ObjectClass obj_cls = ObjectClass::none;
  Vector3d obj_pos = Vector3d::Zero();
  Quat obj_rot;
  Vector3d cam_pos = Vector3d::Zero();
  Quat cam_rot;
};

struct SceneContext {
  std::vector<KinStepContext> frames;
  int length() const { return static_cast<int>(frames.size()); }

  // Extract the context channels of a motion clip (phi, camera, object 0).
  static SceneContext from_clip(const MotionSequence& clip);
};

// Object one-hot slot order: chair, box, obstacle, none (the none slot stays
// zero: an absent object zeroes the whole 11-dim block).
VectorXd object_state_vector(bool has_object, ObjectClass cls, const Vector3d& pos,
                             const Quat& rot);

// Input layout: [agent-centric root orientation (4), joint angles (A),
// phi_{t+1} (P), agent-centric object state (11), agent-centric camera (7)].
int kin_input_dim(const HumanoidModel& model, int phi_dim);
inline int kin_output_dim(const HumanoidModel& model) { return 6 + model.num_angles(); }

// Agent-centric step input built from the base pose (kinematic in Alg. 1,
// simulated in Alg. 2) and the next-frame context.
VectorXd kin_input_transform(const HumanoidModel& model, const Pose& base,
                             const KinStepContext& next_ctx);

// Eq.-1 style finite integration at dt = 1/30: the root integrates the
// angular/linear velocity, the joint angles are replaced outright.
Pose finite_integrate(const Vector3d& omega, const Vector3d& v, const VectorXd& jrot_next,
                      const Pose& base, double dt = 1.0 / 30.0);

// ---------------------------------------------------------------------------
// Networks

struct KinNetConfig {
  int gru_hidden = 1024;
  std::vector<int> mlp_hidden = {1024, 512, 256};
  int init_gru_hidden = 256;
  std::vector<int> init_mlp_hidden = {256};
  std::vector<int> value_hidden = {512, 256};
  double cov_std = 0.04;
  int phi_dim = 64;
};

// Per-step pose predictor: GRU followed by an MLP head, Gaussian with fixed
// diagonal std. Output layout: [root angular velocity (3), root linear
// velocity (3), next-frame joint angles (A)].
class KinPolicy final : public SequencePolicy {
 public:
  KinPolicy() = default;
  KinPolicy(int obs_dim, int act_dim, const KinNetConfig& cfg, Rng& rng);

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

  // Stateful stepping for closed-loop rollouts.
  struct RolloutState {
    VectorXd hidden;
  };
  RolloutState start() const { return {gru_.initial_hidden()}; }
  VectorXd step_mean(RolloutState* state, const VectorXd& obs) const;

  void save(Checkpoint* ck, const std::string& prefix) const;
  void load(const Checkpoint& ck, const std::string& prefix);

  const GruCell& gru() const { return gru_; }

 private:
  Eigen::Index obs_dim_ = 0, act_dim_ = 0;
  GruCell gru_;
  MlpNet head_;
  VectorXd log_std_;
};

// Initialization regressor: GRU over per-frame context features, MLP head on
// the final hidden state, emitting [root pos (3), root quat raw (4), joint
// angles (A)]; the quaternion is normalized into the pose.
class KinInitNet {
 public:
  KinInitNet() = default;
  KinInitNet(int frame_dim, int num_angles, const KinNetConfig& cfg, Rng& rng);

  // World-frame per-frame features: [phi, object state (11), camera (7)].
  static std::vector<VectorXd> frame_features(const SceneContext& ctx);
  static int frame_dim(int phi_dim) { return phi_dim + 11 + 7; }

  Pose infer(const std::vector<VectorXd>& feats) const;

  struct Cache {
    std::vector<GruCache> gru;
    std::vector<VectorXd> hiddens;
    MlpCache head;
    VectorXd raw_out;
  };
  Pose infer(const std::vector<VectorXd>& feats, Cache* cache) const;
  // Adjoint wrt the raw output vector [pos, quat raw, angles].
  void backward(const Cache& cache, const std::vector<VectorXd>& feats, const VectorXd& d_raw,
                VectorXd* dparams) const;

  Eigen::Index param_count() const { return gru_.param_count() + head_.param_count(); }
  VectorXd get_params() const;
  void set_params(const VectorXd& p);
  int num_angles() const { return num_angles_; }

  void save(Checkpoint* ck, const std::string& prefix) const;
  void load(const Checkpoint& ck, const std::string& prefix);

 private:
  int num_angles_ = 0;
  GruCell gru_;
  MlpNet head_;
};

// ---------------------------------------------------------------------------
// Supervised loss (six squared-norm terms per frame)

struct SlFrameTarget {
  Pose gt;
  bool has_object = false;
  // World object pose seen by the predicted side (scene/simulated) and the
  // ground-truth side; the loss compares their agent-centric re-expressions.
  Vector3d obj_pos_pred = Vector3d::Zero();
  Quat obj_rot_pred;
  Vector3d obj_pos_gt = Vector3d::Zero();
  Quat obj_rot_gt;
};

struct SlGrad {
  Vector3d d_pos = Vector3d::Zero();
  Vector4d d_quat_raw = Vector4d::Zero();
  VectorXd d_angles;
};

// Loss of one predicted frame (position, raw quaternion, joint angles)
// against its target: root rotation/position, agent-centric object
// rotation/position, joint rotations, FK joint positions. Gradients flow
// through FK and the agent-centric transform.
double sl_frame_loss(const HumanoidModel& model, const Vector3d& pred_pos,
                     const Vector4d& pred_quat_raw, const VectorXd& pred_angles,
                     const SlFrameTarget& target, SlGrad* grad);

// ---------------------------------------------------------------------------
// Eq.-3 reward

struct KinRewardWeights {
  double w_hp = 0.15, w_hq = 0.15, w_jv_gt = 0.1, w_jr_gt = 0.2, w_jr_dyna = 0.2,
         w_jp_dyna = 0.2;
  double k_h = 45.0, k_jv = 0.005, k_jr = 50.0, k_jp = 50.0;
};

struct KinRewardTerms {
  double r_hp = 0, r_hq = 0, r_jv = 0, r_jr_gt = 0, r_jr_dyna = 0, r_jp_dyna = 0, total = 0;
};

// Motion imitation + dynamics self-supervision reward in (0, 1]: camera
// position/orientation tracking, ground-truth joint velocity and rotation
// matching, and agreement between the simulated pose and the kinematic
// target (rotations and FK positions).
KinRewardTerms kin_reward(const HumanoidModel& model, const Pose& sim_pose, const QVel& sim_vel,
                          const Pose& gt_pose, const QVel& gt_vel, const Pose& kin_target,
                          const Vector3d& cam_pos_gt, const Quat& cam_rot_gt,
                          const KinRewardWeights& w = {}, KinRewardTerms* terms = nullptr);

// ---------------------------------------------------------------------------
// Training (Alg. 1 supervised, Alg. 2 dynamics-regulated) and test rollout

struct KinConfig {
  KinNetConfig net;
  SimConfig sim;
  PpoConfig ppo{/*gamma*/ 0.95, /*lambda*/ 0.95, /*clip*/ 0.2,
                /*policy_lr*/ 5e-4, /*value_lr*/ 3e-4,
                /*epochs*/ 10, /*minibatch*/ 2048, /*grad_clip*/ 10.0, /*seed*/ 23};
  std::size_t rl_batch = 10000;   // samples per dynamics-regulated round
  std::size_t sl_batch = 10000;   // samples per supervised memory fill
  int sl_epochs = 10;             // updates per filled memory
  double sl_lr = 3e-4;
  int warmstart_rounds = 20;      // optional Alg.-1 rounds before Alg. 2
  bool warmstart = true;
  double termination_threshold = 0.5;
  double failsafe_threshold = 0.5;
  std::uint64_t seed = 0;
  int workers = 1;
  KinRewardWeights reward;
};

// One stored step of supervised experience. base is the pose the policy saw
// (its own prediction in Alg. 1, the simulated pose in Alg. 2).
struct SlStep {
  Pose base;
  KinStepContext ctx_next;
  SlFrameTarget target;
};

struct SlEpisode {
  int clip_id = -1;
  std::vector<SlStep> steps;
  std::vector<VectorXd> init_feats;  // full-clip context for the init net
  SlFrameTarget first_target;        // frame-1 supervision
};

struct SlMemory {
  std::vector<SlEpisode> episodes;
  std::size_t total_samples() const;
};

// Teacher-forced gradient of the Eq.-2 loss over one stored episode; shared
// by Alg. 1 and the supervised phase of Alg. 2 (identical by construction
// when the simulated poses equal the kinematic ones).
double sl_episode_gradient(const HumanoidModel& model, const KinPolicy& policy,
                           const KinInitNet& init, const SlEpisode& episode, VectorXd* d_policy,
                           VectorXd* d_init);

class KinTrainer {
 public:
  KinTrainer(const HumanoidModel& model, const Dataset& dataset, KinConfig cfg,
             const UhcPolicy* uhc);  // uhc may be null for Alg.-1-only training

  // Alg. 1: autoregressive kinematic rollouts into memory, then sl_epochs
  // supervised updates. Returns the mean loss of the last epoch.
  double supervised_round();

  // Alg. 2: dynamics-regulated rollouts through the UHC + simulator, then
  // RL (PPO) and supervised updates on the collected memory.
  PpoStats dynamics_regulated_round();

  KinPolicy& policy() { return policy_; }
  KinInitNet& init_net() { return init_; }
  ValueNet& value() { return value_; }
  const KinConfig& config() const { return cfg_; }
  int round() const { return round_; }

  void save_checkpoint(const std::string& path) const;
  void load_checkpoint(const std::string& path);

  // Test hook: replace the physics transition by perfect playback of the
  // kinematic target (used by the stub-equality tests).
  void set_playback_stub(bool on) { playback_stub_ = on; }

  // Collection without updates (exposed for tests).
  SlMemory collect_supervised(std::size_t min_samples);
  void collect_dynreg(std::size_t min_samples, TrajectoryBuffer* rl, SlMemory* sl);

 private:
  double sl_update_epoch(const SlMemory& memory);

  const HumanoidModel* model_;
  Dataset dataset_;
  std::vector<std::vector<QVel>> clip_vels_;
  std::vector<SceneContext> contexts_;
  KinConfig cfg_;
  const UhcPolicy* uhc_;
  KinPolicy policy_;
  KinInitNet init_;
  ValueNet value_;
  Adam policy_opt_, value_opt_, sl_policy_opt_, sl_init_opt_;
  Rng rng_;
  int round_ = 0;
  bool playback_stub_ = false;
};

void save_kin_checkpoint(const std::string& path, const KinPolicy& policy,
                         const KinInitNet& init, const ValueNet& value, const KinConfig& cfg,
                         const std::string& rng_state);
struct KinBundle {
  KinPolicy policy;
  KinInitNet init;
  ValueNet value;
  KinConfig cfg;
  Checkpoint raw;
};
KinBundle load_kin_checkpoint(const std::string& path, const HumanoidModel& model);

// Closed-loop test rollout: mean actions everywhere, fail-safe active.
struct RolloutTestResult {
  std::vector<Pose> sim_poses;    // frames 1..T (includes the initial frame)
  std::vector<Pose> kin_targets;  // predicted kinematic targets, same length
  int failsafe_resets = 0;
  EpisodeTrace trace;
  SequenceMetrics metrics;        // vs the clip's ground truth
  std::vector<std::string> dump_lines;  // JSON-lines SimState summaries
};

RolloutTestResult kin_rollout_test(const HumanoidModel& model, const KinConfig& cfg,
                                   const KinPolicy& policy, const KinInitNet& init,
                                   const UhcPolicy& uhc, const MotionSequence& clip,
                                   bool want_dump = false);

}  // namespace humo
