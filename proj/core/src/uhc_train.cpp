#include <limits>
#include <thread>

#include "humo/uhc.hpp"

namespace humo {

UhcTrainer::UhcTrainer(const HumanoidModel& model, const Scene& scene, const Dataset& dataset,
                       UhcConfig cfg)
    : model_(&model), scene_(scene), dataset_(dataset), cfg_(cfg), rng_(cfg.seed) {
  Rng init_rng(split_seed(cfg_.seed, 1));
  policy_ = UhcPolicy(uhc_feature_dim(model), uhc_action_dim(model), cfg_.net, init_rng);
  value_ = ValueNet(uhc_feature_dim(model), cfg_.net.value_hidden, init_rng);
  policy_opt_ = Adam(policy_.param_count(), cfg_.ppo.policy_lr);
  value_opt_ = Adam(value_.net().params().size(), cfg_.ppo.value_lr);
  for (const MotionSequence& clip : dataset_.clips) {
    if (clip.frames[0].joint_angles.size() != model.num_angles())
      throw ShapeError("train_uhc: clip '" + clip.name + "' does not match the model");
    clip_vels_.push_back(finite_difference_velocity(clip.frames, 1.0 / clip.fps));
  }
}

PpoStats UhcTrainer::iterate() {
  // Frame scores refresh once per sampling round.
  const ValueGuidedSampler sampler =
      build_value_guided_sampler(*model_, dataset_, value_, cfg_.temperature);

  TrajectoryBuffer buffer;
  buffer.capacity = cfg_.batch_size;

  // Episodes are seeded by (seed, iteration, index), so the collected set is
  // identical for any worker count: workers fill waves of consecutive
  // indices and the merge keeps the shortest prefix reaching capacity.
  const int workers = std::max(1, cfg_.workers);
  int next_index = 0;
  while (!buffer.full()) {
    std::vector<UhcRolloutInfo> wave(workers);
    std::vector<FrameRef> starts(workers);
    for (int w = 0; w < workers; ++w) {
      Rng ep_rng(split_seed(cfg_.seed, (static_cast<std::uint64_t>(iteration_) << 24) ^
                                           static_cast<std::uint64_t>(next_index + w) * 2 + 3));
      starts[w] = sampler.sample(ep_rng);
    }
    auto run_one = [&](int w) {
      Rng ep_rng(split_seed(cfg_.seed, (static_cast<std::uint64_t>(iteration_) << 24) ^
                                           static_cast<std::uint64_t>(next_index + w) * 2 + 4));
      const FrameRef ref = starts[w];
      wave[w] = uhc_rollout(*model_, scene_, cfg_, policy_, value_, dataset_.clips[ref.clip],
                            clip_vels_[ref.clip], ref.frame, cfg_.episode_len, ep_rng,
                            /*stochastic=*/true);
      wave[w].episode.clip_id = ref.clip;
    };
    if (workers == 1) {
      run_one(0);
    } else {
      std::vector<std::thread> pool;
      for (int w = 0; w < workers; ++w) pool.emplace_back(run_one, w);
      for (auto& t : pool) t.join();
    }
    for (int w = 0; w < workers && !buffer.full(); ++w)
      buffer.episodes.push_back(std::move(wave[w].episode));
    next_index += workers;
  }

  compute_advantages(buffer, cfg_.ppo.gamma, cfg_.ppo.lambda_gae);
  const PpoStats stats =
      ppo_update(buffer, policy_, value_, policy_opt_, value_opt_, cfg_.ppo, iteration_);
  ++iteration_;
  if (log_) log_(iteration_, stats);
  return stats;
}

void UhcTrainer::save_checkpoint(const std::string& path) const {
  save_uhc_checkpoint(path, policy_, value_, cfg_, rng_.state_string(), &policy_opt_,
                      &value_opt_);
}

void UhcTrainer::load_checkpoint(const std::string& path) {
  UhcBundle b = load_uhc_checkpoint(path, *model_);
  policy_ = std::move(b.policy);
  value_ = std::move(b.value);
  if (b.raw.has("policy_opt.m")) load_adam(b.raw, "policy_opt", &policy_opt_);
  if (b.raw.has("value_opt.m")) load_adam(b.raw, "value_opt", &value_opt_);
  if (!b.raw.rng_state.empty()) rng_.set_state_string(b.raw.rng_state);
  iteration_ = b.raw.meta.value("iteration", 0);
}

void save_uhc_checkpoint(const std::string& path, const UhcPolicy& policy, const ValueNet& value,
                         const UhcConfig& cfg, const std::string& rng_state,
                         const Adam* policy_opt, const Adam* value_opt) {
  Checkpoint ck;
  ck.kind = "uhc";
  ck.rng_state = rng_state;
  ck.meta["num_primitives"] = cfg.net.num_primitives;
  ck.meta["primitive_hidden"] = cfg.net.primitive_hidden;
  ck.meta["composer_hidden"] = cfg.net.composer_hidden;
  ck.meta["value_hidden"] = cfg.net.value_hidden;
  ck.meta["cov_std"] = cfg.net.cov_std;
  policy.save(&ck, "policy");
  ck.add("value.params", value.net().params());
  if (policy_opt) save_adam(&ck, "policy_opt", *policy_opt);
  if (value_opt) save_adam(&ck, "value_opt", *value_opt);
  ck.save(path);
}

UhcBundle load_uhc_checkpoint(const std::string& path, const HumanoidModel& model) {
  UhcBundle b;
  b.raw = Checkpoint::load(path);
  if (b.raw.kind != "uhc") throw IoError("not a uhc checkpoint: '" + path + "'");
  b.cfg.net.num_primitives = b.raw.meta.at("num_primitives").get<int>();
  b.cfg.net.primitive_hidden = b.raw.meta.at("primitive_hidden").get<std::vector<int>>();
  b.cfg.net.composer_hidden = b.raw.meta.at("composer_hidden").get<std::vector<int>>();
  b.cfg.net.value_hidden = b.raw.meta.at("value_hidden").get<std::vector<int>>();
  b.cfg.net.cov_std = b.raw.meta.at("cov_std").get<double>();
  Rng tmp(0);
  b.policy = UhcPolicy(uhc_feature_dim(model), uhc_action_dim(model), b.cfg.net, tmp);
  b.policy.load(b.raw, "policy");
  b.value = ValueNet(uhc_feature_dim(model), b.cfg.net.value_hidden, tmp);
  b.value.net().params() = b.raw.get("value.params");
  return b;
}

MetricsReport imitation_eval(const HumanoidModel& model, const Scene& scene, const UhcConfig& cfg,
                             const UhcPolicy& policy, const ValueNet& value,
                             const Dataset& dataset, bool playback) {
  MetricsReport report;
  for (int c = 0; c < dataset.size(); ++c) {
    const MotionSequence& clip = dataset.clips[c];
    const std::vector<QVel> vels = finite_difference_velocity(clip.frames, 1.0 / clip.fps);
    Rng rng(split_seed(0xE7A1u, static_cast<std::uint64_t>(c)));

    UhcConfig eval_cfg = cfg;
    eval_cfg.termination_threshold = std::numeric_limits<double>::infinity();  // run full clip
    UhcRolloutInfo info = uhc_rollout(model, scene, eval_cfg, policy, value, clip, vels, 0,
                                      clip.length() - 1, rng, /*stochastic=*/false, playback);

    // Fall detection with the configured threshold (evaluation runs the full
    // clip but a fall still zeroes the success bit).
    bool fell = info.diverged;
    std::vector<std::vector<Vector3d>> jp, jp_hat;
    std::vector<Vector3d> root, root_hat;
    std::vector<Matrix4d> m_seq, m_hat_seq;
    std::vector<std::vector<Vector3d>> foot_seq(model.foot_bodies.size());
    for (std::size_t t = 0; t < info.sim_poses.size(); ++t) {
      const Pose& sim_pose = info.sim_poses[t];
      const Pose& gt = clip.frames[t + 1];
      const FkResult fk = forward_kinematics(model, sim_pose);
      const FkResult fk_hat = forward_kinematics(model, gt);
      std::vector<Vector3d> a(fk.world_pos.begin() + 1, fk.world_pos.end());
      std::vector<Vector3d> b(fk_hat.world_pos.begin() + 1, fk_hat.world_pos.end());
      double err = (sim_pose.root_pos - gt.root_pos).norm();
      for (std::size_t j = 0; j < a.size(); ++j) err += (a[j] - b[j]).norm();
      if (err / model.num_bodies() > cfg.termination_threshold) fell = true;
      for (std::size_t fi = 0; fi < model.foot_bodies.size(); ++fi)
        foot_seq[fi].push_back(fk.world_pos[model.foot_bodies[fi]]);
      jp.push_back(std::move(a));
      jp_hat.push_back(std::move(b));
      root.push_back(sim_pose.root_pos);
      root_hat.push_back(gt.root_pos);
      m_seq.push_back(root_transform_matrix(sim_pose));
      m_hat_seq.push_back(root_transform_matrix(gt));
    }

    SequenceMetrics m;
    m.name = clip.name;
    m.action = clip.action;
    m.success = fell ? 0 : 1;
    if (!jp.empty()) {
      m.e_root = root_error(m_seq, m_hat_seq);
      m.e_mpjpe_mm = mpjpe(jp, jp_hat, root, root_hat).mean_mm;
      if (jp.size() >= 3) m.e_acc = accel_error(jp, jp_hat);
      if (!model.foot_bodies.empty()) {
        double fs = 0.0;
        for (const auto& seq : foot_seq) fs += foot_sliding(seq);
        m.fs_mm = fs / static_cast<double>(model.foot_bodies.size());
      }
    } else {
      m.success = 0;
    }
    report.sequences.push_back(std::move(m));
  }
  return report;
}

}  // namespace humo
