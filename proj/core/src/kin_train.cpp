#include <algorithm>
#include <limits>
#include <thread>

#include <json.hpp>

#include "humo/detail/diffquat.hpp"
#include "humo/kin.hpp"

namespace humo {

std::size_t SlMemory::total_samples() const {
  std::size_t n = 0;
  for (const SlEpisode& e : episodes) n += e.steps.size();
  return n;
}

namespace {

// Split a policy output into (omega, v, jrot).
void split_output(const VectorXd& out, Vector3d* omega, Vector3d* v, VectorXd* jrot) {
  *omega = out.segment<3>(0);
  *v = out.segment<3>(3);
  *jrot = out.tail(out.size() - 6);
}

// Gradient of the predicted frame through the finite-integration step:
// maps (d_pos, d_quat_raw, d_angles) to the policy-output adjoint.
VectorXd integrate_backward(const Vector3d& omega, const Pose& base, double dt,
                            const SlGrad& g) {
  using detail::qexp;
  using detail::qexp_backward;
  using detail::qmul_backward;
  VectorXd dout(6 + g.d_angles.size());
  // quat = qexp(omega dt) * base_quat
  Vector4d d_exp = Vector4d::Zero();
  qmul_backward(qexp(dt * omega), base.root_rot.wxyz(), g.d_quat_raw, &d_exp, nullptr);
  Vector3d d_omega = Vector3d::Zero();
  qexp_backward(dt * omega, d_exp, &d_omega);
  dout.segment<3>(0) = dt * d_omega;
  dout.segment<3>(3) = dt * g.d_pos;
  dout.tail(g.d_angles.size()) = g.d_angles;
  return dout;
}

double mean_body_error(const HumanoidModel& model, const Pose& a, const Pose& b) {
  const FkResult fa = forward_kinematics(model, a);
  const FkResult fb = forward_kinematics(model, b);
  double err = 0.0;
  for (int i = 0; i < model.num_bodies(); ++i)
    err += (fa.world_pos[i] - fb.world_pos[i]).norm();
  return err / model.num_bodies();
}

}  // namespace

double sl_episode_gradient(const HumanoidModel& model, const KinPolicy& policy,
                           const KinInitNet& init, const SlEpisode& episode, VectorXd* d_policy,
                           VectorXd* d_init) {
  double loss = 0.0;
  const double dt = 1.0 / 30.0;

  if (!episode.init_feats.empty()) {
    KinInitNet::Cache cache;
    (void)init.infer(episode.init_feats, &cache);
    const VectorXd& raw = cache.raw_out;
    Vector4d quat_raw = raw.segment<4>(3);
    quat_raw[0] += 1.0;  // identity bias applied by infer()
    SlGrad g;
    g.d_angles = VectorXd::Zero(model.num_angles());
    loss += sl_frame_loss(model, raw.segment<3>(0), quat_raw, raw.tail(model.num_angles()),
                          episode.first_target, d_init ? &g : nullptr);
    if (d_init) {
      VectorXd d_raw(raw.size());
      d_raw.segment<3>(0) = g.d_pos;
      d_raw.segment<4>(3) = g.d_quat_raw;
      d_raw.tail(model.num_angles()) = g.d_angles;
      init.backward(cache, episode.init_feats, d_raw, d_init);
    }
  }

  if (!episode.steps.empty()) {
    std::vector<VectorXd> obs;
    obs.reserve(episode.steps.size());
    for (const SlStep& s : episode.steps)
      obs.push_back(kin_input_transform(model, s.base, s.ctx_next));
    std::unique_ptr<SequencePolicy::Cache> cache;
    const std::vector<VectorXd> outs = policy.forward_episode(obs, d_policy ? &cache : nullptr);

    std::vector<VectorXd> douts(outs.size());
    for (std::size_t t = 0; t < outs.size(); ++t) {
      const SlStep& s = episode.steps[t];
      Vector3d omega, v;
      VectorXd jrot;
      split_output(outs[t], &omega, &v, &jrot);
      const Vector3d pred_pos = s.base.root_pos + dt * v;
      const Vector4d pred_quat = detail::qmul(detail::qexp(dt * omega), s.base.root_rot.wxyz());
      SlGrad g;
      g.d_angles = VectorXd::Zero(model.num_angles());
      loss += sl_frame_loss(model, pred_pos, pred_quat, jrot, s.target, d_policy ? &g : nullptr);
      if (d_policy) douts[t] = integrate_backward(omega, s.base, dt, g);
    }
    if (d_policy) policy.backward_episode(*cache, douts, d_policy);
  }
  return loss;
}

// ---------------------------------------------------------------------------
// Trainer

KinTrainer::KinTrainer(const HumanoidModel& model, const Dataset& dataset, KinConfig cfg,
                       const UhcPolicy* uhc)
    : model_(&model), dataset_(dataset), cfg_(cfg), uhc_(uhc), rng_(cfg.seed) {
  if (dataset_.size() == 0) throw Error("KinTrainer: empty dataset");
  int phi_dim = -1;
  for (const MotionSequence& clip : dataset_.clips) {
    if (clip.frames[0].joint_angles.size() != model.num_angles())
      throw ShapeError("train_kin: clip '" + clip.name + "' does not match the model");
    clip_vels_.push_back(finite_difference_velocity(clip.frames, 1.0 / clip.fps));
    contexts_.push_back(SceneContext::from_clip(clip));
    const int pd = clip.has_phi() ? static_cast<int>(clip.phi[0].size()) : 0;
    if (phi_dim < 0) phi_dim = pd;
    if (phi_dim != pd) throw ShapeError("train_kin: inconsistent phi dims across clips");
  }
  cfg_.net.phi_dim = phi_dim;
  Rng init_rng(split_seed(cfg_.seed, 2));
  const int in_dim = kin_input_dim(model, phi_dim);
  policy_ = KinPolicy(in_dim, kin_output_dim(model), cfg_.net, init_rng);
  init_ = KinInitNet(KinInitNet::frame_dim(phi_dim), model.num_angles(), cfg_.net, init_rng);
  value_ = ValueNet(in_dim, cfg_.net.value_hidden, init_rng);
  policy_opt_ = Adam(policy_.param_count(), cfg_.ppo.policy_lr);
  value_opt_ = Adam(value_.net().params().size(), cfg_.ppo.value_lr);
  sl_policy_opt_ = Adam(policy_.param_count(), cfg_.sl_lr);
  sl_init_opt_ = Adam(init_.param_count(), cfg_.sl_lr);
}

SlMemory KinTrainer::collect_supervised(std::size_t min_samples) {
  SlMemory memory;
  int index = 0;
  while (memory.total_samples() < min_samples) {
    Rng ep_rng(split_seed(cfg_.seed, 0x51000000ull ^
                                         (static_cast<std::uint64_t>(round_) << 20) ^
                                         static_cast<std::uint64_t>(index)));
    const int c = ep_rng.uniform_int(0, dataset_.size() - 1);
    const MotionSequence& clip = dataset_.clips[c];
    const SceneContext& ctx = contexts_[c];

    SlEpisode ep;
    ep.clip_id = c;
    ep.init_feats = KinInitNet::frame_features(ctx);
    ep.first_target.gt = clip.frames[0];
    if (!clip.scene.objects.empty()) {
      const ObjectFrame of = clip.object_at(0);
      ep.first_target.has_object = true;
      ep.first_target.obj_pos_pred = of.position;
      ep.first_target.obj_rot_pred = of.rotation;
      ep.first_target.obj_pos_gt = of.position;
      ep.first_target.obj_rot_gt = of.rotation;
    }

    Pose base = init_.infer(ep.init_feats);
    KinPolicy::RolloutState state = policy_.start();
    for (int t = 0; t + 1 < clip.length(); ++t) {
      SlStep step;
      step.base = base;
      step.ctx_next = ctx.frames[t + 1];
      step.target.gt = clip.frames[t + 1];
      if (!clip.scene.objects.empty()) {
        const ObjectFrame of = clip.object_at(t + 1);
        step.target.has_object = true;
        step.target.obj_pos_pred = of.position;
        step.target.obj_rot_pred = of.rotation;
        step.target.obj_pos_gt = of.position;
        step.target.obj_rot_gt = of.rotation;
      }
      const VectorXd obs = kin_input_transform(*model_, base, step.ctx_next);
      const VectorXd out = policy_.step_mean(&state, obs);
      Vector3d omega, v;
      VectorXd jrot;
      split_output(out, &omega, &v, &jrot);
      base = finite_integrate(omega, v, jrot, base);
      ep.steps.push_back(std::move(step));
    }
    memory.episodes.push_back(std::move(ep));
    ++index;
  }
  return memory;
}

void KinTrainer::collect_dynreg(std::size_t min_samples, TrajectoryBuffer* rl, SlMemory* sl) {
  if (!uhc_) throw Error("dynamics-regulated training requires a UHC checkpoint");
  rl->capacity = min_samples;
  const double dt = 1.0 / 30.0;
  const double std_dev = std::exp(policy_.log_std()[0]);
  int index = 0;
  while (!rl->full()) {
    Rng ep_rng(split_seed(cfg_.seed, 0xD2000000ull ^
                                         (static_cast<std::uint64_t>(round_) << 20) ^
                                         static_cast<std::uint64_t>(index)));
    const int c = ep_rng.uniform_int(0, dataset_.size() - 1);
    const MotionSequence& clip = dataset_.clips[c];
    const SceneContext& ctx = contexts_[c];

    SlEpisode slep;
    slep.clip_id = c;
    slep.init_feats = KinInitNet::frame_features(ctx);
    slep.first_target.gt = clip.frames[0];
    if (!clip.scene.objects.empty()) {
      const ObjectFrame of = clip.object_at(0);
      slep.first_target.has_object = true;
      slep.first_target.obj_pos_pred = of.position;
      slep.first_target.obj_rot_pred = of.rotation;
      slep.first_target.obj_pos_gt = of.position;
      slep.first_target.obj_rot_gt = of.rotation;
    }

    Episode rlep;
    rlep.clip_id = c;

    Simulation sim(*model_, clip.scene, cfg_.sim);
    const Pose q1 = init_.infer(slep.init_feats);
    sim.set_state(q1, QVel::zero(model_->num_angles()));

    KinPolicy::RolloutState state = policy_.start();
    for (int t = 0; t + 1 < clip.length(); ++t) {
      const Pose base = sim.pose();
      KinStepContext slice = ctx.frames[t + 1];
      if (!clip.scene.objects.empty()) {
        // The policy sees the simulated object, not the reference channel.
        slice.obj_pos = sim.objects()[0].position;
        slice.obj_rot = sim.objects()[0].rotation;
      }
      const VectorXd obs = kin_input_transform(*model_, base, slice);
      const VectorXd mean = policy_.step_mean(&state, obs);
      VectorXd action = mean;
      if (!playback_stub_)
        for (Eigen::Index i = 0; i < action.size(); ++i) action[i] += std_dev * ep_rng.gaussian();

      Vector3d omega, v;
      VectorXd jrot;
      split_output(action, &omega, &v, &jrot);
      const Pose kin_target = finite_integrate(omega, v, jrot, base);

      bool diverged = false;
      if (playback_stub_) {
        sim.set_state(kin_target, QVel::zero(model_->num_angles()));
      } else {
        const VectorXd uhc_obs = uhc_features(*model_, sim.pose(), sim.qvel(), kin_target);
        const ControlInput control =
            residual_action_to_pd_target(*model_, kin_target, uhc_->mean(uhc_obs));
        try {
          sim.step(control);
        } catch (const SimDivergedError&) {
          diverged = true;
        }
      }

      Transition tr;
      tr.obs = obs;
      tr.act = action;
      tr.logp = gaussian_log_prob(mean, policy_.log_std(), action);
      tr.value = value_.value(obs);
      tr.reward = 0.0;

      SlStep step;
      step.base = base;
      step.ctx_next = slice;
      step.target.gt = clip.frames[t + 1];
      if (!clip.scene.objects.empty()) {
        const ObjectFrame of = clip.object_at(t + 1);
        step.target.has_object = true;
        step.target.obj_pos_pred = slice.obj_pos;
        step.target.obj_rot_pred = slice.obj_rot;
        step.target.obj_pos_gt = of.position;
        step.target.obj_rot_gt = of.rotation;
      }
      slep.steps.push_back(std::move(step));

      if (diverged) {
        tr.done = true;
        rlep.steps.push_back(std::move(tr));
        break;
      }
      tr.reward = kin_reward(*model_, sim.pose(), sim.qvel(), clip.frames[t + 1],
                             clip_vels_[c][t + 1], kin_target, ctx.frames[t + 1].cam_pos,
                             ctx.frames[t + 1].cam_rot, cfg_.reward)
                      .total;
      const bool fail =
          mean_body_error(*model_, sim.pose(), clip.frames[t + 1]) > cfg_.termination_threshold;
      tr.done = fail;
      rlep.steps.push_back(std::move(tr));
      if (fail) break;
    }
    // Clips are finite tasks: completion is terminal (no bootstrap).
    rlep.final_value = 0.0;
    rl->episodes.push_back(std::move(rlep));
    sl->episodes.push_back(std::move(slep));
    ++index;
  }
}

double KinTrainer::sl_update_epoch(const SlMemory& memory) {
  VectorXd d_policy = VectorXd::Zero(policy_.param_count());
  VectorXd d_init = VectorXd::Zero(init_.param_count());
  double loss = 0.0;
  std::size_t samples = 0;
  for (const SlEpisode& ep : memory.episodes) {
    loss += sl_episode_gradient(*model_, policy_, init_, ep, &d_policy, &d_init);
    samples += ep.steps.size() + 1;
  }
  const double inv = 1.0 / static_cast<double>(std::max<std::size_t>(samples, 1));
  d_policy *= inv;
  d_init *= inv;
  loss *= inv;
  if (!std::isfinite(loss) || !d_policy.allFinite() || !d_init.allFinite())
    throw NumericError("supervised update: non-finite loss or gradient");
  clip_gradient(d_policy, cfg_.ppo.grad_clip);
  clip_gradient(d_init, cfg_.ppo.grad_clip);
  VectorXd p = policy_.get_params();
  sl_policy_opt_.step(p, d_policy);
  policy_.set_params(p);
  VectorXd pi = init_.get_params();
  sl_init_opt_.step(pi, d_init);
  init_.set_params(pi);
  return loss;
}

double KinTrainer::supervised_round() {
  const SlMemory memory = collect_supervised(cfg_.sl_batch);
  double loss = 0.0;
  for (int e = 0; e < cfg_.sl_epochs; ++e) loss = sl_update_epoch(memory);
  ++round_;
  return loss;
}

PpoStats KinTrainer::dynamics_regulated_round() {
  TrajectoryBuffer rl;
  SlMemory sl;
  collect_dynreg(cfg_.rl_batch, &rl, &sl);
  compute_advantages(rl, cfg_.ppo.gamma, cfg_.ppo.lambda_gae);
  const PpoStats stats = ppo_update(rl, policy_, value_, policy_opt_, value_opt_, cfg_.ppo,
                                    round_);
  for (int e = 0; e < cfg_.sl_epochs; ++e) sl_update_epoch(sl);
  ++round_;
  return stats;
}

void KinTrainer::save_checkpoint(const std::string& path) const {
  Checkpoint ck;
  ck.kind = "kin";
  ck.rng_state = rng_.state_string();
  ck.meta["gru_hidden"] = cfg_.net.gru_hidden;
  ck.meta["mlp_hidden"] = cfg_.net.mlp_hidden;
  ck.meta["init_gru_hidden"] = cfg_.net.init_gru_hidden;
  ck.meta["init_mlp_hidden"] = cfg_.net.init_mlp_hidden;
  ck.meta["value_hidden"] = cfg_.net.value_hidden;
  ck.meta["cov_std"] = cfg_.net.cov_std;
  ck.meta["phi_dim"] = cfg_.net.phi_dim;
  ck.meta["round"] = round_;
  policy_.save(&ck, "policy");
  init_.save(&ck, "init");
  ck.add("value.params", value_.net().params());
  save_adam(&ck, "policy_opt", policy_opt_);
  save_adam(&ck, "value_opt", value_opt_);
  save_adam(&ck, "sl_policy_opt", sl_policy_opt_);
  save_adam(&ck, "sl_init_opt", sl_init_opt_);
  ck.save(path);
}

void KinTrainer::load_checkpoint(const std::string& path) {
  KinBundle b = load_kin_checkpoint(path, *model_);
  policy_.set_params(b.policy.get_params());
  init_.set_params(b.init.get_params());
  value_.net().params() = b.value.net().params();
  load_adam(b.raw, "policy_opt", &policy_opt_);
  load_adam(b.raw, "value_opt", &value_opt_);
  load_adam(b.raw, "sl_policy_opt", &sl_policy_opt_);
  load_adam(b.raw, "sl_init_opt", &sl_init_opt_);
  if (!b.raw.rng_state.empty()) rng_.set_state_string(b.raw.rng_state);
  round_ = b.raw.meta.value("round", 0);
}

void save_kin_checkpoint(const std::string& path, const KinPolicy& policy,
                         const KinInitNet& init, const ValueNet& value, const KinConfig& cfg,
                         const std::string& rng_state) {
  Checkpoint ck;
  ck.kind = "kin";
  ck.rng_state = rng_state;
  ck.meta["gru_hidden"] = cfg.net.gru_hidden;
  ck.meta["mlp_hidden"] = cfg.net.mlp_hidden;
  ck.meta["init_gru_hidden"] = cfg.net.init_gru_hidden;
  ck.meta["init_mlp_hidden"] = cfg.net.init_mlp_hidden;
  ck.meta["value_hidden"] = cfg.net.value_hidden;
  ck.meta["cov_std"] = cfg.net.cov_std;
  ck.meta["phi_dim"] = cfg.net.phi_dim;
  policy.save(&ck, "policy");
  init.save(&ck, "init");
  ck.add("value.params", value.net().params());
  ck.save(path);
}

KinBundle load_kin_checkpoint(const std::string& path, const HumanoidModel& model) {
  KinBundle b;
  b.raw = Checkpoint::load(path);
  if (b.raw.kind != "kin") throw IoError("not a kin checkpoint: '" + path + "'");
  b.cfg.net.gru_hidden = b.raw.meta.at("gru_hidden").get<int>();
  b.cfg.net.mlp_hidden = b.raw.meta.at("mlp_hidden").get<std::vector<int>>();
  b.cfg.net.init_gru_hidden = b.raw.meta.at("init_gru_hidden").get<int>();
  b.cfg.net.init_mlp_hidden = b.raw.meta.at("init_mlp_hidden").get<std::vector<int>>();
  b.cfg.net.value_hidden = b.raw.meta.at("value_hidden").get<std::vector<int>>();
  b.cfg.net.cov_std = b.raw.meta.at("cov_std").get<double>();
  b.cfg.net.phi_dim = b.raw.meta.at("phi_dim").get<int>();
  Rng tmp(0);
  const int in_dim = kin_input_dim(model, b.cfg.net.phi_dim);
  b.policy = KinPolicy(in_dim, kin_output_dim(model), b.cfg.net, tmp);
  b.policy.load(b.raw, "policy");
  b.init = KinInitNet(KinInitNet::frame_dim(b.cfg.net.phi_dim), model.num_angles(), b.cfg.net,
                      tmp);
  b.init.load(b.raw, "init");
  b.value = ValueNet(in_dim, b.cfg.net.value_hidden, tmp);
  b.value.net().params() = b.raw.get("value.params");
  return b;
}

// ---------------------------------------------------------------------------
// Test-time rollout with the fail-safe monitor

RolloutTestResult kin_rollout_test(const HumanoidModel& model, const KinConfig& cfg,
                                   const KinPolicy& policy, const KinInitNet& init,
                                   const UhcPolicy& uhc, const MotionSequence& clip,
                                   bool want_dump) {
  RolloutTestResult out;
  const SceneContext ctx = SceneContext::from_clip(clip);
  const std::vector<VectorXd> init_feats = KinInitNet::frame_features(ctx);

  Simulation sim(model, clip.scene, cfg.sim);
  Pose q1 = init.infer(init_feats);
  sim.set_state(q1, QVel::zero(model.num_angles()));
  out.sim_poses.push_back(sim.pose());
  out.kin_targets.push_back(q1);

  // Trace bookkeeping.
  EpisodeTrace& trace = out.trace;
  trace.action = clip.action;
  trace.desired_end_pos = clip.desired_end_pos;
  trace.has_desired_end = clip.has_desired_end;
  const double z0 = sim.pose().root_pos.z();
  Vector3d obj_start = Vector3d::Zero();
  int free_obj = -1;
  for (std::size_t i = 0; i < clip.scene.objects.size(); ++i)
    if (clip.scene.objects[i].mobility == ObjectMobility::free) {
      free_obj = static_cast<int>(i);
      obj_start = clip.scene.objects[i].position;
      break;
    }
  const int pelvis = 0;
  std::vector<int> leg_roots;
  for (int b = 1; b < model.num_bodies(); ++b)
    if (model.bodies[b].parent == 0 &&
        model.bodies[b].name.find("hip") != std::string::npos)
      leg_roots.push_back(b);

  KinPolicy::RolloutState state = policy.start();
  Pose kin_prev = q1;
  double pen_sum = 0.0;
  std::vector<std::vector<Vector3d>> foot_seq(model.foot_bodies.size());

  for (int t = 0; t + 1 < clip.length(); ++t) {
    KinStepContext slice = ctx.frames[t + 1];
    if (!clip.scene.objects.empty()) {
      slice.obj_pos = sim.objects()[0].position;
      slice.obj_rot = sim.objects()[0].rotation;
    }
    const VectorXd obs = kin_input_transform(model, sim.pose(), slice);
    const VectorXd mean = policy.step_mean(&state, obs);  // mean action at test time
    Vector3d omega, v;
    VectorXd jrot;
    split_output(mean, &omega, &v, &jrot);
    const Pose kin_target = finite_integrate(omega, v, jrot, sim.pose());

    bool diverged = false;
    const VectorXd uhc_obs = uhc_features(model, sim.pose(), sim.qvel(), kin_target);
    const ControlInput control =
        residual_action_to_pd_target(model, kin_target, uhc.mean(uhc_obs));
    try {
      sim.step(control);
    } catch (const SimDivergedError&) {
      diverged = true;
    }

    // Fail-safe: reset the simulation onto the kinematic pose when the
    // simulated joints drift too far from the kinematic reference.
    const FkResult fk_kin = forward_kinematics(model, kin_target);
    bool reset = diverged;
    if (!diverged) {
      const FkResult fk_sim = forward_kinematics(model, sim.pose());
      std::vector<Vector3d> sim_j(fk_sim.world_pos.begin(), fk_sim.world_pos.end());
      std::vector<Vector3d> kin_j(fk_kin.world_pos.begin(), fk_kin.world_pos.end());
      reset = fail_safe_check(sim_j, kin_j, cfg.failsafe_threshold).reset;
    }
    if (reset) {
      QVel vel = QVel::zero(model.num_angles());
      const std::vector<QVel> fdvel =
          finite_difference_velocity({kin_prev, kin_target}, 1.0 / 30.0);
      vel = fdvel[0];
      sim.set_state(kin_target, vel);
      ++out.failsafe_resets;
      trace.fell = true;
    }

    const SimState st = sim.state();
    pen_sum += measure_penetration(st);
    for (const ContactPoint& c : st.contacts) {
      if (c.body < 0 || c.object < 0) continue;
      const ObjectClass cls = clip.scene.objects[c.object].cls;
      if (cls == ObjectClass::chair &&
          (c.body == pelvis ||
           std::find(leg_roots.begin(), leg_roots.end(), c.body) != leg_roots.end()))
        trace.pelvis_chair_contact = true;
      if (cls == ObjectClass::box &&
          std::find(model.foot_bodies.begin(), model.foot_bodies.end(), c.body) !=
              model.foot_bodies.end())
        trace.foot_box_contact = true;
      if (cls == ObjectClass::obstacle) trace.obstacle_contact = true;
    }
    trace.max_root_raise = std::max(trace.max_root_raise, sim.pose().root_pos.z() - z0);

    if (want_dump) {
      nlohmann::json line;
      line["t"] = t + 1;
      const VectorXd qf = st.q.flat();
      const VectorXd vf = st.qdot.flat();
      line["q"] = std::vector<double>(qf.data(), qf.data() + qf.size());
      line["qdot"] = std::vector<double>(vf.data(), vf.data() + vf.size());
      nlohmann::json objs = nlohmann::json::array();
      for (const ObjectState& os : st.objects)
        objs.push_back({{"position", {os.position.x(), os.position.y(), os.position.z()}},
                        {"rotation", {os.rotation.w(), os.rotation.x(), os.rotation.y(),
                                      os.rotation.z()}}});
      line["objects"] = objs;
      line["contacts"] = st.contacts.size();
      line["penetration_mm"] = measure_penetration(st);
      line["failsafe_resets"] = out.failsafe_resets;
      out.dump_lines.push_back(line.dump());
    }

    const FkResult fk_now = forward_kinematics(model, sim.pose());
    for (std::size_t fi = 0; fi < model.foot_bodies.size(); ++fi)
      foot_seq[fi].push_back(fk_now.world_pos[model.foot_bodies[fi]]);

    out.sim_poses.push_back(sim.pose());
    out.kin_targets.push_back(kin_target);
    kin_prev = kin_target;
  }

  if (free_obj >= 0)
    trace.object_displacement = (sim.objects()[free_obj].position - obj_start).norm();
  trace.end_root_pos = sim.pose().root_pos;

  // Metrics against the clip's ground truth.
  SequenceMetrics& m = out.metrics;
  m.name = clip.name;
  m.action = clip.action;
  m.failsafe_resets = out.failsafe_resets;
  m.success = success_check(trace);
  std::vector<std::vector<Vector3d>> jp, jp_hat;
  std::vector<Vector3d> root, root_hat;
  std::vector<Matrix4d> m_seq, m_hat_seq;
  for (int t = 0; t < clip.length(); ++t) {
    const Pose& sp = out.sim_poses[t];
    const Pose& gt = clip.frames[t];
    const FkResult fa = forward_kinematics(model, sp);
    const FkResult fb = forward_kinematics(model, gt);
    jp.emplace_back(fa.world_pos.begin() + 1, fa.world_pos.end());
    jp_hat.emplace_back(fb.world_pos.begin() + 1, fb.world_pos.end());
    root.push_back(sp.root_pos);
    root_hat.push_back(gt.root_pos);
    m_seq.push_back(root_transform_matrix(sp));
    m_hat_seq.push_back(root_transform_matrix(gt));
  }
  m.e_root = root_error(m_seq, m_hat_seq);
  m.e_mpjpe_mm = mpjpe(jp, jp_hat, root, root_hat).mean_mm;
  if (jp.size() >= 3) m.e_acc = accel_error(jp, jp_hat);
  if (!model.foot_bodies.empty()) {
    double fs = 0.0;
    for (const auto& seq : foot_seq) fs += foot_sliding(seq);
    m.fs_mm = fs / static_cast<double>(model.foot_bodies.size());
  }
  m.pt_mm = pen_sum / std::max(1, clip.length() - 1);
  if (clip.has_camera()) {
    std::vector<Matrix4d> cam_gt;
    for (const CameraPose& c : clip.camera) cam_gt.push_back(make_transform(c.position, c.rotation));
    m.e_cam = camera_error(model, out.sim_poses, cam_gt, model.camera_mount_offset);
  }
  return out;
}

}  // namespace humo
