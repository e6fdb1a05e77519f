#include "humo/kin.hpp"

#include "humo/agent_frame.hpp"

namespace humo {

SceneContext SceneContext::from_clip(const MotionSequence& clip) {
  SceneContext ctx;
  const int T = clip.length();
  ctx.frames.resize(T);
  const bool has_obj = !clip.scene.objects.empty();
  for (int t = 0; t < T; ++t) {
    KinStepContext& f = ctx.frames[t];
    if (clip.has_phi()) f.phi = clip.phi[t];
    f.has_object = has_obj;
    if (has_obj) {
      f.obj_cls = clip.scene.objects[0].cls;
      const ObjectFrame of = clip.object_at(t);
      f.obj_pos = of.position;
      f.obj_rot = of.rotation;
    }
    if (clip.has_camera()) {
      f.cam_pos = clip.camera[t].position;
      f.cam_rot = clip.camera[t].rotation;
    }
  }
  return ctx;
}

VectorXd object_state_vector(bool has_object, ObjectClass cls, const Vector3d& pos,
                             const Quat& rot) {
  VectorXd v = VectorXd::Zero(11);
  if (!has_object || cls == ObjectClass::none) return v;  // whole block zeroed
  const int slot = cls == ObjectClass::chair ? 0 : cls == ObjectClass::box ? 1 : 2;
  v[slot] = 1.0;
  v.segment<3>(4) = pos;
  v.segment<4>(7) = rot.wxyz();
  return v;
}

int kin_input_dim(const HumanoidModel& model, int phi_dim) {
  return 4 + model.num_angles() + phi_dim + 11 + 7;
}

VectorXd kin_input_transform(const HumanoidModel& model, const Pose& base,
                             const KinStepContext& next_ctx) {
  if (base.joint_angles.size() != model.num_angles())
    throw ShapeError("kin_input_transform: DoF mismatch");
  const AgentFrame frame = AgentFrame::from_pose(base);
  VectorXd v(kin_input_dim(model, static_cast<int>(next_ctx.phi.size())));
  Eigen::Index at = 0;
  v.segment<4>(at) = frame.rot(base.root_rot).wxyz();
  at += 4;
  v.segment(at, base.joint_angles.size()) = base.joint_angles;
  at += base.joint_angles.size();
  if (next_ctx.phi.size() > 0) v.segment(at, next_ctx.phi.size()) = next_ctx.phi;
  at += next_ctx.phi.size();
  v.segment(at, 11) = object_state_vector(next_ctx.has_object, next_ctx.obj_cls,
                                          frame.point(next_ctx.obj_pos),
                                          frame.rot(next_ctx.obj_rot));
  at += 11;
  v.segment<3>(at) = frame.point(next_ctx.cam_pos);
  at += 3;
  v.segment<4>(at) = frame.rot(next_ctx.cam_rot).wxyz();
  at += 4;
  if (at != v.size()) throw Error("kin_input_transform: internal layout error");
  return v;
}

Pose finite_integrate(const Vector3d& omega, const Vector3d& v, const VectorXd& jrot_next,
                      const Pose& base, double dt) {
  Pose out;
  out.root_pos = base.root_pos + dt * v;
  out.root_rot = Quat::exp_map(dt * omega) * base.root_rot;
  out.joint_angles = jrot_next;
  return out;
}

// ---------------------------------------------------------------------------
// KinPolicy

KinPolicy::KinPolicy(int obs_dim, int act_dim, const KinNetConfig& cfg, Rng& rng)
    : obs_dim_(obs_dim), act_dim_(act_dim) {
  gru_ = GruCell(obs_dim, cfg.gru_hidden, rng);
  std::vector<int> dims{cfg.gru_hidden};
  for (int h : cfg.mlp_hidden) dims.push_back(h);
  dims.push_back(act_dim);
  head_ = MlpNet(dims, Activation::relu, rng, 0.01);
  log_std_ = VectorXd::Constant(act_dim, std::log(cfg.cov_std));
}

Eigen::Index KinPolicy::param_count() const { return gru_.param_count() + head_.param_count(); }

VectorXd KinPolicy::get_params() const {
  VectorXd out(param_count());
  out.head(gru_.param_count()) = gru_.params();
  out.tail(head_.param_count()) = head_.params();
  return out;
}

void KinPolicy::set_params(const VectorXd& p) {
  if (p.size() != param_count()) throw ShapeError("KinPolicy::set_params: size mismatch");
  gru_.params() = p.head(gru_.param_count());
  head_.params() = p.tail(head_.param_count());
}

namespace {
struct KinEpisodeCache final : SequencePolicy::Cache {
  std::vector<GruCache> gru;
  std::vector<MlpCache> head;
  std::vector<VectorXd> hiddens;  // h_0 .. h_T
};
}  // namespace

std::vector<VectorXd> KinPolicy::forward_episode(const std::vector<VectorXd>& obs,
                                                 std::unique_ptr<Cache>* cache) const {
  auto ep = cache ? std::make_unique<KinEpisodeCache>() : nullptr;
  std::vector<VectorXd> means;
  means.reserve(obs.size());
  VectorXd h = gru_.initial_hidden();
  if (ep) ep->hiddens.push_back(h);
  for (const VectorXd& x : obs) {
    GruCache gc;
    MlpCache mc;
    h = gru_.step(x, h, ep ? &gc : nullptr);
    means.push_back(head_.forward(h, ep ? &mc : nullptr));
    if (ep) {
      ep->gru.push_back(std::move(gc));
      ep->head.push_back(std::move(mc));
      ep->hiddens.push_back(h);
    }
  }
  if (cache) *cache = std::move(ep);
  return means;
}

void KinPolicy::backward_episode(const Cache& cache, const std::vector<VectorXd>& dmeans,
                                 VectorXd* dparams) const {
  const auto& ep = dynamic_cast<const KinEpisodeCache&>(cache);
  if (ep.gru.size() != dmeans.size())
    throw ShapeError("KinPolicy::backward_episode: step count mismatch");
  VectorXd d_gru = VectorXd::Zero(gru_.param_count());
  VectorXd d_head = VectorXd::Zero(head_.param_count());
  VectorXd dh = VectorXd::Zero(gru_.hidden_dim());
  for (int t = static_cast<int>(dmeans.size()) - 1; t >= 0; --t) {
    // dL/dh_t from the head plus the future chain.
    head_.backward(ep.head[t], dmeans[t], &dh, &d_head);
    VectorXd dh_prev = VectorXd::Zero(gru_.hidden_dim());
    gru_.backward(ep.gru[t], dh, nullptr, &dh_prev, &d_gru);
    dh = std::move(dh_prev);
  }
  dparams->head(gru_.param_count()) += d_gru;
  dparams->tail(head_.param_count()) += d_head;
}

VectorXd KinPolicy::step_mean(RolloutState* state, const VectorXd& obs) const {
  state->hidden = gru_.step(obs, state->hidden, nullptr);
  return head_.forward(state->hidden, nullptr);
}

void KinPolicy::save(Checkpoint* ck, const std::string& prefix) const {
  ck->add(prefix + ".gru", gru_.params());
  ck->add(prefix + ".head", head_.params());
  ck->add(prefix + ".log_std", log_std_);
}

void KinPolicy::load(const Checkpoint& ck, const std::string& prefix) {
  if (ck.get(prefix + ".gru").size() != gru_.param_count() ||
      ck.get(prefix + ".head").size() != head_.param_count())
    throw IoError("KinPolicy::load: parameter count mismatch");
  gru_.params() = ck.get(prefix + ".gru");
  head_.params() = ck.get(prefix + ".head");
  log_std_ = ck.get(prefix + ".log_std");
}

// ---------------------------------------------------------------------------
// KinInitNet

KinInitNet::KinInitNet(int frame_dim, int num_angles, const KinNetConfig& cfg, Rng& rng)
    : num_angles_(num_angles) {
  gru_ = GruCell(frame_dim, cfg.init_gru_hidden, rng);
  std::vector<int> dims{cfg.init_gru_hidden};
  for (int h : cfg.init_mlp_hidden) dims.push_back(h);
  dims.push_back(3 + 4 + num_angles);
  head_ = MlpNet(dims, Activation::relu, rng, 0.01);
}

std::vector<VectorXd> KinInitNet::frame_features(const SceneContext& ctx) {
  std::vector<VectorXd> out;
  out.reserve(ctx.frames.size());
  for (const KinStepContext& f : ctx.frames) {
    VectorXd v(f.phi.size() + 11 + 7);
    Eigen::Index at = 0;
    if (f.phi.size() > 0) v.segment(at, f.phi.size()) = f.phi;
    at += f.phi.size();
    v.segment(at, 11) = object_state_vector(f.has_object, f.obj_cls, f.obj_pos, f.obj_rot);
    at += 11;
    v.segment<3>(at) = f.cam_pos;
    at += 3;
    v.segment<4>(at) = f.cam_rot.wxyz();
    out.push_back(v);
  }
  return out;
}

Pose KinInitNet::infer(const std::vector<VectorXd>& feats) const {
  return infer(feats, nullptr);
}

Pose KinInitNet::infer(const std::vector<VectorXd>& feats, Cache* cache) const {
  if (feats.empty()) throw Error("kin_init: empty clip");
  VectorXd h = gru_.initial_hidden();
  if (cache) cache->hiddens.push_back(h);
  for (const VectorXd& x : feats) {
    GruCache gc;
    h = gru_.step(x, h, cache ? &gc : nullptr);
    if (cache) {
      cache->gru.push_back(std::move(gc));
      cache->hiddens.push_back(h);
    }
  }
  VectorXd raw = head_.forward(h, cache ? &cache->head : nullptr);
  if (cache) cache->raw_out = raw;
  Pose p;
  p.root_pos = raw.segment<3>(0);
  // Bias the quaternion toward identity so the untrained net is valid.
  Vector4d q = raw.segment<4>(3);
  q[0] += 1.0;
  p.root_rot = Quat(q);
  p.joint_angles = raw.tail(num_angles_);
  return p;
}

void KinInitNet::backward(const Cache& cache, const std::vector<VectorXd>& feats,
                          const VectorXd& d_raw, VectorXd* dparams) const {
  VectorXd d_gru = VectorXd::Zero(gru_.param_count());
  VectorXd d_head = VectorXd::Zero(head_.param_count());
  VectorXd dh = VectorXd::Zero(gru_.hidden_dim());
  head_.backward(cache.head, d_raw, &dh, &d_head);
  for (int t = static_cast<int>(feats.size()) - 1; t >= 0; --t) {
    VectorXd dh_prev = VectorXd::Zero(gru_.hidden_dim());
    gru_.backward(cache.gru[t], dh, nullptr, &dh_prev, &d_gru);
    dh = std::move(dh_prev);
  }
  dparams->head(gru_.param_count()) += d_gru;
  dparams->tail(head_.param_count()) += d_head;
}

VectorXd KinInitNet::get_params() const {
  VectorXd out(param_count());
  out.head(gru_.param_count()) = gru_.params();
  out.tail(head_.param_count()) = head_.params();
  return out;
}

void KinInitNet::set_params(const VectorXd& p) {
  if (p.size() != param_count()) throw ShapeError("KinInitNet::set_params: size mismatch");
  gru_.params() = p.head(gru_.param_count());
  head_.params() = p.tail(head_.param_count());
}

void KinInitNet::save(Checkpoint* ck, const std::string& prefix) const {
  ck->add(prefix + ".gru", gru_.params());
  ck->add(prefix + ".head", head_.params());
}

void KinInitNet::load(const Checkpoint& ck, const std::string& prefix) {
  if (ck.get(prefix + ".gru").size() != gru_.param_count() ||
      ck.get(prefix + ".head").size() != head_.param_count())
    throw IoError("KinInitNet::load: parameter count mismatch");
  gru_.params() = ck.get(prefix + ".gru");
  head_.params() = ck.get(prefix + ".head");
}

// ---------------------------------------------------------------------------
// Eq.-3 reward

KinRewardTerms kin_reward(const HumanoidModel& model, const Pose& sim_pose, const QVel& sim_vel,
                          const Pose& gt_pose, const QVel& gt_vel, const Pose& kin_target,
                          const Vector3d& cam_pos_gt, const Quat& cam_rot_gt,
                          const KinRewardWeights& w, KinRewardTerms* terms) {
  if (model.head_body < 0) throw ConfigError("kin_reward: model has no head body");
  const FkResult fk = forward_kinematics(model, sim_pose);
  const Quat head_rot = fk.world_rot[model.head_body];
  const Vector3d cam_pos =
      fk.world_pos[model.head_body] + head_rot.rotate(model.camera_mount_offset);

  const double hp_sq = (cam_pos - cam_pos_gt).squaredNorm();
  const double hq = quat_diff(head_rot, cam_rot_gt).angle();

  const double jv_sq = (sim_vel.flat() - gt_vel.flat()).squaredNorm();

  auto joint_rot_sq = [&](const Pose& a, const Pose& b) {
    double sum = 0.0;
    for (int off = 0; off + 2 < model.num_angles(); off += 3) {
      const Quat qa = euler_to_quat(a.joint_angles.segment<3>(off));
      const Quat qb = euler_to_quat(b.joint_angles.segment<3>(off));
      const double ang = quat_diff(qa, qb).angle();
      sum += ang * ang;
    }
    return sum;
  };
  const double jr_gt_sq = joint_rot_sq(sim_pose, gt_pose);
  const double jr_dyna_sq = joint_rot_sq(sim_pose, kin_target);

  const FkResult fk_kin = forward_kinematics(model, kin_target);
  double jp_dyna_sq = 0.0;
  for (int b = 1; b < model.num_bodies(); ++b)
    jp_dyna_sq += (fk.world_pos[b] - fk_kin.world_pos[b]).squaredNorm();

  KinRewardTerms r;
  r.r_hp = std::exp(-w.k_h * hp_sq);
  r.r_hq = std::exp(-w.k_h * hq * hq);
  r.r_jv = std::exp(-w.k_jv * jv_sq);
  r.r_jr_gt = std::exp(-w.k_jr * jr_gt_sq);
  r.r_jr_dyna = std::exp(-w.k_jr * jr_dyna_sq);
  r.r_jp_dyna = std::exp(-w.k_jp * jp_dyna_sq);
  r.total = w.w_hp * r.r_hp + w.w_hq * r.r_hq + w.w_jv_gt * r.r_jv + w.w_jr_gt * r.r_jr_gt +
            w.w_jr_dyna * r.r_jr_dyna + w.w_jp_dyna * r.r_jp_dyna;
  if (terms) *terms = r;
  return r;
}

}  // namespace humo
