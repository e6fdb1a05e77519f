#include "humo/synthetic.hpp"

#include <cmath>

#include "humo/fk.hpp"
#include "humo/rng.hpp"

namespace humo {

namespace {

struct AngleMap {
  const HumanoidModel* model;
  VectorXd angles;

  explicit AngleMap(const HumanoidModel& m) : model(&m) {
    angles = VectorXd::Zero(m.num_angles());
  }
  // Set one axis (0=x,1=y,2=z) of a named joint; silently ignores absent
  // bodies so the same scripts run on reduced models.
  void set(const std::string& name, int axis, double value) {
    const int b = model->body_index(name);
    if (b < 0 || model->angle_offset[b] < 0) return;
    angles[model->angle_offset[b] + axis] = value;
  }
};

// Fill phi (fixed random projection of generalized velocities plus noise)
// and camera (head pose + mount offset plus noise) channels from the frames.
void fill_context(const HumanoidModel& model, MotionSequence* seq, int phi_dim, double noise_phi,
                  double noise_cam, Rng& channel_rng, std::uint64_t proj_seed) {
  const int T = seq->length();
  const std::vector<QVel> vels = finite_difference_velocity(seq->frames, 1.0 / seq->fps);

  // The projection is one fixed matrix per (model, phi_dim), independent of
  // the clip, so features stay comparable across a dataset.
  Rng proj_rng(split_seed(proj_seed, 0xF1u));
  Eigen::MatrixXd W(phi_dim, model.nv());
  for (int i = 0; i < phi_dim; ++i)
    for (int j = 0; j < model.nv(); ++j) W(i, j) = proj_rng.gaussian() / std::sqrt(model.nv());

  seq->phi.clear();
  seq->camera.clear();
  for (int t = 0; t < T; ++t) {
    VectorXd f = W * vels[t].flat();
    for (int i = 0; i < phi_dim; ++i) f[i] += noise_phi * channel_rng.gaussian();
    seq->phi.push_back(f);

    const FkResult fk = forward_kinematics(model, seq->frames[t]);
    const int head = model.head_body >= 0 ? model.head_body : model.num_bodies() - 1;
    CameraPose cam;
    const Quat head_rot = fk.world_rot[head];
    cam.position = fk.world_pos[head] + head_rot.rotate(model.camera_mount_offset);
    for (int k = 0; k < 3; ++k) cam.position[k] += noise_cam * channel_rng.gaussian();
    const Vector3d drot(noise_cam * channel_rng.gaussian(), noise_cam * channel_rng.gaussian(),
                        noise_cam * channel_rng.gaussian());
    cam.rotation = Quat::exp_map(drot) * head_rot;
    seq->camera.push_back(cam);
  }
}

// In-place undulation for chain-style models: lift about y, sway about z.
void script_chain_sway(const HumanoidModel& model, MotionSequence* seq, Rng& rng,
                       double perturb) {
  const double amp_y = rng.uniform(0.15, 0.35) * (1.0 + perturb);
  const double amp_z = rng.uniform(0.15, 0.35) * (1.0 + perturb);
  const double freq = rng.uniform(0.25, 0.45) * (1.0 + 0.5 * perturb);
  const double phase_step = rng.uniform(0.6, 1.2);
  const double start_yaw = perturb > 0.0 ? rng.uniform(-0.3, 0.3) : 0.0;

  Pose base = model.identity_pose();
  base.root_rot = yaw_quat(start_yaw);
  base = adjust_starting_height(model, base, 1e-4);

  for (std::size_t i = 0; i < seq->frames.size(); ++i) {
    const double t = static_cast<double>(i) / seq->fps;
    // Smooth ramp so the clip starts at rest.
    const double ramp = std::min(1.0, t / 1.0);
    AngleMap am(model);
    for (int b = 1; b < model.num_bodies(); ++b) {
      if (model.angle_offset[b] < 0) continue;
      const double phase = phase_step * b;
      am.angles[model.angle_offset[b] + 1] =
          ramp * amp_y * std::sin(2.0 * kPi * freq * t + phase);
      am.angles[model.angle_offset[b] + 2] =
          ramp * amp_z * std::sin(2.0 * kPi * freq * 0.7 * t + 1.3 * phase);
    }
    Pose p = base;
    p.joint_angles = am.angles;
    seq->frames[i] = p;
  }
}

// Parametric walking gait for humanoid models, optionally curving the root
// path (used by avoid) and stopping at a target (used by sit/push/step).
struct GaitParams {
  double speed = 0.7;
  double step_freq = 1.4;  // full cycles per second
  double hip_amp = 0.5;
  double knee_amp = 0.6;
  double arm_amp = 0.25;
  double bob = 0.015;
};

void walk_frame(const HumanoidModel& model, double t, double walked, const GaitParams& g,
                Pose* pose) {
  const double w = 2.0 * kPi * g.step_freq;
  AngleMap am(model);
  const double sl = std::sin(w * t);
  const double sr = std::sin(w * t + kPi);
  am.set("l_hip", 1, g.hip_amp * sl);
  am.set("r_hip", 1, g.hip_amp * sr);
  am.set("l_knee", 1, g.knee_amp * 0.5 * (1.0 - std::cos(w * t)));
  am.set("r_knee", 1, g.knee_amp * 0.5 * (1.0 - std::cos(w * t + kPi)));
  am.set("l_ankle", 1, -0.3 * g.hip_amp * sl);
  am.set("r_ankle", 1, -0.3 * g.hip_amp * sr);
  am.set("l_shoulder", 1, -g.arm_amp * sl);
  am.set("r_shoulder", 1, -g.arm_amp * sr);
  am.set("l_elbow", 1, 0.3 * g.arm_amp);
  am.set("r_elbow", 1, 0.3 * g.arm_amp);
  pose->joint_angles = am.angles;
  pose->root_pos.z() += g.bob * std::sin(2.0 * w * t);
  (void)walked;
}

void lerp_angles(const VectorXd& a, const VectorXd& b, double s, VectorXd* out) {
  *out = (1.0 - s) * a + s * b;
}

double smoothstep(double s) { return s * s * (3.0 - 2.0 * s); }

void script_humanoid(const HumanoidModel& model, MotionSequence* seq, Rng& rng, double perturb) {
  const std::string& action = seq->action;
  const int T = seq->length();
  GaitParams g;
  g.speed = rng.uniform(0.5, 0.85) * (1.0 + 0.3 * perturb);
  g.step_freq = rng.uniform(1.2, 1.6);
  g.hip_amp = rng.uniform(0.4, 0.55);

  Pose stand = model.identity_pose();
  stand = adjust_starting_height(model, stand, 1e-4);
  const double z0 = stand.root_pos.z();
  const double start_yaw = perturb > 0.0 ? rng.uniform(-0.4, 0.4) : 0.0;

  // Object placement along the walking direction.
  const double obj_dist = rng.uniform(1.4, 2.0);
  const Vector3d dir(std::cos(start_yaw), std::sin(start_yaw), 0.0);

  Scene scene;
  if (action == "sit") {
    SceneObject chair;
    chair.cls = ObjectClass::chair;
    chair.box_extents = Vector3d(0.45, 0.45, 0.42);
    chair.position = Vector3d(0, 0, 0.21) + obj_dist * dir;
    chair.rotation = yaw_quat(start_yaw);
    scene.objects.push_back(chair);
  } else if (action == "push") {
    SceneObject box;
    box.cls = ObjectClass::box;
    box.box_extents = Vector3d(0.4, 0.4, 0.7);
    box.position = Vector3d(0, 0, 0.35) + obj_dist * dir;
    box.mobility = ObjectMobility::free;
    box.mass = 8.0;
    scene.objects.push_back(box);
  } else if (action == "step") {
    SceneObject box;
    box.cls = ObjectClass::box;
    box.box_extents = Vector3d(0.6, 0.6, 0.15);
    box.position = Vector3d(0, 0, 0.075) + obj_dist * dir;
    scene.objects.push_back(box);
  } else if (action == "avoid") {
    SceneObject obs;
    obs.cls = ObjectClass::obstacle;
    obs.is_capsule = true;
    obs.capsule_radius = 0.25;
    obs.capsule_half_length = 0.5;
    obs.position = Vector3d(0, 0, 0.5) + obj_dist * dir;
    scene.objects.push_back(obs);
  }
  seq->scene = scene;

  const double approach_time = obj_dist / g.speed;
  std::vector<ObjectFrame> obj_track;

  for (int i = 0; i < T; ++i) {
    const double t = static_cast<double>(i) / seq->fps;
    Pose p = stand;
    p.root_rot = yaw_quat(start_yaw);

    // Constant-acceleration ease-in over the first half second.
    const double t_e = 0.5;
    const double travel =
        t < t_e ? g.speed * t * t / (2.0 * t_e) : g.speed * (t - 0.5 * t_e);
    const double ramp = std::min(1.0, 2.0 * t);

    if (action == "loco") {
      p.root_pos += travel * dir;
      walk_frame(model, t, travel, g, &p);
      p.joint_angles *= ramp;
    } else if (action == "avoid") {
      const double detour = 0.85;
      const double s = travel;
      p.root_pos += s * dir;
      // Lateral bump around the obstacle, peaked at the obstacle distance.
      const double rel = (s - obj_dist) / 0.9;
      const double lateral = detour * std::exp(-rel * rel);
      p.root_pos += lateral * Vector3d(-dir.y(), dir.x(), 0.0);
      walk_frame(model, t, travel, g, &p);
      p.joint_angles *= ramp;
    } else {
      // Approach then act.
      const double stop_at = action == "sit" ? obj_dist - 0.55
                             : action == "push" ? obj_dist - 0.75
                                                : obj_dist - 0.45;
      const double t_arrive = stop_at / g.speed + 0.5;
      if (t < t_arrive) {
        const double tr = std::min(travel, stop_at);
        p.root_pos += tr * dir;
        walk_frame(model, t, tr, g, &p);
        p.joint_angles *= ramp * std::min(1.0, std::max(0.0, (t_arrive - t) / 0.4));
      } else {
        p.root_pos += stop_at * dir;
        const double s = smoothstep(std::min(1.0, (t - t_arrive) / 1.2));
        AngleMap target(model);
        if (action == "sit") {
          target.set("l_hip", 1, -1.5);
          target.set("r_hip", 1, -1.5);
          target.set("l_knee", 1, 1.5);
          target.set("r_knee", 1, 1.5);
          // Turn around and lower onto the seat behind.
          const double turn = s * kPi;
          p.root_rot = yaw_quat(start_yaw + turn);
          p.root_pos -= s * 0.25 * dir;
          p.root_pos.z() = z0 - s * (z0 - 0.52);
        } else if (action == "push") {
          target.set("l_shoulder", 0, -1.2);
          target.set("r_shoulder", 0, 1.2);
          target.set("l_elbow", 2, 0.3);
          target.set("r_elbow", 2, -0.3);
          p.root_pos += s * 0.45 * dir;  // lean and drive through the box
        } else if (action == "step") {
          target.set("l_hip", 1, 0.9);
          target.set("l_knee", 1, 1.0);
          p.root_pos += s * 0.35 * dir;
          p.root_pos.z() = z0 + s * 0.16;
        }
        VectorXd blended;
        lerp_angles(VectorXd::Zero(model.num_angles()), target.angles, s, &blended);
        p.joint_angles = blended;
      }
    }
    seq->frames[i] = p;

    if (action == "push") {
      ObjectFrame of;
      of.position = scene.objects[0].position;
      of.rotation = scene.objects[0].rotation;
      const double contact_t = approach_time - 0.2;
      if (t > contact_t) {
        const double moved = std::min(0.30, 0.25 * (t - contact_t));
        of.position += moved * dir;
      }
      obj_track.push_back(of);
    }
  }
  if (action == "push") seq->object_frames.push_back(obj_track);
  if (action == "avoid") {
    seq->desired_end_pos = seq->frames.back().root_pos;
    seq->has_desired_end = true;
  }
}

}  // namespace

std::vector<MotionSequence> gen_synthetic_dataset(const HumanoidModel& model,
                                                  const SyntheticSpec& spec) {
  if (spec.num_clips < 1 || spec.frames < 10)
    throw ConfigError("gen_synthetic_dataset: need num_clips >= 1 and frames >= 10");
  const bool chain_like = model.body_index("l_hip") < 0;
  if (chain_like && spec.action != "loco" && spec.action != "sway")
    throw ConfigError("gen_synthetic_dataset: chain models only support loco/sway clips");

  std::vector<MotionSequence> out;
  for (int c = 0; c < spec.num_clips; ++c) {
    Rng rng(split_seed(spec.seed, 0x5E9u + static_cast<std::uint64_t>(c)));
    MotionSequence seq;
    seq.name = model.name + "_" + spec.action + "_" + std::to_string(c);
    seq.action = chain_like ? "sway" : spec.action;
    seq.model_name = model.name;
    seq.frames.assign(spec.frames, model.identity_pose());
    if (chain_like)
      script_chain_sway(model, &seq, rng, spec.perturb);
    else
      script_humanoid(model, &seq, rng, spec.perturb);
    fill_context(model, &seq, spec.phi_dim, spec.noise_phi, spec.noise_cam, rng, spec.seed);
    out.push_back(std::move(seq));
  }
  return out;
}

}  // namespace humo
