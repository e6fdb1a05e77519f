#include "humo/fk.hpp"

#include "humo/detail/diffquat.hpp"

namespace humo {

FkResult forward_kinematics(const HumanoidModel& model, const Pose& pose) {
  if (pose.joint_angles.size() != model.num_angles())
    throw ShapeError("forward_kinematics: pose has " + std::to_string(pose.joint_angles.size()) +
                     " angles, model expects " + std::to_string(model.num_angles()));
  FkResult fk;
  const int nb = model.num_bodies();
  fk.world_pos.resize(nb);
  fk.world_rot.resize(nb);
  fk.world_pos[0] = pose.root_pos;
  fk.world_rot[0] = pose.root_rot;
  for (int b = 1; b < nb; ++b) {
    const BodySpec& spec = model.bodies[b];
    const int p = spec.parent;
    fk.world_pos[b] = fk.world_pos[p] + fk.world_rot[p].rotate(spec.offset);
    if (spec.joint == JointKind::ball_xyz) {
      const int off = model.angle_offset[b];
      fk.world_rot[b] = fk.world_rot[p] * euler_to_quat(pose.joint_angles.segment<3>(off));
    } else {
      fk.world_rot[b] = fk.world_rot[p];
    }
  }
  return fk;
}

VectorXd joint_positions_flat(const FkResult& fk) {
  const int nb = static_cast<int>(fk.world_pos.size());
  VectorXd out(3 * (nb - 1));
  for (int b = 1; b < nb; ++b) out.segment<3>(3 * (b - 1)) = fk.world_pos[b];
  return out;
}

void capsule_world_segment(const HumanoidModel& m, const FkResult& fk, int body,
                           Vector3d* p0, Vector3d* p1) {
  const BodySpec& spec = m.bodies[body];
  const Vector3d a = spec.capsule_center - spec.capsule_half_length * spec.capsule_axis;
  const Vector3d b = spec.capsule_center + spec.capsule_half_length * spec.capsule_axis;
  *p0 = fk.world_pos[body] + fk.world_rot[body].rotate(a);
  *p1 = fk.world_pos[body] + fk.world_rot[body].rotate(b);
}

FkBackwardResult fk_backward_positions(const HumanoidModel& model, const Pose& pose,
                                       const std::vector<Vector3d>& d_world_pos) {
  using detail::qmul;
  using detail::qmul_backward;
  using detail::qnormalize;
  using detail::qnormalize_backward;
  using detail::qrot;
  using detail::qrot_backward;

  const int nb = model.num_bodies();
  if (static_cast<int>(d_world_pos.size()) != nb)
    throw ShapeError("fk_backward_positions: adjoint count mismatch");

  // Re-run FK on raw 4-vectors so the reverse pass mirrors the exact graph.
  const Vector4d root_raw = pose.root_rot.wxyz();
  std::vector<Vector4d> wq(nb), lq(nb);
  std::vector<Vector3d> wp(nb);
  wq[0] = qnormalize(root_raw);
  wp[0] = pose.root_pos;
  for (int b = 1; b < nb; ++b) {
    const BodySpec& spec = model.bodies[b];
    const int p = spec.parent;
    wp[b] = wp[p] + qrot(wq[p], spec.offset);
    if (spec.joint == JointKind::ball_xyz)
      lq[b] = detail::euler_quat(pose.joint_angles.segment<3>(model.angle_offset[b]));
    else
      lq[b] = Vector4d(1, 0, 0, 0);
    wq[b] = qmul(wq[p], lq[b]);
  }

  FkBackwardResult out;
  out.d_angles = VectorXd::Zero(model.num_angles());
  std::vector<Vector4d> d_wq(nb, Vector4d::Zero());
  std::vector<Vector3d> d_wp(d_world_pos);

  for (int b = nb - 1; b >= 1; --b) {
    const BodySpec& spec = model.bodies[b];
    const int p = spec.parent;
    // wq[b] = wq[p] * lq[b]
    Vector4d d_lq = Vector4d::Zero();
    qmul_backward(wq[p], lq[b], d_wq[b], &d_wq[p], &d_lq);
    if (spec.joint == JointKind::ball_xyz) {
      Vector3d da = Vector3d::Zero();
      detail::euler_quat_backward(pose.joint_angles.segment<3>(model.angle_offset[b]), d_lq, &da);
      out.d_angles.segment<3>(model.angle_offset[b]) += da;
    }
    // wp[b] = wp[p] + qrot(wq[p], offset)
    d_wp[p] += d_wp[b];
    qrot_backward(wq[p], spec.offset, d_wp[b], &d_wq[p], nullptr);
  }
  out.d_root_pos = d_wp[0];
  qnormalize_backward(root_raw, d_wq[0], &out.d_root_quat);
  return out;
}

std::vector<QVel> finite_difference_velocity(const std::vector<Pose>& poses, double dt) {
  if (poses.size() < 2) throw Error("finite_difference_velocity: need at least 2 frames");
  if (!(dt > 0.0)) throw Error("finite_difference_velocity: dt must be positive");
  std::vector<QVel> out(poses.size());
  for (std::size_t t = 0; t + 1 < poses.size(); ++t) {
    QVel v;
    v.root_lin = (poses[t + 1].root_pos - poses[t].root_pos) / dt;
    v.root_ang = quat_diff(poses[t + 1].root_rot, poses[t].root_rot).log_map() / dt;
    v.joint_vel = (poses[t + 1].joint_angles - poses[t].joint_angles) / dt;
    out[t] = std::move(v);
  }
  out.back() = out[poses.size() - 2];
  return out;
}

}  // namespace humo
