#include "humo/agent_frame.hpp"
#include "humo/uhc.hpp"

namespace humo {

int uhc_feature_dim(const HumanoidModel& model) {
  const int A = model.num_angles();
  const int J = model.num_bodies() - 1;
  return 4 + 2 * (5 + A) + (7 + A) + (6 + A) + 1 + 2 * 3 * J + 2 * 4 * J;
}

VectorXd uhc_features(const HumanoidModel& model, const Pose& q, const QVel& qdot,
                      const Pose& q_hat_next) {
  const int A = model.num_angles();
  if (q.joint_angles.size() != A || q_hat_next.joint_angles.size() != A ||
      qdot.joint_vel.size() != A)
    throw ShapeError("uhc_features: DoF mismatch");

  const AgentFrame frame = AgentFrame::from_pose(q);
  const Quat rot_ac = frame.rot(q.root_rot);          // de-headed simulated root
  const Quat rot_hat_ac = frame.rot(q_hat_next.root_rot);

  const FkResult fk = forward_kinematics(model, q);
  const FkResult fk_hat = forward_kinematics(model, q_hat_next);

  const int J = model.num_bodies() - 1;
  VectorXd f(uhc_feature_dim(model));
  Eigen::Index at = 0;
  auto put = [&](const auto& block) {
    f.segment(at, block.size()) = block;
    at += block.size();
  };

  // (1) agent-centric root orientation
  put(rot_ac.wxyz());
  // (2) agent-centric simulated pose [z, rot, angles]
  f[at++] = q.root_pos.z();
  put(rot_ac.wxyz());
  put(q.joint_angles);
  // (3) agent-centric target pose
  f[at++] = q_hat_next.root_pos.z();
  put(rot_hat_ac.wxyz());
  put(q_hat_next.joint_angles);
  // (4) pose difference: target-minus-sim position (agent frame), rotation
  //     difference of the agent-centric orientations, angle difference
  put(frame.vec(q_hat_next.root_pos - q.root_pos));
  put(quat_diff(rot_hat_ac, rot_ac).wxyz());
  put((q_hat_next.joint_angles - q.joint_angles).eval());
  // (5) generalized velocity in the agent frame
  put(frame.vec(qdot.root_lin));
  put(frame.vec(qdot.root_ang));
  put(qdot.joint_vel);
  // (6) heading difference (sim minus target)
  f[at++] = wrap_to_pi(heading_of(q.root_rot) - heading_of(q_hat_next.root_rot));
  // (7) agent-centric target joint positions
  for (int b = 1; b <= J; ++b) put(frame.point(fk_hat.world_pos[b]));
  // (8) joint position differences (sim minus target, agent frame)
  for (int b = 1; b <= J; ++b)
    put((frame.point(fk.world_pos[b]) - frame.point(fk_hat.world_pos[b])).eval());
  // (9) agent-centric target joint rotations
  for (int b = 1; b <= J; ++b) put(frame.rot(fk_hat.world_rot[b]).wxyz());
  // (10) joint rotation differences (sim vs target, agent frame)
  for (int b = 1; b <= J; ++b)
    put(quat_diff(frame.rot(fk.world_rot[b]), frame.rot(fk_hat.world_rot[b])).wxyz());

  if (at != f.size()) throw Error("uhc_features: internal layout error");
  return f;
}

ControlInput residual_action_to_pd_target(const HumanoidModel& model, const Pose& q_hat_next,
                                          const VectorXd& action) {
  const int A = model.num_angles();
  if (action.size() != A + 6) throw ShapeError("residual action has wrong length");
  ControlInput c;
  c.pd_target = q_hat_next.joint_angles + action.head(A);
  c.residual_force = action.segment<3>(A);
  c.residual_torque = action.segment<3>(A + 3);
  return c;
}

UhcRewardTerms uhc_reward(const HumanoidModel& model, const Pose& q, const Pose& q_hat,
                          const QVel& qvel, const QVel& qvel_hat, const Vector3d& eta_force,
                          const Vector3d& eta_torque, const UhcRewardWeights& w) {
  const FkResult fk = forward_kinematics(model, q);
  const FkResult fk_hat = forward_kinematics(model, q_hat);

  double rot_sq = 0.0, pos_sq = 0.0;
  for (int b = 0; b < model.num_bodies(); ++b) {  // every body, root included
    const double ang = quat_diff(fk.world_rot[b], fk_hat.world_rot[b]).angle();
    rot_sq += ang * ang;
    pos_sq += (fk.world_pos[b] - fk_hat.world_pos[b]).squaredNorm();
  }
  const double vel_sq = (qvel.flat() - qvel_hat.flat()).squaredNorm();
  const double res_sq = eta_force.squaredNorm() + eta_torque.squaredNorm();

  UhcRewardTerms r;
  r.r_jr = std::exp(-w.k_jr * rot_sq);
  r.r_jp = std::exp(-w.k_jp * pos_sq);
  r.r_jv = std::exp(-w.k_jv * vel_sq);
  r.r_res = std::exp(-w.k_res * res_sq);
  r.total = w.w_jr * r.r_jr + w.w_jp * r.r_jp + w.w_jv * r.r_jv + w.w_res * r.r_res;
  return r;
}

}  // namespace humo
