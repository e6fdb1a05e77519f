#pragma once

#include <vector>

#include "humo/model.hpp"

namespace humo {

// World pose of every body: world_rot[b] * x + world_pos[b] maps body-local
// points to world. Body frames sit at the joint pivot.
struct FkResult {
  std::vector<Vector3d> world_pos;
  std::vector<Quat> world_rot;

  Vector3d com_world(const HumanoidModel& m, int body) const {
    return world_pos[body] + world_rot[body].rotate(m.body_com[body]);
  }
};

FkResult forward_kinematics(const HumanoidModel& model, const Pose& pose);

// Positions of the num_bodies-1 non-root bodies, stacked as a 3*(B-1) vector.
VectorXd joint_positions_flat(const FkResult& fk);

// World capsule segment endpoints of one body.
void capsule_world_segment(const HumanoidModel& m, const FkResult& fk, int body,
                           Vector3d* p0, Vector3d* p1);

// Reverse-mode derivative of forward kinematics. Given adjoints of the world
// body positions (d_pos[b] = dL/d world_pos_b), accumulates gradients with
// respect to root position, the raw root quaternion (before normalization),
// and the joint angles. Used by the supervised pose loss.
struct FkBackwardResult {
  Vector3d d_root_pos = Vector3d::Zero();
  Vector4d d_root_quat = Vector4d::Zero();  // wrt raw wxyz
  VectorXd d_angles;
};

FkBackwardResult fk_backward_positions(const HumanoidModel& model, const Pose& pose,
                                       const std::vector<Vector3d>& d_world_pos);

}  // namespace humo
