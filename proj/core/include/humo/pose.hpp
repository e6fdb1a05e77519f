#pragma once

#include <vector>

#include "humo/math.hpp"

namespace humo {

// Full configuration of the articulated character at one frame:
// root position (m), root orientation, and one intrinsic-XYZ Euler triplet
// per actuated joint (radians).
struct Pose {
  Vector3d root_pos = Vector3d::Zero();
  Quat root_rot;
  VectorXd joint_angles;  // 3 * num_ball_joints

  Eigen::Index nq() const { return 7 + joint_angles.size(); }

  // Flat layout: [pos(3), quat wxyz(4), angles...]
  VectorXd flat() const {
    VectorXd q(nq());
    q.segment<3>(0) = root_pos;
    q.segment<4>(3) = root_rot.wxyz();
    if (joint_angles.size() > 0) q.tail(joint_angles.size()) = joint_angles;
    return q;
  }

  static Pose from_flat(const VectorXd& q) {
    Pose p;
    p.root_pos = q.segment<3>(0);
    p.root_rot = Quat(Vector4d(q.segment<4>(3)));
    p.joint_angles = q.tail(q.size() - 7);
    return p;
  }

  bool is_finite() const {
    return root_pos.allFinite() && root_rot.is_finite() && joint_angles.allFinite();
  }
};

// Generalized velocity: world-frame root linear and angular velocity plus
// Euler-angle rates per actuated DoF.
struct QVel {
  Vector3d root_lin = Vector3d::Zero();
  Vector3d root_ang = Vector3d::Zero();
  VectorXd joint_vel;

  Eigen::Index nv() const { return 6 + joint_vel.size(); }

  VectorXd flat() const {
    VectorXd v(nv());
    v.segment<3>(0) = root_lin;
    v.segment<3>(3) = root_ang;
    if (joint_vel.size() > 0) v.tail(joint_vel.size()) = joint_vel;
    return v;
  }

  static QVel from_flat(const VectorXd& v) {
    QVel out;
    out.root_lin = v.segment<3>(0);
    out.root_ang = v.segment<3>(3);
    out.joint_vel = v.tail(v.size() - 6);
    return out;
  }

  static QVel zero(Eigen::Index joint_dof) {
    QVel v;
    v.joint_vel = VectorXd::Zero(joint_dof);
    return v;
  }

  bool is_finite() const {
    return root_lin.allFinite() && root_ang.allFinite() && joint_vel.allFinite();
  }
};

// Forward finite differences at fixed dt: v[t] = (pose[t+1] - pose[t]) / dt,
// root angular velocity via the quaternion log map (frame-independent).
// The last frame repeats the previous velocity so sequences keep their length.
std::vector<QVel> finite_difference_velocity(const std::vector<Pose>& poses, double dt);

// 4x4 transform of the root (rotation from root_rot, translation from root_pos).
inline Matrix4d root_transform_matrix(const Pose& pose) {
  return make_transform(pose.root_pos, pose.root_rot);
}

}  // namespace humo
