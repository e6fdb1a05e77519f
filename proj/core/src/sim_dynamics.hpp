#pragma once

// Internal dynamics kernels for the articulated simulation. World-frame
// formulation: generalized velocity is [root linear (world), root angular
// (world), Euler-angle rates], every ball joint contributing three hinge
// DoF with instantaneous world axes (intrinsic X-then-Y-then-Z).

#include <vector>

#include <Eigen/Cholesky>

#include "humo/model.hpp"

namespace humo::detail {

using Eigen::Matrix3d;
using Eigen::MatrixXd;
using Eigen::Vector3d;
using Eigen::VectorXd;

struct DofInfo {
  int body = -1;         // body whose joint carries this DoF (-1: root)
  Vector3d axis;         // world hinge axis (ball DoF only)
  Vector3d origin;       // world point the axis passes through
};

struct KinCache {
  // Per body, world frame.
  std::vector<Matrix3d> R;        // orientation
  std::vector<Vector3d> o;        // joint-origin position
  std::vector<Vector3d> com;      // COM position
  std::vector<Vector3d> omega;    // angular velocity
  std::vector<Vector3d> v_o;      // velocity of the joint origin
  std::vector<Vector3d> v_com;    // COM velocity
  std::vector<Vector3d> alpha0;   // angular acceleration at zero gen. accel
  std::vector<Vector3d> a_com0;   // COM acceleration at zero gen. accel
  std::vector<Matrix3d> I_world;  // inertia about COM, world frame

  // Flattened DoF table: 0..5 root, then 3 per ball joint.
  std::vector<DofInfo> dofs;
  // Per body: indices into dofs of every ancestor DoF (including its own).
  std::vector<std::vector<int>> ancestor_dofs;
};

// Position + velocity + zero-acceleration pass.
void compute_kinematics(const HumanoidModel& m, const Pose& q, const QVel& v, KinCache* kc);

// Velocity of a world point rigidly attached to body b.
Vector3d point_velocity(const KinCache& kc, int body, const Vector3d& point);

// Joint-space mass matrix (composite rigid-body form) with armature added
// on the actuated DoF.
void mass_matrix(const HumanoidModel& m, const KinCache& kc, double armature, MatrixXd* M);

// Velocity-product + gravity bias: M vdot + bias = Q_applied.
void bias_forces(const HumanoidModel& m, const KinCache& kc, double gravity, VectorXd* bias);

// Accumulate J^T f for a world force applied at a point on a body.
void add_point_force(const HumanoidModel& m, const KinCache& kc, int body,
                     const Vector3d& point, const Vector3d& force, VectorXd* Q);

// Accumulate a pure torque on a body.
void add_body_torque(const HumanoidModel& m, const KinCache& kc, int body,
                     const Vector3d& torque, VectorXd* Q);

}  // namespace humo::detail
