#pragma once

#include <optional>
#include <string>
#include <vector>

#include "humo/pose.hpp"

namespace humo {

enum class JointKind {
  free_root,  // 6-DoF root: position + quaternion
  ball_xyz,   // 3 DoF, intrinsic X-then-Y-then-Z Euler angles
  fixed,      // rigidly welded to the parent (0 DoF)
};

struct BodySpec {
  std::string name;
  int parent = -1;  // -1 for the root; otherwise < own index
  JointKind joint = JointKind::ball_xyz;
  Vector3d offset = Vector3d::Zero();  // joint pivot in the parent frame (m)

  // Capsule geometry in the body frame: segment of half-length along axis,
  // centered at capsule_center, with the given radius.
  double capsule_radius = 0.05;
  double capsule_half_length = 0.0;  // 0 degenerates to a sphere
  Vector3d capsule_axis = Vector3d::UnitZ();
  Vector3d capsule_center = Vector3d::Zero();

  double density = 1000.0;  // kg/m^3

  Vector3d pd_kp = Vector3d::Constant(200.0);  // per-DoF gains (ball joints)
  Vector3d pd_kd = Vector3d::Constant(10.0);
  Vector3d limit_lo = Vector3d::Constant(-kPi);
  Vector3d limit_hi = Vector3d::Constant(kPi);
};

// Capsule mass from solid volume: density * (pi r^2 L + 4/3 pi r^3), L = 2h.
double capsule_mass(double radius, double half_length, double density);

// Inertia tensor of a solid capsule about its center, axis along local z,
// for unit orientation; callers rotate into the body frame.
Matrix3d capsule_inertia(double radius, double half_length, double mass);

struct HumanoidModel {
  std::string name;
  std::vector<BodySpec> bodies;

  // Derived quantities, filled by load/validate.
  std::vector<double> body_mass;          // kg
  std::vector<Matrix3d> body_inertia;     // about the COM, body frame
  std::vector<Vector3d> body_com;         // body frame (= capsule_center)
  std::vector<int> angle_offset;          // per body: index into joint_angles, -1 if none
  std::vector<std::vector<int>> children; // tree adjacency

  int head_body = -1;                 // body carrying the camera mount
  std::vector<int> foot_bodies;       // bodies used by the foot-sliding metric
  Vector3d camera_mount_offset = Vector3d::Zero();  // camera pos in head frame
  std::vector<std::pair<int, int>> collision_pairs;  // opt-in self-collision capsule pairs

  int num_bodies() const { return static_cast<int>(bodies.size()); }
  int num_angles() const { return num_angles_; }          // actuated Euler DoF
  Eigen::Index nq() const { return 7 + num_angles_; }     // pose vector length
  Eigen::Index nv() const { return 6 + num_angles_; }     // velocity vector length

  double total_mass() const;
  int body_index(const std::string& name) const;  // -1 if absent

  Pose identity_pose() const {
    Pose p;
    p.joint_angles = VectorXd::Zero(num_angles_);
    return p;
  }

  // Per-DoF PD gain / limit vectors over the actuated angles.
  VectorXd kp_vector() const;
  VectorXd kd_vector() const;
  VectorXd limit_lo_vector() const;
  VectorXd limit_hi_vector() const;

  int num_angles_ = 0;
};

enum class ObjectClass { chair, box, obstacle, none };
enum class ObjectMobility { fixed, free };

std::string to_string(ObjectClass c);
ObjectClass object_class_from_string(const std::string& s);

struct SceneObject {
  ObjectClass cls = ObjectClass::none;
  bool is_capsule = false;
  Vector3d box_extents = Vector3d::Constant(0.1);  // full extents (m)
  double capsule_radius = 0.05;
  double capsule_half_length = 0.1;
  Vector3d position = Vector3d::Zero();
  Quat rotation;
  ObjectMobility mobility = ObjectMobility::fixed;
  double mass = 1.0;  // used when free
};

struct Scene {
  std::vector<SceneObject> objects;
};

// Parse and validate a model config (JSON text). Computes masses/inertias
// and rejects cycles, duplicate roots, non-positive geometry, unknown keys.
HumanoidModel load_model(const std::string& config_text);
std::string model_to_json(const HumanoidModel& model);

Scene load_scene(const std::string& config_text);
std::string scene_to_json(const Scene& scene);

// Built-in configs, served as JSON so they exercise the regular loader.
// Known names: "default25" (25 bodies / 76-dim pose) and "chain5".
std::string builtin_model_json(const std::string& name);
bool is_builtin_model(const std::string& name);

// Resolve "builtin:<name>" or a filesystem path to model JSON text.
std::string resolve_model_text(const std::string& path_or_builtin);

struct PoseValidation {
  bool ok = true;
  std::vector<std::string> limit_violations;  // joint names outside limits
};

// Shape errors throw; limit violations are reported per joint.
PoseValidation validate_pose_against_model(const HumanoidModel& model, const Pose& pose);

// Shift root z so the lowest capsule surface point rests on the ground plane.
Pose adjust_starting_height(const HumanoidModel& model, const Pose& pose, double clearance = 0.0);

}  // namespace humo
