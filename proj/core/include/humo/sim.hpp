#pragma once

#include <vector>

#include "humo/fk.hpp"
#include "humo/model.hpp"

namespace humo {

struct SimConfig {
  double dt_sub = 1.0 / 450.0;  // physics substep
  int substeps = 15;            // substeps per control step (30 Hz control)
  double gravity = 9.81;        // m/s^2, +z up; set 0 for sanity modes
  double contact_kp = 30000.0;  // penalty stiffness N/m
  double contact_kd = 600.0;    // penalty damping N s/m
  double friction_mu = 0.9;     // Coulomb cap
  double friction_kv = 2500.0;  // tangential viscous gain N s/m
  double armature = 0.05;       // rotor inertia added on actuated DoF
  double residual_force_max = 300.0;   // |eta_force| ceiling, N
  double residual_torque_max = 100.0;  // |eta_torque| ceiling, N m
};

struct ContactPoint {
  int body = -1;              // humanoid body index, or -1 for an object-only contact
  int object = -1;            // scene object index, -1 for the ground plane
  Vector3d point = Vector3d::Zero();   // world
  Vector3d normal = Vector3d::UnitZ(); // unit, pointing into the body
  double depth = 0.0;         // penetration, m, >= 0
  double force_n = 0.0;       // normal force magnitude, N
};

struct ObjectState {
  Vector3d position = Vector3d::Zero();
  Quat rotation;
  Vector3d lin_vel = Vector3d::Zero();
  Vector3d ang_vel = Vector3d::Zero();
};

// Complete physical state of one simulation instant.
struct SimState {
  Pose q;
  QVel qdot;
  std::vector<ObjectState> objects;
  std::vector<ContactPoint> contacts;
  double sim_time = 0.0;
};

struct ControlInput {
  VectorXd pd_target;  // desired joint angles over the actuated DoF
  Vector3d residual_force = Vector3d::Zero();   // eta, applied at the root origin
  Vector3d residual_torque = Vector3d::Zero();

  static ControlInput zero(const HumanoidModel& m) {
    ControlInput c;
    c.pd_target = VectorXd::Zero(m.num_angles());
    return c;
  }
};

// tau = kp o (q_d - q) - kd o qdot, element-wise over actuated DoF.
VectorXd pd_torque(const VectorXd& q_d, const VectorXd& q, const VectorXd& qdot,
                   const VectorXd& kp, const VectorXd& kd);

// Mean penetration depth over active contacts, in millimeters (0 if none).
double measure_penetration(const SimState& state);

// Reduced-coordinate articulated rigid-body simulation with PD actuation,
// penalty contacts, residual root wrench and free-box scene objects.
// One instance is single-threaded and owns its state; states move between
// instances as plain values via state()/set_state().
class Simulation {
 public:
  Simulation(const HumanoidModel& model, const Scene& scene, SimConfig cfg = {});

  const HumanoidModel& model() const { return *model_; }
  const Scene& scene() const { return scene_; }
  const SimConfig& config() const { return cfg_; }

  // Exact state injection; contacts recomputed, sim_time preserved.
  void set_state(const Pose& q, const QVel& qdot);
  void set_state(const Pose& q, const QVel& qdot, const std::vector<ObjectState>& objects);
  void set_full_state(const SimState& s);

  SimState state() const;
  const Pose& pose() const { return q_; }
  const QVel& qvel() const { return v_; }
  const std::vector<ObjectState>& objects() const { return objects_; }
  double sim_time() const { return sim_time_; }

  // Advance cfg.substeps steps of cfg.dt_sub. Deterministic given inputs.
  // Throws SimDivergedError (with the substep index) on non-finite states.
  void step(const ControlInput& control);

  // Contacts at the current state.
  std::vector<ContactPoint> contact_resolve() const;
  double penetration_mm() const;

 private:
  void substep(const ControlInput& control, int index);

  const HumanoidModel* model_;
  Scene scene_;
  SimConfig cfg_;
  Pose q_;
  QVel v_;
  std::vector<ObjectState> objects_;
  double sim_time_ = 0.0;
};

// Value-style convenience wrapper around a transient Simulation.
SimState sim_step(const HumanoidModel& model, const Scene& scene, const SimConfig& cfg,
                  const SimState& state, const ControlInput& control);

}  // namespace humo
