#include "humo/sim.hpp"

#include <algorithm>

#include "sim_contacts.hpp"
#include "sim_dynamics.hpp"

namespace humo {

using detail::KinCache;

VectorXd pd_torque(const VectorXd& q_d, const VectorXd& q, const VectorXd& qdot,
                   const VectorXd& kp, const VectorXd& kd) {
  const auto n = q_d.size();
  if (q.size() != n || qdot.size() != n || kp.size() != n || kd.size() != n)
    throw ShapeError("pd_torque: vector length mismatch");
  return kp.cwiseProduct(q_d - q) - kd.cwiseProduct(qdot);
}

double measure_penetration(const SimState& state) {
  if (state.contacts.empty()) return 0.0;
  double sum = 0.0;
  for (const ContactPoint& c : state.contacts) sum += c.depth;
  return 1000.0 * sum / static_cast<double>(state.contacts.size());
}

Simulation::Simulation(const HumanoidModel& model, const Scene& scene, SimConfig cfg)
    : model_(&model), scene_(scene), cfg_(cfg) {
  q_ = model.identity_pose();
  v_ = QVel::zero(model.num_angles());
  objects_.resize(scene_.objects.size());
  for (std::size_t i = 0; i < objects_.size(); ++i) {
    objects_[i].position = scene_.objects[i].position;
    objects_[i].rotation = scene_.objects[i].rotation;
  }
}

void Simulation::set_state(const Pose& q, const QVel& qdot) {
  if (q.joint_angles.size() != model_->num_angles() ||
      qdot.joint_vel.size() != model_->num_angles())
    throw ShapeError("set_state: DoF mismatch with model");
  if (!q.is_finite() || !qdot.is_finite()) throw NumericError("set_state: non-finite state");
  q_ = q;
  v_ = qdot;
}

void Simulation::set_state(const Pose& q, const QVel& qdot,
                           const std::vector<ObjectState>& objects) {
  if (objects.size() != objects_.size()) throw ShapeError("set_state: object count mismatch");
  set_state(q, qdot);
  objects_ = objects;
}

void Simulation::set_full_state(const SimState& s) {
  set_state(s.q, s.qdot, s.objects);
  sim_time_ = s.sim_time;
}

SimState Simulation::state() const {
  SimState s;
  s.q = q_;
  s.qdot = v_;
  s.objects = objects_;
  s.contacts = contact_resolve();
  s.sim_time = sim_time_;
  return s;
}

std::vector<ContactPoint> Simulation::contact_resolve() const {
  KinCache kc;
  detail::compute_kinematics(*model_, q_, v_, &kc);
  std::vector<ContactPoint> contacts = detail::detect_contacts(*model_, kc, scene_, objects_);
  // Report forces consistently with what a substep at this state would apply.
  for (ContactPoint& c : contacts) {
    Vector3d v_body = Vector3d::Zero();
    if (c.body >= 0) v_body = detail::point_velocity(kc, c.body, c.point);
    Vector3d v_other = Vector3d::Zero();
    if (c.object >= 0 && scene_.objects[c.object].mobility == ObjectMobility::free) {
      const ObjectState& os = objects_[c.object];
      v_other = os.lin_vel + os.ang_vel.cross(c.point - os.position);
    } else if (c.object <= -2) {
      v_other = detail::point_velocity(kc, -2 - c.object, c.point);
    }
    const double ddot = -(v_body - v_other).dot(c.normal);
    c.force_n = std::max(0.0, cfg_.contact_kp * c.depth + cfg_.contact_kd * ddot);
  }
  return contacts;
}

double Simulation::penetration_mm() const {
  SimState s;
  s.contacts = contact_resolve();
  return measure_penetration(s);
}

void Simulation::substep(const ControlInput& control, int index) {
  const double dt = cfg_.dt_sub;
  KinCache kc;
  detail::compute_kinematics(*model_, q_, v_, &kc);

  const int nv = static_cast<int>(model_->nv());
  VectorXd Q = VectorXd::Zero(nv);

  // PD torques on the actuated DoF; the root gets none.
  const VectorXd tau = pd_torque(control.pd_target, q_.joint_angles, v_.joint_vel,
                                 model_->kp_vector(), model_->kd_vector());
  Q.tail(model_->num_angles()) += tau;

  // Residual wrench at the root frame origin, magnitude-limited.
  Vector3d eta_f = control.residual_force;
  if (eta_f.norm() > cfg_.residual_force_max)
    eta_f *= cfg_.residual_force_max / eta_f.norm();
  Vector3d eta_t = control.residual_torque;
  if (eta_t.norm() > cfg_.residual_torque_max)
    eta_t *= cfg_.residual_torque_max / eta_t.norm();
  Q.segment<3>(0) += eta_f;
  Q.segment<3>(3) += eta_t;

  // Contact forces (penalty normal + capped viscous friction).
  std::vector<Vector3d> obj_force(objects_.size(), Vector3d::Zero());
  std::vector<Vector3d> obj_torque(objects_.size(), Vector3d::Zero());
  std::vector<ContactPoint> contacts = detail::detect_contacts(*model_, kc, scene_, objects_);
  for (ContactPoint& c : contacts) {
    Vector3d v_body = Vector3d::Zero();
    if (c.body >= 0) v_body = detail::point_velocity(kc, c.body, c.point);
    Vector3d v_other = Vector3d::Zero();
    const bool other_is_free_object =
        c.object >= 0 && scene_.objects[c.object].mobility == ObjectMobility::free;
    if (other_is_free_object) {
      const ObjectState& os = objects_[c.object];
      v_other = os.lin_vel + os.ang_vel.cross(c.point - os.position);
    } else if (c.object <= -2) {
      v_other = detail::point_velocity(kc, -2 - c.object, c.point);
    }
    const Vector3d v_rel = v_body - v_other;
    const double ddot = -v_rel.dot(c.normal);
    const double fn = std::max(0.0, cfg_.contact_kp * c.depth + cfg_.contact_kd * ddot);
    c.force_n = fn;
    Vector3d force = fn * c.normal;
    const Vector3d v_t = v_rel - v_rel.dot(c.normal) * c.normal;
    const double vt_norm = v_t.norm();
    if (vt_norm > 1e-9) {
      const double ft = std::min(cfg_.friction_mu * fn, cfg_.friction_kv * vt_norm);
      force -= ft * v_t / vt_norm;
    }
    if (c.body >= 0) detail::add_point_force(*model_, kc, c.body, c.point, force, &Q);
    if (other_is_free_object) {
      obj_force[c.object] -= force;
      obj_torque[c.object] += (c.point - objects_[c.object].position).cross(-force);
    }
    if (c.object <= -2)
      detail::add_point_force(*model_, kc, -2 - c.object, c.point, -force, &Q);
    if (c.body < 0 && c.object >= 0) {
      // Object-ground contact: force acts on the object.
      obj_force[c.object] += force;
      obj_torque[c.object] += (c.point - objects_[c.object].position).cross(force);
    }
  }

  // Dynamics solve.
  Eigen::MatrixXd M;
  VectorXd bias;
  detail::mass_matrix(*model_, kc, cfg_.armature, &M);
  detail::bias_forces(*model_, kc, cfg_.gravity, &bias);
  const VectorXd vdot = M.ldlt().solve(Q - bias);

  // Midpoint position update: exact for constant acceleration.
  const VectorXd v_old = v_.flat();
  const VectorXd v_new = v_old + dt * vdot;
  const VectorXd v_mid = 0.5 * (v_old + v_new);
  q_.root_pos += dt * v_mid.segment<3>(0);
  q_.root_rot = Quat::exp_map(dt * v_mid.segment<3>(3)) * q_.root_rot;
  q_.joint_angles += dt * v_mid.tail(model_->num_angles());
  v_ = QVel::from_flat(v_new);

  // Free scene objects: plain rigid-body update with the same rule.
  for (std::size_t i = 0; i < objects_.size(); ++i) {
    const SceneObject& so = scene_.objects[i];
    if (so.mobility != ObjectMobility::free) continue;
    ObjectState& os = objects_[i];
    const Vector3d g(0.0, 0.0, -cfg_.gravity);
    const Vector3d acc = obj_force[i] / so.mass + g;
    const Matrix3d R = os.rotation.to_matrix();
    const Vector3d e = so.box_extents;
    const Vector3d Idiag(so.mass / 12.0 * (e.y() * e.y() + e.z() * e.z()),
                         so.mass / 12.0 * (e.x() * e.x() + e.z() * e.z()),
                         so.mass / 12.0 * (e.x() * e.x() + e.y() * e.y()));
    const Matrix3d Iw = R * Idiag.asDiagonal() * R.transpose();
    const Vector3d ang_acc =
        Iw.ldlt().solve(obj_torque[i] - os.ang_vel.cross(Iw * os.ang_vel));
    const Vector3d lv_new = os.lin_vel + dt * acc;
    const Vector3d av_new = os.ang_vel + dt * ang_acc;
    os.position += dt * 0.5 * (os.lin_vel + lv_new);
    os.rotation = Quat::exp_map(dt * 0.5 * (os.ang_vel + av_new)) * os.rotation;
    os.lin_vel = lv_new;
    os.ang_vel = av_new;
  }

  if (!q_.is_finite() || !v_.is_finite())
    throw SimDivergedError("simulation diverged at substep " + std::to_string(index), index);
  for (const ObjectState& os : objects_)
    if (!os.position.allFinite() || !os.lin_vel.allFinite() || !os.ang_vel.allFinite())
      throw SimDivergedError("object state diverged at substep " + std::to_string(index), index);

  sim_time_ += dt;
}

void Simulation::step(const ControlInput& control) {
  if (control.pd_target.size() != model_->num_angles())
    throw ShapeError("step: pd_target length mismatch");
  if (!control.pd_target.allFinite() || !control.residual_force.allFinite() ||
      !control.residual_torque.allFinite())
    throw NumericError("step: non-finite control");
  for (int s = 0; s < cfg_.substeps; ++s) substep(control, s);
}

SimState sim_step(const HumanoidModel& model, const Scene& scene, const SimConfig& cfg,
                  const SimState& state, const ControlInput& control) {
  Simulation sim(model, scene, cfg);
  sim.set_full_state(state);
  sim.step(control);
  return sim.state();
}

}  // namespace humo
