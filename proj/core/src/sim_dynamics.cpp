#include "sim_dynamics.hpp"

#include <Eigen/Geometry>

namespace humo::detail {

namespace {

Matrix3d axis_rotation(int axis, double angle) {
  Vector3d u = Vector3d::Zero();
  u[axis] = 1.0;
  return Eigen::AngleAxisd(angle, u).toRotationMatrix();
}

}  // namespace

void compute_kinematics(const HumanoidModel& m, const Pose& q, const QVel& v, KinCache* kc) {
  const int nb = m.num_bodies();
  kc->R.resize(nb);
  kc->o.resize(nb);
  kc->com.resize(nb);
  kc->omega.resize(nb);
  kc->v_o.resize(nb);
  kc->v_com.resize(nb);
  kc->alpha0.resize(nb);
  kc->a_com0.resize(nb);
  kc->I_world.resize(nb);
  kc->dofs.clear();
  kc->dofs.reserve(6 + m.num_angles());
  kc->ancestor_dofs.assign(nb, {});

  // Root free joint: 3 linear + 3 angular world-frame DoF.
  kc->R[0] = q.root_rot.to_matrix();
  kc->o[0] = q.root_pos;
  kc->omega[0] = v.root_ang;
  kc->v_o[0] = v.root_lin;
  kc->alpha0[0] = Vector3d::Zero();
  Vector3d a_o0_root = Vector3d::Zero();
  for (int k = 0; k < 6; ++k) {
    DofInfo d;
    d.body = 0;
    d.axis = Vector3d::Unit(k % 3);
    d.origin = q.root_pos;
    kc->dofs.push_back(d);
    kc->ancestor_dofs[0].push_back(k);
  }

  std::vector<Vector3d> a_o0(nb);  // joint-origin acceleration, zero gen. accel
  a_o0[0] = a_o0_root;

  for (int b = 0; b < nb; ++b) {
    if (b > 0) {
      const BodySpec& spec = m.bodies[b];
      const int p = spec.parent;
      kc->ancestor_dofs[b] = kc->ancestor_dofs[p];
      const Vector3d r_off = kc->R[p] * spec.offset;
      kc->o[b] = kc->o[p] + r_off;
      kc->v_o[b] = kc->v_o[p] + kc->omega[p].cross(r_off);
      a_o0[b] = a_o0[p] + kc->alpha0[p].cross(r_off) +
                kc->omega[p].cross(kc->omega[p].cross(r_off));

      if (spec.joint == JointKind::ball_xyz) {
        const int off = m.angle_offset[b];
        Matrix3d R_run = kc->R[p];
        Vector3d w_run = kc->omega[p];
        Vector3d al_run = kc->alpha0[p];
        for (int k = 0; k < 3; ++k) {
          const double angle = q.joint_angles[off + k];
          const double rate = v.joint_vel[off + k];
          const Vector3d axis = R_run.col(k);  // world direction of local axis k
          DofInfo d;
          d.body = b;
          d.axis = axis;
          d.origin = kc->o[b];
          kc->ancestor_dofs[b].push_back(static_cast<int>(kc->dofs.size()));
          kc->dofs.push_back(d);
          al_run += w_run.cross(axis * rate);
          w_run += axis * rate;
          R_run = R_run * axis_rotation(k, angle);
        }
        kc->R[b] = R_run;
        kc->omega[b] = w_run;
        kc->alpha0[b] = al_run;
      } else {  // fixed
        kc->R[b] = kc->R[p];
        kc->omega[b] = kc->omega[p];
        kc->alpha0[b] = kc->alpha0[p];
      }
    }
    const Vector3d rc = kc->R[b] * m.body_com[b];
    kc->com[b] = kc->o[b] + rc;
    kc->v_com[b] = kc->v_o[b] + kc->omega[b].cross(rc);
    kc->a_com0[b] = a_o0[b] + kc->alpha0[b].cross(rc) +
                    kc->omega[b].cross(kc->omega[b].cross(rc));
    kc->I_world[b] = kc->R[b] * m.body_inertia[b] * kc->R[b].transpose();
  }
}

Vector3d point_velocity(const KinCache& kc, int body, const Vector3d& point) {
  return kc.v_o[body] + kc.omega[body].cross(point - kc.o[body]);
}

namespace {

// Jacobian columns of a world point attached to `body` (linear part) and of
// the body angular velocity, for one DoF.
inline void dof_jacobian(const KinCache& kc, int dof, const Vector3d& point,
                         Vector3d* jv, Vector3d* jw) {
  const DofInfo& d = kc.dofs[dof];
  if (d.body == 0 && dof < 3) {  // root linear
    *jv = Vector3d::Unit(dof);
    *jw = Vector3d::Zero();
  } else if (d.body == 0) {  // root angular
    *jw = d.axis;
    *jv = d.axis.cross(point - d.origin);
  } else {  // ball DoF
    *jw = d.axis;
    *jv = d.axis.cross(point - d.origin);
  }
}

}  // namespace

void mass_matrix(const HumanoidModel& m, const KinCache& kc, double armature, MatrixXd* M) {
  const int nv = static_cast<int>(m.nv());
  M->setZero(nv, nv);
  std::vector<Vector3d> jv, jw;
  for (int b = 0; b < m.num_bodies(); ++b) {
    const auto& dofs = kc.ancestor_dofs[b];
    const int nd = static_cast<int>(dofs.size());
    jv.resize(nd);
    jw.resize(nd);
    for (int i = 0; i < nd; ++i) dof_jacobian(kc, dofs[i], kc.com[b], &jv[i], &jw[i]);
    const double mass = m.body_mass[b];
    const Matrix3d& I = kc.I_world[b];
    for (int i = 0; i < nd; ++i) {
      const Vector3d Ijw = I * jw[i];
      for (int j = i; j < nd; ++j) {
        const double val = mass * jv[i].dot(jv[j]) + Ijw.dot(jw[j]);
        (*M)(dofs[i], dofs[j]) += val;
        if (i != j) (*M)(dofs[j], dofs[i]) += val;
      }
    }
  }
  for (int i = 6; i < nv; ++i) (*M)(i, i) += armature;
}

void bias_forces(const HumanoidModel& m, const KinCache& kc, double gravity, VectorXd* bias) {
  const int nv = static_cast<int>(m.nv());
  bias->setZero(nv);
  const Vector3d g(0.0, 0.0, -gravity);
  Vector3d jv, jw;
  for (int b = 0; b < m.num_bodies(); ++b) {
    const double mass = m.body_mass[b];
    const Vector3d f = mass * (kc.a_com0[b] - g);  // inertial + gravity
    const Vector3d t = kc.I_world[b] * kc.alpha0[b] +
                       kc.omega[b].cross(kc.I_world[b] * kc.omega[b]);
    for (int dof : kc.ancestor_dofs[b]) {
      dof_jacobian(kc, dof, kc.com[b], &jv, &jw);
      (*bias)[dof] += jv.dot(f) + jw.dot(t);
    }
  }
}

void add_point_force(const HumanoidModel& m, const KinCache& kc, int body,
                     const Vector3d& point, const Vector3d& force, VectorXd* Q) {
  (void)m;
  Vector3d jv, jw;
  for (int dof : kc.ancestor_dofs[body]) {
    dof_jacobian(kc, dof, point, &jv, &jw);
    (*Q)[dof] += jv.dot(force);
  }
}

void add_body_torque(const HumanoidModel& m, const KinCache& kc, int body,
                     const Vector3d& torque, VectorXd* Q) {
  (void)m;
  Vector3d jv, jw;
  for (int dof : kc.ancestor_dofs[body]) {
    dof_jacobian(kc, dof, kc.o[body], &jv, &jw);
    (*Q)[dof] += jw.dot(torque);
  }
}

}  // namespace humo::detail
