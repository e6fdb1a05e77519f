#include "humo/detail/diffquat.hpp"
#include "humo/kin.hpp"

namespace humo {

using detail::angle_sq;
using detail::angle_sq_backward;
using detail::euler_quat;
using detail::euler_quat_backward;
using detail::qconj;
using detail::qconj_backward;
using detail::qmul;
using detail::qmul_backward;
using detail::qnormalize;
using detail::qnormalize_backward;

namespace {

Vector4d yaw_quat4(double psi) { return {std::cos(0.5 * psi), 0.0, 0.0, std::sin(0.5 * psi)}; }

// Heading angle of a unit quaternion and its gradient.
double heading4(const Vector4d& nq, Vector4d* dpsi) {
  const double w = nq[0], z = nq[3];
  const double n2 = w * w + z * z;
  if (n2 < 1e-18) {
    if (dpsi) dpsi->setZero();
    return 0.0;
  }
  if (dpsi) *dpsi = Vector4d(-2.0 * z / n2, 0.0, 0.0, 2.0 * w / n2);
  return 2.0 * std::atan2(z, w);
}

Vector3d rotz(double psi, const Vector3d& u) {
  const double c = std::cos(psi), s = std::sin(psi);
  return {c * u.x() + s * u.y(), -s * u.x() + c * u.y(), u.z()};  // Rz(-psi) u
}

}  // namespace

double sl_frame_loss(const HumanoidModel& model, const Vector3d& pred_pos,
                     const Vector4d& pred_quat_raw, const VectorXd& pred_angles,
                     const SlFrameTarget& target, SlGrad* grad) {
  if (pred_angles.size() != model.num_angles() ||
      target.gt.joint_angles.size() != model.num_angles())
    throw ShapeError("sl_frame_loss: DoF mismatch");

  const Vector4d nq = qnormalize(pred_quat_raw);
  const Vector4d gt_q = target.gt.root_rot.wxyz();
  Vector4d d_nq = Vector4d::Zero();
  Vector3d d_pos = Vector3d::Zero();
  VectorXd d_angles = VectorXd::Zero(pred_angles.size());
  double loss = 0.0;

  // (1) root rotation difference
  {
    const Vector4d diff = qmul(nq, qconj(gt_q));
    loss += angle_sq(diff);
    if (grad) {
      Vector4d d_diff = Vector4d::Zero();
      angle_sq_backward(diff, 1.0, &d_diff);
      qmul_backward(nq, qconj(gt_q), d_diff, &d_nq, nullptr);
    }
  }
  // (2) root position
  {
    const Vector3d d = pred_pos - target.gt.root_pos;
    loss += d.squaredNorm();
    if (grad) d_pos += 2.0 * d;
  }
  // (3)+(4) agent-centric object rotation and position
  if (target.has_object) {
    Vector4d dpsi_dq = Vector4d::Zero();
    const double psi = heading4(nq, grad ? &dpsi_dq : nullptr);
    double dpsi = 0.0;

    const double psi_gt = heading_of(target.gt.root_rot);
    const Vector4d obj_rot_gt_ac =
        qmul(yaw_quat4(-psi_gt), target.obj_rot_gt.wxyz());
    const Vector3d obj_pos_gt_ac =
        rotz(psi_gt, target.obj_pos_gt - Vector3d(target.gt.root_pos.x(),
                                                  target.gt.root_pos.y(), 0.0));

    // rotation term
    {
      const Vector4d yq = yaw_quat4(-psi);
      const Vector4d obj_ac = qmul(yq, target.obj_rot_pred.wxyz());
      const Vector4d diff = qmul(obj_ac, qconj(obj_rot_gt_ac));
      loss += angle_sq(diff);
      if (grad) {
        Vector4d d_diff = Vector4d::Zero();
        angle_sq_backward(diff, 1.0, &d_diff);
        Vector4d d_obj_ac = Vector4d::Zero();
        qmul_backward(obj_ac, qconj(obj_rot_gt_ac), d_diff, &d_obj_ac, nullptr);
        Vector4d d_yq = Vector4d::Zero();
        qmul_backward(yq, target.obj_rot_pred.wxyz(), d_obj_ac, &d_yq, nullptr);
        const Vector4d dyq_dpsi(0.5 * std::sin(0.5 * psi), 0.0, 0.0, -0.5 * std::cos(0.5 * psi));
        dpsi += d_yq.dot(dyq_dpsi);
      }
    }
    // position term
    {
      const Vector3d rel =
          target.obj_pos_pred - Vector3d(pred_pos.x(), pred_pos.y(), 0.0);
      const Vector3d obj_ac = rotz(psi, rel);
      const Vector3d d = obj_ac - obj_pos_gt_ac;
      loss += d.squaredNorm();
      if (grad) {
        const Vector3d d_obj_ac = 2.0 * d;
        // d(rotz)/dpsi = (y, -x, 0) of the rotated vector
        dpsi += d_obj_ac.dot(Vector3d(obj_ac.y(), -obj_ac.x(), 0.0));
        // back through rel: d rel = Rz(-psi)^T d_obj_ac = Rz(psi) applied inversely
        const double c = std::cos(psi), s = std::sin(psi);
        const Vector3d d_rel(c * d_obj_ac.x() - s * d_obj_ac.y(),
                             s * d_obj_ac.x() + c * d_obj_ac.y(), d_obj_ac.z());
        d_pos.x() += -d_rel.x();
        d_pos.y() += -d_rel.y();
      }
    }
    if (grad) d_nq += dpsi * dpsi_dq;
  }
  // (5) joint rotations (local, per joint)
  for (int off = 0; off + 2 < model.num_angles(); off += 3) {
    const Vector4d qa = euler_quat(pred_angles.segment<3>(off));
    const Vector4d qb = euler_quat(target.gt.joint_angles.segment<3>(off));
    const Vector4d diff = qmul(qa, qconj(qb));
    loss += angle_sq(diff);
    if (grad) {
      Vector4d d_diff = Vector4d::Zero();
      angle_sq_backward(diff, 1.0, &d_diff);
      Vector4d d_qa = Vector4d::Zero();
      qmul_backward(qa, qconj(qb), d_diff, &d_qa, nullptr);
      Vector3d da = Vector3d::Zero();
      euler_quat_backward(pred_angles.segment<3>(off), d_qa, &da);
      d_angles.segment<3>(off) += da;
    }
  }
  // (6) FK joint positions (world, non-root bodies)
  {
    Pose pred;
    pred.root_pos = pred_pos;
    pred.root_rot = Quat(nq);
    pred.joint_angles = pred_angles;
    const FkResult fk = forward_kinematics(model, pred);
    const FkResult fk_gt = forward_kinematics(model, target.gt);
    std::vector<Vector3d> d_world(model.num_bodies(), Vector3d::Zero());
    for (int b = 1; b < model.num_bodies(); ++b) {
      const Vector3d d = fk.world_pos[b] - fk_gt.world_pos[b];
      loss += d.squaredNorm();
      if (grad) d_world[b] = 2.0 * d;
    }
    if (grad) {
      const FkBackwardResult fb = fk_backward_positions(model, pred, d_world);
      d_pos += fb.d_root_pos;
      d_nq += fb.d_root_quat;
      d_angles += fb.d_angles;
    }
  }

  if (grad) {
    grad->d_pos += d_pos;
    Vector4d d_raw = Vector4d::Zero();
    qnormalize_backward(pred_quat_raw, d_nq, &d_raw);
    grad->d_quat_raw += d_raw;
    if (grad->d_angles.size() != d_angles.size()) grad->d_angles = d_angles;
    else grad->d_angles += d_angles;
  }
  return loss;
}

}  // namespace humo
