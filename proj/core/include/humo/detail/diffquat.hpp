#pragma once

// Raw-4-vector quaternion kernels with hand-written adjoints. Unlike
// humo::Quat these never canonicalize or renormalize behind the caller's
// back, so forward computations form a fixed graph that the reverse-mode
// passes can mirror term by term. Layout is (w, x, y, z).

#include <cmath>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace humo::detail {

using Eigen::Matrix3d;
using Eigen::Matrix4d;
using Eigen::Vector3d;
using Eigen::Vector4d;

// Left/right multiplication matrices: qmul(a,b) = lmat(a)*b = rmat(b)*a.
inline Matrix4d lmat(const Vector4d& a) {
  Matrix4d m;
  m << a[0], -a[1], -a[2], -a[3],
       a[1],  a[0], -a[3],  a[2],
       a[2],  a[3],  a[0], -a[1],
       a[3], -a[2],  a[1],  a[0];
  return m;
}

inline Matrix4d rmat(const Vector4d& b) {
  Matrix4d m;
  m << b[0], -b[1], -b[2], -b[3],
       b[1],  b[0],  b[3], -b[2],
       b[2], -b[3],  b[0],  b[1],
       b[3],  b[2], -b[1],  b[0];
  return m;
}

inline Vector4d qmul(const Vector4d& a, const Vector4d& b) { return lmat(a) * b; }

inline void qmul_backward(const Vector4d& a, const Vector4d& b, const Vector4d& dc,
                          Vector4d* da, Vector4d* db) {
  if (da) *da += rmat(b).transpose() * dc;
  if (db) *db += lmat(a).transpose() * dc;
}

inline Vector4d qconj(const Vector4d& q) { return {q[0], -q[1], -q[2], -q[3]}; }

inline void qconj_backward(const Vector4d& dout, Vector4d* dq) {
  (*dq)[0] += dout[0];
  (*dq)[1] -= dout[1];
  (*dq)[2] -= dout[2];
  (*dq)[3] -= dout[3];
}

// Rotation of v by a unit quaternion: y = v + 2w(u x v) + 2 u x (u x v).
inline Vector3d qrot(const Vector4d& q, const Vector3d& v) {
  const Vector3d u = q.tail<3>();
  const Vector3d t = u.cross(v);
  return v + 2.0 * q[0] * t + 2.0 * u.cross(t);
}

inline void qrot_backward(const Vector4d& q, const Vector3d& v, const Vector3d& dy,
                          Vector4d* dq, Vector3d* dv) {
  const double w = q[0];
  const Vector3d u = q.tail<3>();
  const Vector3d uxv = u.cross(v);
  if (dq) {
    (*dq)[0] += 2.0 * dy.dot(uxv);
    // dy/du = -2w [v]x - 2 [uxv]x - 2 [u]x [v]x; transpose and apply to dy.
    const Vector3d du = 2.0 * w * v.cross(dy)
                        + 2.0 * uxv.cross(dy)
                        - 2.0 * v.cross(u.cross(dy));
    dq->tail<3>() += du;
  }
  if (dv) {
    // dy/dv = I + 2w [u]x + 2 [u]x [u]x; transposed: I - 2w [u]x + 2 [u]x [u]x.
    *dv += dy - 2.0 * w * u.cross(dy) + 2.0 * u.cross(u.cross(dy));
  }
}

inline Vector4d qnormalize(const Vector4d& q) { return q / q.norm(); }

inline void qnormalize_backward(const Vector4d& q, const Vector4d& dout, Vector4d* dq) {
  const double n = q.norm();
  const Vector4d qn = q / n;
  *dq += (dout - qn * qn.dot(dout)) / n;
}

// Quaternion for a rotation about a coordinate axis (0=x, 1=y, 2=z).
inline Vector4d axis_quat(int axis, double angle) {
  Vector4d q = Vector4d::Zero();
  q[0] = std::cos(0.5 * angle);
  q[1 + axis] = std::sin(0.5 * angle);
  return q;
}

inline Vector4d axis_quat_dangle(int axis, double angle) {
  Vector4d d = Vector4d::Zero();
  d[0] = -0.5 * std::sin(0.5 * angle);
  d[1 + axis] = 0.5 * std::cos(0.5 * angle);
  return d;
}

// Intrinsic XYZ Euler triplet -> quaternion, plus adjoint to the angles.
inline Vector4d euler_quat(const Vector3d& angles) {
  return qmul(qmul(axis_quat(0, angles[0]), axis_quat(1, angles[1])), axis_quat(2, angles[2]));
}

inline void euler_quat_backward(const Vector3d& angles, const Vector4d& dq, Vector3d* dangles) {
  const Vector4d qx = axis_quat(0, angles[0]);
  const Vector4d qy = axis_quat(1, angles[1]);
  const Vector4d qz = axis_quat(2, angles[2]);
  const Vector4d qxy = qmul(qx, qy);
  // q = qx qy qz
  Vector4d dqxy = Vector4d::Zero(), dqz = Vector4d::Zero();
  qmul_backward(qxy, qz, dq, &dqxy, &dqz);
  Vector4d dqx = Vector4d::Zero(), dqy = Vector4d::Zero();
  qmul_backward(qx, qy, dqxy, &dqx, &dqy);
  (*dangles)[0] += dqx.dot(axis_quat_dangle(0, angles[0]));
  (*dangles)[1] += dqy.dot(axis_quat_dangle(1, angles[1]));
  (*dangles)[2] += dqz.dot(axis_quat_dangle(2, angles[2]));
}

// Squared geodesic rotation angle of a (not necessarily unit) quaternion,
// smooth at the identity: theta^2 with theta = 2 atan2(|vec|, |w|) after
// normalization.
inline double angle_sq(const Vector4d& q_raw) {
  const Vector4d q = qnormalize(q_raw);
  const double s = q.tail<3>().norm();
  const double c = std::abs(q[0]);
  const double theta = 2.0 * std::atan2(s, c);
  return theta * theta;
}

inline void angle_sq_backward(const Vector4d& q_raw, double dout, Vector4d* dq_raw) {
  const Vector4d q = qnormalize(q_raw);
  const double s = q.tail<3>().norm();
  const double c = std::abs(q[0]);
  const double sign_w = q[0] < 0.0 ? -1.0 : 1.0;
  const double theta = 2.0 * std::atan2(s, c);
  Vector4d dq = Vector4d::Zero();
  if (s < 1e-8) {
    // theta^2 ~= 4 |vec|^2 / w^2 near identity; with |q| = 1 this is ~ 4|vec|^2.
    dq.tail<3>() = 8.0 * q.tail<3>();
  } else {
    // d theta / d vec = 2 c vhat, d theta / d w = -2 s sign(w)   (|q| = 1)
    dq.tail<3>() = (2.0 * theta) * (2.0 * c / s) * q.tail<3>();
    dq[0] = (2.0 * theta) * (-2.0 * s) * sign_w;
  }
  dq *= dout;
  qnormalize_backward(q_raw, dq, dq_raw);
}

// exp map: rotation vector -> unit quaternion, with adjoint.
inline Vector4d qexp(const Vector3d& omega) {
  const double theta = omega.norm();
  Vector4d q;
  if (theta < 1e-8) {
    const double t2 = theta * theta;
    q[0] = 1.0 - t2 / 8.0;
    q.tail<3>() = (0.5 - t2 / 48.0) * omega;
  } else {
    const double h = 0.5 * theta;
    q[0] = std::cos(h);
    q.tail<3>() = (std::sin(h) / theta) * omega;
  }
  return q;
}

inline void qexp_backward(const Vector3d& omega, const Vector4d& dq, Vector3d* domega) {
  const double theta = omega.norm();
  if (theta < 1e-8) {
    // w ~= 1 - |w|^2/8: dw/domega = -omega/4; vec ~= omega/2.
    *domega += -0.25 * dq[0] * omega + 0.5 * dq.tail<3>();
    return;
  }
  const double h = 0.5 * theta;
  const double ch = std::cos(h), sh = std::sin(h);
  const Vector3d uhat = omega / theta;
  const double s = sh / theta;                    // vec = s * omega
  const double ds_dtheta = (0.5 * ch - s) / theta;
  // dw = -0.5 sh * uhat . domega
  *domega += dq[0] * (-0.5 * sh) * uhat;
  // dvec/domega = s I + omega (ds_dtheta uhat)^T
  *domega += s * dq.tail<3>() + uhat * (ds_dtheta * omega.dot(dq.tail<3>()));
}

}  // namespace humo::detail
