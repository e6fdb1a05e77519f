#pragma once

#include <cmath>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "humo/errors.hpp"

namespace humo {

using Eigen::Matrix3d;
using Eigen::Matrix4d;
using Eigen::Vector3d;
using Eigen::Vector4d;
using Eigen::VectorXd;

constexpr double kPi = 3.14159265358979323846;

inline double wrap_to_pi(double a) {
  a = std::fmod(a + kPi, 2.0 * kPi);
  if (a < 0.0) a += 2.0 * kPi;
  return a - kPi;
}

// Unit quaternion, stored on the canonical hemisphere (w >= 0, with a
// deterministic lexicographic tie-break at w == 0). Every constructor
// normalizes, so rotation-difference magnitudes are always well defined.
class Quat {
 public:
  Quat() = default;

  Quat(double w, double x, double y, double z) : w_(w), x_(x), y_(y), z_(z) {
    normalize_canonical();
  }

  explicit Quat(const Vector4d& wxyz) : Quat(wxyz[0], wxyz[1], wxyz[2], wxyz[3]) {}

  double w() const { return w_; }
  double x() const { return x_; }
  double y() const { return y_; }
  double z() const { return z_; }

  Vector4d wxyz() const { return {w_, x_, y_, z_}; }
  Vector3d vec() const { return {x_, y_, z_}; }

  static Quat identity() { return Quat(); }

  static Quat from_axis_angle(const Vector3d& axis, double angle) {
    const double n = axis.norm();
    if (!(n > 0.0) || !std::isfinite(angle))
      throw NumericError("from_axis_angle: degenerate axis or non-finite angle");
    const double h = 0.5 * angle;
    const Vector3d u = axis / n;
    return Quat(std::cos(h), u.x() * std::sin(h), u.y() * std::sin(h), u.z() * std::sin(h));
  }

  // exp map of a rotation vector (axis * angle).
  static Quat exp_map(const Vector3d& omega) {
    const double theta = omega.norm();
    if (!std::isfinite(theta)) throw NumericError("exp_map: non-finite input");
    if (theta < 1e-12) return Quat(1.0, 0.5 * omega.x(), 0.5 * omega.y(), 0.5 * omega.z());
    const double h = 0.5 * theta;
    const double s = std::sin(h) / theta;
    return Quat(std::cos(h), s * omega.x(), s * omega.y(), s * omega.z());
  }

  // Rotation vector in [0, pi] * axis (canonical hemisphere makes the
  // shortest representation unique).
  Vector3d log_map() const {
    const double vn = std::sqrt(x_ * x_ + y_ * y_ + z_ * z_);
    if (vn < 1e-15) return {2.0 * x_, 2.0 * y_, 2.0 * z_};
    const double angle = 2.0 * std::atan2(vn, w_);
    const double s = angle / vn;
    return {s * x_, s * y_, s * z_};
  }

  Quat conjugate() const { return Quat(w_, -x_, -y_, -z_); }
  Quat inverse() const { return conjugate(); }  // unit quaternion

  Quat operator*(const Quat& o) const {
    return Quat(w_ * o.w_ - x_ * o.x_ - y_ * o.y_ - z_ * o.z_,
                w_ * o.x_ + x_ * o.w_ + y_ * o.z_ - z_ * o.y_,
                w_ * o.y_ - x_ * o.z_ + y_ * o.w_ + z_ * o.x_,
                w_ * o.z_ + x_ * o.y_ - y_ * o.x_ + z_ * o.w_);
  }

  Vector3d rotate(const Vector3d& v) const {
    // q v q*  via the two-cross-product form.
    const Vector3d u(x_, y_, z_);
    const Vector3d t = 2.0 * u.cross(v);
    return v + w_ * t + u.cross(t);
  }

  Matrix3d to_matrix() const {
    Matrix3d m;
    const double xx = x_ * x_, yy = y_ * y_, zz = z_ * z_;
    const double xy = x_ * y_, xz = x_ * z_, yz = y_ * z_;
    const double wx = w_ * x_, wy = w_ * y_, wz = w_ * z_;
    m << 1 - 2 * (yy + zz), 2 * (xy - wz), 2 * (xz + wy),
         2 * (xy + wz), 1 - 2 * (xx + zz), 2 * (yz - wx),
         2 * (xz - wy), 2 * (yz + wx), 1 - 2 * (xx + yy);
    return m;
  }

  // Geodesic rotation angle to another quaternion, in [0, pi].
  double angle_to(const Quat& o) const {
    const double d = std::min(1.0, std::abs(w_ * o.w_ + x_ * o.x_ + y_ * o.y_ + z_ * o.z_));
    return 2.0 * std::acos(d);
  }

  // Rotation angle of this quaternion, in [0, pi].
  double angle() const {
    const double vn = std::sqrt(x_ * x_ + y_ * y_ + z_ * z_);
    return 2.0 * std::atan2(vn, std::abs(w_));
  }

  bool is_finite() const {
    return std::isfinite(w_) && std::isfinite(x_) && std::isfinite(y_) && std::isfinite(z_);
  }

 private:
  void normalize_canonical() {
    if (!is_finite()) throw NumericError("Quat: non-finite components");
    const double n = std::sqrt(w_ * w_ + x_ * x_ + y_ * y_ + z_ * z_);
    if (n < 1e-12) throw NumericError("Quat: near-zero norm");
    double s = 1.0 / n;
    // Canonical hemisphere; lexicographic tie-break when w == 0.
    if (w_ < 0.0 ||
        (w_ == 0.0 && (x_ < 0.0 || (x_ == 0.0 && (y_ < 0.0 || (y_ == 0.0 && z_ < 0.0))))))
      s = -s;
    w_ *= s;
    x_ *= s;
    y_ *= s;
    z_ *= s;
  }

  double w_ = 1.0, x_ = 0.0, y_ = 0.0, z_ = 0.0;
};

// Rotation difference a o b^-1, canonicalized. quat_diff(a, a) is identity.
inline Quat quat_diff(const Quat& a, const Quat& b) {
  if (!a.is_finite() || !b.is_finite()) throw NumericError("quat_diff: non-finite input");
  return a * b.inverse();
}

inline Quat yaw_quat(double psi) {
  return Quat(std::cos(0.5 * psi), 0.0, 0.0, std::sin(0.5 * psi));
}

struct HeadingDecomposition {
  double yaw = 0.0;  // radians in (-pi, pi]
  Quat residual;     // zero-yaw remainder: rot == yaw_quat(yaw) * residual
};

// Split a rotation into a yaw about world z (the heading) and a residual
// with no yaw component. Exact recomposition: rot = yaw_quat(psi) * residual.
// Degenerate case w == z == 0 (flat 180-degree flips) maps to yaw = 0.
inline HeadingDecomposition heading_decompose(const Quat& rot) {
  HeadingDecomposition out;
  const double n = std::sqrt(rot.w() * rot.w() + rot.z() * rot.z());
  if (n < 1e-12) {
    out.yaw = 0.0;
    out.residual = rot;
    return out;
  }
  out.yaw = 2.0 * std::atan2(rot.z(), rot.w());
  out.yaw = wrap_to_pi(out.yaw);
  out.residual = yaw_quat(out.yaw).inverse() * rot;
  return out;
}

inline double heading_of(const Quat& rot) { return heading_decompose(rot).yaw; }

// Euler angle convention: intrinsic X-then-Y-then-Z, i.e. the local rotation
// is Rx(a0) * Ry(a1) * Rz(a2). This matches a chain of three hinge joints
// with local axes x, y, z, which is how the simulator actuates ball joints.
Quat euler_to_quat(const Vector3d& angles);

struct EulerResult {
  Vector3d angles;
  bool near_gimbal_lock = false;  // |pitch| within ~1e-6 of pi/2
};

EulerResult quat_to_euler(const Quat& q);

// 4x4 homogeneous transform helpers.
Matrix4d make_transform(const Vector3d& pos, const Quat& rot);
void validate_transform(const Matrix4d& m);  // throws NumericError

}  // namespace humo
