#include "humo/math.hpp"

namespace humo {

Quat euler_to_quat(const Vector3d& angles) {
  if (!angles.allFinite()) throw NumericError("euler_to_quat: non-finite angles");
  const Quat qx = Quat(std::cos(0.5 * angles[0]), std::sin(0.5 * angles[0]), 0.0, 0.0);
  const Quat qy = Quat(std::cos(0.5 * angles[1]), 0.0, std::sin(0.5 * angles[1]), 0.0);
  const Quat qz = Quat(std::cos(0.5 * angles[2]), 0.0, 0.0, std::sin(0.5 * angles[2]));
  return qx * qy * qz;
}

EulerResult quat_to_euler(const Quat& q) {
  // R = Rx(a) Ry(b) Rz(c); extract from the matrix form.
  //   R(0,2) =  sin b
  //   R(1,2) = -sin a cos b     R(2,2) = cos a cos b
  //   R(0,1) = -sin c cos b     R(0,0) = cos c cos b
  const Matrix3d m = q.to_matrix();
  EulerResult out;
  const double sb = std::max(-1.0, std::min(1.0, m(0, 2)));
  out.angles[1] = std::asin(sb);
  const double cb = std::cos(out.angles[1]);
  if (std::abs(std::abs(sb) - 1.0) < 1e-12 || std::abs(cb) < 1e-9) {
    // Gimbal lock: only a +- c (for b = +pi/2) is observable; put it in a.
    out.near_gimbal_lock = true;
    out.angles[0] = std::atan2(m(2, 1), m(1, 1));
    out.angles[2] = 0.0;
  } else {
    out.angles[0] = std::atan2(-m(1, 2), m(2, 2));
    out.angles[2] = std::atan2(-m(0, 1), m(0, 0));
    if (std::abs(std::abs(sb) - 1.0) < 1e-6) out.near_gimbal_lock = true;
  }
  return out;
}

Matrix4d make_transform(const Vector3d& pos, const Quat& rot) {
  Matrix4d m = Matrix4d::Identity();
  m.block<3, 3>(0, 0) = rot.to_matrix();
  m.block<3, 1>(0, 3) = pos;
  return m;
}

void validate_transform(const Matrix4d& m) {
  if (!m.allFinite()) throw NumericError("transform: non-finite entries");
  const Matrix3d r = m.block<3, 3>(0, 0);
  if ((r.transpose() * r - Matrix3d::Identity()).norm() >= 1e-8)
    throw NumericError("transform: rotation block not orthonormal");
  if (std::abs(r.determinant() - 1.0) >= 1e-8)
    throw NumericError("transform: rotation block not right-handed");
  if ((m.row(3) - Eigen::RowVector4d(0, 0, 0, 1)).norm() != 0.0)
    throw NumericError("transform: last row must be [0,0,0,1]");
}

}  // namespace humo
