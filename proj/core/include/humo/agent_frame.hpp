#pragma once

#include "humo/pose.hpp"

namespace humo {

// Frame with the agent's heading (yaw) and horizontal position removed.
// Everything expressed here is invariant to a global yaw plus horizontal
// translation applied jointly to the agent and the scene.
struct AgentFrame {
  double yaw = 0.0;
  Vector3d origin = Vector3d::Zero();  // (x, y, 0) of the root
  Quat inv_yaw;

  static AgentFrame from_pose(const Pose& q) {
    AgentFrame f;
    f.yaw = heading_decompose(q.root_rot).yaw;
    f.origin = Vector3d(q.root_pos.x(), q.root_pos.y(), 0.0);
    f.inv_yaw = yaw_quat(f.yaw).inverse();
    return f;
  }

  Vector3d point(const Vector3d& p) const { return inv_yaw.rotate(p - origin); }
  Vector3d vec(const Vector3d& v) const { return inv_yaw.rotate(v); }
  Quat rot(const Quat& q) const { return inv_yaw * q; }
};

}  // namespace humo
