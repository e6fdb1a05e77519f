#pragma once

// Contact detection for the penalty model: humanoid capsules vs the ground
// plane, scene boxes and scene capsules; free boxes vs the ground; opt-in
// humanoid capsule pairs. Forces are computed by the caller.

#include <vector>

#include "humo/sim.hpp"
#include "sim_dynamics.hpp"

namespace humo::detail {

// World capsule segment of a humanoid body from the kinematics cache.
void body_capsule_segment(const HumanoidModel& m, const KinCache& kc, int body,
                          Vector3d* p0, Vector3d* p1);

// Closest point on segment [a, b] to point p.
Vector3d closest_on_segment(const Vector3d& a, const Vector3d& b, const Vector3d& p);

// Closest points between two segments.
void closest_segment_segment(const Vector3d& p1, const Vector3d& q1, const Vector3d& p2,
                             const Vector3d& q2, Vector3d* c1, Vector3d* c2);

// Geometric contact set at the given kinematic state. Normals point into the
// humanoid body (or +z for object-ground contacts); depth >= 0.
std::vector<ContactPoint> detect_contacts(const HumanoidModel& m, const KinCache& kc,
                                          const Scene& scene,
                                          const std::vector<ObjectState>& objects);

}  // namespace humo::detail
