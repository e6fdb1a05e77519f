#include "sim_contacts.hpp"

#include <algorithm>
#include <limits>

namespace humo::detail {

void body_capsule_segment(const HumanoidModel& m, const KinCache& kc, int body,
                          Vector3d* p0, Vector3d* p1) {
  const BodySpec& spec = m.bodies[body];
  const Vector3d a = spec.capsule_center - spec.capsule_half_length * spec.capsule_axis;
  const Vector3d b = spec.capsule_center + spec.capsule_half_length * spec.capsule_axis;
  *p0 = kc.o[body] + kc.R[body] * a;
  *p1 = kc.o[body] + kc.R[body] * b;
}

Vector3d closest_on_segment(const Vector3d& a, const Vector3d& b, const Vector3d& p) {
  const Vector3d d = b - a;
  const double len2 = d.squaredNorm();
  if (len2 < 1e-18) return a;
  const double t = std::clamp((p - a).dot(d) / len2, 0.0, 1.0);
  return a + t * d;
}

void closest_segment_segment(const Vector3d& p1, const Vector3d& q1, const Vector3d& p2,
                             const Vector3d& q2, Vector3d* c1, Vector3d* c2) {
  // Ericson, Real-Time Collision Detection, 5.1.9.
  const Vector3d d1 = q1 - p1, d2 = q2 - p2, r = p1 - p2;
  const double a = d1.squaredNorm(), e = d2.squaredNorm(), f = d2.dot(r);
  double s = 0.0, t = 0.0;
  if (a < 1e-18 && e < 1e-18) {
    *c1 = p1;
    *c2 = p2;
    return;
  }
  if (a < 1e-18) {
    t = std::clamp(f / e, 0.0, 1.0);
  } else {
    const double c = d1.dot(r);
    if (e < 1e-18) {
      s = std::clamp(-c / a, 0.0, 1.0);
    } else {
      const double b = d1.dot(d2);
      const double denom = a * e - b * b;
      if (denom > 1e-18) s = std::clamp((b * f - c * e) / denom, 0.0, 1.0);
      t = (b * s + f) / e;
      if (t < 0.0) {
        t = 0.0;
        s = std::clamp(-c / a, 0.0, 1.0);
      } else if (t > 1.0) {
        t = 1.0;
        s = std::clamp((b - c) / a, 0.0, 1.0);
      }
    }
  }
  *c1 = p1 + s * d1;
  *c2 = p2 + t * d2;
}

namespace {

// Sphere (center, r) vs oriented box. Returns true on contact; fills the
// surface point on the box, the unit normal (box -> sphere) and the depth.
bool sphere_box(const Vector3d& center, double r, const ObjectState& pose,
                const Vector3d& extents, Vector3d* point, Vector3d* normal, double* depth) {
  const Matrix3d R = pose.rotation.to_matrix();
  const Vector3d half = 0.5 * extents;
  const Vector3d local = R.transpose() * (center - pose.position);
  const Vector3d clamped = local.cwiseMax(-half).cwiseMin(half);
  const Vector3d diff = local - clamped;
  const double dist = diff.norm();
  if (dist > 1e-12) {
    if (dist >= r) return false;
    *depth = r - dist;
    const Vector3d n_local = diff / dist;
    *normal = R * n_local;
    *point = pose.position + R * clamped;
    return true;
  }
  // Center inside the box: exit through the nearest face.
  int best_axis = 0;
  double best_pen = std::numeric_limits<double>::infinity();
  double best_sign = 1.0;
  for (int k = 0; k < 3; ++k) {
    const double pen_pos = half[k] - local[k];
    const double pen_neg = local[k] + half[k];
    if (pen_pos < best_pen) {
      best_pen = pen_pos;
      best_axis = k;
      best_sign = 1.0;
    }
    if (pen_neg < best_pen) {
      best_pen = pen_neg;
      best_axis = k;
      best_sign = -1.0;
    }
  }
  Vector3d n_local = Vector3d::Zero();
  n_local[best_axis] = best_sign;
  *depth = r + best_pen;
  *normal = R * n_local;
  Vector3d surf = local;
  surf[best_axis] = best_sign * half[best_axis];
  *point = pose.position + R * surf;
  return true;
}

// Closest point on a capsule segment to an oriented box via alternating
// projection (both sets convex, so this converges quickly).
Vector3d segment_point_near_box(const Vector3d& p0, const Vector3d& p1, const ObjectState& pose,
                                const Vector3d& extents) {
  const Matrix3d R = pose.rotation.to_matrix();
  const Vector3d half = 0.5 * extents;
  Vector3d s = closest_on_segment(p0, p1, pose.position);
  for (int it = 0; it < 8; ++it) {
    const Vector3d local = (R.transpose() * (s - pose.position)).cwiseMax(-half).cwiseMin(half);
    const Vector3d on_box = pose.position + R * local;
    s = closest_on_segment(p0, p1, on_box);
  }
  return s;
}

void capsule_vs_plane(int body, const Vector3d& p0, const Vector3d& p1, double r,
                      std::vector<ContactPoint>* out) {
  for (const Vector3d& e : {p0, p1}) {
    const double depth = r - e.z();
    if (depth > 0.0) {
      ContactPoint c;
      c.body = body;
      c.object = -1;
      c.point = {e.x(), e.y(), e.z() - r};
      c.normal = Vector3d::UnitZ();
      c.depth = depth;
      out->push_back(c);
    }
  }
}

}  // namespace

std::vector<ContactPoint> detect_contacts(const HumanoidModel& m, const KinCache& kc,
                                          const Scene& scene,
                                          const std::vector<ObjectState>& objects) {
  std::vector<ContactPoint> out;
  const int nb = m.num_bodies();
  std::vector<Vector3d> seg0(nb), seg1(nb);
  for (int b = 0; b < nb; ++b) body_capsule_segment(m, kc, b, &seg0[b], &seg1[b]);

  for (int b = 0; b < nb; ++b) {
    const double r = m.bodies[b].capsule_radius;
    capsule_vs_plane(b, seg0[b], seg1[b], r, &out);

    for (std::size_t oi = 0; oi < scene.objects.size(); ++oi) {
      const SceneObject& so = scene.objects[oi];
      const ObjectState& os = objects[oi];
      if (!so.is_capsule) {
        const Vector3d s = segment_point_near_box(seg0[b], seg1[b], os, so.box_extents);
        Vector3d point, normal;
        double depth;
        if (sphere_box(s, r, os, so.box_extents, &point, &normal, &depth)) {
          ContactPoint c;
          c.body = b;
          c.object = static_cast<int>(oi);
          c.point = point;
          c.normal = normal;
          c.depth = depth;
          out.push_back(c);
        }
      } else {
        const Vector3d axis = os.rotation.rotate(Vector3d::UnitZ());
        const Vector3d o0 = os.position - so.capsule_half_length * axis;
        const Vector3d o1 = os.position + so.capsule_half_length * axis;
        Vector3d cb, co;
        closest_segment_segment(seg0[b], seg1[b], o0, o1, &cb, &co);
        const Vector3d diff = cb - co;
        const double dist = diff.norm();
        const double rsum = r + so.capsule_radius;
        if (dist < rsum && dist > 1e-12) {
          ContactPoint c;
          c.body = b;
          c.object = static_cast<int>(oi);
          c.normal = diff / dist;
          c.depth = rsum - dist;
          c.point = co + so.capsule_radius * c.normal;
          out.push_back(c);
        }
      }
    }
  }

  // Opt-in humanoid self-collision pairs.
  for (auto [a, b] : m.collision_pairs) {
    Vector3d ca, cb;
    closest_segment_segment(seg0[a], seg1[a], seg0[b], seg1[b], &ca, &cb);
    const Vector3d diff = ca - cb;
    const double dist = diff.norm();
    const double rsum = m.bodies[a].capsule_radius + m.bodies[b].capsule_radius;
    if (dist < rsum && dist > 1e-12) {
      ContactPoint c;
      c.body = a;
      c.object = -2 - b;  // encodes "other humanoid body" for force handling
      c.normal = diff / dist;
      c.depth = rsum - dist;
      c.point = cb + m.bodies[b].capsule_radius * c.normal;
      out.push_back(c);
    }
  }

  // Free boxes vs the ground plane (corner points).
  for (std::size_t oi = 0; oi < scene.objects.size(); ++oi) {
    const SceneObject& so = scene.objects[oi];
    if (so.mobility != ObjectMobility::free || so.is_capsule) continue;
    const ObjectState& os = objects[oi];
    const Matrix3d R = os.rotation.to_matrix();
    const Vector3d half = 0.5 * so.box_extents;
    for (int corner = 0; corner < 8; ++corner) {
      const Vector3d local((corner & 1) ? half.x() : -half.x(),
                           (corner & 2) ? half.y() : -half.y(),
                           (corner & 4) ? half.z() : -half.z());
      const Vector3d w = os.position + R * local;
      if (w.z() < 0.0) {
        ContactPoint c;
        c.body = -1;
        c.object = static_cast<int>(oi);
        c.point = w;
        c.normal = Vector3d::UnitZ();
        c.depth = -w.z();
        out.push_back(c);
      }
    }
  }
  return out;
}

}  // namespace humo::detail
