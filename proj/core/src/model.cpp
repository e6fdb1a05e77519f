#include "humo/model.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <Eigen/Geometry>
#include <json.hpp>

#include "humo/fk.hpp"

namespace humo {

using nlohmann::json;

namespace {

void require_keys(const json& j, const std::set<std::string>& allowed, const std::string& ctx) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key()))
      throw ConfigError(ctx + ": unknown key '" + it.key() + "'");
  }
}

Vector3d parse_vec3(const json& j, const std::string& ctx) {
  if (!j.is_array() || j.size() != 3) throw ConfigError(ctx + ": expected an array of 3 numbers");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

Quat parse_quat(const json& j, const std::string& ctx) {
  if (!j.is_array() || j.size() != 4) throw ConfigError(ctx + ": expected [w,x,y,z]");
  return Quat(j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>());
}

Vector3d parse_gain(const json& j, const std::string& ctx) {
  if (j.is_number()) return Vector3d::Constant(j.get<double>());
  return parse_vec3(j, ctx);
}

json vec3_json(const Vector3d& v) { return json::array({v[0], v[1], v[2]}); }

}  // namespace

double capsule_mass(double radius, double half_length, double density) {
  if (!(radius > 0.0) || half_length < 0.0 || !(density > 0.0))
    throw ConfigError("capsule_mass: radius and density must be positive, half_length >= 0");
  const double L = 2.0 * half_length;
  const double volume = kPi * radius * radius * L + (4.0 / 3.0) * kPi * radius * radius * radius;
  return density * volume;
}

Matrix3d capsule_inertia(double radius, double half_length, double mass) {
  const double r = radius, L = 2.0 * half_length;
  const double vc = kPi * r * r * L;
  const double vs = (4.0 / 3.0) * kPi * r * r * r;
  const double mc = mass * vc / (vc + vs);
  const double ms = mass * vs / (vc + vs);
  const double izz = mc * r * r / 2.0 + ms * 2.0 * r * r / 5.0;
  const double ixx = mc * (L * L / 12.0 + r * r / 4.0) +
                     ms * (2.0 * r * r / 5.0 + L * L / 4.0 + 3.0 * L * r / 8.0);
  Matrix3d I = Matrix3d::Zero();
  I(0, 0) = ixx;
  I(1, 1) = ixx;
  I(2, 2) = izz;
  return I;
}

double HumanoidModel::total_mass() const {
  double m = 0.0;
  for (double bm : body_mass) m += bm;
  return m;
}

int HumanoidModel::body_index(const std::string& bname) const {
  for (int i = 0; i < num_bodies(); ++i)
    if (bodies[i].name == bname) return i;
  return -1;
}

VectorXd HumanoidModel::kp_vector() const {
  VectorXd v(num_angles_);
  for (int b = 0; b < num_bodies(); ++b)
    if (angle_offset[b] >= 0) v.segment<3>(angle_offset[b]) = bodies[b].pd_kp;
  return v;
}

VectorXd HumanoidModel::kd_vector() const {
  VectorXd v(num_angles_);
  for (int b = 0; b < num_bodies(); ++b)
    if (angle_offset[b] >= 0) v.segment<3>(angle_offset[b]) = bodies[b].pd_kd;
  return v;
}

VectorXd HumanoidModel::limit_lo_vector() const {
  VectorXd v(num_angles_);
  for (int b = 0; b < num_bodies(); ++b)
    if (angle_offset[b] >= 0) v.segment<3>(angle_offset[b]) = bodies[b].limit_lo;
  return v;
}

VectorXd HumanoidModel::limit_hi_vector() const {
  VectorXd v(num_angles_);
  for (int b = 0; b < num_bodies(); ++b)
    if (angle_offset[b] >= 0) v.segment<3>(angle_offset[b]) = bodies[b].limit_hi;
  return v;
}

std::string to_string(ObjectClass c) {
  switch (c) {
    case ObjectClass::chair: return "chair";
    case ObjectClass::box: return "box";
    case ObjectClass::obstacle: return "obstacle";
    case ObjectClass::none: return "none";
  }
  return "none";
}

ObjectClass object_class_from_string(const std::string& s) {
  if (s == "chair") return ObjectClass::chair;
  if (s == "box") return ObjectClass::box;
  if (s == "obstacle") return ObjectClass::obstacle;
  if (s == "none") return ObjectClass::none;
  throw ConfigError("unknown object class '" + s + "'");
}

namespace {

void finalize_model(HumanoidModel& m) {
  const int nb = m.num_bodies();
  if (nb == 0) throw ConfigError("model: no bodies");
  if (m.bodies[0].parent != -1 || m.bodies[0].joint != JointKind::free_root)
    throw ConfigError("model: body 0 must be the free root (parent -1)");

  std::set<std::string> names;
  m.children.assign(nb, {});
  m.angle_offset.assign(nb, -1);
  m.body_mass.resize(nb);
  m.body_inertia.resize(nb);
  m.body_com.resize(nb);
  int angles = 0;
  for (int b = 0; b < nb; ++b) {
    const BodySpec& spec = m.bodies[b];
    if (!names.insert(spec.name).second)
      throw ConfigError("model: duplicate body name '" + spec.name + "'");
    if (b > 0) {
      if (spec.parent < 0 || spec.joint == JointKind::free_root)
        throw ConfigError("model: multiple roots (body '" + spec.name + "')");
      if (spec.parent >= b)
        throw ConfigError("model: bodies must be topologically ordered; '" + spec.name +
                          "' has parent index " + std::to_string(spec.parent));
      m.children[spec.parent].push_back(b);
    }
    if (!(spec.capsule_radius > 0.0) || spec.capsule_half_length < 0.0 || !(spec.density > 0.0))
      throw ConfigError("model: non-positive geometry/density on body '" + spec.name + "'");
    if (std::abs(spec.capsule_axis.norm() - 1.0) > 1e-6)
      throw ConfigError("model: capsule axis must be unit length on body '" + spec.name + "'");
    if (spec.joint == JointKind::ball_xyz) {
      if (!((spec.pd_kp.array() > 0.0).all()) || !((spec.pd_kd.array() >= 0.0).all()))
        throw ConfigError("model: require kp > 0, kd >= 0 on body '" + spec.name + "'");
      if (!((spec.limit_lo.array() <= spec.limit_hi.array()).all()))
        throw ConfigError("model: joint limits lo > hi on body '" + spec.name + "'");
      m.angle_offset[b] = angles;
      angles += 3;
    }
    m.body_mass[b] = capsule_mass(spec.capsule_radius, spec.capsule_half_length, spec.density);
    m.body_com[b] = spec.capsule_center;
    // Rotate the canonical z-axis capsule inertia into the body frame.
    const Matrix3d Iz =
        capsule_inertia(spec.capsule_radius, spec.capsule_half_length, m.body_mass[b]);
    Vector3d z = Vector3d::UnitZ();
    Vector3d axis = spec.capsule_axis;
    Matrix3d R;
    const double c = z.dot(axis);
    if (c > 1.0 - 1e-12) {
      R = Matrix3d::Identity();
    } else if (c < -1.0 + 1e-12) {
      R = Eigen::AngleAxisd(kPi, Vector3d::UnitX()).toRotationMatrix();
    } else {
      const Vector3d rv = z.cross(axis);
      R = Eigen::AngleAxisd(std::atan2(rv.norm(), c), rv.normalized()).toRotationMatrix();
    }
    m.body_inertia[b] = R * Iz * R.transpose();
  }
  m.num_angles_ = angles;
}

}  // namespace

HumanoidModel load_model(const std::string& config_text) {
  json j;
  try {
    j = json::parse(config_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("model: JSON parse error: ") + e.what());
  }
  require_keys(j, {"format_version", "name", "bodies", "head", "feet", "camera_mount_offset",
                   "collision_pairs"},
               "model");
  if (!j.contains("format_version") || j["format_version"].get<int>() != 1)
    throw ConfigError("model: missing or unsupported format_version (expected 1)");
  HumanoidModel m;
  m.name = j.value("name", "unnamed");
  if (!j.contains("bodies") || !j["bodies"].is_array())
    throw ConfigError("model: 'bodies' array required");
  for (const auto& bj : j["bodies"]) {
    require_keys(bj,
                 {"name", "parent", "joint", "offset", "capsule", "density", "pd_kp", "pd_kd",
                  "limit_lo", "limit_hi"},
                 "model body");
    BodySpec spec;
    spec.name = bj.at("name").get<std::string>();
    spec.parent = bj.at("parent").get<int>();
    const std::string jk = bj.value("joint", "ball");
    if (jk == "free") spec.joint = JointKind::free_root;
    else if (jk == "ball") spec.joint = JointKind::ball_xyz;
    else if (jk == "fixed") spec.joint = JointKind::fixed;
    else throw ConfigError("model: unknown joint kind '" + jk + "'");
    if (bj.contains("offset")) spec.offset = parse_vec3(bj["offset"], "model offset");
    if (bj.contains("capsule")) {
      const auto& cj = bj["capsule"];
      require_keys(cj, {"radius", "half_length", "axis", "center"}, "model capsule");
      spec.capsule_radius = cj.at("radius").get<double>();
      spec.capsule_half_length = cj.value("half_length", 0.0);
      if (cj.contains("axis")) spec.capsule_axis = parse_vec3(cj["axis"], "capsule axis");
      spec.capsule_center = cj.contains("center")
                                ? parse_vec3(cj["center"], "capsule center")
                                : Vector3d(spec.capsule_half_length * spec.capsule_axis);
    }
    spec.density = bj.value("density", 1000.0);
    if (bj.contains("pd_kp")) spec.pd_kp = parse_gain(bj["pd_kp"], "pd_kp");
    if (bj.contains("pd_kd")) spec.pd_kd = parse_gain(bj["pd_kd"], "pd_kd");
    if (bj.contains("limit_lo")) spec.limit_lo = parse_gain(bj["limit_lo"], "limit_lo");
    if (bj.contains("limit_hi")) spec.limit_hi = parse_gain(bj["limit_hi"], "limit_hi");
    m.bodies.push_back(spec);
  }
  finalize_model(m);
  if (j.contains("head")) {
    m.head_body = m.body_index(j["head"].get<std::string>());
    if (m.head_body < 0) throw ConfigError("model: head body not found");
  }
  if (j.contains("feet")) {
    for (const auto& f : j["feet"]) {
      const int idx = m.body_index(f.get<std::string>());
      if (idx < 0) throw ConfigError("model: foot body '" + f.get<std::string>() + "' not found");
      m.foot_bodies.push_back(idx);
    }
  }
  if (j.contains("camera_mount_offset"))
    m.camera_mount_offset = parse_vec3(j["camera_mount_offset"], "camera_mount_offset");
  if (j.contains("collision_pairs")) {
    for (const auto& pj : j["collision_pairs"]) {
      if (!pj.is_array() || pj.size() != 2)
        throw ConfigError("model: collision_pairs entries must be [nameA, nameB]");
      const int a = m.body_index(pj[0].get<std::string>());
      const int b = m.body_index(pj[1].get<std::string>());
      if (a < 0 || b < 0 || a == b) throw ConfigError("model: bad collision pair");
      m.collision_pairs.emplace_back(a, b);
    }
  }
  return m;
}

std::string model_to_json(const HumanoidModel& m) {
  json j;
  j["format_version"] = 1;
  j["name"] = m.name;
  j["camera_mount_offset"] = vec3_json(m.camera_mount_offset);
  if (m.head_body >= 0) j["head"] = m.bodies[m.head_body].name;
  json feet = json::array();
  for (int f : m.foot_bodies) feet.push_back(m.bodies[f].name);
  j["feet"] = feet;
  if (!m.collision_pairs.empty()) {
    json pairs = json::array();
    for (auto [a, b] : m.collision_pairs)
      pairs.push_back(json::array({m.bodies[a].name, m.bodies[b].name}));
    j["collision_pairs"] = pairs;
  }
  j["bodies"] = json::array();
  for (const BodySpec& spec : m.bodies) {
    json bj;
    bj["name"] = spec.name;
    bj["parent"] = spec.parent;
    bj["joint"] = spec.joint == JointKind::free_root ? "free"
                  : spec.joint == JointKind::ball_xyz ? "ball" : "fixed";
    bj["offset"] = vec3_json(spec.offset);
    bj["capsule"] = {{"radius", spec.capsule_radius},
                     {"half_length", spec.capsule_half_length},
                     {"axis", vec3_json(spec.capsule_axis)},
                     {"center", vec3_json(spec.capsule_center)}};
    bj["density"] = spec.density;
    bj["pd_kp"] = vec3_json(spec.pd_kp);
    bj["pd_kd"] = vec3_json(spec.pd_kd);
    bj["limit_lo"] = vec3_json(spec.limit_lo);
    bj["limit_hi"] = vec3_json(spec.limit_hi);
    j["bodies"].push_back(bj);
  }
  return j.dump(2);
}

Scene load_scene(const std::string& config_text) {
  json j;
  try {
    j = json::parse(config_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scene: JSON parse error: ") + e.what());
  }
  require_keys(j, {"format_version", "objects"}, "scene");
  if (!j.contains("format_version") || j["format_version"].get<int>() != 1)
    throw ConfigError("scene: missing or unsupported format_version (expected 1)");
  Scene s;
  for (const auto& oj : j.value("objects", json::array())) {
    require_keys(oj, {"class", "shape", "position", "rotation", "mobility", "mass"},
                 "scene object");
    SceneObject o;
    o.cls = object_class_from_string(oj.at("class").get<std::string>());
    const auto& sj = oj.at("shape");
    require_keys(sj, {"type", "extents", "radius", "half_length"}, "scene shape");
    const std::string type = sj.at("type").get<std::string>();
    if (type == "box") {
      o.is_capsule = false;
      o.box_extents = parse_vec3(sj.at("extents"), "scene extents");
      if (!((o.box_extents.array() > 0.0).all()))
        throw ConfigError("scene: box extents must be positive");
    } else if (type == "capsule") {
      o.is_capsule = true;
      o.capsule_radius = sj.at("radius").get<double>();
      o.capsule_half_length = sj.value("half_length", 0.0);
      if (!(o.capsule_radius > 0.0)) throw ConfigError("scene: capsule radius must be positive");
    } else {
      throw ConfigError("scene: unknown shape type '" + type + "'");
    }
    if (oj.contains("position")) o.position = parse_vec3(oj["position"], "scene position");
    if (oj.contains("rotation")) o.rotation = parse_quat(oj["rotation"], "scene rotation");
    const std::string mob = oj.value("mobility", "fixed");
    if (mob == "fixed") o.mobility = ObjectMobility::fixed;
    else if (mob == "free") o.mobility = ObjectMobility::free;
    else throw ConfigError("scene: unknown mobility '" + mob + "'");
    o.mass = oj.value("mass", 1.0);
    if (o.mobility == ObjectMobility::free && !(o.mass > 0.0))
      throw ConfigError("scene: free objects need positive mass");
    s.objects.push_back(o);
  }
  return s;
}

std::string scene_to_json(const Scene& s) {
  json j;
  j["format_version"] = 1;
  j["objects"] = json::array();
  for (const SceneObject& o : s.objects) {
    json oj;
    oj["class"] = to_string(o.cls);
    if (o.is_capsule)
      oj["shape"] = {{"type", "capsule"}, {"radius", o.capsule_radius},
                     {"half_length", o.capsule_half_length}};
    else
      oj["shape"] = {{"type", "box"}, {"extents", vec3_json(o.box_extents)}};
    oj["position"] = vec3_json(o.position);
    oj["rotation"] = json::array({o.rotation.w(), o.rotation.x(), o.rotation.y(), o.rotation.z()});
    oj["mobility"] = o.mobility == ObjectMobility::free ? "free" : "fixed";
    oj["mass"] = o.mass;
    j["objects"].push_back(oj);
  }
  return j.dump(2);
}

PoseValidation validate_pose_against_model(const HumanoidModel& model, const Pose& pose) {
  if (pose.joint_angles.size() != model.num_angles())
    throw ShapeError("pose has " + std::to_string(pose.joint_angles.size()) +
                     " joint angles, model expects " + std::to_string(model.num_angles()));
  if (!pose.is_finite()) throw NumericError("pose has non-finite values");
  PoseValidation v;
  for (int b = 0; b < model.num_bodies(); ++b) {
    const int off = model.angle_offset[b];
    if (off < 0) continue;
    const Vector3d a = pose.joint_angles.segment<3>(off);
    const BodySpec& spec = model.bodies[b];
    for (int k = 0; k < 3; ++k) {
      if (a[k] < spec.limit_lo[k] - 1e-12 || a[k] > spec.limit_hi[k] + 1e-12) {
        v.ok = false;
        v.limit_violations.push_back(spec.name + "[" + std::to_string(k) + "]");
      }
    }
  }
  return v;
}

Pose adjust_starting_height(const HumanoidModel& model, const Pose& pose, double clearance) {
  const FkResult fk = forward_kinematics(model, pose);
  double lowest = std::numeric_limits<double>::infinity();
  for (int b = 0; b < model.num_bodies(); ++b) {
    Vector3d p0, p1;
    capsule_world_segment(model, fk, b, &p0, &p1);
    lowest = std::min(lowest, std::min(p0.z(), p1.z()) - model.bodies[b].capsule_radius);
  }
  Pose out = pose;
  out.root_pos.z() += clearance - lowest;
  return out;
}

std::string resolve_model_text(const std::string& path_or_builtin) {
  constexpr const char* prefix = "builtin:";
  if (path_or_builtin.rfind(prefix, 0) == 0)
    return builtin_model_json(path_or_builtin.substr(std::string(prefix).size()));
  if (is_builtin_model(path_or_builtin)) return builtin_model_json(path_or_builtin);
  std::ifstream f(path_or_builtin);
  if (!f) throw IoError("cannot open model file '" + path_or_builtin + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace humo
