#include "humo/motion.hpp"

#include <algorithm>
#include <filesystem>
#include <fnmatch.h>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace humo {

using nlohmann::json;

namespace {

json pose_json(const Pose& p) {
  json a = json::array();
  const VectorXd q = p.flat();
  for (Eigen::Index i = 0; i < q.size(); ++i) a.push_back(q[i]);
  return a;
}

Pose pose_from_json(const json& a) {
  if (!a.is_array() || a.size() < 7) throw ConfigError("motion: bad frame entry");
  VectorXd q(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) q[static_cast<Eigen::Index>(i)] = a[i].get<double>();
  return Pose::from_flat(q);
}

json posquat_json(const Vector3d& p, const Quat& r) {
  return json::array({p.x(), p.y(), p.z(), r.w(), r.x(), r.y(), r.z()});
}

void posquat_from_json(const json& a, Vector3d* p, Quat* r) {
  if (!a.is_array() || a.size() != 7) throw ConfigError("motion: bad pose entry");
  *p = Vector3d(a[0].get<double>(), a[1].get<double>(), a[2].get<double>());
  *r = Quat(a[3].get<double>(), a[4].get<double>(), a[5].get<double>(), a[6].get<double>());
}

void require_keys(const json& j, const std::vector<std::string>& allowed,
                  const std::string& ctx) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
      throw ConfigError(ctx + ": unknown key '" + it.key() + "'");
}

}  // namespace

ObjectFrame MotionSequence::object_at(int frame) const {
  ObjectFrame f;
  if (!object_frames.empty() && !object_frames[0].empty()) {
    return object_frames[0][std::min<std::size_t>(frame, object_frames[0].size() - 1)];
  }
  if (!scene.objects.empty()) {
    f.position = scene.objects[0].position;
    f.rotation = scene.objects[0].rotation;
  }
  return f;
}

std::string motion_to_json_text(const MotionSequence& seq) {
  json j;
  j["format_version"] = 1;
  j["name"] = seq.name;
  j["action"] = seq.action;
  j["fps"] = seq.fps;
  j["model"] = seq.model_name;
  json frames = json::array();
  for (const Pose& p : seq.frames) frames.push_back(pose_json(p));
  j["frames"] = frames;
  if (!seq.scene.objects.empty()) j["scene"] = json::parse(scene_to_json(seq.scene));
  if (!seq.object_frames.empty()) {
    json of = json::array();
    for (const auto& obj : seq.object_frames) {
      json per = json::array();
      for (const ObjectFrame& f : obj) per.push_back(posquat_json(f.position, f.rotation));
      of.push_back(per);
    }
    j["object_frames"] = of;
  }
  if (seq.has_camera()) {
    json cam = json::array();
    for (const CameraPose& c : seq.camera) cam.push_back(posquat_json(c.position, c.rotation));
    j["camera"] = cam;
  }
  if (seq.has_phi()) {
    json ph = json::array();
    for (const VectorXd& v : seq.phi) {
      json row = json::array();
      for (Eigen::Index i = 0; i < v.size(); ++i) row.push_back(v[i]);
      ph.push_back(row);
    }
    j["phi"] = ph;
  }
  if (seq.has_desired_end)
    j["desired_end_position"] =
        json::array({seq.desired_end_pos.x(), seq.desired_end_pos.y(), seq.desired_end_pos.z()});
  return j.dump();
}

MotionSequence motion_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("motion: JSON parse error: ") + e.what());
  }
  require_keys(j,
               {"format_version", "name", "action", "fps", "model", "frames", "scene",
                "object_frames", "camera", "phi", "desired_end_position"},
               "motion");
  if (!j.contains("format_version") || j["format_version"].get<int>() != 1)
    throw ConfigError("motion: missing or unsupported format_version (expected 1)");
  MotionSequence seq;
  seq.name = j.value("name", "");
  seq.action = j.value("action", "loco");
  seq.fps = j.value("fps", 30.0);
  if (seq.fps != 30.0) throw ConfigError("motion: fps must be 30");
  seq.model_name = j.value("model", "");
  for (const auto& fj : j.at("frames")) seq.frames.push_back(pose_from_json(fj));
  if (seq.frames.empty()) throw ConfigError("motion: no frames");
  const std::size_t T = seq.frames.size();
  for (const Pose& p : seq.frames)
    if (p.joint_angles.size() != seq.frames[0].joint_angles.size())
      throw ConfigError("motion: inconsistent frame widths");
  if (j.contains("scene")) seq.scene = load_scene(j["scene"].dump());
  if (j.contains("object_frames")) {
    for (const auto& oj : j["object_frames"]) {
      std::vector<ObjectFrame> per;
      for (const auto& fj : oj) {
        ObjectFrame f;
        posquat_from_json(fj, &f.position, &f.rotation);
        per.push_back(f);
      }
      if (per.size() != T) throw ConfigError("motion: object_frames length mismatch");
      seq.object_frames.push_back(std::move(per));
    }
    if (seq.object_frames.size() != seq.scene.objects.size())
      throw ConfigError("motion: object_frames count must match scene objects");
  }
  if (j.contains("camera")) {
    for (const auto& cj : j["camera"]) {
      CameraPose c;
      posquat_from_json(cj, &c.position, &c.rotation);
      seq.camera.push_back(c);
    }
    if (seq.camera.size() != T) throw ConfigError("motion: camera length mismatch");
  }
  if (j.contains("phi")) {
    for (const auto& pj : j["phi"]) {
      VectorXd v(pj.size());
      for (std::size_t i = 0; i < pj.size(); ++i)
        v[static_cast<Eigen::Index>(i)] = pj[i].get<double>();
      seq.phi.push_back(v);
    }
    if (seq.phi.size() != T) throw ConfigError("motion: phi length mismatch");
    for (const VectorXd& v : seq.phi)
      if (v.size() != seq.phi[0].size()) throw ConfigError("motion: inconsistent phi widths");
  }
  if (j.contains("desired_end_position")) {
    const auto& dj = j["desired_end_position"];
    seq.desired_end_pos = Vector3d(dj[0].get<double>(), dj[1].get<double>(), dj[2].get<double>());
    seq.has_desired_end = true;
  }
  return seq;
}

void save_motion(const MotionSequence& seq, const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("motion: cannot open '" + path + "' for writing");
  os << motion_to_json_text(seq);
  if (!os) throw IoError("motion: write failure on '" + path + "'");
}

MotionSequence load_motion(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("motion: cannot open '" + path + "'");
  std::ostringstream ss;
  ss << is.rdbuf();
  return motion_from_json_text(ss.str());
}

Dataset load_dataset(const std::string& glob_pattern) {
  namespace fs = std::filesystem;
  const fs::path pattern(glob_pattern);
  fs::path dir = pattern.parent_path();
  if (dir.empty()) dir = ".";
  const std::string base = pattern.filename().string();
  if (!fs::is_directory(dir)) throw IoError("dataset: directory '" + dir.string() + "' not found");
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (fnmatch(base.c_str(), name.c_str(), 0) == 0) files.push_back(entry.path().string());
  }
  std::sort(files.begin(), files.end());
  Dataset ds;
  for (const std::string& f : files) ds.clips.push_back(load_motion(f));
  if (ds.clips.empty()) throw IoError("dataset: no files match '" + glob_pattern + "'");
  return ds;
}

}  // namespace humo
