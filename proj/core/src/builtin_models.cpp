#include <json.hpp>

#include "humo/model.hpp"

// Bundled model configs. "default25" is a mean-shape capsule humanoid with
// 25 bodies: a free root, 23 ball joints (69 actuated angles, 76-dim pose)
// and one welded camera-mount bone on the head. "chain5" is the small test
// model used throughout the test suite: a free root link plus 4 ball-jointed
// links lying along +x.
//
// World convention: z up, x forward, y left. Gains and joint limits are
// hand-tuned defaults, not values from any dataset.

namespace humo {

using nlohmann::json;

namespace {

json body(const std::string& name, int parent, const std::string& joint,
          std::initializer_list<double> offset, double radius, double half_length,
          std::initializer_list<double> axis, std::initializer_list<double> center,
          double kp, double kd, double lo = -2.7, double hi = 2.7) {
  json b;
  b["name"] = name;
  b["parent"] = parent;
  b["joint"] = joint;
  b["offset"] = offset;
  b["capsule"] = {{"radius", radius}, {"half_length", half_length},
                  {"axis", axis}, {"center", center}};
  b["density"] = 1000.0;
  b["pd_kp"] = kp;
  b["pd_kd"] = kd;
  b["limit_lo"] = lo;
  b["limit_hi"] = hi;
  return b;
}

json default25_json() {
  json j;
  j["format_version"] = 1;
  j["name"] = "default25";
  j["head"] = "head";
  j["feet"] = {"l_toe", "r_toe"};
  j["camera_mount_offset"] = {0.07, 0.0, 0.06};
  json bodies = json::array();
  // torso column
  bodies.push_back(body("pelvis", -1, "free", {0, 0, 0}, 0.095, 0.06, {0, 1, 0}, {0, 0, 0.02}, 0, 0));
  bodies.push_back(body("l_hip", 0, "ball", {0, 0.082, -0.03}, 0.060, 0.16, {0, 0, 1}, {0, 0, -0.20}, 500, 50));
  bodies.push_back(body("r_hip", 0, "ball", {0, -0.082, -0.03}, 0.060, 0.16, {0, 0, 1}, {0, 0, -0.20}, 500, 50));
  bodies.push_back(body("spine1", 0, "ball", {0, 0, 0.105}, 0.080, 0.045, {0, 0, 1}, {0, 0, 0.05}, 500, 50));
  bodies.push_back(body("l_knee", 1, "ball", {0, 0, -0.40}, 0.045, 0.16, {0, 0, 1}, {0, 0, -0.19}, 500, 50));
  bodies.push_back(body("r_knee", 2, "ball", {0, 0, -0.40}, 0.045, 0.16, {0, 0, 1}, {0, 0, -0.19}, 500, 50));
  bodies.push_back(body("spine2", 3, "ball", {0, 0, 0.12}, 0.085, 0.05, {0, 0, 1}, {0, 0, 0.055}, 500, 50));
  bodies.push_back(body("l_ankle", 4, "ball", {0, 0, -0.41}, 0.035, 0.06, {1, 0, 0}, {0.06, 0, -0.03}, 400, 40));
  bodies.push_back(body("r_ankle", 5, "ball", {0, 0, -0.41}, 0.035, 0.06, {1, 0, 0}, {0.06, 0, -0.03}, 400, 40));
  bodies.push_back(body("spine3", 6, "ball", {0, 0, 0.13}, 0.090, 0.055, {0, 0, 1}, {0, 0, 0.06}, 500, 50));
  bodies.push_back(body("l_toe", 7, "ball", {0.13, 0, -0.05}, 0.030, 0.025, {1, 0, 0}, {0.02, 0, 0.005}, 100, 10));
  bodies.push_back(body("r_toe", 8, "ball", {0.13, 0, -0.05}, 0.030, 0.025, {1, 0, 0}, {0.02, 0, 0.005}, 100, 10));
  bodies.push_back(body("neck", 9, "ball", {0, 0, 0.135}, 0.040, 0.035, {0, 0, 1}, {0, 0, 0.04}, 250, 25));
  bodies.push_back(body("l_collar", 9, "ball", {0, 0.025, 0.11}, 0.050, 0.035, {0, 1, 0}, {0, 0.04, 0}, 250, 25));
  bodies.push_back(body("r_collar", 9, "ball", {0, -0.025, 0.11}, 0.050, 0.035, {0, 1, 0}, {0, -0.04, 0}, 250, 25));
  bodies.push_back(body("head", 12, "ball", {0, 0, 0.09}, 0.085, 0.06, {0, 0, 1}, {0, 0, 0.08}, 250, 25));
  bodies.push_back(body("l_shoulder", 13, "ball", {0, 0.085, 0.005}, 0.040, 0.11, {0, 1, 0}, {0, 0.13, 0}, 250, 25));
  bodies.push_back(body("r_shoulder", 14, "ball", {0, -0.085, 0.005}, 0.040, 0.11, {0, 1, 0}, {0, -0.13, 0}, 250, 25));
  bodies.push_back(body("l_elbow", 16, "ball", {0, 0.26, 0}, 0.035, 0.10, {0, 1, 0}, {0, 0.12, 0}, 150, 15));
  bodies.push_back(body("r_elbow", 17, "ball", {0, -0.26, 0}, 0.035, 0.10, {0, 1, 0}, {0, -0.12, 0}, 150, 15));
  bodies.push_back(body("l_wrist", 18, "ball", {0, 0.25, 0}, 0.030, 0.035, {0, 1, 0}, {0, 0.04, 0}, 100, 10));
  bodies.push_back(body("r_wrist", 19, "ball", {0, -0.25, 0}, 0.030, 0.035, {0, 1, 0}, {0, -0.04, 0}, 100, 10));
  bodies.push_back(body("l_hand", 20, "ball", {0, 0.08, 0}, 0.025, 0.025, {0, 1, 0}, {0, 0.03, 0}, 50, 5));
  bodies.push_back(body("r_hand", 21, "ball", {0, -0.08, 0}, 0.025, 0.025, {0, 1, 0}, {0, -0.03, 0}, 50, 5));
  bodies.push_back(body("head_cam", 15, "fixed", {0.07, 0, 0.06}, 0.020, 0.01, {1, 0, 0}, {0.01, 0, 0}, 0, 0));
  j["bodies"] = bodies;
  return j;
}

json chain5_json() {
  json j;
  j["format_version"] = 1;
  j["name"] = "chain5";
  j["head"] = "link4";
  j["feet"] = json::array();
  j["camera_mount_offset"] = {0.0, 0.0, 0.05};
  json bodies = json::array();
  bodies.push_back(body("link0", -1, "free", {0, 0, 0}, 0.05, 0.1, {1, 0, 0}, {0.1, 0, 0}, 0, 0));
  for (int i = 1; i < 5; ++i) {
    bodies.push_back(body("link" + std::to_string(i), i - 1, "ball", {0.2, 0, 0}, 0.05, 0.1,
                          {1, 0, 0}, {0.1, 0, 0}, 30, 3));
  }
  j["bodies"] = bodies;
  return j;
}

}  // namespace

bool is_builtin_model(const std::string& name) {
  return name == "default25" || name == "chain5";
}

std::string builtin_model_json(const std::string& name) {
  if (name == "default25") return default25_json().dump(2);
  if (name == "chain5") return chain5_json().dump(2);
  throw ConfigError("unknown builtin model '" + name + "'");
}

}  // namespace humo
