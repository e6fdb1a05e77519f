#pragma once

#include <string>
#include <vector>

#include "humo/model.hpp"
#include "humo/pose.hpp"

namespace humo {

struct CameraPose {
  Vector3d position = Vector3d::Zero();
  Quat rotation;
};

struct ObjectFrame {
  Vector3d position = Vector3d::Zero();
  Quat rotation;
};

// A 30 Hz motion clip: poses plus optional per-frame object states, camera
// trajectory and scene-context feature vectors.
struct MotionSequence {
  std::string name;
  std::string action = "loco";  // loco | sit | push | step | avoid
  double fps = 30.0;            // fixed at 30
  std::string model_name;

  std::vector<Pose> frames;
  Scene scene;
  std::vector<std::vector<ObjectFrame>> object_frames;  // [object][frame], optional
  std::vector<CameraPose> camera;                       // optional, per frame
  std::vector<VectorXd> phi;                            // optional, per frame
  Vector3d desired_end_pos = Vector3d::Zero();
  bool has_desired_end = false;

  int length() const { return static_cast<int>(frames.size()); }
  bool has_camera() const { return !camera.empty(); }
  bool has_phi() const { return !phi.empty(); }

  // Per-frame state of the primary object (index 0), falling back to the
  // static scene pose; identity/none when the scene is empty.
  ObjectFrame object_at(int frame) const;
  ObjectClass primary_class() const {
    return scene.objects.empty() ? ObjectClass::none : scene.objects[0].cls;
  }
};

std::string motion_to_json_text(const MotionSequence& seq);
MotionSequence motion_from_json_text(const std::string& text);
void save_motion(const MotionSequence& seq, const std::string& path);
MotionSequence load_motion(const std::string& path);

struct Dataset {
  std::vector<MotionSequence> clips;
  int size() const { return static_cast<int>(clips.size()); }
};

// Load every motion file matching the pattern. The pattern's directory part
// is literal; the basename may use '*' and '?' wildcards. Files sort by name.
Dataset load_dataset(const std::string& glob_pattern);

}  // namespace humo
