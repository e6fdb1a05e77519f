#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "humo/fk.hpp"
#include "humo/model.hpp"

namespace humo {

// (1/T) sum_t || I - M_t Mhat_t^{-1} ||_F over paired 4x4 transforms.
double root_error(const std::vector<Matrix4d>& m_seq, const std::vector<Matrix4d>& m_hat_seq);

struct MpjpeResult {
  double mean_mm = 0.0;
  VectorXd per_joint_mm;  // one entry per joint
};

// Root-relative mean per-joint position error in mm: both skeletons get
// their respective root translation removed first. Inputs are per-frame
// joint positions (excluding the root), plus the root positions.
MpjpeResult mpjpe(const std::vector<std::vector<Vector3d>>& j_pos,
                  const std::vector<std::vector<Vector3d>>& j_pos_hat,
                  const std::vector<Vector3d>& root, const std::vector<Vector3d>& root_hat);

// (1/J) || jdd - jdd_hat ||_2 with forward second differences
// jdd_t = j_{t+2} - 2 j_{t+1} + j_t, averaged over frames; mm / frame^2.
double accel_error(const std::vector<std::vector<Vector3d>>& j_pos,
                   const std::vector<std::vector<Vector3d>>& j_pos_hat);

// Foot sliding: for consecutive frame pairs with both foot heights below
// H = 33 mm, contribution d (2 - 2^(h/H)) with d the horizontal displacement
// and h the pair's maximum height; averaged over all frame pairs. mm.
double foot_sliding(const std::vector<Vector3d>& foot_pos_seq, double height_threshold_mm = 33.0);

// Camera trajectory error: FK head pose composed with the mount offset,
// then the root_error formula against the reference camera transforms.
double camera_error(const HumanoidModel& model, const std::vector<Pose>& q_seq,
                    const std::vector<Matrix4d>& cam_gt, const Vector3d& mount_offset);

// Everything success_check needs from an episode.
struct EpisodeTrace {
  std::string action;  // sit | push | step | avoid | loco
  bool fell = false;
  bool pelvis_chair_contact = false;   // sit: pelvis or both leg roots touched the chair
  bool foot_box_contact = false;       // step: either foot touched the box
  double object_displacement = 0.0;    // push: meters moved over the sequence
  double max_root_raise = 0.0;         // step: root height gain over the start, m
  bool obstacle_contact = false;       // avoid
  Vector3d end_root_pos = Vector3d::Zero();
  Vector3d desired_end_pos = Vector3d::Zero();
  bool has_desired_end = false;
};

// Appendix-style per-action success bit; any fall forces 0.
int success_check(const EpisodeTrace& trace);

// Fail-safe monitor: mean joint position difference above the threshold
// requests a reset to the kinematic pose.
struct FailSafeDecision {
  bool reset = false;
  double mean_error = 0.0;
};
FailSafeDecision fail_safe_check(const std::vector<Vector3d>& sim_joint_pos,
                                 const std::vector<Vector3d>& kin_joint_pos, double threshold);

struct SequenceMetrics {
  std::string name;
  std::string action;
  int success = 0;  // S_inter
  double e_root = 0.0;
  double e_mpjpe_mm = 0.0;
  double e_acc = 0.0;
  double fs_mm = 0.0;
  double pt_mm = 0.0;
  std::optional<double> e_cam;
  int failsafe_resets = 0;
};

struct MetricsReport {
  std::vector<SequenceMetrics> sequences;

  // Aggregates are arithmetic means of the per-sequence values.
  double mean_success() const;
  double mean_root() const;
  double mean_mpjpe() const;
  double mean_acc() const;
  double mean_fs() const;
  double mean_pt() const;
  std::optional<double> mean_cam() const;
  std::map<std::string, double> per_action_success() const;

  std::string to_json() const;
  // Table in the metric column order: S_inter, E_root, E_mpjpe, E_acc, FS, PT.
  std::string to_table() const;
};

}  // namespace humo
