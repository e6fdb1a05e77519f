#include "humo/metrics.hpp"

#include <cmath>
#include <sstream>

#include <json.hpp>

namespace humo {

namespace {

Matrix4d rigid_inverse(const Matrix4d& m) {
  Matrix4d inv = Matrix4d::Identity();
  const Matrix3d rt = m.block<3, 3>(0, 0).transpose();
  inv.block<3, 3>(0, 0) = rt;
  inv.block<3, 1>(0, 3) = -rt * m.block<3, 1>(0, 3);
  return inv;
}

}  // namespace

double root_error(const std::vector<Matrix4d>& m_seq, const std::vector<Matrix4d>& m_hat_seq) {
  if (m_seq.size() != m_hat_seq.size()) throw ShapeError("root_error: length mismatch");
  if (m_seq.empty()) throw ShapeError("root_error: empty sequences");
  double sum = 0.0;
  for (std::size_t t = 0; t < m_seq.size(); ++t) {
    const Matrix4d d = Matrix4d::Identity() - m_seq[t] * rigid_inverse(m_hat_seq[t]);
    sum += d.norm();  // Frobenius
  }
  return sum / static_cast<double>(m_seq.size());
}

MpjpeResult mpjpe(const std::vector<std::vector<Vector3d>>& j_pos,
                  const std::vector<std::vector<Vector3d>>& j_pos_hat,
                  const std::vector<Vector3d>& root, const std::vector<Vector3d>& root_hat) {
  if (j_pos.size() != j_pos_hat.size() || j_pos.size() != root.size() ||
      j_pos.size() != root_hat.size())
    throw ShapeError("mpjpe: sequence length mismatch");
  if (j_pos.empty()) throw ShapeError("mpjpe: empty sequences");
  const std::size_t J = j_pos[0].size();
  MpjpeResult out;
  out.per_joint_mm = VectorXd::Zero(static_cast<Eigen::Index>(J));
  for (std::size_t t = 0; t < j_pos.size(); ++t) {
    if (j_pos[t].size() != J || j_pos_hat[t].size() != J)
      throw ShapeError("mpjpe: joint count mismatch");
    for (std::size_t j = 0; j < J; ++j) {
      const Vector3d a = j_pos[t][j] - root[t];
      const Vector3d b = j_pos_hat[t][j] - root_hat[t];
      out.per_joint_mm[static_cast<Eigen::Index>(j)] += 1000.0 * (a - b).norm();
    }
  }
  out.per_joint_mm /= static_cast<double>(j_pos.size());
  out.mean_mm = out.per_joint_mm.mean();
  return out;
}

double accel_error(const std::vector<std::vector<Vector3d>>& j_pos,
                   const std::vector<std::vector<Vector3d>>& j_pos_hat) {
  if (j_pos.size() != j_pos_hat.size()) throw ShapeError("accel_error: length mismatch");
  if (j_pos.size() < 3) throw ShapeError("accel_error: need at least 3 frames");
  const std::size_t J = j_pos[0].size();
  const std::size_t T = j_pos.size();
  double sum = 0.0;
  for (std::size_t t = 0; t + 2 < T; ++t) {
    double frame_sum = 0.0;
    for (std::size_t j = 0; j < J; ++j) {
      const Vector3d acc = j_pos[t + 2][j] - 2.0 * j_pos[t + 1][j] + j_pos[t][j];
      const Vector3d acc_hat = j_pos_hat[t + 2][j] - 2.0 * j_pos_hat[t + 1][j] + j_pos_hat[t][j];
      frame_sum += 1000.0 * (acc - acc_hat).norm();
    }
    sum += frame_sum / static_cast<double>(J);
  }
  return sum / static_cast<double>(T - 2);
}

double foot_sliding(const std::vector<Vector3d>& foot_pos_seq, double height_threshold_mm) {
  if (foot_pos_seq.size() < 2) return 0.0;
  const double H = height_threshold_mm;  // mm
  double sum = 0.0;
  const std::size_t pairs = foot_pos_seq.size() - 1;
  for (std::size_t t = 0; t < pairs; ++t) {
    const double h0 = 1000.0 * foot_pos_seq[t].z();
    const double h1 = 1000.0 * foot_pos_seq[t + 1].z();
    if (h0 >= H || h1 >= H) continue;  // pair counts only when both are near ground
    const double h = std::max(std::max(h0, h1), 0.0);
    const Vector3d d3 = foot_pos_seq[t + 1] - foot_pos_seq[t];
    const double d = 1000.0 * std::hypot(d3.x(), d3.y());
    sum += d * (2.0 - std::pow(2.0, h / H));
  }
  return sum / static_cast<double>(pairs);
}

double camera_error(const HumanoidModel& model, const std::vector<Pose>& q_seq,
                    const std::vector<Matrix4d>& cam_gt, const Vector3d& mount_offset) {
  if (model.head_body < 0) throw ConfigError("camera_error: model has no head body");
  if (q_seq.size() != cam_gt.size()) throw ShapeError("camera_error: length mismatch");
  std::vector<Matrix4d> cam;
  cam.reserve(q_seq.size());
  for (const Pose& q : q_seq) {
    const FkResult fk = forward_kinematics(model, q);
    const Quat rot = fk.world_rot[model.head_body];
    const Vector3d pos = fk.world_pos[model.head_body] + rot.rotate(mount_offset);
    cam.push_back(make_transform(pos, rot));
  }
  return root_error(cam, cam_gt);
}

int success_check(const EpisodeTrace& trace) {
  if (trace.fell) return 0;
  if (trace.action == "sit") return trace.pelvis_chair_contact ? 1 : 0;
  if (trace.action == "push") return trace.object_displacement > 0.10 ? 1 : 0;
  if (trace.action == "step")
    return (trace.max_root_raise >= 0.10 && trace.foot_box_contact) ? 1 : 0;
  if (trace.action == "avoid") {
    if (!trace.has_desired_end)
      throw Error("success_check: avoid requires a desired end position");
    const bool near = (trace.end_root_pos - trace.desired_end_pos).head<2>().norm() < 0.50;
    return (!trace.obstacle_contact && near) ? 1 : 0;
  }
  if (trace.action == "loco" || trace.action == "sway") return 1;  // no-fall rule only
  throw Error("success_check: unknown action '" + trace.action + "'");
}

FailSafeDecision fail_safe_check(const std::vector<Vector3d>& sim_joint_pos,
                                 const std::vector<Vector3d>& kin_joint_pos, double threshold) {
  if (sim_joint_pos.size() != kin_joint_pos.size() || sim_joint_pos.empty())
    throw ShapeError("fail_safe_check: joint set mismatch");
  double err = 0.0;
  for (std::size_t j = 0; j < sim_joint_pos.size(); ++j)
    err += (sim_joint_pos[j] - kin_joint_pos[j]).norm();
  err /= static_cast<double>(sim_joint_pos.size());
  return {err > threshold, err};
}

namespace {
template <typename F>
double mean_over(const std::vector<SequenceMetrics>& seqs, F f) {
  if (seqs.empty()) return 0.0;
  double s = 0.0;
  for (const auto& m : seqs) s += f(m);
  return s / static_cast<double>(seqs.size());
}
}  // namespace

double MetricsReport::mean_success() const {
  return mean_over(sequences, [](const SequenceMetrics& m) { return double(m.success); });
}
double MetricsReport::mean_root() const {
  return mean_over(sequences, [](const SequenceMetrics& m) { return m.e_root; });
}
double MetricsReport::mean_mpjpe() const {
  return mean_over(sequences, [](const SequenceMetrics& m) { return m.e_mpjpe_mm; });
}
double MetricsReport::mean_acc() const {
  return mean_over(sequences, [](const SequenceMetrics& m) { return m.e_acc; });
}
double MetricsReport::mean_fs() const {
  return mean_over(sequences, [](const SequenceMetrics& m) { return m.fs_mm; });
}
double MetricsReport::mean_pt() const {
  return mean_over(sequences, [](const SequenceMetrics& m) { return m.pt_mm; });
}

std::optional<double> MetricsReport::mean_cam() const {
  double s = 0.0;
  int n = 0;
  for (const auto& m : sequences)
    if (m.e_cam) {
      s += *m.e_cam;
      ++n;
    }
  if (!n) return std::nullopt;
  return s / n;
}

std::map<std::string, double> MetricsReport::per_action_success() const {
  std::map<std::string, std::pair<double, int>> acc;
  for (const auto& m : sequences) {
    acc[m.action].first += m.success;
    acc[m.action].second += 1;
  }
  std::map<std::string, double> out;
  for (const auto& [k, v] : acc) out[k] = v.first / v.second;
  return out;
}

std::string MetricsReport::to_json() const {
  nlohmann::json j;
  j["format_version"] = 1;
  j["sequences"] = nlohmann::json::array();
  for (const auto& m : sequences) {
    nlohmann::json s;
    s["name"] = m.name;
    s["action"] = m.action;
    s["s_inter"] = m.success;
    s["e_root"] = m.e_root;
    s["e_mpjpe"] = m.e_mpjpe_mm;
    s["e_acc"] = m.e_acc;
    s["fs"] = m.fs_mm;
    s["pt"] = m.pt_mm;
    if (m.e_cam) s["e_cam"] = *m.e_cam;
    s["failsafe_resets"] = m.failsafe_resets;
    j["sequences"].push_back(s);
  }
  nlohmann::json agg;
  agg["s_inter"] = mean_success();
  agg["e_root"] = mean_root();
  agg["e_mpjpe"] = mean_mpjpe();
  agg["e_acc"] = mean_acc();
  agg["fs"] = mean_fs();
  agg["pt"] = mean_pt();
  if (auto c = mean_cam()) agg["e_cam"] = *c;
  agg["per_action_success"] = per_action_success();
  j["aggregate"] = agg;
  return j.dump(2);
}

std::string MetricsReport::to_table() const {
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof(line), "%-24s %-6s %8s %8s %9s %8s %8s %8s\n", "sequence", "action",
                "S_inter", "E_root", "E_mpjpe", "E_acc", "FS", "PT");
  os << line;
  for (const auto& m : sequences) {
    std::snprintf(line, sizeof(line), "%-24s %-6s %8d %8.4f %9.3f %8.3f %8.3f %8.3f\n",
                  m.name.c_str(), m.action.c_str(), m.success, m.e_root, m.e_mpjpe_mm, m.e_acc,
                  m.fs_mm, m.pt_mm);
    os << line;
  }
  std::snprintf(line, sizeof(line), "%-24s %-6s %8.3f %8.4f %9.3f %8.3f %8.3f %8.3f\n",
                "aggregate", "-", mean_success(), mean_root(), mean_mpjpe(), mean_acc(), mean_fs(),
                mean_pt());
  os << line;
  return os.str();
}

}  // namespace humo
