#include "humo/run_config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace humo {

using nlohmann::json;

namespace {

void require_keys(const json& j, const std::set<std::string>& allowed, const std::string& ctx) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) throw ConfigError(ctx + ": unknown key '" + it.key() + "'");
}

void parse_sim(const json& j, SimConfig* sim) {
  require_keys(j,
               {"dt_sub", "substeps", "gravity", "contact_kp", "contact_kd", "friction_mu",
                "friction_kv", "armature", "residual_force_max", "residual_torque_max"},
               "sim");
  sim->dt_sub = j.value("dt_sub", sim->dt_sub);
  sim->substeps = j.value("substeps", sim->substeps);
  sim->gravity = j.value("gravity", sim->gravity);
  sim->contact_kp = j.value("contact_kp", sim->contact_kp);
  sim->contact_kd = j.value("contact_kd", sim->contact_kd);
  sim->friction_mu = j.value("friction_mu", sim->friction_mu);
  sim->friction_kv = j.value("friction_kv", sim->friction_kv);
  sim->armature = j.value("armature", sim->armature);
  sim->residual_force_max = j.value("residual_force_max", sim->residual_force_max);
  sim->residual_torque_max = j.value("residual_torque_max", sim->residual_torque_max);
}

void parse_ppo(const json& j, PpoConfig* ppo) {
  require_keys(j,
               {"gamma", "lambda_gae", "clip_eps", "policy_lr", "value_lr", "epochs",
                "minibatch_samples", "grad_clip"},
               "ppo");
  ppo->gamma = j.value("gamma", ppo->gamma);
  ppo->lambda_gae = j.value("lambda_gae", ppo->lambda_gae);
  ppo->clip_eps = j.value("clip_eps", ppo->clip_eps);
  ppo->policy_lr = j.value("policy_lr", ppo->policy_lr);
  ppo->value_lr = j.value("value_lr", ppo->value_lr);
  ppo->epochs = j.value("epochs", ppo->epochs);
  ppo->minibatch_samples = j.value("minibatch_samples", ppo->minibatch_samples);
  ppo->grad_clip = j.value("grad_clip", ppo->grad_clip);
}

json sim_json(const SimConfig& s) {
  return {{"dt_sub", s.dt_sub},
          {"substeps", s.substeps},
          {"gravity", s.gravity},
          {"contact_kp", s.contact_kp},
          {"contact_kd", s.contact_kd},
          {"friction_mu", s.friction_mu},
          {"friction_kv", s.friction_kv},
          {"armature", s.armature},
          {"residual_force_max", s.residual_force_max},
          {"residual_torque_max", s.residual_torque_max}};
}

json ppo_json(const PpoConfig& p) {
  return {{"gamma", p.gamma},
          {"lambda_gae", p.lambda_gae},
          {"clip_eps", p.clip_eps},
          {"policy_lr", p.policy_lr},
          {"value_lr", p.value_lr},
          {"epochs", p.epochs},
          {"minibatch_samples", p.minibatch_samples},
          {"grad_clip", p.grad_clip}};
}

}  // namespace

RunConfig RunConfig::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: JSON parse error: ") + e.what());
  }
  require_keys(
      j, {"format_version", "model", "scene", "dataset", "output_dir", "seed", "workers", "uhc",
          "kin", "gen"},
      "config");
  if (j.contains("format_version") && j["format_version"].get<int>() != 1)
    throw ConfigError("config: unsupported format_version");
  RunConfig c;
  c.model = j.value("model", c.model);
  c.scene_path = j.value("scene", c.scene_path);
  c.dataset_glob = j.value("dataset", c.dataset_glob);
  c.output_dir = j.value("output_dir", c.output_dir);
  c.seed = j.value("seed", c.seed);
  c.workers = j.value("workers", c.workers);

  if (j.contains("uhc")) {
    const json& u = j["uhc"];
    require_keys(u,
                 {"num_primitives", "primitive_hidden", "composer_hidden", "value_hidden",
                  "cov_std", "batch_size", "temperature", "episode_len",
                  "termination_threshold", "iterations", "checkpoint_every", "ppo", "sim"},
                 "uhc");
    c.uhc.net.num_primitives = u.value("num_primitives", c.uhc.net.num_primitives);
    if (u.contains("primitive_hidden"))
      c.uhc.net.primitive_hidden = u["primitive_hidden"].get<std::vector<int>>();
    if (u.contains("composer_hidden"))
      c.uhc.net.composer_hidden = u["composer_hidden"].get<std::vector<int>>();
    if (u.contains("value_hidden"))
      c.uhc.net.value_hidden = u["value_hidden"].get<std::vector<int>>();
    c.uhc.net.cov_std = u.value("cov_std", c.uhc.net.cov_std);
    c.uhc.batch_size = u.value("batch_size", c.uhc.batch_size);
    c.uhc.temperature = u.value("temperature", c.uhc.temperature);
    c.uhc.episode_len = u.value("episode_len", c.uhc.episode_len);
    c.uhc.termination_threshold =
        u.value("termination_threshold", c.uhc.termination_threshold);
    c.uhc.iterations = u.value("iterations", c.uhc.iterations);
    c.uhc.checkpoint_every = u.value("checkpoint_every", c.uhc.checkpoint_every);
    if (u.contains("ppo")) parse_ppo(u["ppo"], &c.uhc.ppo);
    if (u.contains("sim")) parse_sim(u["sim"], &c.uhc.sim);
  }
  if (j.contains("kin")) {
    const json& k = j["kin"];
    require_keys(k,
                 {"gru_hidden", "mlp_hidden", "init_gru_hidden", "init_mlp_hidden",
                  "value_hidden", "cov_std", "rl_batch", "sl_batch", "sl_epochs", "sl_lr",
                  "warmstart_rounds", "warmstart", "termination_threshold",
                  "failsafe_threshold", "iterations", "ppo", "sim"},
                 "kin");
    c.kin.net.gru_hidden = k.value("gru_hidden", c.kin.net.gru_hidden);
    if (k.contains("mlp_hidden")) c.kin.net.mlp_hidden = k["mlp_hidden"].get<std::vector<int>>();
    c.kin.net.init_gru_hidden = k.value("init_gru_hidden", c.kin.net.init_gru_hidden);
    if (k.contains("init_mlp_hidden"))
      c.kin.net.init_mlp_hidden = k["init_mlp_hidden"].get<std::vector<int>>();
    if (k.contains("value_hidden"))
      c.kin.net.value_hidden = k["value_hidden"].get<std::vector<int>>();
    c.kin.net.cov_std = k.value("cov_std", c.kin.net.cov_std);
    c.kin.rl_batch = k.value("rl_batch", c.kin.rl_batch);
    c.kin.sl_batch = k.value("sl_batch", c.kin.sl_batch);
    c.kin.sl_epochs = k.value("sl_epochs", c.kin.sl_epochs);
    c.kin.sl_lr = k.value("sl_lr", c.kin.sl_lr);
    c.kin.warmstart_rounds = k.value("warmstart_rounds", c.kin.warmstart_rounds);
    c.kin.warmstart = k.value("warmstart", c.kin.warmstart);
    c.kin.termination_threshold =
        k.value("termination_threshold", c.kin.termination_threshold);
    c.kin.failsafe_threshold = k.value("failsafe_threshold", c.kin.failsafe_threshold);
    c.kin_iterations = k.value("iterations", c.kin_iterations);
    if (k.contains("ppo")) parse_ppo(k["ppo"], &c.kin.ppo);
    if (k.contains("sim")) parse_sim(k["sim"], &c.kin.sim);
  }
  if (j.contains("gen")) {
    const json& g = j["gen"];
    require_keys(g,
                 {"action", "num_clips", "frames", "phi_dim", "noise_phi", "noise_cam",
                  "perturb"},
                 "gen");
    c.gen.action = g.value("action", c.gen.action);
    c.gen.num_clips = g.value("num_clips", c.gen.num_clips);
    c.gen.frames = g.value("frames", c.gen.frames);
    c.gen.phi_dim = g.value("phi_dim", c.gen.phi_dim);
    c.gen.noise_phi = g.value("noise_phi", c.gen.noise_phi);
    c.gen.noise_cam = g.value("noise_cam", c.gen.noise_cam);
    c.gen.perturb = g.value("perturb", c.gen.perturb);
  }
  c.uhc.seed = c.seed;
  c.uhc.workers = c.workers;
  c.kin.seed = c.seed;
  c.kin.workers = c.workers;
  c.gen.seed = c.seed;
  return c;
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("config: cannot open '" + path + "'");
  std::ostringstream ss;
  ss << is.rdbuf();
  return from_json_text(ss.str());
}

std::string RunConfig::to_json() const {
  json j;
  j["format_version"] = 1;
  j["model"] = model;
  j["scene"] = scene_path;
  j["dataset"] = dataset_glob;
  j["output_dir"] = output_dir;
  j["seed"] = seed;
  j["workers"] = workers;
  j["uhc"] = {{"num_primitives", uhc.net.num_primitives},
              {"primitive_hidden", uhc.net.primitive_hidden},
              {"composer_hidden", uhc.net.composer_hidden},
              {"value_hidden", uhc.net.value_hidden},
              {"cov_std", uhc.net.cov_std},
              {"batch_size", uhc.batch_size},
              {"temperature", uhc.temperature},
              {"episode_len", uhc.episode_len},
              {"termination_threshold", uhc.termination_threshold},
              {"iterations", uhc.iterations},
              {"checkpoint_every", uhc.checkpoint_every},
              {"ppo", ppo_json(uhc.ppo)},
              {"sim", sim_json(uhc.sim)}};
  j["kin"] = {{"gru_hidden", kin.net.gru_hidden},
              {"mlp_hidden", kin.net.mlp_hidden},
              {"init_gru_hidden", kin.net.init_gru_hidden},
              {"init_mlp_hidden", kin.net.init_mlp_hidden},
              {"value_hidden", kin.net.value_hidden},
              {"cov_std", kin.net.cov_std},
              {"rl_batch", kin.rl_batch},
              {"sl_batch", kin.sl_batch},
              {"sl_epochs", kin.sl_epochs},
              {"sl_lr", kin.sl_lr},
              {"warmstart_rounds", kin.warmstart_rounds},
              {"warmstart", kin.warmstart},
              {"termination_threshold", kin.termination_threshold},
              {"failsafe_threshold", kin.failsafe_threshold},
              {"iterations", kin_iterations},
              {"ppo", ppo_json(kin.ppo)},
              {"sim", sim_json(kin.sim)}};
  j["gen"] = {{"action", gen.action},     {"num_clips", gen.num_clips},
              {"frames", gen.frames},     {"phi_dim", gen.phi_dim},
              {"noise_phi", gen.noise_phi}, {"noise_cam", gen.noise_cam},
              {"perturb", gen.perturb}};
  return j.dump(2);
}

std::string RunConfig::config_hash() const {
  const std::string s = to_json();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace humo
