#include <cmath>

#include "humo/uhc.hpp"

namespace humo {

namespace {
double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }
}  // namespace

UhcPolicy::UhcPolicy(int obs_dim, int act_dim, const UhcNetConfig& cfg, Rng& rng)
    : obs_dim_(obs_dim), act_dim_(act_dim) {
  if (cfg.num_primitives < 1) throw ConfigError("UhcPolicy: need at least one primitive");
  for (int i = 0; i < cfg.num_primitives; ++i) {
    std::vector<int> dims{obs_dim};
    for (int h : cfg.primitive_hidden) dims.push_back(h);
    dims.push_back(act_dim);
    primitives_.emplace_back(dims, Activation::relu, rng, 0.01);
  }
  std::vector<int> cdims{obs_dim};
  for (int h : cfg.composer_hidden) cdims.push_back(h);
  cdims.push_back(cfg.num_primitives);
  composer_ = MlpNet(cdims, Activation::relu, rng, 0.01);
  log_std_ = VectorXd::Constant(act_dim, std::log(cfg.cov_std));
}

Eigen::Index UhcPolicy::param_count() const {
  Eigen::Index n = composer_.param_count();
  for (const MlpNet& p : primitives_) n += p.param_count();
  return n;
}

VectorXd UhcPolicy::get_params() const {
  VectorXd out(param_count());
  Eigen::Index at = 0;
  for (const MlpNet& p : primitives_) {
    out.segment(at, p.param_count()) = p.params();
    at += p.param_count();
  }
  out.segment(at, composer_.param_count()) = composer_.params();
  return out;
}

void UhcPolicy::set_params(const VectorXd& p) {
  if (p.size() != param_count()) throw ShapeError("UhcPolicy::set_params: size mismatch");
  Eigen::Index at = 0;
  for (MlpNet& net : primitives_) {
    net.params() = p.segment(at, net.param_count());
    at += net.param_count();
  }
  composer_.params() = p.segment(at, composer_.param_count());
}

namespace {
struct UhcStepCache {
  std::vector<MlpCache> prim;
  MlpCache composer;
  MatrixXd means;      // num_primitives x act_dim
  VectorXd logits;     // raw composer output
  VectorXd weights;    // softplus(logits)
};
struct UhcEpisodeCache final : SequencePolicy::Cache {
  std::vector<UhcStepCache> steps;
};
}  // namespace

std::vector<VectorXd> UhcPolicy::forward_episode(const std::vector<VectorXd>& obs,
                                                 std::unique_ptr<Cache>* cache) const {
  auto ep = cache ? std::make_unique<UhcEpisodeCache>() : nullptr;
  std::vector<VectorXd> means;
  means.reserve(obs.size());
  const int n = num_primitives();
  for (const VectorXd& x : obs) {
    UhcStepCache sc;
    sc.prim.resize(n);
    sc.means.resize(n, act_dim_);
    for (int i = 0; i < n; ++i)
      sc.means.row(i) = primitives_[i].forward(x, ep ? &sc.prim[i] : nullptr).transpose();
    sc.logits = composer_.forward(x, ep ? &sc.composer : nullptr);
    sc.weights = sc.logits.unaryExpr([](double v) { return softplus(v); });
    means.push_back(mcp_compose(sc.means, sc.weights));
    if (ep) ep->steps.push_back(std::move(sc));
  }
  if (cache) *cache = std::move(ep);
  return means;
}

void UhcPolicy::backward_episode(const Cache& cache, const std::vector<VectorXd>& dmeans,
                                 VectorXd* dparams) const {
  const auto& ep = dynamic_cast<const UhcEpisodeCache&>(cache);
  if (ep.steps.size() != dmeans.size())
    throw ShapeError("UhcPolicy::backward_episode: step count mismatch");
  const int n = num_primitives();

  // Gradient views into the flat dparams, matching get_params layout.
  std::vector<Eigen::Index> offsets;
  Eigen::Index at = 0;
  for (const MlpNet& p : primitives_) {
    offsets.push_back(at);
    at += p.param_count();
  }
  const Eigen::Index comp_off = at;

  for (std::size_t t = 0; t < ep.steps.size(); ++t) {
    const UhcStepCache& sc = ep.steps[t];
    const VectorXd& dmean = dmeans[t];
    const double total = sc.weights.sum();
    const VectorXd wt = sc.weights / total;

    // d wrt primitive means and normalized weights.
    VectorXd dwt(n);
    for (int i = 0; i < n; ++i) {
      VectorXd dprim_out = wt[i] * dmean;
      VectorXd dp = VectorXd::Zero(primitives_[i].param_count());
      primitives_[i].backward(sc.prim[i], dprim_out, nullptr, &dp);
      dparams->segment(offsets[i], dp.size()) += dp;
      dwt[i] = sc.means.row(i).dot(dmean);
    }
    // Normalization: wt = w / sum(w).
    VectorXd dw = (dwt - VectorXd::Constant(n, dwt.dot(wt))) / total;
    // Softplus: dw/dlogit = sigmoid(logit).
    VectorXd dlogits(n);
    for (int i = 0; i < n; ++i) dlogits[i] = dw[i] * sigmoid(sc.logits[i]);
    VectorXd dc = VectorXd::Zero(composer_.param_count());
    composer_.backward(sc.composer, dlogits, nullptr, &dc);
    dparams->segment(comp_off, dc.size()) += dc;
  }
}

void UhcPolicy::save(Checkpoint* ck, const std::string& prefix) const {
  ck->add(prefix + ".params", get_params());
  ck->add(prefix + ".log_std", log_std_);
  nlohmann::json shapes = nlohmann::json::array();
  for (const MlpNet& p : primitives_) shapes.push_back(p.dims());
  ck->meta[prefix + "_primitive_dims"] = shapes;
  ck->meta[prefix + "_composer_dims"] = composer_.dims();
}

void UhcPolicy::load(const Checkpoint& ck, const std::string& prefix) {
  const VectorXd& p = ck.get(prefix + ".params");
  if (p.size() != param_count())
    throw IoError("UhcPolicy::load: parameter count mismatch (checkpoint " +
                  std::to_string(p.size()) + ", expected " + std::to_string(param_count()) + ")");
  set_params(p);
  log_std_ = ck.get(prefix + ".log_std");
}

VectorXd value_sampling_probs(const VectorXd& values, double temperature) {
  if (values.size() == 0) throw Error("value_guided_sample: empty dataset");
  const VectorXd scaled = -values / temperature;
  const double m = scaled.maxCoeff();
  VectorXd p = (scaled.array() - m).exp().matrix();
  return p / p.sum();
}

ValueGuidedSampler build_value_guided_sampler(const HumanoidModel& model, const Dataset& dataset,
                                              const ValueNet& value, double temperature) {
  ValueGuidedSampler s;
  std::vector<double> scores;
  for (int c = 0; c < dataset.size(); ++c) {
    const MotionSequence& clip = dataset.clips[c];
    for (int f = 0; f + 1 < clip.length(); ++f) {
      const QVel zero = QVel::zero(model.num_angles());
      const VectorXd feat = uhc_features(model, clip.frames[f], zero, clip.frames[f + 1]);
      scores.push_back(value.value(feat));
      s.refs.push_back({c, f});
    }
  }
  VectorXd v(static_cast<Eigen::Index>(scores.size()));
  for (std::size_t i = 0; i < scores.size(); ++i) v[static_cast<Eigen::Index>(i)] = scores[i];
  s.probs = value_sampling_probs(v, temperature);
  return s;
}

UhcRolloutInfo uhc_rollout(const HumanoidModel& model, const Scene& scene, const UhcConfig& cfg,
                           const UhcPolicy& policy, const ValueNet& value,
                           const MotionSequence& clip, const std::vector<QVel>& clip_vels,
                           int start, int max_len, Rng& rng, bool stochastic, bool playback) {
  UhcRolloutInfo out;
  const int T = clip.length();
  if (start < 0 || start + 1 >= T) throw Error("uhc_rollout: start frame out of range");

  Simulation sim(model, scene, cfg.sim);
  sim.set_state(clip.frames[start], QVel::zero(model.num_angles()));

  const int steps = std::min(max_len, T - 1 - start);
  const double std_dev = std::exp(policy.log_std()[0]);

  for (int t = 0; t < steps; ++t) {
    const Pose& target = clip.frames[start + t + 1];
    const VectorXd obs = uhc_features(model, sim.pose(), sim.qvel(), target);
    const VectorXd mean = policy.mean(obs);
    VectorXd action = mean;
    if (stochastic)
      for (Eigen::Index i = 0; i < action.size(); ++i) action[i] += std_dev * rng.gaussian();

    Transition tr;
    tr.obs = obs;
    tr.act = action;
    tr.logp = gaussian_log_prob(mean, policy.log_std(), action);
    tr.value = value.value(obs);

    const ControlInput control = residual_action_to_pd_target(model, target, action);
    bool diverged = false;
    if (playback) {
      sim.set_state(target, clip_vels[start + t + 1]);
    } else {
      try {
        sim.step(control);
      } catch (const SimDivergedError&) {
        diverged = true;
      }
    }

    if (diverged) {
      tr.reward = 0.0;
      tr.done = true;
      out.fell = true;
      out.diverged = true;
      out.episode.steps.push_back(std::move(tr));
      break;
    }

    const UhcRewardTerms r =
        uhc_reward(model, sim.pose(), target, sim.qvel(), clip_vels[start + t + 1],
                   control.residual_force, control.residual_torque);
    tr.reward = r.total;

    // Tracking-failure termination: mean body position error vs the target.
    const FkResult fk = forward_kinematics(model, sim.pose());
    const FkResult fk_hat = forward_kinematics(model, target);
    double err = 0.0;
    for (int b = 0; b < model.num_bodies(); ++b)
      err += (fk.world_pos[b] - fk_hat.world_pos[b]).norm();
    err /= model.num_bodies();
    const bool fail = err > cfg.termination_threshold;

    out.sim_poses.push_back(sim.pose());
    if (fail) {
      tr.done = true;
      out.fell = true;
      out.episode.steps.push_back(std::move(tr));
      break;
    }
    tr.done = false;
    out.episode.steps.push_back(std::move(tr));
  }

  // Bootstrap for truncated episodes.
  if (!out.fell && !out.episode.steps.empty()) {
    const int tend = start + static_cast<int>(out.episode.steps.size());
    if (tend + 1 < T) {
      const VectorXd obs = uhc_features(model, sim.pose(), sim.qvel(), clip.frames[tend + 1]);
      out.episode.final_value = value.value(obs);
    }
  }
  out.episode.clip_id = -1;
  out.episode.start_frame = start;
  return out;
}

}  // namespace humo
