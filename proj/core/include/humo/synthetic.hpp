#pragma once

#include "humo/motion.hpp"

namespace humo {

// Procedural clip generation: kinematically consistent scripted motion per
// action, with the context channels (phi, camera) derived from the motion
// the way the kinematic policy expects them. Seeded and reproducible.
struct SyntheticSpec {
  std::string action = "loco";  // loco | sit | push | step | avoid | sway
  int num_clips = 3;
  int frames = 180;  // at 30 Hz
  int phi_dim = 16;
  std::uint64_t seed = 0;
  double noise_phi = 0.02;
  double noise_cam = 0.002;
  // Out-of-distribution jitter for held-out sets: scales parameter ranges
  // beyond the defaults and offsets the starting pose.
  double perturb = 0.0;
};

std::vector<MotionSequence> gen_synthetic_dataset(const HumanoidModel& model,
                                                  const SyntheticSpec& spec);

}  // namespace humo
