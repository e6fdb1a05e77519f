#pragma once

#include <string>

#include "humo/kin.hpp"
#include "humo/synthetic.hpp"
#include "humo/uhc.hpp"

namespace humo {

// Top-level run configuration shared by the CLI commands. Every
// hyperparameter has a default (training defaults follow the UHC /
// kinematic-policy hyperparameter tables; simulator constants are
// documented repo defaults). Unknown keys are rejected.
struct RunConfig {
  std::string model = "builtin:chain5";
  std::string scene_path;      // optional; clips usually carry their scene
  std::string dataset_glob;
  std::string output_dir = "out";
  std::uint64_t seed = 0;
  int workers = 1;

  UhcConfig uhc;
  KinConfig kin;
  int kin_iterations = 20;  // Alg. 1 / Alg. 2 rounds for train-kin
  SyntheticSpec gen;

  static RunConfig from_json_text(const std::string& text);
  static RunConfig from_file(const std::string& path);
  std::string to_json() const;

  // FNV-1a hash of the canonical JSON form, embedded in artifacts.
  std::string config_hash() const;
};

}  // namespace humo
