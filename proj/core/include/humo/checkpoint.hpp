#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "humo/nn.hpp"

namespace humo {

// Versioned checkpoint container: a JSON header (shapes, metadata, RNG
// state) followed by raw little-endian double payloads, one per array.
// Round-trips are bit-identical; mismatched versions and truncated files
// are refused.
struct Checkpoint {
  static constexpr std::uint32_t kFormatVersion = 1;

  std::string kind;  // e.g. "uhc", "kin"
  nlohmann::json meta = nlohmann::json::object();
  std::vector<std::pair<std::string, VectorXd>> arrays;
  std::string rng_state;

  void add(const std::string& name, const VectorXd& v) { arrays.emplace_back(name, v); }
  const VectorXd& get(const std::string& name) const;
  bool has(const std::string& name) const;

  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);
};

// Adam state <-> checkpoint arrays, prefixed by name.
void save_adam(Checkpoint* ck, const std::string& prefix, const Adam& opt);
void load_adam(const Checkpoint& ck, const std::string& prefix, Adam* opt);

}  // namespace humo
