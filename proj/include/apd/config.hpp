#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include "json.hpp"

#include "apd/aid.hpp"
#include "apd/core.hpp"
#include "apd/embed.hpp"
#include "apd/pipeline.hpp"
#include "apd/vae.hpp"

namespace apd {

struct DistillConfig {
  bool enabled = false;
  int teacher_layers = 6;
  int teacher_hidden = 512;
  double temperature = 2.0;
  double alpha = 0.5;
};

/// Application configuration. Every section is optional in the file;
/// omitted keys take the defaults below. Unknown keys are rejected.
struct AppConfig {
  std::uint64_t seed = 0;
  EmbedderConfig embedder;
  VaeConfig vae;
  VaeHyper vae_train;
  GraphConfig graph;
  AidConfig aid;
  AidHyper aid_train;
  // Also train on the Fiedler sides of each prompt (see fiedler_sides).
  bool augment_sides = true;
  DistillConfig distill;
  SanitizePolicy sanitize;
  std::optional<SynthConfig> synth;

  /// Detector config of the distillation teacher.
  AidConfig teacher_config() const;

  /// Per-stage training hyperparameters with seeds derived from `seed`.
  VaeHyper vae_hyper() const;
  AidHyper aid_hyper() const;
  AidHyper teacher_hyper() const;

  void validate() const;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Parses and validates; errors name the offending key path, e.g. "vae.beta".
AppConfig parse_config(const nlohmann::json& j);
AppConfig load_config(const std::filesystem::path& path);

/// Full snapshot with every key present; parse_config(to_json(c)) == c.
nlohmann::ordered_json to_json(const AppConfig& c);

/// Zero-initialized bundle with the shapes the config implies.
ModelBundle bundle_shell(const AppConfig& c);

}  // namespace apd
