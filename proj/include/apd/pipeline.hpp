#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "apd/aid.hpp"
#include "apd/core.hpp"
#include "apd/embed.hpp"
#include "apd/semgraph.hpp"
#include "apd/vae.hpp"

namespace apd {

struct GraphConfig {
  double tau = 0.3;
  int k_eigs = kDefaultEigenCount;
};

enum class SanitizeMode { kRemove, kMask };

struct SanitizePolicy {
  SanitizeMode mode = SanitizeMode::kRemove;
  std::string mask_token = "[FILTERED]";
  int max_rounds = 2;
};

/// Everything screening needs. Immutable once built; safe to share across
/// threads.
struct ModelBundle {
  EmbedderConfig embedder;
  VaeConfig vae_config;
  VaeParams<double> vae;
  GraphConfig graph;
  AidConfig aid_config;
  AidParams<double> aid;
  SanitizePolicy sanitize;

  /// Cross-checks embedder dim, VAE input, VAE latent and detector inputs.
  void validate() const;
};

/// Error from one screening stage; what() is prefixed with "[stage] ".
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what)
      : Error("[" + stage + "] " + what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

/// Result of steps 1-4 on one token list.
struct PromptAnalysis {
  Vector pooled;
  LatentCode latent;
  SpectralFeatures spectral;
  double score = 0;
};

PromptAnalysis analyze(const std::vector<std::string>& tokens, const ModelBundle& bundle);

/// Splits tokens by the Fiedler partition, scores each side on its own and
/// flags the side that scores higher. Near-ties (<= 1e-9) flag the smaller
/// side, then the side holding the lexicographically smallest token.
std::vector<std::size_t> attribute(const std::vector<std::string>& tokens, const SpectralFeatures& spectral,
                                   const ModelBundle& bundle);

struct SanitizeOutput {
  std::string text;
  bool fully_filtered = false;  // remove mode dropped every token
};

SanitizeOutput sanitize(const std::vector<std::string>& tokens, const std::set<std::size_t>& flagged,
                        const SanitizePolicy& policy);

struct ScreenResult {
  bool adversarial = false;  // verdict on the original prompt
  double score = 0;          // detector probability on the original prompt
  std::vector<std::size_t> flagged_tokens;  // positions, ascending, across all rounds
  std::optional<std::string> sanitized_text;  // absent when the prompt is rejected
  int rounds = 0;
  double latency_ms = 0;
};

/// Embed, decompose, graph, classify; if adversarial, attribute and
/// sanitize, then re-screen what remains. Passes continue until a pass is
/// benign or max_rounds passes have run. A prompt still adversarial on the
/// last pass, or fully filtered, is rejected.
ScreenResult screen(const Prompt& prompt, const ModelBundle& bundle);

struct MetricsReport {
  std::optional<double> ada;
  std::optional<double> fpr;
  std::optional<double> hor;
  double latency_median_ms = 0;
  double latency_p95_ms = 0;
  std::size_t adversarial = 0;
  std::size_t benign = 0;
  std::size_t flagged_adversarial = 0;
  std::size_t flagged_benign = 0;
  std::size_t neutralized = 0;
  std::size_t rejected = 0;
  std::vector<std::string> errors;
};

/// One screened example, as consumed by compute_metrics.
struct ScreenOutcome {
  Label label = Label::kBenign;
  bool flagged = false;
  std::optional<std::string> sanitized_text;
  double latency_ms = 0;
};

/// ADA = flagged adversarial / adversarial; FPR = flagged benign / benign;
/// HOR = adversarial outcomes whose forwarded text holds no trigger token
/// (rejected prompts forward nothing) / adversarial. HOR is computed only
/// when trigger_vocab is given.
MetricsReport compute_metrics(const std::vector<ScreenOutcome>& outcomes,
                              const std::set<std::string>* trigger_vocab);

MetricsReport evaluate(const std::vector<LabeledExample>& test, const ModelBundle& bundle,
                       const std::set<std::string>* trigger_vocab = nullptr);

}  // namespace apd
