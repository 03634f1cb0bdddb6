#pragma once

#include <vector>

#include "apd/config.hpp"
#include "apd/pipeline.hpp"

namespace apd {

/// Per-example inputs for training: pooled embeddings, spectral feature
/// vectors and 0/1 labels, one row per kept example.
struct TrainingFeatures {
  Matrix pooled;
  Matrix spectral;
  Vector labels;
  std::size_t skipped = 0;  // examples with no tokens
};

TrainingFeatures extract_features(const std::vector<LabeledExample>& examples, const EmbedderConfig& embedder,
                                  const GraphConfig& graph);

/// The two Fiedler sides of every prompt with at least two tokens, as
/// standalone prompts: the sub-prompts attribute() scores at inference. Any
/// part of a benign prompt is benign; a side of an adversarial prompt is
/// adversarial when it holds a token that no benign prompt in `examples`
/// contains, benign otherwise.
std::vector<LabeledExample> fiedler_sides(const std::vector<LabeledExample>& examples,
                                          const EmbedderConfig& embedder, const GraphConfig& graph);

struct TrainReport {
  std::size_t examples = 0;
  std::size_t side_examples = 0;
  std::size_t skipped = 0;
  std::vector<double> vae_losses;
  std::vector<double> teacher_losses;
  std::vector<double> aid_losses;
};

struct TrainedModel {
  ModelBundle bundle;
  TrainReport report;
};

/// Trains the VAE, then the detector on the VAE means and spectral features
/// (through a teacher when distillation is enabled). Weights are rounded to
/// f32 after each stage, so the returned bundle screens exactly like one
/// loaded back from its archive.
TrainedModel train_bundle(const std::vector<LabeledExample>& examples, const AppConfig& config);

}  // namespace apd
