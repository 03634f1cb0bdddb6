#include "apd/train.hpp"

#include <unordered_set>

#include "apd/log.hpp"

namespace apd {

TrainingFeatures extract_features(const std::vector<LabeledExample>& examples, const EmbedderConfig& embedder,
                                  const GraphConfig& graph) {
  std::vector<Vector> pooled, spectral;
  std::vector<double> labels;
  TrainingFeatures out;
  for (const auto& ex : examples) {
    if (ex.prompt.tokens.empty()) {
      ++out.skipped;
      continue;
    }
    const auto emb = embed(ex.prompt.tokens, embedder);
    pooled.push_back(pool(emb));
    spectral.push_back(spectral_features(build_graph(emb, graph.tau), graph.k_eigs).to_vector());
    labels.push_back(ex.label == Label::kAdversarial ? 1.0 : 0.0);
  }
  if (pooled.empty()) throw InvalidArgument("training set has no non-empty prompts");
  const auto n = static_cast<Eigen::Index>(pooled.size());
  out.pooled.resize(n, pooled.front().size());
  out.spectral.resize(n, spectral.front().size());
  out.labels.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out.pooled.row(i) = pooled[static_cast<std::size_t>(i)].transpose();
    out.spectral.row(i) = spectral[static_cast<std::size_t>(i)].transpose();
    out.labels(i) = labels[static_cast<std::size_t>(i)];
  }
  return out;
}

std::vector<LabeledExample> fiedler_sides(const std::vector<LabeledExample>& examples,
                                          const EmbedderConfig& embedder, const GraphConfig& graph) {
  std::unordered_set<std::string> benign_tokens;
  for (const auto& ex : examples)
    if (ex.label == Label::kBenign) benign_tokens.insert(ex.prompt.tokens.begin(), ex.prompt.tokens.end());

  std::vector<LabeledExample> out;
  for (const auto& ex : examples) {
    const auto& tokens = ex.prompt.tokens;
    if (tokens.size() < 2) continue;
    const auto emb = embed(tokens, embedder);
    const auto partition = spectral_features(build_graph(emb, graph.tau), graph.k_eigs).partition;
    for (const Side side : {Side::kPositive, Side::kNegative}) {
      std::vector<std::string> part;
      bool unseen = false;
      for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (partition[i] != side) continue;
        part.push_back(tokens[i]);
        unseen = unseen || !benign_tokens.contains(tokens[i]);
      }
      if (part.empty() || part.size() == tokens.size()) continue;
      const bool adversarial = ex.label == Label::kAdversarial && unseen;
      out.push_back({Prompt::from_text(join_tokens(part)), adversarial ? Label::kAdversarial : Label::kBenign});
    }
  }
  return out;
}

TrainedModel train_bundle(const std::vector<LabeledExample>& examples, const AppConfig& config) {
  config.validate();
  TrainedModel out{bundle_shell(config), {}};
  auto& bundle = out.bundle;
  auto& report = out.report;

  auto training = examples;
  if (config.augment_sides) {
    auto sides = fiedler_sides(examples, config.embedder, config.graph);
    report.side_examples = sides.size();
    training.insert(training.end(), std::make_move_iterator(sides.begin()), std::make_move_iterator(sides.end()));
  }
  const auto features = extract_features(training, config.embedder, config.graph);
  report.skipped = features.skipped;
  report.examples = static_cast<std::size_t>(features.labels.size()) - report.side_examples;
  if (features.skipped > 0) log::warn("training: skipped {} examples with no tokens", features.skipped);

  log::info("training VAE on {} prompts and {} prompt sides", report.examples, report.side_examples);
  auto vae = train_vae(features.pooled, config.vae, config.vae_hyper());
  report.vae_losses = std::move(vae.epoch_losses);
  bundle.vae = vae.params.cast<float>().cast<double>();

  const Matrix latent = vae_encode_batch<double>(features.pooled, bundle.vae).first;

  if (config.distill.enabled) {
    const AidConfig teacher_config = config.teacher_config();
    log::info("training teacher detector ({} layers, hidden {})", teacher_config.layers, teacher_config.hidden);
    auto teacher = train_aid(latent, features.spectral, features.labels, teacher_config, config.teacher_hyper());
    report.teacher_losses = std::move(teacher.epoch_losses);
    log::info("distilling into detector ({} layers, hidden {})", config.aid.layers, config.aid.hidden);
    auto student = distill_aid(teacher.params, teacher_config, config.aid, latent, features.spectral,
                               features.labels, config.aid_hyper(),
                               DistillOptions{config.distill.temperature, config.distill.alpha});
    report.aid_losses = std::move(student.epoch_losses);
    bundle.aid = student.params.cast<float>().cast<double>();
  } else {
    log::info("training detector ({} layers, hidden {})", config.aid.layers, config.aid.hidden);
    auto aid = train_aid(latent, features.spectral, features.labels, config.aid, config.aid_hyper());
    report.aid_losses = std::move(aid.epoch_losses);
    bundle.aid = aid.params.cast<float>().cast<double>();
  }
  bundle.validate();
  return out;
}

}  // namespace apd
