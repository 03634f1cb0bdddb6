#include "apd/pipeline.hpp"

#include <algorithm>
#include <chrono>

namespace apd {

void ModelBundle::validate() const {
  embedder.validate();
  vae_config.validate();
  aid_config.validate();
  if (embedder.dim != vae_config.d_in)
    throw InvalidArgument("bundle: embedder dim " + std::to_string(embedder.dim) + " != vae d_in " +
                          std::to_string(vae_config.d_in));
  if (aid_config.latent_dim != vae_config.k)
    throw InvalidArgument("bundle: detector latent_dim != vae k");
  if (aid_config.spectral_dim != spectral_dim(graph.k_eigs))
    throw InvalidArgument("bundle: detector spectral_dim does not match graph k_eigs");
  if (sanitize.max_rounds < 1) throw InvalidArgument("bundle: max_rounds must be at least 1");
  if (vae.enc_w.rows() != vae_config.d_in || vae.mu_w.cols() != vae_config.k ||
      vae.enc_w.cols() != vae_config.hidden)
    throw InvalidArgument("bundle: VAE weights do not match configuration");
  if (static_cast<int>(aid.blocks.size()) != aid_config.layers || aid.lat_w.rows() != aid_config.latent_dim ||
      aid.lat_w.cols() != aid_config.hidden || aid.spec_w.rows() != aid_config.spectral_dim)
    throw InvalidArgument("bundle: detector weights do not match configuration");
}

namespace {

template <typename F>
auto staged(const char* stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

}  // namespace

PromptAnalysis analyze(const std::vector<std::string>& tokens, const ModelBundle& bundle) {
  if (tokens.empty()) throw InvalidArgument("empty prompt");
  PromptAnalysis out;
  const auto emb = staged("embed", [&] { return embed(tokens, bundle.embedder); });
  out.pooled = staged("embed", [&] { return pool(emb); });
  out.latent = staged("decompose", [&] { return vae_encode(out.pooled, bundle.vae, bundle.vae_config); });
  out.spectral = staged("graph", [&] {
    return spectral_features(build_graph(emb, bundle.graph.tau), bundle.graph.k_eigs);
  });
  out.score = staged("classify", [&] {
    return aid_forward(featurize(out.latent.mu, out.spectral.to_vector(), bundle.aid_config), bundle.aid,
                       bundle.aid_config);
  });
  return out;
}

std::vector<std::size_t> attribute(const std::vector<std::string>& tokens, const SpectralFeatures& spectral,
                                   const ModelBundle& bundle) {
  if (tokens.size() == 1) return {0};
  if (spectral.partition.size() != tokens.size())
    throw InvalidArgument("attribute: partition does not match tokens");

  std::vector<std::size_t> pos_side, neg_side;
  for (std::size_t i = 0; i < tokens.size(); ++i)
    (spectral.partition[i] == Side::kPositive ? pos_side : neg_side).push_back(i);
  if (pos_side.empty() || neg_side.empty()) {
    std::vector<std::size_t> all(tokens.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return all;
  }

  auto side_tokens = [&](const std::vector<std::size_t>& side) {
    std::vector<std::string> out;
    for (auto i : side) out.push_back(tokens[i]);
    return out;
  };
  const auto pos_tokens = side_tokens(pos_side);
  const auto neg_tokens = side_tokens(neg_side);
  const double pos_score = analyze(pos_tokens, bundle).score;
  const double neg_score = analyze(neg_tokens, bundle).score;

  if (std::abs(pos_score - neg_score) > 1e-9) return pos_score > neg_score ? pos_side : neg_side;
  if (pos_side.size() != neg_side.size()) return pos_side.size() < neg_side.size() ? pos_side : neg_side;
  const auto& pos_min = *std::min_element(pos_tokens.begin(), pos_tokens.end());
  const auto& neg_min = *std::min_element(neg_tokens.begin(), neg_tokens.end());
  return neg_min < pos_min ? neg_side : pos_side;
}

SanitizeOutput sanitize(const std::vector<std::string>& tokens, const std::set<std::size_t>& flagged,
                        const SanitizePolicy& policy) {
  for (auto f : flagged)
    if (f >= tokens.size()) throw InvalidArgument("sanitize: flagged position out of range");
  std::vector<std::string> kept;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (!flagged.contains(i)) kept.push_back(tokens[i]);
    else if (policy.mode == SanitizeMode::kMask) kept.push_back(policy.mask_token);
  }
  SanitizeOutput out;
  out.text = join_tokens(kept);
  out.fully_filtered = policy.mode == SanitizeMode::kRemove && !tokens.empty() && kept.empty();
  return out;
}

ScreenResult screen(const Prompt& prompt, const ModelBundle& bundle) {
  const auto start = std::chrono::steady_clock::now();
  if (prompt.tokens.empty()) throw InvalidArgument("empty prompt");
  const double threshold = bundle.aid_config.threshold;

  ScreenResult result;
  std::vector<std::size_t> active(prompt.tokens.size());
  for (std::size_t i = 0; i < active.size(); ++i) active[i] = i;
  std::set<std::size_t> flagged;
  bool accepted = false;

  for (int round = 1; round <= bundle.sanitize.max_rounds && !active.empty(); ++round) {
    std::vector<std::string> tokens;
    for (auto i : active) tokens.push_back(prompt.tokens[i]);
    const auto analysis = analyze(tokens, bundle);
    result.rounds = round;
    if (round == 1) {
      result.score = analysis.score;
      result.adversarial = analysis.score >= threshold;
    }
    if (analysis.score < threshold) {
      accepted = true;
      break;
    }
    const auto local = staged("attribute", [&] { return attribute(tokens, analysis.spectral, bundle); });
    std::set<std::size_t> drop;
    for (auto l : local) {
      flagged.insert(active[l]);
      drop.insert(l);
    }
    std::vector<std::size_t> remaining;
    for (std::size_t l = 0; l < active.size(); ++l)
      if (!drop.contains(l)) remaining.push_back(active[l]);
    active = std::move(remaining);
  }

  result.flagged_tokens.assign(flagged.begin(), flagged.end());
  if (accepted) {
    const auto out = sanitize(prompt.tokens, flagged, bundle.sanitize);
    if (!out.fully_filtered) result.sanitized_text = out.text;
  }
  result.latency_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return result;
}

namespace {

double percentile(std::vector<double> values, double q) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(values.size())));
  return values[std::clamp<std::size_t>(rank, 1, values.size()) - 1];
}

}  // namespace

MetricsReport compute_metrics(const std::vector<ScreenOutcome>& outcomes,
                              const std::set<std::string>* trigger_vocab) {
  MetricsReport r;
  std::vector<double> latencies;
  for (const auto& o : outcomes) {
    latencies.push_back(o.latency_ms);
    if (o.label == Label::kAdversarial) {
      ++r.adversarial;
      if (o.flagged) ++r.flagged_adversarial;
      if (!o.sanitized_text) {
        ++r.rejected;
        ++r.neutralized;
      } else if (trigger_vocab) {
        const auto tokens = tokenize(*o.sanitized_text);
        if (std::none_of(tokens.begin(), tokens.end(),
                         [&](const std::string& t) { return trigger_vocab->contains(t); }))
          ++r.neutralized;
      }
    } else {
      ++r.benign;
      if (o.flagged) ++r.flagged_benign;
      if (!o.sanitized_text) ++r.rejected;
    }
  }
  if (r.adversarial > 0) {
    r.ada = static_cast<double>(r.flagged_adversarial) / static_cast<double>(r.adversarial);
    if (trigger_vocab) r.hor = static_cast<double>(r.neutralized) / static_cast<double>(r.adversarial);
  } else {
    r.errors.push_back("no adversarial examples: ADA and HOR undefined");
  }
  if (r.benign > 0)
    r.fpr = static_cast<double>(r.flagged_benign) / static_cast<double>(r.benign);
  else
    r.errors.push_back("no benign examples: FPR undefined");
  r.latency_median_ms = percentile(latencies, 0.5);
  r.latency_p95_ms = percentile(latencies, 0.95);
  return r;
}

MetricsReport evaluate(const std::vector<LabeledExample>& test, const ModelBundle& bundle,
                       const std::set<std::string>* trigger_vocab) {
  if (test.empty()) throw InvalidArgument("evaluate: empty test set");
  std::vector<ScreenOutcome> outcomes;
  outcomes.reserve(test.size());
  for (const auto& ex : test) {
    const auto r = screen(ex.prompt, bundle);
    outcomes.push_back({ex.label, r.adversarial, r.sanitized_text, r.latency_ms});
  }
  return compute_metrics(outcomes, trigger_vocab);
}

}  // namespace apd
