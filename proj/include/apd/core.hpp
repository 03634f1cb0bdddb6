#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace apd {

/// Lowercases, splits on Unicode whitespace, strips leading and trailing
/// punctuation from each fragment and drops empty fragments.
std::vector<std::string> tokenize(std::string_view text);

/// Joins tokens with single spaces.
std::string join_tokens(const std::vector<std::string>& tokens);

struct Prompt {
  std::string id;
  std::string text;
  std::vector<std::string> tokens;  // always tokenize(text)

  static Prompt from_text(std::string text, std::string id = {});
};

enum class Label : int { kBenign = 0, kAdversarial = 1 };

struct LabeledExample {
  Prompt prompt;
  Label label = Label::kBenign;
};

struct DatasetSplit {
  std::vector<LabeledExample> train;
  std::vector<LabeledExample> val;
  std::vector<LabeledExample> test;
  std::uint64_t seed = 0;
};

/// Reads UTF-8 JSONL with keys "text", "label" (0/1) and optional "id".
/// Blank lines are skipped. Errors name the 1-based line number.
std::vector<LabeledExample> load_dataset(const std::filesystem::path& path);

/// Writes examples in the same JSONL layout load_dataset reads.
void save_dataset(const std::filesystem::path& path, const std::vector<LabeledExample>& examples);

/// Shuffles with the seed and cuts into train/val/test by ratio.
DatasetSplit split_dataset(std::vector<LabeledExample> examples,
                           const std::array<double, 3>& ratios, std::uint64_t seed);

struct SynthConfig {
  std::size_t benign_vocab_size = 200;
  std::size_t trigger_vocab_size = 20;
  std::array<std::size_t, 2> prompt_len_range{8, 20};
  std::array<std::size_t, 2> triggers_per_adv{1, 3};
  double obfuscation_rate = 0.0;
  // Fraction of prompts whose text mixes two topics.
  double mixed_topic_rate = 0.3;
  std::size_t n_benign = 0;
  std::size_t n_adversarial = 0;
  std::uint64_t seed = 0;
  // Vocabularies come from their own stream so corpora drawn with different
  // seeds share words.
  std::uint64_t vocab_seed = 1;

  void validate() const;
};

struct SynthVocabulary {
  std::vector<std::string> benign;
  std::vector<std::size_t> benign_topic;  // topic id per benign word
  std::vector<std::string> trigger;
  std::size_t topic_count = 0;
};

/// Builds the disjoint benign and trigger vocabularies. Benign words are
/// grouped into topics sharing a stem; trigger words use a disjoint alphabet.
SynthVocabulary synth_vocabulary(const SynthConfig& config);

/// Generates a labeled corpus: benign prompts draw words from a single topic,
/// adversarial prompts are benign prompts with trigger words inserted at
/// random positions, optionally with one character substituted.
std::vector<LabeledExample> synth_corpus(const SynthConfig& config);

}  // namespace apd
