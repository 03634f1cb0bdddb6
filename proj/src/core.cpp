#include "apd/core.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "json.hpp"

#include "apd/error.hpp"
#include "apd/numkit.hpp"
#include "apd/utf8.hpp"

namespace apd {
namespace {

bool is_space(char32_t c) {
  switch (c) {
    case U' ': case U'\t': case U'\n': case U'\v': case U'\f': case U'\r':
    case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return c >= 0x2000 && c <= 0x200A;
  }
}

bool is_punct(char32_t c) {
  if (c < 0x80) return (c >= 0x21 && c <= 0x2F) || (c >= 0x3A && c <= 0x40) ||
                       (c >= 0x5B && c <= 0x60) || (c >= 0x7B && c <= 0x7E);
  switch (c) {
    case 0xA1: case 0xA7: case 0xAB: case 0xB6: case 0xB7: case 0xBB: case 0xBF:
    case 0x3001: case 0x3002: case 0xFF01: case 0xFF0C: case 0xFF0E: case 0xFF1F:
      return true;
    default:
      return (c >= 0x2010 && c <= 0x2027) || (c >= 0x2030 && c <= 0x205E);
  }
}

char32_t to_lower(char32_t c) {
  if (c >= U'A' && c <= U'Z') return c + 0x20;
  if (c >= 0xC0 && c <= 0xDE && c != 0xD7) return c + 0x20;  // Latin-1
  if (c >= 0x391 && c <= 0x3A9 && c != 0x3A2) return c + 0x20;  // Greek
  if (c >= 0x410 && c <= 0x42F) return c + 0x20;  // Cyrillic
  if (c >= 0x400 && c <= 0x40F) return c + 0x50;
  return c;
}

std::string finish_token(std::u32string& cps) {
  std::size_t b = 0, e = cps.size();
  while (b < e && is_punct(cps[b])) ++b;
  while (e > b && is_punct(cps[e - 1])) --e;
  std::string out;
  for (std::size_t i = b; i < e; ++i) utf8::append(out, to_lower(cps[i]));
  cps.clear();
  return out;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::u32string current;
  for (char32_t c : utf8::decode(text)) {
    if (is_space(c)) {
      if (auto t = finish_token(current); !t.empty()) tokens.push_back(std::move(t));
    } else {
      current.push_back(c);
    }
  }
  if (auto t = finish_token(current); !t.empty()) tokens.push_back(std::move(t));
  return tokens;
}

std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

Prompt Prompt::from_text(std::string text, std::string id) {
  Prompt p;
  p.id = std::move(id);
  p.tokens = tokenize(text);
  p.text = std::move(text);
  return p;
}

std::vector<LabeledExample> load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open dataset: " + path.string());
  std::vector<LabeledExample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto where = " at line " + std::to_string(line_no);
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception&) {
      throw Error("malformed JSON" + where);
    }
    if (!obj.is_object()) throw Error("malformed record" + where);
    if (!obj.contains("text") || !obj["text"].is_string())
      throw Error("missing or non-string \"text\"" + where);
    if (!obj.contains("label") || !obj["label"].is_number_integer())
      throw Error("invalid label" + where);
    const auto label = obj["label"].get<long long>();
    if (label != 0 && label != 1) throw Error("invalid label" + where);
    std::string id;
    if (obj.contains("id")) {
      if (!obj["id"].is_string()) throw Error("non-string \"id\"" + where);
      id = obj["id"].get<std::string>();
    }
    out.push_back({Prompt::from_text(obj["text"].get<std::string>(), std::move(id)),
                   label == 1 ? Label::kAdversarial : Label::kBenign});
  }
  return out;
}

void save_dataset(const std::filesystem::path& path, const std::vector<LabeledExample>& examples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write dataset: " + path.string());
  for (const auto& ex : examples) {
    nlohmann::ordered_json obj;
    if (!ex.prompt.id.empty()) obj["id"] = ex.prompt.id;
    obj["text"] = ex.prompt.text;
    obj["label"] = static_cast<int>(ex.label);
    out << obj.dump() << '\n';
  }
}

DatasetSplit split_dataset(std::vector<LabeledExample> examples,
                           const std::array<double, 3>& ratios, std::uint64_t seed) {
  for (double r : ratios)
    if (!(r >= 0.0)) throw InvalidArgument("split ratios must be nonnegative");
  if (std::abs(ratios[0] + ratios[1] + ratios[2] - 1.0) > 1e-9)
    throw InvalidArgument("split ratios must sum to 1");

  Rng rng(seed);
  rng.shuffle(examples);

  const std::size_t n = examples.size();
  auto portion = [n](double r) {
    return static_cast<std::size_t>(std::floor(r * static_cast<double>(n) + 0.5));
  };
  const std::size_t n_train = std::min(n, portion(ratios[0]));
  const std::size_t n_val = std::min(n - n_train, portion(ratios[1]));

  DatasetSplit split;
  split.seed = seed;
  auto first = std::make_move_iterator(examples.begin());
  split.train.assign(first, first + static_cast<std::ptrdiff_t>(n_train));
  split.val.assign(first + static_cast<std::ptrdiff_t>(n_train),
                   first + static_cast<std::ptrdiff_t>(n_train + n_val));
  split.test.assign(first + static_cast<std::ptrdiff_t>(n_train + n_val),
                    std::make_move_iterator(examples.end()));
  return split;
}

// ---------------------------------------------------------------------------
// Synthetic corpus

namespace {

constexpr std::string_view kBenignConsonants = "bdfglmnprst";
constexpr std::string_view kBenignVowels = "aeio";
constexpr std::string_view kTriggerConsonants = "kqvwxz";
constexpr std::string_view kTriggerVowels = "uy";
constexpr std::size_t kBenignWordsPerTopic = 20;
constexpr std::size_t kTriggerWordsPerTopic = 5;

std::string syllable(Rng& rng, std::string_view consonants, std::string_view vowels) {
  std::string s;
  s += consonants[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(consonants.size()) - 1))];
  s += vowels[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(vowels.size()) - 1))];
  return s;
}

// Words are stem + one or two syllables; the stem (two syllables) fixes the
// topic, so words of one topic share their leading trigrams.
void build_topics(Rng& rng, std::size_t count, std::size_t per_topic, std::string_view consonants,
                  std::string_view vowels, std::vector<std::string>& words,
                  std::vector<std::size_t>& topic_of) {
  if (count == 0) return;
  const std::size_t syllables = consonants.size() * vowels.size();
  const std::size_t topics = (count + per_topic - 1) / per_topic;
  if (topics > syllables * syllables || per_topic > syllables + syllables * syllables)
    throw InvalidArgument("synth: vocabulary size exceeds generator capacity");

  std::set<std::string> stem_set;
  std::vector<std::string> stems;
  while (stems.size() < topics) {
    auto stem = syllable(rng, consonants, vowels) + syllable(rng, consonants, vowels);
    if (stem_set.insert(stem).second) stems.push_back(std::move(stem));
  }
  for (std::size_t t = 0; t < topics; ++t) {
    const std::size_t want = std::min(per_topic, count - t * per_topic);
    std::set<std::string> seen;
    while (seen.size() < want) {
      auto w = stems[t] + syllable(rng, consonants, vowels);
      if (rng.uniform() < 0.5) w += syllable(rng, consonants, vowels);
      if (seen.insert(w).second) {
        words.push_back(w);
        topic_of.push_back(t);
      }
    }
  }
}

std::string obfuscate(const std::string& word, Rng& rng) {
  std::string out = word;
  const auto pos = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(word.size()) - 1));
  char c;
  do {
    c = static_cast<char>('a' + rng.uniform_int(0, 25));
  } while (c == word[pos]);
  out[pos] = c;
  return out;
}

template <typename T>
const T& pick(const std::vector<T>& v, Rng& rng) {
  return v[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(v.size()) - 1))];
}

}  // namespace

void SynthConfig::validate() const {
  if (prompt_len_range[0] > prompt_len_range[1] || triggers_per_adv[0] > triggers_per_adv[1])
    throw InvalidArgument("synth: range minimum exceeds maximum");
  if (prompt_len_range[1] == 0) throw InvalidArgument("synth: prompt length must be positive");
  if (!(obfuscation_rate >= 0.0 && obfuscation_rate <= 1.0))
    throw InvalidArgument("synth: obfuscation_rate must lie in [0,1]");
  if (!(mixed_topic_rate >= 0.0 && mixed_topic_rate <= 1.0))
    throw InvalidArgument("synth: mixed_topic_rate must lie in [0,1]");
  if (n_benign + n_adversarial > 0 && benign_vocab_size == 0)
    throw InvalidArgument("synth: benign vocabulary is empty");
  if (n_adversarial > 0 && trigger_vocab_size == 0 && triggers_per_adv[1] > 0)
    throw InvalidArgument("synth: trigger vocabulary is empty");
}

SynthVocabulary synth_vocabulary(const SynthConfig& config) {
  config.validate();
  Rng rng(config.vocab_seed);
  SynthVocabulary vocab;
  build_topics(rng, config.benign_vocab_size, kBenignWordsPerTopic, kBenignConsonants,
               kBenignVowels, vocab.benign, vocab.benign_topic);
  std::vector<std::size_t> trigger_topics;
  build_topics(rng, config.trigger_vocab_size, kTriggerWordsPerTopic, kTriggerConsonants,
               kTriggerVowels, vocab.trigger, trigger_topics);
  vocab.topic_count = vocab.benign_topic.empty() ? 0 : vocab.benign_topic.back() + 1;
  return vocab;
}

std::vector<LabeledExample> synth_corpus(const SynthConfig& config) {
  const auto vocab = synth_vocabulary(config);
  std::vector<std::vector<std::string>> by_topic(vocab.topic_count);
  for (std::size_t i = 0; i < vocab.benign.size(); ++i)
    by_topic[vocab.benign_topic[i]].push_back(vocab.benign[i]);

  std::set<std::string> known(vocab.benign.begin(), vocab.benign.end());
  known.insert(vocab.trigger.begin(), vocab.trigger.end());

  Rng rng(config.seed);
  auto benign_tokens = [&] {
    const auto topics = static_cast<std::int64_t>(by_topic.size());
    const auto first = rng.uniform_int(0, topics - 1);
    const auto len = static_cast<std::size_t>(rng.uniform_int(
        static_cast<std::int64_t>(config.prompt_len_range[0]),
        static_cast<std::int64_t>(config.prompt_len_range[1])));
    std::vector<std::string> tokens;
    for (std::size_t i = 0; i < len; ++i) tokens.push_back(pick(by_topic[static_cast<std::size_t>(first)], rng));
    // A mixed prompt rewrites a third to a half of its positions from a
    // second topic.
    if (topics > 1 && len >= 2 && config.mixed_topic_rate > 0.0 && rng.uniform() < config.mixed_topic_rate) {
      const auto second = (first + rng.uniform_int(1, topics - 1)) % topics;
      const auto lo = static_cast<std::int64_t>((len + 2) / 3), hi = static_cast<std::int64_t>(len / 2);
      auto count = static_cast<std::size_t>(rng.uniform_int(std::min(lo, hi), hi));
      std::vector<std::size_t> positions(len);
      for (std::size_t i = 0; i < len; ++i) positions[i] = i;
      rng.shuffle(positions);
      for (std::size_t i = 0; i < count; ++i)
        tokens[positions[i]] = pick(by_topic[static_cast<std::size_t>(second)], rng);
    }
    return tokens;
  };

  std::vector<LabeledExample> out;
  out.reserve(config.n_benign + config.n_adversarial);
  for (std::size_t i = 0; i < config.n_benign; ++i)
    out.push_back({Prompt::from_text(join_tokens(benign_tokens())), Label::kBenign});
  for (std::size_t i = 0; i < config.n_adversarial; ++i) {
    auto tokens = benign_tokens();
    const auto count = rng.uniform_int(static_cast<std::int64_t>(config.triggers_per_adv[0]),
                                       static_cast<std::int64_t>(config.triggers_per_adv[1]));
    for (std::int64_t k = 0; k < count; ++k) {
      auto word = pick(vocab.trigger, rng);
      if (config.obfuscation_rate > 0.0 && rng.uniform() < config.obfuscation_rate) {
        // Re-draw until the variant is a word neither vocabulary contains.
        std::string variant;
        do {
          variant = obfuscate(word, rng);
        } while (known.contains(variant));
        word = std::move(variant);
      }
      const auto at = rng.uniform_int(0, static_cast<std::int64_t>(tokens.size()));
      tokens.insert(tokens.begin() + at, std::move(word));
    }
    out.push_back({Prompt::from_text(join_tokens(tokens)), Label::kAdversarial});
  }
  rng.shuffle(out);
  for (std::size_t i = 0; i < out.size(); ++i) out[i].prompt.id = "synth-" + std::to_string(i);
  return out;
}

}  // namespace apd
