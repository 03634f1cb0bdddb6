#include "apd/config.hpp"

#include <fstream>
#include <limits>
#include <set>

#include "apd/log.hpp"

namespace apd {

using nlohmann::json;

namespace {

// Reads one JSON object, tracking which keys were consumed so leftovers can
// be reported by their full path.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + ": expected an object");
  }

  bool has(const char* key) const { return j_.contains(key); }

  const json* raw(const char* key) {
    auto it = j_.find(key);
    if (it == j_.end()) return nullptr;
    seen_.insert(key);
    return &*it;
  }

  void read(const char* key, int& out) {
    if (auto v = raw(key)) {
      if (!v->is_number_integer()) throw type_error(key, "an integer");
      const auto x = v->get<std::int64_t>();
      if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max())
        throw ConfigError(child(key) + ": out of range");
      out = static_cast<int>(x);
    }
  }
  void read(const char* key, std::uint64_t& out) {
    if (auto v = raw(key)) {
      if (!v->is_number_unsigned()) throw type_error(key, "a nonnegative integer");
      out = v->get<std::uint64_t>();
    }
  }
  void read(const char* key, double& out) {
    if (auto v = raw(key)) {
      if (!v->is_number()) throw type_error(key, "a number");
      out = v->get<double>();
    }
  }
  void read(const char* key, bool& out) {
    if (auto v = raw(key)) {
      if (!v->is_boolean()) throw type_error(key, "a boolean");
      out = v->get<bool>();
    }
  }
  void read(const char* key, std::string& out) {
    if (auto v = raw(key)) {
      if (!v->is_string()) throw type_error(key, "a string");
      out = v->get<std::string>();
    }
  }
  void read(const char* key, std::array<std::size_t, 2>& out) {
    if (auto v = raw(key)) {
      if (!v->is_array() || v->size() != 2 || !(*v)[0].is_number_unsigned() || !(*v)[1].is_number_unsigned())
        throw type_error(key, "a [min, max] pair of nonnegative integers");
      out = {(*v)[0].get<std::size_t>(), (*v)[1].get<std::size_t>()};
    }
  }

  Section sub(const char* key) {
    const json* v = raw(key);
    return Section(*v, child(key));
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.contains(it.key())) throw ConfigError("unknown config key: " + child(it.key()));
  }

  std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  std::string where() const { return path_.empty() ? "config" : path_; }

 private:
  ConfigError type_error(const char* key, const char* expected) const {
    return ConfigError(child(key) + ": expected " + expected);
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void check(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

EmbedderKind parse_kind(const std::string& s) {
  if (s == "hash") return EmbedderKind::kHash;
  if (s == "remote") return EmbedderKind::kRemote;
  throw ConfigError("embedder.kind: expected \"hash\" or \"remote\", got \"" + s + "\"");
}

SanitizeMode parse_mode(const std::string& s) {
  if (s == "remove") return SanitizeMode::kRemove;
  if (s == "mask") return SanitizeMode::kMask;
  throw ConfigError("sanitize.mode: expected \"remove\" or \"mask\", got \"" + s + "\"");
}

}  // namespace

AidConfig AppConfig::teacher_config() const {
  AidConfig t = aid;
  t.layers = distill.teacher_layers;
  t.hidden = distill.teacher_hidden;
  return t;
}

VaeHyper AppConfig::vae_hyper() const {
  VaeHyper h = vae_train;
  h.seed = seed;
  return h;
}

AidHyper AppConfig::aid_hyper() const {
  AidHyper h = aid_train;
  h.seed = seed + 1;
  return h;
}

AidHyper AppConfig::teacher_hyper() const {
  AidHyper h = aid_train;
  h.seed = seed + 2;
  return h;
}

void AppConfig::validate() const {
  auto wrap = [](const char* section, auto&& f) {
    try {
      f();
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError(std::string(section) + ": " + e.what());
    }
  };
  wrap("embedder", [&] { embedder.validate(); });
  wrap("vae", [&] { vae.validate(); });
  check(vae.d_in == embedder.dim, "vae.d_in must equal embedder.dim");
  check(vae_train.lr > 0.0, "vae.lr must be positive");
  check(vae_train.epochs >= 0, "vae.epochs must be nonnegative");
  check(vae_train.batch >= 1, "vae.batch must be at least 1");
  check(graph.tau >= -1.0 && graph.tau <= 1.0, "graph.tau must lie in [-1, 1]");
  check(graph.k_eigs >= 1, "graph.k_eigs must be at least 1");
  wrap("aid", [&] { aid.validate(); });
  check(aid.latent_dim == vae.k, "aid latent width must equal vae.k");
  check(aid.spectral_dim == spectral_dim(graph.k_eigs), "aid spectral width must match graph.k_eigs");
  check(aid_train.lr > 0.0, "aid.lr must be positive");
  check(aid_train.epochs >= 0, "aid.epochs must be nonnegative");
  check(aid_train.batch >= 1, "aid.batch must be at least 1");
  if (distill.enabled) wrap("distill", [&] { teacher_config().validate(); });
  check(distill.temperature > 0.0, "distill.temperature must be positive");
  check(distill.alpha >= 0.0 && distill.alpha <= 1.0, "distill.alpha must lie in [0, 1]");
  check(sanitize.max_rounds >= 1, "sanitize.max_rounds must be at least 1");
  check(!sanitize.mask_token.empty(), "sanitize.mask_token must not be empty");
  if (synth) wrap("synth", [&] { synth->validate(); });
}

AppConfig parse_config(const json& j) {
  AppConfig c;
  Section root(j, "");
  root.read("seed", c.seed);

  auto section = [&](const char* name, auto&& body) {
    if (!root.has(name)) {
      log::info("config: section '{}' omitted, using defaults", name);
      return;
    }
    Section s = root.sub(name);
    body(s);
    s.finish();
  };

  section("embedder", [&](Section& s) {
    std::string kind = "hash";
    s.read("kind", kind);
    c.embedder.kind = parse_kind(kind);
    s.read("dim", c.embedder.dim);
    s.read("seed", c.embedder.seed);
    s.read("endpoint", c.embedder.endpoint);
    s.read("timeout_ms", c.embedder.timeout_ms);
    s.read("fallback_to_hash", c.embedder.fallback_to_hash);
  });

  c.vae.d_in = c.embedder.dim;
  section("vae", [&](Section& s) {
    s.read("d_in", c.vae.d_in);
    s.read("hidden", c.vae.hidden);
    s.read("k", c.vae.k);
    c.vae.split = c.vae.k / 2;
    s.read("split", c.vae.split);
    s.read("beta", c.vae.beta);
    s.read("input_std", c.vae.input_std);
    s.read("lr", c.vae_train.lr);
    s.read("epochs", c.vae_train.epochs);
    s.read("batch", c.vae_train.batch);
  });

  section("graph", [&](Section& s) {
    s.read("tau", c.graph.tau);
    s.read("k_eigs", c.graph.k_eigs);
  });

  section("aid", [&](Section& s) {
    s.read("layers", c.aid.layers);
    s.read("heads", c.aid.heads);
    s.read("hidden", c.aid.hidden);
    s.read("threshold", c.aid.threshold);
    s.read("lr", c.aid_train.lr);
    s.read("epochs", c.aid_train.epochs);
    s.read("batch", c.aid_train.batch);
    s.read("augment_sides", c.augment_sides);
  });
  c.aid.latent_dim = c.vae.k;
  c.aid.spectral_dim = spectral_dim(c.graph.k_eigs);

  section("distill", [&](Section& s) {
    s.read("enabled", c.distill.enabled);
    s.read("teacher_layers", c.distill.teacher_layers);
    s.read("teacher_hidden", c.distill.teacher_hidden);
    s.read("temperature", c.distill.temperature);
    s.read("alpha", c.distill.alpha);
  });

  section("sanitize", [&](Section& s) {
    std::string mode = "remove";
    s.read("mode", mode);
    c.sanitize.mode = parse_mode(mode);
    s.read("mask_token", c.sanitize.mask_token);
    s.read("max_rounds", c.sanitize.max_rounds);
  });

  if (root.has("synth")) {
    Section s = root.sub("synth");
    SynthConfig sc;
    s.read("benign_vocab_size", sc.benign_vocab_size);
    s.read("trigger_vocab_size", sc.trigger_vocab_size);
    s.read("prompt_len_range", sc.prompt_len_range);
    s.read("triggers_per_adv", sc.triggers_per_adv);
    s.read("obfuscation_rate", sc.obfuscation_rate);
    s.read("mixed_topic_rate", sc.mixed_topic_rate);
    s.read("n_benign", sc.n_benign);
    s.read("n_adversarial", sc.n_adversarial);
    sc.seed = c.seed;
    s.read("seed", sc.seed);
    s.read("vocab_seed", sc.vocab_seed);
    s.finish();
    c.synth = sc;
  }

  root.finish();
  c.validate();
  return c;
}

AppConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

nlohmann::ordered_json to_json(const AppConfig& c) {
  nlohmann::ordered_json j;
  j["seed"] = c.seed;
  j["embedder"] = {{"kind", c.embedder.kind == EmbedderKind::kHash ? "hash" : "remote"},
                   {"dim", c.embedder.dim},
                   {"seed", c.embedder.seed},
                   {"endpoint", c.embedder.endpoint},
                   {"timeout_ms", c.embedder.timeout_ms},
                   {"fallback_to_hash", c.embedder.fallback_to_hash}};
  j["vae"] = {{"d_in", c.vae.d_in},         {"hidden", c.vae.hidden},        {"k", c.vae.k},
              {"split", c.vae.split},       {"beta", c.vae.beta},            {"input_std", c.vae.input_std},
              {"lr", c.vae_train.lr},
              {"epochs", c.vae_train.epochs}, {"batch", c.vae_train.batch}};
  j["graph"] = {{"tau", c.graph.tau}, {"k_eigs", c.graph.k_eigs}};
  j["aid"] = {{"layers", c.aid.layers},       {"heads", c.aid.heads},         {"hidden", c.aid.hidden},
              {"threshold", c.aid.threshold}, {"lr", c.aid_train.lr},         {"epochs", c.aid_train.epochs},
              {"batch", c.aid_train.batch},   {"augment_sides", c.augment_sides}};
  j["distill"] = {{"enabled", c.distill.enabled},
                  {"teacher_layers", c.distill.teacher_layers},
                  {"teacher_hidden", c.distill.teacher_hidden},
                  {"temperature", c.distill.temperature},
                  {"alpha", c.distill.alpha}};
  j["sanitize"] = {{"mode", c.sanitize.mode == SanitizeMode::kRemove ? "remove" : "mask"},
                   {"mask_token", c.sanitize.mask_token},
                   {"max_rounds", c.sanitize.max_rounds}};
  if (c.synth) {
    const auto& s = *c.synth;
    j["synth"] = {{"benign_vocab_size", s.benign_vocab_size},
                  {"trigger_vocab_size", s.trigger_vocab_size},
                  {"prompt_len_range", {s.prompt_len_range[0], s.prompt_len_range[1]}},
                  {"triggers_per_adv", {s.triggers_per_adv[0], s.triggers_per_adv[1]}},
                  {"obfuscation_rate", s.obfuscation_rate},
                  {"mixed_topic_rate", s.mixed_topic_rate},
                  {"n_benign", s.n_benign},
                  {"n_adversarial", s.n_adversarial},
                  {"seed", s.seed},
                  {"vocab_seed", s.vocab_seed}};
  }
  return j;
}

ModelBundle bundle_shell(const AppConfig& c) {
  ModelBundle b;
  b.embedder = c.embedder;
  b.vae_config = c.vae;
  b.vae = VaeParams<double>::zeros(c.vae);
  b.graph = c.graph;
  b.aid_config = c.aid;
  b.aid = AidParams<double>::zeros(c.aid);
  b.sanitize = c.sanitize;
  return b;
}

}  // namespace apd
