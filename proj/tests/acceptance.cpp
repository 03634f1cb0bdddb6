// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <numeric>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

// Project headers first: the socket headers httplib pulls in define macros
// that clash with Eigen.
#include "apd/archive.hpp"
#include "apd/config.hpp"
#include "apd/semgraph.hpp"
#include "apd/service.hpp"
#include "apd/train.hpp"

#include "httplib.h"
#include "json.hpp"

using namespace apd;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const std::function<Outcome()>& body) {
  Outcome o;
  const auto t0 = Clock::now();
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  if (!o.pass) ++failures;
  std::printf("%s  %2d  %-28s %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), o.detail.c_str(),
              seconds_since(t0));
  std::fflush(stdout);
}

std::string sprintf_str(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Random weighted graph; each pair gets an edge with probability p. When
// connected is set a random spanning path is added.
SemanticGraph random_graph(Rng& rng, Eigen::Index n, double p, bool connected) {
  Matrix a = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      if (rng.uniform() < p) a(i, j) = a(j, i) = 0.05 + 0.95 * rng.uniform();
  if (connected) {
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    for (std::size_t i = 1; i < order.size(); ++i) {
      const double w = 0.05 + 0.95 * rng.uniform();
      a(order[i - 1], order[i]) = a(order[i], order[i - 1]) = w;
    }
  }
  return SemanticGraph::from_adjacency(a);
}

// Union-find component count, independent of the library's own.
std::size_t component_count(const SemanticGraph& g) {
  std::vector<std::size_t> parent(static_cast<std::size_t>(g.n()));
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (Eigen::Index i = 0; i < g.n(); ++i)
    for (Eigen::Index j = i + 1; j < g.n(); ++j)
      if (g.adjacency(i, j) > 0) parent[find(static_cast<std::size_t>(i))] = find(static_cast<std::size_t>(j));
  std::size_t roots = 0;
  for (std::size_t i = 0; i < parent.size(); ++i) roots += find(i) == i;
  return roots;
}

Outcome cheeger_suite() {
  const auto t0 = Clock::now();
  Rng rng(1001);
  int lower_fail = 0, upper_violations = 0;
  const int graphs = 500;
  for (int t = 0; t < graphs; ++t) {
    const auto n = static_cast<Eigen::Index>(rng.uniform_int(3, 8));
    const auto g = random_graph(rng, n, 0.2 + 0.6 * rng.uniform(), true);
    const double lambda2 = spectral_features(g).lambda2;
    const double h = cheeger_bruteforce(g);
    const auto b = cheeger_bounds(lambda2);
    if (!(b.lower <= h + 1e-9)) ++lower_fail;
    if (h > b.upper + 1e-9) ++upper_violations;
  }
  const double secs = seconds_since(t0);
  return {lower_fail == 0 && secs < 30.0,
          sprintf_str("%d graphs, lower-bound failures %d, upper-bound violations %.3f (not asserted), %.2fs", graphs,
              lower_fail, static_cast<double>(upper_violations) / graphs, secs)};
}

Outcome eigensolver_suite() {
  Rng rng(2002);
  int bad = 0;
  double worst_residual = 0;
  for (int t = 0; t < 200; ++t) {
    const auto n = static_cast<Eigen::Index>(rng.uniform_int(1, 32));
    const auto g = random_graph(rng, n, 0.05 + 0.4 * rng.uniform(), t % 3 == 0);
    const Matrix l = laplacian(g);
    const auto eig = sym_eigen(l);
    const double scale = std::max(1.0, inf_norm(l));
    bool ok = true;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double r = (l * eig.vectors.col(i) - eig.values(i) * eig.vectors.col(i)).cwiseAbs().maxCoeff();
      worst_residual = std::max(worst_residual, r / scale);
      ok = ok && r <= 1e-8 * scale;
      if (i > 0) ok = ok && eig.values(i) >= eig.values(i - 1);
    }
    const double trace = l.trace();
    ok = ok && std::abs(eig.values.sum() - trace) <= 1e-8 * std::max(1.0, std::abs(trace));
    const auto zeros = static_cast<std::size_t>((eig.values.array().abs() <= 1e-8 * scale).count());
    ok = ok && zeros == component_count(g);
    if (!ok) ++bad;
  }
  return {bad == 0, sprintf_str("200 graphs, %d failing, worst scaled residual %.2e", bad, worst_residual)};
}

// Mean BCE of the detector evaluated in extended precision, relative to its
// value at `base`. Shifting by a constant leaves the gradient unchanged, and
// the small differences central differences take survive the cast to double.
std::function<double(const Vector&)> extended_bce(const Matrix& lat, const Matrix& spec, const Vector& y,
                                                  const AidParams<double>& params, const AidConfig& c) {
  using Ext = long double;
  const MatrixX<Ext> lat_x = lat.cast<Ext>(), spec_x = spec.cast<Ext>();
  auto loss = [=](const Vector& flat) {
    auto q = params;
    nn::unflatten(q, flat);
    const MatrixX<Ext> logits = aid_logits<Ext>(lat_x, spec_x, q.cast<Ext>(), c, nullptr);
    Ext sum = 0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      const Ext p = std::clamp<Ext>(1 / (1 + std::exp(-logits(i, 0))), kProbClamp, 1 - kProbClamp);
      sum -= y(i) == 1.0 ? std::log(p) : std::log(1 - p);
    }
    return sum / static_cast<Ext>(y.size());
  };
  const Ext base = loss(nn::flatten(params));
  return [=](const Vector& flat) { return static_cast<double>(loss(flat) - base); };
}

Outcome gradient_suite() {
  double worst_vae = 0, worst_aid = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Rng rng(seed * 31);
    VaeConfig c;
    c.d_in = static_cast<int>(rng.uniform_int(3, 10));
    c.hidden = static_cast<int>(rng.uniform_int(3, 8));
    c.k = static_cast<int>(rng.uniform_int(2, 8));
    c.split = c.k / 2 > 0 ? c.k / 2 : 1;
    c.beta = 2.0 * rng.uniform();
    auto p = VaeParams<double>::init(c, rng);
    p.visit_trainable([&](std::string_view, nn::Tensor<double>& t) {
      for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] += 0.1 * rng.normal();
    });
    rng.fill_normal(p.input_mean);
    for (Eigen::Index i = 0; i < c.d_in; ++i) p.input_scale(0, i) = 0.5 + rng.uniform();
    const auto batch = static_cast<Eigen::Index>(rng.uniform_int(1, 5));
    Matrix x(batch, c.d_in), eps(batch, c.k);
    rng.fill_normal(x);
    rng.fill_normal(eps);
    auto g = VaeParams<double>::zeros(c);
    vae_batch_loss<double>(x, p, c, eps, &g);
    auto f = [&](const Vector& flat) {
      auto q = p;
      nn::unflatten(q, flat);
      return vae_batch_loss<double>(x, q, c, eps).loss;
    };
    worst_vae = std::max(worst_vae, grad_check(f, nn::flatten(g), nn::flatten(p), 1e-5));
  }
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Rng rng(seed * 37);
    AidConfig c;
    c.layers = static_cast<int>(rng.uniform_int(1, 2));
    c.heads = seed % 2 == 0 ? 2 : 1;
    c.hidden = 4 * static_cast<int>(rng.uniform_int(1, 2));
    c.latent_dim = static_cast<int>(rng.uniform_int(2, 6));
    c.spectral_dim = static_cast<int>(rng.uniform_int(2, 6));
    auto p = AidParams<double>::init(c, rng);
    p.visit_trainable([&](std::string_view, nn::Tensor<double>& t) {
      for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] += 0.1 * rng.normal();
    });
    const auto batch = static_cast<Eigen::Index>(rng.uniform_int(2, 5));
    Matrix lat(batch, c.latent_dim), spec(batch, c.spectral_dim);
    rng.fill_normal(lat);
    rng.fill_normal(spec);
    Vector y(batch);
    for (Eigen::Index i = 0; i < batch; ++i) y(i) = static_cast<double>(i % 2);

    detail::ForwardCache<double> cache;
    const Matrix logits = aid_logits<double>(lat, spec, p, c, &cache);
    Vector dlogits;
    detector_objective(logits.col(0), y, nullptr, 1.0, 1.0, dlogits);
    auto g = AidParams<double>::zeros(c);
    aid_backward<double>(cache, dlogits, p, c, g);
    worst_aid = std::max(worst_aid, grad_check(extended_bce(lat, spec, y, p, c), nn::flatten(g), nn::flatten(p), 1e-5));
  }
  return {worst_vae <= 1e-5 && worst_aid <= 1e-5,
          sprintf_str("5+5 configs, max relative error VAE %.2e, detector %.2e", worst_vae, worst_aid)};
}

Outcome kl_suite() {
  Rng rng(4004);
  const int draws = 100000;
  int outside = 0;
  double worst_z = 0;
  for (int t = 0; t < 10; ++t) {
    const auto d = static_cast<Eigen::Index>(rng.uniform_int(1, 6));
    Vector mu(d), lv(d);
    for (Eigen::Index i = 0; i < d; ++i) {
      mu(i) = 1.5 * rng.normal();
      lv(i) = -2.0 + 4.0 * rng.uniform();
    }
    const double closed = kl_diag_gauss(mu, lv);
    // log q(z) - log p(z) with z = mu + sigma eps; the 2 pi terms cancel.
    double sum = 0, sum_sq = 0;
    Vector eps(d);
    for (int s = 0; s < draws; ++s) {
      rng.fill_normal(eps);
      const Vector z = reparameterize(mu, lv, eps);
      const double v = 0.5 * (z.squaredNorm() - eps.squaredNorm() - lv.sum());
      sum += v;
      sum_sq += v * v;
    }
    const double mean = sum / draws;
    const double se = std::sqrt(std::max(0.0, sum_sq / draws - mean * mean) / draws);
    const double z = std::abs(mean - closed) / se;
    worst_z = std::max(worst_z, z);
    if (z > 3.0) ++outside;
  }
  const double zero = kl_diag_gauss(Vector::Zero(3), Vector::Zero(3));
  const double half = kl_diag_gauss(Vector::Ones(1), Vector::Zero(1));
  const bool exact = zero == 0.0 && std::abs(half - 0.5) <= 1e-15;
  return {outside == 0 && exact,
          sprintf_str("10 pairs x 1e5 draws, %d outside 3 SE (worst %.2f SE), KL(0,0)=%g, KL(1,0)=%g", outside, worst_z,
              zero, half)};
}

Outcome mi_suite() {
  AppConfig c;
  SynthConfig s;
  s.n_benign = 500;
  s.n_adversarial = 500;
  s.seed = 21;
  const auto split = split_dataset(synth_corpus(s), {0.7, 0.3, 0.0}, 21);
  const auto train = extract_features(split.train, c.embedder, c.graph);
  const auto val = extract_features(split.val, c.embedder, c.graph);
  // The joint latent is too wide for the estimator on one code per prompt,
  // so each validation prompt contributes several posterior samples.
  const int draws = 5;
  std::vector<double> before, after;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto mi = [&](const VaeParams<double>& p) {
      Rng rng(seed + 100);
      const Matrix z = sample_latents(val.pooled, p, draws, rng);
      return estimate_mi(z.leftCols(c.vae.split), z.rightCols(c.vae.k - c.vae.split));
    };
    VaeHyper h = c.vae_train;
    h.seed = seed;
    h.epochs = 0;
    before.push_back(mi(train_vae(train.pooled, c.vae, h).params));
    h.epochs = std::max(50, c.vae_train.epochs);
    after.push_back(mi(train_vae(train.pooled, c.vae, h).params));
  }
  auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
  };
  const double m0 = median(before), m1 = median(after);
  return {m1 < m0, sprintf_str("median MI over 5 seeds: init %.4f, after training %.4f nats", m0, m1)};
}

// Shared by the detection criteria.
struct DetectionRun {
  AppConfig config;
  DatasetSplit split;
  std::set<std::string> triggers;
  ModelBundle bundle;
  double train_seconds = 0;
  MetricsReport test;
};

const DetectionRun& detection_run() {
  static const DetectionRun run = [] {
    DetectionRun r;
    r.config.seed = 7;
    SynthConfig s;
    s.n_benign = 1000;
    s.n_adversarial = 1000;
    s.seed = 3;
    const auto vocab = synth_vocabulary(s);
    r.triggers = {vocab.trigger.begin(), vocab.trigger.end()};
    r.split = split_dataset(synth_corpus(s), {0.7, 0.15, 0.15}, 3);
    const auto t0 = Clock::now();
    r.bundle = train_bundle(r.split.train, r.config).bundle;
    r.train_seconds = seconds_since(t0);
    r.test = evaluate(r.split.test, r.bundle, &r.triggers);
    return r;
  }();
  return run;
}

Outcome detection_suite() {
  const auto& r = detection_run();
  const auto& m = r.test;
  if (!m.ada || !m.fpr) return {false, "ADA or FPR undefined"};
  const bool ok = *m.ada >= 0.95 && *m.fpr <= 0.05 && r.train_seconds <= 600.0;
  return {ok, sprintf_str("train %zu / val %zu / test %zu: ADA %.4f, FPR %.4f, training %.0fs", r.split.train.size(),
                  r.split.val.size(), r.split.test.size(), *m.ada, *m.fpr, r.train_seconds)};
}

Outcome hor_suite() {
  const auto& m = detection_run().test;
  if (!m.hor) return {false, "HOR undefined"};
  return {*m.hor >= 0.85, sprintf_str("HOR %.4f over %zu adversarial prompts (%zu neutralized, %zu rejected)", *m.hor,
                              m.adversarial, m.neutralized, m.rejected)};
}

Outcome novel_attack_suite() {
  const auto& r = detection_run();
  SynthConfig s;
  s.n_benign = 0;
  s.n_adversarial = 300;
  s.obfuscation_rate = 1.0;
  s.seed = 99;
  const auto m = evaluate(synth_corpus(s), r.bundle);
  if (!m.ada) return {false, "ADA undefined"};
  return {*m.ada >= 0.80, sprintf_str("ADA %.4f on %zu obfuscated adversarial prompts", *m.ada, m.adversarial)};
}

Outcome latency_suite() {
  const auto& r = detection_run();
  std::vector<double> ms;
  for (const auto& ex : r.split.test) {
    if (ex.prompt.tokens.size() > 64) continue;
    ms.push_back(screen(ex.prompt, r.bundle).latency_ms);
  }
  std::sort(ms.begin(), ms.end());
  const double median = ms[(ms.size() - 1) / 2];
  return {median <= 50.0, sprintf_str("median %.2f ms, max %.2f ms over %zu prompts", median, ms.back(), ms.size())};
}

Outcome pac_suite() {
  const double value = pac_bound(14700, 1000, 0.05, 0.058).hoeffding;
  bool mono = true;
  int points = 0;
  for (double m : {50.0, 100.0, 300.0, 1e3, 3e3, 1e4, 3e4, 1e5, 1e6, 1e7}) {
    for (double ln_h : {0.0, 1.0, 5.0, 10.0, 50.0, 100.0, 500.0, 1e3, 5e3, 1e4}) {
      ++points;
      for (double delta : {0.01, 0.05, 0.2}) {
        const auto b = pac_bound(m, ln_h, delta, 0.05);
        const auto more_data = pac_bound(m * 2, ln_h, delta, 0.05);
        const auto bigger_class = pac_bound(m, ln_h + 1, delta, 0.05);
        const auto looser_conf = pac_bound(m, ln_h, delta * 2, 0.05);
        mono = mono && more_data.hoeffding < b.hoeffding && more_data.occam < b.occam;
        mono = mono && bigger_class.hoeffding > b.hoeffding && bigger_class.occam > b.occam;
        mono = mono && looser_conf.hoeffding < b.hoeffding && looser_conf.occam < b.occam;
      }
    }
  }
  return {std::abs(value - 0.24271) <= 1e-5 && mono,
          sprintf_str("bound %.6f, monotone over %d grid points: %s", value, points, mono ? "yes" : "no")};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

bool same_results(const ScreenResult& a, const ScreenResult& b) {
  return a.adversarial == b.adversarial && a.score == b.score && a.flagged_tokens == b.flagged_tokens &&
         a.sanitized_text == b.sanitized_text && a.rounds == b.rounds;
}

Outcome determinism_suite() {
  // Every training stage, distillation included, at reduced width.
  AppConfig c;
  c.seed = 13;
  c.embedder.dim = 32;
  c.vae.d_in = 32;
  c.vae.hidden = 32;
  c.vae.k = 16;
  c.vae.split = 8;
  c.vae_train.epochs = 20;
  c.aid.layers = 1;
  c.aid.heads = 2;
  c.aid.hidden = 16;
  c.aid.latent_dim = 16;
  c.aid_train.epochs = 10;
  c.distill.enabled = true;
  c.distill.teacher_layers = 2;
  c.distill.teacher_hidden = 32;
  SynthConfig s;
  s.n_benign = 150;
  s.n_adversarial = 150;
  s.seed = 13;
  c.synth = s;

  const fs::path root = fs::temp_directory_path() / "apd_acceptance";
  fs::remove_all(root);
  std::vector<std::string> weights, manifests;
  for (int run = 0; run < 2; ++run) {
    const auto dir = root / ("run" + std::to_string(run));
    save_archive(dir, c, train_bundle(synth_corpus(*c.synth), c).bundle);
    weights.push_back(slurp(dir / "weights.bin"));
    manifests.push_back(slurp(dir / "manifest.json"));
  }
  const bool bytes = weights[0] == weights[1] && manifests[0] == manifests[1] && !weights[0].empty();

  // Screening: the detection bundle twice in memory, and a reloaded copy of it.
  const auto& r = detection_run();
  save_archive(root / "detector", r.config, r.bundle);
  const auto reloaded = load_archive(root / "detector").bundle;
  std::size_t unstable = 0;
  for (const auto& ex : r.split.test) {
    const auto a = screen(ex.prompt, r.bundle);
    if (!same_results(a, screen(ex.prompt, r.bundle)) || !same_results(a, screen(ex.prompt, reloaded))) ++unstable;
  }
  fs::remove_all(root);
  return {bytes && unstable == 0, sprintf_str("archives byte-identical: %s (%zu weight bytes), unstable screens %zu of %zu",
                                      bytes ? "yes" : "no", weights[0].size(), unstable, r.split.test.size())};
}

class RunningServer {
 public:
  explicit RunningServer(std::shared_ptr<const ModelBundle> bundle) : server_(std::move(bundle)) {
    port_ = server_.bind("127.0.0.1", 0);
    thread_ = std::thread([this] { server_.run(); });
    while (!server_.running()) std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  ~RunningServer() {
    server_.stop();
    thread_.join();
  }
  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port_);
    c.set_read_timeout(60, 0);
    return c;
  }

 private:
  ScreeningServer server_;
  int port_ = 0;
  std::thread thread_;
};

bool valid_result(const json& j) {
  if (!j.is_object() || j.size() != 5) return false;
  if (!j.contains("adversarial") || !j["adversarial"].is_boolean()) return false;
  if (!j.contains("score") || !j["score"].is_number()) return false;
  if (!j.contains("latency_ms") || !j["latency_ms"].is_number()) return false;
  if (!j.contains("sanitized_text") || !(j["sanitized_text"].is_string() || j["sanitized_text"].is_null()))
    return false;
  if (!j.contains("flagged_tokens") || !j["flagged_tokens"].is_array()) return false;
  return std::all_of(j["flagged_tokens"].begin(), j["flagged_tokens"].end(),
                     [](const json& t) { return t.is_string(); });
}

Outcome service_suite() {
  const auto& r = detection_run();
  RunningServer server(std::make_shared<const ModelBundle>(r.bundle));
  auto c = server.client();
  std::vector<std::string> problems;

  auto health = c.Get("/healthz");
  if (!health || health->status != 200 || json::parse(health->body) != json{{"status", "ok"}})
    problems.push_back("healthz");
  for (const char* bad : {"{}", "not json", "[1,2]", R"({"text": 5})", R"({"txt": "a"})"}) {
    auto res = c.Post("/v1/screen", bad, "application/json");
    if (!res || res->status != 400 || !json::parse(res->body)["error"].is_string())
      problems.push_back(std::string("malformed ") + bad);
  }
  auto empty = c.Post("/v1/screen", R"({"text": "  ?!  "})", "application/json");
  if (!empty || empty->status != 422 || json::parse(empty->body) != json{{"error", "empty prompt"}})
    problems.push_back("empty prompt");

  std::vector<std::string> texts;
  for (std::size_t i = 0; i < r.split.test.size() && texts.size() < 64; i += 4)
    texts.push_back(r.split.test[i].prompt.text);
  texts.push_back("hello world");

  auto strip = [](json j) {
    j.erase("latency_ms");
    return j;
  };
  std::vector<json> serial;
  for (const auto& t : texts) {
    auto res = c.Post("/v1/screen", json{{"text", t}}.dump(), "application/json");
    if (!res || res->status != 200) {
      problems.push_back("serial request failed");
      serial.push_back(json());
      continue;
    }
    const auto j = json::parse(res->body);
    if (!valid_result(j)) problems.push_back("invalid result schema");
    serial.push_back(strip(j));
  }
  if (serial.back()["adversarial"] != false) problems.push_back("hello world flagged");

  const int clients = 32;
  std::atomic<int> mismatches{0}, errors{0};
  std::vector<std::thread> threads;
  for (int k = 0; k < clients; ++k) {
    threads.emplace_back([&, k] {
      auto cl = server.client();
      for (std::size_t i = 0; i < texts.size(); ++i) {
        const std::size_t idx = (i + static_cast<std::size_t>(k) * 3) % texts.size();
        auto res = cl.Post("/v1/screen", json{{"text", texts[idx]}}.dump(), "application/json");
        if (!res || res->status != 200) {
          ++errors;
          continue;
        }
        if (strip(json::parse(res->body)) != serial[idx]) ++mismatches;
      }
    });
  }
  for (auto& t : threads) t.join();
  if (errors > 0) problems.push_back(sprintf_str("%d concurrent request errors", errors.load()));
  if (mismatches > 0) problems.push_back(sprintf_str("%d concurrent mismatches", mismatches.load()));

  std::string detail = sprintf_str("%d clients x %zu requests", clients, texts.size());
  for (const auto& p : problems) detail += "; " + p;
  return {problems.empty(), detail};
}

}  // namespace

int main() {
  report(1, "Cheeger lower bound", cheeger_suite);
  report(2, "eigensolver", eigensolver_suite);
  report(3, "gradient checks", gradient_suite);
  report(4, "KL closed form", kl_suite);
  report(5, "latent MI trend", mi_suite);
  report(6, "detection ADA/FPR", detection_suite);
  report(7, "harmful-output reduction", hor_suite);
  report(8, "obfuscated triggers", novel_attack_suite);
  report(9, "screen latency", latency_suite);
  report(10, "PAC arithmetic", pac_suite);
  report(11, "determinism", determinism_suite);
  report(12, "service conformance", service_suite);
  std::printf("%d of 12 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
