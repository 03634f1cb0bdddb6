#include "apd/service.hpp"

#include <csignal>
#include <pthread.h>
#include <thread>

#include "httplib.h"

#include "apd/log.hpp"

namespace apd {

nlohmann::ordered_json screen_result_json(const Prompt& prompt, const ScreenResult& result) {
  nlohmann::ordered_json j;
  j["adversarial"] = result.adversarial;
  j["score"] = result.score;
  auto flagged = nlohmann::ordered_json::array();
  for (auto pos : result.flagged_tokens) flagged.push_back(prompt.tokens.at(pos));
  j["flagged_tokens"] = std::move(flagged);
  if (result.sanitized_text) j["sanitized_text"] = *result.sanitized_text;
  else j["sanitized_text"] = nullptr;
  j["latency_ms"] = result.latency_ms;
  return j;
}

nlohmann::ordered_json metrics_json(const MetricsReport& r) {
  auto rate = [](const std::optional<double>& v) -> nlohmann::ordered_json {
    if (v) return *v;
    return nullptr;
  };
  nlohmann::ordered_json j;
  j["ada"] = rate(r.ada);
  j["fpr"] = rate(r.fpr);
  j["hor"] = rate(r.hor);
  j["latency_median_ms"] = r.latency_median_ms;
  j["latency_p95_ms"] = r.latency_p95_ms;
  j["counts"] = {{"adversarial", r.adversarial},
                 {"benign", r.benign},
                 {"flagged_adversarial", r.flagged_adversarial},
                 {"flagged_benign", r.flagged_benign},
                 {"neutralized", r.neutralized},
                 {"rejected", r.rejected}};
  j["errors"] = r.errors;
  return j;
}

namespace {

void reply(httplib::Response& res, int status, const nlohmann::ordered_json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void reply_error(httplib::Response& res, int status, const std::string& message) {
  reply(res, status, nlohmann::ordered_json{{"error", message}});
}

}  // namespace

struct ScreeningServer::Impl {
  std::shared_ptr<const ModelBundle> bundle;
  httplib::Server server;
};

ScreeningServer::ScreeningServer(std::shared_ptr<const ModelBundle> bundle) : impl_(std::make_unique<Impl>()) {
  if (!bundle) throw InvalidArgument("service: no model bundle");
  bundle->validate();
  impl_->bundle = std::move(bundle);
  auto& svr = impl_->server;
  const auto models = impl_->bundle;

  svr.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
    reply(res, 200, nlohmann::ordered_json{{"status", "ok"}});
  });

  svr.Post("/v1/screen", [models](const httplib::Request& req, httplib::Response& res) {
    const auto body = nlohmann::json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.is_object()) return reply_error(res, 400, "body must be a JSON object");
    const auto it = body.find("text");
    if (it == body.end() || !it->is_string()) return reply_error(res, 400, "field \"text\" must be a string");
    const auto prompt = Prompt::from_text(it->get<std::string>());
    if (prompt.tokens.empty()) return reply_error(res, 422, "empty prompt");
    try {
      reply(res, 200, screen_result_json(prompt, screen(prompt, *models)));
    } catch (const std::exception& e) {
      log::error("screen failed: {}", e.what());
      reply_error(res, 500, e.what());
    }
  });

  svr.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr) {
    reply_error(res, 500, "internal error");
  });
}

ScreeningServer::~ScreeningServer() { stop(); }

int ScreeningServer::bind(const std::string& host, int port) {
  int bound = port;
  if (port == 0) bound = impl_->server.bind_to_any_port(host);
  else if (!impl_->server.bind_to_port(host, port)) bound = -1;
  if (bound <= 0) throw Error("service: cannot bind " + host + ":" + std::to_string(port));
  return bound;
}

void ScreeningServer::run() {
  if (!impl_->server.listen_after_bind()) throw Error("service: listen failed");
}

void ScreeningServer::stop() {
  if (impl_) impl_->server.stop();
}

bool ScreeningServer::running() const { return impl_->server.is_running(); }

void serve(std::shared_ptr<const ModelBundle> bundle, const std::string& host, int port) {
  ScreeningServer server(std::move(bundle));
  const int bound = server.bind(host, port);

  // Block the shutdown signals here so worker threads inherit the mask and a
  // dedicated thread can sigwait on them.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  std::thread watcher([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    log::info("received signal {}, draining requests", sig);
    server.stop();
  });

  log::info("serving on {}:{}", host, bound);
  std::exception_ptr failure;
  try {
    server.run();
  } catch (...) {
    failure = std::current_exception();
  }
  // Wake the watcher if the server stopped on its own.
  pthread_kill(watcher.native_handle(), SIGTERM);
  watcher.join();
  log::info("server stopped");
  if (failure) std::rethrow_exception(failure);
}

}  // namespace apd
