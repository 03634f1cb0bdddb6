#pragma once

#include <memory>
#include <string>

#include "json.hpp"

#include "apd/pipeline.hpp"

namespace apd {

/// Wire form of a screen result, shared by the CLI and the HTTP service:
/// adversarial, score, flagged_tokens (token strings), sanitized_text
/// (string or null), latency_ms.
nlohmann::ordered_json screen_result_json(const Prompt& prompt, const ScreenResult& result);

/// Metrics with undefined rates as null.
nlohmann::ordered_json metrics_json(const MetricsReport& report);

/// HTTP/1.1 JSON screening endpoint over an immutable bundle.
///   POST /v1/screen  {"text": string}
///   GET  /healthz    {"status": "ok"}
class ScreeningServer {
 public:
  explicit ScreeningServer(std::shared_ptr<const ModelBundle> bundle);
  ~ScreeningServer();
  ScreeningServer(const ScreeningServer&) = delete;
  ScreeningServer& operator=(const ScreeningServer&) = delete;

  /// Binds the listening socket; port 0 picks a free port. Returns the
  /// bound port. Throws on failure.
  int bind(const std::string& host, int port);

  /// Serves until stop(); in-flight requests finish before it returns.
  void run();
  void stop();
  bool running() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Binds, serves until SIGINT or SIGTERM, then shuts down gracefully.
void serve(std::shared_ptr<const ModelBundle> bundle, const std::string& host, int port);

}  // namespace apd
