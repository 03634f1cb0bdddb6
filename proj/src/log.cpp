#include "apd/log.hpp"

#include <cstdlib>
#include <string_view>

#include <spdlog/sinks/stdout_color_sinks.h>

namespace apd::log {

void init_from_env() {
  auto logger = spdlog::get("apd");
  if (!logger) logger = spdlog::stderr_color_mt("apd");
  spdlog::set_default_logger(logger);
  const char* env = std::getenv("APD_LOG");
  const std::string_view level = env ? env : "info";
  if (level == "error") spdlog::set_level(spdlog::level::err);
  else if (level == "debug") spdlog::set_level(spdlog::level::debug);
  else spdlog::set_level(spdlog::level::info);
}

}  // namespace apd::log
