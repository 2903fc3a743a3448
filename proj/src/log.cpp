#include "sgswarm/log.hpp"

#include <cstdlib>
#include <string>

namespace sgswarm {

void configure_logging() {
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("SGSWARM_LOG")) {
    const auto level = spdlog::level::from_str(env);
    if (level != spdlog::level::off || std::string(env) == "off") spdlog::set_level(level);
  }
}

}  // namespace sgswarm
