#pragma once

#include <spdlog/spdlog.h>

namespace sgswarm {

/// Applies the SGSWARM_LOG environment variable (trace/debug/info/warn/error/off)
/// to the default logger. Unset or unknown values leave the level at `warn`.
void configure_logging();

}  // namespace sgswarm
