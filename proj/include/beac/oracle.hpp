#pragma once

#include <cstdint>

#include "beac/push_env.hpp"

namespace beac::env {

// Privileged access to the latent state. Only the demonstrator (and the
// teleop server's explicit debug-reveal mode) include this header; the
// evaluation library never does.
class OracleAccess {
 public:
  static EnvState oracle_state(const PushEnv& env);
  // Process-wide number of oracle_state calls, for isolation tests.
  static std::uint64_t call_count();
};

}  // namespace beac::env
