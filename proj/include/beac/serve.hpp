#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>

#include "beac/push_env.hpp"

namespace beac::app {

struct ServeOptions {
  std::string address = "127.0.0.1";
  std::uint16_t port = 8765;  // 0 picks a free port
  double tick_hz = 20.0;
  bool reveal_object = false;  // debug only: adds obj_pos to state views
  std::filesystem::path dataset = "data/human.jsonl";
  std::uint64_t seed = 1;
  env::EnvConfig env;
};

// WebSocket endpoint for the teleoperation client. Each connection gets its
// own TeleopSession; all sessions run on one I/O thread, so handling within
// a session is serialized.
class TeleopServer {
 public:
  explicit TeleopServer(ServeOptions options);
  ~TeleopServer();
  TeleopServer(const TeleopServer&) = delete;
  TeleopServer& operator=(const TeleopServer&) = delete;

  // Bound port (useful with port 0). Valid after construction.
  std::uint16_t port() const;
  // Blocks until stop() is called.
  void run();
  // Thread safe.
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace beac::app
