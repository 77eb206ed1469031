#include <cmath>
#include <filesystem>

#include "beac/oracle.hpp"
#include "beac/rng.hpp"
#include "beac/teleop.hpp"

namespace beac::app {

using nlohmann::json;

namespace {

json pair(env::Vec2 v) { return json::array({v.x, v.y}); }

double finite_number(const json& msg, const char* key) {
  if (!msg.contains(key) || !msg.at(key).is_number())
    throw std::invalid_argument(std::string("field '") + key + "' must be a number");
  const double v = msg.at(key).get<double>();
  if (!std::isfinite(v)) throw std::invalid_argument(std::string("field '") + key + "' must be finite");
  return v;
}

}  // namespace

json error_message(const std::string& what) { return json{{"v", kWireVersion}, {"type", "error"}, {"message", what}}; }

TeleopSession::TeleopSession(env::EnvConfig config, std::filesystem::path dataset_path, bool reveal_object,
                             std::uint64_t seed)
    : config_(config), dataset_path_(std::move(dataset_path)), reveal_(reveal_object), base_seed_(seed), env_(config) {
  reset(std::nullopt);
}

bool TeleopSession::finished() const { return env_.is_success() || env_.at_horizon(); }

json TeleopSession::reset(std::optional<std::uint64_t> seed) {
  episode_seed_ = seed ? *seed : mix_seed(base_seed_, episode_counter_);
  ++episode_counter_;
  trajectory_ = demo::Trajectory{};
  trajectory_.seed = episode_seed_;
  trajectory_.observations.push_back(env_.reset(episode_seed_));
  mode_ = demo::Mode::exploration;
  pending_.reset();
  return json{{"v", kWireVersion}, {"type", "ack"}, {"for", "reset"}, {"seed", episode_seed_}};
}

json TeleopSession::save() {
  if (trajectory_.steps() == 0) return error_message("cannot save an episode with zero steps");
  trajectory_.success = env_.is_success();
  demo::Dataset ds;
  if (std::filesystem::exists(dataset_path_)) {
    ds = demo::read_dataset(dataset_path_);
    if (!(ds.env_config == config_))
      return error_message("dataset " + dataset_path_.string() + " was recorded with a different env config");
  } else {
    ds.env_config = config_;
    ds.kind = demo::DemonstratorKind::human;
    ds.provenance = json{{"command", "serve"}, {"config", {{"env", config_}}}};
  }
  ds.trajectories.push_back(trajectory_);
  ds.refresh_stats();
  if (dataset_path_.has_parent_path()) std::filesystem::create_directories(dataset_path_.parent_path());
  demo::write_dataset(dataset_path_, ds);
  json reply{{"v", kWireVersion},
             {"type", "saved"},
             {"episode_id", ds.trajectories.size() - 1},
             {"success", trajectory_.success},
             {"steps", trajectory_.steps()}};
  reset(std::nullopt);
  return reply;
}

json TeleopSession::handle_text(const std::string& text) {
  json msg;
  try {
    msg = json::parse(text);
  } catch (const json::parse_error&) {
    return error_message("malformed message: not JSON");
  }
  return handle(msg);
}

json TeleopSession::handle(const json& msg) {
  if (!msg.is_object() || !msg.contains("type") || !msg.at("type").is_string())
    return error_message("malformed message: expected an object with a string 'type'");
  if (msg.contains("v") && msg.at("v") != kWireVersion)
    return error_message("unsupported protocol version; expected " + std::to_string(kWireVersion));
  const auto type = msg.at("type").get<std::string>();
  try {
    if (type == "action") {
      env::Action a{finite_number(msg, "dx"), finite_number(msg, "dy")};
      pending_ = a;
      return nullptr;
    }
    if (type == "toggle_mode") {
      mode_ = mode_ == demo::Mode::exploration ? demo::Mode::task : demo::Mode::exploration;
      return json{{"v", kWireVersion},
                  {"type", "ack"},
                  {"for", "toggle_mode"},
                  {"mode", static_cast<int>(mode_)},
                  {"step", trajectory_.steps()}};
    }
    if (type == "reset") {
      std::optional<std::uint64_t> seed;
      if (msg.contains("seed")) {
        const auto& v = msg.at("seed");
        if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0))
          return error_message("field 'seed' must be a non-negative integer");
        seed = msg.at("seed").get<std::uint64_t>();
      }
      return reset(seed);
    }
    if (type == "save_episode") return save();
  } catch (const std::invalid_argument& e) {
    return error_message(std::string("malformed message: ") + e.what());
  } catch (const std::exception& e) {
    return error_message(e.what());
  }
  return error_message("unknown message type '" + type + "'");
}

json TeleopSession::tick() {
  if (pending_ && !finished()) {
    const auto applied = env::clip_action(*pending_, config_.a_max);
    trajectory_.observations.push_back(env_.step(applied));
    trajectory_.actions.push_back(applied);
    trajectory_.modes.push_back(mode_);
  }
  pending_.reset();
  return view();
}

json TeleopSession::view() const {
  const auto& o = env_.observation();
  json j{{"v", kWireVersion},
         {"type", "state"},
         {"ee_pos", pair(o.ee_pos)},
         {"ee_vel", pair(o.ee_vel)},
         {"contact_force", pair(o.contact_force)},
         {"goal_pos", pair(config_.goal_pos)},
         {"step", env_.step_count()},
         {"mode", static_cast<int>(mode_)},
         {"success", env_.is_success()},
         {"done", finished()},
         {"episode", episode_counter_ - 1}};
  if (reveal_) j["obj_pos"] = pair(env::OracleAccess::oracle_state(env_).obj_pos);
  return j;
}

}  // namespace beac::app
