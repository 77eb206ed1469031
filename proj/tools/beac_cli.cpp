#include <csignal>
#include <iostream>

#include "CLI11.hpp"
#include "beac/commands.hpp"
#include "beac/config.hpp"
#include "beac/serve.hpp"
#include "beac/train.hpp"

namespace {

beac::app::TeleopServer* g_server = nullptr;

void on_signal(int) {
  if (g_server != nullptr) g_server->stop();
}

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* cmd, Common& c, const std::string& out_help) {
  cmd->add_option("--config", c.config, "Experiment config JSON")->envname("BEAC_CONFIG");
  cmd->add_option("--seed", c.seed, "Base seed override")->envname("BEAC_SEED");
  cmd->add_option("--out", c.out, out_help)->envname("BEAC_OUT");
}

beac::app::ExperimentConfig resolve(const Common& c) {
  return c.config.empty() ? beac::app::ExperimentConfig{} : beac::app::load_config(c.config);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Belief exploration-action cloning on a planar invisible-object push task"};
  app.require_subcommand(1);

  Common collect_opts, train_opts, eval_opts, serve_opts, show_opts;
  std::optional<std::size_t> n_episodes;
  std::string kind;
  std::string train_variant, eval_variant;
  std::optional<int> train_k, eval_k;
  bool beliefs = false, serial = false;
  std::uint16_t port = 8765;
  bool reveal = false;
  double tick_hz = 20.0;
  std::string address = "127.0.0.1";

  auto* collect = app.add_subcommand("collect", "Collect demonstrations into a JSONL dataset");
  add_common(collect, collect_opts, "Dataset path (overrides paths.dataset)");
  collect->add_option("--episodes", n_episodes, "Number of episodes");
  collect->add_option("--kind", kind, "switching or no-switch")->check(CLI::IsMember({"switching", "no-switch"}));

  auto* train = app.add_subcommand("train", "Train checkpoints for every planned run");
  add_common(train, train_opts, "Checkpoint directory (overrides paths.checkpoints)");
  train->add_option("--variant", train_variant, "Variant name, or 'all'")->envname("BEAC_VARIANT");
  train->add_option("--k", train_k, "Regularization horizon")->envname("BEAC_K");

  auto* evaluate = app.add_subcommand("eval", "Roll out checkpoints and write reports");
  add_common(evaluate, eval_opts, "Report directory (overrides paths.reports)");
  evaluate->add_option("--variant", eval_variant, "Variant name, or 'all'")->envname("BEAC_VARIANT");
  evaluate->add_option("--k", eval_k, "Regularization horizon")->envname("BEAC_K");
  evaluate->add_flag("--beliefs", beliefs, "Also export belief vectors of switching variants");
  evaluate->add_flag("--serial", serial, "Run rollouts on one thread");

  auto* serve = app.add_subcommand("serve", "Host the teleoperation WebSocket endpoint");
  add_common(serve, serve_opts, "Dataset that saved episodes are appended to");
  serve->add_option("--port", port, "TCP port (0 picks one)")->envname("BEAC_PORT");
  serve->add_option("--address", address, "Listen address");
  serve->add_option("--tick-hz", tick_hz, "State broadcast and action rate");
  serve->add_flag("--reveal-object", reveal, "Debug: include the object position in state views");

  auto* show = app.add_subcommand("config", "Print the resolved configuration");
  add_common(show, show_opts, "Unused");

  CLI11_PARSE(app, argc, argv);

  auto apply_variant = [](beac::app::ExperimentConfig& cfg, const std::string& v) {
    if (v.empty()) return;
    if (v == "all")
      cfg.variants = beac::model::MethodVariant::table_order();
    else
      cfg.variants = {v};
  };

  try {
    if (collect->parsed()) {
      auto cfg = resolve(collect_opts);
      if (collect_opts.seed) cfg.demo.seed = *collect_opts.seed;
      if (!collect_opts.out.empty()) {
        cfg.paths.dataset = collect_opts.out;
        auto sibling = cfg.paths.dataset;
        sibling.replace_filename(cfg.paths.dataset.stem().string() + "_noswitch" + cfg.paths.dataset.extension().string());
        cfg.paths.noswitch_dataset = sibling;
      }
      if (n_episodes) {
        if (*n_episodes == 0) throw std::invalid_argument("config field 'demo.n_episodes' must be >= 1");
        cfg.demo.n_episodes = *n_episodes;
      }
      if (!kind.empty()) cfg.demo.kind = beac::demo::demonstrator_kind_from_string(kind);
      beac::app::cmd_collect(cfg, std::cout);
    } else if (train->parsed()) {
      auto cfg = resolve(train_opts);
      if (train_opts.seed) cfg.train.seed = *train_opts.seed;
      if (!train_opts.out.empty()) cfg.paths.checkpoints = train_opts.out;
      apply_variant(cfg, train_variant);
      if (train_k) cfg.train.k = *train_k;
      beac::app::cmd_train(cfg, std::cout);
    } else if (evaluate->parsed()) {
      auto cfg = resolve(eval_opts);
      if (eval_opts.seed) cfg.eval.eval_seed = *eval_opts.seed;
      if (!eval_opts.out.empty()) cfg.paths.reports = eval_opts.out;
      apply_variant(cfg, eval_variant);
      if (eval_k) cfg.train.k = *eval_k;
      beac::app::EvalOptions opts;
      opts.export_beliefs = beliefs;
      opts.execution = serial ? beac::eval::Execution::serial : beac::eval::Execution::parallel;
      beac::app::cmd_eval(cfg, opts, std::cout);
    } else if (serve->parsed()) {
      auto cfg = resolve(serve_opts);
      beac::app::ServeOptions opts;
      opts.address = address;
      opts.port = port;
      opts.tick_hz = tick_hz;
      opts.reveal_object = reveal;
      opts.env = cfg.env;
      if (serve_opts.seed) opts.seed = *serve_opts.seed;
      if (!serve_opts.out.empty()) opts.dataset = serve_opts.out;
      beac::app::TeleopServer server(opts);
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cout << "serving on ws://" << address << ":" << server.port() << (reveal ? " (object revealed)" : "")
                << ", saving to " << opts.dataset.string() << std::endl;
      server.run();
      g_server = nullptr;
    } else if (show->parsed()) {
      auto cfg = resolve(show_opts);
      cfg.validate();
      std::cout << nlohmann::json(cfg).dump(2) << '\n';
    }
  } catch (const beac::app::MissingCheckpoints& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const beac::model::TrainingDiverged& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
