#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fedsentry/config.hpp"
#include "fedsentry/csv.hpp"
#include "fedsentry/runner.hpp"

namespace {

using fedsentry::ExperimentConfig;

struct CommonArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::string> transport;
  std::optional<std::uint32_t> workers;
  std::optional<std::uint32_t> rounds;
  std::optional<std::uint32_t> clients;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path,
                  "JSON experiment config (defaults apply when omitted)");
  cmd->add_option("--seed", args.seed, "Experiment seed");
  cmd->add_option("--out-dir", args.out_dir, "Output directory");
  cmd->add_option("--transport", args.transport, "Transport: sim or socket")
      ->check(CLI::IsMember({"sim", "socket"}));
  cmd->add_option("--workers", args.workers, "Threads for simulated client training");
  cmd->add_option("--rounds", args.rounds, "Federated rounds");
  cmd->add_option("--clients", args.clients, "Number of client nodes");
}

ExperimentConfig load_config(const CommonArgs& args) {
  ExperimentConfig cfg = args.config_path.empty()
                             ? fedsentry::default_config()
                             : fedsentry::config_from_file(args.config_path);
  if (args.seed) cfg.seed = *args.seed;
  if (args.out_dir) cfg.out_dir = *args.out_dir;
  if (args.transport) {
    cfg.transport = (*args.transport == "socket")
                        ? fedsentry::TransportKind::socket
                        : fedsentry::TransportKind::sim;
  }
  if (args.workers) cfg.workers = *args.workers;
  if (args.rounds) cfg.rounds = *args.rounds;
  if (args.clients) cfg.clients = *args.clients;
  return cfg;
}

std::string pct(double v) { return fedsentry::format_double(v); }

int cmd_run(const CommonArgs& args) {
  const fedsentry::RunReport report = fedsentry::run_and_write(load_config(args));
  std::cout << "wrote " << report.config.out_dir << " (rounds "
            << report.rounds.size() << ", final accuracy "
            << pct(report.final_metrics.accuracy) << ")\n";
  return 0;
}

int cmd_sweep_size(const CommonArgs& args, const std::vector<std::uint32_t>& sizes) {
  const ExperimentConfig cfg = load_config(args);
  const auto rows = fedsentry::sweep_dataset_size(cfg, sizes);
  std::cout << "wrote " << cfg.out_dir << "/sweep.csv\n";
  for (const auto& row : rows) {
    std::cout << "  n=" << row.value << " accuracy " << pct(row.accuracy) << "\n";
  }
  return 0;
}

int cmd_sweep_nodes(const CommonArgs& args, const std::vector<std::uint32_t>& nodes) {
  const ExperimentConfig cfg = load_config(args);
  const auto rows = fedsentry::sweep_nodes(cfg, nodes);
  std::cout << "wrote " << cfg.out_dir << "/sweep.csv\n";
  for (const auto& row : rows) {
    std::cout << "  clients=" << row.value << " accuracy " << pct(row.accuracy) << "\n";
  }
  return 0;
}

int cmd_compare(const CommonArgs& args) {
  const ExperimentConfig cfg = load_config(args);
  const auto rows = fedsentry::compare_models(cfg);
  std::cout << "wrote " << cfg.out_dir << "/compare.csv\n";
  for (const auto& row : rows) {
    std::cout << "  " << row.setting << ": accuracy " << pct(row.accuracy) << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Federated multimodal threat detection simulator"};
  app.require_subcommand(1);

  CommonArgs run_args;
  CLI::App* run = app.add_subcommand("run", "Run one federated experiment");
  add_common(run, run_args);

  CommonArgs size_args;
  std::vector<std::uint32_t> sizes = {1000, 10000, 100000};
  CLI::App* sweep_size =
      app.add_subcommand("sweep-size", "Rerun the experiment across dataset sizes");
  add_common(sweep_size, size_args);
  sweep_size->add_option("--sizes", sizes, "Dataset sizes, ascending")
      ->delimiter(',');

  CommonArgs node_args;
  std::vector<std::uint32_t> nodes = {5, 10, 20};
  CLI::App* sweep_nodes =
      app.add_subcommand("sweep-nodes", "Rerun the experiment across node counts");
  add_common(sweep_nodes, node_args);
  sweep_nodes->add_option("--nodes", nodes, "Client counts, ascending")
      ->delimiter(',');

  CommonArgs compare_args;
  CLI::App* compare = app.add_subcommand(
      "compare", "Centralized/federated and unimodal/fused comparison");
  add_common(compare, compare_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e);
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e);
    return 0;
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (run->parsed()) return cmd_run(run_args);
    if (sweep_size->parsed()) return cmd_sweep_size(size_args, sizes);
    if (sweep_nodes->parsed()) return cmd_sweep_nodes(node_args, nodes);
    if (compare->parsed()) return cmd_compare(compare_args);
    std::cerr << "no subcommand given\n";
    return 2;
  } catch (const fedsentry::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid argument: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
