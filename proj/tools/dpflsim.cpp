#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dpfl/config.hpp"
#include "dpfl/report.hpp"
#include "dpfl/simulator.hpp"

namespace {

int run(int argc, char** argv) {
  CLI::App app{"Differentially private federated learning simulator for a "
               "modeled wireless IoT network"};

  std::string config_path;
  std::string scheme_arg = "both";
  std::string out_dir = ".";
  int rounds_override = -1;
  long long seed_override = -1;
  int threads_override = -1;

  app.add_option("--config", config_path, "configuration file (flat key = value)");
  app.add_option("--scheme", scheme_arg, "proposed | benchmark | both")
      ->check(CLI::IsMember({"proposed", "benchmark", "both"}));
  app.add_option("--rounds", rounds_override, "override sim.rounds");
  app.add_option("--seed", seed_override, "override sim.seed");
  app.add_option("--out", out_dir, "output directory (default: current)");
  app.add_option("--threads", threads_override, "override sim.threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  dpfl::SimConfig config;
  try {
    if (!config_path.empty()) config = dpfl::load_config(config_path);
    if (rounds_override >= 0) config.rounds = rounds_override;
    if (seed_override >= 0) config.seed = static_cast<std::uint64_t>(seed_override);
    if (threads_override >= 0) config.threads = threads_override;
    dpfl::validate_config(config);
  } catch (const std::exception& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 1;
  }

  try {
    std::filesystem::create_directories(out_dir);
    const auto csv_path = [&](dpfl::Scheme s) {
      return (std::filesystem::path(out_dir) /
              ("records_" + dpfl::scheme_name(s) + ".csv"))
          .string();
    };
    const std::string manifest_path =
        (std::filesystem::path(out_dir) / "manifest.json").string();

    std::vector<dpfl::Scheme> schemes;
    if (scheme_arg == "proposed") schemes = {dpfl::Scheme::kProposed};
    else if (scheme_arg == "benchmark") schemes = {dpfl::Scheme::kBenchmark};
    else schemes = {dpfl::Scheme::kProposed, dpfl::Scheme::kBenchmark};

    dpfl::RunManifest manifest;
    manifest.seed = config.seed;
    manifest.scheme = scheme_arg;
    manifest.started_at = dpfl::current_timestamp();
    manifest.config_text = dpfl::save_config(config);
    for (dpfl::Scheme s : schemes) manifest.outputs.push_back(csv_path(s));
    dpfl::write_manifest(manifest, manifest_path);

    std::vector<std::vector<dpfl::RoundRecord>> results;
    for (dpfl::Scheme s : schemes) {
      dpfl::SimConfig run_config = config;
      run_config.scheme = s;  // paired runs share seed, data, and channels
      auto records = dpfl::run_simulation(run_config);
      dpfl::emit_records(records, csv_path(s));
      std::cout << dpfl::summary_text(dpfl::summarize(records),
                                      dpfl::scheme_name(s));
      results.push_back(std::move(records));
    }
    if (results.size() == 2) {
      std::cout << dpfl::comparison_text(
          dpfl::compare_schemes(results[0], results[1]));
    }

    manifest.finished_at = dpfl::current_timestamp();
    dpfl::write_manifest(manifest, manifest_path);
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
