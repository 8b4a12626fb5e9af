#include "specprec/scenario.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

int run_command(const std::string& target, bool have_seed, std::uint64_t seed, bool have_threads,
                int threads, const std::string& out, bool bench_mode) {
  using specprec::Scenario;
  using specprec::ScenarioError;
  try {
    Scenario s = specprec::load_scenario(target);
    if (have_seed) s.seed = seed;
    if (have_threads) s.threads = threads;
    if (!out.empty()) s.output_dir = out;
    s.validate();
    if (bench_mode) {
      std::vector<std::pair<int, int>> sizes = {{128, 8}, {256, 8}, {512, 8}, {1024, 8}};
      auto report = specprec::benchmark(s, sizes);
      auto j = report.to_json();
      std::filesystem::create_directories(s.output_dir);
      std::ofstream f(std::filesystem::path(s.output_dir) / "bench.json");
      f << j.dump(2) << "\n";
      std::cout << j.dump(2) << "\n";
    } else {
      auto summary = specprec::run_scenario(s);
      std::cout << summary.dump(2) << "\n";
    }
    return 0;
  } catch (const ScenarioError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"OFDM spectral precoding simulator"};
  app.require_subcommand(1);

  std::string target, out;
  std::uint64_t seed = 0;
  int threads = 1;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("config", target, "config file or preset name")->required();
    cmd->add_option("--seed", seed, "override the scenario seed");
    cmd->add_option("--threads", threads, "worker threads");
    cmd->add_option("--out", out, "output directory");
  };

  CLI::App* run = app.add_subcommand("run", "run a scenario and write result files");
  add_common(run);
  CLI::App* bench = app.add_subcommand("bench", "per-iteration timing over problem sizes");
  add_common(bench);

  CLI::App* presets = app.add_subcommand("presets", "preset utilities");
  CLI::App* list = presets->add_subcommand("list", "list shipped presets");
  presets->require_subcommand(1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (list->parsed()) {
    for (const auto& name : specprec::scenario_preset_names()) std::cout << name << "\n";
    return 0;
  }
  return run_command(target, run->count("--seed") || bench->count("--seed"), seed,
                     run->count("--threads") || bench->count("--threads"), threads, out,
                     bench->parsed());
}
