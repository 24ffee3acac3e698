// Command line front end: run, validate and list experiments.
#include <charconv>
#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "pbtdyn/experiments.hpp"

namespace ex = pbtdyn::experiments;

namespace {

constexpr int kExitCheckFailed = 1;
constexpr int kExitBadConfig = 2;
constexpr int kExitRuntime = 3;

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    const std::string item = text.substr(pos, comma - pos);
    std::uint64_t v = 0;
    const auto [end, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || ec != std::errc() || end != item.data() + item.size()) {
      throw ex::ConfigError("--seeds", "'" + item + "' is not a non-negative integer");
    }
    out.push_back(v);
    pos = comma + 1;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Population-based training dynamics toolkit"};
  app.require_subcommand(1);

  std::string config_path, out_dir, seeds_text;
  auto* run = app.add_subcommand("run", "Run the experiment described by a config file");
  run->add_option("config", config_path, "JSON config file")->required();
  run->add_option("--out", out_dir, "Output directory (overrides the config)");
  run->add_option("--seeds", seeds_text, "Comma-separated seed list (overrides the config)");

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Check a config file without running it");
  validate->add_option("config", validate_path, "JSON config file")->required();

  auto* list = app.add_subcommand("list-experiments", "Print the known experiment ids");

  CLI11_PARSE(app, argc, argv);

  try {
    if (list->parsed()) {
      for (const auto& id : ex::experiment_ids()) std::cout << id << '\n';
      return 0;
    }
    if (validate->parsed()) {
      const auto resolved = ex::resolve_config(ex::load_config(validate_path));
      std::cout << resolved.dump(2) << '\n';
      return 0;
    }

    const auto resolved = ex::resolve_config(ex::load_config(config_path));
    std::vector<std::uint64_t> seeds;
    if (!seeds_text.empty()) seeds = parse_seeds(seeds_text);
    const std::string out =
        out_dir.empty() ? resolved.at("output").get<std::string>() : out_dir;
    const ex::Outcome o = ex::run_experiment(resolved, out, seeds);
    for (const auto& c : o.checks) {
      std::printf("%s %s  %s\n", c.passed ? "PASS" : "FAIL", c.name.c_str(), c.detail.c_str());
    }
    std::printf("wrote %zu files and summary.json to %s (%.1f s)\n", o.files.size(),
                out.c_str(), o.wall_seconds);
    return o.passed() ? 0 : kExitCheckFailed;
  } catch (const ex::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitBadConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}
