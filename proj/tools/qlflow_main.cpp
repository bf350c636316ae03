#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "qlflow/config.hpp"
#include "qlflow/errors.hpp"
#include "qlflow/experiments.hpp"

namespace {

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitConfig = 2;

void print_result(const qlflow::ExperimentResult& r, bool verbose) {
  std::printf("%s %s  (%s)\n", r.all_pass() ? "PASS" : "FAIL", r.preset.c_str(),
              (r.dir / "manifest.json").string().c_str());
  for (const auto& v : r.verdicts) {
    if (!verbose && v.pass) continue;
    std::printf("  %-4s %-44s value=%-12.6g threshold=%-12.6g %s\n", v.pass ? "ok" : "FAIL", v.name.c_str(), v.value,
                v.threshold, v.detail.c_str());
  }
}

int cmd_run(const std::vector<std::string>& paths, int jobs, bool verbose) {
  std::vector<qlflow::ExperimentConfig> cfgs;
  try {
    for (const auto& p : paths) {
      cfgs.push_back(qlflow::load_config(p));
      qlflow::validate(cfgs.back());
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return kExitConfig;
  }
  const auto root = qlflow::output_root_from_env();

  std::vector<std::optional<qlflow::ExperimentResult>> results(cfgs.size());
  std::vector<char> config_failed(cfgs.size(), 0);
  std::atomic<std::size_t> next{0};
  std::mutex out;
  auto worker = [&] {
    for (std::size_t k; (k = next++) < cfgs.size();) {
      try {
        results[k] = qlflow::run_experiment(cfgs[k], root);
        std::lock_guard lock(out);
        print_result(*results[k], verbose);
      } catch (const qlflow::ConfigError& e) {
        config_failed[k] = 1;
        std::lock_guard lock(out);
        std::fprintf(stderr, "configuration error in %s: %s\n", cfgs[k].preset.c_str(), e.what());
      } catch (const std::exception& e) {
        std::lock_guard lock(out);
        std::fprintf(stderr, "FAIL %s: %s\n", cfgs[k].preset.c_str(), e.what());
      }
    }
  };
  const int n = std::clamp(jobs, 1, static_cast<int>(cfgs.size()));
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  bool config_error = false, all_pass = true;
  for (std::size_t k = 0; k < cfgs.size(); ++k) {
    config_error = config_error || config_failed[k];
    all_pass = all_pass && results[k] && results[k]->all_pass();
  }
  if (config_error) return kExitConfig;
  return all_pass ? kExitPass : kExitFail;
}

int cmd_validate(const std::string& path) {
  try {
    const auto cfg = qlflow::load_config(path);
    qlflow::validate(cfg);
    std::printf("%s: ok (preset %s)\n", path.c_str(), cfg.preset.c_str());
    for (const auto& [k, v] : cfg.echo()) std::printf("  %s = %s\n", k.c_str(), v.c_str());
    return kExitPass;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return kExitConfig;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quasilinear parabolic flows: energy, omega-limits and steady-state diagnostics"};
  app.set_version_flag("--version", std::string(qlflow::kVersion));
  app.require_subcommand(1);

  std::vector<std::string> run_paths;
  int jobs = 1;
  bool verbose = false;
  auto* run = app.add_subcommand("run", "Run one or more experiment configs; output goes to $QLFLOW_OUTPUT_ROOT");
  run->add_option("config", run_paths, "INI config files")->required()->check(CLI::ExistingFile);
  run->add_option("-j,--jobs", jobs, "Run up to this many configs concurrently")->check(CLI::PositiveNumber);
  run->add_flag("-v,--verbose", verbose, "Print passing verdicts too");

  auto* list = app.add_subcommand("list-presets", "List registered presets");

  std::string validate_path;
  auto* val = app.add_subcommand("validate", "Parse and validate a config without running it");
  val->add_option("config", validate_path, "INI config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  if (*run) return cmd_run(run_paths, jobs, verbose);
  if (*list) {
    for (const auto& p : qlflow::preset_catalogue()) std::printf("%-22s %s\n", p.name.c_str(), p.summary.c_str());
    return kExitPass;
  }
  if (*val) return cmd_validate(validate_path);
  return kExitConfig;
}
