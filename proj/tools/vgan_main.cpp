// vgan: train | sweep | oracle | ablate
//
// Exit codes: 0 success (a flagged collapse is still a success), 1 usage or
// configuration error, 2 oracle failure.

#include <filesystem>
#include <optional>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "vgan/cli/commands.hpp"

namespace {

using namespace vgan;

constexpr int kUsageError = 1;
constexpr int kOracleFailure = 2;

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::vector<std::string> overrides;
  std::size_t jobs = 1;
  std::size_t instances = 1000;
};

cli::RunConfig resolve(const Flags& flags) {
  cli::RunConfig config = flags.config.empty() ? cli::RunConfig{} : cli::load_config(flags.config);
  for (const auto& o : flags.overrides) cli::apply_override(config, o);
  if (flags.seed) config.training.seed = *flags.seed;
  if (!flags.out_dir.empty()) config.out_dir = flags.out_dir;
  try {
    config.validate();
  } catch (const std::invalid_argument& e) {
    throw cli::ConfigError(e.what());
  }
  return config;
}

int train(const Flags& flags) {
  if (flags.config.empty()) throw cli::ConfigError("train requires --config");
  const cli::RunConfig config = resolve(flags);
  const core::TrainingRecord record = cli::run_train(config, std::cout);
  if (metrics::detect_collapse(record, cli::collapse_criteria(config))) {
    std::cout << "collapse flagged in " << config.out_dir << "/summary.json\n";
  }
  return 0;
}

int sweep(const Flags& flags) {
  if (flags.config.empty()) throw cli::ConfigError("sweep requires --config");
  cli::SweepSpec spec = cli::load_sweep(flags.config);
  for (const auto& o : flags.overrides) cli::apply_override(spec.base, o);
  if (flags.seed) spec.master_seed = *flags.seed;
  const std::string out = flags.out_dir.empty() ? spec.base.out_dir : flags.out_dir;
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw cli::ConfigError(e.what());
  }
  const cli::SweepResult result = cli::run_sweep(spec, flags.jobs, out, std::cerr);
  std::cout << cli::sweep_summary_csv(result);
  return 0;
}

int oracle(const Flags& flags) {
  cli::OracleOptions options;
  options.instances = flags.instances;
  options.seed = flags.seed.value_or(0);
  const cli::OracleReport report = cli::run_oracle(options);
  const std::string out = flags.out_dir.empty() ? "out" : flags.out_dir;
  std::filesystem::create_directories(out);
  cli::write_text(std::filesystem::path(out) / "oracle_report.json", report.to_json().dump(2) + "\n");
  for (const auto& [name, c] : report.properties) {
    std::cout << (c.second == 0 ? "PASS " : "FAIL ") << name << " " << c.first - c.second << "/"
              << c.first << "\n";
  }
  return report.passed ? 0 : kOracleFailure;
}

int ablate(const Flags& flags) {
  if (flags.config.empty()) throw cli::ConfigError("ablate requires --config");
  const cli::RunConfig config = resolve(flags);
  const auto runs = cli::run_ablate(config, config.out_dir, std::cout);
  std::cout << "wrote " << runs.size() << " variants to " << config.out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Re-weighted, ratio-clipped WGAN-GP experiments"};
  app.require_subcommand(1);
  Flags flags;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", flags.config, "Config file (key = value)");
    sub->add_option("--seed", flags.seed, "Seed (master seed for sweeps)");
    sub->add_option("--out-dir", flags.out_dir, "Output directory");
    sub->add_option("--override", flags.overrides, "KEY=VALUE, repeatable")->take_all();
    sub->add_option("--jobs", flags.jobs, "Worker threads")->check(CLI::PositiveNumber);
  };
  auto* train_cmd = app.add_subcommand("train", "Train one model and write its artifacts");
  auto* sweep_cmd = app.add_subcommand("sweep", "Randomized collapse-rate sweep");
  auto* oracle_cmd = app.add_subcommand("oracle", "Finite-space property suite");
  auto* ablate_cmd = app.add_subcommand("ablate", "Four-variant comparison at equal batch budget");
  for (auto* sub : {train_cmd, sweep_cmd, oracle_cmd, ablate_cmd}) add_common(sub);
  oracle_cmd->add_option("--instances", flags.instances, "Randomized instances");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }

  try {
    if (*train_cmd) return train(flags);
    if (*sweep_cmd) return sweep(flags);
    if (*oracle_cmd) return oracle(flags);
    if (*ablate_cmd) return ablate(flags);
  } catch (const cli::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  }
  return kUsageError;
}
