// Run configuration: a flat key = value text format.
//
//   # comment
//   key = value
//
// Keys are the training fields (epsilon, n_critic, lr_gen, ...), the target
// distribution under the dist.* prefix, out_dir and mode. Booleans are
// on/off (true/false also accepted), lists are comma separated. Unknown or
// repeated keys are errors. Omitted keys keep their defaults.

#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "vgan/core/trainer.hpp"
#include "vgan/data/distributions.hpp"

namespace vgan::cli {

enum class Mode { kNeural, kExact };

struct RunConfig {
  core::TrainingConfig training;
  data::DistSpec dist = data::DistSpec::ring(8, 2.0, 0.05);
  std::string out_dir = "out";
  Mode mode = Mode::kNeural;

  /// Training and distribution checks plus mode/distribution agreement.
  void validate() const;
  bool operator==(const RunConfig&) const = default;
};

/// Parse failure with the offending line (0 when not tied to a line).
struct ConfigError : std::runtime_error {
  ConfigError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(what), line(line) {}
  std::size_t line;
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);
/// Every key, in a fixed order, with doubles printed to round-trip.
std::string serialize_config(const RunConfig& config);

/// Applies one "key=value" override on top of an existing config. Does not
/// validate; call RunConfig::validate once all overrides are in.
void apply_override(RunConfig& config, const std::string& assignment);

/// All keys understood by parse_config, in serialization order.
std::vector<std::string> config_keys();

// Value codecs shared with the sweep spec parser.
double parse_double(const std::string& text);
std::uint64_t parse_u64(const std::string& text);
bool parse_bool(const std::string& text);
std::vector<double> parse_double_list(const std::string& text);
std::vector<std::string> split_list(const std::string& text);
std::string format_double(double v);
std::string trim(const std::string& s);

}  // namespace vgan::cli
