#include "vgan/cli/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace vgan::cli {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& text) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(v)) {
    throw std::invalid_argument("expected a finite number, got '" + t + "'");
  }
  return v;
}

std::uint64_t parse_u64(const std::string& text) {
  const std::string t = trim(text);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
    throw std::invalid_argument("expected a non-negative integer, got '" + t + "'");
  }
  return v;
}

bool parse_bool(const std::string& text) {
  const std::string t = trim(text);
  if (t == "on" || t == "true") return true;
  if (t == "off" || t == "false") return false;
  throw std::invalid_argument("expected on/off, got '" + t + "'");
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  const std::string t = trim(text);
  if (t.empty()) return out;
  std::stringstream ss(t);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split_list(text)) out.push_back(parse_double(item));
  return out;
}

std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

namespace {

std::string format_list(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += format_double(v[i]);
  }
  return out;
}

std::string on_off(bool b) { return b ? "on" : "off"; }

struct Field {
  std::string key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

#define VGAN_DOUBLE(name, path)                                                       \
  Field{name, [](const RunConfig& c) { return format_double(c.path); },              \
        [](RunConfig& c, const std::string& v) { c.path = parse_double(v); }}
#define VGAN_SIZE(name, path)                                                         \
  Field{name, [](const RunConfig& c) { return std::to_string(c.path); },             \
        [](RunConfig& c, const std::string& v) {                                      \
          c.path = static_cast<std::size_t>(parse_u64(v));                            \
        }}
#define VGAN_BOOL(name, path)                                                         \
  Field{name, [](const RunConfig& c) { return on_off(c.path); },                     \
        [](RunConfig& c, const std::string& v) { c.path = parse_bool(v); }}
#define VGAN_LIST(name, path)                                                         \
  Field{name, [](const RunConfig& c) { return format_list(c.path); },                \
        [](RunConfig& c, const std::string& v) { c.path = parse_double_list(v); }}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      Field{"mode", [](const RunConfig& c) { return std::string(c.mode == Mode::kExact ? "exact" : "neural"); },
            [](RunConfig& c, const std::string& v) {
              const std::string t = trim(v);
              if (t == "neural") {
                c.mode = Mode::kNeural;
              } else if (t == "exact") {
                c.mode = Mode::kExact;
              } else {
                throw std::invalid_argument("mode must be neural or exact, got '" + t + "'");
              }
            }},
      Field{"out_dir", [](const RunConfig& c) { return c.out_dir; },
            [](RunConfig& c, const std::string& v) { c.out_dir = trim(v); }},
      Field{"seed", [](const RunConfig& c) { return std::to_string(c.training.seed); },
            [](RunConfig& c, const std::string& v) { c.training.seed = parse_u64(v); }},
      VGAN_SIZE("iterations", training.iterations),
      VGAN_SIZE("n_critic", training.n_critic),
      VGAN_SIZE("n_gen", training.n_gen),
      VGAN_SIZE("batch_size", training.batch_size),
      VGAN_DOUBLE("epsilon", training.epsilon),
      VGAN_DOUBLE("alpha", training.alpha),
      VGAN_DOUBLE("lambda_gp", training.lambda_gp),
      VGAN_DOUBLE("gp_smoothing", training.gp_smoothing),
      VGAN_DOUBLE("lr_gen", training.lr_gen),
      VGAN_DOUBLE("lr_critic", training.lr_critic),
      VGAN_DOUBLE("lr_classifier", training.lr_classifier),
      VGAN_DOUBLE("beta1", training.beta1),
      VGAN_DOUBLE("beta2", training.beta2),
      VGAN_DOUBLE("adam_eps", training.adam_eps),
      VGAN_BOOL("anneal_lr", training.anneal_lr),
      VGAN_BOOL("reweighting", training.reweighting),
      VGAN_BOOL("clipping", training.clipping),
      VGAN_BOOL("sample_from_old", training.sample_from_old),
      VGAN_SIZE("noise_dim", training.noise_dim),
      VGAN_SIZE("hidden", training.hidden),
      Field{"activation",
            [](const RunConfig& c) { return std::string(models::activation_name(c.training.activation)); },
            [](RunConfig& c, const std::string& v) {
              c.training.activation = models::parse_activation(trim(v));
            }},
      VGAN_SIZE("eval_every", training.eval_every),
      VGAN_SIZE("eval_samples", training.eval_samples),
      VGAN_SIZE("eval_projections", training.eval_projections),
      VGAN_BOOL("abort_on_collapse", training.abort_on_collapse),
      VGAN_SIZE("coverage_floor", training.coverage_floor),
      Field{"dist.kind", [](const RunConfig& c) { return std::string(data::dist_kind_name(c.dist.kind)); },
            [](RunConfig& c, const std::string& v) { c.dist.kind = data::parse_dist_kind(trim(v)); }},
      VGAN_SIZE("dist.n_modes", dist.n_modes),
      VGAN_DOUBLE("dist.radius", dist.radius),
      VGAN_SIZE("dist.rows", dist.rows),
      VGAN_SIZE("dist.cols", dist.cols),
      VGAN_DOUBLE("dist.spacing", dist.spacing),
      VGAN_DOUBLE("dist.sigma", dist.sigma),
      VGAN_LIST("dist.weights", dist.weights),
      VGAN_LIST("dist.means", dist.means),
      VGAN_LIST("dist.sigmas", dist.sigmas),
      VGAN_LIST("dist.probs", dist.probs),
  };
  return table;
}

#undef VGAN_DOUBLE
#undef VGAN_SIZE
#undef VGAN_BOOL
#undef VGAN_LIST

const Field& find_field(const std::string& key) {
  for (const auto& f : fields()) {
    if (f.key == key) return f;
  }
  throw std::invalid_argument("unknown key '" + key + "'");
}

std::pair<std::string, std::string> split_assignment(const std::string& line) {
  const auto eq = line.find('=');
  if (eq == std::string::npos) throw std::invalid_argument("expected key = value");
  std::string key = trim(line.substr(0, eq));
  if (key.empty()) throw std::invalid_argument("empty key");
  return {key, trim(line.substr(eq + 1))};
}

}  // namespace

void RunConfig::validate() const {
  training.validate();
  dist.validate();
  const bool categorical = dist.kind == data::DistKind::kCategorical;
  if (mode == Mode::kExact && !categorical) {
    throw std::invalid_argument("mode = exact requires dist.kind = categorical");
  }
  if (mode == Mode::kNeural && categorical) {
    throw std::invalid_argument("dist.kind = categorical requires mode = exact");
  }
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& f : fields()) keys.push_back(f.key);
  return keys;
}

RunConfig parse_config(const std::string& text) {
  RunConfig config;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    try {
      const auto [key, value] = split_assignment(line);
      if (!seen.insert(key).second) throw std::invalid_argument("repeated key '" + key + "'");
      find_field(key).set(config, value);
    } catch (const std::invalid_argument& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + e.what(), line_no);
    }
  }
  try {
    config.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return config;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what(), e.line);
  }
}

std::string serialize_config(const RunConfig& config) {
  std::string out;
  for (const auto& f : fields()) out += f.key + " = " + f.get(config) + "\n";
  return out;
}

void apply_override(RunConfig& config, const std::string& assignment) {
  try {
    const auto [key, value] = split_assignment(assignment);
    find_field(key).set(config, value);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("override '" + assignment + "': " + e.what());
  }
}

}  // namespace vgan::cli
