#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "vgan/cli/commands.hpp"

namespace vgan::cli {

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::kBaseline: return "baseline";
    case Variant::kReweighting: return "reweighting";
    case Variant::kClipping: return "clipping";
    case Variant::kFull: return "full";
  }
  return "unknown";
}

Variant parse_variant(const std::string& name) {
  if (name == "baseline") return Variant::kBaseline;
  if (name == "reweighting") return Variant::kReweighting;
  if (name == "clipping") return Variant::kClipping;
  if (name == "full") return Variant::kFull;
  throw std::invalid_argument("unknown variant '" + name + "'");
}

core::TrainingConfig apply_variant(core::TrainingConfig base, Variant v) {
  base.reweighting = v == Variant::kReweighting || v == Variant::kFull;
  base.clipping = v == Variant::kClipping || v == Variant::kFull;
  base.n_gen = base.clipping ? 5 : 1;
  return base;
}

void SweepSpec::validate() const {
  if (!(lr_min > 0.0 && lr_min <= lr_max)) throw std::invalid_argument("need 0 < lr_min <= lr_max");
  if (batch_sizes.empty() || activations.empty() || hidden_widths.empty() || variants.empty()) {
    throw std::invalid_argument("sweep choice lists must be non-empty");
  }
  for (auto b : batch_sizes) {
    if (b < 2) throw std::invalid_argument("sweep batch sizes must be >= 2");
  }
  for (auto h : hidden_widths) {
    if (h < 1) throw std::invalid_argument("sweep hidden widths must be >= 1");
  }
  base.validate();
}

SweepSpec parse_sweep(const std::string& text) {
  SweepSpec spec;
  std::string rest;
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.rfind("sweep.", 0) != 0) {
      // Keep line numbers aligned for base-config diagnostics.
      rest += line + "\n";
      continue;
    }
    rest += "\n";
    const auto eq = line.find('=');
    try {
      if (eq == std::string::npos) throw std::invalid_argument("expected key = value");
      const std::string key = trim(line.substr(6, eq - 6));
      const std::string value = trim(line.substr(eq + 1));
      if (key == "trials") {
        spec.trials = static_cast<std::size_t>(parse_u64(value));
      } else if (key == "lr_min") {
        spec.lr_min = parse_double(value);
      } else if (key == "lr_max") {
        spec.lr_max = parse_double(value);
      } else if (key == "master_seed") {
        spec.master_seed = parse_u64(value);
      } else if (key == "batch_sizes") {
        spec.batch_sizes.clear();
        for (const auto& s : split_list(value)) spec.batch_sizes.push_back(parse_u64(s));
      } else if (key == "hidden_widths") {
        spec.hidden_widths.clear();
        for (const auto& s : split_list(value)) spec.hidden_widths.push_back(parse_u64(s));
      } else if (key == "activations") {
        spec.activations.clear();
        for (const auto& s : split_list(value)) spec.activations.push_back(models::parse_activation(s));
      } else if (key == "variants") {
        spec.variants.clear();
        for (const auto& s : split_list(value)) spec.variants.push_back(parse_variant(s));
      } else {
        throw std::invalid_argument("unknown key 'sweep." + key + "'");
      }
    } catch (const std::invalid_argument& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + e.what(), line_no);
    }
  }
  spec.base = parse_config(rest);
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return spec;
}

SweepSpec load_sweep(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read sweep file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_sweep(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what(), e.line);
  }
}

std::vector<TrialConfig> sweep_trials(const SweepSpec& spec) {
  std::vector<TrialConfig> out;
  for (std::size_t t = 0; t < spec.trials; ++t) {
    data::SplitMix64 rng(data::derive_seed(spec.master_seed, t));
    const double lr = std::exp(rng.uniform(std::log(spec.lr_min), std::log(spec.lr_max)));
    const std::size_t batch = spec.batch_sizes[rng.below(spec.batch_sizes.size())];
    const models::Activation act = spec.activations[rng.below(spec.activations.size())];
    const std::size_t hidden = spec.hidden_widths[rng.below(spec.hidden_widths.size())];
    for (Variant v : spec.variants) {
      TrialConfig tc;
      tc.trial = t;
      tc.variant = v;
      tc.config = spec.base;
      core::TrainingConfig& c = tc.config.training;
      c = apply_variant(c, v);
      c.lr_gen = lr;
      c.lr_critic = lr;
      c.lr_classifier = lr;
      c.batch_size = batch;
      c.activation = act;
      c.hidden = hidden;
      c.seed = data::derive_seed(spec.master_seed, t, static_cast<std::uint64_t>(v));
      out.push_back(std::move(tc));
    }
  }
  return out;
}

namespace {

std::string trial_dir_name(const TrialConfig& tc) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "t%04zu_%s", tc.trial, variant_name(tc.variant));
  return buf;
}

}  // namespace

SweepResult run_sweep(const SweepSpec& spec, std::size_t jobs,
                      const std::filesystem::path& out_dir, std::ostream& log) {
  spec.validate();
  const std::vector<TrialConfig> trials = sweep_trials(spec);
  std::vector<TrialResult> rows(trials.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  if (!out_dir.empty()) std::filesystem::create_directories(out_dir / "trials");

  auto worker = [&]() {
    for (std::size_t i = next++; i < trials.size(); i = next++) {
      const TrialConfig& tc = trials[i];
      TrialResult& r = rows[i];
      r.trial = tc.trial;
      r.variant = tc.variant;
      r.lr = tc.config.training.lr_gen;
      r.batch_size = tc.config.training.batch_size;
      r.activation = tc.config.training.activation;
      r.hidden = tc.config.training.hidden;
      try {
        const core::TrainingRecord record = core::train(tc.config.training, tc.config.dist);
        const auto verdict = metrics::assess_collapse(record, collapse_criteria(tc.config));
        r.collapsed = verdict.collapsed;
        r.reason = verdict.reason;
        if (const auto* e = record.final_eval()) {
          r.final_coverage = e->modes_covered;
          r.final_sliced_w = e->sliced_w;
        }
        if (!out_dir.empty()) {
          const auto dir = out_dir / "trials" / trial_dir_name(tc);
          std::filesystem::create_directories(dir);
          write_text(dir / "summary.json", summary_json(tc.config, record).dump(2) + "\n");
        }
      } catch (const std::exception& e) {
        r.collapsed = true;
        r.reason = std::string("failed: ") + e.what();
      }
      std::lock_guard<std::mutex> lock(log_mutex);
      log << "trial " << r.trial << " " << variant_name(r.variant) << ": "
          << (r.collapsed ? "collapsed" : "ok") << " coverage " << r.final_coverage << "\n";
    }
  };
  const std::size_t n_threads = std::max<std::size_t>(1, std::min(jobs, trials.size()));
  std::vector<std::thread> pool;
  for (std::size_t k = 1; k < n_threads; ++k) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  SweepResult result;
  result.rows = std::move(rows);
  std::sort(result.rows.begin(), result.rows.end(), [](const TrialResult& a, const TrialResult& b) {
    return a.trial != b.trial ? a.trial < b.trial : a.variant < b.variant;
  });
  for (Variant v : spec.variants) {
    VariantSummary s;
    s.variant = v;
    double cov = 0.0;
    double sw = 0.0;
    for (const auto& r : result.rows) {
      if (r.variant != v) continue;
      ++s.trials;
      if (r.collapsed) ++s.collapsed;
      cov += static_cast<double>(r.final_coverage);
      sw += r.final_sliced_w;
    }
    if (s.trials > 0) {
      const double n = static_cast<double>(s.trials);
      s.collapse_rate = static_cast<double>(s.collapsed) / n;
      s.mean_coverage = cov / n;
      s.mean_sliced_w = sw / n;
    }
    result.summary.push_back(s);
  }
  if (!out_dir.empty()) {
    write_text(out_dir / "sweep.csv", sweep_csv(result));
    write_text(out_dir / "sweep_summary.csv", sweep_summary_csv(result));
  }
  return result;
}

std::string sweep_csv(const SweepResult& result) {
  std::string out = std::string(kSweepHeader) + "\n";
  out += "trial,variant,lr,batch_size,activation,hidden,collapsed,final_coverage,final_sliced_w\n";
  for (const auto& r : result.rows) {
    out += std::to_string(r.trial) + "," + variant_name(r.variant) + "," + format_double(r.lr) +
           "," + std::to_string(r.batch_size) + "," + models::activation_name(r.activation) + "," +
           std::to_string(r.hidden) + "," + (r.collapsed ? "1" : "0") + "," +
           std::to_string(r.final_coverage) + "," + format_double(r.final_sliced_w) + "\n";
  }
  return out;
}

std::string sweep_summary_csv(const SweepResult& result) {
  std::string out = "variant,trials,collapsed,collapse_rate,mean_coverage,mean_sliced_w\n";
  for (const auto& s : result.summary) {
    out += std::string(variant_name(s.variant)) + "," + std::to_string(s.trials) + "," +
           std::to_string(s.collapsed) + "," + format_double(s.collapse_rate) + "," +
           format_double(s.mean_coverage) + "," + format_double(s.mean_sliced_w) + "\n";
  }
  return out;
}

}  // namespace vgan::cli
