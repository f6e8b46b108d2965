#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "vgan/cli/commands.hpp"
#include "vgan/models/checkpoint.hpp"

namespace vgan::cli {

namespace {

void put(std::string& out, const std::optional<double>& v) {
  out += ',';
  if (v) out += format_double(*v);
}

double trailing_variance(const std::vector<double>& series, std::size_t window) {
  const auto rv = metrics::rolling_variance(series, window);
  return rv.empty() ? 0.0 : rv.back();
}

}  // namespace

std::string metrics_csv(const core::TrainingRecord& record) {
  std::string out = std::string(kMetricsHeader) + "\n";
  out +=
      "iter,phase,critic_loss,gen_loss,gp,weight_entropy,grad_norm_phi,grad_norm_theta,"
      "ratio_mean,ratio_clipped_frac\n";
  for (const auto& s : record.steps) {
    out += std::to_string(s.iter);
    out += ',';
    out += core::phase_name(s.phase);
    put(out, s.critic_loss);
    put(out, s.gen_loss);
    put(out, s.gp);
    put(out, s.weight_entropy);
    put(out, s.grad_norm_phi);
    put(out, s.grad_norm_theta);
    put(out, s.ratio_mean);
    put(out, s.ratio_clipped_frac);
    out += '\n';
  }
  return out;
}

std::string samples_csv(const diffmath::Matrix& samples) {
  std::string out;
  for (Eigen::Index j = 0; j < samples.cols(); ++j) {
    if (j) out += ',';
    out += "x" + std::to_string(j);
  }
  out += '\n';
  for (Eigen::Index i = 0; i < samples.rows(); ++i) {
    for (Eigen::Index j = 0; j < samples.cols(); ++j) {
      if (j) out += ',';
      out += format_double(samples(i, j));
    }
    out += '\n';
  }
  return out;
}

metrics::CollapseCriteria collapse_criteria(const RunConfig& config) {
  metrics::CollapseCriteria c;
  c.coverage_floor = config.training.coverage_floor;
  const std::size_t critic_steps = config.training.iterations * config.training.n_critic;
  c.window = std::max<std::size_t>(2, std::min(c.window, critic_steps));
  return c;
}

nlohmann::json summary_json(const RunConfig& config, const core::TrainingRecord& record) {
  using nlohmann::json;
  json j;
  json echo = json::object();
  std::istringstream lines(serialize_config(config));
  std::string line;
  while (std::getline(lines, line)) {
    const auto eq = line.find(" = ");
    echo[line.substr(0, eq)] = line.substr(eq + 3);
  }
  j["config"] = echo;
  j["lambda_gp"] = config.training.lambda_gp;

  const metrics::CollapseVerdict v = assess_collapse(record, collapse_criteria(config));
  j["collapsed"] = v.collapsed;
  j["collapse_reason"] = v.reason;
  j["aborted"] = record.aborted;
  j["abort_reason"] = record.abort_reason;
  j["iterations_completed"] = record.iterations_completed;

  auto eval_json = [](const core::EvalSnapshot& e) {
    json x;
    x["iter"] = e.iter;
    x["modes_covered"] = e.modes_covered;
    x["n_modes"] = e.n_modes;
    x["high_quality_fraction"] = e.high_quality_fraction;
    x["sliced_w"] = e.sliced_w;
    if (e.total_variation) x["total_variation"] = *e.total_variation;
    return x;
  };
  j["final"] = record.final_eval() ? eval_json(*record.final_eval()) : json(nullptr);
  json evals = json::array();
  for (const auto& e : record.evals) evals.push_back(eval_json(e));
  j["evals"] = evals;

  const std::size_t window = 200;
  j["loss_variance_window"] = window;
  j["critic_loss_variance"] = trailing_variance(record.critic_losses(), window);
  j["gen_loss_variance"] = trailing_variance(record.generator_losses(), window);
  return j;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

void write_run_artifacts(const std::filesystem::path& dir, const RunConfig& config,
                         const core::TrainingRecord& record) {
  std::filesystem::create_directories(dir);
  write_text(dir / "metrics.csv", metrics_csv(record));
  write_text(dir / "summary.json", summary_json(config, record).dump(2) + "\n");
  write_text(dir / "samples.csv", samples_csv(record.final_samples));
  models::write_checkpoint(dir / "generator.ckpt",
                           models::Checkpoint{record.final_generator, config.training.seed});
}

core::TrainingRecord run_train(const RunConfig& config, std::ostream& log) {
  config.validate();
  core::TrainingRecord record = core::train(config.training, config.dist);
  write_run_artifacts(config.out_dir, config, record);
  if (const auto* e = record.final_eval()) {
    log << "iterations " << record.iterations_completed << "  modes " << e->modes_covered << "/"
        << e->n_modes << "  sliced_w " << e->sliced_w << (record.aborted ? "  (aborted)" : "")
        << "\n";
  }
  return record;
}

}  // namespace vgan::cli
