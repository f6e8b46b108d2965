#include <ostream>

#include "vgan/cli/commands.hpp"

namespace vgan::cli {

std::vector<AblationRun> run_ablate(const RunConfig& base, const std::filesystem::path& out_dir,
                                    std::ostream& log) {
  base.validate();
  if (base.mode != Mode::kNeural) throw ConfigError("ablate needs a neural config");
  const std::size_t budget =
      base.training.iterations * (base.training.n_critic + base.training.n_gen);
  std::vector<AblationRun> runs;
  for (Variant v : {Variant::kBaseline, Variant::kReweighting, Variant::kClipping, Variant::kFull}) {
    RunConfig c = base;
    c.training = apply_variant(base.training, v);
    AblationRun run;
    run.variant = v;
    run.batches_per_iteration = c.training.n_critic + c.training.n_gen;
    run.iterations = budget / run.batches_per_iteration;
    c.training.iterations = run.iterations;
    c.out_dir = (out_dir / variant_name(v)).string();
    log << variant_name(v) << ": " << run.iterations << " iterations x "
        << run.batches_per_iteration << " batches\n";
    run.record = run_train(c, log);
    runs.push_back(std::move(run));
  }
  write_text(out_dir / "comparison.csv", comparison_csv(runs));
  return runs;
}

std::string comparison_csv(const std::vector<AblationRun>& runs) {
  std::string out = std::string(kComparisonHeader) + "\n";
  out += "variant,iter,total_batches,modes_covered,high_quality_fraction,sliced_w\n";
  for (const auto& run : runs) {
    for (const auto& e : run.record.evals) {
      out += std::string(variant_name(run.variant)) + "," + std::to_string(e.iter) + "," +
             std::to_string(e.iter * run.batches_per_iteration) + "," +
             std::to_string(e.modes_covered) + "," + format_double(e.high_quality_fraction) +
             "," + format_double(e.sliced_w) + "\n";
    }
  }
  return out;
}

}  // namespace vgan::cli
