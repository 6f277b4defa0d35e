#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nero/harness/config.hpp"
#include "json.hpp"

namespace nero {

struct StepRow {
  std::uint64_t step = 0;   // 1-based
  std::uint64_t epoch = 0;  // epoch in progress
  double lr_multiplier = 1.0;
  double train_loss = 0.0;   // batch loss
  double train_error = 0.0;  // batch error
  std::vector<double> grad_norms;  // per group, Frobenius
  std::vector<double> res_mean;    // per projected neuron group: max |sum w|
  std::vector<double> res_norm;    // per projected neuron group: max | ||w||-1 |
};

struct EvalRow {
  std::uint64_t epoch = 0;  // completed epochs (0 = initial evaluation)
  // Error fields default to the worst value so a run that failed before
  // its first evaluation can never look good in summaries.
  double train_loss = 0.0, train_error = 1.0;
  double val_loss = 0.0, val_error = 1.0;
  double test_loss = 0.0, test_error = 1.0;
};

/// Everything a run produced. Rendered deterministically: two runs of
/// the same config+seed yield byte-identical metrics/summary text, wall
/// time excluded.
struct RunRecord {
  nlohmann::json config_snapshot;
  std::string hash;
  std::vector<std::string> grad_norm_columns;
  std::vector<std::string> residual_columns;  // empty unless constrained
  std::vector<StepRow> steps;
  std::vector<EvalRow> evals;
  std::string status = "ok";  // "ok" | "failed"
  std::uint64_t failed_at_step = 0;
  std::string failure;
  double best_val_error = 1.0;
  std::size_t norm_floor_hits = 0;
  double wall_seconds = 0.0;

  const EvalRow& final_eval() const {
    static const EvalRow none{};
    return evals.empty() ? none : evals.back();
  }
};

/// Step metrics as CSV: a JSON header line carrying the schema version,
/// config hash and column list, then the column row, then data rows.
std::string metrics_csv(const RunRecord& r);

/// Summary (config, per-epoch evaluations, final/best metrics, status).
nlohmann::json summary_json(const RunRecord& r);

/// Runs the full training loop described by the config. Shuffles with a
/// seeded stream per epoch, logs every step, evaluates train/val/test at
/// epoch ends (plus once before training), and detects divergence
/// (non-finite loss or loss > 1e6) and numerical degeneracy, recording
/// the failing step instead of propagating. If output_dir is non-empty,
/// writes metrics.csv, summary.json and checkpoint.bin there.
RunRecord train(const TrainConfig& cfg, const std::string& output_dir = "");

/// RNG stream ids used by train() (documented for reproducibility).
enum class RunStream : std::uint64_t {
  init = 1,     // parameter initialization
  shuffle = 2,  // epoch shuffling
  data = 3,     // synthetic dataset generation
};

}  // namespace nero
