#pragma once

#include <string>
#include <vector>

#include "nero/harness/run.hpp"

namespace nero {

/// A (constrain_mean, constrain_norm) toggle pair for the ablation.
struct ConstraintToggle {
  bool constrain_mean = false;
  bool constrain_norm = false;
};

struct AblationCell {
  ConstraintToggle toggle;
  std::vector<RunRecord> runs;  // one per repeat
  double mean_final_train_loss = 0.0;
  double range_final_train_loss = 0.0;  // max - min over repeats
  double mean_final_train_error = 0.0;
  double range_final_train_error = 0.0;
  bool failed = false;  // any repeat failed
};

struct AblationTable {
  std::vector<AblationCell> cells;
};

/// Runs the toggle cross product, `repeats` seeded runs per cell. Cell
/// seeds derive from the base seed as seed ^ cell_index (cells numbered
/// over toggles x repeats). Cells may execute in parallel; results merge
/// deterministically.
AblationTable run_ablation(const TrainConfig& base,
                           const std::vector<ConstraintToggle>& toggles,
                           std::size_t repeats, std::size_t jobs = 1);

std::string ablation_csv(const AblationTable& t);

struct GridCell {
  double lr = 0.0;
  std::vector<RunRecord> runs;
  bool failed = false;  // any repeat failed
  double mean_final_val_error = 0.0;
};

struct GridResult {
  std::vector<GridCell> cells;
  int best_index = -1;  // among non-failed cells; ties break to smaller lr
};

/// Independent seeded runs per learning rate (eta for Nero, lr for
/// baselines). Failed runs are recorded as failed, never dropped; the
/// best cell is picked by mean final validation error among survivors.
GridResult run_grid(const TrainConfig& base, const std::vector<double>& lrs,
                    std::size_t repeats, std::size_t jobs = 1);

std::string grid_csv(const GridResult& g);

/// Applies a learning rate to whatever optimizer the config carries.
TrainConfig with_learning_rate(TrainConfig cfg, double lr);

}  // namespace nero
