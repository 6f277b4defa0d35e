#include "nero/harness/experiments.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <functional>
#include <mutex>
#include <thread>

#include "nero/errors.hpp"

namespace nero {

namespace {

std::string fmt(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

/// Runs fn(cell_index) for every cell, possibly across threads. Each
/// cell owns its model/optimizer/rng; the caller merges results from
/// preallocated slots, so the outcome is independent of `jobs`.
void run_cells(std::size_t n_cells, std::size_t jobs,
               const std::function<void(std::size_t)>& fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, n_cells));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n_cells; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> workers;
  std::exception_ptr first_error;
  std::mutex error_mutex;
  for (std::size_t w = 0; w < jobs; ++w)
    workers.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n_cells) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  for (auto& t : workers) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double range_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double lo = v[0], hi = v[0];
  for (double x : v) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  return hi - lo;
}

}  // namespace

TrainConfig with_learning_rate(TrainConfig cfg, double lr) {
  if (auto* nero_cfg = std::get_if<NeroConfig>(&cfg.optimizer)) {
    nero_cfg->eta = lr;
  } else {
    auto& spec = std::get<BaselineSpec>(cfg.optimizer);
    std::visit([lr](auto& c) { c.lr = lr; }, spec.cfg);
  }
  return cfg;
}

AblationTable run_ablation(const TrainConfig& base,
                           const std::vector<ConstraintToggle>& toggles,
                           std::size_t repeats, std::size_t jobs) {
  if (toggles.empty()) throw ConfigError("ablate: no toggle pairs given");
  if (repeats == 0) throw ConfigError("ablate: repeats must be positive");
  if (!std::holds_alternative<NeroConfig>(base.optimizer))
    throw ConfigError("ablate: constraint ablation requires the nero optimizer");

  const std::size_t n_cells = toggles.size() * repeats;
  std::vector<RunRecord> records(n_cells);
  run_cells(n_cells, jobs, [&](std::size_t cell) {
    const std::size_t toggle_idx = cell / repeats;
    TrainConfig cfg = base;
    auto& nero_cfg = std::get<NeroConfig>(cfg.optimizer);
    nero_cfg.constrain_mean = toggles[toggle_idx].constrain_mean;
    nero_cfg.constrain_norm = toggles[toggle_idx].constrain_norm;
    cfg.seed = base.seed ^ static_cast<std::uint64_t>(cell);
    records[cell] = train(cfg);
  });

  AblationTable table;
  for (std::size_t ti = 0; ti < toggles.size(); ++ti) {
    AblationCell cell;
    cell.toggle = toggles[ti];
    std::vector<double> losses, errors;
    for (std::size_t r = 0; r < repeats; ++r) {
      RunRecord& rec = records[ti * repeats + r];
      cell.failed = cell.failed || rec.status != "ok";
      losses.push_back(rec.final_eval().train_loss);
      errors.push_back(rec.final_eval().train_error);
      cell.runs.push_back(std::move(rec));
    }
    cell.mean_final_train_loss = mean_of(losses);
    cell.range_final_train_loss = range_of(losses);
    cell.mean_final_train_error = mean_of(errors);
    cell.range_final_train_error = range_of(errors);
    table.cells.push_back(std::move(cell));
  }
  return table;
}

std::string ablation_csv(const AblationTable& t) {
  std::string out =
      "constrain_mean,constrain_norm,repeats,mean_final_train_loss,"
      "range_final_train_loss,mean_final_train_error,range_final_train_error,"
      "failed\n";
  for (const auto& c : t.cells) {
    out += c.toggle.constrain_mean ? "1," : "0,";
    out += c.toggle.constrain_norm ? "1," : "0,";
    out += std::to_string(c.runs.size());
    out += ",";
    out += fmt(c.mean_final_train_loss);
    out += ",";
    out += fmt(c.range_final_train_loss);
    out += ",";
    out += fmt(c.mean_final_train_error);
    out += ",";
    out += fmt(c.range_final_train_error);
    out += c.failed ? ",1\n" : ",0\n";
  }
  return out;
}

GridResult run_grid(const TrainConfig& base, const std::vector<double>& lrs,
                    std::size_t repeats, std::size_t jobs) {
  if (lrs.empty()) throw ConfigError("grid: no learning rates given");
  if (repeats == 0) throw ConfigError("grid: repeats must be positive");

  const std::size_t n_cells = lrs.size() * repeats;
  std::vector<RunRecord> records(n_cells);
  run_cells(n_cells, jobs, [&](std::size_t cell) {
    TrainConfig cfg = with_learning_rate(base, lrs[cell / repeats]);
    cfg.seed = base.seed ^ static_cast<std::uint64_t>(cell);
    records[cell] = train(cfg);
  });

  GridResult grid;
  for (std::size_t li = 0; li < lrs.size(); ++li) {
    GridCell cell;
    cell.lr = lrs[li];
    std::vector<double> vals;
    for (std::size_t r = 0; r < repeats; ++r) {
      RunRecord& rec = records[li * repeats + r];
      cell.failed = cell.failed || rec.status != "ok";
      vals.push_back(rec.final_eval().val_error);
      cell.runs.push_back(std::move(rec));
    }
    cell.mean_final_val_error = mean_of(vals);
    grid.cells.push_back(std::move(cell));
  }

  // Best by validation among survivors; ties break toward the smaller lr.
  for (std::size_t i = 0; i < grid.cells.size(); ++i) {
    const GridCell& c = grid.cells[i];
    if (c.failed) continue;
    if (grid.best_index < 0) {
      grid.best_index = static_cast<int>(i);
      continue;
    }
    const GridCell& best = grid.cells[static_cast<std::size_t>(grid.best_index)];
    if (c.mean_final_val_error < best.mean_final_val_error ||
        (c.mean_final_val_error == best.mean_final_val_error && c.lr < best.lr))
      grid.best_index = static_cast<int>(i);
  }
  return grid;
}

std::string grid_csv(const GridResult& g) {
  std::string out = "lr,repeats,mean_final_val_error,failed,best\n";
  for (std::size_t i = 0; i < g.cells.size(); ++i) {
    const auto& c = g.cells[i];
    out += fmt(c.lr);
    out += ",";
    out += std::to_string(c.runs.size());
    out += ",";
    out += fmt(c.mean_final_val_error);
    out += c.failed ? ",1" : ",0";
    out += (static_cast<int>(i) == g.best_index) ? ",1\n" : ",0\n";
  }
  return out;
}

}  // namespace nero
