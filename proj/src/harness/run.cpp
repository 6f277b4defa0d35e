#include "nero/harness/run.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>

#include "nero/errors.hpp"
#include "nero/graph.hpp"
#include "nero/kernels.hpp"

namespace nero {

using json = nlohmann::json;

namespace {

constexpr double kDivergenceLossCap = 1e6;

// Shortest round-trip decimal rendering, locale-independent.
std::string fmt_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

std::unique_ptr<Optimizer> build_optimizer(const OptimizerSpec& spec,
                                           const std::vector<ParamGroup>& groups) {
  if (const auto* nero_cfg = std::get_if<NeroConfig>(&spec))
    return std::make_unique<NeroOptimizer>(groups, *nero_cfg);
  const auto& b = std::get<BaselineSpec>(spec);
  return std::make_unique<BaselineOptimizer>(groups, b.cfg, b.constrain_mean,
                                             b.constrain_norm);
}

SplitData load_data(const DatasetSpec& spec, Rng& data_rng) {
  if (const auto* m = std::get_if<MnistSubsetSpec>(&spec))
    return load_mnist_subset(*m);
  return make_blobs_split(std::get<BlobsSpec>(spec), data_rng);
}

EvalRow evaluate_all(const Model& model, const SplitData& data,
                     std::uint64_t epoch) {
  EvalRow row;
  row.epoch = epoch;
  const auto train = model.evaluate(data.train.inputs, data.train.labels);
  const auto val = model.evaluate(data.val.inputs, data.val.labels);
  const auto test = model.evaluate(data.test.inputs, data.test.labels);
  row.train_loss = train.loss;
  row.train_error = train.error;
  row.val_loss = val.loss;
  row.val_error = val.error;
  row.test_loss = test.loss;
  row.test_error = test.error;
  return row;
}

void append_residuals(const Model& model, StepRow& row) {
  for (const auto& g : model.groups()) {
    if (g.kind != ParamKind::neuron_matrix || !g.project) continue;
    double worst_mean = 0.0, worst_norm = 0.0;
    for (std::size_t i = 0; i < g.num_neurons; ++i) {
      auto w = g.values.row(i);
      const double s = kernels::ops().sum(w.data(), w.size());
      const double n = std::sqrt(kernels::ops().sumsq(w.data(), w.size()));
      worst_mean = std::max(worst_mean, std::abs(s));
      worst_norm = std::max(worst_norm, std::abs(n - 1.0));
    }
    row.res_mean.push_back(worst_mean);
    row.res_norm.push_back(worst_norm);
  }
}

}  // namespace

RunRecord train(const TrainConfig& cfg, const std::string& output_dir) {
  const auto t_start = std::chrono::steady_clock::now();

  RunRecord rec;
  rec.config_snapshot = train_config_to_json(cfg);
  rec.hash = config_hash(cfg);

  Rng root(cfg.seed);
  Rng init_rng = root.derive(static_cast<std::uint64_t>(RunStream::init));
  Rng shuffle_rng = root.derive(static_cast<std::uint64_t>(RunStream::shuffle));
  Rng data_rng = root.derive(static_cast<std::uint64_t>(RunStream::data));

  const SplitData data = load_data(cfg.dataset, data_rng);
  if (data.train.dim() != cfg.model.input_dim)
    throw ConfigError("train: dataset dim " + std::to_string(data.train.dim()) +
                      " does not match model input_dim " +
                      std::to_string(cfg.model.input_dim));

  Model model(cfg.model, init_rng);
  auto optimizer = build_optimizer(cfg.optimizer, model.groups());

  for (const auto& g : model.groups())
    rec.grad_norm_columns.push_back("grad_norm_" + g.name);
  if (optimizer->maintains_constraints()) {
    for (const auto& g : model.groups())
      if (g.kind == ParamKind::neuron_matrix && g.project)
        rec.residual_columns.push_back("res_mean_" + g.name);
    for (const auto& g : model.groups())
      if (g.kind == ParamKind::neuron_matrix && g.project)
        rec.residual_columns.push_back("res_norm_" + g.name);
  }

  bool failed = false;
  // Evaluations can also surface divergence (non-finite activations);
  // record it as a failed run instead of letting it escape, so grid and
  // ablation cells always finish with a status.
  auto try_eval = [&](std::uint64_t epoch, std::uint64_t at_step) {
    try {
      rec.evals.push_back(evaluate_all(model, data, epoch));
      rec.best_val_error = std::min(rec.best_val_error, rec.evals.back().val_error);
    } catch (const NumericalError& e) {
      rec.status = "failed";
      rec.failed_at_step = at_step;
      rec.failure = e.what();
      failed = true;
    }
  };

  rec.best_val_error = 1.0;
  try_eval(0, 0);

  const std::size_t n_train = data.train.count();
  const std::size_t batch = std::min(cfg.batch_size, n_train);
  const std::size_t steps_per_epoch = (n_train + batch - 1) / batch;
  const double spe = static_cast<double>(steps_per_epoch);

  std::vector<std::uint32_t> order(n_train);
  std::uint64_t step = 0;

  for (std::size_t epoch = 0; epoch < cfg.epochs && !failed; ++epoch) {
    for (std::size_t i = 0; i < n_train; ++i) order[i] = static_cast<std::uint32_t>(i);
    shuffle_rng.shuffle(order);

    for (std::size_t start = 0; start < n_train; start += batch) {
      const std::size_t count = std::min(batch, n_train - start);
      Tensor bx({count, data.train.dim()});
      std::vector<int> by(count);
      for (std::size_t i = 0; i < count; ++i) {
        const std::uint32_t src = order[start + i];
        std::memcpy(bx.row(i).data(), data.train.inputs.row(src).data(),
                    data.train.dim() * sizeof(double));
        by[i] = data.train.labels[src];
      }

      step += 1;
      StepRow row;
      row.step = step;
      row.epoch = epoch;
      row.lr_multiplier = cfg.schedule.multiplier(step, spe);

      try {
        Graph g;
        auto h = model.forward(g, bx);
        const int loss_node = model.loss(g, h, by);
        row.train_loss = g.value(loss_node).item();
        if (!std::isfinite(row.train_loss) ||
            row.train_loss > kDivergenceLossCap) {
          rec.status = "failed";
          rec.failed_at_step = step;
          rec.failure = "divergence: train_loss " + fmt_double(row.train_loss);
          failed = true;
        } else {
          const auto preds = model.predict(g.value(h.logits));
          std::size_t wrong = 0;
          for (std::size_t i = 0; i < count; ++i)
            if (preds[i] != by[i]) ++wrong;
          row.train_error = static_cast<double>(wrong) / static_cast<double>(count);

          g.backward(loss_node);
          model.collect_grads(g, h);
          for (const auto& grp : model.groups())
            row.grad_norms.push_back(grp.grad.frobenius_norm());

          optimizer->step(model.groups(), row.lr_multiplier);
          model.step_counter += 1;
          if (optimizer->maintains_constraints()) append_residuals(model, row);
        }
      } catch (const NumericalError& e) {
        rec.status = "failed";
        rec.failed_at_step = step;
        rec.failure = e.what();
        failed = true;
      }

      rec.steps.push_back(std::move(row));
      if (failed) break;
    }

    if (!failed) try_eval(epoch + 1, step);
  }

  if (const auto* nero_opt = dynamic_cast<const NeroOptimizer*>(optimizer.get()))
    rec.norm_floor_hits = nero_opt->norm_floor_hits();

  rec.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();

  if (!output_dir.empty()) {
    std::filesystem::create_directories(output_dir);
    std::ofstream csv(output_dir + "/metrics.csv", std::ios::binary);
    csv << metrics_csv(rec);
    std::ofstream summary(output_dir + "/summary.json", std::ios::binary);
    summary << summary_json(rec).dump(2) << "\n";
    OptimizerState opt_state;
    opt_state.name = optimizer->name();
    opt_state.t = optimizer->steps();
    opt_state.blobs = optimizer->state_blobs();
    save_checkpoint_file(output_dir + "/checkpoint.bin", model, &opt_state);
    if (!csv || !summary)
      throw DataError("train: failed writing run outputs to " + output_dir);
  }
  return rec;
}

std::string metrics_csv(const RunRecord& r) {
  json columns = json::array({"step", "epoch", "lr_multiplier", "train_loss",
                              "train_error"});
  for (const auto& c : r.grad_norm_columns) columns.push_back(c);
  for (const auto& c : r.residual_columns) columns.push_back(c);
  const json head = {
      {"schema_version", 1}, {"config_hash", r.hash}, {"columns", columns}};

  std::string out = head.dump();
  out += "\n";
  bool first = true;
  for (const auto& c : columns) {
    if (!first) out += ",";
    out += c.get<std::string>();
    first = false;
  }
  out += "\n";
  for (const auto& s : r.steps) {
    out += std::to_string(s.step);
    out += ",";
    out += std::to_string(s.epoch);
    out += ",";
    out += fmt_double(s.lr_multiplier);
    out += ",";
    out += fmt_double(s.train_loss);
    out += ",";
    out += fmt_double(s.train_error);
    for (double v : s.grad_norms) {
      out += ",";
      out += fmt_double(v);
    }
    // A failed step has no post-update residuals; pad so rows stay rectangular.
    for (std::size_t i = s.grad_norms.size(); i < r.grad_norm_columns.size(); ++i)
      out += ",";
    for (double v : s.res_mean) {
      out += ",";
      out += fmt_double(v);
    }
    for (double v : s.res_norm) {
      out += ",";
      out += fmt_double(v);
    }
    for (std::size_t i = s.res_mean.size() + s.res_norm.size();
         i < r.residual_columns.size(); ++i)
      out += ",";
    out += "\n";
  }
  return out;
}

json summary_json(const RunRecord& r) {
  json evals = json::array();
  for (const auto& e : r.evals)
    evals.push_back({{"epoch", e.epoch},
                     {"train_loss", e.train_loss},
                     {"train_error", e.train_error},
                     {"val_loss", e.val_loss},
                     {"val_error", e.val_error},
                     {"test_loss", e.test_loss},
                     {"test_error", e.test_error}});
  const EvalRow& last = r.final_eval();
  return {{"schema_version", 1},
          {"config", r.config_snapshot},
          {"config_hash", r.hash},
          {"status", r.status},
          {"failed_at_step", r.failed_at_step},
          {"failure", r.failure},
          {"evals", evals},
          {"final",
           {{"train_loss", last.train_loss},
            {"train_error", last.train_error},
            {"val_loss", last.val_loss},
            {"val_error", last.val_error},
            {"test_loss", last.test_loss},
            {"test_error", last.test_error}}},
          {"best_val_error", r.best_val_error},
          {"steps_logged", r.steps.size()},
          {"norm_floor_hits", r.norm_floor_hits},
          {"wall_seconds", r.wall_seconds}};
}

}  // namespace nero
