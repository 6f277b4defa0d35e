// nerokit command-line interface.
//
// Subcommands: train, ablate, grid, probe {stability|trust|robustness},
// bound, data {fetch-mnist|make-blobs|inspect-idx}, gradcheck.
// Exit codes: 0 success, 2 config error, 3 numerical failure,
// 4 data/format error.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>

#include "CLI11.hpp"
#include "nero/analysis.hpp"
#include "nero/errors.hpp"
#include "nero/graph.hpp"
#include "nero/harness/experiments.hpp"
#include "nero/harness/fetch.hpp"
#include "nero/harness/gradcheck.hpp"
#include "nero/harness/idx.hpp"
#include "nero/harness/run.hpp"
#include "nero/kernels.hpp"
#include "json.hpp"

namespace {

using nero::Tensor;
using json = nlohmann::json;

std::string resolve_output_dir(const nero::TrainConfig& cfg,
                               const std::string& flag_dir) {
  if (!flag_dir.empty()) return flag_dir;
  if (!cfg.output_dir.empty()) return cfg.output_dir;
  if (const char* env = std::getenv("NEROKIT_OUTPUT_DIR"))
    return std::string(env) + "/" + nero::config_hash(cfg);
  return "runs/" + nero::config_hash(cfg);
}

std::vector<double> parse_lr_list(const std::string& text) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto comma = text.find(',', pos);
    const std::string tok =
        text.substr(pos, comma == std::string::npos ? comma : comma - pos);
    try {
      out.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw nero::ConfigError("bad learning rate \"" + tok + "\"");
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  if (out.empty()) throw nero::ConfigError("empty learning-rate list");
  return out;
}

std::vector<nero::ConstraintToggle> parse_toggles(const std::string& text) {
  std::vector<nero::ConstraintToggle> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto comma = text.find(',', pos);
    const std::string tok =
        text.substr(pos, comma == std::string::npos ? comma : comma - pos);
    if (tok == "both")
      out.push_back({true, true});
    else if (tok == "mean")
      out.push_back({true, false});
    else if (tok == "norm")
      out.push_back({false, true});
    else if (tok == "none")
      out.push_back({false, false});
    else
      throw nero::ConfigError("bad toggle \"" + tok +
                              "\" (expected both|mean|norm|none)");
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

/// Weight tensors (one per layer) plus a full-batch loss-and-gradients
/// closure over them, built from a checkpointed model and its dataset.
struct ProbeSetup {
  nero::Model model;
  nero::SplitData data;
  std::vector<Tensor> weights;
  std::vector<std::size_t> weight_groups;  // group index per layer

  nero::LayerLossFn loss_fn() {
    return [this](const std::vector<Tensor>& W) {
      for (std::size_t l = 0; l < W.size(); ++l)
        model.groups()[weight_groups[l]].values = W[l];
      nero::Graph g;
      auto h = model.forward(g, data.train.inputs);
      const int loss = model.loss(g, h, data.train.labels);
      g.backward(loss);
      model.collect_grads(g, h);
      nero::LossEval eval;
      eval.loss = g.value(loss).item();
      for (std::size_t gi : weight_groups)
        eval.grads.push_back(model.groups()[gi].grad);
      return eval;
    };
  }
};

ProbeSetup make_probe_setup(const std::string& config_path,
                            const std::string& checkpoint_path) {
  const nero::TrainConfig cfg = nero::load_config_file(config_path);
  ProbeSetup p{nero::load_checkpoint_file(checkpoint_path), {}, {}, {}};
  nero::Rng root(cfg.seed);
  nero::Rng data_rng =
      root.derive(static_cast<std::uint64_t>(nero::RunStream::data));
  if (const auto* m = std::get_if<nero::MnistSubsetSpec>(&cfg.dataset))
    p.data = nero::load_mnist_subset(*m);
  else
    p.data = nero::make_blobs_split(std::get<nero::BlobsSpec>(cfg.dataset),
                                    data_rng);
  const auto& groups = p.model.groups();
  for (std::size_t i = 0; i < groups.size(); ++i)
    if (groups[i].kind == nero::ParamKind::neuron_matrix) {
      p.weights.push_back(groups[i].values);
      p.weight_groups.push_back(i);
    }
  return p;
}

/// Candidate step for the stability/trust probes: per layer,
/// -rel_step * ||W_l||_F * (gradient direction), or a seeded random
/// direction of the same size.
std::vector<Tensor> probe_step(ProbeSetup& p, double rel_step,
                               const std::string& direction,
                               std::uint64_t seed) {
  const auto eval = p.loss_fn()(p.weights);
  std::vector<Tensor> dW;
  nero::Rng rng(seed);
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    Tensor d = Tensor::zeros_like(p.weights[l]);
    const double wnorm = p.weights[l].frobenius_norm();
    if (direction == "grad") {
      const double gnorm = eval.grads[l].frobenius_norm();
      if (gnorm == 0.0)
        throw nero::DegenerateError("probe: zero gradient in layer " +
                                    std::to_string(l));
      for (std::size_t i = 0; i < d.size(); ++i)
        d[i] = -rel_step * wnorm * eval.grads[l][i] / gnorm;
    } else {
      rng.fill_normal(d.flat());
      const double dnorm = d.frobenius_norm();
      for (std::size_t i = 0; i < d.size(); ++i)
        d[i] *= rel_step * wnorm / dnorm;
    }
    dW.push_back(std::move(d));
  }
  return dW;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"nerokit: per-neuron projected-gradient training toolkit"};
  app.require_subcommand(1);
  std::string kernels_flag = "auto";
  app.add_option("--kernels", kernels_flag,
                 "Kernel backend: auto|scalar|avx2 (default auto)");

  // train
  auto* cmd_train = app.add_subcommand("train", "Run one training job");
  std::string train_config, train_out;
  cmd_train->add_option("--config", train_config, "Config JSON file")
      ->required();
  cmd_train->add_option("--output-dir", train_out,
                        "Where to write metrics.csv / summary.json / "
                        "checkpoint.bin (default: config output_dir, then "
                        "$NEROKIT_OUTPUT_DIR/<hash>, then runs/<hash>)");

  // ablate
  auto* cmd_ablate = app.add_subcommand(
      "ablate", "Constraint ablation over toggle pairs (nero only)");
  std::string ab_config, ab_toggles = "both,mean,norm,none", ab_out;
  std::size_t ab_repeats = 3, ab_jobs = 1;
  cmd_ablate->add_option("--config", ab_config, "Config JSON file")->required();
  cmd_ablate->add_option("--toggles", ab_toggles,
                         "Comma list of both|mean|norm|none");
  cmd_ablate->add_option("--repeats", ab_repeats, "Seeded repeats per cell");
  cmd_ablate->add_option("--jobs", ab_jobs, "Parallel cells");
  cmd_ablate->add_option("--output-dir", ab_out, "Where to write ablation.csv");

  // grid
  auto* cmd_grid =
      app.add_subcommand("grid", "Learning-rate grid, best by validation");
  std::string gr_config, gr_lrs = "0.0001,0.001,0.01,0.1,1.0", gr_out;
  std::size_t gr_repeats = 1, gr_jobs = 1;
  cmd_grid->add_option("--config", gr_config, "Config JSON file")->required();
  cmd_grid->add_option("--lrs", gr_lrs, "Comma list of learning rates");
  cmd_grid->add_option("--repeats", gr_repeats, "Seeded repeats per lr");
  cmd_grid->add_option("--jobs", gr_jobs, "Parallel cells");
  cmd_grid->add_option("--output-dir", gr_out, "Where to write grid.csv");

  // probe
  auto* cmd_probe = app.add_subcommand(
      "probe", "Geometry/analysis probes on a checkpoint (JSON lines)");
  cmd_probe->require_subcommand(1);
  std::string pr_config, pr_ckpt;
  double pr_rel_step = 0.01, pr_tol = 0.02;
  std::size_t pr_samples = 1000;
  std::uint64_t pr_seed = 1;
  std::string pr_direction = "grad";
  auto add_probe_common = [&](CLI::App* c) {
    c->add_option("--config", pr_config, "Config JSON file (for the dataset)")
        ->required();
    c->add_option("--checkpoint", pr_ckpt, "Model checkpoint")->required();
  };
  auto* probe_stab = cmd_probe->add_subcommand(
      "stability", "Per-layer stable-step inequality at a candidate step");
  add_probe_common(probe_stab);
  probe_stab->add_option("--rel-step", pr_rel_step, "Relative step size");
  probe_stab->add_option("--direction", pr_direction, "grad|random");
  probe_stab->add_option("--probe-seed", pr_seed, "Seed for random directions");
  auto* probe_trust = cmd_probe->add_subcommand(
      "trust", "Per-layer relative-smoothness product bound");
  add_probe_common(probe_trust);
  probe_trust->add_option("--rel-step", pr_rel_step, "Relative step size");
  probe_trust->add_option("--direction", pr_direction, "grad|random");
  probe_trust->add_option("--probe-seed", pr_seed, "Seed for random directions");
  auto* probe_rob = cmd_probe->add_subcommand(
      "robustness", "Sampled simultaneous-rotation tolerance estimate");
  add_probe_common(probe_rob);
  probe_rob->add_option("--samples", pr_samples, "Rotation draws per candidate");
  probe_rob->add_option("--tol", pr_tol, "Bisection tolerance (radians)");
  probe_rob->add_option("--probe-seed", pr_seed, "Rotation sampling seed");

  // bound
  auto* cmd_bound =
      app.add_subcommand("bound", "PAC-Bayes spherical-cap bound calculator");
  std::size_t bd_m = 1, bd_d = 3, bd_n = 2;
  double bd_alpha = 1.0, bd_delta = 0.01, bd_k = 1.0;
  std::string bd_fanins, bd_alpha_grid;
  cmd_bound->add_option("--m", bd_m, "Neuron count")->required();
  cmd_bound->add_option("--d", bd_d, "Fan-in")->required();
  auto* bd_alpha_opt =
      cmd_bound->add_option("--alpha", bd_alpha, "Robustness angle (radians)");
  cmd_bound->add_option("--alpha-grid", bd_alpha_grid,
                        "Comma list of angles; one JSON line per grid point")
      ->excludes(bd_alpha_opt);
  cmd_bound->add_option("--n", bd_n, "Training sample count")->required();
  cmd_bound->add_option("--delta", bd_delta, "Confidence level")->required();
  cmd_bound->add_option("--k", bd_k, "Number of distinct solutions K");
  cmd_bound->add_option("--fan-ins", bd_fanins,
                        "Comma list of per-neuron fan-ins (overrides --d)");

  // data
  auto* cmd_data = app.add_subcommand("data", "Dataset utilities");
  cmd_data->require_subcommand(1);
  auto* data_fetch =
      cmd_data->add_subcommand("fetch-mnist", "Download the MNIST IDX files");
  std::string fm_dir = "data/mnist";
  std::string fm_url = "http://ossci-datasets.s3.amazonaws.com/mnist";
  data_fetch->add_option("--dir", fm_dir, "Target directory");
  data_fetch->add_option("--base-url", fm_url, "Plain-http mirror base URL");
  auto* data_blobs =
      cmd_data->add_subcommand("make-blobs", "Write a synthetic blobs dataset");
  std::size_t mb_classes = 2, mb_dim = 2, mb_count = 100;
  double mb_sigma = 0.1;
  std::uint64_t mb_seed = 1;
  std::string mb_out = "blobs.json";
  data_blobs->add_option("--classes", mb_classes, "Class count (>= 2)");
  data_blobs->add_option("--dim", mb_dim, "Input dimension");
  data_blobs->add_option("--count", mb_count, "Point count");
  data_blobs->add_option("--sigma", mb_sigma, "Per-class noise scale");
  data_blobs->add_option("--seed", mb_seed, "Seed");
  data_blobs->add_option("--out", mb_out, "Output JSON path");
  auto* data_inspect =
      cmd_data->add_subcommand("inspect-idx", "Parse and describe an IDX file");
  std::string ii_file;
  data_inspect->add_option("--file", ii_file, "IDX file")->required();

  // gradcheck
  auto* cmd_gradcheck = app.add_subcommand(
      "gradcheck", "Finite-difference check of the autodiff core");
  std::size_t gc_models = 100;
  std::uint64_t gc_seed = 1;
  cmd_gradcheck->add_option("--models", gc_models, "Random MLPs to check");
  cmd_gradcheck->add_option("--seed", gc_seed, "Seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (kernels_flag == "scalar")
    nero::kernels::set_backend(nero::kernels::Backend::scalar);
  else if (kernels_flag == "avx2")
    nero::kernels::set_backend(nero::kernels::Backend::avx2);
  else if (kernels_flag != "auto")
    throw nero::ConfigError("--kernels must be auto|scalar|avx2");

  if (cmd_train->parsed()) {
    const nero::TrainConfig cfg = nero::load_config_file(train_config);
    const std::string dir = resolve_output_dir(cfg, train_out);
    const nero::RunRecord rec = nero::train(cfg, dir);
    std::cout << "status: " << rec.status << "\n";
    if (rec.status != "ok") {
      std::cout << "failed at step " << rec.failed_at_step << ": "
                << rec.failure << "\n";
      return 3;
    }
    const auto& last = rec.final_eval();
    std::cout << "final train_error " << last.train_error << " val_error "
              << last.val_error << " test_error " << last.test_error << "\n"
              << "outputs in " << dir << "\n";
    return 0;
  }

  if (cmd_ablate->parsed()) {
    const nero::TrainConfig cfg = nero::load_config_file(ab_config);
    const auto table =
        nero::run_ablation(cfg, parse_toggles(ab_toggles), ab_repeats, ab_jobs);
    const std::string csv = nero::ablation_csv(table);
    std::cout << csv;
    if (!ab_out.empty()) {
      std::filesystem::create_directories(ab_out);
      std::ofstream f(ab_out + "/ablation.csv", std::ios::binary);
      f << csv;
    }
    return 0;
  }

  if (cmd_grid->parsed()) {
    const nero::TrainConfig cfg = nero::load_config_file(gr_config);
    const auto grid =
        nero::run_grid(cfg, parse_lr_list(gr_lrs), gr_repeats, gr_jobs);
    const std::string csv = nero::grid_csv(grid);
    std::cout << csv;
    if (grid.best_index >= 0)
      std::cout << "best lr "
                << grid.cells[static_cast<std::size_t>(grid.best_index)].lr
                << " (mean final val_error "
                << grid.cells[static_cast<std::size_t>(grid.best_index)]
                       .mean_final_val_error
                << ")\n";
    else
      std::cout << "no surviving cells\n";
    if (!gr_out.empty()) {
      std::filesystem::create_directories(gr_out);
      std::ofstream f(gr_out + "/grid.csv", std::ios::binary);
      f << csv;
    }
    return 0;
  }

  if (cmd_probe->parsed()) {
    ProbeSetup setup = make_probe_setup(pr_config, pr_ckpt);
    if (probe_stab->parsed() || probe_trust->parsed()) {
      auto dW = probe_step(setup, pr_rel_step, pr_direction, pr_seed);
      if (probe_stab->parsed()) {
        const auto report = nero::check_stability(setup.loss_fn(), setup.weights, dW);
        for (std::size_t l = 0; l < report.layers.size(); ++l)
          std::cout << json{{"layer", l},
                            {"lhs_ratio", report.layers[l].lhs_ratio},
                            {"cos_theta", report.layers[l].cos_theta},
                            {"stable", report.layers[l].stable}}
                           .dump()
                    << "\n";
        std::cout << json{{"overall_stable", report.stable}}.dump() << "\n";
      } else {
        const auto report = nero::check_trust(setup.loss_fn(), setup.weights, dW);
        for (std::size_t l = 0; l < report.layers.size(); ++l)
          std::cout << json{{"layer", l},
                            {"lhs_ratio", report.layers[l].lhs_ratio},
                            {"rhs_bound", report.layers[l].rhs_bound},
                            {"satisfied", report.layers[l].satisfied}}
                           .dump()
                    << "\n";
        std::cout << json{{"overall_satisfied", report.satisfied_all}}.dump()
                  << "\n";
      }
    } else {
      nero::Rng rng(pr_seed);
      const auto est = nero::estimate_alpha_robustness(
          setup.model, setup.data.train.inputs, setup.data.train.labels,
          pr_samples, pr_tol, rng);
      std::cout << json{{"alpha_hat", est.alpha_hat},
                        {"samples", est.samples},
                        {"note", est.note}}
                       .dump()
                << "\n";
    }
    return 0;
  }

  if (cmd_bound->parsed()) {
    if (bd_alpha_grid.empty() && bd_alpha_opt->count() == 0)
      throw nero::ConfigError("bound: give --alpha or --alpha-grid");
    nero::BoundInputs inputs;
    inputs.m = bd_m;
    inputs.d = bd_d;
    inputs.n = bd_n;
    inputs.delta = bd_delta;
    inputs.k_solutions = bd_k;
    if (!bd_fanins.empty())
      for (double v : parse_lr_list(bd_fanins))
        inputs.fan_ins.push_back(static_cast<std::size_t>(v));
    const std::vector<double> alphas = bd_alpha_grid.empty()
                                           ? std::vector<double>{bd_alpha}
                                           : parse_lr_list(bd_alpha_grid);
    for (const double alpha : alphas) {
      inputs.alpha = alpha;
      const auto r = nero::pac_bayes_bound(inputs);
      json out = {{"alpha", alpha}};
      if (r.infinite) {
        out["bound"] = "+inf";
        out["note"] = r.note;
      } else {
        out["ball_bound"] = r.ball_bound;
        out["cap_bound"] = r.cap_bound;
        out["log_pvs_ball"] = r.log_pvs_ball;
        out["log_pvs_cap"] = r.log_pvs_cap;
        if (!r.note.empty()) out["note"] = r.note;
      }
      std::cout << out.dump() << "\n";
    }
    return 0;
  }

  if (data_fetch->parsed()) {
    nero::fetch_mnist(fm_dir, fm_url);
    std::cout << "mnist files ready in " << fm_dir << "\n";
    return 0;
  }

  if (data_blobs->parsed()) {
    nero::Rng rng(mb_seed);
    const auto d = nero::make_blobs(mb_classes, mb_dim, mb_count, mb_sigma, rng);
    json rows = json::array();
    for (std::size_t i = 0; i < d.count(); ++i) {
      json row = json::array();
      for (double v : d.inputs.row(i)) row.push_back(v);
      rows.push_back(row);
    }
    const json out = {{"classes", mb_classes}, {"dim", mb_dim},
                      {"count", mb_count},     {"sigma", mb_sigma},
                      {"seed", mb_seed},       {"inputs", rows},
                      {"labels", d.labels}};
    std::ofstream f(mb_out, std::ios::binary);
    if (!f) throw nero::DataError("cannot open " + mb_out + " for writing");
    f << out.dump(2) << "\n";
    std::cout << "wrote " << mb_out << "\n";
    return 0;
  }

  if (data_inspect->parsed()) {
    const auto f = nero::read_idx(ii_file);
    std::cout << json{{"magic", f.magic},
                      {"dims", f.dims},
                      {"payload_bytes", f.payload.size()}}
                     .dump()
              << "\n";
    return 0;
  }

  if (cmd_gradcheck->parsed()) {
    const auto res = nero::mlp_gradcheck(gc_models, gc_seed);
    std::cout << "max relative error over " << res.models_checked
              << " random 3-layer models: " << res.max_rel_error << "\n";
    if (res.max_rel_error > 1e-6) {
      std::cout << "FAIL (tolerance 1e-6)\n";
      return 3;
    }
    std::cout << "OK (tolerance 1e-6)\n";
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_cli(argc, argv);
  } catch (const nero::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const nero::DimensionError& e) {
    std::cerr << "dimension error: " << e.what() << "\n";
    return 2;
  } catch (const nero::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 4;
  } catch (const nero::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
