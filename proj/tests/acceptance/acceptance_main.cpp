// Acceptance suite. Prints one pass/fail line per criterion and exits
// nonzero if any ran criterion failed.
//
// Suites:
//   core   - every criterion that runs on synthetic data (C1-C6, C7 scale
//            identity + jacobian parts, C9-C13)
//   mnist  - the two end-to-end MNIST criteria (C7 end-to-end, C8). If
//            the IDX files are absent and cannot be fetched, exits 77 so
//            ctest reports a skip rather than a silent pass.
//
// Usage: acceptance --suite core|mnist|all --cli <path-to-cli>
//                   [--scratch dir] [--mnist-dir dir] [--jobs N]

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <numbers>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "nero/analysis.hpp"
#include "nero/errors.hpp"
#include "nero/graph.hpp"
#include "nero/harness/config.hpp"
#include "nero/harness/dataset.hpp"
#include "nero/harness/experiments.hpp"
#include "nero/harness/fetch.hpp"
#include "nero/harness/gradcheck.hpp"
#include "nero/harness/idx.hpp"
#include "nero/harness/run.hpp"
#include "nero/kernels.hpp"
#include "nero/network.hpp"
#include "nero/optim.hpp"

using namespace nero;
namespace fs = std::filesystem;
constexpr double kPi = std::numbers::pi;

namespace {

struct Options {
  std::string suite = "all";
  std::string cli;
  std::string scratch = "acceptance_scratch";
  std::string mnist_dir = "data/mnist";
  std::size_t jobs = 2;
};

int g_failures = 0;

void run_criterion(const std::string& id, const std::string& name,
                   const std::function<std::string()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  std::string detail;
  bool pass = true;
  try {
    detail = body();
  } catch (const std::exception& e) {
    pass = false;
    detail = std::string("exception: ") + e.what();
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  if (!detail.empty() && detail.rfind("FAIL", 0) == 0) pass = false;
  std::printf("[%s] %s %s (%.1fs)%s%s\n", pass ? "PASS" : "FAIL", id.c_str(),
              name.c_str(), secs, detail.empty() ? "" : " - ",
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

std::string require(bool cond, const std::string& what) {
  return cond ? "" : "FAIL: " + what;
}

// --- C1 ---------------------------------------------------------------
std::string c1_constraint_invariants() {
  TrainConfig cfg;
  cfg.model.depth = 4;
  cfg.model.input_dim = 64;
  cfg.model.hidden_dim = 64;
  cfg.model.output_dim = 4;
  cfg.dataset = BlobsSpec{4, 64, 2048, 0.5};
  cfg.batch_size = 32;
  cfg.epochs = 20;  // 52 steps/epoch on the 1638-sample train split
  cfg.seed = 20240117;
  cfg.optimizer = NeroConfig{};  // eta=0.01, beta=0.999, both constraints

  const auto t0 = std::chrono::steady_clock::now();
  const RunRecord rec = train(cfg);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  if (rec.status != "ok") return "FAIL: run failed: " + rec.failure;
  if (rec.steps.size() < 1000)
    return "FAIL: produced only " + std::to_string(rec.steps.size()) + " steps";
  double worst = 0.0;
  std::size_t counted = 0;
  for (const auto& s : rec.steps) {
    if (counted++ >= 1000) break;
    for (double r : s.res_mean) worst = std::max(worst, r);
    for (double r : s.res_norm) worst = std::max(worst, r);
  }
  if (worst > 1e-9)
    return "FAIL: worst residual " + std::to_string(worst) + " > 1e-9";
  if (secs >= 30.0) return "FAIL: runtime " + std::to_string(secs) + "s >= 30s";
  std::ostringstream os;
  os << "worst residual " << worst << " over 1000 steps, " << secs << "s";
  return os.str();
}

// --- C2 ---------------------------------------------------------------
// Differencing the stored parameters would add cancellation noise above
// the 1e-12 tolerance, so the check reconstructs the applied update with
// the same kernels (bitwise match) and evaluates its relative magnitude
// directly: rel = eta * (||w||/normalizer) * (||g||/||w||) with
// normalizer == ||g|| at t=1 by bias correction.
std::string c2_exact_relative_step() {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t rows = 2 + rng.uniform_below(6);
    const std::size_t cols = 3 + rng.uniform_below(13);
    Tensor w({rows, cols});
    rng.fill_normal(w.flat());
    for (std::size_t i = 0; i < rows; ++i)
      kernels::ops().scal(std::pow(10.0, 2.0 * rng.uniform01() - 1.0),
                          w.row(i).data(), cols);
    Tensor g({rows, cols});
    rng.fill_normal(g.flat());

    ParamGroup grp;
    grp.kind = ParamKind::neuron_matrix;
    grp.num_neurons = rows;
    grp.fan_in = cols;
    grp.project = false;
    grp.grad = g;
    grp.values = w;
    std::vector<ParamGroup> groups = {std::move(grp)};

    NeroConfig cfg;
    cfg.eta = 0.01;
    cfg.beta = 0.0;
    cfg.constrain_mean = false;  // measure the pre-projection step
    cfg.constrain_norm = false;
    NeroOptimizer opt(groups, cfg);
    opt.step(groups, 1.0);

    for (std::size_t i = 0; i < rows; ++i) {
      // Mirror the optimizer's arithmetic exactly.
      const double gsq = kernels::ops().sumsq(g.row(i).data(), cols);
      const double normalizer = std::sqrt(gsq / 1.0);  // bias-corrected, t=1
      const double wnorm = std::sqrt(kernels::ops().sumsq(w.row(i).data(), cols));
      std::vector<double> mirrored(w.row(i).begin(), w.row(i).end());
      kernels::ops().axpy(-cfg.eta * wnorm / normalizer, g.row(i).data(),
                          mirrored.data(), cols);
      for (std::size_t j = 0; j < cols; ++j)
        if (mirrored[j] != groups[0].values.at(i, j))
          return "FAIL: applied update does not match the mirrored kernels";
      // Relative magnitude of the applied step.
      const double gnorm = std::sqrt(gsq);
      const double rel = cfg.eta * wnorm / normalizer * gnorm / wnorm;
      if (std::abs(rel - cfg.eta) > 1e-12 * cfg.eta)
        return "FAIL: neuron relative step " + std::to_string(rel);
    }

    // Scalar-like: b = 0 gives an exact readback (the other coordinates
    // are covered by the mirrored-kernel identity above).
    ParamGroup sg;
    sg.kind = ParamKind::scalar_like;
    sg.sigma_b = 0.01;
    sg.values = Tensor({4});
    sg.grad = Tensor({4});
    rng.fill_normal(sg.grad.flat());
    std::vector<double> grads(sg.grad.flat().begin(), sg.grad.flat().end());
    std::vector<ParamGroup> sgroups = {std::move(sg)};
    NeroOptimizer sopt(sgroups, cfg);
    sopt.step(sgroups, 1.0);
    for (std::size_t i = 0; i < 4; ++i) {
      const double mag = std::abs(sgroups[0].values[i]);
      const double want = cfg.eta * 0.01;
      if (std::abs(mag - want) > 1e-12 * want)
        return "FAIL: scalar step " + std::to_string(mag);
      // direction: opposite the gradient
      if (grads[i] * sgroups[0].values[i] >= 0.0)
        return "FAIL: scalar step not opposite the gradient";
    }
  }
  return "50 random groups: applied kernels match bitwise, |dw|/|w| = eta "
         "and |db| = eta*sigma_b to 1e-12";
}

// --- C3 ---------------------------------------------------------------
std::string c3_per_layer_implication() {
  Rng rng(3);
  std::size_t violations = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t rows = 2 + rng.uniform_below(8);
    const std::size_t cols = 2 + rng.uniform_below(14);
    const double eta = 0.001 + 0.2 * rng.uniform01();
    Tensor W({rows, cols}), dW({rows, cols});
    for (std::size_t i = 0; i < rows; ++i) {
      const double scale = std::pow(10.0, 4.0 * rng.uniform01() - 2.0);
      for (std::size_t j = 0; j < cols; ++j) W.at(i, j) = scale * rng.normal();
      const double wnorm = std::sqrt(kernels::ops().sumsq(W.row(i).data(), cols));
      const double target = eta * rng.uniform01();
      for (std::size_t j = 0; j < cols; ++j) dW.at(i, j) = rng.normal();
      const double dnorm = std::sqrt(kernels::ops().sumsq(dW.row(i).data(), cols));
      for (std::size_t j = 0; j < cols; ++j) dW.at(i, j) *= target * wnorm / dnorm;
    }
    if (layer_relative_size(dW, W) > eta + 1e-12) ++violations;
  }
  if (violations > 0)
    return "FAIL: " + std::to_string(violations) + " violations of 1000";
  return "0 violations over 1000 random heterogeneous layers";
}

// --- C4 ---------------------------------------------------------------
std::string c4_rotation_geometry() {
  Rng rng(4);
  Tensor w({8});
  rng.fill_normal(w.flat());
  project_balanced(w.flat(), true, true);
  for (const double eta : {1e-4, 1e-3, 1e-2, 1e-1, 1.0}) {
    const double theta = 2.0 * std::asin(eta / 2.0);
    const Tensor r = rotate_neuron(w, theta, rng);
    double dsq = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double d = r[i] - w[i];
      dsq += d * d;
    }
    const double chord = std::sqrt(dsq);
    const double angle = std::acos(std::clamp(
        kernels::ops().dot(r.data(), w.data(), w.size()), -1.0, 1.0));
    if (std::abs(angle - 2.0 * std::asin(chord / 2.0)) > 1e-12)
      return "FAIL: chord-angle identity off at eta " + std::to_string(eta);
    if (std::abs(chord - eta) > 1e-12)
      return "FAIL: chord " + std::to_string(chord) + " at eta " +
             std::to_string(eta);
  }

  for (const double eta : {1e-3, 1e-2, 1e-1, 0.5}) {
    Tensor wn = Tensor::matrix(1, 4, {0.5, 0.5, 0.5, 0.5});
    ParamGroup grp;
    grp.kind = ParamKind::neuron_matrix;
    grp.num_neurons = 1;
    grp.fan_in = 4;
    grp.values = wn;
    grp.grad = Tensor::matrix(1, 4, {1.0, -1.0, 0.0, 0.0});  // orthogonal
    std::vector<ParamGroup> groups = {std::move(grp)};
    NeroConfig cfg;
    cfg.eta = eta;
    cfg.beta = 0.0;
    cfg.constrain_mean = false;
    cfg.constrain_norm = true;
    NeroOptimizer opt(groups, cfg);
    opt.step(groups, 1.0);
    const double cosang =
        kernels::ops().dot(groups[0].values.data(), wn.data(), 4);
    const double angle = std::acos(std::clamp(cosang, -1.0, 1.0));
    if (std::abs(angle - std::atan(eta)) > 1e-9)
      return "FAIL: post-step angle " + std::to_string(angle) + " vs atan(" +
             std::to_string(eta) + ")";
  }
  return "chord identity to 1e-12; orthogonal-step angle = atan(eta) to 1e-9";
}

// --- C5 ---------------------------------------------------------------
std::string c5_gradient_exactness() {
  const auto res = mlp_gradcheck(100, 5);
  if (res.max_rel_error > 1e-6)
    return "FAIL: max relative error " + std::to_string(res.max_rel_error);

  // Planted bug: analytic gradient scaled by 1.5.
  Tensor w = Tensor::vector({0.4, -0.2, 0.9, 1.3});
  auto buggy = [](const std::vector<Tensor>& params) {
    double loss = 0.0;
    for (double v : params[0].flat()) loss += std::sin(v);
    Tensor g({params[0].size()});
    for (std::size_t i = 0; i < g.size(); ++i)
      g[i] = 1.5 * std::cos(params[0][i]);
    return std::make_pair(loss, std::vector<Tensor>{g});
  };
  Rng rng(55);
  const auto bug = grad_check(buggy, {w}, 1e-5, 8, rng);
  if (bug.max_rel_error < 0.1)
    return "FAIL: planted bug not detected (error " +
           std::to_string(bug.max_rel_error) + ")";
  std::ostringstream os;
  os << "100 models max rel err " << res.max_rel_error << "; planted bug err "
     << bug.max_rel_error;
  return os.str();
}

// --- C6 ---------------------------------------------------------------
std::string c6_standardisation() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(6);
  Tensor w({1, 256});
  rng.fill_normal(w.flat());
  balance_rows(w);
  const std::size_t n = 100000;
  double sum = 0.0, sumsq = 0.0;
  std::vector<double> x(256);
  for (std::size_t s = 0; s < n; ++s) {
    for (double& v : x) v = 5.0 + rng.normal();
    const double y = kernels::ops().dot(w.data(), x.data(), 256);
    sum += y;
    sumsq += y * y;
  }
  const double mean = sum / static_cast<double>(n);
  const double var = sumsq / static_cast<double>(n) - mean * mean;
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  if (std::abs(mean) > 5.0 / std::sqrt(static_cast<double>(n)))
    return "FAIL: |mean| " + std::to_string(std::abs(mean));
  if (var < 0.95 || var > 1.05) return "FAIL: var " + std::to_string(var);
  if (secs >= 5.0) return "FAIL: runtime " + std::to_string(secs) + "s >= 5s";
  std::ostringstream os;
  os << "mean " << mean << ", var " << var << ", " << secs << "s";
  return os.str();
}

// --- C7 parts a+b (dataset-free) ---------------------------------------
std::string c7_reparam_identity_jacobian() {
  Rng rng(7);
  Tensor w({4, 9});
  rng.fill_normal(w.flat());

  for (const double c : {2.0, 10.0, 100.0}) {
    Tensor cw = w;
    kernels::ops().scal(c, cw.data(), cw.size());
    Graph g;
    const Tensor& y1 = g.value(g.normalize_rows(g.leaf(w, false)));
    const Tensor& y2 = g.value(g.normalize_rows(g.leaf(cw, false)));
    for (std::size_t i = 0; i < y1.size(); ++i)
      if (std::abs(y1[i] - y2[i]) > 1e-12)
        return "FAIL: scale invariance off at c=" + std::to_string(c);
  }

  auto jacobian_norm = [](const Tensor& at) {
    double max_abs = 0.0;
    for (double v : at.flat()) max_abs = std::max(max_abs, std::abs(v));
    const double h = 1e-6 * max_abs;
    double sumsq = 0.0;
    Tensor x = at;
    for (std::size_t ci = 0; ci < x.size(); ++ci) {
      const double saved = x[ci];
      Graph gp;
      x[ci] = saved + h;
      const Tensor yp = gp.value(gp.normalize_rows(gp.leaf(x, false)));
      Graph gm;
      x[ci] = saved - h;
      const Tensor ym = gm.value(gm.normalize_rows(gm.leaf(x, false)));
      x[ci] = saved;
      for (std::size_t r = 0; r < yp.size(); ++r) {
        const double d = (yp[r] - ym[r]) / (2.0 * h);
        sumsq += d * d;
      }
    }
    return std::sqrt(sumsq);
  };
  Tensor small({2, 6});
  rng.fill_normal(small.flat());
  const double base = jacobian_norm(small);
  for (const double c : {3.0, 10.0, 100.0}) {
    Tensor scaled = small;
    kernels::ops().scal(c, scaled.data(), scaled.size());
    const double got = jacobian_norm(scaled);
    if (std::abs(got - base / c) > 1e-6 * (base / c))
      return "FAIL: jacobian norm at c=" + std::to_string(c) + " is " +
             std::to_string(got) + ", want " + std::to_string(base / c);
  }
  return "normalise(c*raw) identical to 1e-12; jacobian scales as 1/c to 1e-6";
}

// --- C9 ---------------------------------------------------------------
std::string c9_cap_measure_oracle() {
  Rng rng(10);  // frozen: every grid point lands within 1.5 SE on this seed
  std::ostringstream os;
  const std::vector<int> dims = {1, 2, 4, 8, 16};
  const std::vector<double> alphas = {0.5, kPi / 3.0, kPi / 2.0, 2.5};
  const std::size_t n = 1000000;
  for (const int k : dims) {
    // One sample batch per dimension, reused across the alpha thresholds.
    std::vector<double> angles(n);
    std::vector<double> v(static_cast<std::size_t>(k) + 1);
    for (std::size_t s = 0; s < n; ++s) {
      for (double& c : v) c = rng.normal();
      const double norm = std::sqrt(kernels::ops().sumsq(v.data(), v.size()));
      angles[s] = std::acos(std::clamp(v[0] / norm, -1.0, 1.0));
    }
    for (const double alpha : alphas) {
      std::size_t hits = 0;
      for (const double a : angles)
        if (a <= alpha) ++hits;
      const double p_hat = static_cast<double>(hits) / static_cast<double>(n);
      const double p = cap_measure(k, alpha);
      const double se = std::sqrt(p * (1.0 - p) / static_cast<double>(n));
      if (std::abs(p_hat - p) > 3.0 * se + 1e-12)
        return "FAIL: cap(" + std::to_string(k) + ", " + std::to_string(alpha) +
               ") = " + std::to_string(p) + " vs MC " + std::to_string(p_hat);
      const double ball = 0.5 * std::pow(std::sin(alpha / 2.0), k);
      if (p < ball - 1e-15)
        return "FAIL: cap below the sin^k lower bound at k=" +
               std::to_string(k);
    }
  }
  return "20 grid points within 3 SE of the 1e6-sample oracle; lower bound "
         "dominated everywhere";
}

// --- C10 --------------------------------------------------------------
std::string c10_pac_bayes_bound() {
  BoundInputs b;
  b.m = 10;
  b.d = 100;
  b.alpha = kPi / 2.0;
  b.n = 10000;
  b.delta = 0.01;
  b.k_solutions = 1.0;
  const auto r = pac_bayes_bound(b);

  // Independent evaluation assembled in long double from scratch:
  // [m ln2 + m(d-2) ln(1/sin(alpha/2)) + ln(2n/delta) - ln K] / (n-1)
  // with alpha/2 = pi/4. Expected value around 0.0361118.
  const long double pi_l = 3.14159265358979323846L;
  const long double expected =
      (10.0L * std::log(2.0L) +
       10.0L * 98.0L * std::log(1.0L / std::sin(pi_l / 4.0L)) +
       std::log(2.0L * 10000.0L / 0.01L)) /
      9999.0L;
  const double rel =
      std::abs(r.ball_bound - static_cast<double>(expected)) /
      static_cast<double>(expected);
  if (rel > 1e-9)
    return "FAIL: bound " + std::to_string(r.ball_bound) + " rel err " +
           std::to_string(rel);

  BoundInputs be = b;
  be.k_solutions = std::numbers::e;
  const auto re = pac_bayes_bound(be);
  const double shift = r.ball_bound - re.ball_bound;
  if (std::abs(shift - 1.0 / 9999.0) > 1e-12 / 9999.0 * 1e3)
    return "FAIL: lnK sensitivity " + std::to_string(shift);
  std::ostringstream os;
  os << "bound " << r.ball_bound << " (rel err " << rel
     << "); lnK shift exact";
  return os.str();
}

// --- C11 --------------------------------------------------------------
std::string c11_stability_probe() {
  Rng rng(11);
  std::size_t stable_seen = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t layers = 1 + rng.uniform_below(3);
    std::vector<std::vector<double>> diags(layers);
    std::vector<Tensor> W, dW;
    for (std::size_t l = 0; l < layers; ++l) {
      const std::size_t ncoef = 2 + rng.uniform_below(6);
      diags[l].resize(ncoef);
      for (double& d : diags[l]) d = 0.2 + 3.0 * rng.uniform01();
      Tensor w({ncoef}), d({ncoef});
      rng.fill_normal(w.flat());
      const double scale = std::pow(10.0, -2.0 * rng.uniform01());
      for (std::size_t i = 0; i < ncoef; ++i)
        d[i] = -scale * (diags[l][i] * w[i] + 0.3 * rng.normal());
      W.push_back(std::move(w));
      dW.push_back(std::move(d));
    }
    auto f = [&diags](const std::vector<Tensor>& Wq) {
      LossEval e;
      for (std::size_t l = 0; l < Wq.size(); ++l) {
        Tensor g = Tensor::zeros_like(Wq[l]);
        for (std::size_t i = 0; i < Wq[l].size(); ++i) {
          g[i] = diags[l][i] * Wq[l][i];
          e.loss += 0.5 * diags[l][i] * Wq[l][i] * Wq[l][i];
        }
        e.grads.push_back(std::move(g));
      }
      return e;
    };
    const auto report = check_stability(f, W, dW);
    if (report.stable) {
      ++stable_seen;
      double before = 0.0, after = 0.0;
      for (std::size_t l = 0; l < layers; ++l)
        for (std::size_t i = 0; i < W[l].size(); ++i) {
          before += 0.5 * diags[l][i] * W[l][i] * W[l][i];
          const double wi = W[l][i] + dW[l][i];
          after += 0.5 * diags[l][i] * wi * wi;
        }
      if (!(after < before))
        return "FAIL: stable step failed to decrease the loss";
    }
  }
  if (stable_seen == 0) return "FAIL: no stable steps sampled";

  // Constructed unstable case: overshooting past the minimum.
  std::vector<std::vector<double>> diags = {{1.0, 1.0}};
  auto f = [&diags](const std::vector<Tensor>& Wq) {
    LossEval e;
    Tensor g = Tensor::zeros_like(Wq[0]);
    for (std::size_t i = 0; i < Wq[0].size(); ++i) {
      g[i] = Wq[0][i];
      e.loss += 0.5 * Wq[0][i] * Wq[0][i];
    }
    e.grads.push_back(std::move(g));
    return e;
  };
  std::vector<Tensor> W = {Tensor::vector({1.0, 1.0})};
  std::vector<Tensor> dW = {Tensor::vector({-2.5, -2.5})};
  if (check_stability(f, W, dW).stable)
    return "FAIL: constructed unstable case judged stable";
  return std::to_string(stable_seen) +
         "/100 stable verdicts, all strictly decreased; unstable case flagged";
}

// --- C12 --------------------------------------------------------------
std::string c12_idx_parser(const Options& opt) {
  const std::vector<std::uint8_t> fixture = {
      0x00, 0x00, 0x08, 0x03, 0x00, 0x00, 0x00, 0x02, 0x00, 0x00,
      0x00, 0x02, 0x00, 0x00, 0x00, 0x02, 0,    51,   102,  153,
      204,  255,  0,    255,
  };
  if (serialize_idx(parse_idx(fixture)) != fixture)
    return "FAIL: byte round-trip mismatch";

  if (opt.cli.empty()) return "FAIL: --cli not provided";
  fs::create_directories(opt.scratch);
  const std::string bad_path = opt.scratch + "/bad_magic.idx";
  {
    auto bad = fixture;
    bad[3] = 0x05;
    std::ofstream f(bad_path, std::ios::binary);
    f.write(reinterpret_cast<const char*>(bad.data()),
            static_cast<std::streamsize>(bad.size()));
  }
  const std::string trunc_path = opt.scratch + "/truncated.idx";
  {
    auto trunc = fixture;
    trunc.resize(trunc.size() - 3);
    std::ofstream f(trunc_path, std::ios::binary);
    f.write(reinterpret_cast<const char*>(trunc.data()),
            static_cast<std::streamsize>(trunc.size()));
  }
  auto run_cli = [&](const std::string& args) {
    const std::string cmd = "'" + opt.cli + "' " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  };
  const int rc_bad = run_cli("data inspect-idx --file '" + bad_path + "'");
  if (rc_bad != 4)
    return "FAIL: wrong-magic exit code " + std::to_string(rc_bad) + " != 4";
  const int rc_trunc = run_cli("data inspect-idx --file '" + trunc_path + "'");
  if (rc_trunc != 4)
    return "FAIL: truncated exit code " + std::to_string(rc_trunc) + " != 4";
  return "round-trip byte-exact; CLI exits 4 on wrong magic and truncation";
}

// --- C13 --------------------------------------------------------------
std::string c13_reproducibility() {
  TrainConfig cfg;
  cfg.model.depth = 3;
  cfg.model.input_dim = 16;
  cfg.model.hidden_dim = 12;
  cfg.model.output_dim = 3;
  cfg.dataset = BlobsSpec{3, 16, 256, 0.4};
  cfg.batch_size = 32;
  cfg.epochs = 3;
  cfg.seed = 1313;

  const RunRecord a = train(cfg);
  const RunRecord b = train(cfg);
  if (metrics_csv(a) != metrics_csv(b))
    return "FAIL: metrics differ between identical runs";
  auto sa = summary_json(a);
  auto sb = summary_json(b);
  sa.erase("wall_seconds");
  sb.erase("wall_seconds");
  if (sa.dump() != sb.dump()) return "FAIL: summaries differ";
  return "two runs byte-identical (wall time excluded), " +
         std::to_string(a.steps.size()) + " steps each";
}

/// Runs fn(i) for i in [0, n) across `jobs` threads (cells independent).
void parallel_cells(std::size_t n, std::size_t jobs,
                    const std::function<void(std::size_t)>& fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> workers;
  for (std::size_t w = 0; w < jobs; ++w)
    workers.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        fn(i);
      }
    });
  for (auto& t : workers) t.join();
}

// --- C7 end-to-end (mnist) ---------------------------------------------
std::string c7_reparam_coupling_mnist(const Options& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  TrainConfig base;
  base.model.depth = 5;
  base.model.input_dim = 784;
  base.model.hidden_dim = 784;
  base.model.output_dim = 10;
  base.model.reparameterised = true;
  base.model.balanced_init = false;
  // train_count 5000: the fixed 20% validation split leaves 4000
  // training samples, the subset size the protocol calls for.
  base.dataset = MnistSubsetSpec{opt.mnist_dir, 5000, 1000};
  base.batch_size = 128;
  base.epochs = 2;
  AdamConfig adam;
  adam.lr = 0.01;
  base.optimizer = BaselineSpec{adam, false, false};

  // 3 seeds x {sigma=1, sigma=100}, independent runs.
  const std::uint64_t seeds[3] = {1, 2, 3};
  const double sigmas[2] = {1.0, 100.0};
  double acc[3][2];
  std::string failure;
  std::mutex failure_mutex;
  parallel_cells(6, opt.jobs, [&](std::size_t cell) {
    const std::size_t si = cell / 2, gi = cell % 2;
    TrainConfig cfg = base;
    cfg.model.init_sigma = sigmas[gi];
    cfg.seed = seeds[si];
    const RunRecord rec = train(cfg);
    if (rec.status != "ok") {
      std::lock_guard<std::mutex> lock(failure_mutex);
      failure = "run failed (sigma " + std::to_string(sigmas[gi]) + "): " +
                rec.failure;
    }
    acc[si][gi] = 1.0 - rec.final_eval().train_error;
  });
  if (!failure.empty()) return "FAIL: " + failure;

  std::ostringstream os;
  for (std::size_t si = 0; si < 3; ++si) {
    os << "seed " << seeds[si] << ": acc(s=1) " << acc[si][0]
       << " vs acc(s=100) " << acc[si][1] << "; ";
    if (!(acc[si][1] < acc[si][0]))
      return "FAIL: sigma=100 accuracy not strictly lower (seed " +
             std::to_string(seeds[si]) + ": " + std::to_string(acc[si][1]) +
             " vs " + std::to_string(acc[si][0]) + ")";
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  if (secs >= 600.0)
    return "FAIL: runtime " + std::to_string(secs) + "s >= 600s";
  os << secs << "s";
  return os.str();
}

// --- C8 (mnist) ---------------------------------------------------------
std::string c8_deep_mlp_trainability(const Options& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  TrainConfig base;
  base.model.depth = 16;
  base.model.input_dim = 784;
  base.model.hidden_dim = 64;
  base.model.output_dim = 10;
  base.dataset = MnistSubsetSpec{opt.mnist_dir, 5000, 1000};
  base.batch_size = 64;
  base.epochs = 20;
  base.schedule.decay = Schedule::Decay::per_epoch;
  base.schedule.factor = 0.9;
  base.optimizer = NeroConfig{};  // eta=0.01

  const std::uint64_t seeds[3] = {1, 2, 3};
  double accs[3];
  std::string failure;
  std::mutex failure_mutex;
  parallel_cells(3, opt.jobs, [&](std::size_t si) {
    TrainConfig cfg = base;
    cfg.seed = seeds[si];
    const RunRecord rec = train(cfg);
    if (rec.status != "ok") {
      std::lock_guard<std::mutex> lock(failure_mutex);
      failure = "nero run failed: " + rec.failure;
    }
    accs[si] = 1.0 - rec.final_eval().train_error;
  });
  if (!failure.empty()) return "FAIL: " + failure;

  std::ostringstream os;
  for (std::size_t si = 0; si < 3; ++si) {
    os << "nero seed " << seeds[si] << " train acc " << accs[si] << "; ";
    if (accs[si] < 0.90)
      return "FAIL: train accuracy " + std::to_string(accs[si]) +
             " < 0.90 (seed " + std::to_string(seeds[si]) + ")";
  }

  // SGD and Adam over the full learning-rate grid: logged for
  // comparison, not hard-asserted.
  const std::vector<double> lrs = {1e-4, 1e-3, 1e-2, 1e-1, 1.0};
  for (const char* kind : {"sgd", "adam"}) {
    TrainConfig cfg = base;
    if (std::string(kind) == "sgd")
      cfg.optimizer = BaselineSpec{SgdConfig{0.1, 0.0}, false, false};
    else
      cfg.optimizer = BaselineSpec{AdamConfig{}, false, false};
    const GridResult grid = run_grid(cfg, lrs, 3, opt.jobs);
    std::printf("  [info] C8 %s grid (20 epochs, 3 seeds/lr):\n", kind);
    for (const auto& cell : grid.cells) {
      double mean_train_acc = 0.0;
      for (const auto& r : cell.runs)
        mean_train_acc += 1.0 - r.final_eval().train_error;
      mean_train_acc /= static_cast<double>(cell.runs.size());
      std::printf("  [info]   lr %-8g mean train acc %.4f%s\n", cell.lr,
                  mean_train_acc, cell.failed ? " (diverged)" : "");
    }
    std::fflush(stdout);
  }

  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  if (secs >= 900.0)
    return "FAIL: runtime " + std::to_string(secs) + "s >= 900s";
  os << secs << "s";
  return os.str();
}

}  // namespace

int main(int argc, char** argv) {
  Options opt;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    auto next = [&]() -> std::string {
      if (i + 1 >= argc) {
        std::cerr << "missing value for " << arg << "\n";
        std::exit(2);
      }
      return argv[++i];
    };
    if (arg == "--suite")
      opt.suite = next();
    else if (arg == "--cli")
      opt.cli = next();
    else if (arg == "--scratch")
      opt.scratch = next();
    else if (arg == "--mnist-dir")
      opt.mnist_dir = next();
    else if (arg == "--jobs")
      opt.jobs = static_cast<std::size_t>(std::stoul(next()));
    else {
      std::cerr << "unknown argument " << arg << "\n";
      return 2;
    }
  }

  const bool core = opt.suite == "core" || opt.suite == "all";
  const bool mnist = opt.suite == "mnist" || opt.suite == "all";

  if (core) {
    run_criterion("C1", "constraint invariants over 1000 nero steps",
                  c1_constraint_invariants);
    run_criterion("C2", "exact per-neuron relative step (beta=0)",
                  c2_exact_relative_step);
    run_criterion("C3", "per-neuron implies per-layer relative",
                  c3_per_layer_implication);
    run_criterion("C4", "rotation geometry identities", c4_rotation_geometry);
    run_criterion("C5", "gradient exactness + planted bug",
                  c5_gradient_exactness);
    run_criterion("C6", "balanced-neuron standardisation", c6_standardisation);
    run_criterion("C7", "reparameterisation identity + jacobian scaling",
                  c7_reparam_identity_jacobian);
    run_criterion("C9", "cap measure vs monte-carlo oracle",
                  c9_cap_measure_oracle);
    run_criterion("C10", "pac-bayes bound value + lnK sensitivity",
                  c10_pac_bayes_bound);
    run_criterion("C11", "stability probe on seeded quadratics",
                  c11_stability_probe);
    run_criterion("C12", "idx parser round-trip and exit codes",
                  [&] { return c12_idx_parser(opt); });
    run_criterion("C13", "train reproducibility", c13_reproducibility);
    if (!mnist)
      std::printf(
          "[note] C7 end-to-end coupling and C8 deep-MLP trainability run in "
          "the acceptance_mnist suite (they need the MNIST IDX files)\n");
  }

  if (mnist) {
    if (!mnist_present(opt.mnist_dir)) {
      try {
        fetch_mnist(opt.mnist_dir);
      } catch (const std::exception& e) {
        std::printf(
            "[skip] MNIST IDX files not found in %s and fetch failed (%s); "
            "criteria C7(end-to-end) and C8 cannot run in this environment. "
            "Provide the four IDX files or network access and rerun.\n",
            opt.mnist_dir.c_str(), e.what());
        return 77;
      }
    }
    run_criterion("C7", "reparameterisation coupling on MNIST (end-to-end)",
                  [&] { return c7_reparam_coupling_mnist(opt); });
    run_criterion("C8", "deep plain-MLP trainability on MNIST",
                  [&] { return c8_deep_mlp_trainability(opt); });
  }

  if (g_failures > 0) {
    std::printf("%d criterion(s) failed\n", g_failures);
    return 1;
  }
  std::printf("all criteria passed\n");
  return 0;
}
