#include "nero/analysis.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "nero/errors.hpp"
#include "nero/kernels.hpp"

namespace nero {

namespace {

double frob_norm_diff(const Tensor& a, const Tensor& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

double frob_inner(const Tensor& a, const Tensor& b) {
  return kernels::ops().dot(a.data(), b.data(), a.size());
}

std::vector<Tensor> add_tensors(const std::vector<Tensor>& a,
                                const std::vector<Tensor>& b) {
  std::vector<Tensor> out = a;
  for (std::size_t l = 0; l < out.size(); ++l)
    kernels::ops().vadd(a[l].data(), b[l].data(), out[l].data(), out[l].size());
  return out;
}

}  // namespace

StabilityReport check_stability(const LayerLossFn& f,
                                const std::vector<Tensor>& W,
                                const std::vector<Tensor>& dW) {
  if (W.size() != dW.size())
    throw DimensionError("check_stability: layer counts differ");
  const LossEval at_w = f(W);
  const LossEval at_wd = f(add_tensors(W, dW));
  if (at_w.grads.size() != W.size() || at_wd.grads.size() != W.size())
    throw DimensionError("check_stability: loss returned wrong layer count");

  StabilityReport report;
  report.stable = true;
  for (std::size_t l = 0; l < W.size(); ++l) {
    const double gnorm = at_w.grads[l].frobenius_norm();
    if (gnorm == 0.0)
      throw DegenerateError("check_stability: zero gradient in layer " +
                            std::to_string(l) + "; angle undefined");
    StabilityLayer layer;
    layer.lhs_ratio = frob_norm_diff(at_wd.grads[l], at_w.grads[l]) / gnorm;
    const double dnorm = dW[l].frobenius_norm();
    layer.cos_theta =
        dnorm == 0.0 ? 0.0 : -frob_inner(dW[l], at_w.grads[l]) / (dnorm * gnorm);
    layer.stable = layer.lhs_ratio < layer.cos_theta;
    report.stable = report.stable && layer.stable;
    report.layers.push_back(layer);
  }
  return report;
}

TrustReport check_trust(const LayerLossFn& f, const std::vector<Tensor>& W,
                        const std::vector<Tensor>& dW) {
  if (W.size() != dW.size())
    throw DimensionError("check_trust: layer counts differ");
  double product = 1.0;
  for (std::size_t l = 0; l < W.size(); ++l)
    product *= 1.0 + layer_relative_size(dW[l], W[l]);
  const double rhs = product - 1.0;

  const LossEval at_w = f(W);
  const LossEval at_wd = f(add_tensors(W, dW));

  TrustReport report;
  report.satisfied_all = true;
  for (std::size_t l = 0; l < W.size(); ++l) {
    const double gnorm = at_w.grads[l].frobenius_norm();
    if (gnorm == 0.0)
      throw DegenerateError("check_trust: zero gradient in layer " +
                            std::to_string(l));
    TrustLayer layer;
    layer.lhs_ratio = frob_norm_diff(at_wd.grads[l], at_w.grads[l]) / gnorm;
    layer.rhs_bound = rhs;
    layer.satisfied = layer.lhs_ratio <= layer.rhs_bound;
    report.satisfied_all = report.satisfied_all && layer.satisfied;
    report.layers.push_back(layer);
  }
  return report;
}

double layer_relative_size(const Tensor& dW, const Tensor& W) {
  const double wnorm = W.frobenius_norm();
  if (wnorm == 0.0)
    throw DegenerateError("layer_relative_size: zero-norm layer");
  return dW.frobenius_norm() / wnorm;
}

std::vector<double> neuron_relative_sizes(const Tensor& dW, const Tensor& W) {
  if (!dW.same_shape(W))
    throw DimensionError("neuron_relative_sizes: shapes differ");
  const std::size_t rows = W.rows(), d = W.cols();
  std::vector<double> out(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    const double wnorm = std::sqrt(kernels::ops().sumsq(W.row(i).data(), d));
    if (wnorm == 0.0)
      throw DegenerateError("neuron_relative_sizes: zero-norm row " +
                            std::to_string(i));
    out[i] = std::sqrt(kernels::ops().sumsq(dW.row(i).data(), d)) / wnorm;
  }
  return out;
}

Tensor rotate_neuron(const Tensor& w, double alpha, Rng& rng,
                     bool within_balanced_subspace) {
  const std::size_t d = w.size();
  if (d < 2) throw DimensionError("rotate_neuron: need d >= 2");
  if (!(alpha >= 0.0 && alpha <= std::numbers::pi))
    throw ConfigError("rotate_neuron: alpha must lie in [0, pi]");
  const double wnorm = std::sqrt(kernels::ops().sumsq(w.data(), d));
  if (std::abs(wnorm - 1.0) > 1e-9)
    throw ConfigError("rotate_neuron: input is not unit-norm");
  if (within_balanced_subspace && d < 3)
    throw DimensionError(
        "rotate_neuron: the balanced subspace of a d=2 neuron leaves no "
        "orthogonal direction");

  // Draw a uniformly random unit direction orthogonal to w (and, if
  // requested, inside the zero-mean subspace).
  Tensor u({d});
  for (int attempt = 0; attempt < 64; ++attempt) {
    rng.fill_normal(u.flat());
    if (within_balanced_subspace) {
      const double mean = kernels::ops().sum(u.data(), d) / static_cast<double>(d);
      for (std::size_t j = 0; j < d; ++j) u[j] -= mean;
    }
    const double proj = kernels::ops().dot(u.data(), w.data(), d);
    kernels::ops().axpy(-proj, w.data(), u.data(), d);
    const double unorm = std::sqrt(kernels::ops().sumsq(u.data(), d));
    if (unorm > 1e-8) {
      kernels::ops().scal(1.0 / unorm, u.data(), d);
      Tensor out({d});
      const double ca = std::cos(alpha), sa = std::sin(alpha);
      for (std::size_t j = 0; j < d; ++j) out[j] = ca * w[j] + sa * u[j];
      return out;
    }
  }
  throw NumericalError("rotate_neuron: failed to sample an orthogonal direction");
}

RobustnessEstimate estimate_alpha_robustness(const Model& model,
                                             const Tensor& inputs,
                                             const std::vector<int>& labels,
                                             std::size_t samples, double tol,
                                             Rng& rng) {
  if (samples == 0) throw ConfigError("estimate_alpha_robustness: samples == 0");
  if (!(tol > 0.0)) throw ConfigError("estimate_alpha_robustness: tol <= 0");
  if (model.evaluate(inputs, labels).error != 0.0)
    throw ConfigError(
        "estimate_alpha_robustness: model does not attain zero training error");

  // Copy of the model whose neuron rows get replaced per draw.
  Model probe = model;
  auto passes = [&](double alpha) {
    for (std::size_t s = 0; s < samples; ++s) {
      auto& src = model.groups();
      auto& dst = probe.groups();
      for (std::size_t gi = 0; gi < src.size(); ++gi) {
        if (src[gi].kind != ParamKind::neuron_matrix) continue;
        for (std::size_t i = 0; i < src[gi].num_neurons; ++i) {
          Tensor w({src[gi].fan_in});
          auto srow = src[gi].values.row(i);
          for (std::size_t j = 0; j < w.size(); ++j) w[j] = srow[j];
          const Tensor rotated = rotate_neuron(w, alpha, rng);
          auto drow = dst[gi].values.row(i);
          for (std::size_t j = 0; j < w.size(); ++j) drow[j] = rotated[j];
        }
      }
      if (probe.evaluate(inputs, labels).error != 0.0) return false;
    }
    return true;
  };

  RobustnessEstimate est;
  est.samples = samples;
  est.note =
      "sampled lower-style estimate over joint rotations at the candidate "
      "angle; optimistic surrogate, not a worst-case certificate";
  double lo = 0.0, hi = std::numbers::pi;
  if (passes(hi)) {
    est.alpha_hat = hi;
    return est;
  }
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (passes(mid))
      lo = mid;
    else
      hi = mid;
  }
  est.alpha_hat = lo;
  return est;
}

// Continued fraction for the regularized incomplete beta (Lentz).
namespace {
double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0, d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) return h;
  }
  throw NumericalError("reg_inc_beta: continued fraction did not converge");
}
}  // namespace

double reg_inc_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0))
    throw ConfigError("reg_inc_beta: a and b must be positive");
  if (x < 0.0 || x > 1.0) throw ConfigError("reg_inc_beta: x outside [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double lbeta = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b);
  const double front = std::exp(lbeta + a * std::log(x) + b * std::log1p(-x));
  if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
  return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

double cap_measure(int sphere_dim, double alpha) {
  if (sphere_dim < 1) throw ConfigError("cap_measure: sphere dimension < 1");
  if (!(alpha >= 0.0 && alpha <= std::numbers::pi))
    throw ConfigError("cap_measure: alpha must lie in [0, pi]");
  if (alpha == 0.0) return 0.0;
  if (alpha == std::numbers::pi) return 1.0;
  const double s = std::sin(0.5 * alpha);
  const double half_k = 0.5 * static_cast<double>(sphere_dim);
  return reg_inc_beta(half_k, half_k, s * s);
}

BoundResult pac_bayes_bound(const BoundInputs& b) {
  if (b.m < 1) throw ConfigError("pac_bayes_bound: m must be >= 1");
  if (b.n < 2) throw ConfigError("pac_bayes_bound: n must be >= 2");
  if (!(b.delta > 0.0 && b.delta < 1.0))
    throw ConfigError("pac_bayes_bound: delta must lie in (0, 1)");
  if (!(b.k_solutions >= 1.0))
    throw ConfigError("pac_bayes_bound: K must be >= 1");
  if (!(b.alpha >= 0.0 && b.alpha <= std::numbers::pi))
    throw ConfigError("pac_bayes_bound: alpha must lie in (0, pi]");

  std::vector<std::size_t> fan_ins = b.fan_ins;
  BoundResult result;
  if (!fan_ins.empty()) {
    if (fan_ins.size() != b.m)
      throw ConfigError("pac_bayes_bound: fan_ins length must equal m");
    result.note =
        "heterogeneous fan-ins: the m(d-2) exponent is replaced by "
        "sum_i (d_i - 2), an extrapolation beyond the equal-fan-in setting";
  } else {
    fan_ins.assign(b.m, b.d);
  }
  for (std::size_t d : fan_ins)
    if (d < 2) throw ConfigError("pac_bayes_bound: fan-in must be >= 2");

  if (b.alpha == 0.0) {
    result.infinite = true;
    result.ball_bound = std::numeric_limits<double>::infinity();
    result.cap_bound = std::numeric_limits<double>::infinity();
    result.log_pvs_ball = -std::numeric_limits<double>::infinity();
    result.log_pvs_cap = -std::numeric_limits<double>::infinity();
    result.note = "alpha = 0: the solution caps have measure zero, so the "
                  "bound is vacuous (+inf)";
    return result;
  }

  const double m = static_cast<double>(b.m);
  const double n = static_cast<double>(b.n);
  const double log_sin_half = std::log(std::sin(0.5 * b.alpha));
  const double ln_k = std::log(b.k_solutions);
  const double ln_2n_delta = std::log(2.0 * n / b.delta);

  double sum_dm2 = 0.0;       // sum of (d_i - 2)
  double log_caps = 0.0;      // sum of ln cap_{d_i-2}(alpha)
  for (std::size_t d : fan_ins) {
    sum_dm2 += static_cast<double>(d - 2);
    if (d == 2)  // S^0 is the two-point sphere: any proper cap has measure 1/2
      log_caps += b.alpha == std::numbers::pi ? 0.0 : -std::numbers::ln2;
    else
      log_caps += std::log(cap_measure(static_cast<int>(d - 2), b.alpha));
  }

  result.log_pvs_ball = ln_k - m * std::numbers::ln2 + sum_dm2 * log_sin_half;
  result.log_pvs_cap = ln_k + log_caps;
  result.ball_bound = (-result.log_pvs_ball + ln_2n_delta) / (n - 1.0);
  result.cap_bound = (-result.log_pvs_cap + ln_2n_delta) / (n - 1.0);
  return result;
}

}  // namespace nero
