#include "nero/optim.hpp"

#include <algorithm>
#include <cmath>

#include "nero/errors.hpp"
#include "nero/kernels.hpp"

namespace nero {

void project_balanced(std::span<double> w, bool constrain_mean,
                      bool constrain_norm) {
  const std::size_t d = w.size();
  if (d < 2) throw DimensionError("project_balanced: fan-in must be >= 2");
  if (constrain_mean) {
    const double mean = kernels::ops().sum(w.data(), d) / static_cast<double>(d);
    for (double& x : w) x -= mean;
  }
  if (constrain_norm) {
    const double norm = std::sqrt(kernels::ops().sumsq(w.data(), d));
    if (norm < 1e-12)
      throw DegenerateError("project_balanced: degenerate neuron (norm < 1e-12)");
    kernels::ops().scal(1.0 / norm, w.data(), d);
  }
}

// --- Nero ---

NeroOptimizer::NeroOptimizer(const std::vector<ParamGroup>& groups,
                             NeroConfig cfg)
    : cfg_(cfg) {
  if (!(cfg_.eta > 0.0 && cfg_.eta <= 1.0))
    throw ConfigError("nero: eta must be in (0, 1]");
  if (!(cfg_.beta >= 0.0 && cfg_.beta < 1.0))
    throw ConfigError("nero: beta must be in [0, 1)");
  for (const auto& g : groups) {
    if (g.kind == ParamKind::neuron_matrix)
      gbar_sq_.emplace_back(g.num_neurons, 0.0);
    else
      gbar_sq_.emplace_back(g.values.size(), 0.0);
  }
}

void NeroOptimizer::step(std::vector<ParamGroup>& groups,
                         double lr_multiplier) {
  t_ += 1;
  const double bias_corr = 1.0 - std::pow(cfg_.beta, static_cast<double>(t_));
  const double lr = cfg_.eta * lr_multiplier;

  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    ParamGroup& g = groups[gi];
    std::vector<double>& ema = gbar_sq_[gi];

    if (g.kind == ParamKind::neuron_matrix) {
      const std::size_t d = g.fan_in;
      for (std::size_t i = 0; i < g.num_neurons; ++i) {
        auto w = g.values.row(i);
        auto grad = g.grad.row(i);
        const double gsq = kernels::ops().sumsq(grad.data(), d);
        ema[i] = cfg_.beta * ema[i] + (1.0 - cfg_.beta) * gsq;
        if (ema[i] == 0.0 && gsq == 0.0) continue;  // no signal yet
        const double normalizer = std::sqrt(ema[i] / bias_corr);
        if (normalizer < 1e-30) {
          if (gsq > 0.0)
            throw NumericalError("nero: running-average normalizer underflow");
          continue;  // decayed-away average, no current gradient
        }
        double wnorm = std::sqrt(kernels::ops().sumsq(w.data(), d));
        if (!cfg_.constrain_norm && wnorm < 1e-10) {
          wnorm = 1e-10;  // keep a zero-norm row updatable
          ++norm_floor_hits_;
        }
        kernels::ops().axpy(-lr * wnorm / normalizer, grad.data(), w.data(), d);
        if (g.project && (cfg_.constrain_mean || cfg_.constrain_norm))
          project_balanced(w, cfg_.constrain_mean, cfg_.constrain_norm);
      }
    } else {
      const double sigma_b = g.sigma_b > 0.0 ? g.sigma_b : cfg_.sigma_b_default;
      for (std::size_t i = 0; i < g.values.size(); ++i) {
        const double gb = g.grad[i];
        ema[i] = cfg_.beta * ema[i] + (1.0 - cfg_.beta) * gb * gb;
        if (ema[i] == 0.0 && gb == 0.0) continue;
        const double normalizer = std::sqrt(ema[i] / bias_corr);
        if (normalizer < 1e-30) {
          if (gb != 0.0)
            throw NumericalError("nero: running-average normalizer underflow");
          continue;
        }
        g.values[i] -= lr * sigma_b / normalizer * gb;
      }
    }
  }
}

std::size_t NeroOptimizer::state_scalar_count() const {
  std::size_t n = 0;
  for (const auto& v : gbar_sq_) n += v.size();
  return n;
}

std::vector<std::pair<std::string, std::vector<double>>>
NeroOptimizer::state_blobs() const {
  std::vector<std::pair<std::string, std::vector<double>>> out;
  for (std::size_t i = 0; i < gbar_sq_.size(); ++i)
    out.emplace_back("gbar_sq." + std::to_string(i), gbar_sq_[i]);
  return out;
}

void NeroOptimizer::restore_state(
    const std::vector<std::pair<std::string, std::vector<double>>>& blobs,
    std::int64_t t) {
  if (blobs.size() != gbar_sq_.size())
    throw DataError("nero: checkpoint state blob count mismatch");
  for (std::size_t i = 0; i < blobs.size(); ++i) {
    if (blobs[i].second.size() != gbar_sq_[i].size())
      throw DataError("nero: checkpoint state size mismatch");
    gbar_sq_[i] = blobs[i].second;
  }
  t_ = t;
}

// --- baselines ---

BaselineOptimizer::BaselineOptimizer(const std::vector<ParamGroup>& groups,
                                     BaselineConfig cfg, bool constrain_mean,
                                     bool constrain_norm)
    : cfg_(cfg), constrain_mean_(constrain_mean), constrain_norm_(constrain_norm) {
  const bool wants_m =
      std::holds_alternative<AdamConfig>(cfg_) ||
      std::holds_alternative<LambConfig>(cfg_) ||
      (std::holds_alternative<SgdConfig>(cfg_) &&
       std::get<SgdConfig>(cfg_).momentum != 0.0);
  const bool wants_v = !std::holds_alternative<SgdConfig>(cfg_);
  for (const auto& g : groups) {
    m_.emplace_back(wants_m ? g.values.size() : 0, 0.0);
    v_.emplace_back(wants_v ? g.values.size() : 0, 0.0);
  }
}

std::string BaselineOptimizer::name() const {
  if (std::holds_alternative<SgdConfig>(cfg_)) return "sgd";
  if (std::holds_alternative<AdamConfig>(cfg_)) return "adam";
  if (std::holds_alternative<LambConfig>(cfg_)) return "lamb";
  return "madam";
}

void BaselineOptimizer::step(std::vector<ParamGroup>& groups,
                             double lr_multiplier) {
  t_ += 1;
  if (const auto* c = std::get_if<SgdConfig>(&cfg_))
    step_sgd(*c, groups, c->lr * lr_multiplier);
  else if (const auto* c = std::get_if<AdamConfig>(&cfg_))
    step_adam(*c, groups, c->lr * lr_multiplier);
  else if (const auto* c = std::get_if<LambConfig>(&cfg_))
    step_lamb(*c, groups, c->lr * lr_multiplier);
  else
    step_madam(std::get<MadamConfig>(cfg_), groups,
               std::get<MadamConfig>(cfg_).lr * lr_multiplier);

  if (constrain_mean_ || constrain_norm_)
    for (auto& g : groups)
      if (g.kind == ParamKind::neuron_matrix && g.project)
        for (std::size_t i = 0; i < g.num_neurons; ++i)
          project_balanced(g.values.row(i), constrain_mean_, constrain_norm_);
}

void BaselineOptimizer::step_sgd(const SgdConfig& c,
                                 std::vector<ParamGroup>& groups, double lr) {
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    ParamGroup& g = groups[gi];
    const std::size_t n = g.values.size();
    if (c.momentum != 0.0) {
      std::vector<double>& buf = m_[gi];
      for (std::size_t i = 0; i < n; ++i) {
        buf[i] = c.momentum * buf[i] + g.grad[i];
        g.values[i] -= lr * buf[i];
      }
    } else {
      kernels::ops().axpy(-lr, g.grad.data(), g.values.data(), n);
    }
  }
}

void BaselineOptimizer::step_adam(const AdamConfig& c,
                                  std::vector<ParamGroup>& groups, double lr) {
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(t_));
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    ParamGroup& g = groups[gi];
    for (std::size_t i = 0; i < g.values.size(); ++i) {
      const double grad = g.grad[i];
      m_[gi][i] = c.beta1 * m_[gi][i] + (1.0 - c.beta1) * grad;
      v_[gi][i] = c.beta2 * v_[gi][i] + (1.0 - c.beta2) * grad * grad;
      const double mhat = m_[gi][i] / (bc1 == 0.0 ? 1.0 : bc1);
      const double vhat = v_[gi][i] / bc2;
      const double denom = std::sqrt(vhat) + c.eps;
      if (denom > 0.0) g.values[i] -= lr * mhat / denom;
    }
  }
}

void BaselineOptimizer::step_lamb(const LambConfig& c,
                                  std::vector<ParamGroup>& groups, double lr) {
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(t_));
  std::vector<double> direction;
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    ParamGroup& g = groups[gi];
    const std::size_t n = g.values.size();
    direction.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double grad = g.grad[i];
      m_[gi][i] = c.beta1 * m_[gi][i] + (1.0 - c.beta1) * grad;
      v_[gi][i] = c.beta2 * v_[gi][i] + (1.0 - c.beta2) * grad * grad;
      const double mhat = m_[gi][i] / (bc1 == 0.0 ? 1.0 : bc1);
      const double vhat = v_[gi][i] / bc2;
      direction[i] = mhat / (std::sqrt(vhat) + c.eps) + c.weight_decay * g.values[i];
    }
    const double wnorm = std::sqrt(kernels::ops().sumsq(g.values.data(), n));
    const double dnorm = std::sqrt(kernels::ops().sumsq(direction.data(), n));
    // Trust ratio ||w|| / ||direction||, clamped to 1 when either is 0.
    const double trust = (wnorm == 0.0 || dnorm == 0.0) ? 1.0 : wnorm / dnorm;
    kernels::ops().axpy(-lr * trust, direction.data(), g.values.data(), n);
  }
}

void BaselineOptimizer::step_madam(const MadamConfig& c,
                                   std::vector<ParamGroup>& groups, double lr) {
  const double bc2 = 1.0 - std::pow(c.beta, static_cast<double>(t_));
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    ParamGroup& g = groups[gi];
    for (std::size_t i = 0; i < g.values.size(); ++i) {
      const double grad = g.grad[i];
      v_[gi][i] = c.beta * v_[gi][i] + (1.0 - c.beta) * grad * grad;
      const double vhat = v_[gi][i] / bc2;
      if (vhat == 0.0) continue;  // no signal yet
      double r = grad / std::sqrt(vhat);
      r = std::clamp(r, -c.clip, c.clip);
      const double w = g.values[i];
      // Multiplicative per-synapse update: |dw|/|w| = tanh(lr*|r|) <= tanh(lr*clip).
      g.values[i] = w * (1.0 - std::tanh(lr * r * (w < 0.0 ? -1.0 : 1.0)));
    }
  }
}

std::size_t BaselineOptimizer::state_scalar_count() const {
  std::size_t n = 0;
  for (const auto& b : m_) n += b.size();
  for (const auto& b : v_) n += b.size();
  return n;
}

std::vector<std::pair<std::string, std::vector<double>>>
BaselineOptimizer::state_blobs() const {
  std::vector<std::pair<std::string, std::vector<double>>> out;
  for (std::size_t i = 0; i < m_.size(); ++i)
    out.emplace_back("m." + std::to_string(i), m_[i]);
  for (std::size_t i = 0; i < v_.size(); ++i)
    out.emplace_back("v." + std::to_string(i), v_[i]);
  return out;
}

void BaselineOptimizer::restore_state(
    const std::vector<std::pair<std::string, std::vector<double>>>& blobs,
    std::int64_t t) {
  if (blobs.size() != m_.size() + v_.size())
    throw DataError("baseline: checkpoint state blob count mismatch");
  for (std::size_t i = 0; i < m_.size(); ++i) m_[i] = blobs[i].second;
  for (std::size_t i = 0; i < v_.size(); ++i) v_[i] = blobs[m_.size() + i].second;
  t_ = t;
}

// --- schedule ---

double Schedule::multiplier(std::uint64_t step_index_1based,
                            double steps_per_epoch) const {
  if (step_index_1based == 0)
    throw ConfigError("schedule: step index is 1-based");
  if (!(steps_per_epoch > 0.0))
    throw ConfigError("schedule: steps_per_epoch must be positive");
  const double epoch_frac =
      static_cast<double>(step_index_1based) / steps_per_epoch;
  const double epochs_completed =
      std::floor(static_cast<double>(step_index_1based - 1) / steps_per_epoch);

  double mult = 1.0;
  if (warmup_epochs > 0.0) mult *= std::min(1.0, epoch_frac / warmup_epochs);
  switch (decay) {
    case Decay::constant:
      break;
    case Decay::per_epoch:
      mult *= std::pow(factor, epochs_completed);
      break;
    case Decay::step_milestones: {
      std::size_t hits = 0;
      for (double ms : milestones)
        if (epochs_completed >= ms) ++hits;
      mult *= std::pow(factor, static_cast<double>(hits));
      break;
    }
  }
  if (!(mult > 0.0))
    throw NumericalError("schedule: non-positive multiplier");
  return mult;
}

}  // namespace nero
