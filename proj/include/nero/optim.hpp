#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "nero/network.hpp"

namespace nero {

/// Projects a neuron's weight vector onto the balanced constraint set:
/// optionally subtract the mean, optionally divide by the l2 norm (in
/// that order; normalizing preserves a zero mean, so applying the pair
/// twice is a no-op). Throws DegenerateError if the norm step would
/// divide by less than 1e-12.
void project_balanced(std::span<double> w, bool constrain_mean,
                      bool constrain_norm);

struct NeroConfig {
  double eta = 0.01;
  double beta = 0.999;
  bool constrain_mean = true;
  bool constrain_norm = true;
  double sigma_b_default = 0.01;
};

struct SgdConfig {
  double lr = 0.1;
  double momentum = 0.0;
};

struct AdamConfig {
  double lr = 0.001;
  double beta1 = 0.0;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct LambConfig {
  double lr = 0.001;
  double beta1 = 0.0;
  double beta2 = 0.999;
  double eps = 1e-6;
  double weight_decay = 0.0;
};

struct MadamConfig {
  double lr = 0.01;
  double beta = 0.999;
  double clip = 10.0;  // bound on the normalized per-synapse gradient
};

using BaselineConfig = std::variant<SgdConfig, AdamConfig, LambConfig, MadamConfig>;

/// Common optimizer surface used by the training loop.
class Optimizer {
 public:
  virtual ~Optimizer() = default;
  virtual void step(std::vector<ParamGroup>& groups, double lr_multiplier) = 0;
  virtual std::int64_t steps() const = 0;
  /// Number of scalars of optimizer state (for the memory-accounting test).
  virtual std::size_t state_scalar_count() const = 0;
  /// Whether logged runs should carry constraint-residual columns.
  virtual bool maintains_constraints() const = 0;
  virtual std::string name() const = 0;
  /// State blobs for checkpointing, in a fixed order.
  virtual std::vector<std::pair<std::string, std::vector<double>>>
  state_blobs() const = 0;
  virtual void restore_state(
      const std::vector<std::pair<std::string, std::vector<double>>>& blobs,
      std::int64_t t) = 0;
};

/// Per-neuron projected gradient descent with running-average gradient
/// normalization. For each neuron row: the squared-norm EMA is updated,
/// bias-corrected by (1 - beta^t), and the row moves by
/// eta * ||w|| / sqrt(EMA_corrected) * g before being projected back to
/// the constraint set. Scalar-like coordinates use sigma_b in place of
/// ||w||. Rows with no gradient signal yet (EMA and gradient both zero)
/// are left unchanged.
class NeroOptimizer final : public Optimizer {
 public:
  NeroOptimizer(const std::vector<ParamGroup>& groups, NeroConfig cfg);

  void step(std::vector<ParamGroup>& groups, double lr_multiplier) override;
  std::int64_t steps() const override { return t_; }
  std::size_t state_scalar_count() const override;
  bool maintains_constraints() const override {
    return cfg_.constrain_mean || cfg_.constrain_norm;
  }
  std::string name() const override { return "nero"; }
  std::vector<std::pair<std::string, std::vector<double>>> state_blobs()
      const override;
  void restore_state(
      const std::vector<std::pair<std::string, std::vector<double>>>& blobs,
      std::int64_t t) override;

  const NeroConfig& config() const { return cfg_; }
  /// Times the norm-off ||w|| floor (1e-10) was applied; surfaced in logs.
  std::size_t norm_floor_hits() const { return norm_floor_hits_; }

 private:
  NeroConfig cfg_;
  // One EMA of squared gradient norms per neuron row, one EMA of squared
  // gradients per scalar-like coordinate.
  std::vector<std::vector<double>> gbar_sq_;
  std::int64_t t_ = 0;
  std::size_t norm_floor_hits_ = 0;
};

/// SGD(+momentum), Adam, LAMB and Madam under one roof, optionally
/// followed by the balance projection of neuron rows (the "constrained
/// baseline" configuration).
class BaselineOptimizer final : public Optimizer {
 public:
  BaselineOptimizer(const std::vector<ParamGroup>& groups, BaselineConfig cfg,
                    bool constrain_mean = false, bool constrain_norm = false);

  void step(std::vector<ParamGroup>& groups, double lr_multiplier) override;
  std::int64_t steps() const override { return t_; }
  std::size_t state_scalar_count() const override;
  bool maintains_constraints() const override {
    return constrain_mean_ || constrain_norm_;
  }
  std::string name() const override;
  std::vector<std::pair<std::string, std::vector<double>>> state_blobs()
      const override;
  void restore_state(
      const std::vector<std::pair<std::string, std::vector<double>>>& blobs,
      std::int64_t t) override;

 private:
  void step_sgd(const SgdConfig&, std::vector<ParamGroup>&, double lr);
  void step_adam(const AdamConfig&, std::vector<ParamGroup>&, double lr);
  void step_lamb(const LambConfig&, std::vector<ParamGroup>&, double lr);
  void step_madam(const MadamConfig&, std::vector<ParamGroup>&, double lr);

  BaselineConfig cfg_;
  bool constrain_mean_ = false;
  bool constrain_norm_ = false;
  std::vector<std::vector<double>> m_;  // momentum / first moment
  std::vector<std::vector<double>> v_;  // second moment
  std::int64_t t_ = 0;
};

/// Piecewise learning-rate multiplier: an optional linear warmup
/// composed with a decay rule. Warmup ramps with the fractional epoch of
/// the (1-based) step index; decay depends on completed epochs.
struct Schedule {
  enum class Decay { constant, per_epoch, step_milestones };
  double warmup_epochs = 0.0;
  Decay decay = Decay::constant;
  double factor = 1.0;                  // per_epoch / step_milestones
  std::vector<double> milestones;       // epochs, for step_milestones

  double multiplier(std::uint64_t step_index_1based,
                    double steps_per_epoch) const;
};

}  // namespace nero
