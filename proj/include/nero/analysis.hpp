#pragma once

#include <functional>
#include <string>
#include <vector>

#include "nero/network.hpp"
#include "nero/rng.hpp"
#include "nero/tensor.hpp"

namespace nero {

/// Full-batch loss with per-layer gradients, evaluated at given weights.
struct LossEval {
  double loss = 0.0;
  std::vector<Tensor> grads;  // one per layer, same shapes as the weights
};
using LayerLossFn = std::function<LossEval(const std::vector<Tensor>&)>;

struct StabilityLayer {
  double lhs_ratio = 0.0;  // relative gradient change under the step
  double cos_theta = 0.0;  // cosine between the step and -gradient
  bool stable = false;     // lhs_ratio < cos_theta (strict)
};
struct StabilityReport {
  std::vector<StabilityLayer> layers;
  bool stable = false;  // all layers
};

/// Evaluates gradients at W and W + dW and checks, per layer, that the
/// relative gradient change stays strictly below the cosine of the angle
/// between the step and the negative gradient. Requires a nonzero
/// gradient in every layer (the angle is undefined otherwise).
StabilityReport check_stability(const LayerLossFn& f,
                                const std::vector<Tensor>& W,
                                const std::vector<Tensor>& dW);

struct TrustLayer {
  double lhs_ratio = 0.0;
  double rhs_bound = 0.0;  // prod_k (1 + ||dW_k||_F/||W_k||_F) - 1
  bool satisfied = false;  // lhs <= rhs
};
struct TrustReport {
  std::vector<TrustLayer> layers;
  bool satisfied_all = false;
};

/// Checks the layerwise relative-smoothness model: the relative gradient
/// change per layer against the product bound over all layers.
TrustReport check_trust(const LayerLossFn& f, const std::vector<Tensor>& W,
                        const std::vector<Tensor>& dW);

/// ||dW||_F / ||W||_F. Throws DegenerateError on a zero-norm W.
double layer_relative_size(const Tensor& dW, const Tensor& W);

/// Per-row l2 ratios. Throws DegenerateError on a zero-norm row.
std::vector<double> neuron_relative_sizes(const Tensor& dW, const Tensor& W);

/// Rotates a unit vector by exactly `alpha` toward a uniformly random
/// orthogonal direction. With within_balanced_subspace, the direction is
/// drawn inside the zero-mean subspace so balanced inputs stay balanced.
Tensor rotate_neuron(const Tensor& w, double alpha, Rng& rng,
                     bool within_balanced_subspace = true);

struct RobustnessEstimate {
  double alpha_hat = 0.0;
  std::size_t samples = 0;
  std::string note;
};

/// Sampled estimate of the largest angle by which every neuron can be
/// simultaneously rotated without inducing a training error. Bisection
/// over alpha; each candidate draws `samples` joint rotations with every
/// neuron rotated by exactly the candidate angle (the extreme case).
/// This is an optimistic surrogate for the worst-case definition, not a
/// certificate. Requires zero training error at the start.
RobustnessEstimate estimate_alpha_robustness(const Model& model,
                                             const Tensor& inputs,
                                             const std::vector<int>& labels,
                                             std::size_t samples, double tol,
                                             Rng& rng);

/// Regularized incomplete beta I_x(a, b), continued-fraction evaluation.
double reg_inc_beta(double a, double b, double x);

/// Uniform measure of a closed spherical cap of angular radius alpha on
/// the sphere S^sphere_dim: I_{sin^2(alpha/2)}(k/2, k/2) with
/// k = sphere_dim.
double cap_measure(int sphere_dim, double alpha);

struct BoundInputs {
  std::size_t m = 1;       // neuron count
  std::size_t d = 3;       // common fan-in (ignored when fan_ins set)
  double alpha = 1.0;      // robustness angle, (0, pi]
  std::size_t n = 2;       // sample count
  double delta = 0.01;     // confidence
  double k_solutions = 1;  // number of distinct solutions K >= 1
  std::vector<std::size_t> fan_ins;  // optional heterogeneous fan-ins
};

struct BoundResult {
  bool infinite = false;    // alpha == 0
  double ball_bound = 0.0;  // closed-form bound via the sin^k cap lower bound
  double cap_bound = 0.0;   // same bound with the exact cap measure
  double log_pvs_ball = 0.0;  // ln of the version-space measure lower bound
  double log_pvs_cap = 0.0;
  std::string note;
};

/// Realisable PAC-Bayes test-error bound over a product of hyperspheres:
///   [ m ln2 + m(d-2) ln(1/sin(alpha/2)) + ln(2n/delta) - ln K ] / (n-1)
/// plus the variant using the exact cap measure (always at least as
/// tight). With heterogeneous fan-ins the m(d-2) term becomes a sum of
/// (d_i - 2); that generalization goes beyond the equal-fan-in setting
/// and is flagged in the note.
BoundResult pac_bayes_bound(const BoundInputs& b);

}  // namespace nero
