#pragma once

#include <deque>
#include <functional>
#include <utility>
#include <vector>

#include "nero/rng.hpp"
#include "nero/tensor.hpp"

namespace nero {

/// Reverse-mode tape. A graph is rebuilt for every forward pass; nodes
/// are appended in construction order, which is also the topological
/// order used (in reverse) by backward(). Node values are immutable once
/// produced; gradients accumulate in a fixed deterministic order.
class Graph {
 public:
  struct Node {
    Tensor value;
    Tensor grad;
    bool needs_grad = false;
    const char* op = "leaf";
    std::function<void(Graph&)> backward;  // empty for leaves
  };

  /// Inserts a leaf holding `value`. Only leaves with requires_grad
  /// participate in gradient computation.
  int leaf(Tensor value, bool requires_grad);

  // --- ops (each checks shapes and that its output is finite) ---

  /// [r x k] * [k x c] -> [r x c]
  int matmul(int a, int b);

  /// x[B x d] * w[N x d]^T (+ bias[N], broadcast over rows) -> [B x N].
  /// Weight rows are neurons, matching how parameters are stored.
  int linear(int x, int w, int bias = -1);

  int add(int a, int b);  // same shape
  int sub(int a, int b);
  int mul(int a, int b);  // elementwise
  int scale(int a, double c);
  int sum(int a);  // -> scalar

  /// sqrt(2) * max(0, x); subgradient 0 at the kink.
  int scaled_relu(int a);

  /// Per-row centering + l2 normalization, differentiable through the
  /// raw rows. Throws DegenerateError when a centered row has norm
  /// below 1e-12.
  int normalize_rows(int a);

  /// [B x 1] -> [B x 2] with column 0 fixed at zero. Turns a single
  /// logit into a two-class logit pair (sign classifier training).
  int pad_zero_column(int a);

  /// Mean over the batch of -log softmax(logits)[label]; max-subtraction
  /// stabilized. Labels must lie in [0, C).
  int softmax_cross_entropy(int logits, std::vector<int> labels);

  /// Reverse pass from a scalar loss node. Each node is visited exactly
  /// once; leaf gradients are then available via grad().
  void backward(int loss);

  // Node storage is a deque, so these references stay valid as further
  // ops are appended to the tape.
  const Tensor& value(int id) const { return nodes_[id].value; }
  const Tensor& grad(int id) const { return nodes_[id].grad; }
  std::size_t size() const { return nodes_.size(); }

 private:
  int push(Node n);
  Node& node(int id) { return nodes_[id]; }
  std::deque<Node> nodes_;
};

/// Evaluates a loss and its analytic gradients for given parameters.
using LossGradFn = std::function<std::pair<double, std::vector<Tensor>>(
    const std::vector<Tensor>&)>;

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t coords_checked = 0;
};

/// Central-difference check of analytic gradients on a sampled subset of
/// coordinates (at most `max_coords_per_param` per parameter). The
/// comparison uses |ad - fd| / max(|ad|, |fd|, denom_floor); the floor
/// turns the check absolute for coordinates below the resolution of the
/// difference quotient (roundoff there is ~eps*|loss|/2h, far below the
/// default floor).
GradCheckResult grad_check(const LossGradFn& f, std::vector<Tensor> params,
                           double h, std::size_t max_coords_per_param,
                           Rng& rng, double denom_floor = 1e-5);

}  // namespace nero
