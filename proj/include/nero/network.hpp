#pragma once

#include <string>
#include <utility>
#include <vector>

#include "nero/graph.hpp"
#include "nero/rng.hpp"
#include "nero/tensor.hpp"

namespace nero {

enum class ParamKind { neuron_matrix, scalar_like };

/// One trainable parameter. Neuron matrices are [N x d] with d >= 2 (rows
/// are neurons with a fan-in); everything lacking a notion of fan-in is
/// scalar-like with a fixed scale sigma_b standing in for the weight norm.
struct ParamGroup {
  std::string name;
  ParamKind kind = ParamKind::neuron_matrix;
  std::size_t num_neurons = 0;  // neuron_matrix
  std::size_t fan_in = 0;
  double sigma_b = 0.0;  // scalar_like
  bool project = true;   // neuron_matrix: subject to the balance projection
  Tensor values;
  Tensor grad;

  void zero_grad() { grad.fill(0.0); }
};

struct MlpConfig {
  std::size_t depth = 2;  // number of affine layers
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;
  std::size_t output_dim = 0;
  bool use_bias = true;
  bool reparameterised = false;
  bool balanced_init = true;   // false: plain Gaussian(init_sigma)
  double init_sigma = 1.0;
  bool balance_output_layer = true;  // output rows constrained like the rest

  bool operator==(const MlpConfig&) const = default;
};

/// Projects each row of w to zero mean / unit norm (in place). Used for
/// balanced initialization; the differentiable variant for training is
/// Graph::normalize_rows.
void balance_rows(Tensor& w);

/// Plain MLP: `depth` affine layers, scaled-relu between
/// them, none after the last. Parameters are grouped per layer: one
/// neuron matrix [out x in] and, optionally, one scalar-like bias group.
class Model {
 public:
  Model(MlpConfig cfg, Rng& rng);  // build with seeded init

  const MlpConfig& config() const { return cfg_; }
  std::vector<ParamGroup>& groups() { return groups_; }
  const std::vector<ParamGroup>& groups() const { return groups_; }

  struct ForwardHandle {
    int logits = -1;
    std::vector<int> param_nodes;  // one per group, in group order
  };

  /// Builds the forward graph for a batch [B x input_dim]. Parameter
  /// values are copied into graph leaves; call collect_grads() after
  /// backward() to pull gradients back into the groups.
  ForwardHandle forward(Graph& g, const Tensor& batch,
                        bool params_need_grad = true) const;

  /// Cross-entropy loss node. For output_dim == 1 the single logit is
  /// paired with a fixed zero logit (sign classifier), so labels must be
  /// 0/1 in that case.
  int loss(Graph& g, const ForwardHandle& h, std::vector<int> labels) const;

  void collect_grads(const Graph& g, const ForwardHandle& h);

  /// Predicted label per row: argmax, or logit > 0 when output_dim == 1.
  std::vector<int> predict(const Tensor& logits) const;

  struct Metrics {
    double loss = 0.0;
    double error = 0.0;
  };
  /// Full deterministic pass over a dataset in fixed-size batches.
  Metrics evaluate(const Tensor& inputs, const std::vector<int>& labels,
                   std::size_t batch_size = 256) const;

  std::uint64_t step_counter = 0;

  /// Binary checkpoint (config + groups + step counter); round-trips
  /// bit-exactly. Layout: magic, u64 header length, JSON header, raw
  /// little-endian f64 payload.
  void save_checkpoint(const std::string& path) const;
  static Model load_checkpoint(const std::string& path);

  friend void save_checkpoint_file(const std::string&, const Model&,
                                   const struct OptimizerState*);
  friend Model load_checkpoint_file(const std::string&,
                                    struct OptimizerState*);

 private:
  Model() = default;
  MlpConfig cfg_;
  std::vector<ParamGroup> groups_;
  std::vector<std::size_t> layer_weight_idx_;  // group index per layer
  std::vector<std::size_t> layer_bias_idx_;    // or npos
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

/// Optimizer payload carried alongside the model in run checkpoints.
struct OptimizerState {
  std::string name;
  std::int64_t t = 0;
  std::vector<std::pair<std::string, std::vector<double>>> blobs;
};

void save_checkpoint_file(const std::string& path, const Model& m,
                          const OptimizerState* opt_state = nullptr);
Model load_checkpoint_file(const std::string& path,
                           OptimizerState* opt_state_out = nullptr);

}  // namespace nero
