#include "nero/harness/gradcheck.hpp"

#include <cmath>
#include <utility>
#include <vector>

#include "nero/graph.hpp"
#include "nero/kernels.hpp"
#include "nero/network.hpp"

namespace nero {

namespace {

/// Smallest |pre-activation| over all relu inputs of the model on this
/// batch (replicated affine passes; cheaper than instrumenting the graph).
double min_preactivation_abs(const Model& model, const Tensor& batch) {
  double min_abs = std::numeric_limits<double>::infinity();
  Tensor x = batch;
  const auto& groups = model.groups();
  std::vector<const ParamGroup*> weights, biases;
  for (const auto& g : groups)
    (g.kind == ParamKind::neuron_matrix ? weights : biases).push_back(&g);

  for (std::size_t l = 0; l + 1 < weights.size(); ++l) {  // relu layers only
    const ParamGroup& w = *weights[l];
    Tensor z({x.rows(), w.num_neurons});
    kernels::ops().matmul_nt(x.data(), w.values.data(), z.data(), x.rows(),
                             w.num_neurons, w.fan_in);
    if (l < biases.size())
      for (std::size_t i = 0; i < z.rows(); ++i)
        kernels::ops().vadd(z.row(i).data(), biases[l]->values.data(),
                            z.row(i).data(), w.num_neurons);
    for (double v : z.flat()) min_abs = std::min(min_abs, std::abs(v));
    Tensor a = Tensor::zeros_like(z);
    kernels::ops().relu_scaled(z.data(), a.data(), z.size(),
                               1.4142135623730951);
    x = std::move(a);
  }
  return min_abs;
}

}  // namespace

MlpGradcheckResult mlp_gradcheck(std::size_t models, std::uint64_t seed,
                                 double h, std::size_t coords_per_param,
                                 double margin) {
  MlpGradcheckResult result;
  Rng meta(seed);
  std::uint64_t salt = 0;

  for (std::size_t trial = 0; trial < models; ++trial) {
    MlpConfig mc;
    mc.depth = 3;
    mc.input_dim = 6 + meta.uniform_below(6);
    mc.hidden_dim = 6 + meta.uniform_below(6);
    mc.output_dim = 2 + meta.uniform_below(3);

    // Resample any fixture whose pre-activations sit near the relu kink.
    for (;;) {
      Rng fixture_rng = meta.derive(0x6678ULL + salt++);
      Model model(mc, fixture_rng);
      Tensor batch({4, mc.input_dim});
      fixture_rng.fill_normal(batch.flat());
      if (min_preactivation_abs(model, batch) < margin) {
        ++result.fixtures_resampled;
        continue;
      }
      std::vector<int> labels(4);
      for (auto& y : labels)
        y = static_cast<int>(fixture_rng.uniform_below(mc.output_dim));

      std::vector<Tensor> params;
      for (const auto& g : model.groups()) params.push_back(g.values);
      auto fn = [&](const std::vector<Tensor>& p) {
        for (std::size_t i = 0; i < p.size(); ++i)
          model.groups()[i].values = p[i];
        Graph g;
        auto hdl = model.forward(g, batch);
        const int loss = model.loss(g, hdl, labels);
        g.backward(loss);
        model.collect_grads(g, hdl);
        std::vector<Tensor> grads;
        for (const auto& grp : model.groups()) grads.push_back(grp.grad);
        return std::make_pair(g.value(loss).item(), grads);
      };
      const auto check = grad_check(fn, params, h, coords_per_param, fixture_rng);
      result.max_rel_error = std::max(result.max_rel_error, check.max_rel_error);
      ++result.models_checked;
      break;
    }
  }
  return result;
}

}  // namespace nero
