#include "nero/graph.hpp"

#include <cmath>
#include <string>

#include "nero/errors.hpp"
#include "nero/kernels.hpp"

namespace nero {

namespace {
constexpr double kScaledReluGain = 1.4142135623730951;  // sqrt(2)

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b))
    throw DimensionError(std::string(op) + ": operand shapes differ");
}
}  // namespace

int Graph::push(Node n) {
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

int Graph::leaf(Tensor value, bool requires_grad) {
  Node n;
  n.grad = Tensor::zeros_like(value);
  n.value = std::move(value);
  n.needs_grad = requires_grad;
  return push(std::move(n));
}

int Graph::matmul(int a, int b) {
  const Tensor& va = value(a);
  const Tensor& vb = value(b);
  if (va.ndim() != 2 || vb.ndim() != 2 || va.cols() != vb.rows())
    throw DimensionError("matmul: inner dimensions disagree");
  const std::size_t r = va.rows(), k = va.cols(), c = vb.cols();
  Tensor out({r, c});
  kernels::ops().matmul_nn(va.data(), vb.data(), out.data(), r, c, k);
  out.ensure_finite("matmul");

  Node n;
  n.op = "matmul";
  n.grad = Tensor::zeros_like(out);
  n.value = std::move(out);
  n.needs_grad = node(a).needs_grad || node(b).needs_grad;
  int id = static_cast<int>(nodes_.size());
  n.backward = [a, b, id, r, k, c](Graph& g) {
    const Tensor& gout = g.node(id).grad;
    if (g.node(a).needs_grad)  // grad_a = gout * b^T
      kernels::ops().matmul_nt(gout.data(), g.node(b).value.data(),
                               g.node(a).grad.data(), r, k, c);
    if (g.node(b).needs_grad)  // grad_b = a^T * gout
      kernels::ops().matmul_tn(g.node(a).value.data(), gout.data(),
                               g.node(b).grad.data(), k, c, r);
  };
  return push(std::move(n));
}

int Graph::linear(int x, int w, int bias) {
  const Tensor& vx = value(x);
  const Tensor& vw = value(w);
  if (vx.ndim() != 2 || vw.ndim() != 2 || vx.cols() != vw.cols())
    throw DimensionError("linear: input width does not match weight fan-in");
  const std::size_t batch = vx.rows(), d = vx.cols(), neurons = vw.rows();
  if (bias >= 0 && value(bias).size() != neurons)
    throw DimensionError("linear: bias length does not match neuron count");

  Tensor out({batch, neurons});
  kernels::ops().matmul_nt(vx.data(), vw.data(), out.data(), batch, neurons, d);
  if (bias >= 0) {
    const Tensor& vb = value(bias);
    for (std::size_t i = 0; i < batch; ++i)
      kernels::ops().vadd(out.row(i).data(), vb.data(), out.row(i).data(),
                          neurons);
  }
  out.ensure_finite("linear");

  Node n;
  n.op = "linear";
  n.grad = Tensor::zeros_like(out);
  n.value = std::move(out);
  n.needs_grad = node(x).needs_grad || node(w).needs_grad ||
                 (bias >= 0 && node(bias).needs_grad);
  int id = static_cast<int>(nodes_.size());
  n.backward = [x, w, bias, id, batch, d, neurons](Graph& g) {
    const Tensor& gout = g.node(id).grad;
    if (g.node(x).needs_grad)  // gx = gout * w
      kernels::ops().matmul_nn(gout.data(), g.node(w).value.data(),
                               g.node(x).grad.data(), batch, d, neurons);
    if (g.node(w).needs_grad)  // gw = gout^T * x
      kernels::ops().matmul_tn(gout.data(), g.node(x).value.data(),
                               g.node(w).grad.data(), neurons, d, batch);
    if (bias >= 0 && g.node(bias).needs_grad) {
      Tensor& gb = g.node(bias).grad;
      for (std::size_t i = 0; i < batch; ++i)
        kernels::ops().vadd(gb.data(), gout.row(i).data(), gb.data(), neurons);
    }
  };
  return push(std::move(n));
}

int Graph::add(int a, int b) {
  check_same_shape(value(a), value(b), "add");
  Tensor out = Tensor::zeros_like(value(a));
  kernels::ops().vadd(value(a).data(), value(b).data(), out.data(), out.size());
  out.ensure_finite("add");

  Node n;
  n.op = "add";
  n.grad = Tensor::zeros_like(out);
  n.value = std::move(out);
  n.needs_grad = node(a).needs_grad || node(b).needs_grad;
  int id = static_cast<int>(nodes_.size());
  n.backward = [a, b, id](Graph& g) {
    const Tensor& gout = g.node(id).grad;
    if (g.node(a).needs_grad)
      kernels::ops().axpy(1.0, gout.data(), g.node(a).grad.data(), gout.size());
    if (g.node(b).needs_grad)
      kernels::ops().axpy(1.0, gout.data(), g.node(b).grad.data(), gout.size());
  };
  return push(std::move(n));
}

int Graph::sub(int a, int b) {
  check_same_shape(value(a), value(b), "sub");
  Tensor out = Tensor::zeros_like(value(a));
  kernels::ops().vsub(value(a).data(), value(b).data(), out.data(), out.size());
  out.ensure_finite("sub");

  Node n;
  n.op = "sub";
  n.grad = Tensor::zeros_like(out);
  n.value = std::move(out);
  n.needs_grad = node(a).needs_grad || node(b).needs_grad;
  int id = static_cast<int>(nodes_.size());
  n.backward = [a, b, id](Graph& g) {
    const Tensor& gout = g.node(id).grad;
    if (g.node(a).needs_grad)
      kernels::ops().axpy(1.0, gout.data(), g.node(a).grad.data(), gout.size());
    if (g.node(b).needs_grad)
      kernels::ops().axpy(-1.0, gout.data(), g.node(b).grad.data(), gout.size());
  };
  return push(std::move(n));
}

int Graph::mul(int a, int b) {
  check_same_shape(value(a), value(b), "mul");
  Tensor out = Tensor::zeros_like(value(a));
  kernels::ops().vmul(value(a).data(), value(b).data(), out.data(), out.size());
  out.ensure_finite("mul");

  Node n;
  n.op = "mul";
  n.grad = Tensor::zeros_like(out);
  n.value = std::move(out);
  n.needs_grad = node(a).needs_grad || node(b).needs_grad;
  int id = static_cast<int>(nodes_.size());
  n.backward = [a, b, id](Graph& g) {
    const Tensor& gout = g.node(id).grad;
    const std::size_t n_el = gout.size();
    if (g.node(a).needs_grad) {
      Tensor tmp = Tensor::zeros_like(gout);
      kernels::ops().vmul(gout.data(), g.node(b).value.data(), tmp.data(), n_el);
      kernels::ops().axpy(1.0, tmp.data(), g.node(a).grad.data(), n_el);
    }
    if (g.node(b).needs_grad) {
      Tensor tmp = Tensor::zeros_like(gout);
      kernels::ops().vmul(gout.data(), g.node(a).value.data(), tmp.data(), n_el);
      kernels::ops().axpy(1.0, tmp.data(), g.node(b).grad.data(), n_el);
    }
  };
  return push(std::move(n));
}

int Graph::scale(int a, double c) {
  Tensor out = value(a);
  kernels::ops().scal(c, out.data(), out.size());
  out.ensure_finite("scale");

  Node n;
  n.op = "scale";
  n.grad = Tensor::zeros_like(out);
  n.value = std::move(out);
  n.needs_grad = node(a).needs_grad;
  int id = static_cast<int>(nodes_.size());
  n.backward = [a, c, id](Graph& g) {
    if (g.node(a).needs_grad)
      kernels::ops().axpy(c, g.node(id).grad.data(), g.node(a).grad.data(),
                          g.node(id).grad.size());
  };
  return push(std::move(n));
}

int Graph::sum(int a) {
  Tensor out = Tensor::scalar(kernels::ops().sum(value(a).data(), value(a).size()));
  out.ensure_finite("sum");

  Node n;
  n.op = "sum";
  n.grad = Tensor::zeros_like(out);
  n.value = std::move(out);
  n.needs_grad = node(a).needs_grad;
  int id = static_cast<int>(nodes_.size());
  n.backward = [a, id](Graph& g) {
    if (!g.node(a).needs_grad) return;
    const double gout = g.node(id).grad[0];
    Tensor& ga = g.node(a).grad;
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += gout;
  };
  return push(std::move(n));
}

int Graph::scaled_relu(int a) {
  Tensor out = Tensor::zeros_like(value(a));
  kernels::ops().relu_scaled(value(a).data(), out.data(), out.size(),
                             kScaledReluGain);
  out.ensure_finite("scaled_relu");

  Node n;
  n.op = "scaled_relu";
  n.grad = Tensor::zeros_like(out);
  n.value = std::move(out);
  n.needs_grad = node(a).needs_grad;
  int id = static_cast<int>(nodes_.size());
  n.backward = [a, id](Graph& g) {
    if (!g.node(a).needs_grad) return;
    kernels::ops().relu_scaled_grad(g.node(a).value.data(),
                                    g.node(id).grad.data(),
                                    g.node(a).grad.data(),
                                    g.node(id).grad.size(), kScaledReluGain);
  };
  return push(std::move(n));
}

int Graph::normalize_rows(int a) {
  const Tensor& va = value(a);
  if (va.ndim() != 2) throw DimensionError("normalize_rows: tensor is not 2-d");
  const std::size_t rows = va.rows(), d = va.cols();

  Tensor out({rows, d});
  std::vector<double> norms(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    auto src = va.row(i);
    auto dst = out.row(i);
    const double mean = kernels::ops().sum(src.data(), d) / static_cast<double>(d);
    for (std::size_t j = 0; j < d; ++j) dst[j] = src[j] - mean;
    const double norm = std::sqrt(kernels::ops().sumsq(dst.data(), d));
    if (norm < 1e-12)
      throw DegenerateError("normalize_rows: centered row " + std::to_string(i) +
                            " has norm below 1e-12");
    norms[i] = norm;
    kernels::ops().scal(1.0 / norm, dst.data(), d);
  }
  out.ensure_finite("normalize_rows");

  Node n;
  n.op = "normalize_rows";
  n.grad = Tensor::zeros_like(out);
  n.value = std::move(out);
  n.needs_grad = node(a).needs_grad;
  int id = static_cast<int>(nodes_.size());
  n.backward = [a, id, rows, d, norms = std::move(norms)](Graph& g) {
    if (!g.node(a).needs_grad) return;
    // y = C x / ||C x||, C = I - (1/d) 1 1^T. With t = gy - (y.gy) y,
    // the input gradient is (t - mean(t) 1) / ||C x||.
    const Tensor& y = g.node(id).value;
    const Tensor& gy = g.node(id).grad;
    Tensor& gx = g.node(a).grad;
    std::vector<double> t(d);
    for (std::size_t i = 0; i < rows; ++i) {
      auto yrow = y.row(i);
      auto gyrow = gy.row(i);
      const double proj = kernels::ops().dot(yrow.data(), gyrow.data(), d);
      for (std::size_t j = 0; j < d; ++j) t[j] = gyrow[j] - proj * yrow[j];
      const double tmean = kernels::ops().sum(t.data(), d) / static_cast<double>(d);
      auto gxrow = gx.row(i);
      const double inv = 1.0 / norms[i];
      for (std::size_t j = 0; j < d; ++j) gxrow[j] += (t[j] - tmean) * inv;
    }
  };
  return push(std::move(n));
}

int Graph::pad_zero_column(int a) {
  const Tensor& va = value(a);
  if (va.ndim() != 2 || va.cols() != 1)
    throw DimensionError("pad_zero_column: expected a [B x 1] tensor");
  const std::size_t batch = va.rows();
  Tensor out({batch, 2});
  for (std::size_t i = 0; i < batch; ++i) out.at(i, 1) = va[i];
  out.ensure_finite("pad_zero_column");

  Node n;
  n.op = "pad_zero_column";
  n.grad = Tensor::zeros_like(out);
  n.value = std::move(out);
  n.needs_grad = node(a).needs_grad;
  int id = static_cast<int>(nodes_.size());
  n.backward = [a, id, batch](Graph& g) {
    if (!g.node(a).needs_grad) return;
    const Tensor& gout = g.node(id).grad;
    Tensor& ga = g.node(a).grad;
    for (std::size_t i = 0; i < batch; ++i) ga[i] += gout.at(i, 1);
  };
  return push(std::move(n));
}

int Graph::softmax_cross_entropy(int logits, std::vector<int> labels) {
  const Tensor& vl = value(logits);
  if (vl.ndim() != 2) throw DimensionError("softmax_cross_entropy: logits not 2-d");
  const std::size_t batch = vl.rows(), classes = vl.cols();
  if (labels.size() != batch)
    throw DimensionError("softmax_cross_entropy: label count != batch size");
  for (int y : labels)
    if (y < 0 || static_cast<std::size_t>(y) >= classes)
      throw DataError("softmax_cross_entropy: label " + std::to_string(y) +
                      " outside [0, " + std::to_string(classes) + ")");

  Tensor softmax({batch, classes});
  double total = 0.0;
  for (std::size_t i = 0; i < batch; ++i) {
    auto lrow = vl.row(i);
    auto prow = softmax.row(i);
    double mx = lrow[0];
    for (std::size_t j = 1; j < classes; ++j) mx = std::max(mx, lrow[j]);
    double z = 0.0;
    for (std::size_t j = 0; j < classes; ++j) {
      prow[j] = std::exp(lrow[j] - mx);
      z += prow[j];
    }
    kernels::ops().scal(1.0 / z, prow.data(), classes);
    // -log softmax[label] = log(z) - (logit[label] - mx)
    total += std::log(z) - (lrow[labels[i]] - mx);
  }
  Tensor out = Tensor::scalar(total / static_cast<double>(batch));
  out.ensure_finite("softmax_cross_entropy");

  Node n;
  n.op = "softmax_cross_entropy";
  n.grad = Tensor::zeros_like(out);
  n.value = std::move(out);
  n.needs_grad = node(logits).needs_grad;
  int id = static_cast<int>(nodes_.size());
  n.backward = [logits, id, batch, classes, labels = std::move(labels),
                softmax = std::move(softmax)](Graph& g) {
    if (!g.node(logits).needs_grad) return;
    const double gout = g.node(id).grad[0];
    const double invb = gout / static_cast<double>(batch);
    Tensor& gl = g.node(logits).grad;
    for (std::size_t i = 0; i < batch; ++i) {
      auto prow = softmax.row(i);
      auto grow = gl.row(i);
      for (std::size_t j = 0; j < classes; ++j) grow[j] += invb * prow[j];
      grow[labels[i]] -= invb;
    }
  };
  return push(std::move(n));
}

void Graph::backward(int loss) {
  if (value(loss).size() != 1)
    throw DimensionError("backward: loss node is not scalar");
  for (Node& n : nodes_) n.grad.fill(0.0);
  nodes_[loss].grad[0] = 1.0;
  for (int id = loss; id >= 0; --id) {
    Node& n = nodes_[id];
    if (n.backward && n.needs_grad) n.backward(*this);
  }
}

GradCheckResult grad_check(const LossGradFn& f, std::vector<Tensor> params,
                           double h, std::size_t max_coords_per_param,
                           Rng& rng, double denom_floor) {
  if (!(h > 0.0)) throw ConfigError("grad_check: step h must be positive");
  auto [loss0, grads] = f(params);
  (void)loss0;

  GradCheckResult result;
  for (std::size_t p = 0; p < params.size(); ++p) {
    const std::size_t count = params[p].size();
    std::vector<std::size_t> coords;
    if (count <= max_coords_per_param) {
      coords.resize(count);
      for (std::size_t i = 0; i < count; ++i) coords[i] = i;
    } else {
      for (std::size_t i = 0; i < max_coords_per_param; ++i)
        coords.push_back(rng.uniform_below(count));
    }
    for (std::size_t c : coords) {
      const double saved = params[p][c];
      params[p][c] = saved + h;
      const double lp = f(params).first;
      params[p][c] = saved - h;
      const double lm = f(params).first;
      params[p][c] = saved;
      const double fd = (lp - lm) / (2.0 * h);
      const double ad = grads[p][c];
      const double denom = std::max({std::abs(ad), std::abs(fd), denom_floor});
      const double rel = std::abs(ad - fd) / denom;
      result.max_rel_error = std::max(result.max_rel_error, rel);
      ++result.coords_checked;
    }
  }
  return result;
}

}  // namespace nero
