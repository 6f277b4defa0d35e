#include "nero/network.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "nero/errors.hpp"
#include "nero/kernels.hpp"
#include "json.hpp"

namespace nero {

using json = nlohmann::json;

void balance_rows(Tensor& w) {
  const std::size_t rows = w.rows(), d = w.cols();
  for (std::size_t i = 0; i < rows; ++i) {
    auto r = w.row(i);
    const double mean = kernels::ops().sum(r.data(), d) / static_cast<double>(d);
    for (std::size_t j = 0; j < d; ++j) r[j] -= mean;
    const double norm = std::sqrt(kernels::ops().sumsq(r.data(), d));
    if (norm < 1e-12)
      throw DegenerateError("balance_rows: row is zero after centering");
    kernels::ops().scal(1.0 / norm, r.data(), d);
  }
}

namespace {

std::vector<std::pair<std::size_t, std::size_t>> layer_dims(const MlpConfig& c) {
  if (c.depth < 1 || c.input_dim == 0 || c.output_dim == 0 ||
      (c.depth > 1 && c.hidden_dim == 0))
    throw ConfigError("mlp: depth and dimensions must be positive");
  std::vector<std::pair<std::size_t, std::size_t>> dims;
  for (std::size_t l = 0; l < c.depth; ++l) {
    const std::size_t in = (l == 0) ? c.input_dim : c.hidden_dim;
    const std::size_t out = (l + 1 == c.depth) ? c.output_dim : c.hidden_dim;
    dims.emplace_back(out, in);
  }
  return dims;
}

}  // namespace

Model::Model(MlpConfig cfg, Rng& rng) : cfg_(cfg) {
  const auto dims = layer_dims(cfg_);
  for (std::size_t l = 0; l < dims.size(); ++l) {
    auto [out, in] = dims[l];
    if (in < 2)
      throw ConfigError("mlp: neuron fan-in must be at least 2");
    ParamGroup w;
    w.name = "W" + std::to_string(l);
    w.kind = ParamKind::neuron_matrix;
    w.num_neurons = out;
    w.fan_in = in;
    w.project = (l + 1 < dims.size()) || cfg_.balance_output_layer;
    w.values = Tensor({out, in});
    // Balanced init is Gaussian(1) followed by projection; the projection
    // makes the sampling scale irrelevant, so init_sigma only applies to
    // plain Gaussian init.
    rng.fill_normal(w.values.flat(), cfg_.balanced_init ? 1.0 : cfg_.init_sigma);
    if (cfg_.balanced_init) balance_rows(w.values);
    w.grad = Tensor::zeros_like(w.values);
    layer_weight_idx_.push_back(groups_.size());
    groups_.push_back(std::move(w));

    if (cfg_.use_bias) {
      ParamGroup b;
      b.name = "b" + std::to_string(l);
      b.kind = ParamKind::scalar_like;
      b.sigma_b = 0.01;  // initialised to zero
      b.values = Tensor({out});
      b.grad = Tensor::zeros_like(b.values);
      layer_bias_idx_.push_back(groups_.size());
      groups_.push_back(std::move(b));
    } else {
      layer_bias_idx_.push_back(npos);
    }
  }
}

Model::ForwardHandle Model::forward(Graph& g, const Tensor& batch,
                                    bool params_need_grad) const {
  if (batch.ndim() != 2 || batch.cols() != cfg_.input_dim)
    throw DimensionError("forward: batch width does not match input_dim");

  ForwardHandle h;
  h.param_nodes.resize(groups_.size(), -1);
  for (std::size_t i = 0; i < groups_.size(); ++i)
    h.param_nodes[i] = g.leaf(groups_[i].values, params_need_grad);

  int x = g.leaf(batch, false);
  for (std::size_t l = 0; l < layer_weight_idx_.size(); ++l) {
    int w = h.param_nodes[layer_weight_idx_[l]];
    if (cfg_.reparameterised) w = g.normalize_rows(w);
    const int b = layer_bias_idx_[l] == npos
                      ? -1
                      : h.param_nodes[layer_bias_idx_[l]];
    x = g.linear(x, w, b);
    if (l + 1 < layer_weight_idx_.size()) x = g.scaled_relu(x);
  }
  h.logits = x;
  return h;
}

int Model::loss(Graph& g, const ForwardHandle& h,
                std::vector<int> labels) const {
  int logits = h.logits;
  if (cfg_.output_dim == 1) logits = g.pad_zero_column(logits);
  return g.softmax_cross_entropy(logits, std::move(labels));
}

void Model::collect_grads(const Graph& g, const ForwardHandle& h) {
  for (std::size_t i = 0; i < groups_.size(); ++i)
    groups_[i].grad = g.grad(h.param_nodes[i]);
}

std::vector<int> Model::predict(const Tensor& logits) const {
  const std::size_t batch = logits.rows(), classes = logits.cols();
  std::vector<int> out(batch);
  for (std::size_t i = 0; i < batch; ++i) {
    if (classes == 1) {
      out[i] = logits.at(i, 0) > 0.0 ? 1 : 0;
    } else {
      auto row = logits.row(i);
      std::size_t best = 0;
      for (std::size_t j = 1; j < classes; ++j)
        if (row[j] > row[best]) best = j;  // ties resolve to smaller index
      out[i] = static_cast<int>(best);
    }
  }
  return out;
}

Model::Metrics Model::evaluate(const Tensor& inputs,
                               const std::vector<int>& labels,
                               std::size_t batch_size) const {
  const std::size_t n = inputs.rows();
  if (labels.size() != n)
    throw DimensionError("evaluate: label count != input count");
  double loss_total = 0.0;
  std::size_t wrong = 0;
  for (std::size_t start = 0; start < n; start += batch_size) {
    const std::size_t count = std::min(batch_size, n - start);
    Tensor batch({count, inputs.cols()});
    std::memcpy(batch.data(), inputs.data() + start * inputs.cols(),
                count * inputs.cols() * sizeof(double));
    std::vector<int> blabels(labels.begin() + start,
                             labels.begin() + start + count);
    Graph g;
    auto h = forward(g, batch, /*params_need_grad=*/false);
    const int l = loss(g, h, blabels);
    loss_total += g.value(l).item() * static_cast<double>(count);
    const auto preds = predict(g.value(h.logits));
    for (std::size_t i = 0; i < count; ++i)
      if (preds[i] != blabels[i]) ++wrong;
  }
  Metrics m;
  m.loss = loss_total / static_cast<double>(n);
  m.error = static_cast<double>(wrong) / static_cast<double>(n);
  return m;
}

// --- checkpoint io ---

namespace {
constexpr char kCkptMagic[8] = {'N', 'K', 'C', 'K', 'P', 'T', '0', '1'};

json mlp_config_to_json(const MlpConfig& c) {
  return json{{"depth", c.depth},
              {"input_dim", c.input_dim},
              {"hidden_dim", c.hidden_dim},
              {"output_dim", c.output_dim},
              {"use_bias", c.use_bias},
              {"reparameterised", c.reparameterised},
              {"balanced_init", c.balanced_init},
              {"init_sigma", c.init_sigma},
              {"balance_output_layer", c.balance_output_layer}};
}

MlpConfig mlp_config_from_json(const json& j) {
  MlpConfig c;
  c.depth = j.at("depth").get<std::size_t>();
  c.input_dim = j.at("input_dim").get<std::size_t>();
  c.hidden_dim = j.at("hidden_dim").get<std::size_t>();
  c.output_dim = j.at("output_dim").get<std::size_t>();
  c.use_bias = j.at("use_bias").get<bool>();
  c.reparameterised = j.at("reparameterised").get<bool>();
  c.balanced_init = j.at("balanced_init").get<bool>();
  c.init_sigma = j.at("init_sigma").get<double>();
  c.balance_output_layer = j.at("balance_output_layer").get<bool>();
  return c;
}
}  // namespace

void save_checkpoint_file(const std::string& path, const Model& m,
                          const OptimizerState* opt_state) {
  json groups = json::array();
  for (const auto& g : m.groups_) {
    groups.push_back(
        {{"name", g.name},
         {"kind", g.kind == ParamKind::neuron_matrix ? "neuron_matrix"
                                                     : "scalar_like"},
         {"num_neurons", g.num_neurons},
         {"fan_in", g.fan_in},
         {"sigma_b", g.sigma_b},
         {"project", g.project},
         {"shape", g.values.shape()},
         {"count", g.values.size()}});
  }
  json header = {{"schema_version", 1},
                 {"model", mlp_config_to_json(m.cfg_)},
                 {"step_counter", m.step_counter},
                 {"groups", groups}};
  if (opt_state) {
    json blobs = json::array();
    for (const auto& [name, data] : opt_state->blobs)
      blobs.push_back({{"name", name}, {"count", data.size()}});
    header["optimizer"] = {{"name", opt_state->name},
                           {"t", opt_state->t},
                           {"blobs", blobs}};
  }
  const std::string htext = header.dump();

  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open checkpoint for writing: " + path);
  f.write(kCkptMagic, sizeof(kCkptMagic));
  const std::uint64_t hlen = htext.size();
  f.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
  f.write(htext.data(), static_cast<std::streamsize>(htext.size()));
  for (const auto& g : m.groups_)
    f.write(reinterpret_cast<const char*>(g.values.data()),
            static_cast<std::streamsize>(g.values.size() * sizeof(double)));
  if (opt_state)
    for (const auto& [name, data] : opt_state->blobs)
      f.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size() * sizeof(double)));
  if (!f) throw DataError("checkpoint write failed: " + path);
}

Model load_checkpoint_file(const std::string& path,
                           OptimizerState* opt_state_out) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open checkpoint: " + path);
  char magic[8];
  f.read(magic, sizeof(magic));
  if (!f || std::memcmp(magic, kCkptMagic, sizeof(magic)) != 0)
    throw DataError("bad checkpoint magic in " + path);
  std::uint64_t hlen = 0;
  f.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
  std::string htext(hlen, '\0');
  f.read(htext.data(), static_cast<std::streamsize>(hlen));
  if (!f) throw DataError("truncated checkpoint header in " + path);

  json header;
  try {
    header = json::parse(htext);
  } catch (const json::exception& e) {
    throw DataError(std::string("unparseable checkpoint header: ") + e.what());
  }

  Model m;
  m.cfg_ = mlp_config_from_json(header.at("model"));
  m.step_counter = header.at("step_counter").get<std::uint64_t>();
  for (const auto& jg : header.at("groups")) {
    ParamGroup g;
    g.name = jg.at("name").get<std::string>();
    g.kind = jg.at("kind").get<std::string>() == "neuron_matrix"
                 ? ParamKind::neuron_matrix
                 : ParamKind::scalar_like;
    g.num_neurons = jg.at("num_neurons").get<std::size_t>();
    g.fan_in = jg.at("fan_in").get<std::size_t>();
    g.sigma_b = jg.at("sigma_b").get<double>();
    g.project = jg.at("project").get<bool>();
    const auto shape = jg.at("shape").get<std::vector<std::size_t>>();
    g.values = Tensor(shape);
    f.read(reinterpret_cast<char*>(g.values.data()),
           static_cast<std::streamsize>(g.values.size() * sizeof(double)));
    if (!f) throw DataError("truncated checkpoint payload in " + path);
    g.grad = Tensor::zeros_like(g.values);
    if (g.kind == ParamKind::neuron_matrix)
      m.layer_weight_idx_.push_back(m.groups_.size());
    else
      m.layer_bias_idx_.push_back(m.groups_.size());
    m.groups_.push_back(std::move(g));
  }
  if (!m.cfg_.use_bias)
    m.layer_bias_idx_.assign(m.layer_weight_idx_.size(), Model::npos);

  if (opt_state_out && header.contains("optimizer")) {
    const json& jo = header.at("optimizer");
    opt_state_out->name = jo.at("name").get<std::string>();
    opt_state_out->t = jo.at("t").get<std::int64_t>();
    for (const auto& jb : jo.at("blobs")) {
      std::vector<double> data(jb.at("count").get<std::size_t>());
      f.read(reinterpret_cast<char*>(data.data()),
             static_cast<std::streamsize>(data.size() * sizeof(double)));
      if (!f) throw DataError("truncated optimizer state in " + path);
      opt_state_out->blobs.emplace_back(jb.at("name").get<std::string>(),
                                        std::move(data));
    }
  }
  return m;
}

void Model::save_checkpoint(const std::string& path) const {
  save_checkpoint_file(path, *this, nullptr);
}

Model Model::load_checkpoint(const std::string& path) {
  return load_checkpoint_file(path, nullptr);
}

}  // namespace nero
