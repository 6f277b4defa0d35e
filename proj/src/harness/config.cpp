#include "nero/harness/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>

#include "nero/errors.hpp"

namespace nero {

using json = nlohmann::json;

namespace {

void reject_unknown_keys(const json& j, const std::set<std::string>& known,
                         const std::string& where) {
  for (const auto& [key, _] : j.items())
    if (!known.contains(key))
      throw ConfigError("config: unknown key \"" + key + "\" in " + where);
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("config: bad value for \"" + std::string(key) +
                      "\": " + e.what());
  }
}

json model_to_json(const MlpConfig& m) {
  json init;
  if (m.balanced_init)
    init = {{"kind", "balanced"}};
  else
    init = {{"kind", "gaussian"}, {"sigma", m.init_sigma}};
  return {{"depth", m.depth},
          {"input_dim", m.input_dim},
          {"hidden_dim", m.hidden_dim},
          {"output_dim", m.output_dim},
          {"use_bias", m.use_bias},
          {"reparameterised", m.reparameterised},
          {"balance_output_layer", m.balance_output_layer},
          {"init", init}};
}

MlpConfig model_from_json(const json& j) {
  reject_unknown_keys(j,
                      {"depth", "input_dim", "hidden_dim", "output_dim",
                       "use_bias", "reparameterised", "balance_output_layer",
                       "init"},
                      "model");
  MlpConfig m;
  m.depth = get_or<std::size_t>(j, "depth", 2);
  m.input_dim = get_or<std::size_t>(j, "input_dim", 0);
  m.hidden_dim = get_or<std::size_t>(j, "hidden_dim", 0);
  m.output_dim = get_or<std::size_t>(j, "output_dim", 0);
  m.use_bias = get_or<bool>(j, "use_bias", true);
  m.reparameterised = get_or<bool>(j, "reparameterised", false);
  m.balance_output_layer = get_or<bool>(j, "balance_output_layer", true);
  if (j.contains("init")) {
    const json& init = j.at("init");
    reject_unknown_keys(init, {"kind", "sigma"}, "model.init");
    const std::string kind = get_or<std::string>(init, "kind", "balanced");
    if (kind == "balanced") {
      m.balanced_init = true;
    } else if (kind == "gaussian") {
      m.balanced_init = false;
      m.init_sigma = get_or<double>(init, "sigma", 1.0);
    } else {
      throw ConfigError("config: model.init.kind must be balanced|gaussian");
    }
  }
  return m;
}

json optimizer_to_json(const OptimizerSpec& spec) {
  if (const auto* nero_cfg = std::get_if<NeroConfig>(&spec)) {
    return {{"kind", "nero"},
            {"eta", nero_cfg->eta},
            {"beta", nero_cfg->beta},
            {"constrain_mean", nero_cfg->constrain_mean},
            {"constrain_norm", nero_cfg->constrain_norm},
            {"sigma_b_default", nero_cfg->sigma_b_default}};
  }
  const auto& b = std::get<BaselineSpec>(spec);
  json out;
  if (const auto* c = std::get_if<SgdConfig>(&b.cfg))
    out = {{"kind", "sgd"}, {"lr", c->lr}, {"momentum", c->momentum}};
  else if (const auto* c = std::get_if<AdamConfig>(&b.cfg))
    out = {{"kind", "adam"}, {"lr", c->lr}, {"beta1", c->beta1},
           {"beta2", c->beta2}, {"eps", c->eps}};
  else if (const auto* c = std::get_if<LambConfig>(&b.cfg))
    out = {{"kind", "lamb"}, {"lr", c->lr}, {"beta1", c->beta1},
           {"beta2", c->beta2}, {"eps", c->eps},
           {"weight_decay", c->weight_decay}};
  else {
    const auto& mc = std::get<MadamConfig>(b.cfg);
    out = {{"kind", "madam"}, {"lr", mc.lr}, {"beta", mc.beta},
           {"clip", mc.clip}};
  }
  out["constrain_mean"] = b.constrain_mean;
  out["constrain_norm"] = b.constrain_norm;
  return out;
}

OptimizerSpec optimizer_from_json(const json& j) {
  const std::string kind = get_or<std::string>(j, "kind", "nero");
  if (kind == "nero") {
    reject_unknown_keys(j,
                        {"kind", "eta", "beta", "constrain_mean",
                         "constrain_norm", "sigma_b_default"},
                        "optimizer");
    NeroConfig c;
    c.eta = get_or<double>(j, "eta", c.eta);
    c.beta = get_or<double>(j, "beta", c.beta);
    c.constrain_mean = get_or<bool>(j, "constrain_mean", true);
    c.constrain_norm = get_or<bool>(j, "constrain_norm", true);
    c.sigma_b_default = get_or<double>(j, "sigma_b_default", c.sigma_b_default);
    return c;
  }
  BaselineSpec spec;
  spec.constrain_mean = get_or<bool>(j, "constrain_mean", false);
  spec.constrain_norm = get_or<bool>(j, "constrain_norm", false);
  if (kind == "sgd") {
    reject_unknown_keys(j, {"kind", "lr", "momentum", "constrain_mean",
                            "constrain_norm"},
                        "optimizer");
    SgdConfig c;
    c.lr = get_or<double>(j, "lr", c.lr);
    c.momentum = get_or<double>(j, "momentum", c.momentum);
    spec.cfg = c;
  } else if (kind == "adam") {
    reject_unknown_keys(j, {"kind", "lr", "beta1", "beta2", "eps",
                            "constrain_mean", "constrain_norm"},
                        "optimizer");
    AdamConfig c;
    c.lr = get_or<double>(j, "lr", c.lr);
    c.beta1 = get_or<double>(j, "beta1", c.beta1);
    c.beta2 = get_or<double>(j, "beta2", c.beta2);
    c.eps = get_or<double>(j, "eps", c.eps);
    spec.cfg = c;
  } else if (kind == "lamb") {
    reject_unknown_keys(j, {"kind", "lr", "beta1", "beta2", "eps",
                            "weight_decay", "constrain_mean", "constrain_norm"},
                        "optimizer");
    LambConfig c;
    c.lr = get_or<double>(j, "lr", c.lr);
    c.beta1 = get_or<double>(j, "beta1", c.beta1);
    c.beta2 = get_or<double>(j, "beta2", c.beta2);
    c.eps = get_or<double>(j, "eps", c.eps);
    c.weight_decay = get_or<double>(j, "weight_decay", c.weight_decay);
    spec.cfg = c;
  } else if (kind == "madam") {
    reject_unknown_keys(j, {"kind", "lr", "beta", "clip", "constrain_mean",
                            "constrain_norm"},
                        "optimizer");
    MadamConfig c;
    c.lr = get_or<double>(j, "lr", c.lr);
    c.beta = get_or<double>(j, "beta", c.beta);
    c.clip = get_or<double>(j, "clip", c.clip);
    spec.cfg = c;
  } else {
    throw ConfigError("config: optimizer.kind must be one of "
                      "nero|sgd|adam|lamb|madam, got \"" + kind + "\"");
  }
  return spec;
}

json schedule_to_json(const Schedule& s) {
  json out = {{"warmup_epochs", s.warmup_epochs}};
  switch (s.decay) {
    case Schedule::Decay::constant:
      out["decay"] = "constant";
      break;
    case Schedule::Decay::per_epoch:
      out["decay"] = "per_epoch";
      out["factor"] = s.factor;
      break;
    case Schedule::Decay::step_milestones:
      out["decay"] = "step";
      out["factor"] = s.factor;
      out["milestones"] = s.milestones;
      break;
  }
  return out;
}

Schedule schedule_from_json(const json& j) {
  reject_unknown_keys(j, {"warmup_epochs", "decay", "factor", "milestones"},
                      "schedule");
  Schedule s;
  s.warmup_epochs = get_or<double>(j, "warmup_epochs", 0.0);
  const std::string decay = get_or<std::string>(j, "decay", "constant");
  if (decay == "constant") {
    s.decay = Schedule::Decay::constant;
  } else if (decay == "per_epoch") {
    s.decay = Schedule::Decay::per_epoch;
    s.factor = get_or<double>(j, "factor", 0.9);
  } else if (decay == "step") {
    s.decay = Schedule::Decay::step_milestones;
    s.factor = get_or<double>(j, "factor", 0.1);
    s.milestones = get_or<std::vector<double>>(j, "milestones", {});
  } else {
    throw ConfigError("config: schedule.decay must be constant|per_epoch|step");
  }
  if (!(s.factor > 0.0))
    throw ConfigError("config: schedule.factor must be positive");
  return s;
}

json dataset_to_json(const DatasetSpec& spec) {
  if (const auto* m = std::get_if<MnistSubsetSpec>(&spec))
    return {{"kind", "mnist"},
            {"dir", m->dir},
            {"train_count", m->train_count},
            {"test_count", m->test_count}};
  const auto& b = std::get<BlobsSpec>(spec);
  return {{"kind", "blobs"},
          {"classes", b.classes},
          {"dim", b.dim},
          {"count", b.count},
          {"sigma", b.sigma}};
}

DatasetSpec dataset_from_json(const json& j) {
  const std::string kind = get_or<std::string>(j, "kind", "");
  if (kind == "mnist") {
    reject_unknown_keys(j, {"kind", "dir", "train_count", "test_count"},
                        "dataset");
    MnistSubsetSpec m;
    m.dir = get_or<std::string>(j, "dir", "data/mnist");
    m.train_count = get_or<std::size_t>(j, "train_count", 0);
    m.test_count = get_or<std::size_t>(j, "test_count", 0);
    return m;
  }
  if (kind == "blobs") {
    reject_unknown_keys(j, {"kind", "classes", "dim", "count", "sigma"},
                        "dataset");
    BlobsSpec b;
    b.classes = get_or<std::size_t>(j, "classes", b.classes);
    b.dim = get_or<std::size_t>(j, "dim", b.dim);
    b.count = get_or<std::size_t>(j, "count", b.count);
    b.sigma = get_or<double>(j, "sigma", b.sigma);
    return b;
  }
  throw ConfigError("config: dataset.kind must be mnist|blobs, got \"" + kind +
                    "\"");
}

}  // namespace

json train_config_to_json(const TrainConfig& c) {
  return {{"schema_version", 1},
          {"model", model_to_json(c.model)},
          {"optimizer", optimizer_to_json(c.optimizer)},
          {"schedule", schedule_to_json(c.schedule)},
          {"dataset", dataset_to_json(c.dataset)},
          {"batch_size", c.batch_size},
          {"epochs", c.epochs},
          {"seed", c.seed},
          {"output_dir", c.output_dir}};
}

TrainConfig train_config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  reject_unknown_keys(j,
                      {"schema_version", "model", "optimizer", "schedule",
                       "dataset", "batch_size", "epochs", "seed", "output_dir"},
                      "config");
  const auto version = get_or<int>(j, "schema_version", -1);
  if (version != 1)
    throw ConfigError("config: schema_version must be 1, got " +
                      std::to_string(version));
  TrainConfig c;
  if (!j.contains("model")) throw ConfigError("config: missing \"model\"");
  c.model = model_from_json(j.at("model"));
  if (j.contains("optimizer")) c.optimizer = optimizer_from_json(j.at("optimizer"));
  if (j.contains("schedule")) c.schedule = schedule_from_json(j.at("schedule"));
  if (!j.contains("dataset")) throw ConfigError("config: missing \"dataset\"");
  c.dataset = dataset_from_json(j.at("dataset"));
  c.batch_size = get_or<std::size_t>(j, "batch_size", 32);
  c.epochs = get_or<std::size_t>(j, "epochs", 1);
  c.seed = get_or<std::uint64_t>(j, "seed", 1);
  c.output_dir = get_or<std::string>(j, "output_dir", "");
  if (c.batch_size == 0) throw ConfigError("config: batch_size must be positive");
  return c;
}

TrainConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config: parse error in " + path + ": " + e.what());
  }
  return train_config_from_json(j);
}

std::string canonical_config_json(const TrainConfig& c) {
  // nlohmann::json objects keep keys sorted, so dump() is canonical.
  return train_config_to_json(c).dump();
}

std::string config_hash(const TrainConfig& c) {
  const std::string text = canonical_config_json(c);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace nero
