#pragma once

#include <string>
#include <variant>

#include "nero/harness/dataset.hpp"
#include "nero/network.hpp"
#include "nero/optim.hpp"
#include "json.hpp"

namespace nero {

struct BaselineSpec {
  BaselineConfig cfg;
  bool constrain_mean = false;
  bool constrain_norm = false;
};

using OptimizerSpec = std::variant<NeroConfig, BaselineSpec>;
using DatasetSpec = std::variant<MnistSubsetSpec, BlobsSpec>;

/// Everything that determines a run. Serialized verbatim into run
/// records; the schema is versioned and unknown keys are rejected so
/// configs stay diffable and archivable.
struct TrainConfig {
  MlpConfig model;
  OptimizerSpec optimizer = NeroConfig{};
  Schedule schedule;
  DatasetSpec dataset = BlobsSpec{};
  std::size_t batch_size = 32;
  std::size_t epochs = 1;
  std::uint64_t seed = 1;
  std::string output_dir;  // empty: resolved by the CLI
};

nlohmann::json train_config_to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j);
TrainConfig load_config_file(const std::string& path);

/// Canonical dump (sorted keys, fixed formatting) used for hashing.
std::string canonical_config_json(const TrainConfig& c);

/// FNV-1a 64-bit, as a fixed-width hex string.
std::string config_hash(const TrainConfig& c);

}  // namespace nero
