#pragma once

#include <string>
#include <vector>

#include "nero/rng.hpp"
#include "nero/tensor.hpp"

namespace nero {

struct Dataset {
  Tensor inputs;  // [n x dim]
  std::vector<int> labels;
  std::size_t count() const { return labels.size(); }
  std::size_t dim() const { return inputs.cols(); }
};

/// Gaussian blobs: point i belongs to class i % classes, drawn as
/// N(0, sigma^2) noise around the class mean e_class (unit canonical
/// direction). Deterministic per rng stream.
Dataset make_blobs(std::size_t classes, std::size_t dim, std::size_t count,
                   double sigma, Rng& rng);

struct BlobsSpec {
  std::size_t classes = 2;
  std::size_t dim = 2;
  std::size_t count = 100;
  double sigma = 0.1;
};

struct MnistSubsetSpec {
  std::string dir;
  std::size_t train_count = 0;  // 0 = all
  std::size_t test_count = 0;
};

struct SplitData {
  Dataset train;
  Dataset val;
  Dataset test;
};

/// Loads the four IDX files from `dir`, takes the first train_count /
/// test_count examples, and carves the validation split off the selected
/// training subset: the last 20%, fixed before any shuffling.
SplitData load_mnist_subset(const MnistSubsetSpec& spec);

/// Blobs equivalent: `count` points for train (last 20% becoming the
/// validation split) plus a fresh max(1, count/5)-point test set drawn
/// from a derived stream.
SplitData make_blobs_split(const BlobsSpec& spec, Rng& rng);

}  // namespace nero
