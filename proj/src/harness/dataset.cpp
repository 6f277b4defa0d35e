#include "nero/harness/dataset.hpp"

#include <cstring>

#include "nero/errors.hpp"
#include "nero/harness/idx.hpp"

namespace nero {

Dataset make_blobs(std::size_t classes, std::size_t dim, std::size_t count,
                   double sigma, Rng& rng) {
  if (classes < 2) throw ConfigError("make_blobs: need at least 2 classes");
  if (dim < classes)
    throw ConfigError("make_blobs: dim must be >= classes (canonical means)");
  if (count == 0) throw ConfigError("make_blobs: count must be positive");
  Dataset d;
  d.inputs = Tensor({count, dim});
  d.labels.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t c = i % classes;
    auto row = d.inputs.row(i);
    rng.fill_normal(row, sigma);
    row[c] += 1.0;
    d.labels[i] = static_cast<int>(c);
  }
  return d;
}

namespace {
Dataset take(const Dataset& src, std::size_t start, std::size_t count) {
  Dataset out;
  out.inputs = Tensor({count, src.dim()});
  std::memcpy(out.inputs.data(), src.inputs.data() + start * src.dim(),
              count * src.dim() * sizeof(double));
  out.labels.assign(src.labels.begin() + static_cast<std::ptrdiff_t>(start),
                    src.labels.begin() + static_cast<std::ptrdiff_t>(start + count));
  return out;
}

SplitData split_train_val(const Dataset& pool) {
  // Validation = last 20% of the selected subset, fixed before shuffling.
  const std::size_t val_count = pool.count() / 5;
  const std::size_t train_count = pool.count() - val_count;
  if (train_count == 0)
    throw ConfigError("dataset: training split is empty");
  SplitData s;
  s.train = take(pool, 0, train_count);
  s.val = val_count > 0 ? take(pool, train_count, val_count) : s.train;
  return s;
}
}  // namespace

SplitData load_mnist_subset(const MnistSubsetSpec& spec) {
  const std::string train_images = spec.dir + "/train-images-idx3-ubyte";
  const std::string train_labels = spec.dir + "/train-labels-idx1-ubyte";
  const std::string test_images = spec.dir + "/t10k-images-idx3-ubyte";
  const std::string test_labels = spec.dir + "/t10k-labels-idx1-ubyte";

  Dataset train_pool;
  train_pool.inputs = idx_images_to_tensor(read_idx(train_images));
  train_pool.labels = idx_labels_to_vector(read_idx(train_labels));
  if (train_pool.inputs.rows() != train_pool.labels.size())
    throw DataError("mnist: image/label counts disagree in " + spec.dir);

  Dataset test_pool;
  test_pool.inputs = idx_images_to_tensor(read_idx(test_images));
  test_pool.labels = idx_labels_to_vector(read_idx(test_labels));
  if (test_pool.inputs.rows() != test_pool.labels.size())
    throw DataError("mnist: test image/label counts disagree in " + spec.dir);

  const std::size_t want_train =
      spec.train_count == 0 ? train_pool.count()
                            : std::min(spec.train_count, train_pool.count());
  const std::size_t want_test =
      spec.test_count == 0 ? test_pool.count()
                           : std::min(spec.test_count, test_pool.count());

  SplitData s = split_train_val(take(train_pool, 0, want_train));
  s.test = take(test_pool, 0, want_test);
  return s;
}

SplitData make_blobs_split(const BlobsSpec& spec, Rng& rng) {
  Rng train_rng = rng.derive(0x747261696eULL);  // "train"
  Rng test_rng = rng.derive(0x74657374ULL);     // "test"
  const Dataset pool =
      make_blobs(spec.classes, spec.dim, spec.count, spec.sigma, train_rng);
  SplitData s = split_train_val(pool);
  s.test = make_blobs(spec.classes, spec.dim, std::max<std::size_t>(1, spec.count / 5),
                      spec.sigma, test_rng);
  return s;
}

}  // namespace nero
