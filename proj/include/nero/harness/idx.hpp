#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nero/tensor.hpp"

namespace nero {

/// IDX container (the MNIST byte format). Big-endian magic and dims;
/// unsigned-byte payload. Supported magics: 0x00000803 (images, 3 dims)
/// and 0x00000801 (labels, 1 dim).
struct IdxFile {
  std::uint32_t magic = 0;
  std::vector<std::uint32_t> dims;
  std::vector<std::uint8_t> payload;
};

/// Parses bytes; throws DataError naming the offending magic value or
/// the expected/actual payload length. serialize_idx(parse_idx(b)) == b.
IdxFile parse_idx(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> serialize_idx(const IdxFile& f);

IdxFile read_idx(const std::string& path);
void write_idx(const std::string& path, const IdxFile& f);

/// Images: [n, rows*cols] scaled to [0, 1] by /255.
Tensor idx_images_to_tensor(const IdxFile& f);
/// Labels as integers.
std::vector<int> idx_labels_to_vector(const IdxFile& f);

}  // namespace nero
