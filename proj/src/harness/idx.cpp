#include "nero/harness/idx.hpp"

#include <cstdio>
#include <fstream>

#include "nero/errors.hpp"

namespace nero {

namespace {
constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

std::uint32_t read_be32(const std::uint8_t* p) {
  return (static_cast<std::uint32_t>(p[0]) << 24) |
         (static_cast<std::uint32_t>(p[1]) << 16) |
         (static_cast<std::uint32_t>(p[2]) << 8) |
         static_cast<std::uint32_t>(p[3]);
}

void write_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

std::string hex32(std::uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "0x%08x", v);
  return buf;
}
}  // namespace

IdxFile parse_idx(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4)
    throw DataError("idx: file too short for a magic number (" +
                    std::to_string(bytes.size()) + " bytes)");
  IdxFile f;
  f.magic = read_be32(bytes.data());

  std::size_t ndims = 0;
  if (f.magic == kImagesMagic)
    ndims = 3;
  else if (f.magic == kLabelsMagic)
    ndims = 1;
  else
    throw DataError("idx: unsupported magic " + hex32(f.magic) +
                    " (expected 0x00000803 images or 0x00000801 labels)");

  const std::size_t header = 4 + 4 * ndims;
  if (bytes.size() < header)
    throw DataError("idx: truncated header (need " + std::to_string(header) +
                    " bytes, have " + std::to_string(bytes.size()) + ")");

  std::size_t expected = 1;
  for (std::size_t i = 0; i < ndims; ++i) {
    f.dims.push_back(read_be32(bytes.data() + 4 + 4 * i));
    expected *= f.dims.back();
  }
  if (bytes.size() != header + expected)
    throw DataError("idx: payload length mismatch (expected " +
                    std::to_string(expected) + " bytes, have " +
                    std::to_string(bytes.size() - header) + ")");
  f.payload.assign(bytes.begin() + static_cast<std::ptrdiff_t>(header),
                   bytes.end());
  return f;
}

std::vector<std::uint8_t> serialize_idx(const IdxFile& f) {
  std::vector<std::uint8_t> out;
  out.reserve(4 + 4 * f.dims.size() + f.payload.size());
  write_be32(out, f.magic);
  for (std::uint32_t d : f.dims) write_be32(out, d);
  out.insert(out.end(), f.payload.begin(), f.payload.end());
  return out;
}

IdxFile read_idx(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("idx: cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return parse_idx(bytes);
}

void write_idx(const std::string& path, const IdxFile& f) {
  const auto bytes = serialize_idx(f);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("idx: cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("idx: write failed for " + path);
}

Tensor idx_images_to_tensor(const IdxFile& f) {
  if (f.magic != kImagesMagic)
    throw DataError("idx: not an images file (magic " + hex32(f.magic) + ")");
  if (f.dims[0] == 0 || f.dims[1] == 0 || f.dims[2] == 0)
    throw DataError("idx: images file contains no data");
  const std::size_t n = f.dims[0];
  const std::size_t pixels = static_cast<std::size_t>(f.dims[1]) * f.dims[2];
  Tensor out({n, pixels});
  for (std::size_t i = 0; i < f.payload.size(); ++i)
    out[i] = static_cast<double>(f.payload[i]) / 255.0;
  return out;
}

std::vector<int> idx_labels_to_vector(const IdxFile& f) {
  if (f.magic != kLabelsMagic)
    throw DataError("idx: not a labels file (magic " + hex32(f.magic) + ")");
  return std::vector<int>(f.payload.begin(), f.payload.end());
}

}  // namespace nero
