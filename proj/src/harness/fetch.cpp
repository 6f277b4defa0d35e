#include "nero/harness/fetch.hpp"

#include <zlib.h>

#include <filesystem>
#include <vector>

#include "httplib.h"
#include "nero/errors.hpp"
#include "nero/harness/idx.hpp"

namespace nero {

namespace {

const char* kFiles[4] = {
    "train-images-idx3-ubyte",
    "train-labels-idx1-ubyte",
    "t10k-images-idx3-ubyte",
    "t10k-labels-idx1-ubyte",
};

std::vector<std::uint8_t> gunzip(const std::string& compressed) {
  z_stream zs{};
  // 16 + MAX_WBITS: gzip container
  if (inflateInit2(&zs, 16 + MAX_WBITS) != Z_OK)
    throw DataError("gunzip: inflateInit failed");
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(compressed.data()));
  zs.avail_in = static_cast<uInt>(compressed.size());

  std::vector<std::uint8_t> out;
  std::uint8_t buf[1 << 16];
  int rc = Z_OK;
  while (rc != Z_STREAM_END) {
    zs.next_out = buf;
    zs.avail_out = sizeof(buf);
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      throw DataError("gunzip: corrupt gzip stream (zlib rc " +
                      std::to_string(rc) + ")");
    }
    out.insert(out.end(), buf, buf + (sizeof(buf) - zs.avail_out));
  }
  inflateEnd(&zs);
  return out;
}

bool file_valid(const std::string& path) {
  if (!std::filesystem::exists(path)) return false;
  try {
    read_idx(path);
    return true;
  } catch (const DataError&) {
    return false;
  }
}

}  // namespace

bool mnist_present(const std::string& dir) {
  for (const char* f : kFiles)
    if (!file_valid(dir + "/" + f)) return false;
  return true;
}

void fetch_mnist(const std::string& dir, const std::string& base_url) {
  std::filesystem::create_directories(dir);

  // Split base_url into host and path prefix (plain http only).
  std::string url = base_url;
  const std::string scheme = "http://";
  if (url.rfind(scheme, 0) != 0)
    throw DataError("fetch-mnist: only plain http URLs are supported, got " +
                    url + " (download the files manually for https mirrors)");
  url = url.substr(scheme.size());
  const auto slash = url.find('/');
  const std::string host = url.substr(0, slash);
  std::string prefix = slash == std::string::npos ? "" : url.substr(slash);
  if (!prefix.empty() && prefix.back() == '/') prefix.pop_back();

  httplib::Client client(host);
  client.set_connection_timeout(15);
  client.set_read_timeout(60);

  for (const char* name : kFiles) {
    const std::string target = dir + "/" + name;
    if (file_valid(target)) continue;
    const std::string remote = prefix + "/" + name + ".gz";
    auto res = client.Get(remote);
    if (!res || res->status != 200)
      throw DataError(
          "fetch-mnist: GET http://" + host + remote + " failed (" +
          (res ? "status " + std::to_string(res->status) : "no connection") +
          "); place the four IDX files in " + dir + " manually");
    const auto bytes = gunzip(res->body);
    const IdxFile parsed = parse_idx(bytes);  // validate before writing
    write_idx(target, parsed);
  }
}

}  // namespace nero
