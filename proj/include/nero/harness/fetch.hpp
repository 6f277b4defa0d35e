#pragma once

#include <string>

namespace nero {

/// Downloads the four MNIST IDX files into `dir` (skipping files already
/// present and valid), decompressing the .gz payloads and verifying the
/// IDX magic. Plain-HTTP mirrors only; throws DataError when the files
/// cannot be fetched (e.g. no network) with instructions for placing
/// them manually.
void fetch_mnist(const std::string& dir, const std::string& base_url =
                                             "http://ossci-datasets.s3."
                                             "amazonaws.com/mnist");

/// True when all four IDX files exist in `dir` and parse.
bool mnist_present(const std::string& dir);

}  // namespace nero
