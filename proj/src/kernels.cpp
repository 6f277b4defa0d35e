#include "nero/kernels.hpp"

#include <atomic>

#include "nero/errors.hpp"

namespace nero::kernels {

const Ops& scalar_ops();  // kernels_scalar.cpp
#ifdef NERO_HAVE_AVX2
const Ops& avx2_ops();  // kernels_avx2.cpp
#endif

bool avx2_available() {
#ifdef NERO_HAVE_AVX2
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

namespace {
std::atomic<Backend> g_backend{avx2_available() ? Backend::avx2
                                                : Backend::scalar};
}

Backend active_backend() { return g_backend.load(std::memory_order_relaxed); }

void set_backend(Backend b) {
  if (b == Backend::avx2 && !avx2_available())
    throw ConfigError("avx2 kernels requested but not supported on this CPU");
  g_backend.store(b, std::memory_order_relaxed);
}

const char* backend_name(Backend b) {
  return b == Backend::avx2 ? "avx2" : "scalar";
}

const Ops& ops_for(Backend b) {
#ifdef NERO_HAVE_AVX2
  if (b == Backend::avx2) return avx2_ops();
#else
  (void)b;
#endif
  return scalar_ops();
}

const Ops& ops() { return ops_for(active_backend()); }

}  // namespace nero::kernels
