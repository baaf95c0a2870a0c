#include "hstg/kernels.hpp"

#include <atomic>

#include "hstg/errors.hpp"

namespace hstg::kern {

#if defined(HSTG_HAVE_AVX2)
const Ops& avx2_ops();  // kernels_avx2.cpp
#endif

bool avx2_supported() {
#if defined(HSTG_HAVE_AVX2) && defined(__GNUC__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

namespace {
std::atomic<Backend> g_backend{avx2_supported() ? Backend::avx2 : Backend::scalar};
}

const Ops& ops() {
#if defined(HSTG_HAVE_AVX2)
  if (g_backend.load(std::memory_order_relaxed) == Backend::avx2) return avx2_ops();
#endif
  return scalar_ops();
}

Backend active_backend() { return g_backend.load(std::memory_order_relaxed); }

void set_backend(Backend b) {
  if (b == Backend::avx2 && !avx2_supported())
    throw UsageError("avx2 backend requested but not supported on this CPU");
  g_backend.store(b, std::memory_order_relaxed);
}

}  // namespace hstg::kern
