#include <cstdlib>
#include <string>

#include "cate/simd.hpp"

namespace cate::simd {

#if (defined(__x86_64__) || defined(_M_X64)) && defined(CATE_HAVE_AVX2_TU)
namespace detail {
const Kernels& avx2_kernels();
}
#endif

namespace {

struct Dispatch {
  const Kernels* table;
  const char* name;
};

Dispatch resolve() {
  const char* env = std::getenv("CATE_SIMD");
  std::string mode = env ? env : "auto";
  if (mode == "scalar") return {&scalar_kernels(), "scalar"};
#if (defined(__x86_64__) || defined(_M_X64)) && defined(CATE_HAVE_AVX2_TU)
  const bool has_avx2 =
      __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  if (mode == "avx2" || (mode != "scalar" && has_avx2))
    return {&detail::avx2_kernels(), "avx2"};
#endif
  return {&scalar_kernels(), "scalar"};
}

const Dispatch& dispatch() {
  static const Dispatch d = resolve();
  return d;
}

}  // namespace

const Kernels& active() { return *dispatch().table; }

std::string active_name() { return dispatch().name; }

}  // namespace cate::simd
