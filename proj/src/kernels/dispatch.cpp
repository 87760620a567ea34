#include <atomic>
#include <cstdlib>
#include <string>

#include "backends.hpp"
#include "hmlr/errors.hpp"

namespace hmlr::kernels {

namespace {

bool cpu_has(Backend backend) {
  switch (backend) {
    case Backend::Scalar:
      return true;
    case Backend::Avx2:
#if defined(__x86_64__) || defined(__i386__)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Backend::Neon:
#if defined(__aarch64__)
      return true;
#else
      return false;
#endif
  }
  return false;
}

const KernelTable* compiled(Backend backend) {
  switch (backend) {
    case Backend::Scalar: return &detail::scalar_table();
    case Backend::Avx2: return detail::avx2_table();
    case Backend::Neon: return detail::neon_table();
  }
  return nullptr;
}

const KernelTable* detect() {
  if (const char* env = std::getenv("HMLR_KERNELS"); env != nullptr && *env != '\0') {
    return &table(parse_backend(env));
  }
  for (Backend b : {Backend::Avx2, Backend::Neon}) {
    if (available(b)) return compiled(b);
  }
  return &detail::scalar_table();
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> ptr{detect()};
  return ptr;
}

}  // namespace

bool available(Backend backend) { return compiled(backend) != nullptr && cpu_has(backend); }

const KernelTable& table(Backend backend) {
  if (!available(backend)) {
    fail(ErrorKind::Unsupported, "kernel backend not available on this machine");
  }
  return *compiled(backend);
}

const KernelTable& active() { return *current().load(std::memory_order_relaxed); }

void select(Backend backend) { current().store(&table(backend), std::memory_order_relaxed); }

Backend parse_backend(std::string_view name) {
  if (name == "scalar") return Backend::Scalar;
  if (name == "avx2") return Backend::Avx2;
  if (name == "neon") return Backend::Neon;
  fail(ErrorKind::Config, "unknown kernel backend '" + std::string(name) + "'");
}

}  // namespace hmlr::kernels
