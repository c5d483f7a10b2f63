#include <atomic>
#include <cstdlib>
#include <string>

#include "bandit_icl/error.hpp"
#include "bandit_icl/kernels.hpp"

namespace bandit_icl::kernels {
namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

std::atomic<Isa>& active_slot() {
  static std::atomic<Isa> slot{detect_isa()};
  return slot;
}

}  // namespace

std::string_view to_string(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
  }
  return "unknown";
}

bool isa_available(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return true;
    case Isa::Avx2: return avx2::table<float>() != nullptr && cpu_has_avx2();
  }
  return false;
}

Isa detect_isa() {
  if (const char* forced = std::getenv("BANDIT_ICL_ISA")) {
    if (std::string(forced) == "scalar") return Isa::Scalar;
  }
  return isa_available(Isa::Avx2) ? Isa::Avx2 : Isa::Scalar;
}

Isa active_isa() { return active_slot().load(std::memory_order_relaxed); }

void set_active_isa(Isa isa) {
  if (!isa_available(isa)) {
    fail(ErrorKind::InvalidArgument, "kernel variant unavailable: " + std::string(to_string(isa)));
  }
  active_slot().store(isa, std::memory_order_relaxed);
}

template <typename T>
const KernelTable<T>& table(Isa isa) {
  if (isa == Isa::Avx2) {
    if (const KernelTable<T>* t = avx2::table<T>()) return *t;
  }
  return scalar::table<T>();
}

template const KernelTable<float>& table<float>(Isa);
template const KernelTable<double>& table<double>(Isa);

}  // namespace bandit_icl::kernels
