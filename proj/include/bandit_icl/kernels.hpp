#pragma once

// Dense row-major kernels behind the transformer. Every kernel has a scalar
// reference implementation and, on x86-64, an AVX2/FMA variant; the variant is
// chosen once at runtime from CPUID and can be pinned for tests.

#include <cstddef>
#include <string_view>

namespace bandit_icl::kernels {

enum class Isa { Scalar, Avx2 };

std::string_view to_string(Isa isa);

template <typename T>
struct KernelTable {
  /// C(m x n) = A(m x k) * B(k x n), or += when accumulate.
  void (*gemm_nn)(int m, int n, int k, const T* a, int lda, const T* b, int ldb, T* c, int ldc,
                  bool accumulate);
  /// C(m x n) = A(m x k) * B^T with B stored (n x k).
  void (*gemm_nt)(int m, int n, int k, const T* a, int lda, const T* b, int ldb, T* c, int ldc,
                  bool accumulate);
  /// C(m x n) = A^T * B with A stored (k x m) and B stored (k x n).
  void (*gemm_tn)(int m, int n, int k, const T* a, int lda, const T* b, int ldb, T* c, int ldc,
                  bool accumulate);
  T (*dot)(int n, const T* x, const T* y);
  /// y += alpha * x
  void (*axpy)(int n, T alpha, const T* x, T* y);
};

/// Best variant the CPU supports. BANDIT_ICL_ISA=scalar forces the reference path.
Isa detect_isa();
bool isa_available(Isa isa);

Isa active_isa();
/// Pins the variant used by the free functions below. Throws if unavailable.
void set_active_isa(Isa isa);

template <typename T>
const KernelTable<T>& table(Isa isa);

template <typename T>
const KernelTable<T>& active() {
  return table<T>(active_isa());
}

template <typename T>
void gemm_nn(int m, int n, int k, const T* a, int lda, const T* b, int ldb, T* c, int ldc,
             bool accumulate = false) {
  active<T>().gemm_nn(m, n, k, a, lda, b, ldb, c, ldc, accumulate);
}

template <typename T>
void gemm_nt(int m, int n, int k, const T* a, int lda, const T* b, int ldb, T* c, int ldc,
             bool accumulate = false) {
  active<T>().gemm_nt(m, n, k, a, lda, b, ldb, c, ldc, accumulate);
}

template <typename T>
void gemm_tn(int m, int n, int k, const T* a, int lda, const T* b, int ldb, T* c, int ldc,
             bool accumulate = false) {
  active<T>().gemm_tn(m, n, k, a, lda, b, ldb, c, ldc, accumulate);
}

template <typename T>
T dot(int n, const T* x, const T* y) {
  return active<T>().dot(n, x, y);
}

template <typename T>
void axpy(int n, T alpha, const T* x, T* y) {
  active<T>().axpy(n, alpha, x, y);
}

namespace scalar {
template <typename T>
const KernelTable<T>& table();
}

namespace avx2 {
/// nullptr when the library was built without AVX2 support.
template <typename T>
const KernelTable<T>* table();
}

}  // namespace bandit_icl::kernels
