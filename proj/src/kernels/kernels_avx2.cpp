// Compiled with -mavx2 -mfma. Nothing here may run unless dispatch has
// confirmed the CPU supports both extensions.

#include "bandit_icl/kernels.hpp"

#if defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

#include <vector>

namespace bandit_icl::kernels::avx2 {
namespace {

struct F32 {
  using T = float;
  using V = __m256;
  static constexpr int W = 8;
  static V zero() { return _mm256_setzero_ps(); }
  static V set1(T x) { return _mm256_set1_ps(x); }
  static V load(const T* p) { return _mm256_loadu_ps(p); }
  static void store(T* p, V v) { _mm256_storeu_ps(p, v); }
  static V fma(V a, V b, V c) { return _mm256_fmadd_ps(a, b, c); }
  static V add(V a, V b) { return _mm256_add_ps(a, b); }
  static __m256i mask(int lanes) {
    alignas(32) static const int kBits[16] = {-1, -1, -1, -1, -1, -1, -1, -1, 0, 0, 0, 0, 0, 0, 0, 0};
    return _mm256_loadu_si256(reinterpret_cast<const __m256i*>(kBits + 8 - lanes));
  }
  static V mload(const T* p, __m256i m) { return _mm256_maskload_ps(p, m); }
  static void mstore(T* p, __m256i m, V v) { _mm256_maskstore_ps(p, m, v); }
  static T hsum(V v) {
    __m128 lo = _mm256_castps256_ps128(v);
    __m128 hi = _mm256_extractf128_ps(v, 1);
    lo = _mm_add_ps(lo, hi);
    __m128 shuf = _mm_movehdup_ps(lo);
    __m128 sums = _mm_add_ps(lo, shuf);
    shuf = _mm_movehl_ps(shuf, sums);
    sums = _mm_add_ss(sums, shuf);
    return _mm_cvtss_f32(sums);
  }
};

struct F64 {
  using T = double;
  using V = __m256d;
  static constexpr int W = 4;
  static V zero() { return _mm256_setzero_pd(); }
  static V set1(T x) { return _mm256_set1_pd(x); }
  static V load(const T* p) { return _mm256_loadu_pd(p); }
  static void store(T* p, V v) { _mm256_storeu_pd(p, v); }
  static V fma(V a, V b, V c) { return _mm256_fmadd_pd(a, b, c); }
  static V add(V a, V b) { return _mm256_add_pd(a, b); }
  static __m256i mask(int lanes) {
    alignas(32) static const long long kBits[8] = {-1, -1, -1, -1, 0, 0, 0, 0};
    return _mm256_loadu_si256(reinterpret_cast<const __m256i*>(kBits + 4 - lanes));
  }
  static V mload(const T* p, __m256i m) { return _mm256_maskload_pd(p, m); }
  static void mstore(T* p, __m256i m, V v) { _mm256_maskstore_pd(p, m, v); }
  static T hsum(V v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d high64 = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, high64));
  }
};

// A accessed as a(i, p) = a[i * lda + p] (NN) or a[p * lda + i] (TN).
template <bool kTransA>
struct AView {
  template <typename T>
  static T at(const T* a, int lda, int i, int p) {
    if constexpr (kTransA) {
      return a[static_cast<std::ptrdiff_t>(p) * lda + i];
    } else {
      return a[static_cast<std::ptrdiff_t>(i) * lda + p];
    }
  }
};

// One MR x (2W) tile of C. kFull means all 2W columns are in range.
template <class S, bool kTransA, int MR, bool kFull>
inline void tile(int k, int cols, const typename S::T* a, int lda, int i0, const typename S::T* b,
                 int ldb, typename S::T* c, int ldc, bool accumulate) {
  using V = typename S::V;
  constexpr int W = S::W;
  V acc0[MR];
  V acc1[MR];
  const int cols0 = cols < W ? cols : W;
  const int cols1 = cols > W ? cols - W : 0;
  const __m256i m0 = S::mask(cols0);
  const __m256i m1 = S::mask(cols1);
  for (int r = 0; r < MR; ++r) {
    typename S::T* crow = c + static_cast<std::ptrdiff_t>(i0 + r) * ldc;
    if (accumulate) {
      if constexpr (kFull) {
        acc0[r] = S::load(crow);
        acc1[r] = S::load(crow + W);
      } else {
        acc0[r] = S::mload(crow, m0);
        acc1[r] = cols1 > 0 ? S::mload(crow + W, m1) : S::zero();
      }
    } else {
      acc0[r] = S::zero();
      acc1[r] = S::zero();
    }
  }
  for (int p = 0; p < k; ++p) {
    const typename S::T* brow = b + static_cast<std::ptrdiff_t>(p) * ldb;
    V b0;
    V b1;
    if constexpr (kFull) {
      b0 = S::load(brow);
      b1 = S::load(brow + W);
    } else {
      b0 = S::mload(brow, m0);
      b1 = cols1 > 0 ? S::mload(brow + W, m1) : S::zero();
    }
    for (int r = 0; r < MR; ++r) {
      const V av = S::set1(AView<kTransA>::at(a, lda, i0 + r, p));
      acc0[r] = S::fma(av, b0, acc0[r]);
      acc1[r] = S::fma(av, b1, acc1[r]);
    }
  }
  for (int r = 0; r < MR; ++r) {
    typename S::T* crow = c + static_cast<std::ptrdiff_t>(i0 + r) * ldc;
    if constexpr (kFull) {
      S::store(crow, acc0[r]);
      S::store(crow + W, acc1[r]);
    } else {
      S::mstore(crow, m0, acc0[r]);
      if (cols1 > 0) S::mstore(crow + W, m1, acc1[r]);
    }
  }
}

template <class S, bool kTransA, int MR>
inline void row_panel(int n, int k, const typename S::T* a, int lda, int i0,
                      const typename S::T* b, int ldb, typename S::T* c, int ldc, bool accumulate) {
  constexpr int NB = 2 * S::W;
  int j = 0;
  for (; j + NB <= n; j += NB) {
    tile<S, kTransA, MR, true>(k, NB, a, lda, i0, b + j, ldb, c + j, ldc, accumulate);
  }
  if (j < n) tile<S, kTransA, MR, false>(k, n - j, a, lda, i0, b + j, ldb, c + j, ldc, accumulate);
}

template <class S, bool kTransA>
void gemm(int m, int n, int k, const typename S::T* a, int lda, const typename S::T* b, int ldb,
          typename S::T* c, int ldc, bool accumulate) {
  int i = 0;
  for (; i + 4 <= m; i += 4) row_panel<S, kTransA, 4>(n, k, a, lda, i, b, ldb, c, ldc, accumulate);
  switch (m - i) {
    case 3: row_panel<S, kTransA, 3>(n, k, a, lda, i, b, ldb, c, ldc, accumulate); break;
    case 2: row_panel<S, kTransA, 2>(n, k, a, lda, i, b, ldb, c, ldc, accumulate); break;
    case 1: row_panel<S, kTransA, 1>(n, k, a, lda, i, b, ldb, c, ldc, accumulate); break;
    default: break;
  }
}

template <class S>
void gemm_nn(int m, int n, int k, const typename S::T* a, int lda, const typename S::T* b, int ldb,
             typename S::T* c, int ldc, bool accumulate) {
  gemm<S, false>(m, n, k, a, lda, b, ldb, c, ldc, accumulate);
}

template <class S>
void gemm_tn(int m, int n, int k, const typename S::T* a, int lda, const typename S::T* b, int ldb,
             typename S::T* c, int ldc, bool accumulate) {
  gemm<S, true>(m, n, k, a, lda, b, ldb, c, ldc, accumulate);
}

// B^T is packed into a scratch panel so the broadcast-FMA kernel applies.
template <class S>
void gemm_nt(int m, int n, int k, const typename S::T* a, int lda, const typename S::T* b, int ldb,
             typename S::T* c, int ldc, bool accumulate) {
  using T = typename S::T;
  thread_local std::vector<T> packed;
  packed.resize(static_cast<std::size_t>(k) * n);
  for (int j = 0; j < n; ++j) {
    const T* brow = b + static_cast<std::ptrdiff_t>(j) * ldb;
    for (int p = 0; p < k; ++p) packed[static_cast<std::size_t>(p) * n + j] = brow[p];
  }
  gemm<S, false>(m, n, k, a, lda, packed.data(), n, c, ldc, accumulate);
}

template <class S>
typename S::T dot(int n, const typename S::T* x, const typename S::T* y) {
  using V = typename S::V;
  constexpr int W = S::W;
  V acc0 = S::zero();
  V acc1 = S::zero();
  int i = 0;
  for (; i + 2 * W <= n; i += 2 * W) {
    acc0 = S::fma(S::load(x + i), S::load(y + i), acc0);
    acc1 = S::fma(S::load(x + i + W), S::load(y + i + W), acc1);
  }
  for (; i + W <= n; i += W) acc0 = S::fma(S::load(x + i), S::load(y + i), acc0);
  if (i < n) {
    const __m256i m = S::mask(n - i);
    acc1 = S::fma(S::mload(x + i, m), S::mload(y + i, m), acc1);
  }
  return S::hsum(S::add(acc0, acc1));
}

template <class S>
void axpy(int n, typename S::T alpha, const typename S::T* x, typename S::T* y) {
  constexpr int W = S::W;
  const auto av = S::set1(alpha);
  int i = 0;
  for (; i + W <= n; i += W) S::store(y + i, S::fma(av, S::load(x + i), S::load(y + i)));
  if (i < n) {
    const __m256i m = S::mask(n - i);
    S::mstore(y + i, m, S::fma(av, S::mload(x + i, m), S::mload(y + i, m)));
  }
}

template <class S>
constexpr KernelTable<typename S::T> kTable{&gemm_nn<S>, &gemm_nt<S>, &gemm_tn<S>, &dot<S>,
                                            &axpy<S>};

}  // namespace

template <>
const KernelTable<float>* table<float>() {
  return &kTable<F32>;
}
template <>
const KernelTable<double>* table<double>() {
  return &kTable<F64>;
}

}  // namespace bandit_icl::kernels::avx2

#else

namespace bandit_icl::kernels::avx2 {
template <>
const KernelTable<float>* table<float>() {
  return nullptr;
}
template <>
const KernelTable<double>* table<double>() {
  return nullptr;
}
}  // namespace bandit_icl::kernels::avx2

#endif
