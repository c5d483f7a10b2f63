#pragma once

// Exact rational evaluation of the posterior average-mean estimate
//   mu = s S H^T (s H (S + D) H^T)^+ Y
// used as an oracle for the floating-point implementation. The pseudo-inverse
// comes from a rank factorization M = F G read off the reduced row echelon
// form: M^+ = G^T (G G^T)^-1 (F^T F)^-1 F^T.

#include <boost/multiprecision/cpp_int.hpp>
#include <vector>

namespace exact {

using Q = boost::multiprecision::cpp_rational;
using Mat = std::vector<std::vector<Q>>;

inline Mat zeros(std::size_t r, std::size_t c) { return Mat(r, std::vector<Q>(c, Q(0))); }

inline Mat mul(const Mat& a, const Mat& b) {
  Mat out = zeros(a.size(), b.empty() ? 0 : b[0].size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t k = 0; k < b.size(); ++k) {
      if (a[i][k] == 0) continue;
      for (std::size_t j = 0; j < b[0].size(); ++j) out[i][j] += a[i][k] * b[k][j];
    }
  return out;
}

inline Mat transpose(const Mat& a) {
  Mat out = zeros(a.empty() ? 0 : a[0].size(), a.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[0].size(); ++j) out[j][i] = a[i][j];
  return out;
}

/// Gauss-Jordan inverse of a nonsingular square matrix.
inline Mat inverse(Mat a) {
  const std::size_t n = a.size();
  Mat inv = zeros(n, n);
  for (std::size_t i = 0; i < n; ++i) inv[i][i] = 1;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    while (a[p][c] == 0) ++p;
    std::swap(a[p], a[c]);
    std::swap(inv[p], inv[c]);
    const Q piv = a[c][c];
    for (std::size_t j = 0; j < n; ++j) {
      a[c][j] /= piv;
      inv[c][j] /= piv;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c || a[r][c] == 0) continue;
      const Q f = a[r][c];
      for (std::size_t j = 0; j < n; ++j) {
        a[r][j] -= f * a[c][j];
        inv[r][j] -= f * inv[c][j];
      }
    }
  }
  return inv;
}

inline Mat pseudo_inverse(const Mat& m) {
  const std::size_t rows = m.size();
  const std::size_t cols = rows ? m[0].size() : 0;
  Mat r = m;
  std::vector<std::size_t> pivots;
  std::size_t lead = 0;
  for (std::size_t c = 0; c < cols && lead < rows; ++c) {
    std::size_t p = lead;
    while (p < rows && r[p][c] == 0) ++p;
    if (p == rows) continue;
    std::swap(r[p], r[lead]);
    const Q piv = r[lead][c];
    for (auto& v : r[lead]) v /= piv;
    for (std::size_t i = 0; i < rows; ++i) {
      if (i == lead || r[i][c] == 0) continue;
      const Q f = r[i][c];
      for (std::size_t j = 0; j < cols; ++j) r[i][j] -= f * r[lead][j];
    }
    pivots.push_back(c);
    ++lead;
  }
  const std::size_t rank = pivots.size();
  if (rank == 0) return zeros(cols, rows);
  Mat f = zeros(rows, rank);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t k = 0; k < rank; ++k) f[i][k] = m[i][pivots[k]];
  Mat g(r.begin(), r.begin() + static_cast<long>(rank));
  const Mat gt = transpose(g);
  const Mat ft = transpose(f);
  return mul(mul(gt, inverse(mul(g, gt))), mul(inverse(mul(ft, f)), ft));
}

/// actions/rewards: the history; prior: vector behind S = prior prior^T.
inline std::vector<double> lmmse_mu(const std::vector<int>& actions, const std::vector<double>& rewards, int arms,
                                    double noise_variance, const std::vector<double>& prior, double sigma_theta_sq) {
  const std::size_t n = actions.size();
  const auto A = static_cast<std::size_t>(arms);
  Mat h = zeros(n, A);
  Mat y = zeros(n, 1);
  std::vector<long> counts(A, 0);
  for (std::size_t t = 0; t < n; ++t) {
    h[t][static_cast<std::size_t>(actions[t])] = 1;
    y[t][0] = Q(rewards[t]);
    ++counts[static_cast<std::size_t>(actions[t])];
  }
  Mat s = zeros(A, A);
  Mat sd = zeros(A, A);
  for (std::size_t a = 0; a < A; ++a)
    for (std::size_t b = 0; b < A; ++b) {
      s[a][b] = Q(prior[a]) * Q(prior[b]);
      sd[a][b] = s[a][b];
    }
  for (std::size_t a = 0; a < A; ++a) sd[a][a] += Q(noise_variance) / counts[a];
  const Q scale(sigma_theta_sq);
  Mat m = mul(mul(h, sd), transpose(h));
  for (auto& row : m)
    for (auto& v : row) v *= scale;
  Mat mu = mul(mul(mul(s, transpose(h)), pseudo_inverse(m)), y);
  std::vector<double> out(A);
  for (std::size_t a = 0; a < A; ++a) out[a] = static_cast<double>(scale * mu[a][0]);
  return out;
}

}  // namespace exact
