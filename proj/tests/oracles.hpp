#pragma once

// Brute-force reference computations for tests. Nothing here calls into the
// library's numerical paths; plain loops over std::vector only.

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace oracle {

using Mat = std::vector<std::vector<double>>;  // row-major, rows of equal length

inline Mat zeros(std::size_t r, std::size_t c) { return Mat(r, std::vector<double>(c, 0.0)); }

inline Mat random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Mat m = zeros(r, c);
  for (auto& row : m)
    for (auto& v : row) v = n(rng);
  return m;
}

inline Mat transpose(const Mat& a) {
  Mat t = zeros(a.empty() ? 0 : a[0].size(), a.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[i].size(); ++j) t[j][i] = a[i][j];
  return t;
}

inline Mat multiply(const Mat& a, const Mat& b) {
  const std::size_t n = a.size(), k = b.size(), m = b.empty() ? 0 : b[0].size();
  Mat c = zeros(n, m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      double s = 0.0;
      for (std::size_t q = 0; q < k; ++q) s += a[i][q] * b[q][j];
      c[i][j] = s;
    }
  return c;
}

/// Solves A X = B by Gauss-Jordan elimination with partial pivoting.
inline Mat solve(Mat a, Mat b) {
  const std::size_t n = a.size();
  const std::size_t m = b.empty() ? 0 : b[0].size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    if (a[piv][col] == 0.0) throw std::runtime_error("oracle::solve: singular");
    std::swap(a[piv], a[col]);
    std::swap(b[piv], b[col]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = a[r][col] / a[col][col];
      if (f == 0.0) continue;
      for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
      for (std::size_t c = 0; c < m; ++c) b[r][c] -= f * b[col][c];
    }
  }
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < m; ++c) b[r][c] /= a[r][r];
  return b;
}

/// Ridge weights from the normal equations (X^T X + lambda I) W = X^T Y.
inline Mat ridge(const Mat& x, const Mat& y, double lambda) {
  const Mat xt = transpose(x);
  Mat g = multiply(xt, x);
  for (std::size_t i = 0; i < g.size(); ++i) g[i][i] += lambda;
  return solve(g, multiply(xt, y));
}

/// r[t][e] = sum_i sum_l w[l][e][i] * s[t - lag_l][i], zero outside [0, T).
inline Mat convolve(const Mat& s, const std::vector<long long>& lags,
                    const std::vector<std::vector<std::vector<double>>>& w, std::size_t n_channels) {
  const std::size_t t_len = s.size();
  const std::size_t d = s.empty() ? 0 : s[0].size();
  Mat r = zeros(t_len, n_channels);
  for (std::size_t t = 0; t < t_len; ++t)
    for (std::size_t e = 0; e < n_channels; ++e) {
      double acc = 0.0;
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t l = 0; l < lags.size(); ++l) {
          const long long src = static_cast<long long>(t) - lags[l];
          if (src < 0 || src >= static_cast<long long>(t_len)) continue;
          acc += w[l][e][i] * s[static_cast<std::size_t>(src)][i];
        }
      r[t][e] = acc;
    }
  return r;
}

/// Two-class Fisher direction S_w^{-1} (mu_b - mu_a).
inline std::vector<double> fisher_direction(const Mat& a, const Mat& b) {
  const std::size_t d = a[0].size();
  auto mean = [d](const Mat& x) {
    std::vector<double> m(d, 0.0);
    for (const auto& row : x)
      for (std::size_t j = 0; j < d; ++j) m[j] += row[j] / static_cast<double>(x.size());
    return m;
  };
  const auto ma = mean(a), mb = mean(b);
  Mat sw = zeros(d, d);
  auto add = [&](const Mat& x, const std::vector<double>& m) {
    for (const auto& row : x)
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) sw[i][j] += (row[i] - m[i]) * (row[j] - m[j]);
  };
  add(a, ma);
  add(b, mb);
  Mat diff = zeros(d, 1);
  for (std::size_t j = 0; j < d; ++j) diff[j][0] = mb[j] - ma[j];
  const Mat w = solve(sw, diff);
  std::vector<double> out(d);
  for (std::size_t j = 0; j < d; ++j) out[j] = w[j][0];
  return out;
}

/// Survival of chi-square with even df = 2k: exp(-x/2) * sum_{j<k} (x/2)^j / j!.
inline double chi2_survival_even_df(double x, int k) {
  double term = 1.0, sum = 1.0;
  for (int j = 1; j < k; ++j) {
    term *= (x / 2.0) / j;
    sum += term;
  }
  return std::exp(-x / 2.0) * sum;
}

/// Two-sided Student-t tail for df = 2: 1 - |t| / sqrt(t^2 + 2).
inline double t_two_sided_df2(double t) { return 1.0 - std::abs(t) / std::sqrt(t * t + 2.0); }

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sx += x[k];
    sy += y[k];
    sxx += x[k] * x[k];
    syy += y[k] * y[k];
    sxy += x[k] * y[k];
  }
  const double cov = sxy - sx * sy / n;
  return cov / std::sqrt((sxx - sx * sx / n) * (syy - sy * sy / n));
}

}  // namespace oracle
