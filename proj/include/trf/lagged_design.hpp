#pragma once

// Time-lagged design matrix. Column i*L + l holds feature i shifted by
// lag_samples[l], so the convolution sum over features and lags becomes one
// matrix product with the flattened kernel.

#include <algorithm>
#include <string>
#include <vector>

#include "trf/preprocess.hpp"

namespace trf {

struct LagSpec {
  double tmin_s = -0.1;
  double tmax_s = 1.0;
  double fs_hz = 0.0;
  std::vector<long long> lag_samples;

  Eigen::Index size() const { return static_cast<Eigen::Index>(lag_samples.size()); }

  std::vector<double> lag_times_s() const {
    std::vector<double> t;
    t.reserve(lag_samples.size());
    for (auto l : lag_samples) t.push_back(static_cast<double>(l) / fs_hz);
    return t;
  }
};

struct DesignMatrix {
  Matrix data;  // samples x (L * D), feature-major columns
  LagSpec lag_spec;
  Eigen::Index n_features = 0;
};

inline LagSpec lag_range_to_samples(double tmin_s, double tmax_s, double fs_hz) {
  require(tmin_s < tmax_s, "lag window requires tmin < tmax (got " + format_number(tmin_s) + ", " +
                               format_number(tmax_s) + ")");
  require(fs_hz > 0.0, "sampling rate must be positive");
  LagSpec spec{tmin_s, tmax_s, fs_hz, {}};
  const auto lo = round_half_up(tmin_s * fs_hz);
  const auto hi = round_half_up(tmax_s * fs_hz);
  for (auto l = lo; l <= hi; ++l) spec.lag_samples.push_back(l);
  return spec;
}

/// Lagged expansion of a samples x features matrix with zero padding at
/// both edges.
inline Matrix lagged_matrix(const Eigen::Ref<const Matrix>& x, const LagSpec& spec) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  const Eigen::Index n_lags = spec.size();
  Matrix out = Matrix::Zero(n, n_lags * d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index l = 0; l < n_lags; ++l) {
      const auto lag = static_cast<Eigen::Index>(spec.lag_samples[l]);
      // out[t] = x[t - lag] for t - lag in [0, n)
      const Eigen::Index first = std::max<Eigen::Index>(0, lag);
      const Eigen::Index last = std::min<Eigen::Index>(n, n + lag);
      if (last > first) out.col(i * n_lags + l).segment(first, last - first) = x.col(i).segment(first - lag, last - first);
    }
  }
  return out;
}

inline DesignMatrix build_lagged_matrix(const FeatureSeries& x, const LagSpec& spec) {
  require(spec.fs_hz == x.fs_hz, "lag spec sampling rate " + format_number(spec.fs_hz) +
                                     " Hz does not match feature series " + format_number(x.fs_hz) + " Hz");
  return DesignMatrix{lagged_matrix(x.data, spec), spec, x.n_features()};
}

}  // namespace trf
