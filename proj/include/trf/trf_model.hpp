#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "trf/lagged_design.hpp"

namespace trf {

inline constexpr const char* kTrfUnits = "arbitrary (z-scored response per z-scored feature)";

/// Kernel indexed [lag, channel, feature].
struct TrfModel {
  std::vector<double> kernel;  // row-major L x E x D
  LagSpec lag_spec;
  std::vector<std::string> channel_names;
  Eigen::Index n_features = 0;
  double lambda = 0.0;
  std::string units = kTrfUnits;

  Eigen::Index n_lags() const { return lag_spec.size(); }
  Eigen::Index n_channels() const { return static_cast<Eigen::Index>(channel_names.size()); }

  double& at(Eigen::Index lag, Eigen::Index channel, Eigen::Index feature) {
    return kernel[static_cast<std::size_t>((lag * n_channels() + channel) * n_features + feature)];
  }
  double at(Eigen::Index lag, Eigen::Index channel, Eigen::Index feature) const {
    return kernel[static_cast<std::size_t>((lag * n_channels() + channel) * n_features + feature)];
  }
};

/// kernel[l, e, i] = W[i*L + l, e]
inline TrfModel reshape_trf(const Matrix& w, const LagSpec& spec, std::vector<std::string> channel_names,
                            Eigen::Index n_features, double lambda = 0.0) {
  const Eigen::Index n_lags = spec.size();
  require(n_features >= 0 && w.rows() == n_lags * n_features,
          "weight matrix has " + std::to_string(w.rows()) + " rows, expected L*D = " +
              std::to_string(n_lags * n_features));
  require(w.cols() == static_cast<Eigen::Index>(channel_names.size()),
          "weight matrix has " + std::to_string(w.cols()) + " columns but " +
              std::to_string(channel_names.size()) + " channel names were given");
  TrfModel m;
  m.lag_spec = spec;
  m.channel_names = std::move(channel_names);
  m.n_features = n_features;
  m.lambda = lambda;
  m.kernel.assign(static_cast<std::size_t>(n_lags * w.cols() * n_features), 0.0);
  for (Eigen::Index l = 0; l < n_lags; ++l)
    for (Eigen::Index e = 0; e < w.cols(); ++e)
      for (Eigen::Index i = 0; i < n_features; ++i) m.at(l, e, i) = w(i * n_lags + l, e);
  return m;
}

/// Inverse of reshape_trf.
inline Matrix flatten(const TrfModel& m) {
  const Eigen::Index n_lags = m.n_lags();
  Matrix w(n_lags * m.n_features, m.n_channels());
  for (Eigen::Index l = 0; l < n_lags; ++l)
    for (Eigen::Index e = 0; e < m.n_channels(); ++e)
      for (Eigen::Index i = 0; i < m.n_features; ++i) w(i * n_lags + l, e) = m.at(l, e, i);
  return w;
}

inline Matrix predict(const Matrix& w, const Matrix& x) {
  require(x.cols() == w.rows(), "design matrix has " + std::to_string(x.cols()) + " columns but weights have " +
                                    std::to_string(w.rows()) + " rows");
  return x * w;
}

inline Matrix predict(const Matrix& w, const DesignMatrix& x) { return predict(w, x.data); }

inline TensorFile trf_to_tensor(const TrfModel& m) {
  TensorFile t;
  t.dtype = DType::f64;
  t.shape = {static_cast<std::size_t>(m.n_lags()), m.channel_names.size(), static_cast<std::size_t>(m.n_features)};
  t.meta = {{"lag_times_s", m.lag_spec.lag_times_s()},
            {"lag_samples", m.lag_spec.lag_samples},
            {"fs_hz", m.lag_spec.fs_hz},
            {"tmin_s", m.lag_spec.tmin_s},
            {"tmax_s", m.lag_spec.tmax_s},
            {"channel_names", m.channel_names},
            {"lambda", m.lambda},
            {"units", m.units}};
  t.values = m.kernel;
  return t;
}

inline TrfModel trf_from_tensor(const TensorFile& t, const std::string& origin = "<memory>") {
  if (t.shape.size() != 3)
    throw ValidationError(origin + ": TRF tensor must have shape [lags, channels, features]");
  TrfModel m;
  const auto& times_j = detail::require_meta(t.meta, "lag_times_s", origin);
  if (!times_j.is_array()) throw ValidationError(origin + ": meta 'lag_times_s' must be an array");
  std::vector<double> times;
  for (const auto& v : times_j) {
    if (!v.is_number()) throw ValidationError(origin + ": meta 'lag_times_s' must hold numbers");
    times.push_back(v.get<double>());
  }
  m.channel_names = detail::string_list(detail::require_meta(t.meta, "channel_names", origin), "channel_names", origin);
  detail::require_unique(m.channel_names, "channel name");
  const auto& lam = detail::require_meta(t.meta, "lambda", origin);
  if (!lam.is_number()) throw ValidationError(origin + ": meta 'lambda' must be a number");
  m.lambda = lam.get<double>();
  if (t.meta.contains("units") && t.meta["units"].is_string()) m.units = t.meta["units"].get<std::string>();

  if (times.size() != t.shape[0] || m.channel_names.size() != t.shape[1])
    throw ValidationError(origin + ": TRF meta does not match shape");

  // sampling rate: explicit, else from lag spacing
  double fs = 0.0;
  if (t.meta.contains("fs_hz") && t.meta["fs_hz"].is_number()) {
    fs = t.meta["fs_hz"].get<double>();
  } else if (times.size() >= 2 && times[1] > times[0]) {
    fs = 1.0 / (times[1] - times[0]);
  }
  if (!(fs > 0.0)) throw ValidationError(origin + ": cannot determine the TRF sampling rate");
  m.lag_spec.fs_hz = fs;
  for (double tl : times) m.lag_spec.lag_samples.push_back(round_half_up(tl * fs));
  for (std::size_t k = 1; k < m.lag_spec.lag_samples.size(); ++k)
    if (m.lag_spec.lag_samples[k] != m.lag_spec.lag_samples[k - 1] + 1)
      throw ValidationError(origin + ": lag_times_s are not contiguous at sampling rate " + format_number(fs));
  m.lag_spec.tmin_s = t.meta.contains("tmin_s") ? t.meta["tmin_s"].get<double>() : (times.empty() ? 0.0 : times.front());
  m.lag_spec.tmax_s = t.meta.contains("tmax_s") ? t.meta["tmax_s"].get<double>() : (times.empty() ? 0.0 : times.back());
  m.n_features = static_cast<Eigen::Index>(t.shape[2]);
  m.kernel = t.values;
  return m;
}

inline void write_trf(const std::filesystem::path& path, const TrfModel& m) {
  write_file_bytes(path, encode_btsr(trf_to_tensor(m)));
}

inline TrfModel read_trf(const std::filesystem::path& path) {
  return trf_from_tensor(read_tensor(path), path.string());
}

}  // namespace trf
