#pragma once

// Synthetic stimulus/response pairs from a known kernel. Responses are
// computed by direct evaluation of the lagged double sum, independently of
// the design-matrix code path.

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "trf/trf_model.hpp"

namespace trf {

struct SynthSpec {
  double fs_hz = 100.0;
  double duration_s = 300.0;
  Eigen::Index n_channels = 4;
  Eigen::Index n_features = 8;
  double tmin_s = -0.1;
  double tmax_s = 1.0;
  double word_rate_hz = 2.0;
  double snr = 5.0;  // signal std / noise std per channel; +inf for no noise
  std::uint64_t seed = 0;
  int n_pos_tags = 0;  // 0 leaves words untagged
  std::string subject_id = "synth";
};

struct SynthDataset {
  EegRecording eeg;
  WordEventSequence words;
  Matrix clean;  // samples x channels, noise-free response
  Matrix noise;  // samples x channels
};

inline void validate(const SynthSpec& s) {
  require(s.fs_hz > 0.0 && std::isfinite(s.fs_hz), "synth: fs_hz must be positive");
  require(s.duration_s > 0.0 && std::isfinite(s.duration_s), "synth: duration_s must be positive");
  require(s.n_channels >= 1, "synth: n_channels must be positive");
  require(s.n_features >= 1, "synth: n_features must be positive");
  require(s.word_rate_hz > 0.0 && std::isfinite(s.word_rate_hz), "synth: word_rate_hz must be positive");
  require(s.snr > 0.0, "synth: snr must be positive");
  require(s.tmin_s < s.tmax_s, "synth: lag window requires tmin < tmax");
  require(s.n_pos_tags >= 0, "synth: n_pos_tags must be nonnegative");
  require(s.duration_s * s.word_rate_hz >= 10.0,
          "synth: duration " + format_number(s.duration_s) + " s at " + format_number(s.word_rate_hz) +
              " words/s accommodates fewer than 10 words");
}

inline std::vector<std::string> synth_channel_names(Eigen::Index n) {
  std::vector<std::string> names;
  for (Eigen::Index e = 0; e < n; ++e) names.push_back("E" + std::to_string(e + 1));
  return names;
}

inline std::vector<std::string> synth_pos_tags(int n) {
  static const std::vector<std::string> base = {"NOUN", "VERB", "ADJ", "ADV", "PRON", "DET", "ADP", "CONJ", "PRT"};
  std::vector<std::string> tags;
  for (int k = 0; k < n; ++k)
    tags.push_back(k < static_cast<int>(base.size()) ? base[static_cast<std::size_t>(k)] : "X" + std::to_string(k));
  return tags;
}

/// Electrodes evenly spaced on a unit circle.
inline ChannelLayout synth_layout(Eigen::Index n_channels) {
  ChannelLayout layout;
  const auto names = synth_channel_names(n_channels);
  const double pi = std::acos(-1.0);
  for (Eigen::Index e = 0; e < n_channels; ++e) {
    const double a = 2.0 * pi * static_cast<double>(e) / static_cast<double>(n_channels);
    layout.entries.push_back({names[e], std::cos(a), std::sin(a)});
  }
  return layout;
}

/// Sum of 2-3 Gaussian bumps per (channel, feature) pair, scaled into [-1, 1].
inline TrfModel gen_kernel(const SynthSpec& spec) {
  validate(spec);
  TrfModel m;
  m.lag_spec = lag_range_to_samples(spec.tmin_s, spec.tmax_s, spec.fs_hz);
  m.channel_names = synth_channel_names(spec.n_channels);
  m.n_features = spec.n_features;
  m.kernel.assign(static_cast<std::size_t>(m.n_lags() * spec.n_channels * spec.n_features), 0.0);

  std::mt19937_64 rng(spec.seed ^ 0x6b65726e656cULL);
  std::uniform_int_distribution<int> n_bumps(2, 3);
  std::uniform_real_distribution<double> center(spec.tmin_s, spec.tmax_s);
  std::uniform_real_distribution<double> width(0.03, 0.15);
  std::uniform_real_distribution<double> amp(-1.0, 1.0);
  const auto times = m.lag_spec.lag_times_s();
  for (Eigen::Index e = 0; e < spec.n_channels; ++e) {
    for (Eigen::Index i = 0; i < spec.n_features; ++i) {
      std::vector<double> k(times.size(), 0.0);
      const int nb = n_bumps(rng);
      for (int b = 0; b < nb; ++b) {
        const double c = center(rng);
        const double w = width(rng);
        const double a = amp(rng);
        for (std::size_t l = 0; l < times.size(); ++l)
          k[l] += a * std::exp(-(times[l] - c) * (times[l] - c) / (2.0 * w * w));
      }
      double peak = 0.0;
      for (double v : k) peak = std::max(peak, std::abs(v));
      const double scale = peak > 1.0 ? 1.0 / peak : 1.0;
      for (std::size_t l = 0; l < times.size(); ++l) m.at(static_cast<Eigen::Index>(l), e, i) = k[l] * scale;
    }
  }
  return m;
}

inline SynthDataset gen_dataset(const TrfModel& kernel, const SynthSpec& spec) {
  validate(spec);
  const auto expected = lag_range_to_samples(spec.tmin_s, spec.tmax_s, spec.fs_hz);
  require(kernel.lag_spec.lag_samples == expected.lag_samples && kernel.lag_spec.fs_hz == spec.fs_hz,
          "synth: kernel lag window does not match the spec");
  require(kernel.n_channels() == spec.n_channels && kernel.n_features == spec.n_features,
          "synth: kernel shape does not match the spec");

  const auto n_samples = static_cast<Eigen::Index>(std::floor(spec.duration_s * spec.fs_hz + 0.5));
  const Eigen::Index d = spec.n_features;
  const Eigen::Index e_count = spec.n_channels;
  std::mt19937_64 rng(spec.seed);
  std::exponential_distribution<double> gap(spec.word_rate_hz);
  std::normal_distribution<double> normal(0.0, 1.0);

  SynthDataset out;
  out.words.dim = d;
  const auto tags = synth_pos_tags(spec.n_pos_tags);
  Matrix tag_means = Matrix::Zero(spec.n_pos_tags, d);
  for (Eigen::Index c = 0; c < tag_means.rows(); ++c)
    for (Eigen::Index i = 0; i < d; ++i) tag_means(c, i) = 1.5 * normal(rng);
  std::uniform_int_distribution<int> pick_tag(0, std::max(0, spec.n_pos_tags - 1));

  // stimulus grid built here rather than through the alignment code under test
  Matrix stim = Matrix::Zero(n_samples, d);
  double t = 0.0;
  while (true) {
    t += gap(rng);
    const auto sample = static_cast<Eigen::Index>(std::floor(t * spec.fs_hz + 0.5));
    if (sample >= n_samples) break;
    WordEvent ev;
    ev.token = "w" + std::to_string(out.words.events.size());
    ev.onset_s = t;
    ev.vector.resize(d);
    for (Eigen::Index i = 0; i < d; ++i) ev.vector[i] = normal(rng);
    if (spec.n_pos_tags > 0) {
      const int c = pick_tag(rng);
      ev.pos_tag = tags[static_cast<std::size_t>(c)];
      ev.vector += tag_means.row(c).transpose();
    }
    for (Eigen::Index i = 0; i < d; ++i) stim(sample, i) += ev.vector[i];
    out.words.events.push_back(std::move(ev));
  }

  // r[t, e] = sum_i sum_l w[l, e, i] * s[t - lag_l, i]
  const auto& lags = kernel.lag_spec.lag_samples;
  out.clean = Matrix::Zero(n_samples, e_count);
  for (Eigen::Index tt = 0; tt < n_samples; ++tt) {
    for (std::size_t l = 0; l < lags.size(); ++l) {
      const auto src = tt - static_cast<Eigen::Index>(lags[l]);
      if (src < 0 || src >= n_samples) continue;
      for (Eigen::Index i = 0; i < d; ++i) {
        const double s = stim(src, i);
        if (s == 0.0) continue;
        for (Eigen::Index e = 0; e < e_count; ++e)
          out.clean(tt, e) += kernel.at(static_cast<Eigen::Index>(l), e, i) * s;
      }
    }
  }

  out.noise = Matrix::Zero(n_samples, e_count);
  for (Eigen::Index e = 0; e < e_count; ++e) {
    const auto col = out.clean.col(e);
    const double mean = n_samples > 0 ? col.mean() : 0.0;
    const double sd = n_samples > 0 ? std::sqrt((col.array() - mean).square().mean()) : 0.0;
    // a silent channel still gets unit noise so the recording stays usable
    const double noise_sd = std::isinf(spec.snr) ? 0.0 : (sd > 0.0 ? sd / spec.snr : 1.0);
    for (Eigen::Index tt = 0; tt < n_samples; ++tt) out.noise(tt, e) = noise_sd * normal(rng);
  }

  out.eeg.data = (out.clean + out.noise).transpose();
  out.eeg.fs_hz = spec.fs_hz;
  out.eeg.channel_names = kernel.channel_names;
  out.eeg.subject_id = spec.subject_id;
  return out;
}

}  // namespace trf
