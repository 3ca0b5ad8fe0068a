#pragma once

// Standardization, impulse alignment of word vectors onto the EEG sample
// grid, and segmentation into overlapping windows.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "trf/tensorio.hpp"

namespace trf {

struct FeatureSeries {
  Matrix data;  // samples x features
  double fs_hz = 0.0;

  Eigen::Index n_samples() const { return data.rows(); }
  Eigen::Index n_features() const { return data.cols(); }
};

struct Segment {
  std::size_t index = 0;        // position in temporal order
  Eigen::Index start = 0;       // first sample in the source recording
  Matrix x;                     // window_samples x features
  Matrix y;                     // window_samples x channels
};

struct SegmentSet {
  std::vector<Segment> segments;
  Eigen::Index window_samples = 0;
  Eigen::Index hop_samples = 0;
  double fs_hz = 0.0;

  std::size_t size() const { return segments.size(); }
  Eigen::Index n_features() const { return segments.empty() ? 0 : segments.front().x.cols(); }
  Eigen::Index n_channels() const { return segments.empty() ? 0 : segments.front().y.cols(); }
};

/// floor(x + 0.5); the onset-to-sample rounding rule.
inline long long round_half_up(double x) { return static_cast<long long>(std::floor(x + 0.5)); }

namespace detail {

// Standardizes one series in place with the population standard deviation.
// Returns false when the series is constant.
template <class Derived>
bool standardize(Eigen::MatrixBase<Derived>&& v) {
  const auto n = static_cast<double>(v.size());
  const double mean = v.sum() / n;
  const double var = (v.array() - mean).square().sum() / n;
  if (!(var > 0.0) || !std::isfinite(var)) return false;
  const double sd = std::sqrt(var);
  v = (v.array() - mean) / sd;
  return true;
}

}  // namespace detail

inline EegRecording zscore_channels(EegRecording rec) {
  require(rec.n_samples() >= 2, "z-scoring needs at least 2 samples per channel");
  for (Eigen::Index c = 0; c < rec.n_channels(); ++c) {
    if (!detail::standardize(rec.data.row(c)))
      throw DegenerateError("channel '" + rec.channel_names[c] + "' has zero variance");
  }
  return rec;
}

inline WordEventSequence zscore_features(WordEventSequence seq) {
  const auto n = static_cast<Eigen::Index>(seq.events.size());
  require(n >= 2, "z-scoring word features needs at least 2 events, got " + std::to_string(n));
  Matrix m(n, seq.dim);
  for (Eigen::Index k = 0; k < n; ++k) m.row(k) = seq.events[k].vector.transpose();
  for (Eigen::Index d = 0; d < seq.dim; ++d) {
    if (!detail::standardize(m.col(d)))
      throw DegenerateError("word feature dimension " + std::to_string(d) + " is constant across events");
  }
  for (Eigen::Index k = 0; k < n; ++k) seq.events[k].vector = m.row(k).transpose();
  return seq;
}

/// Places each word vector at sample floor(onset * fs + 0.5); coincident
/// words are summed.
inline FeatureSeries impulse_align(const WordEventSequence& seq, double fs_hz, Eigen::Index n_samples) {
  require(fs_hz > 0.0, "sampling rate must be positive");
  require(n_samples >= 0, "sample count must be nonnegative");
  FeatureSeries out{Matrix::Zero(n_samples, seq.dim), fs_hz};
  std::string offending;
  std::size_t n_bad = 0;
  for (std::size_t k = 0; k < seq.events.size(); ++k) {
    const auto& ev = seq.events[k];
    require(ev.vector.size() == seq.dim, "word event " + std::to_string(k) + " has the wrong dimension");
    const auto t = round_half_up(ev.onset_s * fs_hz);
    if (t < 0 || t >= n_samples) {
      if (n_bad++ < 10)
        offending += (offending.empty() ? "" : ", ") + std::to_string(k) + " ('" + ev.token + "' at " +
                     format_number(ev.onset_s) + " s)";
      continue;
    }
    out.data.row(t) += ev.vector.transpose();
  }
  if (n_bad > 0)
    throw ValidationError(std::to_string(n_bad) + " word onset(s) fall outside the " + std::to_string(n_samples) +
                          "-sample recording: " + offending + (n_bad > 10 ? ", ..." : ""));
  return out;
}

inline Eigen::Index window_samples_for(double window_s, double fs_hz) {
  return static_cast<Eigen::Index>(round_half_up(window_s * fs_hz));
}

inline Eigen::Index hop_samples_for(Eigen::Index window_samples, double overlap_frac) {
  return static_cast<Eigen::Index>(round_half_up(static_cast<double>(window_samples) * (1.0 - overlap_frac)));
}

/// Cuts x (samples x features) and y (channels x samples) into windows
/// starting at 0, hop, 2*hop, ...; a trailing partial window is dropped.
inline SegmentSet segment(const FeatureSeries& x, const EegRecording& y, double window_s, double overlap_frac) {
  require(x.fs_hz == y.fs_hz, "feature series and EEG sampling rates differ (" + format_number(x.fs_hz) +
                                  " vs " + format_number(y.fs_hz) + " Hz)");
  require(x.n_samples() == y.n_samples(), "feature series has " + std::to_string(x.n_samples()) +
                                              " samples but EEG has " + std::to_string(y.n_samples()));
  require(overlap_frac >= 0.0 && overlap_frac < 1.0, "overlap fraction must lie in [0, 1)");
  require(window_s > 0.0, "window length must be positive");

  SegmentSet set;
  set.fs_hz = x.fs_hz;
  set.window_samples = window_samples_for(window_s, x.fs_hz);
  set.hop_samples = hop_samples_for(set.window_samples, overlap_frac);
  require(set.window_samples >= 1, "window is shorter than one sample");
  require(set.hop_samples >= 1, "overlap leaves a hop of zero samples");
  require(set.window_samples <= x.n_samples(),
          "window of " + std::to_string(set.window_samples) + " samples is longer than the recording (" +
              std::to_string(x.n_samples()) + " samples)");

  const Eigen::Index w = set.window_samples;
  for (Eigen::Index start = 0; start + w <= x.n_samples(); start += set.hop_samples) {
    Segment s;
    s.index = set.segments.size();
    s.start = start;
    s.x = x.data.middleRows(start, w);
    s.y = y.data.middleCols(start, w).transpose();
    set.segments.push_back(std::move(s));
  }
  return set;
}

/// Subset of segments [first, last) keeping their original indices.
inline SegmentSet slice(const SegmentSet& set, std::size_t first, std::size_t last) {
  require(first <= last && last <= set.size(), "segment slice out of range");
  SegmentSet out;
  out.window_samples = set.window_samples;
  out.hop_samples = set.hop_samples;
  out.fs_hz = set.fs_hz;
  out.segments.assign(set.segments.begin() + static_cast<std::ptrdiff_t>(first),
                      set.segments.begin() + static_cast<std::ptrdiff_t>(last));
  return out;
}

}  // namespace trf
