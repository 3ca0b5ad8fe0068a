#include <gtest/gtest.h>

#include <random>

#include "trf/preprocess.hpp"

using namespace trf;

namespace {

EegRecording rec_from(const Matrix& data, double fs = 100.0) {
  EegRecording r;
  r.data = data;
  r.fs_hz = fs;
  for (Eigen::Index c = 0; c < data.rows(); ++c) r.channel_names.push_back("ch" + std::to_string(c));
  r.subject_id = "s";
  return r;
}

WordEventSequence words_at(const std::vector<double>& onsets, Eigen::Index dim, std::uint64_t seed = 1) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  WordEventSequence seq;
  seq.dim = dim;
  for (double t : onsets) seq.events.push_back({"w", t, Vector::NullaryExpr(dim, [&] { return n(rng); }), ""});
  return seq;
}

}  // namespace

TEST(ZscoreChannels, HandValues) {
  Matrix d(1, 3);
  d << 1, 2, 3;
  const auto z = zscore_channels(rec_from(d));
  EXPECT_NEAR(z.data(0, 0), -1.224744871391589, 1e-12);
  EXPECT_NEAR(z.data(0, 1), 0.0, 1e-15);
  EXPECT_NEAR(z.data(0, 2), 1.224744871391589, 1e-12);
  EXPECT_EQ(z.channel_names, rec_from(d).channel_names);
}

TEST(ZscoreChannels, IdempotentAndMoments) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n(3.0, 5.0);
  Matrix d = Matrix::NullaryExpr(4, 500, [&] { return n(rng); });
  const auto once = zscore_channels(rec_from(d));
  const auto twice = zscore_channels(once);
  EXPECT_LE((once.data - twice.data).cwiseAbs().maxCoeff(), 1e-12);
  for (Eigen::Index c = 0; c < 4; ++c) {
    EXPECT_NEAR(once.data.row(c).mean(), 0.0, 1e-12);
    EXPECT_NEAR(once.data.row(c).squaredNorm() / 500.0, 1.0, 1e-12);
  }
}

TEST(ZscoreChannels, ConstantChannelNamed) {
  Matrix d(2, 3);
  d << 1, 2, 3, 5, 5, 5;
  try {
    zscore_channels(rec_from(d));
    FAIL();
  } catch (const DegenerateError& e) {
    EXPECT_NE(std::string(e.what()).find("ch1"), std::string::npos);
  }
}

TEST(ZscoreFeatures, TwoEvents) {
  WordEventSequence seq;
  seq.dim = 1;
  seq.events.push_back({"a", 0.0, Vector::Constant(1, 1.0), "N"});
  seq.events.push_back({"b", 1.0, Vector::Constant(1, 3.0), "V"});
  const auto z = zscore_features(seq);
  EXPECT_DOUBLE_EQ(z.events[0].vector[0], -1.0);
  EXPECT_DOUBLE_EQ(z.events[1].vector[0], 1.0);
  EXPECT_EQ(z.events[1].onset_s, 1.0);
  EXPECT_EQ(z.events[1].pos_tag, "V");
}

TEST(ZscoreFeatures, SingleEventRejected) {
  EXPECT_THROW(zscore_features(words_at({0.1}, 3)), ValidationError);
}

TEST(ZscoreFeatures, Idempotent) {
  const auto once = zscore_features(words_at({0.1, 0.2, 0.4, 0.9, 1.3}, 6));
  const auto twice = zscore_features(once);
  for (std::size_t k = 0; k < once.events.size(); ++k)
    EXPECT_LE((once.events[k].vector - twice.events[k].vector).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ZscoreFeatures, ConstantDimensionNamed) {
  auto seq = words_at({0.1, 0.2, 0.3}, 3);
  for (auto& ev : seq.events) ev.vector[2] = 4.0;
  try {
    zscore_features(seq);
    FAIL();
  } catch (const DegenerateError& e) {
    EXPECT_NE(std::string(e.what()).find("dimension 2"), std::string::npos);
  }
}

TEST(ImpulseAlign, GridPointAndRounding) {
  auto a = impulse_align(words_at({0.5}, 2), 100.0, 200);
  for (Eigen::Index t = 0; t < 200; ++t) EXPECT_EQ(a.data.row(t).isZero(), t != 50) << t;
  auto b = impulse_align(words_at({0.505}, 2), 100.0, 200);
  for (Eigen::Index t = 0; t < 200; ++t) EXPECT_EQ(b.data.row(t).isZero(), t != 51) << t;
}

TEST(ImpulseAlign, CoincidentWordsSum) {
  auto seq = words_at({0.30, 0.301}, 3);
  const auto a = impulse_align(seq, 100.0, 100);
  EXPECT_LE((a.data.row(30).transpose() - (seq.events[0].vector + seq.events[1].vector)).cwiseAbs().maxCoeff(), 0.0);
}

TEST(ImpulseAlign, ConservesColumnSums) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 9.99);
  std::vector<double> onsets(60);
  for (auto& t : onsets) t = u(rng);
  std::sort(onsets.begin(), onsets.end());
  const auto seq = words_at(onsets, 4, 9);
  const auto a = impulse_align(seq, 100.0, 1000);
  Vector expected = Vector::Zero(4);
  for (const auto& ev : seq.events) expected += ev.vector;
  EXPECT_LE((a.data.colwise().sum().transpose() - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ImpulseAlign, OutOfRangeListsEvents) {
  try {
    impulse_align(words_at({0.1, 5.0}, 1), 100.0, 100);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("1 ("), std::string::npos);
  }
}

TEST(Segment, DefaultWindowing) {
  const Eigen::Index n = 1000;  // 10 s at 100 Hz
  FeatureSeries x{Matrix::Random(n, 3), 100.0};
  const auto y = rec_from(Matrix::Random(2, n));
  const auto set = segment(x, y, 2.0, 0.1);
  EXPECT_EQ(set.window_samples, 200);
  EXPECT_EQ(set.hop_samples, 180);
  ASSERT_EQ(set.size(), 5u);
  const std::vector<Eigen::Index> starts = {0, 180, 360, 540, 720};
  for (std::size_t k = 0; k < 5; ++k) {
    EXPECT_EQ(set.segments[k].start, starts[k]);
    EXPECT_EQ(set.segments[k].index, k);
    EXPECT_TRUE(set.segments[k].x.isApprox(x.data.middleRows(starts[k], 200)));
    EXPECT_TRUE(set.segments[k].y.isApprox(y.data.middleCols(starts[k], 200).transpose()));
  }
}

TEST(Segment, NoOverlapTiles) {
  FeatureSeries x{Matrix::Random(1000, 1), 100.0};
  const auto set = segment(x, rec_from(Matrix::Random(1, 1000)), 2.0, 0.0);
  EXPECT_EQ(set.hop_samples, set.window_samples);
  EXPECT_EQ(set.size(), 5u);
}

TEST(Segment, ExactlyOneWindow) {
  FeatureSeries x{Matrix::Random(200, 1), 100.0};
  EXPECT_EQ(segment(x, rec_from(Matrix::Random(1, 200)), 2.0, 0.1).size(), 1u);
}

TEST(Segment, WindowTooLong) {
  FeatureSeries x{Matrix::Random(150, 1), 100.0};
  EXPECT_THROW(segment(x, rec_from(Matrix::Random(1, 150)), 2.0, 0.1), ValidationError);
}

TEST(Segment, CountAndCoverageProperty) {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> len(200, 4000);
  for (double fs : {50.0, 100.0, 128.0, 250.0}) {
    for (int trial = 0; trial < 5; ++trial) {
      const Eigen::Index n = len(rng);
      const Eigen::Index w = window_samples_for(2.0, fs);
      if (n < w) continue;
      FeatureSeries x{Matrix::Zero(n, 1), fs};
      const auto set = segment(x, rec_from(Matrix::Zero(1, n), fs), 2.0, 0.1);
      EXPECT_EQ(static_cast<Eigen::Index>(set.size()), 1 + (n - set.window_samples) / set.hop_samples);
      for (std::size_t k = 0; k < set.size(); ++k) {
        EXPECT_LE(set.segments[k].start + set.window_samples, n);
        if (k > 0)
          EXPECT_EQ(set.segments[k - 1].start + set.window_samples - set.segments[k].start,
                    set.window_samples - set.hop_samples);
      }
    }
  }
}
