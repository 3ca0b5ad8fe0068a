#pragma once

// Correlation scoring, p-values, Fisher aggregation across subjects, and
// report/topography export.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "trf/trf_model.hpp"

namespace trf {

inline double pearson_r(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& y) {
  require(x.size() == y.size(), "pearson_r: series lengths differ (" + std::to_string(x.size()) + " vs " +
                                    std::to_string(y.size()) + ")");
  require(x.size() >= 3, "pearson_r: need at least 3 samples");
  const double mx = x.mean();
  const double my = y.mean();
  const auto dx = (x.array() - mx);
  const auto dy = (y.array() - my);
  const double sxx = dx.square().sum();
  const double syy = dy.square().sum();
  if (!(sxx > 0.0) || !(syy > 0.0)) throw DegenerateError("pearson_r: constant series");
  const double r = (dx * dy).sum() / std::sqrt(sxx * syy);
  return std::clamp(r, -1.0, 1.0);
}

inline double pearson_r(std::span<const double> x, std::span<const double> y) {
  return pearson_r(Eigen::Map<const Vector>(x.data(), static_cast<Eigen::Index>(x.size())),
                   Eigen::Map<const Vector>(y.data(), static_cast<Eigen::Index>(y.size())));
}

/// Two-sided p-value of r under the i.i.d. bivariate-normal null, through
/// t = r sqrt((n-2)/(1-r^2)) with n-2 degrees of freedom.
inline double r_to_p(double r, long long n) {
  require(n >= 3, "r_to_p: need n >= 3, got " + std::to_string(n));
  require(std::isfinite(r) && std::abs(r) <= 1.0, "r_to_p: |r| must not exceed 1");
  constexpr double tiny = std::numeric_limits<double>::denorm_min();
  const double r2 = r * r;
  if (r2 >= 1.0) return tiny;
  // P(|T| >= |t|) = I_{df/(df+t^2)}(df/2, 1/2) and df/(df+t^2) = 1 - r^2
  const double df = static_cast<double>(n - 2);
  const double p = boost::math::ibeta(df / 2.0, 0.5, 1.0 - r2);
  return std::clamp(p, tiny, 1.0);
}

struct FisherResult {
  double statistic = 0.0;
  long long df = 0;
  double p = 1.0;
};

inline FisherResult fisher_combine(std::span<const double> pvals) {
  require(!pvals.empty(), "fisher_combine: no p-values");
  double stat = 0.0;
  for (double p : pvals) {
    require(p > 0.0 && p <= 1.0, "fisher_combine: p-value " + format_number(p) + " outside (0, 1]");
    stat += -2.0 * std::log(p);
  }
  const auto k = static_cast<long long>(pvals.size());
  // chi-square(2k) survival at X is Q(k, X/2)
  const double p = stat == 0.0 ? 1.0 : boost::math::gamma_q(static_cast<double>(k), stat / 2.0);
  return {stat, 2 * k, std::clamp(p, std::numeric_limits<double>::denorm_min(), 1.0)};
}

inline FisherResult fisher_combine(std::initializer_list<double> pvals) {
  return fisher_combine(std::span<const double>(pvals.begin(), pvals.size()));
}

// ---------------------------------------------------------------------------
// per-subject evaluation

struct ChannelScore {
  std::string channel;
  double r = 0.0;
  double p = 1.0;
};

struct EvaluationReport {
  std::string subject_id;
  std::vector<ChannelScore> per_channel_r;
  double mean_r = 0.0;
  double p = 1.0;               // r_to_p(mean_r, n_samples), the per-subject value fed to Fisher
  long long n_samples = 0;
};

struct GroupReport {
  std::vector<EvaluationReport> subjects;
  double pooled_r = 0.0;
  FisherResult fisher;
};

/// Predictions for each segment, concatenated in segment order.
inline Matrix predict_segments(const TrfModel& trf, const SegmentSet& segments) {
  const Matrix w = flatten(trf);
  Matrix out(static_cast<Eigen::Index>(segments.size()) * segments.window_samples, trf.n_channels());
  Eigen::Index row = 0;
  for (const auto& s : segments.segments) {
    out.middleRows(row, s.x.rows()) = predict(w, lagged_matrix(s.x, trf.lag_spec));
    row += s.x.rows();
  }
  return out;
}

inline Matrix concat_targets(const SegmentSet& segments) {
  Matrix out(static_cast<Eigen::Index>(segments.size()) * segments.window_samples, segments.n_channels());
  Eigen::Index row = 0;
  for (const auto& s : segments.segments) {
    out.middleRows(row, s.y.rows()) = s.y;
    row += s.y.rows();
  }
  return out;
}

inline EvaluationReport score_predictions(const Matrix& predicted, const Matrix& target,
                                          const std::vector<std::string>& channel_names, std::string subject_id) {
  require(predicted.rows() == target.rows() && predicted.cols() == target.cols(),
          "prediction and target shapes differ");
  require(static_cast<std::size_t>(target.cols()) == channel_names.size(), "channel name count mismatch");
  EvaluationReport rep;
  rep.subject_id = std::move(subject_id);
  rep.n_samples = target.rows();
  double sum = 0.0;
  for (Eigen::Index e = 0; e < target.cols(); ++e) {
    const double r = pearson_r(predicted.col(e), target.col(e));
    rep.per_channel_r.push_back({channel_names[e], r, r_to_p(r, rep.n_samples)});
    sum += r;
  }
  rep.mean_r = target.cols() > 0 ? sum / static_cast<double>(target.cols()) : 0.0;
  rep.p = r_to_p(rep.mean_r, rep.n_samples);
  return rep;
}

/// Scores a TRF on held-out segments. When train_ids is given, every test
/// segment index must be absent from it.
inline EvaluationReport evaluate_subject(const TrfModel& trf, const SegmentSet& test_segments, const LagSpec& spec,
                                         std::string subject_id = {},
                                         std::span<const std::size_t> train_ids = {}) {
  require(!test_segments.segments.empty(), "evaluate_subject: empty test set");
  require(spec.lag_samples == trf.lag_spec.lag_samples && spec.fs_hz == trf.lag_spec.fs_hz,
          "evaluate_subject: lag spec does not match the TRF");
  require(test_segments.fs_hz == spec.fs_hz, "evaluate_subject: segment sampling rate does not match lag spec");
  require(test_segments.n_features() == trf.n_features,
          "evaluate_subject: segments carry " + std::to_string(test_segments.n_features()) +
              " features, TRF expects " + std::to_string(trf.n_features));
  require(test_segments.n_channels() == trf.n_channels(),
          "evaluate_subject: segments carry " + std::to_string(test_segments.n_channels()) +
              " channels, TRF has " + std::to_string(trf.n_channels()));
  for (const auto& s : test_segments.segments)
    for (auto id : train_ids)
      require(s.index != id, "evaluate_subject: test segment " + std::to_string(id) + " was used for training");
  return score_predictions(predict_segments(trf, test_segments), concat_targets(test_segments), trf.channel_names,
                           std::move(subject_id));
}

/// Fisher-z average of per-subject mean_r, Fisher's method over per-subject p.
inline GroupReport group_report(std::vector<EvaluationReport> subjects) {
  require(!subjects.empty(), "group report needs at least one subject");
  GroupReport g;
  std::vector<double> pvals;
  double zsum = 0.0;
  const double rmax = std::nextafter(1.0, 0.0);
  for (const auto& s : subjects) {
    pvals.push_back(s.p);
    zsum += std::atanh(std::clamp(s.mean_r, -rmax, rmax));
  }
  g.pooled_r = std::tanh(zsum / static_cast<double>(subjects.size()));
  g.fisher = fisher_combine(pvals);
  g.subjects = std::move(subjects);
  return g;
}

// ---------------------------------------------------------------------------
// topography

struct TopoRow {
  std::string channel;
  double x = 0.0;
  double y = 0.0;
  double r = 0.0;
  double p = 1.0;
};

/// Rows follow layout order.
inline std::vector<TopoRow> topo_report(const EvaluationReport& report, const ChannelLayout& layout) {
  std::map<std::string, const ChannelScore*> by_name;
  for (const auto& c : report.per_channel_r) by_name[c.channel] = &c;
  std::map<std::string, const LayoutEntry*> in_layout;
  for (const auto& e : layout.entries) in_layout[e.name] = &e;
  for (const auto& c : report.per_channel_r)
    if (!in_layout.count(c.channel)) throw ValidationError("channel '" + c.channel + "' is missing from the layout");
  std::vector<TopoRow> rows;
  for (const auto& e : layout.entries) {
    auto it = by_name.find(e.name);
    if (it == by_name.end()) continue;
    rows.push_back({e.name, e.x, e.y, it->second->r, it->second->p});
  }
  return rows;
}

inline std::string format_topo_csv(const std::vector<TopoRow>& rows) {
  std::string out = "channel,x,y,r,p\n";
  for (const auto& r : rows)
    out += r.channel + "," + format_number(r.x) + "," + format_number(r.y) + "," + format_number(r.r) + "," +
           format_number(r.p) + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::ordered_json to_json(const EvaluationReport& rep) {
  nlohmann::ordered_json j;
  j["subject_id"] = rep.subject_id;
  j["mean_r"] = rep.mean_r;
  j["channels"] = nlohmann::ordered_json::array();
  for (const auto& c : rep.per_channel_r) {
    nlohmann::ordered_json cj;
    cj["name"] = c.channel;
    cj["r"] = c.r;
    cj["p"] = c.p;
    j["channels"].push_back(std::move(cj));
  }
  j["p"] = rep.p;
  j["n_samples"] = rep.n_samples;
  return j;
}

inline EvaluationReport evaluation_from_json(const Json& j) {
  try {
    EvaluationReport rep;
    rep.subject_id = j.at("subject_id").get<std::string>();
    rep.mean_r = j.at("mean_r").get<double>();
    for (const auto& c : j.at("channels")) rep.per_channel_r.push_back({c.at("name"), c.at("r"), c.at("p")});
    rep.n_samples = j.value("n_samples", 0LL);
    rep.p = j.contains("p") ? j["p"].get<double>() : r_to_p(rep.mean_r, std::max(rep.n_samples, 3LL));
    return rep;
  } catch (const Json::exception& e) {
    throw FormatError(std::string("malformed evaluation report: ") + e.what());
  }
}

inline nlohmann::ordered_json to_json(const GroupReport& g) {
  nlohmann::ordered_json j;
  j["subjects"] = nlohmann::ordered_json::array();
  for (const auto& s : g.subjects) j["subjects"].push_back(to_json(s));
  j["pooled_r"] = g.pooled_r;
  j["fisher"]["statistic"] = g.fisher.statistic;
  j["fisher"]["df"] = g.fisher.df;
  j["fisher"]["p"] = g.fisher.p;
  return j;
}

}  // namespace trf
