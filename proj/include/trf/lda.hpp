#pragma once

// Fisher linear discriminant analysis for isolating class (part-of-speech)
// structure in word representations.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "trf/tensorio.hpp"

namespace trf {

inline constexpr double kLdaShrinkage = 1e-6;

struct LdaModel {
  Matrix projection;                     // D x C, unit-norm columns
  std::vector<std::string> class_labels; // sorted
  Matrix class_means;                    // classes x D
  Vector eigenvalues;                    // C, decreasing
  Eigen::Index n_components = 0;
  Eigen::Index requested_components = 0;
  std::vector<std::string> warnings;

  Eigen::Index dim() const { return projection.rows(); }
};

namespace detail {

struct ClassIndex {
  std::vector<std::string> labels;
  std::vector<Eigen::Index> of_sample;
  std::vector<Eigen::Index> counts;
};

inline ClassIndex index_classes(const std::vector<std::string>& labels) {
  ClassIndex ci;
  std::map<std::string, Eigen::Index> ids;
  for (const auto& l : labels) ids.emplace(l, 0);
  Eigen::Index next = 0;
  for (auto& [name, id] : ids) {
    id = next++;
    ci.labels.push_back(name);
  }
  ci.counts.assign(ci.labels.size(), 0);
  for (const auto& l : labels) {
    const auto id = ids.at(l);
    ci.of_sample.push_back(id);
    ++ci.counts[static_cast<std::size_t>(id)];
  }
  return ci;
}

}  // namespace detail

/// Fits discriminant axes maximizing between-class over within-class
/// scatter. The within-class scatter is shrunk by kLdaShrinkage * trace/D.
/// The component count is clamped to min(requested, classes - 1, D).
inline LdaModel fit_lda(const Matrix& vectors, const std::vector<std::string>& labels, Eigen::Index n_components) {
  const Eigen::Index n = vectors.rows();
  const Eigen::Index d = vectors.cols();
  require(static_cast<std::size_t>(n) == labels.size(),
          "fit_lda: " + std::to_string(n) + " vectors but " + std::to_string(labels.size()) + " labels");
  require(d >= 1, "fit_lda: vectors have no dimensions");
  require(n_components >= 1, "fit_lda: requested component count must be positive");
  require(vectors.allFinite(), "fit_lda: non-finite vector entries");
  const auto ci = detail::index_classes(labels);
  const auto n_classes = static_cast<Eigen::Index>(ci.labels.size());
  require(n_classes >= 2, "fit_lda: need at least 2 distinct classes, got " + std::to_string(n_classes));
  for (std::size_t c = 0; c < ci.labels.size(); ++c)
    require(ci.counts[c] >= 2, "fit_lda: class '" + ci.labels[c] + "' has fewer than 2 samples");

  LdaModel m;
  m.class_labels = ci.labels;
  m.requested_components = n_components;
  m.n_components = std::min({n_components, n_classes - 1, d});
  if (m.n_components < n_components)
    m.warnings.push_back("requested " + std::to_string(n_components) + " LDA components but " +
                         std::to_string(n_classes) + " classes in " + std::to_string(d) +
                         " dimensions support at most " + std::to_string(m.n_components) + "; using " +
                         std::to_string(m.n_components));

  m.class_means = Matrix::Zero(n_classes, d);
  for (Eigen::Index k = 0; k < n; ++k) m.class_means.row(ci.of_sample[k]) += vectors.row(k);
  for (Eigen::Index c = 0; c < n_classes; ++c) m.class_means.row(c) /= static_cast<double>(ci.counts[c]);
  const Eigen::RowVectorXd grand = vectors.colwise().mean();

  Matrix centered(n, d);
  for (Eigen::Index k = 0; k < n; ++k) centered.row(k) = vectors.row(k) - m.class_means.row(ci.of_sample[k]);
  Matrix sw = centered.transpose() * centered;
  Matrix between(n_classes, d);
  for (Eigen::Index c = 0; c < n_classes; ++c)
    between.row(c) = std::sqrt(static_cast<double>(ci.counts[c])) * (m.class_means.row(c) - grand);
  const Matrix sb = between.transpose() * between;

  const double tr = sw.trace();
  // identical points within every class leave S_w = 0; fall back to an absolute ridge
  const double shrink = tr > 0.0 ? kLdaShrinkage * tr / static_cast<double>(d) : kLdaShrinkage;
  sw.diagonal().array() += shrink;

  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> ges(sb, sw, Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
  if (ges.info() != Eigen::Success) throw NumericalError("fit_lda: generalized eigensolver failed");

  m.projection.resize(d, m.n_components);
  m.eigenvalues.resize(m.n_components);
  for (Eigen::Index c = 0; c < m.n_components; ++c) {
    const Eigen::Index src = d - 1 - c;  // eigenvalues come out ascending
    Vector v = ges.eigenvectors().col(src);
    const double norm = v.norm();
    if (!(norm > 0.0)) throw NumericalError("fit_lda: zero discriminant direction");
    v /= norm;
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v[arg] < 0.0) v = -v;
    m.projection.col(c) = v;
    m.eigenvalues[c] = ges.eigenvalues()[src];
  }
  return m;
}

inline Matrix transform(const LdaModel& model, const Matrix& vectors) {
  require(vectors.cols() == model.dim(), "LDA transform: vectors have dimension " + std::to_string(vectors.cols()) +
                                             ", model expects " + std::to_string(model.dim()));
  return vectors * model.projection;
}

/// Fisher ratio v^T S_b v / v^T S_w v of each projected component, unregularized.
inline Vector fisher_ratios(const Matrix& projected, const std::vector<std::string>& labels) {
  const auto ci = detail::index_classes(labels);
  const auto n_classes = static_cast<Eigen::Index>(ci.labels.size());
  Matrix means = Matrix::Zero(n_classes, projected.cols());
  for (Eigen::Index k = 0; k < projected.rows(); ++k) means.row(ci.of_sample[k]) += projected.row(k);
  for (Eigen::Index c = 0; c < n_classes; ++c) means.row(c) /= static_cast<double>(ci.counts[c]);
  const Eigen::RowVectorXd grand = projected.colwise().mean();
  Vector within = Vector::Zero(projected.cols());
  Vector between = Vector::Zero(projected.cols());
  for (Eigen::Index k = 0; k < projected.rows(); ++k)
    within += (projected.row(k) - means.row(ci.of_sample[k])).array().square().matrix().transpose();
  for (Eigen::Index c = 0; c < n_classes; ++c)
    between += static_cast<double>(ci.counts[c]) * (means.row(c) - grand).array().square().matrix().transpose();
  return between.cwiseQuotient(within);
}

struct ClassSeparation {
  std::string label;
  std::size_t count = 0;
  double within = 0.0;   // mean pairwise distance between members
  double between = 0.0;  // centroid distance to the nearest other class centroid
  std::string nearest;
  double score = 0.0;    // (between - within) / max(between, within), in [-1, 1]
};

/// Per-class cluster tightness in discriminant space.
inline std::vector<ClassSeparation> separation_report(const LdaModel& model, const Matrix& vectors,
                                                      const std::vector<std::string>& labels) {
  require(static_cast<std::size_t>(vectors.rows()) == labels.size(), "separation_report: label count mismatch");
  const Matrix z = transform(model, vectors);
  const auto ci = detail::index_classes(labels);
  const auto n_classes = static_cast<Eigen::Index>(ci.labels.size());
  require(n_classes >= 2, "separation_report: need at least 2 classes");

  std::vector<std::vector<Eigen::Index>> members(ci.labels.size());
  for (Eigen::Index k = 0; k < z.rows(); ++k) members[ci.of_sample[k]].push_back(k);
  Matrix centroids(n_classes, z.cols());
  for (Eigen::Index c = 0; c < n_classes; ++c) {
    Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(z.cols());
    for (auto k : members[c]) acc += z.row(k);
    centroids.row(c) = acc / static_cast<double>(members[c].size());
  }

  std::vector<ClassSeparation> out;
  for (Eigen::Index c = 0; c < n_classes; ++c) {
    ClassSeparation s;
    s.label = ci.labels[c];
    const auto& mem = members[c];
    s.count = mem.size();
    double sum = 0.0;
    std::size_t pairs = 0;
    for (std::size_t a = 0; a < mem.size(); ++a)
      for (std::size_t b = a + 1; b < mem.size(); ++b, ++pairs) sum += (z.row(mem[a]) - z.row(mem[b])).norm();
    s.within = pairs > 0 ? sum / static_cast<double>(pairs) : 0.0;
    s.between = std::numeric_limits<double>::infinity();
    for (Eigen::Index o = 0; o < n_classes; ++o) {
      if (o == c) continue;
      const double dist = (centroids.row(c) - centroids.row(o)).norm();
      if (dist < s.between) {
        s.between = dist;
        s.nearest = ci.labels[o];
      }
    }
    const double denom = std::max(s.between, s.within);
    s.score = denom > 0.0 ? (s.between - s.within) / denom : 0.0;
    out.push_back(std::move(s));
  }
  return out;
}

inline TensorFile lda_to_tensor(const LdaModel& m) {
  TensorFile t;
  t.dtype = DType::f64;
  t.shape = {static_cast<std::size_t>(m.projection.rows()), static_cast<std::size_t>(m.projection.cols())};
  t.meta = {{"class_labels", m.class_labels},
            {"eigenvalues", std::vector<double>(m.eigenvalues.data(), m.eigenvalues.data() + m.eigenvalues.size())},
            {"n_components", m.n_components},
            {"requested_components", m.requested_components},
            {"warnings", m.warnings}};
  for (Eigen::Index r = 0; r < m.projection.rows(); ++r)
    for (Eigen::Index c = 0; c < m.projection.cols(); ++c) t.values.push_back(m.projection(r, c));
  return t;
}

inline nlohmann::ordered_json to_json(const LdaModel& m) {
  nlohmann::ordered_json j;
  j["class_labels"] = m.class_labels;
  j["n_components"] = m.n_components;
  j["requested_components"] = m.requested_components;
  j["eigenvalues"] = std::vector<double>(m.eigenvalues.data(), m.eigenvalues.data() + m.eigenvalues.size());
  j["warnings"] = m.warnings;
  j["shrinkage"] = kLdaShrinkage;
  return j;
}

inline nlohmann::ordered_json to_json(const std::vector<ClassSeparation>& rep) {
  auto j = nlohmann::ordered_json::array();
  for (const auto& s : rep) {
    nlohmann::ordered_json cj;
    cj["label"] = s.label;
    cj["count"] = s.count;
    cj["within"] = s.within;
    cj["between"] = s.between;
    cj["nearest"] = s.nearest;
    cj["score"] = s.score;
    j.push_back(std::move(cj));
  }
  return j;
}

}  // namespace trf
