#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "satmc/error.hpp"

namespace satmc {

/// Exact fraction of matching entries.
inline double accuracy(const std::vector<int>& predicted, const std::vector<int>& truth) {
  if (predicted.size() != truth.size()) fail("shape error", "prediction/truth length mismatch");
  if (predicted.empty()) fail("sample error", "accuracy needs at least one node");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i)
    if (predicted[i] == truth[i]) ++correct;
  return static_cast<double>(correct) / static_cast<double>(predicted.size());
}

namespace detail {

inline std::vector<double> pairwise_distances(const Eigen::MatrixXd& x) {
  std::vector<double> d;
  d.reserve(static_cast<std::size_t>(x.rows()) * (x.rows() - 1) / 2);
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = i + 1; j < x.rows(); ++j) d.push_back((x.row(i) - x.row(j)).norm());
  return d;
}

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) {
    const double lo = *std::max_element(v.begin(), v.begin() + mid);
    m = 0.5 * (m + lo);
  }
  return m;
}

}  // namespace detail

inline constexpr double kMedianBandwidth = -1.0;

/// Squared maximum mean discrepancy with a Gaussian kernel
/// exp(-||x-y||^2 / (2 sigma^2)). The default biased V-statistic is
/// non-negative by construction; the unbiased variant drops the diagonal
/// terms. bandwidth = kMedianBandwidth selects the median pairwise distance
/// over the pooled sample (falling back to 1 when that median is zero).
inline double mmd_rbf(const Eigen::MatrixXd& xs, const Eigen::MatrixXd& xt,
                      double bandwidth = kMedianBandwidth, bool unbiased = false) {
  if (xs.rows() < 2 || xt.rows() < 2) fail("sample error", "mmd_rbf needs >= 2 rows per side");
  if (xs.cols() != xt.cols()) fail("shape error", "embedding dims differ");

  double sigma = bandwidth;
  if (bandwidth == kMedianBandwidth) {
    Eigen::MatrixXd pooled(xs.rows() + xt.rows(), xs.cols());
    pooled << xs, xt;
    sigma = detail::median(detail::pairwise_distances(pooled));
    if (sigma <= 0.0) sigma = 1.0;
  }
  if (sigma <= 0.0) fail("parameter error", "bandwidth must be positive");
  const double gamma = 1.0 / (2.0 * sigma * sigma);

  auto kernel_mean = [gamma](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, bool skip_diag) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      for (Eigen::Index j = 0; j < b.rows(); ++j) {
        if (skip_diag && i == j) continue;
        sum += std::exp(-gamma * (a.row(i) - b.row(j)).squaredNorm());
      }
    const double count = skip_diag ? static_cast<double>(a.rows()) * (b.rows() - 1)
                                   : static_cast<double>(a.rows()) * b.rows();
    return sum / count;
  };

  const double value = kernel_mean(xs, xs, unbiased) + kernel_mean(xt, xt, unbiased) -
                       2.0 * kernel_mean(xs, xt, false);
  return std::max(value, 0.0);
}

struct ClassStat {
  int label = 0;
  Eigen::VectorXd centroid;
  double mean_distance = 0.0;  // mean distance to the centroid
  int cluster_count = 0;       // single-linkage components at the cut
};

/// Per-class centroid, spread, and a single-linkage cluster-count estimate.
/// The cut defaults to 5x the median intra-class nearest-neighbor distance.
inline std::vector<ClassStat> class_scatter(const Eigen::MatrixXd& x, const std::vector<int>& labels,
                                            double cut_multiplier = 5.0) {
  if (static_cast<Eigen::Index>(labels.size()) != x.rows())
    fail("shape error", "label count must match embedding rows");
  const int num_classes = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
  std::vector<ClassStat> stats;
  for (int c = 0; c < num_classes; ++c) {
    std::vector<int> idx;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == c) idx.push_back(static_cast<int>(i));
    if (idx.empty()) continue;  // omitted per contract

    ClassStat s;
    s.label = c;
    Eigen::MatrixXd rows(idx.size(), x.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) rows.row(i) = x.row(idx[i]);
    s.centroid = rows.colwise().mean();
    double total = 0.0;
    for (Eigen::Index i = 0; i < rows.rows(); ++i)
      total += (rows.row(i) - s.centroid.transpose()).norm();
    s.mean_distance = total / static_cast<double>(rows.rows());

    if (rows.rows() == 1) {
      s.cluster_count = 1;
      stats.push_back(std::move(s));
      continue;
    }
    // nearest-neighbor distances set the linkage cut
    std::vector<double> nn(rows.rows(), std::numeric_limits<double>::infinity());
    for (Eigen::Index i = 0; i < rows.rows(); ++i)
      for (Eigen::Index j = 0; j < rows.rows(); ++j) {
        if (i == j) continue;
        nn[i] = std::min(nn[i], (rows.row(i) - rows.row(j)).norm());
      }
    const double cut = cut_multiplier * detail::median(nn);
    // single linkage at the cut = connected components of the cut graph
    std::vector<int> parent(rows.rows());
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int a) {
      while (parent[a] != a) a = parent[a] = parent[parent[a]];
      return a;
    };
    for (Eigen::Index i = 0; i < rows.rows(); ++i)
      for (Eigen::Index j = i + 1; j < rows.rows(); ++j)
        if ((rows.row(i) - rows.row(j)).norm() <= cut) parent[find(static_cast<int>(i))] = find(static_cast<int>(j));
    std::vector<int> roots;
    for (int i = 0; i < static_cast<int>(rows.rows()); ++i) roots.push_back(find(i));
    std::sort(roots.begin(), roots.end());
    s.cluster_count = static_cast<int>(std::unique(roots.begin(), roots.end()) - roots.begin());
    stats.push_back(std::move(s));
  }
  return stats;
}

/// Deterministic top-2 principal-component projection (centered); output
/// columns are ordered by descending variance and are uncorrelated. Signs
/// are pinned so each component's largest-magnitude loading is positive.
inline Eigen::MatrixXd project_2d(const Eigen::MatrixXd& x) {
  if (x.cols() < 2) fail("shape error", "project_2d needs dimension >= 2");
  const Eigen::RowVectorXd mean = x.colwise().mean();
  const Eigen::MatrixXd centered = x.rowwise() - mean;
  const Eigen::MatrixXd cov =
      centered.transpose() * centered / static_cast<double>(std::max<Eigen::Index>(x.rows(), 1));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (cov + cov.transpose()));
  Eigen::MatrixXd components(x.cols(), 2);
  // eigenvalues ascend; take the last two in descending order
  components.col(0) = eig.eigenvectors().col(x.cols() - 1);
  components.col(1) = eig.eigenvectors().col(x.cols() - 2);
  for (int k = 0; k < 2; ++k) {
    Eigen::Index arg = 0;
    components.col(k).cwiseAbs().maxCoeff(&arg);
    if (components(arg, k) < 0.0) components.col(k) = -components.col(k);
  }
  return centered * components;
}

struct EvalReport {
  double target_accuracy = 0.0;
  double mmd = 0.0;
  std::vector<ClassStat> per_class;
};

}  // namespace satmc
