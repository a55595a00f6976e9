#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "satmc/error.hpp"

namespace satmc {

inline constexpr int kUnlabeled = -1;

/// Undirected attributed graph: sparse symmetric adjacency with zero diagonal,
/// dense node features, per-node integer labels (kUnlabeled = no label).
struct AttributedGraph {
  int num_nodes = 0;
  Eigen::SparseMatrix<double> adjacency;
  Eigen::MatrixXd features;
  std::vector<int> labels;
  int num_classes = 0;

  int feature_dim() const { return static_cast<int>(features.cols()); }

  bool fully_labeled() const {
    return std::all_of(labels.begin(), labels.end(), [](int l) { return l != kUnlabeled; });
  }

  std::size_t num_edges() const {
    return static_cast<std::size_t>(adjacency.nonZeros()) / 2;
  }

  /// Enforces the container invariants; throws on violation.
  void validate() const {
    if (adjacency.rows() != num_nodes || adjacency.cols() != num_nodes)
      fail("shape error", "adjacency must be num_nodes x num_nodes");
    if (features.rows() != num_nodes)
      fail("shape error", "feature row count must equal num_nodes");
    if (static_cast<int>(labels.size()) != num_nodes)
      fail("shape error", "label count must equal num_nodes");
    for (int k = 0; k < adjacency.outerSize(); ++k) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(adjacency, k); it; ++it) {
        if (it.row() == it.col() && it.value() != 0.0)
          fail("format error", "adjacency diagonal must be zero");
        if (std::abs(it.value() - adjacency.coeff(it.col(), it.row())) > 1e-12)
          fail("format error", "adjacency must be symmetric");
        if (it.value() < 0.0) fail("format error", "adjacency must be non-negative");
      }
    }
    for (int l : labels)
      if (l != kUnlabeled && (l < 0 || l >= num_classes))
        fail("format error", "label out of range [0, num_classes)");
    if (!features.allFinite()) fail("format error", "features must be finite");
  }
};

/// Builds the symmetric adjacency from an undirected edge list; duplicate
/// edges collapse to a single edge of weight 1, self-loops are rejected.
inline Eigen::SparseMatrix<double> adjacency_from_edges(
    int num_nodes, const std::vector<std::pair<int, int>>& edges) {
  std::set<std::pair<int, int>> seen;
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(edges.size() * 2);
  for (const auto& [u, v] : edges) {
    if (u == v) fail("format error", "self-loop at node " + std::to_string(u));
    if (u < 0 || v < 0 || u >= num_nodes || v >= num_nodes)
      fail("index error", "node index out of range: (" + std::to_string(u) + ", " +
                              std::to_string(v) + ")");
    const auto key = std::minmax(u, v);
    if (!seen.insert(key).second) continue;
    trips.emplace_back(key.first, key.second, 1.0);
    trips.emplace_back(key.second, key.first, 1.0);
  }
  Eigen::SparseMatrix<double> adj(num_nodes, num_nodes);
  adj.setFromTriplets(trips.begin(), trips.end());
  adj.makeCompressed();
  return adj;
}

/// Fully labeled source plus a label-stripped target. The target's true
/// labels live only in target_truth, which no training operation reads;
/// they exist for post-hoc evaluation.
struct DomainPair {
  AttributedGraph source;
  AttributedGraph target;
  std::vector<int> target_truth;  // empty when unknown
  int num_classes = 0;
};

inline DomainPair make_domain_pair(AttributedGraph source, AttributedGraph target) {
  source.validate();
  target.validate();
  if (source.num_classes != target.num_classes)
    fail("format error", "source and target must share the label space");
  if (!source.fully_labeled())
    fail("format error", "source graph must be fully labeled");
  DomainPair pair;
  pair.num_classes = source.num_classes;
  pair.source = std::move(source);
  pair.target = std::move(target);
  const bool any_labeled = std::any_of(pair.target.labels.begin(), pair.target.labels.end(),
                                       [](int l) { return l != kUnlabeled; });
  if (any_labeled) pair.target_truth = pair.target.labels;
  std::fill(pair.target.labels.begin(), pair.target.labels.end(), kUnlabeled);
  return pair;
}

}  // namespace satmc
