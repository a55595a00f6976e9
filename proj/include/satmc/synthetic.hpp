#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "satmc/graph.hpp"
#include "satmc/rng.hpp"

namespace satmc {

/// Knobs of the planted-partition generator that are not part of the domain
/// shift itself: expected average degree and the class-band feature model.
struct SyntheticOpts {
  double avg_degree = 10.0;
  double band_on = 0.8;   // P(feature = 1) inside the class band
  double noise_on = 0.05; // P(feature = 1) outside the band
};

namespace detail {

inline std::vector<int> block_labels(int n, int c) {
  std::vector<int> labels(n);
  const int base = n / c;
  int idx = 0;
  for (int k = 0; k < c; ++k)
    for (int i = 0; i < base; ++i) labels[idx++] = k;
  for (int k = 0; idx < n; ++idx, ++k) labels[idx] = k % c;
  return labels;
}

/// One planted-partition graph whose expected fraction of within-class edges
/// equals `homophily`, with class-banded binary features.
inline AttributedGraph block_model_graph(int n, int c, double homophily, int feature_dim,
                                         const SyntheticOpts& opts, Rng rng) {
  AttributedGraph g;
  g.num_nodes = n;
  g.num_classes = c;
  g.labels = block_labels(n, c);

  double within_pairs = 0.0;
  std::vector<int> class_sizes(c, 0);
  for (int l : g.labels) ++class_sizes[l];
  for (int k = 0; k < c; ++k)
    within_pairs += 0.5 * class_sizes[k] * (class_sizes[k] - 1.0);
  const double total_pairs = 0.5 * n * (n - 1.0);
  const double cross_pairs = total_pairs - within_pairs;
  const double expected_edges = 0.5 * n * opts.avg_degree;
  const double p_in = homophily * expected_edges / within_pairs;
  const double p_out = (1.0 - homophily) * expected_edges / cross_pairs;
  if (p_in < 0.0 || p_in > 1.0 || p_out < 0.0 || p_out > 1.0)
    fail("parameter error", "homophily " + std::to_string(homophily) + " with avg degree " +
                                std::to_string(opts.avg_degree) + " requires edge probabilities (" +
                                std::to_string(p_in) + ", " + std::to_string(p_out) +
                                ") outside [0,1]");

  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (rng.bernoulli(g.labels[i] == g.labels[j] ? p_in : p_out)) edges.emplace_back(i, j);
  g.adjacency = adjacency_from_edges(n, edges);

  const int band = feature_dim / c;
  g.features = Eigen::MatrixXd::Zero(n, feature_dim);
  for (int i = 0; i < n; ++i) {
    const int lo = g.labels[i] * band;
    const int hi = (g.labels[i] == c - 1) ? feature_dim : lo + band;
    for (int j = 0; j < feature_dim; ++j) {
      const bool in_band = j >= lo && j < hi;
      g.features(i, j) = rng.bernoulli(in_band ? opts.band_on : opts.noise_on) ? 1.0 : 0.0;
    }
  }
  return g;
}

}  // namespace detail

/// Fraction of edges joining same-class nodes; the structural-shift oracle.
inline double within_class_edge_fraction(const AttributedGraph& g) {
  double within = 0.0, total = 0.0;
  for (int k = 0; k < g.adjacency.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(g.adjacency, k); it; ++it) {
      if (it.row() >= it.col()) continue;
      total += 1.0;
      if (g.labels[it.row()] == g.labels[it.col()]) within += 1.0;
    }
  return total > 0.0 ? within / total : 0.0;
}

/// Two planted-partition graphs sharing the label space and the feature
/// model, with independently chosen homophily per side. Deterministic in
/// (arguments, seed). Target labels are moved into target_truth.
inline DomainPair generate_shift_pair(int n_source, int n_target, int num_classes,
                                      double homophily_source, double homophily_target,
                                      int feature_dim, std::uint64_t seed,
                                      const SyntheticOpts& opts = {}) {
  if (num_classes < 1) fail("parameter error", "num_classes must be >= 1");
  if (n_source / num_classes < 2 || n_target / num_classes < 2)
    fail("parameter error", "each class block needs at least 2 nodes");
  if (feature_dim < num_classes)
    fail("parameter error", "feature_dim must be >= num_classes");
  Rng root(seed);
  AttributedGraph source = detail::block_model_graph(n_source, num_classes, homophily_source,
                                                     feature_dim, opts, root.fork(1));
  AttributedGraph target = detail::block_model_graph(n_target, num_classes, homophily_target,
                                                     feature_dim, opts, root.fork(2));
  return make_domain_pair(std::move(source), std::move(target));
}

/// Flips exactly floor(flip_ones * #nonzeros) ones to 0 and
/// floor(flip_zeros * #zeros) zeros to 1, sampled without replacement over
/// the whole matrix. Structure and labels are untouched.
inline AttributedGraph corrupt_attributes(const AttributedGraph& graph, double flip_ones,
                                          double flip_zeros, std::uint64_t seed) {
  if (flip_ones < 0.0 || flip_ones > 1.0 || flip_zeros < 0.0 || flip_zeros > 1.0)
    fail("parameter error", "flip rates must lie in [0,1]");
  const auto& X = graph.features;
  std::vector<std::uint32_t> ones, zeros;
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
      const double v = X(i, j);
      if (v == 1.0)
        ones.push_back(static_cast<std::uint32_t>(i * X.cols() + j));
      else if (v == 0.0)
        zeros.push_back(static_cast<std::uint32_t>(i * X.cols() + j));
      else
        fail("type error", "corrupt_attributes requires binary features");
    }

  AttributedGraph out = graph;
  Rng rng(seed);
  auto flip = [&](std::vector<std::uint32_t>& pool, std::size_t count, double value) {
    for (std::size_t t = 0; t < count; ++t) {
      const std::size_t pick = t + rng.below(pool.size() - t);
      std::swap(pool[t], pool[pick]);
      out.features(pool[t] / X.cols(), pool[t] % X.cols()) = value;
    }
  };
  flip(ones, static_cast<std::size_t>(flip_ones * static_cast<double>(ones.size())), 0.0);
  flip(zeros, static_cast<std::size_t>(flip_zeros * static_cast<double>(zeros.size())), 1.0);
  return out;
}

}  // namespace satmc
