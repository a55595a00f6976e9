#pragma once

#include <Eigen/Dense>
#include <Eigen/LU>
#include <Eigen/Sparse>
#include <cmath>
#include <string>

#include "satmc/error.hpp"
#include "satmc/graph.hpp"

namespace satmc {

/// Structure-transformed graph: the diffusion matrix (optionally sparsified
/// and renormalized into a convolution operator), with its teleport
/// probability and truncation threshold.
struct DiffusedGraph {
  Eigen::MatrixXd matrix;
  double alpha = 0.0;
  double xi = 0.0;
  bool normalized = false;
};

enum class DiffusionMode { kClosed, kSeries };

/// Symmetric transition matrix D^{-1/2} A D^{-1/2}; rows/columns of
/// degree-0 nodes are zero.
inline Eigen::MatrixXd transition_matrix(const AttributedGraph& g) {
  const int n = g.num_nodes;
  Eigen::VectorXd deg = Eigen::VectorXd::Zero(n);
  for (int k = 0; k < g.adjacency.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(g.adjacency, k); it; ++it)
      deg[it.row()] += it.value();
  Eigen::VectorXd dinv = deg.unaryExpr([](double d) { return d > 0.0 ? 1.0 / std::sqrt(d) : 0.0; });
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < g.adjacency.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(g.adjacency, k); it; ++it)
      t(it.row(), it.col()) = it.value() * dinv[it.row()] * dinv[it.col()];
  return t;
}

/// L = I - D^{-1/2} A D^{-1/2}; symmetric with spectrum in [0, 2].
inline Eigen::MatrixXd normalized_laplacian(const AttributedGraph& g) {
  Eigen::MatrixXd l = -transition_matrix(g);
  l.diagonal().array() += 1.0;
  return l;
}

/// Personalized-PageRank diffusion of a symmetric transition matrix:
/// closed form alpha (I - (1-alpha) T)^{-1}, or the truncated power series
/// sum_{k=0..K} alpha (1-alpha)^k T^k.
inline Eigen::MatrixXd ppr_diffusion(const Eigen::MatrixXd& t, double alpha,
                                     DiffusionMode mode = DiffusionMode::kClosed, int series_k = 64) {
  if (alpha <= 0.0 || alpha >= 1.0) fail("parameter error", "alpha must lie in (0,1)");
  const auto n = t.rows();
  if (t.cols() != n) fail("shape error", "transition matrix must be square");
  if (mode == DiffusionMode::kClosed) {
    Eigen::MatrixXd m = -(1.0 - alpha) * t;
    m.diagonal().array() += 1.0;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(m);
    Eigen::MatrixXd inv = lu.solve(Eigen::MatrixXd::Identity(n, n));
    // singular only if rho(T) exceeds 1/(1-alpha); guard via residual
    if (!inv.allFinite() || (m * inv - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() > 1e-6)
      fail("numerical error", "I - (1-alpha) T is numerically singular");
    return alpha * inv;
  }
  if (series_k < 1) fail("parameter error", "series truncation order must be >= 1");
  Eigen::MatrixXd term = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd acc = term;
  for (int k = 1; k <= series_k; ++k) {
    term = (1.0 - alpha) * (t * term);
    acc += term;
  }
  return alpha * acc;
}

/// Self-loop insertion plus symmetric degree normalization,
/// D^{-1/2} (M + I) D^{-1/2}; the standard convolution operator.
inline Eigen::MatrixXd renormalize_operator(Eigen::MatrixXd m) {
  m.diagonal().array() += 1.0;
  Eigen::VectorXd deg = m.rowwise().sum();
  Eigen::VectorXd dinv = deg.unaryExpr([](double d) { return d > 0.0 ? 1.0 / std::sqrt(d) : 0.0; });
  return dinv.asDiagonal() * m * dinv.asDiagonal();
}

/// Sparse counterpart of renormalize_operator for raw adjacencies.
inline Eigen::SparseMatrix<double> gcn_operator(const Eigen::SparseMatrix<double>& a) {
  Eigen::SparseMatrix<double> m = a;
  Eigen::SparseMatrix<double> eye(a.rows(), a.cols());
  eye.setIdentity();
  m = m + eye;
  Eigen::VectorXd deg = Eigen::VectorXd::Zero(m.rows());
  for (int k = 0; k < m.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(m, k); it; ++it) deg[it.row()] += it.value();
  Eigen::VectorXd dinv = deg.unaryExpr([](double d) { return d > 0.0 ? 1.0 / std::sqrt(d) : 0.0; });
  return dinv.asDiagonal() * m * dinv.asDiagonal();
}

/// Threshold truncation at xi, symmetrization, then self-loop insertion and
/// symmetric renormalization. Rows emptied by the threshold keep their
/// self-loop.
inline DiffusedGraph sparsify_and_renormalize(const Eigen::MatrixXd& s, double xi,
                                              double alpha = 0.0) {
  if (xi < 0.0) fail("parameter error", "xi must be >= 0");
  Eigen::MatrixXd m = s.unaryExpr([xi](double v) { return std::abs(v) < xi ? 0.0 : v; });
  m = 0.5 * (m + m.transpose());
  DiffusedGraph out;
  out.matrix = renormalize_operator(std::move(m));
  out.alpha = alpha;
  out.xi = xi;
  out.normalized = true;
  return out;
}

/// Full structure transformation of a graph: transition matrix, PPR
/// diffusion, threshold sparsification, renormalization.
inline DiffusedGraph diffuse(const AttributedGraph& g, double alpha, double xi,
                             DiffusionMode mode = DiffusionMode::kClosed, int series_k = 64) {
  return sparsify_and_renormalize(ppr_diffusion(transition_matrix(g), alpha, mode, series_k),
                                  xi, alpha);
}

/// Convolution operator that is either a dense diffused matrix or a sparse
/// renormalized adjacency; always symmetric.
struct ConvOperator {
  Eigen::MatrixXd dense;
  Eigen::SparseMatrix<double> sparse;
  bool is_sparse = false;

  static ConvOperator from_dense(Eigen::MatrixXd m) {
    ConvOperator op;
    op.dense = std::move(m);
    return op;
  }
  static ConvOperator from_sparse(Eigen::SparseMatrix<double> m) {
    ConvOperator op;
    op.sparse = std::move(m);
    op.is_sparse = true;
    return op;
  }

  Eigen::Index rows() const { return is_sparse ? sparse.rows() : dense.rows(); }

  Eigen::MatrixXd mul(const Eigen::MatrixXd& x) const {
    return is_sparse ? Eigen::MatrixXd(sparse * x) : Eigen::MatrixXd(dense * x);
  }
};

}  // namespace satmc
