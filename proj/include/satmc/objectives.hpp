#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <string>
#include <vector>

#include "satmc/error.hpp"

namespace satmc {

/// First two moments of an embedding matrix; the distributional surrogate
/// used by the empirical Wasserstein distance.
struct GaussianSummary {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;  // population (divide by n), symmetric PSD
};

/// Column means and population covariance of the rows of X.
inline GaussianSummary gaussian_summary(const Eigen::MatrixXd& x) {
  if (x.rows() < 1) fail("shape error", "gaussian_summary needs at least one row");
  GaussianSummary s;
  s.mean = x.colwise().mean();
  Eigen::MatrixXd centered = x.rowwise() - s.mean.transpose();
  s.covariance = centered.transpose() * centered / static_cast<double>(x.rows());
  s.covariance = 0.5 * (s.covariance + s.covariance.transpose().eval());
  return s;
}

/// Symmetric PSD square root by eigendecomposition; negative eigenvalues
/// (floating-point dips) are clamped to zero.
inline Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& s) {
  if (s.rows() != s.cols() || (s - s.transpose()).cwiseAbs().maxCoeff() > 1e-10)
    fail("shape error", "psd_sqrt requires a symmetric matrix");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (s + s.transpose()));
  Eigen::VectorXd w = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * w.asDiagonal() * eig.eigenvectors().transpose();
}

namespace detail {

/// Eigenvalues of the symmetrized matrix, clamped at zero.
inline void psd_eig(const Eigen::MatrixXd& m, Eigen::VectorXd& w, Eigen::MatrixXd& v) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (m + m.transpose()));
  w = eig.eigenvalues().cwiseMax(0.0);
  v = eig.eigenvectors();
}

inline Eigen::MatrixXd inv_sqrt_from_eig(const Eigen::VectorXd& w, const Eigen::MatrixXd& v,
                                         double floor_rel = 1e-14) {
  const double floor_abs = std::max(w.maxCoeff(), 1.0) * floor_rel;
  Eigen::VectorXd inv = w.unaryExpr(
      [floor_abs](double x) { return 1.0 / std::sqrt(std::max(x, floor_abs)); });
  return v * inv.asDiagonal() * v.transpose();
}

}  // namespace detail

/// Closed-form distance between Gaussian summaries:
/// ||mu_s - mu_t|| + Tr(S_s) + Tr(S_t) - 2 Tr[(sqrt(S_s) S_t sqrt(S_s))^{1/2}].
/// The mean term enters unsquared.
inline double empirical_wasserstein(const GaussianSummary& s, const GaussianSummary& t) {
  if (s.mean.size() != t.mean.size()) fail("shape error", "summary dimensions differ");
  const Eigen::MatrixXd rs = psd_sqrt(s.covariance);
  Eigen::VectorXd w;
  Eigen::MatrixXd v;
  detail::psd_eig(rs * t.covariance * rs, w, v);
  return (s.mean - t.mean).norm() + s.covariance.trace() + t.covariance.trace() -
         2.0 * w.cwiseSqrt().sum();
}

/// Gradients of empirical_wasserstein with respect to both summaries.
struct WassersteinGrads {
  Eigen::VectorXd d_mean_s, d_mean_t;
  Eigen::MatrixXd d_cov_s, d_cov_t;
  double value = 0.0;
};

inline WassersteinGrads empirical_wasserstein_grads(const GaussianSummary& s,
                                                    const GaussianSummary& t) {
  if (s.mean.size() != t.mean.size()) fail("shape error", "summary dimensions differ");
  const auto d = s.mean.size();
  WassersteinGrads g;

  const Eigen::VectorXd dmu = s.mean - t.mean;
  const double mean_dist = dmu.norm();
  g.d_mean_s = mean_dist > 1e-12 ? Eigen::VectorXd(dmu / mean_dist)
                                 : Eigen::VectorXd(Eigen::VectorXd::Zero(d));
  g.d_mean_t = -g.d_mean_s;

  const Eigen::MatrixXd rs = psd_sqrt(s.covariance);
  const Eigen::MatrixXd rt = psd_sqrt(t.covariance);
  Eigen::VectorXd ws, wt;
  Eigen::MatrixXd vs, vt;
  detail::psd_eig(rs * t.covariance * rs, ws, vs);
  detail::psd_eig(rt * s.covariance * rt, wt, vt);

  // d/dX Tr[(A X A)^{1/2}] = A (A X A)^{-1/2} A for symmetric A; the trace
  // term is symmetric in (S_s, S_t), which gives the S_s gradient from the
  // swapped factorization.
  const Eigen::MatrixXd bures_grad_t = rs * detail::inv_sqrt_from_eig(ws, vs) * rs;
  const Eigen::MatrixXd bures_grad_s = rt * detail::inv_sqrt_from_eig(wt, vt) * rt;
  g.d_cov_s = Eigen::MatrixXd::Identity(d, d) - bures_grad_s;
  g.d_cov_t = Eigen::MatrixXd::Identity(d, d) - bures_grad_t;
  g.d_cov_s = 0.5 * (g.d_cov_s + g.d_cov_s.transpose().eval());
  g.d_cov_t = 0.5 * (g.d_cov_t + g.d_cov_t.transpose().eval());

  g.value = mean_dist + s.covariance.trace() + t.covariance.trace() - 2.0 * ws.cwiseSqrt().sum();
  return g;
}

/// Chains (d_mean, d_cov) of a summary back to the embedding rows it was
/// computed from.
inline Eigen::MatrixXd summary_backward(const Eigen::MatrixXd& x, const GaussianSummary& s,
                                        const Eigen::VectorXd& d_mean,
                                        const Eigen::MatrixXd& d_cov) {
  const double n = static_cast<double>(x.rows());
  const Eigen::MatrixXd centered = x.rowwise() - s.mean.transpose();
  Eigen::MatrixXd grad = (2.0 / n) * centered * (0.5 * (d_cov + d_cov.transpose()));
  grad.rowwise() += d_mean.transpose() / n;
  return grad;
}

/// Orthogonal-isolation penalty of one domain: ||Xhat^T Pi Xtilde||_F^2.
/// An empty Pi means the identity.
inline double oi_domain_loss(const Eigen::MatrixXd& xhat, const Eigen::MatrixXd& xtilde,
                             const Eigen::MatrixXd& pi = {}) {
  if (xhat.rows() != xtilde.rows()) fail("shape error", "embeddings must share the node count");
  if (pi.size() != 0 && (pi.rows() != xhat.rows() || pi.cols() != xhat.rows()))
    fail("shape error", "Pi must be n x n for the domain's node count");
  const Eigen::MatrixXd cross =
      pi.size() == 0 ? Eigen::MatrixXd(xhat.transpose() * xtilde)
                     : Eigen::MatrixXd(xhat.transpose() * (pi * xtilde));
  return cross.squaredNorm();
}

/// Both-domain OI loss; zero iff each domain's shared embedding is
/// orthogonal to its (transformed) private anchor.
inline double oi_loss(const Eigen::MatrixXd& xhat_s, const Eigen::MatrixXd& xtilde_s,
                      const Eigen::MatrixXd& pi_s, const Eigen::MatrixXd& xhat_t,
                      const Eigen::MatrixXd& xtilde_t, const Eigen::MatrixXd& pi_t) {
  return oi_domain_loss(xhat_s, xtilde_s, pi_s) + oi_domain_loss(xhat_t, xtilde_t, pi_t);
}

struct OiDomainGrads {
  double value = 0.0;
  Eigen::MatrixXd d_xhat;
  Eigen::MatrixXd d_pi;  // empty when Pi is the identity
};

inline OiDomainGrads oi_domain_grads(const Eigen::MatrixXd& xhat, const Eigen::MatrixXd& xtilde,
                                     const Eigen::MatrixXd& pi = {}) {
  OiDomainGrads g;
  const bool identity = pi.size() == 0;
  const Eigen::MatrixXd anchor = identity ? xtilde : Eigen::MatrixXd(pi * xtilde);
  const Eigen::MatrixXd cross = xhat.transpose() * anchor;
  g.value = cross.squaredNorm();
  g.d_xhat = 2.0 * anchor * cross.transpose();
  if (!identity) g.d_pi = 2.0 * xhat * cross * xtilde.transpose();
  return g;
}

namespace detail {

inline Eigen::MatrixXd row_softmax(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd p = logits;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    Eigen::RowVectorXd row = p.row(i);
    const double m = row.maxCoeff();
    row = (row.array() - m).exp();
    p.row(i) = row / row.sum();
  }
  return p;
}

}  // namespace detail

/// Mean negative log-likelihood of the true classes under row softmax.
inline double cross_entropy_loss(const Eigen::MatrixXd& logits, const std::vector<int>& labels) {
  if (static_cast<Eigen::Index>(labels.size()) != logits.rows())
    fail("shape error", "label count must match logit rows");
  const auto c = logits.cols();
  double total = 0.0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const int y = labels[i];
    if (y < 0 || y >= c) fail("index error", "label out of range at row " + std::to_string(i));
    const double m = logits.row(i).maxCoeff();
    const double lse = m + std::log((logits.row(i).array() - m).exp().sum());
    total += lse - logits(i, y);
  }
  return total / static_cast<double>(logits.rows());
}

/// d(cross_entropy_loss)/d(logits) = (softmax - onehot)/n.
inline Eigen::MatrixXd cross_entropy_grad(const Eigen::MatrixXd& logits,
                                          const std::vector<int>& labels) {
  Eigen::MatrixXd g = detail::row_softmax(logits);
  for (Eigen::Index i = 0; i < g.rows(); ++i) g(i, labels[i]) -= 1.0;
  return g / static_cast<double>(logits.rows());
}

/// Mean Shannon entropy of the row softmax distributions.
inline double entropy_loss(const Eigen::MatrixXd& logits) {
  const Eigen::MatrixXd p = detail::row_softmax(logits);
  double total = 0.0;
  for (Eigen::Index i = 0; i < p.rows(); ++i)
    for (Eigen::Index j = 0; j < p.cols(); ++j)
      if (p(i, j) > 0.0) total -= p(i, j) * std::log(p(i, j));
  return total / static_cast<double>(p.rows());
}

inline Eigen::MatrixXd entropy_grad(const Eigen::MatrixXd& logits) {
  const Eigen::MatrixXd p = detail::row_softmax(logits);
  Eigen::MatrixXd g(p.rows(), p.cols());
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    double ent = 0.0;
    for (Eigen::Index j = 0; j < p.cols(); ++j)
      if (p(i, j) > 0.0) ent -= p(i, j) * std::log(p(i, j));
    for (Eigen::Index j = 0; j < p.cols(); ++j) {
      const double lp = p(i, j) > 0.0 ? std::log(p(i, j)) : 0.0;
      g(i, j) = -p(i, j) * (lp + ent);
    }
  }
  return g / static_cast<double>(p.rows());
}

/// l_cls + eta * l_entropy with the self-adaptive schedule eta = v/w.
inline std::pair<double, double> label_loss(double l_cls, double l_entropy, int epoch_v,
                                            int total_w) {
  if (total_w < 1) fail("schedule error", "total epochs must be >= 1");
  if (epoch_v < 0 || epoch_v > total_w)
    fail("schedule error", "epoch index " + std::to_string(epoch_v) + " outside [0, " +
                               std::to_string(total_w) + "]");
  const double eta = static_cast<double>(epoch_v) / static_cast<double>(total_w);
  return {l_cls + eta * l_entropy, eta};
}

/// Per-epoch loss decomposition; total = l_oi + l_label + lambda * l_wass.
struct LossReport {
  double l_wass = 0.0;
  double l_oi = 0.0;
  double l_cls = 0.0;
  double l_entropy = 0.0;
  double eta = 0.0;
  double l_label = 0.0;
  double total = 0.0;
};

inline LossReport joint_objective(double l_wass, double l_oi, double l_cls, double l_entropy,
                                  int epoch_v, int total_w, double lambda) {
  if (lambda < 0.0) fail("parameter error", "lambda must be >= 0");
  LossReport r;
  r.l_wass = l_wass;
  r.l_oi = l_oi;
  r.l_cls = l_cls;
  r.l_entropy = l_entropy;
  std::tie(r.l_label, r.eta) = label_loss(l_cls, l_entropy, epoch_v, total_w);
  r.total = r.l_oi + r.l_label + lambda * r.l_wass;
  return r;
}

}  // namespace satmc
