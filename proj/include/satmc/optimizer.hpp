#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "satmc/error.hpp"

namespace satmc {

enum class OptimizerKind { kAdam, kSgd };

/// One optimizer instance over an ordered list of parameter tensors.
/// Weight decay is added to the gradient before the update (decoupled from
/// neither moment), matching the common adaptive-moment convention.
class Optimizer {
public:
  Optimizer(OptimizerKind kind, double lr, double weight_decay)
      : kind_(kind), lr_(lr), weight_decay_(weight_decay) {}

  void attach(Eigen::MatrixXd* param) {
    params_.push_back(param);
    m_.emplace_back(Eigen::MatrixXd::Zero(param->rows(), param->cols()));
    v_.emplace_back(Eigen::MatrixXd::Zero(param->rows(), param->cols()));
  }

  std::size_t size() const { return params_.size(); }

  /// grads[i] must match params_[i] in shape and order.
  void step(const std::vector<Eigen::MatrixXd>& grads) {
    if (grads.size() != params_.size()) fail("shape error", "gradient list size mismatch");
    ++t_;
    for (std::size_t i = 0; i < params_.size(); ++i) {
      Eigen::MatrixXd g = grads[i] + weight_decay_ * (*params_[i]);
      if (kind_ == OptimizerKind::kSgd) {
        *params_[i] -= lr_ * g;
        continue;
      }
      m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
      v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g.cwiseProduct(g);
      const double bc1 = 1.0 - std::pow(beta1_, t_);
      const double bc2 = 1.0 - std::pow(beta2_, t_);
      Eigen::MatrixXd denom = (v_[i] / bc2).cwiseSqrt();
      denom.array() += eps_;
      *params_[i] -= (lr_ / bc1) * m_[i].cwiseQuotient(denom);
    }
  }

private:
  OptimizerKind kind_;
  double lr_;
  double weight_decay_;
  double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  int t_ = 0;
  std::vector<Eigen::MatrixXd*> params_;
  std::vector<Eigen::MatrixXd> m_, v_;
};

}  // namespace satmc
