#pragma once

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "satmc/diffusion.hpp"
#include "satmc/encoders.hpp"
#include "satmc/error.hpp"
#include "satmc/evaluation.hpp"
#include "satmc/graph.hpp"
#include "satmc/objectives.hpp"
#include "satmc/optimizer.hpp"
#include "satmc/rng.hpp"

namespace satmc {

struct TrainConfig {
  double alpha = 0.05;
  double xi = 1e-3;
  double lambda = 0.1;
  int epochs = 100;
  int gie_epochs = 300;
  double learning_rate = 0.02;
  double gie_learning_rate = 0.01;
  double weight_decay = 5e-4;
  int hidden_dim = 128;
  int out_dim = 16;
  int gie_hidden_dim = 0;  // 0: same as hidden_dim
  int gie_out_dim = 0;     // 0: same as out_dim
  int num_layers = 2;
  double dropout = 0.5;
  std::uint64_t seed = 0;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  bool use_bias = false;
  bool learnable_pi = false;
  double oi_scale = 1.0;
  int input_projection_dim = 0;  // 0: zero-pad only
  DiffusionMode diffusion_mode = DiffusionMode::kClosed;
  int series_order = 64;
  bool track_per_epoch = true;  // per-epoch inference metrics (diagnostic)

  // ablation switches
  bool disable_diffusion = false;
  bool disable_wass = false;
  bool disable_oi = false;
  bool disable_entropy = false;

  void validate() const {
    if (alpha <= 0.0 || alpha >= 1.0) fail("config error", "alpha must lie in (0,1)");
    if (lambda < 0.0) fail("config error", "lambda must be >= 0");
    if (epochs < 1) fail("config error", "epochs must be >= 1");
    if (gie_epochs < 0) fail("config error", "gie_epochs must be >= 0");
    if (hidden_dim < 1 || out_dim < 1) fail("config error", "dimensions must be >= 1");
    if (num_layers < 1) fail("config error", "num_layers must be >= 1");
    if (dropout < 0.0 || dropout >= 1.0) fail("config error", "dropout must lie in [0,1)");
    if (xi < 0.0) fail("config error", "xi must be >= 0");
    if (oi_scale < 0.0) fail("config error", "oi_scale must be >= 0");
  }
};

struct TrainHistory {
  std::vector<LossReport> reports;
  std::vector<double> target_accuracy;  // NaN when no held-out truth exists
  std::vector<double> mmd;              // NaN when tracking is off
  std::vector<double> epoch_seconds;
};

struct GiePretrainResult {
  GraphConvStack stack;
  Eigen::MatrixXd discriminator;
  EmbeddingMatrix embedding;
  std::vector<double> losses;
};

namespace detail {

// stream tags for component-independent rng derivation
inline constexpr std::uint64_t kStreamGce = 11;
inline constexpr std::uint64_t kStreamGieSource = 12;
inline constexpr std::uint64_t kStreamGieTarget = 13;
inline constexpr std::uint64_t kStreamClassifier = 14;
inline constexpr std::uint64_t kStreamEpoch = 15;

inline ConvOperator structure_operator(const AttributedGraph& g, const TrainConfig& cfg) {
  if (cfg.disable_diffusion) return ConvOperator::from_sparse(gcn_operator(g.adjacency));
  DiffusionMode mode = cfg.diffusion_mode;
  if (g.num_nodes > 5000) mode = DiffusionMode::kSeries;  // inverse cost grows cubically
  return ConvOperator::from_dense(diffuse(g, cfg.alpha, cfg.xi, mode, cfg.series_order).matrix);
}

}  // namespace detail

/// Trains one private encoder by minimizing the self-supervision loss for
/// gie_epochs; returns the trained stack, its discriminator, and the frozen
/// inference-mode anchor embedding.
inline GiePretrainResult pretrain_gie(const AttributedGraph& graph, const TrainConfig& cfg,
                                      std::uint64_t stream, EmbeddingOrigin origin) {
  cfg.validate();
  Rng init_rng = Rng(cfg.seed).fork(stream);
  const int hidden = cfg.gie_hidden_dim > 0 ? cfg.gie_hidden_dim : cfg.hidden_dim;
  const int out = cfg.gie_out_dim > 0 ? cfg.gie_out_dim : cfg.out_dim;

  GiePretrainResult r;
  r.stack = GraphConvStack::init(graph.feature_dim(), hidden, out, cfg.num_layers, cfg.dropout,
                                 cfg.use_bias, init_rng);
  r.discriminator = glorot_uniform(out, out, init_rng);

  const ConvOperator op = ConvOperator::from_sparse(gcn_operator(graph.adjacency));
  Optimizer opt(cfg.optimizer, cfg.gie_learning_rate, cfg.weight_decay);
  for (auto& w : r.stack.weights) opt.attach(&w);
  for (auto& b : r.stack.biases) opt.attach(&b);
  opt.attach(&r.discriminator);

  for (int epoch = 0; epoch < cfg.gie_epochs; ++epoch) {
    const std::uint64_t epoch_seed = mix_seed(init_rng.seed(), 1000 + epoch);
    DgiGrads g = dgi_loss_grads(op, graph.features, r.stack, r.discriminator, epoch_seed, true);
    if (!std::isfinite(g.value))
      fail("divergence error", "non-finite self-supervision loss at epoch " + std::to_string(epoch));
    r.losses.push_back(g.value);
    std::vector<Eigen::MatrixXd> grads = std::move(g.d_weights);
    for (auto& b : g.d_biases) grads.push_back(std::move(b));
    grads.push_back(std::move(g.d_disc));
    opt.step(grads);
  }
  r.embedding = {r.stack.infer(op, graph.features), origin};
  return r;
}

struct TrainResult {
  EncoderParams params;
  TrainHistory history;
  Eigen::MatrixXd embedding_source;  // final inference-mode representations
  Eigen::MatrixXd embedding_target;
  std::vector<int> predictions;
  double final_target_accuracy = std::numeric_limits<double>::quiet_NaN();
};

/// Lowest-index argmax per row.
inline std::vector<int> predict_target(const EncoderParams& params,
                                       const Eigen::MatrixXd& embedding_target) {
  const Eigen::MatrixXd logits =
      (embedding_target * params.clf_weight).rowwise() + params.clf_bias.row(0);
  std::vector<int> pred(logits.rows());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    int best = 0;
    for (Eigen::Index j = 1; j < logits.cols(); ++j)
      if (logits(i, j) > logits(i, best)) best = static_cast<int>(j);
    pred[i] = best;
  }
  return pred;
}

/// Full pipeline: structure transformation once per graph, private-encoder
/// pretraining, then the joint optimization loop over the shared encoder,
/// classifier, and optional subspace transforms. Target labels are absent by
/// construction (DomainPair sentinels); the held-out truth is touched only
/// for the per-epoch diagnostic accuracy column.
inline TrainResult train_satmc(const DomainPair& pair, const TrainConfig& cfg) {
  cfg.validate();
  for (int l : pair.target.labels)
    if (l != kUnlabeled) fail("firewall error", "target graph carries labels into training");
  if (!pair.source.fully_labeled()) fail("format error", "source graph must be fully labeled");

  const ConvOperator op_s = detail::structure_operator(pair.source, cfg);
  const ConvOperator op_t = detail::structure_operator(pair.target, cfg);

  const Eigen::Index width = std::max(pair.source.features.cols(), pair.target.features.cols());
  const Eigen::MatrixXd x_s = pad_features(pair.source.features, width);
  const Eigen::MatrixXd x_t = pad_features(pair.target.features, width);

  TrainResult result;
  EncoderParams& params = result.params;

  Rng gce_rng = Rng(cfg.seed).fork(detail::kStreamGce);
  int gce_in = static_cast<int>(width);
  if (cfg.input_projection_dim > 0) {
    params.input_projection = glorot_uniform(width, cfg.input_projection_dim, gce_rng);
    gce_in = cfg.input_projection_dim;
  }
  params.gce = GraphConvStack::init(gce_in, cfg.hidden_dim, cfg.out_dim, cfg.num_layers,
                                    cfg.dropout, cfg.use_bias, gce_rng);
  Rng clf_rng = Rng(cfg.seed).fork(detail::kStreamClassifier);
  params.clf_weight = glorot_uniform(cfg.out_dim, pair.num_classes, clf_rng);
  params.clf_bias = Eigen::MatrixXd::Zero(1, pair.num_classes);

  Eigen::MatrixXd anchor_s, anchor_t;
  if (!cfg.disable_oi) {
    GiePretrainResult gie_s =
        pretrain_gie(pair.source, cfg, detail::kStreamGieSource, EmbeddingOrigin::kGieSource);
    GiePretrainResult gie_t =
        pretrain_gie(pair.target, cfg, detail::kStreamGieTarget, EmbeddingOrigin::kGieTarget);
    anchor_s = std::move(gie_s.embedding.values);
    anchor_t = std::move(gie_t.embedding.values);
    params.gie_source = std::move(gie_s.stack);
    params.gie_target = std::move(gie_t.stack);
    params.disc_source = std::move(gie_s.discriminator);
    params.disc_target = std::move(gie_t.discriminator);
    if (cfg.learnable_pi) {
      params.pi_param_source = Eigen::MatrixXd::Zero(pair.source.num_nodes, pair.source.num_nodes);
      params.pi_param_target = Eigen::MatrixXd::Zero(pair.target.num_nodes, pair.target.num_nodes);
    }
  }

  Optimizer opt(cfg.optimizer, cfg.learning_rate, cfg.weight_decay);
  if (params.input_projection.size() != 0) opt.attach(&params.input_projection);
  for (auto& w : params.gce.weights) opt.attach(&w);
  for (auto& b : params.gce.biases) opt.attach(&b);
  opt.attach(&params.clf_weight);
  opt.attach(&params.clf_bias);
  if (cfg.learnable_pi && !cfg.disable_oi) {
    opt.attach(&params.pi_param_source);
    opt.attach(&params.pi_param_target);
  }

  TrainHistory& history = result.history;
  for (int v = 1; v <= cfg.epochs; ++v) {
    const auto t0 = std::chrono::steady_clock::now();
    Rng epoch_rng(mix_seed(Rng(cfg.seed).fork(detail::kStreamEpoch).seed(), v));

    GceForwardCache cache;
    auto [emb_s, emb_t] = gce_forward(op_s, op_t, x_s, x_t, params, true, &epoch_rng, &cache);
    Eigen::MatrixXd& es = emb_s.values;
    Eigen::MatrixXd& et = emb_t.values;

    Eigen::MatrixXd grad_es = Eigen::MatrixXd::Zero(es.rows(), es.cols());
    Eigen::MatrixXd grad_et = Eigen::MatrixXd::Zero(et.rows(), et.cols());

    // label-space path
    const Eigen::MatrixXd logits_s = (es * params.clf_weight).rowwise() + params.clf_bias.row(0);
    const double l_cls = cross_entropy_loss(logits_s, pair.source.labels);
    const Eigen::MatrixXd g_logits_s = cross_entropy_grad(logits_s, pair.source.labels);
    const Eigen::MatrixXd logits_t = (et * params.clf_weight).rowwise() + params.clf_bias.row(0);
    const double l_entropy = entropy_loss(logits_t);
    const double eta =
        cfg.disable_entropy ? 0.0 : static_cast<double>(v) / static_cast<double>(cfg.epochs);
    const Eigen::MatrixXd g_logits_t = eta > 0.0
                                           ? Eigen::MatrixXd(eta * entropy_grad(logits_t))
                                           : Eigen::MatrixXd::Zero(et.rows(), pair.num_classes);
    Eigen::MatrixXd g_clf_w = es.transpose() * g_logits_s + et.transpose() * g_logits_t;
    Eigen::MatrixXd g_clf_b = (g_logits_s.colwise().sum() + g_logits_t.colwise().sum());
    grad_es += g_logits_s * params.clf_weight.transpose();
    grad_et += g_logits_t * params.clf_weight.transpose();

    // distribution-alignment path
    double l_wass = 0.0;
    if (!cfg.disable_wass && cfg.lambda > 0.0) {
      const GaussianSummary sum_s = gaussian_summary(es);
      const GaussianSummary sum_t = gaussian_summary(et);
      const WassersteinGrads wg = empirical_wasserstein_grads(sum_s, sum_t);
      l_wass = wg.value;
      grad_es += cfg.lambda * summary_backward(es, sum_s, wg.d_mean_s, wg.d_cov_s);
      grad_et += cfg.lambda * summary_backward(et, sum_t, wg.d_mean_t, wg.d_cov_t);
    } else if (!cfg.disable_wass) {
      l_wass = empirical_wasserstein(gaussian_summary(es), gaussian_summary(et));
    }

    // private-information reduction path
    double l_oi = 0.0;
    Eigen::MatrixXd g_pi_s, g_pi_t, pi_s, pi_t;
    if (!cfg.disable_oi) {
      if (cfg.learnable_pi) {
        pi_s = cayley_orthogonal(params.pi_param_source);
        pi_t = cayley_orthogonal(params.pi_param_target);
      }
      OiDomainGrads os = oi_domain_grads(es, anchor_s, pi_s);
      OiDomainGrads ot = oi_domain_grads(et, anchor_t, pi_t);
      l_oi = cfg.oi_scale * (os.value + ot.value);
      grad_es += cfg.oi_scale * os.d_xhat;
      grad_et += cfg.oi_scale * ot.d_xhat;
      if (cfg.learnable_pi) {
        g_pi_s = cayley_backward(params.pi_param_source, pi_s, cfg.oi_scale * os.d_pi);
        g_pi_t = cayley_backward(params.pi_param_target, pi_t, cfg.oi_scale * ot.d_pi);
      }
    }

    LossReport report = joint_objective(l_wass, l_oi, l_cls, l_entropy, v, cfg.epochs,
                                        cfg.disable_wass ? 0.0 : cfg.lambda);
    if (cfg.disable_entropy) {  // eta forced to zero
      report.eta = 0.0;
      report.l_label = report.l_cls;
      report.total = report.l_oi + report.l_label + (cfg.disable_wass ? 0.0 : cfg.lambda) * l_wass;
    }
    if (!std::isfinite(report.total))
      fail("divergence error", "non-finite total loss at epoch " + std::to_string(v));

    // backward through the shared encoder; both domains accumulate into the
    // same weight gradients
    std::vector<Eigen::MatrixXd> gce_w_grads = params.gce.zero_like_weights();
    std::vector<Eigen::MatrixXd> gce_b_grads = params.gce.zero_like_biases();
    auto* b_grads = params.gce.has_bias() ? &gce_b_grads : nullptr;
    const Eigen::MatrixXd g_in_s =
        params.gce.backward(op_s, cache.source, grad_es, gce_w_grads, b_grads);
    const Eigen::MatrixXd g_in_t =
        params.gce.backward(op_t, cache.target, grad_et, gce_w_grads, b_grads);
    Eigen::MatrixXd g_proj;
    if (params.input_projection.size() != 0)
      g_proj = cache.proj_in_s.transpose() * g_in_s + cache.proj_in_t.transpose() * g_in_t;

    std::vector<Eigen::MatrixXd> grads;
    if (params.input_projection.size() != 0) grads.push_back(std::move(g_proj));
    for (auto& g : gce_w_grads) grads.push_back(std::move(g));
    for (auto& g : gce_b_grads) grads.push_back(std::move(g));
    grads.push_back(std::move(g_clf_w));
    grads.push_back(std::move(g_clf_b));
    if (cfg.learnable_pi && !cfg.disable_oi) {
      grads.push_back(std::move(g_pi_s));
      grads.push_back(std::move(g_pi_t));
    }
    opt.step(grads);

    history.reports.push_back(report);
    double acc = std::numeric_limits<double>::quiet_NaN();
    double mmd = std::numeric_limits<double>::quiet_NaN();
    if (cfg.track_per_epoch) {
      auto [inf_s, inf_t] = gce_forward(op_s, op_t, x_s, x_t, params, false);
      if (!pair.target_truth.empty())
        acc = accuracy(predict_target(params, inf_t.values), pair.target_truth);
      mmd = mmd_rbf(inf_s.values, inf_t.values);
    }
    history.target_accuracy.push_back(acc);
    history.mmd.push_back(mmd);
    history.epoch_seconds.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }

  auto [final_s, final_t] = gce_forward(op_s, op_t, x_s, x_t, params, false);
  result.embedding_source = std::move(final_s.values);
  result.embedding_target = std::move(final_t.values);
  result.predictions = predict_target(params, result.embedding_target);
  if (!pair.target_truth.empty())
    result.final_target_accuracy = accuracy(result.predictions, pair.target_truth);
  return result;
}

}  // namespace satmc
