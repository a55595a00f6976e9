#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "satmc/diffusion.hpp"
#include "satmc/error.hpp"
#include "satmc/graph.hpp"
#include "satmc/rng.hpp"

namespace satmc {

enum class EmbeddingOrigin { kGceSource, kGceTarget, kGieSource, kGieTarget };

struct EmbeddingMatrix {
  Eigen::MatrixXd values;
  EmbeddingOrigin origin = EmbeddingOrigin::kGceSource;
};

inline Eigen::MatrixXd glorot_uniform(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Eigen::MatrixXd w(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) w(i, j) = rng.uniform(-bound, bound);
  return w;
}

/// One graph convolution: act(Op * dropout(X) * W [+ b]). Rectification on
/// hidden layers, identity on the output layer; dropout only in training
/// mode, drawn from the caller's generator.
inline Eigen::MatrixXd graph_conv(const ConvOperator& op, const Eigen::MatrixXd& x,
                                  const Eigen::MatrixXd& w, bool activation) {
  if (op.rows() != x.rows()) fail("shape error", "operator rows must match feature rows");
  if (x.cols() != w.rows()) fail("shape error", "feature dim must match weight rows");
  Eigen::MatrixXd z = op.mul(x) * w;
  return activation ? z.cwiseMax(0.0).eval() : z;
}

struct LayerCache {
  Eigen::MatrixXd mask;      // dropout keep/scale factors; empty in inference
  Eigen::MatrixXd op_input;  // Op * dropout(input); reused by the weight grad
  Eigen::MatrixXd pre_act;
};

/// Stack of graph-conv layers sharing one operator. Biases default off so
/// zero input maps to zero output; a config flag enables them.
struct GraphConvStack {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::MatrixXd> biases;  // 1 x dim rows; empty when disabled
  double dropout = 0.5;

  int num_layers() const { return static_cast<int>(weights.size()); }
  bool has_bias() const { return !biases.empty(); }

  static GraphConvStack init(int in_dim, int hidden_dim, int out_dim, int layers, double dropout,
                             bool with_bias, Rng& rng) {
    if (layers < 1) fail("config error", "encoder needs at least one layer");
    GraphConvStack s;
    s.dropout = dropout;
    int prev = in_dim;
    for (int i = 0; i < layers; ++i) {
      const int next = (i == layers - 1) ? out_dim : hidden_dim;
      s.weights.push_back(glorot_uniform(prev, next, rng));
      if (with_bias) s.biases.push_back(Eigen::MatrixXd::Zero(1, next));
      prev = next;
    }
    return s;
  }

  /// training=true applies inverted dropout to every layer input using the
  /// supplied generator; caches are populated for backward().
  Eigen::MatrixXd forward(const ConvOperator& op, const Eigen::MatrixXd& x, bool training,
                          Rng* rng, std::vector<LayerCache>* caches) const {
    Eigen::MatrixXd h = x;
    if (caches) caches->clear();
    for (int i = 0; i < num_layers(); ++i) {
      LayerCache cache;
      if (training && dropout > 0.0) {
        cache.mask = Eigen::MatrixXd(h.rows(), h.cols());
        const double keep = 1.0 - dropout;
        for (Eigen::Index r = 0; r < h.rows(); ++r)
          for (Eigen::Index c = 0; c < h.cols(); ++c)
            cache.mask(r, c) = rng->uniform() < keep ? 1.0 / keep : 0.0;
        h = h.cwiseProduct(cache.mask);
      }
      cache.op_input = op.mul(h);
      Eigen::MatrixXd z = cache.op_input * weights[i];
      if (has_bias()) z.rowwise() += biases[i].row(0);
      cache.pre_act = z;
      h = (i + 1 < num_layers()) ? z.cwiseMax(0.0).eval() : std::move(z);
      if (caches) caches->push_back(std::move(cache));
    }
    return h;
  }

  Eigen::MatrixXd infer(const ConvOperator& op, const Eigen::MatrixXd& x) const {
    return forward(op, x, false, nullptr, nullptr);
  }

  /// Backpropagates d(loss)/d(output); accumulates weight/bias grads into
  /// w_grads/b_grads (shape-matched, pre-initialized) and returns
  /// d(loss)/d(input).
  Eigen::MatrixXd backward(const ConvOperator& op, const std::vector<LayerCache>& caches,
                           Eigen::MatrixXd grad_out, std::vector<Eigen::MatrixXd>& w_grads,
                           std::vector<Eigen::MatrixXd>* b_grads = nullptr) const {
    for (int i = num_layers() - 1; i >= 0; --i) {
      Eigen::MatrixXd grad_z =
          (i + 1 < num_layers())
              ? grad_out.cwiseProduct((caches[i].pre_act.array() > 0.0).cast<double>().matrix())
              : std::move(grad_out);
      w_grads[i] += caches[i].op_input.transpose() * grad_z;
      if (b_grads) (*b_grads)[i] += grad_z.colwise().sum();
      grad_out = op.mul(grad_z * weights[i].transpose());  // operator is symmetric
      if (caches[i].mask.size() != 0) grad_out = grad_out.cwiseProduct(caches[i].mask);
    }
    return grad_out;
  }

  std::vector<Eigen::MatrixXd> zero_like_weights() const {
    std::vector<Eigen::MatrixXd> g;
    g.reserve(weights.size());
    for (const auto& w : weights) g.emplace_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
    return g;
  }
  std::vector<Eigen::MatrixXd> zero_like_biases() const {
    std::vector<Eigen::MatrixXd> g;
    g.reserve(biases.size());
    for (const auto& b : biases) g.emplace_back(Eigen::MatrixXd::Zero(b.rows(), b.cols()));
    return g;
  }
};

/// All trainable state: the shared-weight consistency encoder, the two
/// private encoders with their discriminators, the optional subspace
/// transforms, and the classifier head. Both domains run through the same
/// gce storage; there is no per-domain copy.
struct EncoderParams {
  GraphConvStack gce;
  Eigen::MatrixXd input_projection;  // shared, applied before layer 0; empty = off
  GraphConvStack gie_source, gie_target;
  Eigen::MatrixXd disc_source, disc_target;  // bilinear discriminators
  Eigen::MatrixXd clf_weight;                // out_dim x c
  Eigen::MatrixXd clf_bias;                  // 1 x c
  Eigen::MatrixXd pi_param_source, pi_param_target;  // Cayley parameters; empty = identity
};

/// Cayley map of the skew-symmetric part of b: (I - S)(I + S)^{-1},
/// always orthogonal, identity at b = 0.
inline Eigen::MatrixXd cayley_orthogonal(const Eigen::MatrixXd& b) {
  const auto n = b.rows();
  const Eigen::MatrixXd s = 0.5 * (b - b.transpose());
  const Eigen::MatrixXd i = Eigen::MatrixXd::Identity(n, n);
  return (i + s).partialPivLu().solve(i - s);
}

/// Chains d(loss)/d(Pi) back to the Cayley parameter b.
inline Eigen::MatrixXd cayley_backward(const Eigen::MatrixXd& b, const Eigen::MatrixXd& pi,
                                       const Eigen::MatrixXd& d_pi) {
  const auto n = b.rows();
  const Eigen::MatrixXd s = 0.5 * (b - b.transpose());
  const Eigen::MatrixXd i = Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd inv_t = (i + s).transpose().partialPivLu().solve(d_pi);
  const Eigen::MatrixXd d_s = -inv_t * (pi + i).transpose();
  return 0.5 * (d_s - d_s.transpose());
}

/// Zero-pads feature matrices on the right to a common width so the shared
/// layer-0 weights are well-formed when raw dims differ.
inline Eigen::MatrixXd pad_features(const Eigen::MatrixXd& x, Eigen::Index width) {
  if (x.cols() == width) return x;
  if (x.cols() > width) fail("shape error", "cannot pad features down");
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(x.rows(), width);
  out.leftCols(x.cols()) = x;
  return out;
}

struct GceForwardCache {
  Eigen::MatrixXd proj_in_s, proj_in_t;  // inputs of the shared projection
  std::vector<LayerCache> source, target;
};

/// Shared-weight forward over both domains' operators. Inputs must already
/// share the layer-0 width (see pad_features).
inline std::pair<EmbeddingMatrix, EmbeddingMatrix> gce_forward(
    const ConvOperator& op_s, const ConvOperator& op_t, const Eigen::MatrixXd& x_s,
    const Eigen::MatrixXd& x_t, const EncoderParams& params, bool training = false,
    Rng* rng = nullptr, GceForwardCache* cache = nullptr) {
  if (x_s.cols() != x_t.cols()) fail("shape error", "gce_forward requires a common feature width");
  Eigen::MatrixXd in_s = x_s, in_t = x_t;
  if (params.input_projection.size() != 0) {
    if (cache) {
      cache->proj_in_s = in_s;
      cache->proj_in_t = in_t;
    }
    in_s = in_s * params.input_projection;
    in_t = in_t * params.input_projection;
  }
  EmbeddingMatrix es{params.gce.forward(op_s, in_s, training, rng, cache ? &cache->source : nullptr),
                     EmbeddingOrigin::kGceSource};
  EmbeddingMatrix et{params.gce.forward(op_t, in_t, training, rng, cache ? &cache->target : nullptr),
                     EmbeddingOrigin::kGceTarget};
  return {std::move(es), std::move(et)};
}

/// Row permutation of the feature matrix; the corruption used by the
/// self-supervised objective. Structure is untouched.
inline Eigen::MatrixXd dgi_corrupt(const Eigen::MatrixXd& x, std::uint64_t seed) {
  Rng rng(seed);
  const auto perm = rng.permutation(static_cast<int>(x.rows()));
  Eigen::MatrixXd out(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) out.row(i) = x.row(perm[i]);
  return out;
}

/// Private-encoder embedding over the raw renormalized adjacency.
inline EmbeddingMatrix gie_embed(const AttributedGraph& graph, const GraphConvStack& stack,
                                 EmbeddingOrigin origin, bool training = false, Rng* rng = nullptr,
                                 std::vector<LayerCache>* caches = nullptr) {
  const ConvOperator op = ConvOperator::from_sparse(gcn_operator(graph.adjacency));
  return {stack.forward(op, graph.features, training, rng, caches), origin};
}

inline double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

/// -log sigma(z) = softplus(-z), stable at both tails.
inline double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

/// Binary cross-entropy of discriminator logits: positives should score
/// high, negatives low; averaged over all 2n samples.
inline double dgi_bce_from_logits(const Eigen::VectorXd& pos, const Eigen::VectorXd& neg) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < pos.size(); ++i) total += softplus(-pos[i]);
  for (Eigen::Index i = 0; i < neg.size(); ++i) total += softplus(neg[i]);
  return total / static_cast<double>(pos.size() + neg.size());
}

struct DgiGrads {
  double value = 0.0;
  std::vector<Eigen::MatrixXd> d_weights;
  std::vector<Eigen::MatrixXd> d_biases;
  Eigen::MatrixXd d_disc;
};

/// Self-supervision loss for one domain: a bilinear discriminator scores
/// (node embedding, readout) pairs, where the readout is the logistic of
/// the mean positive embedding and negatives come from row-permuted
/// features. Deterministic in (params, seed).
inline DgiGrads dgi_loss_grads(const ConvOperator& op, const Eigen::MatrixXd& features,
                               const GraphConvStack& stack, const Eigen::MatrixXd& disc,
                               std::uint64_t seed, bool training = false) {
  Rng drop_rng(mix_seed(seed, 0x9d5f));
  std::vector<LayerCache> cache_pos, cache_neg;
  const Eigen::MatrixXd x_neg = dgi_corrupt(features, mix_seed(seed, 0x3c1));
  const Eigen::MatrixXd h_pos = stack.forward(op, features, training, &drop_rng, &cache_pos);
  const Eigen::MatrixXd h_neg = stack.forward(op, x_neg, training, &drop_rng, &cache_neg);

  const auto n = h_pos.rows();
  const Eigen::VectorXd mean = h_pos.colwise().mean();
  const Eigen::VectorXd readout = mean.unaryExpr([](double z) { return logistic(z); });

  const Eigen::VectorXd ms = disc * readout;
  const Eigen::VectorXd z_pos = h_pos * ms;
  const Eigen::VectorXd z_neg = h_neg * ms;

  DgiGrads g;
  g.value = dgi_bce_from_logits(z_pos, z_neg);

  const double inv_count = 1.0 / static_cast<double>(2 * n);
  Eigen::VectorXd gz_pos(n), gz_neg(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    gz_pos[i] = -(1.0 - logistic(z_pos[i])) * inv_count;
    gz_neg[i] = logistic(z_neg[i]) * inv_count;
  }

  g.d_disc = (h_pos.transpose() * gz_pos + h_neg.transpose() * gz_neg) * readout.transpose();
  Eigen::MatrixXd gh_pos = gz_pos * ms.transpose();
  const Eigen::MatrixXd gh_neg = gz_neg * ms.transpose();

  // readout depends on every positive row through the mean
  const Eigen::VectorXd g_readout =
      disc.transpose() * (h_pos.transpose() * gz_pos + h_neg.transpose() * gz_neg);
  const Eigen::VectorXd g_mean =
      readout.cwiseProduct(Eigen::VectorXd::Ones(readout.size()) - readout).cwiseProduct(g_readout);
  gh_pos.rowwise() += g_mean.transpose() / static_cast<double>(n);

  g.d_weights = stack.zero_like_weights();
  g.d_biases = stack.zero_like_biases();
  auto* biases = stack.has_bias() ? &g.d_biases : nullptr;
  stack.backward(op, cache_pos, gh_pos, g.d_weights, biases);
  stack.backward(op, cache_neg, gh_neg, g.d_weights, biases);
  return g;
}

inline DgiGrads dgi_loss_grads(const AttributedGraph& graph, const GraphConvStack& stack,
                               const Eigen::MatrixXd& disc, std::uint64_t seed,
                               bool training = false) {
  return dgi_loss_grads(ConvOperator::from_sparse(gcn_operator(graph.adjacency)), graph.features,
                        stack, disc, seed, training);
}

/// Loss-only entry point; see dgi_loss_grads.
inline double dgi_loss(const AttributedGraph& graph, const GraphConvStack& stack,
                       const Eigen::MatrixXd& disc, std::uint64_t seed, bool training = false) {
  return dgi_loss_grads(graph, stack, disc, seed, training).value;
}

}  // namespace satmc
