#include "bgae/model.hpp"

#include <cmath>

#include "bgae/errors.hpp"

namespace bgae {
namespace {

Matrix glorot_uniform(Index rows, Index cols, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) m(i, j) = dist(rng);
  }
  return m;
}

const Matrix& find(const std::vector<NamedMatrix>& tensors, const std::string& name) {
  for (const auto& t : tensors) {
    if (t.name == name) return t.value;
  }
  throw ValidationError("checkpoint has no tensor named '" + name + "'");
}

bool has(const std::vector<NamedMatrix>& tensors, const std::string& name) {
  for (const auto& t : tensors) {
    if (t.name == name) return true;
  }
  return false;
}

}  // namespace

Index EncoderParams::dim() const {
  return variant == Variant::Bgae ? weight.cols() : weight_mu.cols();
}

EncoderParams EncoderParams::glorot(Variant variant, Index num_features, Index dim,
                                    std::mt19937_64& rng) {
  if (dim < 1 || num_features < 1) throw ValidationError("encoder needs num_features >= 1 and dim >= 1");
  EncoderParams p;
  p.variant = variant;
  if (variant == Variant::Bgae) {
    p.weight = glorot_uniform(num_features, dim, rng);
  } else {
    p.weight_mu = glorot_uniform(num_features, dim, rng);
    p.weight_logvar = glorot_uniform(num_features, dim, rng);
  }
  return p;
}

FusionParams FusionParams::init(FusionMode mode, Index dim, std::mt19937_64& rng) {
  FusionParams p;
  p.mode = mode;
  if (mode == FusionMode::Attention) {
    p.w_local = glorot_uniform(dim, 1, rng);
    p.w_diffused = glorot_uniform(dim, 1, rng);
  }
  return p;
}

ModelParams ModelParams::init(Variant variant, FusionMode fusion, Index num_features, Index dim,
                              std::mt19937_64& rng) {
  ModelParams p;
  p.encoder = EncoderParams::glorot(variant, num_features, dim, rng);
  p.fusion = FusionParams::init(fusion, dim, rng);
  return p;
}

std::vector<Matrix*> ModelParams::trainable() {
  std::vector<Matrix*> out;
  if (encoder.variant == Variant::Bgae) {
    out.push_back(&encoder.weight);
  } else {
    out.push_back(&encoder.weight_mu);
    out.push_back(&encoder.weight_logvar);
  }
  if (fusion.mode == FusionMode::Attention) {
    out.push_back(&fusion.w_local);
    out.push_back(&fusion.w_diffused);
  }
  return out;
}

std::vector<NamedMatrix> ModelParams::named() const {
  std::vector<NamedMatrix> out;
  if (encoder.variant == Variant::Bgae) {
    out.push_back({"encoder.weight", encoder.weight});
  } else {
    out.push_back({"encoder.weight_mu", encoder.weight_mu});
    out.push_back({"encoder.weight_logvar", encoder.weight_logvar});
  }
  if (fusion.mode == FusionMode::Attention) {
    out.push_back({"fusion.w_local", fusion.w_local});
    out.push_back({"fusion.w_diffused", fusion.w_diffused});
  }
  return out;
}

ModelParams ModelParams::from_named(const std::vector<NamedMatrix>& tensors) {
  ModelParams p;
  if (has(tensors, "encoder.weight")) {
    p.encoder.variant = Variant::Bgae;
    p.encoder.weight = find(tensors, "encoder.weight");
  } else {
    p.encoder.variant = Variant::Bvgae;
    p.encoder.weight_mu = find(tensors, "encoder.weight_mu");
    p.encoder.weight_logvar = find(tensors, "encoder.weight_logvar");
  }
  if (has(tensors, "fusion.w_local")) {
    p.fusion.mode = FusionMode::Attention;
    p.fusion.w_local = find(tensors, "fusion.w_local");
    p.fusion.w_diffused = find(tensors, "fusion.w_diffused");
  }
  return p;
}

ModelLeaves bind(Tape& tape, const ModelParams& params, bool trainable) {
  auto leaf = [&](const Matrix& m) { return trainable ? tape.variable(m) : tape.constant(m); };
  ModelLeaves leaves;
  leaves.variant = params.encoder.variant;
  leaves.fusion_mode = params.fusion.mode;
  if (params.encoder.variant == Variant::Bgae) {
    leaves.encoder.weight = leaf(params.encoder.weight);
    leaves.trainable.push_back(leaves.encoder.weight);
  } else {
    leaves.encoder.weight_mu = leaf(params.encoder.weight_mu);
    leaves.encoder.weight_logvar = leaf(params.encoder.weight_logvar);
    leaves.trainable.push_back(leaves.encoder.weight_mu);
    leaves.trainable.push_back(leaves.encoder.weight_logvar);
  }
  if (params.fusion.mode == FusionMode::Attention) {
    leaves.fusion.w_local = leaf(params.fusion.w_local);
    leaves.fusion.w_diffused = leaf(params.fusion.w_diffused);
    leaves.trainable.push_back(leaves.fusion.w_local);
    leaves.trainable.push_back(leaves.fusion.w_diffused);
  }
  return leaves;
}

std::vector<Matrix> gradients(const ModelLeaves& leaves) {
  std::vector<Matrix> out;
  out.reserve(leaves.trainable.size());
  for (const auto& t : leaves.trainable) out.push_back(t.grad());
  return out;
}

namespace {

/// Propagates already projected features (X W) through one view.
ViewEmbedding propagate(const SparseOperand& view, const Tensor& projected, const Tensor& projected_logvar,
                        Variant variant, std::mt19937_64* rng) {
  ViewEmbedding out;
  if (variant == Variant::Bgae) {
    out.z = sparse_matmul(view, projected);
    return out;
  }
  out.mu = sparse_matmul(view, projected);
  out.log_var = sparse_matmul(view, projected_logvar);
  out.z = rng != nullptr ? reparameterize(out.mu, out.log_var, *rng) : out.mu;
  return out;
}

}  // namespace

ViewEmbedding encode(const SparseOperand& view, const SparseOperand& features,
                     const EncoderLeaves& encoder, Variant variant, std::mt19937_64* rng) {
  if (variant == Variant::Bgae) return propagate(view, sparse_matmul(features, encoder.weight), {}, variant, rng);
  return propagate(view, sparse_matmul(features, encoder.weight_mu),
                   sparse_matmul(features, encoder.weight_logvar), variant, rng);
}

EmbeddingPair encode_views(const SparseOperand& local_view, const SparseOperand& diffused_view,
                           const SparseOperand& features, const ModelLeaves& leaves,
                           std::mt19937_64* rng) {
  // X W is shared by both views, so it is computed (and differentiated) once.
  const bool bgae = leaves.variant == Variant::Bgae;
  const Tensor projected = sparse_matmul(features, bgae ? leaves.encoder.weight : leaves.encoder.weight_mu);
  const Tensor projected_logvar = bgae ? Tensor{} : sparse_matmul(features, leaves.encoder.weight_logvar);
  EmbeddingPair pair;
  pair.local = propagate(local_view, projected, projected_logvar, leaves.variant, rng);
  pair.diffused = propagate(diffused_view, projected, projected_logvar, leaves.variant, rng);
  return pair;
}

Tensor attention_weights(const Tensor& z_local, const Tensor& z_diffused, const FusionLeaves& fusion) {
  const Tensor score_local = leaky_relu(matmul(z_local, fusion.w_local), kAttentionSlope);
  const Tensor score_diffused = leaky_relu(matmul(z_diffused, fusion.w_diffused), kAttentionSlope);
  // exp(a) / (exp(a) + exp(b)) == sigmoid(a - b)
  return sigmoid(sub(score_local, score_diffused));
}

Tensor fuse(const Tensor& z_local, const Tensor& z_diffused, FusionMode mode,
            const FusionLeaves& fusion) {
  if (z_local.rows() != z_diffused.rows() || z_local.cols() != z_diffused.cols()) {
    throw ShapeError("fuse: view embeddings differ in shape");
  }
  if (mode == FusionMode::Fixed) return scalar_mul(add(z_local, z_diffused), 0.5);

  const Tensor phi_local = attention_weights(z_local, z_diffused, fusion);
  const Tensor phi_diffused = add_scalar(scalar_mul(phi_local, -1.0), 1.0);
  return add(scale_rows(z_local, phi_local), scale_rows(z_diffused, phi_diffused));
}

Tensor edge_logits(const Tensor& z, std::span<const Edge> pairs) { return row_dot(z, pairs); }

Tensor decode_edges(const Tensor& z, std::span<const Edge> pairs) {
  return sigmoid(edge_logits(z, pairs));
}

Matrix embed(const ModelParams& params, const SparseOperand& local_view,
             const SparseOperand& diffused_view, const SparseOperand& features) {
  Tape tape(false);
  const auto leaves = bind(tape, params, false);
  const auto pair = encode_views(local_view, diffused_view, features, leaves, nullptr);
  return fuse(pair.local.z, pair.diffused.z, params.fusion.mode, leaves.fusion).value();
}

}  // namespace bgae
