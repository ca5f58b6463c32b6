#pragma once

#include <random>
#include <span>
#include <vector>

#include "bgae/checkpoint.hpp"
#include "bgae/tensor.hpp"

namespace bgae {

enum class Variant { Bgae, Bvgae };
enum class FusionMode { Fixed, Attention };

inline constexpr double kAttentionSlope = 0.01;

/// One single-layer linear GCN shared by both views. BVGAE carries separate
/// mean and log-variance heads instead of `weight`.
struct EncoderParams {
  Variant variant = Variant::Bgae;
  Matrix weight;
  Matrix weight_mu;
  Matrix weight_logvar;

  Index dim() const;
  static EncoderParams glorot(Variant variant, Index num_features, Index dim, std::mt19937_64& rng);
};

struct FusionParams {
  FusionMode mode = FusionMode::Fixed;
  Matrix w_local;     // d x 1, attention only
  Matrix w_diffused;  // d x 1, attention only

  static FusionParams init(FusionMode mode, Index dim, std::mt19937_64& rng);
};

struct ModelParams {
  EncoderParams encoder;
  FusionParams fusion;

  /// Trainable matrices in a fixed order (the optimizer and checkpoints rely on it).
  std::vector<Matrix*> trainable();
  std::vector<NamedMatrix> named() const;
  static ModelParams from_named(const std::vector<NamedMatrix>& tensors);

  static ModelParams init(Variant variant, FusionMode fusion, Index num_features, Index dim,
                          std::mt19937_64& rng);
};

struct EncoderLeaves {
  Tensor weight;
  Tensor weight_mu;
  Tensor weight_logvar;
};

struct FusionLeaves {
  Tensor w_local;
  Tensor w_diffused;
};

struct ModelLeaves {
  Variant variant = Variant::Bgae;
  FusionMode fusion_mode = FusionMode::Fixed;
  EncoderLeaves encoder;
  FusionLeaves fusion;
  /// Same order as ModelParams::trainable().
  std::vector<Tensor> trainable;
};

/// Places the parameters on `tape` as leaves (variables when `trainable`).
ModelLeaves bind(Tape& tape, const ModelParams& params, bool trainable = true);
std::vector<Matrix> gradients(const ModelLeaves& leaves);

struct ViewEmbedding {
  Tensor z;
  /// Set for BVGAE only.
  Tensor mu;
  Tensor log_var;
};

struct EmbeddingPair {
  ViewEmbedding local;     // adjacency view
  ViewEmbedding diffused;  // diffusion view
};

/// bgae: Z = view X W. bvgae: mu = view X W_mu, log_var = view X W_logvar and
/// z = reparameterize(mu, log_var); with `rng == nullptr` z is mu.
ViewEmbedding encode(const SparseOperand& view, const SparseOperand& features,
                     const EncoderLeaves& encoder, Variant variant, std::mt19937_64* rng);

EmbeddingPair encode_views(const SparseOperand& local_view, const SparseOperand& diffused_view,
                           const SparseOperand& features, const ModelLeaves& leaves,
                           std::mt19937_64* rng);

/// phi_local (N x 1): first coordinate of the softmax over
/// (LeakyReLU(w1^T z_i^local), LeakyReLU(w2^T z_i^diffused)).
Tensor attention_weights(const Tensor& z_local, const Tensor& z_diffused, const FusionLeaves& fusion);

Tensor fuse(const Tensor& z_local, const Tensor& z_diffused, FusionMode mode,
            const FusionLeaves& fusion);

/// z_u^T z_v for each pair.
Tensor edge_logits(const Tensor& z, std::span<const Edge> pairs);
/// sigmoid(z_u^T z_v) for each pair.
Tensor decode_edges(const Tensor& z, std::span<const Edge> pairs);

/// Deterministic fused embedding (BVGAE uses the means) for evaluation.
Matrix embed(const ModelParams& params, const SparseOperand& local_view,
             const SparseOperand& diffused_view, const SparseOperand& features);

}  // namespace bgae
