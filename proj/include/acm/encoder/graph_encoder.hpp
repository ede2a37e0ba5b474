#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "acm/classifier/model.hpp"
#include "acm/core/autodiff.hpp"
#include "acm/core/nn.hpp"
#include "acm/core/parameters.hpp"
#include "acm/corpus/cluster.hpp"
#include "acm/corpus/similarity.hpp"

namespace acm::encoder {

struct EncoderConfig {
  std::size_t layers = 2;
  std::size_t heads = 4;
  std::size_t dim = 64;
  std::size_t ffn = 128;
  /// Width of the Gaussian relation bias.
  double sigma = 1.0;
  /// Weight of the β_iβ_j attribute term.
  double alpha2 = 0.4;
  /// Size of the learned paragraph-position table.
  std::size_t max_paragraphs = 64;
};

/// Throws ConfigError on an inconsistent configuration.
void validate(const EncoderConfig& config);

/// R[i][j] = −(1 − G[i][j])² / (2σ²).
core::Tensor relation_bias(const corpus::SimilarityGraph& graph, double sigma);

/// α₂·β_iβ_j + R_ij, the score offset every head adds before its softmax.
core::Tensor conditioning_bias(std::span<const double> beta, const core::Tensor& relation,
                               double alpha2);

/// Self-attention over paragraph states x [L×d] with
///   e_ij = (x_i W_Q)(x_j W_K)ᵀ/√d_head + α₂β_iβ_j,  α = softmax_j(e_ij + R_ij).
core::Var conditioned_attention(core::Tape& tape, const core::nn::AttentionWeights& weights,
                                core::Var x, const core::Tensor& relation,
                                std::span<const double> beta, double alpha2,
                                core::nn::AttentionTrace* trace = nullptr);

/// Per-cluster inputs of the graph layer, computed once: the truncated model
/// input, one β per surviving paragraph and the relation bias between them.
struct ClusterConditioning {
  corpus::ModelInput input;
  std::vector<double> beta;
  core::Tensor relation;
};

/// With no classifier every β is zero, which disables the attribute term.
ClusterConditioning prepare_cluster(const corpus::DocumentCluster& cluster,
                                    const classifier::ClassifierModel* classifier,
                                    std::size_t target_class, const EncoderConfig& config,
                                    std::size_t max_input_tokens);

struct EncoderTrace {
  std::vector<core::nn::AttentionTrace> layers;
};

/// Stack of pre-norm blocks (conditioned attention, feed-forward, residuals)
/// over paragraph embeddings: the mean of each paragraph's token embeddings
/// plus a learned paragraph-position row.
class GraphEncoder {
 public:
  static GraphEncoder create(core::ParameterStore& store, const std::string& prefix,
                             const EncoderConfig& config, core::Rng& rng);
  static GraphEncoder bind(core::ParameterStore& store, const std::string& prefix,
                           const EncoderConfig& config);

  const EncoderConfig& config() const { return config_; }

  core::Var embed_paragraphs(core::Tape& tape, core::Var token_table,
                             const corpus::ModelInput& input) const;
  /// Final-layer paragraph states [L×d].
  core::Var forward(core::Tape& tape, core::Var token_table,
                    const ClusterConditioning& conditioning,
                    EncoderTrace* trace = nullptr) const;

 private:
  struct Block {
    core::nn::LayerNorm norm1, norm2;
    core::nn::AttentionWeights attention;
    core::nn::FeedForward ffn;
  };

  EncoderConfig config_;
  core::Tensor* positions_ = nullptr;
  std::vector<Block> blocks_;
  core::nn::LayerNorm final_norm_;
};

/// Tape-free encoding of one cluster with frozen weights.
core::Tensor encode_cluster(const GraphEncoder& encoder, core::Tensor& token_table,
                            const ClusterConditioning& conditioning,
                            EncoderTrace* trace = nullptr);

}  // namespace acm::encoder
