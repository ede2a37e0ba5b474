#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "acm/classifier/model.hpp"
#include "acm/core/autodiff.hpp"
#include "acm/core/checkpoint.hpp"
#include "acm/core/nn.hpp"
#include "acm/core/parameters.hpp"
#include "acm/corpus/cluster.hpp"
#include "acm/encoder/graph_encoder.hpp"

namespace acm::summarizer {

using corpus::TokenId;
using corpus::TokenSeq;

/// Weights of the three conditioning stages: future discriminator (α₁),
/// graph weighting (α₂) and conditional training (α₃).
struct ConditioningWeights {
  double alpha1 = 0.22;
  double alpha2 = 0.4;
  double alpha3 = 0.01;
};

void validate(const ConditioningWeights& weights);

struct SummarizerConfig {
  std::size_t vocab_size = 0;
  std::size_t dim = 64;
  std::size_t heads = 4;
  std::size_t ffn = 128;
  std::size_t decoder_layers = 2;
  /// dim, heads and ffn are taken from the fields above.
  encoder::EncoderConfig encoder;
  std::size_t max_input_tokens = 512;
  /// Longest decoder input, BOS included.
  std::size_t max_summary_tokens = 64;
};

/// Paragraph states of one cluster, computed once per decode.
struct ClusterEncoding {
  core::Tensor memory;  // [L×d]
};

/// Graph encoder over paragraphs plus a causal decoder with cross-attention to
/// the paragraph states. Input and output embeddings are tied.
class SummarizerModel {
 public:
  static SummarizerModel create(const SummarizerConfig& config, core::Rng& rng);

  const SummarizerConfig& config() const { return config_; }
  core::ParameterStore& parameters() { return params_; }
  const core::ParameterStore& parameters() const { return params_; }
  const encoder::GraphEncoder& graph_encoder() const { return encoder_; }

  /// Paragraph embeddings, β and relation bias for one cluster. β is only
  /// computed when the model's α₂ is non-zero.
  encoder::ClusterConditioning condition(const corpus::DocumentCluster& cluster,
                                         const classifier::ClassifierModel* classifier,
                                         std::size_t target_class) const;

  core::Var encode(core::Tape& tape, const encoder::ClusterConditioning& conditioning) const;
  ClusterEncoding encode(const encoder::ClusterConditioning& conditioning) const;

  /// [n×V] next-token logits; row i follows input[0..i].
  core::Var decode(core::Tape& tape, core::Var memory, std::span<const TokenId> input) const;

  core::TensorMap to_tensors() const;
  static SummarizerModel from_tensors(const core::TensorMap& tensors);
  void save(const std::filesystem::path& path) const;
  static SummarizerModel load(const std::filesystem::path& path);

 private:
  struct Block {
    core::nn::LayerNorm norm1, norm2, norm3;
    core::nn::AttentionWeights self_attention, cross_attention;
    core::nn::FeedForward ffn;
  };

  SummarizerModel() = default;
  void bind();

  SummarizerConfig config_;
  core::ParameterStore params_;
  core::Tensor* embedding_ = nullptr;
  core::Tensor positions_;
  encoder::GraphEncoder encoder_;
  std::vector<Block> blocks_;
  core::nn::LayerNorm final_norm_;
};

/// Log-probabilities of the token after `prefix`. A missing leading BOS is
/// added. Throws DimensionError when the input would exceed
/// max_summary_tokens.
std::vector<double> next_token_logprobs(const SummarizerModel& model,
                                        const ClusterEncoding& encoding,
                                        std::span<const TokenId> prefix);

}  // namespace acm::summarizer
