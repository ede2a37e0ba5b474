#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "acm/core/autodiff.hpp"
#include "acm/core/checkpoint.hpp"
#include "acm/core/nn.hpp"
#include "acm/core/parameters.hpp"
#include "acm/corpus/cluster.hpp"

namespace acm::classifier {

using corpus::TokenId;

struct ClassifierConfig {
  std::size_t classes = 2;
  std::size_t vocab_size = 0;
  std::size_t dim = 64;
  std::size_t heads = 4;
  std::size_t ffn = 128;
  std::size_t blocks = 2;
  std::size_t max_input_tokens = 512;
};

/// Lower bound kept on every class probability so logs stay finite.
inline constexpr double kProbabilityFloor = 1e-6;

/// Per-class probabilities, each in [kProbabilityFloor, 1 − kProbabilityFloor].
struct AttributeScore {
  std::vector<double> probabilities;

  std::size_t classes() const { return probabilities.size(); }
  double operator[](std::size_t c) const { return probabilities.at(c); }
};

/// ε + (1 − Cε)·p: keeps the sum at one and every entry within the floor.
AttributeScore floor_probabilities(std::span<const double> softmax_output);
AttributeScore uniform_score(std::size_t classes);

/// Causal transformer encoder with cumulative mean pooling, so one pass over a
/// sequence yields a class distribution for each of its prefixes.
class ClassifierModel {
 public:
  static ClassifierModel create(const ClassifierConfig& config, core::Rng& rng);

  const ClassifierConfig& config() const { return config_; }
  core::ParameterStore& parameters() { return params_; }
  const core::ParameterStore& parameters() const { return params_; }

  /// [n×C] logits; row i classifies tokens[0..i].
  core::Var forward(core::Tape& tape, std::span<const TokenId> tokens) const;
  core::Tensor prefix_logits(std::span<const TokenId> tokens) const;

  core::TensorMap to_tensors() const;
  static ClassifierModel from_tensors(const core::TensorMap& tensors);
  void save(const std::filesystem::path& path) const;
  static ClassifierModel load(const std::filesystem::path& path);

 private:
  friend class PrefixCache;

  struct Block {
    core::nn::LayerNorm norm1, norm2;
    core::nn::AttentionWeights attention;
    core::nn::FeedForward ffn;
  };

  ClassifierModel() = default;
  void bind();
  void check_tokens(std::span<const TokenId> tokens) const;

  ClassifierConfig config_;
  core::ParameterStore params_;
  core::Tensor positions_;
  core::Tensor* embedding_ = nullptr;
  std::vector<Block> blocks_;
  core::nn::LayerNorm final_norm_;
  core::nn::Linear head_;
};

/// Throws DimensionError for an empty prefix or one longer than
/// max_input_tokens.
AttributeScore score_prefix(const ClassifierModel& model, std::span<const TokenId> prefix);
/// Scores of every prefix length 1..n in one pass.
std::vector<AttributeScore> score_all_prefixes(const ClassifierModel& model,
                                               std::span<const TokenId> tokens);

/// β_i: probability that paragraph i expresses class `target`. Paragraphs
/// longer than max_input_tokens are scored on their leading tokens.
double score_paragraph(const ClassifierModel& model, const corpus::DocumentCluster& cluster,
                       std::size_t paragraph, std::size_t target);

/// Keys and values of an accepted prefix, so that scoring one-token
/// extensions only runs the new position through the network.
class PrefixCache {
 public:
  explicit PrefixCache(const ClassifierModel& model);

  void push(TokenId token);
  std::size_t size() const { return length_; }
  /// Score of the cached prefix; uniform when it is empty.
  AttributeScore current() const;
  /// Scores of prefix ⊕ v for each candidate v.
  std::vector<AttributeScore> extensions(std::span<const TokenId> candidates) const;

 private:
  struct Step {
    std::vector<std::vector<double>> keys, values;  // per block, [rows × dim]
    std::vector<double> final_rows;                 // [rows × dim]
  };
  Step run(std::span<const TokenId> tokens) const;
  std::vector<double> pooled_logits(std::span<const double> final_row) const;

  const ClassifierModel* model_;
  std::size_t length_ = 0;
  std::vector<std::vector<double>> keys_, values_;
  std::vector<double> pooled_sum_;
  std::vector<double> last_logits_;
};

/// log P(target | prefix ⊕ v) for each candidate v. PAD, BOS and EOS carry
/// no text: they are dropped from the prefix, and such a candidate scores the
/// prefix itself. An empty prefix scores log(1/C).
std::vector<double> extension_log_scores(const ClassifierModel& model,
                                         std::span<const TokenId> prefix,
                                         std::span<const TokenId> candidates,
                                         std::size_t target);

}  // namespace acm::classifier
