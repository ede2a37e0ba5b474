#pragma once

#include <cstddef>

#include "acm/classifier/model.hpp"
#include "acm/decoding/beam.hpp"
#include "acm/summarizer/model.hpp"

namespace acm::decoding {

/// Summarizer decoder conditioned on one encoded cluster. The BOS token is
/// implicit and never appears in decoded sequences.
class SummarizerLanguageModel final : public LanguageModel {
 public:
  SummarizerLanguageModel(const summarizer::SummarizerModel& model,
                          summarizer::ClusterEncoding encoding)
      : model_(&model), encoding_(std::move(encoding)) {}

  std::size_t vocab_size() const override { return model_->config().vocab_size; }
  TokenId eos() const override { return corpus::kEos; }
  std::vector<double> next_logprobs(std::span<const TokenId> prefix) const override {
    return summarizer::next_token_logprobs(*model_, encoding_, prefix);
  }

 private:
  const summarizer::SummarizerModel* model_;
  summarizer::ClusterEncoding encoding_;
};

/// Attribute classifier scoring extensions toward one target class.
class ClassifierScorer final : public PrefixScorer {
 public:
  ClassifierScorer(const classifier::ClassifierModel& model, std::size_t target)
      : model_(&model), target_(target) {}

  std::vector<double> extension_log_scores(std::span<const TokenId> prefix,
                                           std::span<const TokenId> candidates) const override {
    return classifier::extension_log_scores(*model_, prefix, candidates, target_);
  }

 private:
  const classifier::ClassifierModel* model_;
  std::size_t target_;
};

}  // namespace acm::decoding
