#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "acm/classifier/model.hpp"
#include "acm/core/tensor.hpp"

namespace acm::summarizer {

/// log softmax(z)(v) + α₃·s(v), renormalized, for attribute log-scores s.
std::vector<double> fuse(std::span<const double> decoder_logits,
                         std::span<const double> attribute_log_scores, double alpha3);

/// fuse() with s(v) = log P(target | prefix ⊕ v) from the classifier.
std::vector<double> fused_logits(std::span<const double> decoder_logits,
                                 std::span<const corpus::TokenId> prefix,
                                 const classifier::ClassifierModel& classifier,
                                 std::size_t target, double alpha3);

/// Row t holds log P(target | summary[0..t) ⊕ v) for every token v, for
/// t = 0..|summary| (the last row is the step that should emit EOS).
core::Tensor attribute_table(const classifier::ClassifierModel& classifier,
                             std::span<const corpus::TokenId> summary, std::size_t target,
                             std::size_t vocab_size);

/// α₃·table[r][v] for the `top_k` largest logits of row r (ties to the lower
/// id) and for the gold token; zero elsewhere. Adding this to the logits and
/// taking a cross-entropy gives the fused training loss.
core::Tensor fusion_offsets(const core::Tensor& logits, const core::Tensor& table,
                            std::span<const std::size_t> gold, double alpha3, std::size_t top_k);

}  // namespace acm::summarizer
