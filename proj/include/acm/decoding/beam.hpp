#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "acm/corpus/vocabulary.hpp"

namespace acm::decoding {

using corpus::TokenId;
using corpus::TokenSeq;

/// Autoregressive next-token distribution over a fixed vocabulary.
class LanguageModel {
 public:
  virtual ~LanguageModel() = default;
  virtual std::size_t vocab_size() const = 0;
  virtual TokenId eos() const = 0;
  /// Log-probabilities of every token following `prefix`.
  virtual std::vector<double> next_logprobs(std::span<const TokenId> prefix) const = 0;
};

/// Attribute score of one-token extensions, evaluated as a batch.
class PrefixScorer {
 public:
  virtual ~PrefixScorer() = default;
  /// log P(a | prefix ⊕ v) for each candidate v.
  virtual std::vector<double> extension_log_scores(std::span<const TokenId> prefix,
                                                   std::span<const TokenId> candidates) const = 0;
};

enum class LengthPenalty {
  /// score / |Y|^λ
  kSimple,
  /// score / ((5 + |Y|) / 6)^λ
  kGnmt,
};

enum class AttributeMode {
  /// attr_lp is the classifier's log-score of the whole current prefix.
  kWholePrefix,
  /// attr_lp sums the log-score of every prefix along the way.
  kAccumulated,
};

struct BeamConfig {
  std::size_t beam_width = 5;
  /// Next tokens considered per live beam, by base log-probability.
  std::size_t shortlist_k = 200;
  std::size_t max_steps = 64;
  double length_penalty = 0.6;
  double alpha1 = 0.22;
  LengthPenalty penalty = LengthPenalty::kSimple;
  AttributeMode attribute_mode = AttributeMode::kWholePrefix;
};

/// Throws ConfigError on an invalid configuration.
void validate(const BeamConfig& config);

struct Beam {
  TokenSeq tokens;
  double base_lp = 0.0;
  double attr_lp = 0.0;
  double combined = 0.0;
  bool finished = false;
};

/// Length-normalized combined score used for the final ranking.
double final_score(const Beam& beam, const BeamConfig& config);

struct DecodeResult {
  /// Finished beams plus those still live at the step limit, best first.
  std::vector<Beam> hypotheses;
  /// Live beams after each step, for inspection.
  std::vector<std::vector<Beam>> steps;

  const Beam& best() const { return hypotheses.front(); }
};

/// Plain beam search: combined == base_lp, α₁ ignored.
DecodeResult beam_search(const LanguageModel& model, const BeamConfig& config);

/// Beam search where each extension is rescored as base_lp + α₁·attr_lp.
/// Ties anywhere are broken by lexicographic token order.
DecodeResult conditioned_beam_search(const LanguageModel& model, const PrefixScorer& scorer,
                                     const BeamConfig& config);

}  // namespace acm::decoding
