#pragma once

#include <cstddef>
#include <span>

#include "acm/corpus/vocabulary.hpp"

namespace acm::eval {

using corpus::TokenId;

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct RougeScore {
  PrecisionRecall r1, r2, rl;
};

/// Harmonic mean; zero when both inputs are zero.
double harmonic(double precision, double recall);

/// Clipped n-gram overlap. Sequences shorter than n score zero.
PrecisionRecall rouge_n(std::span<const TokenId> candidate, std::span<const TokenId> reference,
                        std::size_t n);
/// Longest common subsequence over the two token sequences.
PrecisionRecall rouge_l(std::span<const TokenId> candidate, std::span<const TokenId> reference);
RougeScore rouge(std::span<const TokenId> candidate, std::span<const TokenId> reference);

}  // namespace acm::eval
