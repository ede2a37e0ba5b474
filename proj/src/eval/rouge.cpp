#include "acm/eval/rouge.hpp"

#include <algorithm>
#include <map>
#include <vector>

#include "acm/core/error.hpp"

namespace acm::eval {

double harmonic(double precision, double recall) {
  const double sum = precision + recall;
  return sum > 0.0 ? 2.0 * precision * recall / sum : 0.0;
}

namespace {

PrecisionRecall from_counts(std::size_t overlap, std::size_t candidate, std::size_t reference) {
  PrecisionRecall out;
  if (candidate > 0) out.precision = static_cast<double>(overlap) / static_cast<double>(candidate);
  if (reference > 0) out.recall = static_cast<double>(overlap) / static_cast<double>(reference);
  out.f1 = harmonic(out.precision, out.recall);
  return out;
}

std::map<std::vector<TokenId>, std::size_t> ngrams(std::span<const TokenId> tokens,
                                                   std::size_t n) {
  std::map<std::vector<TokenId>, std::size_t> counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    ++counts[std::vector<TokenId>(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                  tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return counts;
}

}  // namespace

PrecisionRecall rouge_n(std::span<const TokenId> candidate, std::span<const TokenId> reference,
                        std::size_t n) {
  if (n == 0) throw ConfigError("rouge_n needs n >= 1");
  const auto cand = ngrams(candidate, n);
  const auto ref = ngrams(reference, n);
  std::size_t overlap = 0, cand_total = 0, ref_total = 0;
  for (const auto& [gram, count] : cand) {
    cand_total += count;
    if (auto it = ref.find(gram); it != ref.end()) overlap += std::min(count, it->second);
  }
  for (const auto& entry : ref) ref_total += entry.second;
  return from_counts(overlap, cand_total, ref_total);
}

PrecisionRecall rouge_l(std::span<const TokenId> candidate, std::span<const TokenId> reference) {
  const std::size_t m = candidate.size(), n = reference.size();
  std::vector<std::size_t> prev(n + 1, 0), cur(n + 1, 0);
  for (std::size_t i = 1; i <= m; ++i) {
    for (std::size_t j = 1; j <= n; ++j) {
      cur[j] = candidate[i - 1] == reference[j - 1] ? prev[j - 1] + 1
                                                    : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return from_counts(prev[n], m, n);
}

RougeScore rouge(std::span<const TokenId> candidate, std::span<const TokenId> reference) {
  return {rouge_n(candidate, reference, 1), rouge_n(candidate, reference, 2),
          rouge_l(candidate, reference)};
}

}  // namespace acm::eval
