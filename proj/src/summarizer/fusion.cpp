#include "acm/summarizer/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "acm/core/error.hpp"
#include "acm/core/kernels.hpp"

namespace acm::summarizer {

std::vector<double> fuse(std::span<const double> decoder_logits,
                         std::span<const double> attribute_log_scores, double alpha3) {
  if (decoder_logits.size() != attribute_log_scores.size()) {
    throw DimensionError("fusion of " + std::to_string(decoder_logits.size()) + " logits with " +
                         std::to_string(attribute_log_scores.size()) + " attribute scores");
  }
  if (!(alpha3 >= 0.0)) throw ConfigError("alpha3 must be non-negative");
  const double lse = core::kernels::log_sum_exp(decoder_logits);
  std::vector<double> out(decoder_logits.size());
  for (std::size_t v = 0; v < out.size(); ++v) out[v] = decoder_logits[v] - lse;
  if (alpha3 == 0.0) return out;
  for (std::size_t v = 0; v < out.size(); ++v) out[v] += alpha3 * attribute_log_scores[v];
  const double norm = core::kernels::log_sum_exp(out);
  for (double& v : out) v -= norm;
  return out;
}

std::vector<double> fused_logits(std::span<const double> decoder_logits,
                                 std::span<const corpus::TokenId> prefix,
                                 const classifier::ClassifierModel& classifier,
                                 std::size_t target, double alpha3) {
  std::vector<corpus::TokenId> candidates(decoder_logits.size());
  std::iota(candidates.begin(), candidates.end(), corpus::TokenId{0});
  const auto scores = classifier::extension_log_scores(classifier, prefix, candidates, target);
  return fuse(decoder_logits, scores, alpha3);
}

core::Tensor attribute_table(const classifier::ClassifierModel& classifier,
                             std::span<const corpus::TokenId> summary, std::size_t target,
                             std::size_t vocab_size) {
  if (vocab_size > classifier.config().vocab_size) {
    throw ConfigError("classifier vocabulary (" + std::to_string(classifier.config().vocab_size) +
                      ") is smaller than the summarizer's (" + std::to_string(vocab_size) + ")");
  }
  if (target >= classifier.config().classes) {
    throw IndexError("class " + std::to_string(target) + " out of range");
  }
  std::vector<corpus::TokenId> text;
  for (corpus::TokenId v = 0; v < vocab_size; ++v) {
    if (!corpus::is_control(v)) text.push_back(v);
  }
  core::Tensor table({summary.size() + 1, vocab_size});
  classifier::PrefixCache cache(classifier);
  for (std::size_t t = 0; t <= summary.size(); ++t) {
    const auto scored = cache.extensions(text);
    const double here = std::log(cache.current()[target]);
    auto row = table.row(t);
    std::size_t next = 0;
    for (corpus::TokenId v = 0; v < vocab_size; ++v) {
      row[v] = corpus::is_control(v) ? here : std::log(scored[next++][target]);
    }
    if (t < summary.size() && !corpus::is_control(summary[t])) cache.push(summary[t]);
  }
  return table;
}

core::Tensor fusion_offsets(const core::Tensor& logits, const core::Tensor& table,
                            std::span<const std::size_t> gold, double alpha3,
                            std::size_t top_k) {
  const std::size_t rows = logits.rows(), vocab = logits.cols();
  if (table.rows() != rows || table.cols() != vocab || gold.size() != rows) {
    throw DimensionError("fusion offsets: logits " + core::shape_string(logits.shape()) +
                         ", table " + core::shape_string(table.shape()) + ", " +
                         std::to_string(gold.size()) + " targets");
  }
  core::Tensor out({rows, vocab}, 0.0);
  if (alpha3 == 0.0) return out;
  std::vector<std::size_t> ids(vocab);
  const std::size_t k = std::min(top_k, vocab);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto z = logits.row(r);
    std::iota(ids.begin(), ids.end(), std::size_t{0});
    std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(k), ids.end(),
                      [&](std::size_t a, std::size_t b) {
                        return z[a] != z[b] ? z[a] > z[b] : a < b;
                      });
    auto row = out.row(r);
    const auto s = table.row(r);
    for (std::size_t i = 0; i < k; ++i) row[ids[i]] = alpha3 * s[ids[i]];
    row[gold[r]] = alpha3 * s[gold[r]];
  }
  return out;
}

}  // namespace acm::summarizer
