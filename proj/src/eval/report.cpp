#include "acm/eval/report.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "acm/core/error.hpp"

namespace acm::eval {

ConsistencyReport consistency_stats(std::span<const double> scores) {
  if (scores.empty()) throw DataError("consistency statistics need at least one summary");
  ConsistencyReport out;
  out.count = scores.size();
  const double n = static_cast<double>(scores.size());
  for (double s : scores) out.mean += s;
  out.mean /= n;
  double var = 0.0;
  for (double s : scores) var += (s - out.mean) * (s - out.mean);
  out.stddev = std::sqrt(var / n);
  return out;
}

double summary_score(const classifier::ClassifierModel& model, std::span<const TokenId> summary,
                     std::size_t target) {
  if (target >= model.config().classes) {
    throw IndexError("class " + std::to_string(target) + " out of range");
  }
  TokenSeq text;
  for (TokenId t : summary) {
    if (!corpus::is_control(t)) text.push_back(t);
  }
  if (text.empty()) return 1.0 / static_cast<double>(model.config().classes);
  if (text.size() > model.config().max_input_tokens) text.resize(model.config().max_input_tokens);
  return classifier::score_prefix(model, text)[target];
}

ConsistencyReport consistency_stats(std::span<const TokenSeq> summaries,
                                    const classifier::ClassifierModel& model, std::size_t target) {
  const std::vector<std::size_t> targets(summaries.size(), target);
  return consistency_stats(summaries, model, targets);
}

ConsistencyReport consistency_stats(std::span<const TokenSeq> summaries,
                                    const classifier::ClassifierModel& model,
                                    std::span<const std::size_t> targets) {
  if (targets.size() != summaries.size()) {
    throw DataError(fmt::format("{} summaries but {} target classes", summaries.size(),
                                targets.size()));
  }
  std::vector<double> scores;
  scores.reserve(summaries.size());
  for (std::size_t i = 0; i < summaries.size(); ++i) {
    scores.push_back(summary_score(model, summaries[i], targets[i]));
  }
  return consistency_stats(scores);
}

CorpusReport corpus_report(std::span<const TokenSeq> candidates,
                           std::span<const TokenSeq> references) {
  if (candidates.size() != references.size()) {
    throw DataError(fmt::format("{} candidates but {} references", candidates.size(),
                                references.size()));
  }
  if (candidates.empty()) throw DataError("no summaries to evaluate");
  CorpusReport out;
  out.pairs = candidates.size();
  auto accumulate = [](PrecisionRecall& total, const PrecisionRecall& s) {
    total.precision += s.precision;
    total.recall += s.recall;
    total.f1 += s.f1;
  };
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const RougeScore s = rouge(candidates[i], references[i]);
    accumulate(out.rouge.r1, s.r1);
    accumulate(out.rouge.r2, s.r2);
    accumulate(out.rouge.rl, s.rl);
  }
  const double n = static_cast<double>(out.pairs);
  for (PrecisionRecall* s : {&out.rouge.r1, &out.rouge.r2, &out.rouge.rl}) {
    s->precision /= n;
    s->recall /= n;
    s->f1 /= n;
  }
  return out;
}

CorpusReport corpus_report(std::span<const TokenSeq> candidates,
                           std::span<const TokenSeq> references,
                           const classifier::ClassifierModel& model,
                           std::span<const std::size_t> targets) {
  CorpusReport out = corpus_report(candidates, references);
  out.consistency = consistency_stats(candidates, model, targets);
  return out;
}

nlohmann::json to_json(const PrecisionRecall& score) {
  return {{"precision", score.precision}, {"recall", score.recall}, {"f1", score.f1}};
}

nlohmann::json to_json(const CorpusReport& report) {
  nlohmann::json out = {{"pairs", report.pairs},
                        {"rouge1", to_json(report.rouge.r1)},
                        {"rouge2", to_json(report.rouge.r2)},
                        {"rougeL", to_json(report.rouge.rl)}};
  if (report.consistency) {
    out["attribute"] = {{"mean", report.consistency->mean},
                        {"std", report.consistency->stddev},
                        {"count", report.consistency->count}};
  }
  return out;
}

std::string format_table(std::span<const ReportRow> rows) {
  std::size_t width = 7;
  for (const auto& row : rows) width = std::max(width, row.name.size());
  std::string out = fmt::format("{:<{}}  {:>7}  {:>7}  {:>7}  {:>7}  {:>7}\n", "variant", width,
                                "R-1", "R-2", "R-L", "mean", "std");
  for (const auto& row : rows) {
    const auto& r = row.report;
    out += fmt::format("{:<{}}  {:>7.4f}  {:>7.4f}  {:>7.4f}", row.name, width, r.rouge.r1.f1,
                       r.rouge.r2.f1, r.rouge.rl.f1);
    if (r.consistency) {
      out += fmt::format("  {:>7.4f}  {:>7.4f}\n", r.consistency->mean, r.consistency->stddev);
    } else {
      out += fmt::format("  {:>7}  {:>7}\n", "-", "-");
    }
  }
  return out;
}

}  // namespace acm::eval
