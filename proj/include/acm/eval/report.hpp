#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "acm/classifier/model.hpp"
#include "acm/eval/rouge.hpp"

namespace acm::eval {

using corpus::TokenSeq;

struct ConsistencyReport {
  double mean = 0.0;
  /// Population standard deviation.
  double stddev = 0.0;
  std::size_t count = 0;
};

/// Throws DataError on an empty set.
ConsistencyReport consistency_stats(std::span<const double> scores);

/// P(target | summary). Control tokens are ignored, an empty summary scores
/// 1/C, and overlong summaries are scored on their leading tokens.
double summary_score(const classifier::ClassifierModel& model, std::span<const TokenId> summary,
                     std::size_t target);

ConsistencyReport consistency_stats(std::span<const TokenSeq> summaries,
                                    const classifier::ClassifierModel& model, std::size_t target);
/// One target class per summary.
ConsistencyReport consistency_stats(std::span<const TokenSeq> summaries,
                                    const classifier::ClassifierModel& model,
                                    std::span<const std::size_t> targets);

struct CorpusReport {
  std::size_t pairs = 0;
  /// Macro averages over pairs.
  RougeScore rouge;
  std::optional<ConsistencyReport> consistency;
};

/// Throws DataError when the counts differ or both are empty.
CorpusReport corpus_report(std::span<const TokenSeq> candidates,
                           std::span<const TokenSeq> references);
CorpusReport corpus_report(std::span<const TokenSeq> candidates,
                           std::span<const TokenSeq> references,
                           const classifier::ClassifierModel& model,
                           std::span<const std::size_t> targets);

nlohmann::json to_json(const PrecisionRecall& score);
nlohmann::json to_json(const CorpusReport& report);

struct ReportRow {
  std::string name;
  CorpusReport report;
};

/// Aligned text table with one row per report: R-1/R-2/R-L f1, and mean/std
/// of the attribute score when present.
std::string format_table(std::span<const ReportRow> rows);

}  // namespace acm::eval
