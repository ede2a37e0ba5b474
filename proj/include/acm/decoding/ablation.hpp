#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "acm/classifier/model.hpp"
#include "acm/corpus/cluster.hpp"
#include "acm/decoding/beam.hpp"
#include "acm/eval/report.hpp"
#include "acm/summarizer/model.hpp"

namespace acm::decoding {

/// Decodes one cluster toward `target`. The classifier conditions the encoder
/// when the model's α₂ is non-zero and rescores beams when config.alpha1 is
/// non-zero; it may be null only if neither applies.
Beam summarize_cluster(const summarizer::SummarizerModel& model,
                       const classifier::ClassifierModel* classifier,
                       const corpus::DocumentCluster& cluster, std::size_t target,
                       const BeamConfig& config);

/// `tokens` without a trailing EOS.
TokenSeq strip_eos(const TokenSeq& tokens);

struct Variant {
  std::string name;
  /// Trained with the variant's α₂ and α₃.
  const summarizer::SummarizerModel* model = nullptr;
  double alpha1 = 0.0;
};

struct AblationRow {
  std::string name;
  double alpha1 = 0.0, alpha2 = 0.0;
  eval::CorpusReport report;
  std::vector<Beam> decodes;
};

/// Decodes every cluster with every variant and scores the results against
/// the reference summaries. Throws ConfigError for a variant without a model
/// and DataError when a cluster has no reference.
std::vector<AblationRow> ablate(std::span<const Variant> variants,
                                std::span<const corpus::DocumentCluster> clusters,
                                std::span<const std::size_t> targets,
                                const classifier::ClassifierModel& classifier,
                                const BeamConfig& config);

}  // namespace acm::decoding
