#include "acm/decoding/ablation.hpp"

#include "acm/core/error.hpp"
#include "acm/decoding/adapters.hpp"

namespace acm::decoding {

Beam summarize_cluster(const summarizer::SummarizerModel& model,
                       const classifier::ClassifierModel* classifier,
                       const corpus::DocumentCluster& cluster, std::size_t target,
                       const BeamConfig& config) {
  if (config.alpha1 != 0.0 && classifier == nullptr) {
    throw ConfigError("alpha1 is non-zero but no classifier was given");
  }
  const auto conditioning = model.condition(cluster, classifier, target);
  const SummarizerLanguageModel lm(model, model.encode(conditioning));
  if (config.alpha1 == 0.0) return beam_search(lm, config).best();
  const ClassifierScorer scorer(*classifier, target);
  return conditioned_beam_search(lm, scorer, config).best();
}

TokenSeq strip_eos(const TokenSeq& tokens) {
  TokenSeq out = tokens;
  if (!out.empty() && out.back() == corpus::kEos) out.pop_back();
  return out;
}

std::vector<AblationRow> ablate(std::span<const Variant> variants,
                                std::span<const corpus::DocumentCluster> clusters,
                                std::span<const std::size_t> targets,
                                const classifier::ClassifierModel& classifier,
                                const BeamConfig& config) {
  if (targets.size() != clusters.size()) {
    throw DataError("one target class per cluster is required");
  }
  std::vector<TokenSeq> references;
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    if (!clusters[i].reference_summary) {
      throw DataError("cluster " + std::to_string(i) + " has no reference summary");
    }
    references.push_back(*clusters[i].reference_summary);
  }
  for (const auto& v : variants) {
    if (v.model == nullptr) throw ConfigError("variant '" + v.name + "' has no model");
  }
  std::vector<AblationRow> rows;
  for (const auto& v : variants) {
    AblationRow row{v.name, v.alpha1, v.model->config().encoder.alpha2, {}, {}};
    BeamConfig beam = config;
    beam.alpha1 = v.alpha1;
    std::vector<TokenSeq> summaries;
    for (std::size_t i = 0; i < clusters.size(); ++i) {
      row.decodes.push_back(summarize_cluster(*v.model, &classifier, clusters[i], targets[i], beam));
      summaries.push_back(strip_eos(row.decodes.back().tokens));
    }
    row.report = eval::corpus_report(summaries, references, classifier, targets);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace acm::decoding
