#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "acm/cli/config.hpp"
#include "acm/corpus/cluster.hpp"
#include "acm/decoding/ablation.hpp"

namespace acm::cli {

/// Random streams derived from the experiment seed.
enum Stream : std::uint64_t {
  kCorpusStream = 1,
  kClassifierStream = 2,
  kSummarizerStream = 3,
};

struct CorpusSplit {
  corpus::Vocabulary vocab;
  std::vector<corpus::RawCluster> train, test;
};

/// Synthetic: generated from the seed, with the last test_clusters held out.
/// JSONL: read from the configured paths, vocabulary built from the training
/// split.
CorpusSplit load_corpus(const ExperimentConfig& config);

corpus::Vocabulary build_vocabulary(std::span<const corpus::RawCluster> clusters,
                                    std::size_t min_count);

std::vector<corpus::DocumentCluster> make_clusters(std::span<const corpus::RawCluster> raw,
                                                   const corpus::Vocabulary& vocab);

/// Trains on every labeled paragraph and sentence of `clusters`. Throws
/// DataError when no cluster carries paragraph labels.
classifier::TrainedClassifier train_attribute_classifier(
    const ExperimentConfig& config, std::span<const corpus::DocumentCluster> clusters,
    const corpus::Vocabulary& vocab);

/// Every variant draws from the same stream, so switching conditioning off
/// reproduces the unconditioned run exactly.
summarizer::TrainedSummarizer train_summarizer_variant(
    const ExperimentConfig& config, const summarizer::ConditioningWeights& weights,
    std::span<const corpus::DocumentCluster> clusters,
    const classifier::ClassifierModel* classifier, std::size_t vocab_size);

/// One ablation setting: which stages are on, and which trained model it
/// decodes with.
struct VariantSpec {
  std::string name;
  bool graph = false;
  bool training = false;
  bool discriminator = false;

  std::string model_name() const;
  summarizer::ConditioningWeights weights(const summarizer::ConditioningWeights& full) const;
};

/// The unconditioned baseline followed by each requested variant among
/// graph, training, discriminator and full. Throws ConfigError on other names.
std::vector<VariantSpec> ablation_variants(const std::vector<std::string>& names);

/// Trains the models the variants need, keyed by VariantSpec::model_name.
std::map<std::string, summarizer::SummarizerModel> train_variant_models(
    const ExperimentConfig& config, std::span<const VariantSpec> variants,
    std::span<const corpus::DocumentCluster> clusters,
    const classifier::ClassifierModel& classifier, std::size_t vocab_size);

/// Throws ConfigError when a variant's model is missing.
std::vector<decoding::AblationRow> run_ablation(
    const ExperimentConfig& config, std::span<const VariantSpec> variants,
    const std::map<std::string, summarizer::SummarizerModel>& models,
    std::span<const corpus::DocumentCluster> test, const classifier::ClassifierModel& classifier);

nlohmann::json ablation_json(std::span<const decoding::AblationRow> rows);

}  // namespace acm::cli
