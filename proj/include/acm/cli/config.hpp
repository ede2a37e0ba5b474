#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "acm/classifier/model.hpp"
#include "acm/classifier/train.hpp"
#include "acm/corpus/synthetic.hpp"
#include "acm/decoding/beam.hpp"
#include "acm/summarizer/model.hpp"
#include "acm/summarizer/train.hpp"

namespace acm::cli {

/// Everything one experiment depends on. Serializes to an INI file with the
/// sections experiment, corpus, model, classifier, train, weights and beam.
struct ExperimentConfig {
  std::uint64_t seed = 7;
  std::string output_dir = "run";
  /// Conditioning class for every cluster; unset uses each cluster's own.
  std::optional<std::size_t> attribute;

  /// "synthetic" or "jsonl".
  std::string corpus_source = "synthetic";
  std::string train_path;
  std::string test_path;
  std::size_t min_count = 1;
  corpus::SyntheticConfig synthetic;
  /// Synthetic clusters held out as the test split.
  std::size_t test_clusters = 20;

  summarizer::SummarizerConfig model;
  classifier::ClassifierConfig classifier;
  classifier::ClassifierTrainConfig classifier_train;
  summarizer::SummarizerTrainConfig train;
  summarizer::ConditioningWeights weights;
  decoding::BeamConfig beam;
};

ExperimentConfig default_config();

/// Throws ConfigError naming the offending key for unknown sections or keys,
/// malformed values and inconsistent settings.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(const std::string& text);

/// Canonical INI text: every key, fixed order, shortest round-trip numbers.
std::string to_ini(const ExperimentConfig& config);

/// Assigns "section.key" from text, as a config file line would.
void set_value(ExperimentConfig& config, const std::string& dotted_key, const std::string& value);

void validate(const ExperimentConfig& config);

}  // namespace acm::cli
