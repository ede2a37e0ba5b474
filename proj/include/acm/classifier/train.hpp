#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "acm/classifier/model.hpp"
#include "acm/corpus/prefix.hpp"

namespace acm::classifier {

struct ClassifierTrainConfig {
  std::size_t epochs = 8;
  /// Prefix groups per optimizer step.
  std::size_t batch_size = 16;
  double learning_rate = 3e-3;
  double clip_norm = 1.0;
  double validation_fraction = 0.1;
  double test_fraction = 0.1;
};

/// Labeled prefixes sharing one longest sequence. counts[i] is how many
/// input prefixes of length i+1 the group absorbed.
struct PrefixGroup {
  corpus::TokenSeq tokens;
  int label = 0;
  std::vector<std::size_t> counts;
};

/// Groups prefixes so each group is one forward pass of the causal model.
/// The result is independent of the input order.
std::vector<PrefixGroup> group_prefixes(std::span<const corpus::LabeledPrefix> data);

struct SplitMetrics {
  static constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

  std::size_t sequences = 0;
  std::size_t prefixes = 0;
  /// Accuracy on each group's longest sequence.
  double sequence_accuracy = kNaN;
  /// Accuracy over all prefixes, duplicates counted.
  double prefix_accuracy = kNaN;
  /// Accuracy over length-1 prefixes.
  double first_token_accuracy = kNaN;
  double loss = kNaN;
};

SplitMetrics evaluate(const ClassifierModel& model, std::span<const PrefixGroup> groups);

struct ClassifierReport {
  SplitMetrics train, validation, test;
  std::vector<double> epoch_losses;
  std::size_t best_epoch = 0;
  std::size_t steps = 0;
};

struct TrainedClassifier {
  ClassifierModel model;
  ClassifierReport report;
};

/// Cross-entropy training on an 80-10-10 split of prefix groups, keeping the
/// epoch with the lowest validation loss. Throws TrainingError on empty or
/// single-class data and DataError on out-of-range labels or tokens.
TrainedClassifier train_classifier(std::span<const corpus::LabeledPrefix> data,
                                   const ClassifierConfig& model_config,
                                   const ClassifierTrainConfig& train_config, core::Rng& rng);

}  // namespace acm::classifier
