#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "acm/summarizer/model.hpp"

namespace acm::summarizer {

struct SummarizerTrainConfig {
  std::size_t epochs = 40;
  /// Clusters per optimizer step.
  std::size_t batch_size = 4;
  double learning_rate = 3e-3;
  double clip_norm = 1.0;
  /// Decoder candidates per step that receive the attribute fusion term.
  std::size_t top_k = 50;
};

/// Everything teacher forcing needs for one cluster, computed once.
struct TrainingCluster {
  encoder::ClusterConditioning conditioning;
  TokenSeq input;                    // BOS + reference
  std::vector<std::size_t> targets;  // reference + EOS
  core::Tensor attribute_table;      // empty when fusion is off
};

/// Conditioning class per cluster: `fixed` when given, else each cluster's
/// stored attribute. Throws DataError when neither is available.
std::vector<std::size_t> cluster_targets(std::span<const corpus::DocumentCluster> clusters,
                                         std::optional<std::size_t> fixed);

/// Throws DataError for clusters without a reference summary. References are
/// cut to fit max_summary_tokens.
std::vector<TrainingCluster> prepare_training(std::span<const corpus::DocumentCluster> clusters,
                                              std::span<const std::size_t> targets,
                                              const SummarizerModel& model,
                                              const classifier::ClassifierModel* classifier,
                                              double alpha3);

struct TeacherForcedMetrics {
  /// Mean fused cross-entropy per target token.
  double loss = 0;
  /// Share of target tokens that are the decoder's argmax.
  double accuracy = 0;
  std::size_t tokens = 0;
};

TeacherForcedMetrics teacher_forced(const SummarizerModel& model,
                                    std::span<const TrainingCluster> clusters, double alpha3,
                                    std::size_t top_k);

struct SummarizerReport {
  std::vector<double> step_losses;
  std::vector<double> epoch_losses;
  /// Selection loss per epoch: validation when available, otherwise train.
  std::vector<double> validation_losses;
  std::vector<double> best_so_far;
  std::size_t best_epoch = 0;
  TeacherForcedMetrics train;
  std::optional<TeacherForcedMetrics> validation;
};

struct TrainedSummarizer {
  SummarizerModel model;
  SummarizerReport report;
};

/// Teacher-forced training on the fused objective; keeps the epoch with the
/// lowest selection loss. The classifier stays frozen and is needed whenever
/// α₂ or α₃ is non-zero.
TrainedSummarizer train_summarizer(std::span<const corpus::DocumentCluster> train,
                                   std::span<const std::size_t> train_targets,
                                   std::span<const corpus::DocumentCluster> validation,
                                   std::span<const std::size_t> validation_targets,
                                   const classifier::ClassifierModel* classifier,
                                   const ConditioningWeights& weights,
                                   const SummarizerConfig& config,
                                   const SummarizerTrainConfig& train_config, core::Rng& rng);

}  // namespace acm::summarizer
