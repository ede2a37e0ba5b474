#include "acm/summarizer/train.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "acm/core/adam.hpp"
#include "acm/core/error.hpp"
#include "acm/core/kernels.hpp"
#include "acm/summarizer/fusion.hpp"

namespace acm::summarizer {

using core::Tape;
using core::Tensor;
using core::Var;

std::vector<std::size_t> cluster_targets(std::span<const corpus::DocumentCluster> clusters,
                                         std::optional<std::size_t> fixed) {
  std::vector<std::size_t> out;
  out.reserve(clusters.size());
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    if (fixed) {
      out.push_back(*fixed);
    } else if (clusters[i].raw.attribute) {
      out.push_back(static_cast<std::size_t>(*clusters[i].raw.attribute));
    } else {
      throw DataError("cluster " + std::to_string(i) +
                      " has no attribute and no conditioning class was given");
    }
  }
  return out;
}

std::vector<TrainingCluster> prepare_training(std::span<const corpus::DocumentCluster> clusters,
                                              std::span<const std::size_t> targets,
                                              const SummarizerModel& model,
                                              const classifier::ClassifierModel* classifier,
                                              double alpha3) {
  if (targets.size() != clusters.size()) {
    throw DimensionError(std::to_string(targets.size()) + " targets for " +
                         std::to_string(clusters.size()) + " clusters");
  }
  if (alpha3 != 0.0 && !classifier) throw ConfigError("conditional training needs a classifier");
  const auto& config = model.config();
  std::vector<TrainingCluster> out;
  out.reserve(clusters.size());
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    const auto& cluster = clusters[i];
    if (!cluster.reference_summary) {
      throw DataError("cluster " + std::to_string(i) + " has no reference summary");
    }
    TrainingCluster tc;
    tc.conditioning = model.condition(cluster, classifier, targets[i]);
    TokenSeq reference = *cluster.reference_summary;
    if (reference.size() + 1 > config.max_summary_tokens) {
      reference.resize(config.max_summary_tokens - 1);
    }
    tc.input.push_back(corpus::kBos);
    tc.input.insert(tc.input.end(), reference.begin(), reference.end());
    tc.targets.assign(reference.begin(), reference.end());
    tc.targets.push_back(corpus::kEos);
    if (alpha3 != 0.0) {
      tc.attribute_table = attribute_table(*classifier, reference, targets[i], config.vocab_size);
    }
    out.push_back(std::move(tc));
  }
  return out;
}

namespace {

/// Fused cross-entropy of one cluster, mean over its target tokens.
Var cluster_loss(Tape& tape, const SummarizerModel& model, const TrainingCluster& tc,
                 double alpha3, std::size_t top_k) {
  Var memory = model.encode(tape, tc.conditioning);
  Var logits = model.decode(tape, memory, tc.input);
  if (alpha3 != 0.0) {
    logits = add_const(logits,
                       fusion_offsets(logits.value(), tc.attribute_table, tc.targets, alpha3, top_k));
  }
  return cross_entropy(logits, tc.targets);
}

}  // namespace

TeacherForcedMetrics teacher_forced(const SummarizerModel& model,
                                    std::span<const TrainingCluster> clusters, double alpha3,
                                    std::size_t top_k) {
  TeacherForcedMetrics m;
  double loss = 0, correct = 0;
  for (const auto& tc : clusters) {
    Tape tape;
    Var memory = model.encode(tape, tc.conditioning);
    const Tensor logits = model.decode(tape, memory, tc.input).value();
    Tensor fused = logits;
    if (alpha3 != 0.0) {
      const Tensor off = fusion_offsets(logits, tc.attribute_table, tc.targets, alpha3, top_k);
      for (std::size_t i = 0; i < fused.size(); ++i) fused[i] += off[i];
    }
    for (std::size_t r = 0; r < tc.targets.size(); ++r) {
      const auto z = logits.row(r);
      const auto pred = static_cast<std::size_t>(std::max_element(z.begin(), z.end()) - z.begin());
      correct += pred == tc.targets[r];
      const auto f = fused.row(r);
      loss += core::kernels::log_sum_exp(f) - f[tc.targets[r]];
    }
    m.tokens += tc.targets.size();
  }
  if (m.tokens > 0) {
    m.loss = loss / static_cast<double>(m.tokens);
    m.accuracy = correct / static_cast<double>(m.tokens);
  }
  return m;
}

TrainedSummarizer train_summarizer(std::span<const corpus::DocumentCluster> train,
                                   std::span<const std::size_t> train_targets,
                                   std::span<const corpus::DocumentCluster> validation,
                                   std::span<const std::size_t> validation_targets,
                                   const classifier::ClassifierModel* classifier,
                                   const ConditioningWeights& weights,
                                   const SummarizerConfig& config,
                                   const SummarizerTrainConfig& train_config, core::Rng& rng) {
  validate(weights);
  if (train.empty()) throw TrainingError("summarizer training set is empty");
  if (train_config.batch_size == 0) throw ConfigError("batch_size must be positive");
  if ((weights.alpha2 != 0.0 || weights.alpha3 != 0.0) && !classifier) {
    throw ConfigError("graph weighting and conditional training need a classifier");
  }
  if (classifier && classifier->config().vocab_size < config.vocab_size) {
    throw ConfigError("classifier vocabulary is smaller than the summarizer's");
  }

  SummarizerConfig model_config = config;
  model_config.encoder.alpha2 = weights.alpha2;
  auto init_rng = rng.split(1);
  TrainedSummarizer result{SummarizerModel::create(model_config, init_rng), {}};
  auto& model = result.model;
  auto& report = result.report;
  const double alpha3 = weights.alpha3;
  const std::size_t top_k = train_config.top_k;

  const auto train_set = prepare_training(train, train_targets, model, classifier, alpha3);
  const auto val_set = prepare_training(validation, validation_targets, model, classifier, alpha3);

  core::Adam adam(model.parameters(),
                  {train_config.learning_rate, 0.9, 0.999, 1e-8, train_config.clip_norm});
  double best = std::numeric_limits<double>::infinity();
  auto best_snapshot = model.parameters().snapshot();
  std::vector<std::size_t> order(train_set.size());
  for (std::size_t epoch = 0; epoch < train_config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto epoch_rng = rng.split(100 + epoch);
    epoch_rng.shuffle(std::span<std::size_t>(order));
    double epoch_loss = 0, epoch_tokens = 0;
    for (std::size_t start = 0; start < order.size(); start += train_config.batch_size) {
      const std::size_t end = std::min(start + train_config.batch_size, order.size());
      double tokens = 0;
      for (std::size_t b = start; b < end; ++b) tokens += train_set[order[b]].targets.size();
      Tape tape;
      Var total;
      for (std::size_t b = start; b < end; ++b) {
        const auto& tc = train_set[order[b]];
        Var part = scale(cluster_loss(tape, model, tc, alpha3, top_k),
                         static_cast<double>(tc.targets.size()) / tokens);
        total = b == start ? part : add(total, part);
      }
      tape.backward(total);
      adam.step();
      report.step_losses.push_back(total.item());
      epoch_loss += total.item() * tokens;
      epoch_tokens += tokens;
    }
    report.epoch_losses.push_back(epoch_loss / epoch_tokens);
    const double selection = val_set.empty() ? report.epoch_losses.back()
                                             : teacher_forced(model, val_set, alpha3, top_k).loss;
    report.validation_losses.push_back(selection);
    if (selection < best) {
      best = selection;
      best_snapshot = model.parameters().snapshot();
      report.best_epoch = epoch;
    }
    report.best_so_far.push_back(best);
  }
  model.parameters().restore(best_snapshot);
  report.train = teacher_forced(model, train_set, alpha3, top_k);
  if (!val_set.empty()) report.validation = teacher_forced(model, val_set, alpha3, top_k);
  return result;
}

}  // namespace acm::summarizer
