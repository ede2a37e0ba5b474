#include "acm/classifier/train.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "acm/core/adam.hpp"
#include "acm/core/error.hpp"
#include "acm/core/kernels.hpp"

namespace acm::classifier {

using core::Tape;
using core::Var;

std::vector<PrefixGroup> group_prefixes(std::span<const corpus::LabeledPrefix> data) {
  std::map<int, std::vector<const corpus::LabeledPrefix*>> by_label;
  for (const auto& p : data) {
    if (!p.tokens.empty()) by_label[p.label].push_back(&p);
  }
  std::vector<PrefixGroup> groups;
  for (auto& [label, items] : by_label) {
    std::sort(items.begin(), items.end(),
              [](const auto* a, const auto* b) { return a->tokens < b->tokens; });
    // In lexicographic order a sequence directly precedes its extensions, so
    // a reverse scan only ever needs to look at the most recent group.
    std::vector<PrefixGroup> local;
    for (auto it = items.rbegin(); it != items.rend(); ++it) {
      const auto& tokens = (*it)->tokens;
      if (!local.empty()) {
        auto& g = local.back();
        if (tokens.size() <= g.tokens.size() &&
            std::equal(tokens.begin(), tokens.end(), g.tokens.begin())) {
          ++g.counts[tokens.size() - 1];
          continue;
        }
      }
      PrefixGroup g{tokens, label, std::vector<std::size_t>(tokens.size(), 0)};
      g.counts.back() = 1;
      local.push_back(std::move(g));
    }
    groups.insert(groups.end(), std::make_move_iterator(local.rbegin()),
                  std::make_move_iterator(local.rend()));
  }
  std::sort(groups.begin(), groups.end(), [](const auto& a, const auto& b) {
    return a.tokens != b.tokens ? a.tokens < b.tokens : a.label < b.label;
  });
  return groups;
}

SplitMetrics evaluate(const ClassifierModel& model, std::span<const PrefixGroup> groups) {
  SplitMetrics m;
  if (groups.empty()) return m;
  double seq_ok = 0, prefix_ok = 0, first_ok = 0, first_total = 0, loss = 0;
  for (const auto& g : groups) {
    const core::Tensor logits = model.prefix_logits(g.tokens);
    const auto label = static_cast<std::size_t>(g.label);
    for (std::size_t i = 0; i < g.counts.size(); ++i) {
      const auto row = logits.row(i);
      const auto pred = static_cast<std::size_t>(
          std::max_element(row.begin(), row.end()) - row.begin());
      const bool ok = pred == label;
      if (i + 1 == g.counts.size()) seq_ok += ok;
      if (g.counts[i] == 0) continue;
      const double c = static_cast<double>(g.counts[i]);
      prefix_ok += ok * c;
      loss += c * (core::kernels::log_sum_exp(row) - row[label]);
      m.prefixes += g.counts[i];
      if (i == 0) {
        first_ok += ok * c;
        first_total += c;
      }
    }
  }
  m.sequences = groups.size();
  m.sequence_accuracy = seq_ok / static_cast<double>(groups.size());
  m.prefix_accuracy = prefix_ok / static_cast<double>(m.prefixes);
  m.loss = loss / static_cast<double>(m.prefixes);
  if (first_total > 0) m.first_token_accuracy = first_ok / first_total;
  return m;
}

TrainedClassifier train_classifier(std::span<const corpus::LabeledPrefix> data,
                                   const ClassifierConfig& model_config,
                                   const ClassifierTrainConfig& train_config, core::Rng& rng) {
  if (data.empty()) throw TrainingError("classifier training data is empty");
  std::set<int> present;
  for (const auto& p : data) {
    if (p.label < 0 || static_cast<std::size_t>(p.label) >= model_config.classes) {
      throw DataError("label " + std::to_string(p.label) + " outside " +
                      std::to_string(model_config.classes) + " classes");
    }
    for (auto t : p.tokens) {
      if (t >= model_config.vocab_size) {
        throw DataError("token id " + std::to_string(t) + " outside vocabulary of " +
                        std::to_string(model_config.vocab_size));
      }
    }
    present.insert(p.label);
  }
  if (present.size() < 2) {
    throw TrainingError("classifier training data contains a single class");
  }
  if (train_config.batch_size == 0) throw ConfigError("batch_size must be positive");

  auto groups = group_prefixes(data);
  std::vector<std::size_t> order(groups.size());
  std::iota(order.begin(), order.end(), 0);
  auto split_rng = rng.split(1);
  split_rng.shuffle(std::span<std::size_t>(order));
  const std::size_t n = groups.size();
  std::size_t n_test = static_cast<std::size_t>(std::llround(n * train_config.test_fraction));
  std::size_t n_val = static_cast<std::size_t>(std::llround(n * train_config.validation_fraction));
  if (n_test + n_val >= n) n_test = n_val = 0;
  auto take = [&](std::size_t from, std::size_t count) {
    std::vector<PrefixGroup> out;
    for (std::size_t i = from; i < from + count; ++i) out.push_back(groups[order[i]]);
    return out;
  };
  const auto test = take(0, n_test);
  const auto val = take(n_test, n_val);
  auto train = take(n_test + n_val, n - n_test - n_val);

  auto init_rng = rng.split(2);
  TrainedClassifier result{ClassifierModel::create(model_config, init_rng), {}};
  auto& model = result.model;
  auto& report = result.report;
  core::Adam adam(model.parameters(),
                  {train_config.learning_rate, 0.9, 0.999, 1e-8, train_config.clip_norm});

  double best = std::numeric_limits<double>::infinity();
  auto best_snapshot = model.parameters().snapshot();
  std::vector<std::size_t> batch_order(train.size());
  for (std::size_t epoch = 0; epoch < train_config.epochs; ++epoch) {
    std::iota(batch_order.begin(), batch_order.end(), 0);
    auto epoch_rng = rng.split(100 + epoch);
    epoch_rng.shuffle(std::span<std::size_t>(batch_order));

    double epoch_loss = 0, epoch_weight = 0;
    for (std::size_t start = 0; start < batch_order.size(); start += train_config.batch_size) {
      const std::size_t end = std::min(start + train_config.batch_size, batch_order.size());
      double weight = 0;
      for (std::size_t b = start; b < end; ++b) {
        const auto& c = train[batch_order[b]].counts;
        weight += static_cast<double>(std::accumulate(c.begin(), c.end(), std::size_t{0}));
      }
      Tape tape;
      Var total;
      for (std::size_t b = start; b < end; ++b) {
        const auto& g = train[batch_order[b]];
        std::vector<std::size_t> rows, targets;
        for (std::size_t i = 0; i < g.counts.size(); ++i) {
          rows.insert(rows.end(), g.counts[i], i);
        }
        targets.assign(rows.size(), static_cast<std::size_t>(g.label));
        Var logits = model.forward(tape, g.tokens);
        Var ce = cross_entropy(embedding(logits, rows), targets);
        Var part = scale(ce, static_cast<double>(rows.size()) / weight);
        total = b == start ? part : add(total, part);
      }
      tape.backward(total);
      adam.step();
      ++report.steps;
      epoch_loss += total.item() * weight;
      epoch_weight += weight;
    }
    const double train_loss = epoch_loss / epoch_weight;
    report.epoch_losses.push_back(train_loss);
    const double selection = val.empty() ? train_loss : evaluate(model, val).loss;
    if (selection < best) {
      best = selection;
      best_snapshot = model.parameters().snapshot();
      report.best_epoch = epoch;
    }
  }
  model.parameters().restore(best_snapshot);
  report.train = evaluate(model, train);
  report.validation = evaluate(model, val);
  report.test = evaluate(model, test);
  return result;
}

}  // namespace acm::classifier
