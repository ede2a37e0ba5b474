#include "acm/classifier/model.hpp"

#include <algorithm>
#include <cmath>

#include "acm/core/error.hpp"
#include "acm/core/kernels.hpp"

namespace acm::classifier {

namespace nn = core::nn;
namespace kernels = core::kernels;
using core::Tape;
using core::Tensor;
using core::Var;

AttributeScore floor_probabilities(std::span<const double> p) {
  AttributeScore s;
  const double c = static_cast<double>(p.size());
  s.probabilities.reserve(p.size());
  for (double v : p) {
    // The clamp only absorbs rounding at the ends of the range.
    s.probabilities.push_back(std::clamp(kProbabilityFloor + (1.0 - c * kProbabilityFloor) * v,
                                         kProbabilityFloor, 1.0 - kProbabilityFloor));
  }
  return s;
}

AttributeScore uniform_score(std::size_t classes) {
  return AttributeScore{std::vector<double>(classes, 1.0 / static_cast<double>(classes))};
}

namespace {

AttributeScore score_from_logits(std::span<const double> logits) {
  std::vector<double> p(logits.begin(), logits.end());
  kernels::softmax_row(p);
  return floor_probabilities(p);
}

std::string block_name(std::size_t i) { return "block" + std::to_string(i); }

}  // namespace

ClassifierModel ClassifierModel::create(const ClassifierConfig& config, core::Rng& rng) {
  if (config.classes < 2) throw ConfigError("classifier needs at least 2 classes");
  if (config.vocab_size == 0) throw ConfigError("classifier vocab_size must be positive");
  if (config.max_input_tokens == 0) throw ConfigError("max_input_tokens must be positive");
  ClassifierModel m;
  m.config_ = config;
  auto& p = m.params_;
  p.add_normal("embedding", {config.vocab_size, config.dim}, 1.0, rng);
  for (std::size_t i = 0; i < config.blocks; ++i) {
    const auto name = block_name(i);
    nn::LayerNorm::create(p, name + ".norm1", config.dim);
    nn::AttentionWeights::create(p, name + ".attention", config.dim, config.heads, rng);
    nn::LayerNorm::create(p, name + ".norm2", config.dim);
    nn::FeedForward::create(p, name + ".ffn", config.dim, config.ffn, rng);
  }
  nn::LayerNorm::create(p, "final_norm", config.dim);
  // Zero head: an untrained model is exactly uniform.
  p.add_constant("head.weight", {config.dim, config.classes}, 0.0);
  p.add_constant("head.bias", {config.classes}, 0.0);
  m.bind();
  return m;
}

void ClassifierModel::bind() {
  embedding_ = &params_.get("embedding");
  blocks_.clear();
  for (std::size_t i = 0; i < config_.blocks; ++i) {
    const auto name = block_name(i);
    blocks_.push_back({nn::LayerNorm::bind(params_, name + ".norm1"),
                       nn::LayerNorm::bind(params_, name + ".norm2"),
                       nn::AttentionWeights::bind(params_, name + ".attention", config_.heads),
                       nn::FeedForward::bind(params_, name + ".ffn")});
  }
  final_norm_ = nn::LayerNorm::bind(params_, "final_norm");
  head_ = nn::Linear::bind(params_, "head");
  positions_ = nn::sinusoidal_positions(config_.max_input_tokens, config_.dim);
}

void ClassifierModel::check_tokens(std::span<const TokenId> tokens) const {
  if (tokens.empty()) throw DimensionError("classifier input is empty");
  if (tokens.size() > config_.max_input_tokens) {
    throw DimensionError("classifier input of " + std::to_string(tokens.size()) +
                         " tokens exceeds max_input_tokens " +
                         std::to_string(config_.max_input_tokens));
  }
  for (TokenId t : tokens) {
    if (t >= config_.vocab_size) {
      throw IndexError("token id " + std::to_string(t) + " outside classifier vocabulary of " +
                       std::to_string(config_.vocab_size));
    }
  }
}

Var ClassifierModel::forward(Tape& tape, std::span<const TokenId> tokens) const {
  check_tokens(tokens);
  const std::size_t n = tokens.size(), d = config_.dim;
  Tensor pos({n, d});
  std::copy_n(positions_.data().begin(), n * d, pos.data().begin());
  Var x = add_const(embedding(tape.parameter(*embedding_), tokens), pos);
  for (const auto& b : blocks_) {
    Var h = b.norm1(tape, x);
    x = add(x, nn::attention(tape, b.attention, h, h, nullptr, true));
    x = add(x, b.ffn(tape, b.norm2(tape, x)));
  }
  return head_(tape, cumulative_mean(final_norm_(tape, x)));
}

Tensor ClassifierModel::prefix_logits(std::span<const TokenId> tokens) const {
  Tape tape;
  return forward(tape, tokens).value();
}

core::TensorMap ClassifierModel::to_tensors() const {
  core::TensorMap out = params_.snapshot();
  core::put_meta(out, "kind", 1);
  core::put_meta(out, "classes", static_cast<double>(config_.classes));
  core::put_meta(out, "vocab_size", static_cast<double>(config_.vocab_size));
  core::put_meta(out, "dim", static_cast<double>(config_.dim));
  core::put_meta(out, "heads", static_cast<double>(config_.heads));
  core::put_meta(out, "ffn", static_cast<double>(config_.ffn));
  core::put_meta(out, "blocks", static_cast<double>(config_.blocks));
  core::put_meta(out, "max_input_tokens", static_cast<double>(config_.max_input_tokens));
  return out;
}

ClassifierModel ClassifierModel::from_tensors(const core::TensorMap& tensors) {
  if (core::get_meta(tensors, "kind") != 1) throw DataError("checkpoint is not a classifier");
  auto meta = [&](const char* key) { return static_cast<std::size_t>(core::get_meta(tensors, key)); };
  ClassifierConfig config;
  config.classes = meta("classes");
  config.vocab_size = meta("vocab_size");
  config.dim = meta("dim");
  config.heads = meta("heads");
  config.ffn = meta("ffn");
  config.blocks = meta("blocks");
  config.max_input_tokens = meta("max_input_tokens");
  core::Rng rng(0);
  auto model = create(config, rng);
  model.params_.restore(tensors);
  return model;
}

void ClassifierModel::save(const std::filesystem::path& path) const {
  core::save_checkpoint(path, to_tensors());
}

ClassifierModel ClassifierModel::load(const std::filesystem::path& path) {
  return from_tensors(core::load_checkpoint(path));
}

AttributeScore score_prefix(const ClassifierModel& model, std::span<const TokenId> prefix) {
  const Tensor logits = model.prefix_logits(prefix);
  return score_from_logits(logits.row(logits.rows() - 1));
}

std::vector<AttributeScore> score_all_prefixes(const ClassifierModel& model,
                                               std::span<const TokenId> tokens) {
  const Tensor logits = model.prefix_logits(tokens);
  std::vector<AttributeScore> out;
  out.reserve(logits.rows());
  for (std::size_t i = 0; i < logits.rows(); ++i) out.push_back(score_from_logits(logits.row(i)));
  return out;
}

double score_paragraph(const ClassifierModel& model, const corpus::DocumentCluster& cluster,
                       std::size_t paragraph, std::size_t target) {
  if (paragraph >= cluster.paragraph_count()) {
    throw IndexError("paragraph " + std::to_string(paragraph) + " out of range for " +
                     std::to_string(cluster.paragraph_count()) + " paragraphs");
  }
  if (target >= model.config().classes) {
    throw IndexError("class " + std::to_string(target) + " out of range");
  }
  auto tokens = cluster.paragraph_tokens(paragraph);
  if (tokens.empty()) return 1.0 / static_cast<double>(model.config().classes);
  if (tokens.size() > model.config().max_input_tokens) {
    tokens.resize(model.config().max_input_tokens);
  }
  return score_prefix(model, tokens)[target];
}

// ---- PrefixCache ------------------------------------------------------------

PrefixCache::PrefixCache(const ClassifierModel& model)
    : model_(&model),
      keys_(model.config_.blocks),
      values_(model.config_.blocks),
      pooled_sum_(model.config_.dim, 0.0) {}

PrefixCache::Step PrefixCache::run(std::span<const TokenId> tokens) const {
  const auto& cfg = model_->config_;
  const std::size_t k = tokens.size(), d = cfg.dim, n = length_;
  if (n + 1 > cfg.max_input_tokens) {
    throw DimensionError("prefix cache is full at " + std::to_string(n) + " tokens");
  }
  for (TokenId t : tokens) {
    if (t >= cfg.vocab_size) throw IndexError("token id " + std::to_string(t) + " out of range");
  }

  std::vector<double> x(k * d);
  const auto table = model_->embedding_->data();
  const auto pos = model_->positions_.row(n);
  for (std::size_t r = 0; r < k; ++r)
    for (std::size_t j = 0; j < d; ++j) x[r * d + j] = table[tokens[r] * d + j] + pos[j];

  Step step;
  const std::size_t heads = cfg.heads, dh = d / heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<double> scores(n + 1);
  for (std::size_t b = 0; b < model_->blocks_.size(); ++b) {
    const auto& blk = model_->blocks_[b];
    const auto h = nn::apply(blk.norm1, x, k);
    auto q = nn::apply(blk.attention.query, h, k);
    auto kk = nn::apply(blk.attention.key, h, k);
    auto vv = nn::apply(blk.attention.value, h, k);
    const auto& ck = keys_[b];
    const auto& cv = values_[b];
    std::vector<double> merged(k * d, 0.0);
    for (std::size_t r = 0; r < k; ++r) {
      for (std::size_t hd = 0; hd < heads; ++hd) {
        const std::size_t off = hd * dh;
        std::span<const double> qr(q.data() + r * d + off, dh);
        for (std::size_t j = 0; j < n; ++j) {
          scores[j] = kernels::dot(qr, {ck.data() + j * d + off, dh}) * inv_sqrt;
        }
        scores[n] = kernels::dot(qr, {kk.data() + r * d + off, dh}) * inv_sqrt;
        kernels::softmax_row(scores);
        double* out = merged.data() + r * d + off;
        for (std::size_t j = 0; j <= n; ++j) {
          const double* vrow = j < n ? cv.data() + j * d + off : vv.data() + r * d + off;
          for (std::size_t c = 0; c < dh; ++c) out[c] += scores[j] * vrow[c];
        }
      }
    }
    const auto attn = nn::apply(blk.attention.output, merged, k);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += attn[i];
    const auto ff = nn::apply(blk.ffn, nn::apply(blk.norm2, x, k), k);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += ff[i];
    step.keys.push_back(std::move(kk));
    step.values.push_back(std::move(vv));
  }
  step.final_rows = nn::apply(model_->final_norm_, x, k);
  return step;
}

std::vector<double> PrefixCache::pooled_logits(std::span<const double> final_row) const {
  const std::size_t d = model_->config_.dim;
  const double inv = 1.0 / static_cast<double>(length_ + 1);
  std::vector<double> pooled(d);
  for (std::size_t j = 0; j < d; ++j) pooled[j] = (pooled_sum_[j] + final_row[j]) * inv;
  return nn::apply(model_->head_, pooled, 1);
}

void PrefixCache::push(TokenId token) {
  const TokenId one[] = {token};
  Step step = run(one);
  last_logits_ = pooled_logits(step.final_rows);
  for (std::size_t b = 0; b < keys_.size(); ++b) {
    keys_[b].insert(keys_[b].end(), step.keys[b].begin(), step.keys[b].end());
    values_[b].insert(values_[b].end(), step.values[b].begin(), step.values[b].end());
  }
  for (std::size_t j = 0; j < pooled_sum_.size(); ++j) pooled_sum_[j] += step.final_rows[j];
  ++length_;
}

AttributeScore PrefixCache::current() const {
  if (length_ == 0) return uniform_score(model_->config_.classes);
  return score_from_logits(last_logits_);
}

std::vector<AttributeScore> PrefixCache::extensions(std::span<const TokenId> candidates) const {
  std::vector<AttributeScore> out;
  if (candidates.empty()) return out;
  const Step step = run(candidates);
  const std::size_t d = model_->config_.dim;
  out.reserve(candidates.size());
  for (std::size_t r = 0; r < candidates.size(); ++r) {
    out.push_back(score_from_logits(
        pooled_logits(std::span<const double>(step.final_rows).subspan(r * d, d))));
  }
  return out;
}

std::vector<double> extension_log_scores(const ClassifierModel& model,
                                         std::span<const TokenId> prefix,
                                         std::span<const TokenId> candidates,
                                         std::size_t target) {
  if (target >= model.config().classes) {
    throw IndexError("class " + std::to_string(target) + " out of range");
  }
  PrefixCache cache(model);
  for (TokenId t : prefix) {
    if (!corpus::is_control(t)) cache.push(t);
  }
  std::vector<TokenId> text;
  for (TokenId t : candidates) {
    if (!corpus::is_control(t)) text.push_back(t);
  }
  const auto scored = cache.extensions(text);
  const double here = std::log(cache.current()[target]);
  std::vector<double> out;
  out.reserve(candidates.size());
  std::size_t next = 0;
  for (TokenId t : candidates) {
    out.push_back(corpus::is_control(t) ? here : std::log(scored[next++][target]));
  }
  return out;
}

}  // namespace acm::classifier
