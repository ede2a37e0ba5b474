#include "acm/summarizer/model.hpp"

#include <cmath>

#include "acm/core/error.hpp"
#include "acm/core/kernels.hpp"

namespace acm::summarizer {

namespace nn = core::nn;
using core::Tape;
using core::Tensor;
using core::Var;

void validate(const ConditioningWeights& w) {
  for (auto [name, v] : {std::pair{"alpha1", w.alpha1}, {"alpha2", w.alpha2}, {"alpha3", w.alpha3}}) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw ConfigError(std::string(name) + " must be a finite non-negative number");
    }
  }
}

namespace {

SummarizerConfig normalized(SummarizerConfig c) {
  c.encoder.dim = c.dim;
  c.encoder.heads = c.heads;
  c.encoder.ffn = c.ffn;
  return c;
}

std::string block_name(std::size_t i) { return "decoder.layer" + std::to_string(i); }

}  // namespace

SummarizerModel SummarizerModel::create(const SummarizerConfig& config, core::Rng& rng) {
  if (config.vocab_size <= corpus::kReservedCount) {
    throw ConfigError("summarizer vocab_size must exceed the reserved ids");
  }
  if (config.max_summary_tokens < 2) throw ConfigError("max_summary_tokens must be at least 2");
  SummarizerModel m;
  m.config_ = normalized(config);
  auto& p = m.params_;
  p.add_normal("embedding", {config.vocab_size, config.dim}, 1.0, rng);
  encoder::GraphEncoder::create(p, "encoder.", m.config_.encoder, rng);
  for (std::size_t i = 0; i < config.decoder_layers; ++i) {
    const auto name = block_name(i);
    nn::LayerNorm::create(p, name + ".norm1", config.dim);
    nn::AttentionWeights::create(p, name + ".self_attention", config.dim, config.heads, rng);
    nn::LayerNorm::create(p, name + ".norm2", config.dim);
    nn::AttentionWeights::create(p, name + ".cross_attention", config.dim, config.heads, rng);
    nn::LayerNorm::create(p, name + ".norm3", config.dim);
    nn::FeedForward::create(p, name + ".ffn", config.dim, config.ffn, rng);
  }
  nn::LayerNorm::create(p, "decoder.final_norm", config.dim);
  m.bind();
  return m;
}

void SummarizerModel::bind() {
  embedding_ = &params_.get("embedding");
  encoder_ = encoder::GraphEncoder::bind(params_, "encoder.", config_.encoder);
  blocks_.clear();
  for (std::size_t i = 0; i < config_.decoder_layers; ++i) {
    const auto name = block_name(i);
    blocks_.push_back({nn::LayerNorm::bind(params_, name + ".norm1"),
                       nn::LayerNorm::bind(params_, name + ".norm2"),
                       nn::LayerNorm::bind(params_, name + ".norm3"),
                       nn::AttentionWeights::bind(params_, name + ".self_attention", config_.heads),
                       nn::AttentionWeights::bind(params_, name + ".cross_attention", config_.heads),
                       nn::FeedForward::bind(params_, name + ".ffn")});
  }
  final_norm_ = nn::LayerNorm::bind(params_, "decoder.final_norm");
  positions_ = nn::sinusoidal_positions(config_.max_summary_tokens, config_.dim);
}

encoder::ClusterConditioning SummarizerModel::condition(
    const corpus::DocumentCluster& cluster, const classifier::ClassifierModel* classifier,
    std::size_t target_class) const {
  const bool graph = config_.encoder.alpha2 != 0.0;
  if (graph && !classifier) throw ConfigError("graph weighting needs a classifier");
  return encoder::prepare_cluster(cluster, graph ? classifier : nullptr, target_class,
                                  config_.encoder, config_.max_input_tokens);
}

Var SummarizerModel::encode(Tape& tape, const encoder::ClusterConditioning& conditioning) const {
  return encoder_.forward(tape, tape.parameter(*embedding_), conditioning);
}

ClusterEncoding SummarizerModel::encode(const encoder::ClusterConditioning& conditioning) const {
  Tape tape;
  return {encode(tape, conditioning).value()};
}

Var SummarizerModel::decode(Tape& tape, Var memory, std::span<const TokenId> input) const {
  const std::size_t n = input.size(), d = config_.dim;
  if (n == 0) throw DimensionError("decoder input is empty");
  if (n > config_.max_summary_tokens) {
    throw DimensionError("decoder input of " + std::to_string(n) +
                         " tokens exceeds max_summary_tokens " +
                         std::to_string(config_.max_summary_tokens));
  }
  for (TokenId t : input) {
    if (t >= config_.vocab_size) throw IndexError("token id " + std::to_string(t) + " out of range");
  }
  Var table = tape.parameter(*embedding_);
  Tensor pos({n, d});
  std::copy_n(positions_.data().begin(), n * d, pos.data().begin());
  Var x = add_const(embedding(table, input), pos);
  for (const auto& b : blocks_) {
    Var h = b.norm1(tape, x);
    x = add(x, nn::attention(tape, b.self_attention, h, h, nullptr, true));
    x = add(x, nn::attention(tape, b.cross_attention, b.norm2(tape, x), memory, nullptr, false));
    x = add(x, b.ffn(tape, b.norm3(tape, x)));
  }
  Var h = final_norm_(tape, x);
  return scale(matmul_nt(h, table), 1.0 / std::sqrt(static_cast<double>(d)));
}

core::TensorMap SummarizerModel::to_tensors() const {
  core::TensorMap out = params_.snapshot();
  const auto& c = config_;
  core::put_meta(out, "kind", 2);
  core::put_meta(out, "vocab_size", static_cast<double>(c.vocab_size));
  core::put_meta(out, "dim", static_cast<double>(c.dim));
  core::put_meta(out, "heads", static_cast<double>(c.heads));
  core::put_meta(out, "ffn", static_cast<double>(c.ffn));
  core::put_meta(out, "decoder_layers", static_cast<double>(c.decoder_layers));
  core::put_meta(out, "encoder_layers", static_cast<double>(c.encoder.layers));
  core::put_meta(out, "sigma", c.encoder.sigma);
  core::put_meta(out, "alpha2", c.encoder.alpha2);
  core::put_meta(out, "max_paragraphs", static_cast<double>(c.encoder.max_paragraphs));
  core::put_meta(out, "max_input_tokens", static_cast<double>(c.max_input_tokens));
  core::put_meta(out, "max_summary_tokens", static_cast<double>(c.max_summary_tokens));
  return out;
}

SummarizerModel SummarizerModel::from_tensors(const core::TensorMap& tensors) {
  if (core::get_meta(tensors, "kind") != 2) throw DataError("checkpoint is not a summarizer");
  auto size = [&](const char* key) {
    return static_cast<std::size_t>(core::get_meta(tensors, key));
  };
  SummarizerConfig c;
  c.vocab_size = size("vocab_size");
  c.dim = size("dim");
  c.heads = size("heads");
  c.ffn = size("ffn");
  c.decoder_layers = size("decoder_layers");
  c.encoder.layers = size("encoder_layers");
  c.encoder.sigma = core::get_meta(tensors, "sigma");
  c.encoder.alpha2 = core::get_meta(tensors, "alpha2");
  c.encoder.max_paragraphs = size("max_paragraphs");
  c.max_input_tokens = size("max_input_tokens");
  c.max_summary_tokens = size("max_summary_tokens");
  core::Rng rng(0);
  auto model = create(c, rng);
  model.params_.restore(tensors);
  return model;
}

void SummarizerModel::save(const std::filesystem::path& path) const {
  core::save_checkpoint(path, to_tensors());
}

SummarizerModel SummarizerModel::load(const std::filesystem::path& path) {
  return from_tensors(core::load_checkpoint(path));
}

std::vector<double> next_token_logprobs(const SummarizerModel& model,
                                        const ClusterEncoding& encoding,
                                        std::span<const TokenId> prefix) {
  TokenSeq input;
  if (prefix.empty() || prefix.front() != corpus::kBos) input.push_back(corpus::kBos);
  input.insert(input.end(), prefix.begin(), prefix.end());
  Tape tape;
  const Tensor logits = model.decode(tape, tape.constant(encoding.memory), input).value();
  const auto last = logits.row(logits.rows() - 1);
  const double lse = core::kernels::log_sum_exp(last);
  std::vector<double> out(last.begin(), last.end());
  for (double& v : out) v -= lse;
  return out;
}

}  // namespace acm::summarizer
