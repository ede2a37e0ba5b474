#include "acm/encoder/graph_encoder.hpp"

#include <cmath>

#include "acm/core/error.hpp"

namespace acm::encoder {

namespace nn = core::nn;
using core::Tape;
using core::Tensor;
using core::Var;

void validate(const EncoderConfig& config) {
  if (config.heads == 0 || config.dim % config.heads != 0) {
    throw ConfigError("encoder dim " + std::to_string(config.dim) + " not divisible by " +
                      std::to_string(config.heads) + " heads");
  }
  if (!(config.sigma > 0.0)) throw ConfigError("sigma must be positive");
  if (!(config.alpha2 >= 0.0)) throw ConfigError("alpha2 must be non-negative");
  if (config.max_paragraphs == 0) throw ConfigError("max_paragraphs must be positive");
}

Tensor relation_bias(const corpus::SimilarityGraph& graph, double sigma) {
  if (!(sigma > 0.0)) throw ConfigError("sigma must be positive, got " + std::to_string(sigma));
  const std::size_t n = graph.size();
  Tensor r({n, n});
  const double denom = 2.0 * sigma * sigma;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double gap = 1.0 - graph(i, j);
      r.at(i, j) = -(gap * gap) / denom;
    }
  }
  return r;
}

Tensor conditioning_bias(std::span<const double> beta, const Tensor& relation, double alpha2) {
  const std::size_t n = beta.size();
  if (relation.shape() != core::Shape{n, n}) {
    throw DimensionError("relation bias is " + core::shape_string(relation.shape()) + " for " +
                         std::to_string(n) + " paragraph scores");
  }
  Tensor bias({n, n});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      bias.at(i, j) = alpha2 * beta[i] * beta[j] + relation.at(i, j);
  return bias;
}

Var conditioned_attention(Tape& tape, const nn::AttentionWeights& weights, Var x,
                          const Tensor& relation, std::span<const double> beta, double alpha2,
                          nn::AttentionTrace* trace) {
  if (x.shape().at(0) == 0) throw DimensionError("conditioned attention over zero paragraphs");
  if (beta.size() != x.shape()[0]) {
    throw DimensionError(std::to_string(beta.size()) + " paragraph scores for " +
                         std::to_string(x.shape()[0]) + " paragraphs");
  }
  const Tensor bias = conditioning_bias(beta, relation, alpha2);
  return nn::attention(tape, weights, x, x, &bias, false, trace);
}

ClusterConditioning prepare_cluster(const corpus::DocumentCluster& cluster,
                                    const classifier::ClassifierModel* classifier,
                                    std::size_t target_class, const EncoderConfig& config,
                                    std::size_t max_input_tokens) {
  ClusterConditioning out;
  out.input = corpus::concatenate(cluster, max_input_tokens);
  const std::size_t n = out.input.spans.size();
  if (n == 0) throw DataError("cluster has no paragraphs within the model input");
  if (n > config.max_paragraphs) {
    throw DataError("cluster has " + std::to_string(n) + " paragraphs; max_paragraphs is " +
                    std::to_string(config.max_paragraphs));
  }
  std::vector<corpus::TokenSeq> paragraphs;
  for (const auto& [b, e] : out.input.spans) {
    paragraphs.emplace_back(out.input.tokens.begin() + static_cast<std::ptrdiff_t>(b),
                            out.input.tokens.begin() + static_cast<std::ptrdiff_t>(e));
  }
  out.relation = relation_bias(corpus::build_similarity_graph(paragraphs), config.sigma);
  out.beta.assign(n, 0.0);
  if (classifier) {
    for (std::size_t i = 0; i < n; ++i) {
      out.beta[i] = classifier::score_paragraph(*classifier, cluster, out.input.paragraph_index[i],
                                                target_class);
    }
  }
  return out;
}

GraphEncoder GraphEncoder::create(core::ParameterStore& store, const std::string& prefix,
                                  const EncoderConfig& config, core::Rng& rng) {
  validate(config);
  store.add_normal(prefix + "paragraph_positions", {config.max_paragraphs, config.dim}, 0.02,
                   rng);
  for (std::size_t i = 0; i < config.layers; ++i) {
    const auto name = prefix + "layer" + std::to_string(i);
    nn::LayerNorm::create(store, name + ".norm1", config.dim);
    nn::AttentionWeights::create(store, name + ".attention", config.dim, config.heads, rng);
    nn::LayerNorm::create(store, name + ".norm2", config.dim);
    nn::FeedForward::create(store, name + ".ffn", config.dim, config.ffn, rng);
  }
  nn::LayerNorm::create(store, prefix + "final_norm", config.dim);
  return bind(store, prefix, config);
}

GraphEncoder GraphEncoder::bind(core::ParameterStore& store, const std::string& prefix,
                                const EncoderConfig& config) {
  validate(config);
  GraphEncoder e;
  e.config_ = config;
  e.positions_ = &store.get(prefix + "paragraph_positions");
  for (std::size_t i = 0; i < config.layers; ++i) {
    const auto name = prefix + "layer" + std::to_string(i);
    e.blocks_.push_back({nn::LayerNorm::bind(store, name + ".norm1"),
                         nn::LayerNorm::bind(store, name + ".norm2"),
                         nn::AttentionWeights::bind(store, name + ".attention", config.heads),
                         nn::FeedForward::bind(store, name + ".ffn")});
  }
  e.final_norm_ = nn::LayerNorm::bind(store, prefix + "final_norm");
  return e;
}

Var GraphEncoder::embed_paragraphs(Tape& tape, Var token_table,
                                   const corpus::ModelInput& input) const {
  const std::size_t n = input.spans.size();
  std::vector<std::size_t> rows(n);
  for (std::size_t i = 0; i < n; ++i) rows[i] = i;
  Var means = segment_mean(token_table, input.tokens, input.spans);
  return add(means, embedding(tape.parameter(*positions_), rows));
}

Var GraphEncoder::forward(Tape& tape, Var token_table, const ClusterConditioning& cond,
                          EncoderTrace* trace) const {
  Var x = embed_paragraphs(tape, token_table, cond.input);
  for (const auto& b : blocks_) {
    nn::AttentionTrace* layer_trace = nullptr;
    if (trace) layer_trace = &trace->layers.emplace_back();
    Var u = conditioned_attention(tape, b.attention, b.norm1(tape, x), cond.relation, cond.beta,
                                  config_.alpha2, layer_trace);
    x = add(x, u);
    x = add(x, b.ffn(tape, b.norm2(tape, x)));
  }
  return final_norm_(tape, x);
}

Tensor encode_cluster(const GraphEncoder& encoder, Tensor& token_table,
                      const ClusterConditioning& conditioning, EncoderTrace* trace) {
  Tape tape;
  return encoder.forward(tape, tape.parameter(token_table), conditioning, trace).value();
}

}  // namespace acm::encoder
