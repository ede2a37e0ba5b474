#include "acm/core/nn.hpp"

#include <cmath>

#include "acm/core/error.hpp"
#include "acm/core/kernels.hpp"

namespace acm::core::nn {

Linear Linear::create(ParameterStore& store, const std::string& name, std::size_t in,
                      std::size_t out, Rng& rng) {
  Linear l;
  l.weight = &store.add_normal(name + ".weight", {in, out},
                               1.0 / std::sqrt(static_cast<double>(in)), rng);
  l.bias = &store.add_constant(name + ".bias", {out}, 0.0);
  return l;
}

Linear Linear::bind(ParameterStore& store, const std::string& name) {
  return {&store.get(name + ".weight"), &store.get(name + ".bias")};
}

Var Linear::operator()(Tape& tape, Var x) const {
  return add_bias(matmul(x, tape.parameter(*weight)), tape.parameter(*bias));
}

LayerNorm LayerNorm::create(ParameterStore& store, const std::string& name, std::size_t dim) {
  return {&store.add_constant(name + ".gain", {dim}, 1.0),
          &store.add_constant(name + ".bias", {dim}, 0.0)};
}

LayerNorm LayerNorm::bind(ParameterStore& store, const std::string& name) {
  return {&store.get(name + ".gain"), &store.get(name + ".bias")};
}

Var LayerNorm::operator()(Tape& tape, Var x) const {
  return layer_norm(x, tape.parameter(*gain), tape.parameter(*bias));
}

FeedForward FeedForward::create(ParameterStore& store, const std::string& name,
                                std::size_t dim, std::size_t hidden, Rng& rng) {
  return {Linear::create(store, name + ".up", dim, hidden, rng),
          Linear::create(store, name + ".down", hidden, dim, rng)};
}

FeedForward FeedForward::bind(ParameterStore& store, const std::string& name) {
  return {Linear::bind(store, name + ".up"), Linear::bind(store, name + ".down")};
}

Var FeedForward::operator()(Tape& tape, Var x) const {
  return down(tape, gelu(up(tape, x)));
}

AttentionWeights AttentionWeights::create(ParameterStore& store, const std::string& name,
                                          std::size_t dim, std::size_t heads, Rng& rng) {
  if (heads == 0 || dim % heads != 0) {
    throw ConfigError("model dim " + std::to_string(dim) + " not divisible by " +
                      std::to_string(heads) + " heads");
  }
  AttentionWeights w;
  w.query = Linear::create(store, name + ".query", dim, dim, rng);
  w.key = Linear::create(store, name + ".key", dim, dim, rng);
  w.value = Linear::create(store, name + ".value", dim, dim, rng);
  w.output = Linear::create(store, name + ".output", dim, dim, rng);
  w.heads = heads;
  return w;
}

AttentionWeights AttentionWeights::bind(ParameterStore& store, const std::string& name,
                                        std::size_t heads) {
  AttentionWeights w;
  w.query = Linear::bind(store, name + ".query");
  w.key = Linear::bind(store, name + ".key");
  w.value = Linear::bind(store, name + ".value");
  w.output = Linear::bind(store, name + ".output");
  w.heads = heads;
  return w;
}

Var attention(Tape& tape, const AttentionWeights& w, Var queries, Var memory,
              const Tensor* score_bias, bool causal, AttentionTrace* trace) {
  const std::size_t n = queries.value().shape().at(0);
  const std::size_t m = memory.value().shape().at(0);
  if (n == 0 || m == 0) throw DimensionError("attention over an empty sequence");
  if (score_bias && score_bias->shape() != Shape{n, m}) {
    throw DimensionError("attention bias has shape " + shape_string(score_bias->shape()) +
                         ", expected " + shape_string({n, m}));
  }
  const std::size_t dh = w.head_dim();
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));

  Var q = w.query(tape, queries);
  Var k = w.key(tape, memory);
  Var v = w.value(tape, memory);
  std::vector<Var> heads;
  heads.reserve(w.heads);
  for (std::size_t h = 0; h < w.heads; ++h) {
    Var qh = slice_cols(q, h * dh, dh);
    Var kh = slice_cols(k, h * dh, dh);
    Var vh = slice_cols(v, h * dh, dh);
    Var scores = scale(matmul_nt(qh, kh), inv_sqrt);
    if (score_bias) scores = add_const(scores, *score_bias);
    Var probs = causal ? causal_softmax(scores) : softmax(scores, -1);
    if (trace) {
      trace->scores.push_back(scores.value());
      trace->weights.push_back(probs.value());
    }
    heads.push_back(matmul(probs, vh));
  }
  Var merged = w.heads == 1 ? heads[0] : concat_cols(heads);
  return w.output(tape, merged);
}

std::vector<double> apply(const Linear& layer, std::span<const double> x, std::size_t rows) {
  const std::size_t in = layer.in_features(), out = layer.out_features();
  if (x.size() != rows * in) throw DimensionError("linear input size mismatch");
  std::vector<double> y(rows * out, 0.0);
  kernels::gemm_nn(x, layer.weight->data(), y, rows, in, out);
  const auto b = layer.bias->data();
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < out; ++j) y[r * out + j] += b[j];
  return y;
}

std::vector<double> apply(const LayerNorm& norm, std::span<const double> x, std::size_t rows) {
  const std::size_t d = norm.gain->size();
  if (x.size() != rows * d) throw DimensionError("layer norm input size mismatch");
  std::vector<double> y(x.size());
  for (std::size_t r = 0; r < rows; ++r) {
    kernels::layer_norm_row(x.subspan(r * d, d), norm.gain->data(), norm.bias->data(),
                            std::span<double>(y).subspan(r * d, d), 1e-5);
  }
  return y;
}

std::vector<double> apply(const FeedForward& ffn, std::span<const double> x, std::size_t rows) {
  auto h = apply(ffn.up, x, rows);
  for (double& v : h) v = kernels::gelu(v);
  return apply(ffn.down, h, rows);
}

Tensor sinusoidal_positions(std::size_t count, std::size_t dim) {
  Tensor pe({count, dim});
  for (std::size_t pos = 0; pos < count; ++pos) {
    for (std::size_t i = 0; i < dim; ++i) {
      const double freq =
          std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / static_cast<double>(dim));
      const double angle = static_cast<double>(pos) * freq;
      pe.at(pos, i) = (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
    }
  }
  return pe;
}

}  // namespace acm::core::nn
