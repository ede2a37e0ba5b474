#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "acm/core/autodiff.hpp"
#include "acm/core/parameters.hpp"

// Transformer building blocks shared by the classifier, encoder and decoder.
namespace acm::core::nn {

struct Linear {
  Tensor* weight = nullptr;  // [in × out]
  Tensor* bias = nullptr;    // [out]

  static Linear create(ParameterStore& store, const std::string& name, std::size_t in,
                       std::size_t out, Rng& rng);
  static Linear bind(ParameterStore& store, const std::string& name);
  Var operator()(Tape& tape, Var x) const;
  std::size_t in_features() const { return weight->shape()[0]; }
  std::size_t out_features() const { return weight->shape()[1]; }
};

struct LayerNorm {
  Tensor* gain = nullptr;
  Tensor* bias = nullptr;

  static LayerNorm create(ParameterStore& store, const std::string& name, std::size_t dim);
  static LayerNorm bind(ParameterStore& store, const std::string& name);
  Var operator()(Tape& tape, Var x) const;
};

struct FeedForward {
  Linear up;
  Linear down;

  static FeedForward create(ParameterStore& store, const std::string& name, std::size_t dim,
                            std::size_t hidden, Rng& rng);
  static FeedForward bind(ParameterStore& store, const std::string& name);
  Var operator()(Tape& tape, Var x) const;
};

/// Query/key/value/output projections of a multi-head attention layer.
struct AttentionWeights {
  Linear query, key, value, output;
  std::size_t heads = 1;

  static AttentionWeights create(ParameterStore& store, const std::string& name,
                                 std::size_t dim, std::size_t heads, Rng& rng);
  static AttentionWeights bind(ParameterStore& store, const std::string& name,
                               std::size_t heads);
  std::size_t dim() const { return query.in_features(); }
  std::size_t head_dim() const { return dim() / heads; }
};

/// Per-head intermediate values captured for inspection.
struct AttentionTrace {
  std::vector<Tensor> scores;   // pre-softmax scores including any additive bias
  std::vector<Tensor> weights;  // attention probabilities
};

/// Multi-head attention of `queries` [n×d] over `memory` [m×d].
///
/// `score_bias`, when given, is an n×m constant added to every head's scaled
/// dot-product scores before the softmax. `causal` masks j > i (needs n == m).
Var attention(Tape& tape, const AttentionWeights& w, Var queries, Var memory,
              const Tensor* score_bias, bool causal, AttentionTrace* trace = nullptr);

// Tape-free forwards over row-major [rows × in] buffers, arithmetically
// identical to the recorded ops. Used by cached inference.
std::vector<double> apply(const Linear& layer, std::span<const double> x, std::size_t rows);
std::vector<double> apply(const LayerNorm& norm, std::span<const double> x, std::size_t rows);
std::vector<double> apply(const FeedForward& ffn, std::span<const double> x, std::size_t rows);

/// Fixed sinusoidal position encoding, rows 0..count-1 of width dim.
Tensor sinusoidal_positions(std::size_t count, std::size_t dim);

}  // namespace acm::core::nn
