#include <doctest.h>

#include <cmath>

#include "acm/classifier/train.hpp"
#include "acm/core/error.hpp"
#include "acm/core/kernels.hpp"
#include "acm/corpus/prefix.hpp"
#include "acm/corpus/synthetic.hpp"
#include "acm/encoder/graph_encoder.hpp"
#include "support/gradcheck.hpp"

using namespace acm;
using namespace acm::encoder;
using core::Tensor;

namespace {

corpus::SimilarityGraph graph_from(std::initializer_list<std::initializer_list<double>> rows) {
  corpus::SimilarityGraph g(rows.size());
  std::size_t i = 0;
  for (const auto& row : rows) {
    std::size_t j = 0;
    for (double v : row) g(i, j++) = v;
    ++i;
  }
  return g;
}

corpus::SimilarityGraph random_graph(std::size_t n, core::Rng& rng) {
  corpus::SimilarityGraph g(n);
  for (std::size_t i = 0; i < n; ++i) {
    g(i, i) = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) g(i, j) = g(j, i) = rng.uniform();
  }
  return g;
}

void set_identity(const core::nn::Linear& l) {
  *l.weight = Tensor::identity(l.in_features());
  for (double& v : l.bias->data()) v = 0.0;
}

}  // namespace

TEST_CASE("relation bias") {
  auto g = graph_from({{1.0, 0.0}, {0.0, 1.0}});
  auto r = relation_bias(g, 1.0);
  CHECK(r.at(0, 0) == 0.0);
  CHECK(r.at(0, 1) == -0.5);
  auto half = relation_bias(graph_from({{1.0, 0.5}, {0.5, 1.0}}), 0.5);
  CHECK(half.at(0, 1) == -0.5);
  CHECK_THROWS_AS(relation_bias(g, 0.0), ConfigError);
  CHECK_THROWS_AS(relation_bias(g, -1.0), ConfigError);
  core::Rng rng(1);
  auto rg = relation_bias(random_graph(6, rng), 0.7);
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(rg.at(i, i) == 0.0);
    for (std::size_t j = 0; j < 6; ++j) CHECK(rg.at(i, j) <= 0.0);
  }
}

TEST_CASE("conditioned attention: two-paragraph hand case") {
  core::ParameterStore store;
  core::Rng rng(2);
  auto w = core::nn::AttentionWeights::create(store, "attn", 2, 1, rng);
  for (auto* l : {&w.query, &w.key, &w.value, &w.output}) set_identity(*l);
  const double beta[] = {1.0, 1.0};
  auto relation = relation_bias(graph_from({{1.0, 0.0}, {0.0, 1.0}}), 1.0);
  core::Tape tape;
  core::nn::AttentionTrace trace;
  auto u = conditioned_attention(tape, w, tape.constant(Tensor::identity(2)), relation, beta,
                                 0.4, &trace);
  // softmax([1/√2 + 0.4, 0.4 − 0.5]) evaluated at 30 digits.
  const double same = 0.769786627016937707580178105514;
  const double other = 0.230213372983062292419821894486;
  CHECK(std::abs(trace.weights[0].at(0, 0) - same) <= 1e-12);
  CHECK(std::abs(trace.weights[0].at(0, 1) - other) <= 1e-12);
  CHECK(std::abs(u.value().at(0, 0) - same) <= 1e-12);
  CHECK(std::abs(u.value().at(0, 1) - other) <= 1e-12);
  CHECK(std::abs(u.value().at(1, 1) - same) <= 1e-12);
  CHECK(std::abs(u.value().at(1, 0) - other) <= 1e-12);
}

TEST_CASE("conditioned attention degenerate cases") {
  core::ParameterStore store;
  core::Rng rng(3);
  auto w = core::nn::AttentionWeights::create(store, "attn", 8, 2, rng);
  Tensor x = testing::random_tensor({4, 8}, rng, 1.0);
  const std::vector<double> zeros(4, 0.0);
  corpus::SimilarityGraph ones(4);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) ones(i, j) = 1.0;

  core::Tape tape;
  auto plain = core::nn::attention(tape, w, tape.constant(x), tape.constant(x), nullptr, false);
  auto cond = conditioned_attention(tape, w, tape.constant(x), relation_bias(ones, 1.0), zeros,
                                    0.4);
  for (std::size_t i = 0; i < plain.value().size(); ++i)
    CHECK(std::abs(plain.value()[i] - cond.value()[i]) <= 1e-12);

  // Single paragraph: the only weight is one and u₀ = out(x₀W_V).
  Tensor x1 = testing::random_tensor({1, 8}, rng, 1.0);
  core::nn::AttentionTrace trace;
  const double b1[] = {0.7};
  auto single = conditioned_attention(tape, w, tape.constant(x1), Tensor({1, 1}, -0.0), b1, 0.4,
                                      &trace);
  CHECK(trace.weights[0].at(0, 0) == 1.0);
  auto v = core::nn::apply(w.output, core::nn::apply(w.value, x1.data(), 1), 1);
  for (std::size_t j = 0; j < 8; ++j) CHECK(std::abs(single.value()[j] - v[j]) <= 1e-12);

  CHECK_THROWS_AS(conditioned_attention(tape, w, tape.constant(x), Tensor({3, 3}), zeros, 0.4),
                  DimensionError);
  CHECK_THROWS_AS(conditioned_attention(tape, w, tape.constant(Tensor({0, 8})), Tensor({0, 0}),
                                        {}, 0.4),
                  DimensionError);
}

TEST_CASE("attention rows sum to one and the attribute term is symmetric") {
  core::ParameterStore store;
  core::Rng rng(4);
  auto w = core::nn::AttentionWeights::create(store, "attn", 8, 4, rng);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 1 + rng.below(7);
    Tensor x = testing::random_tensor({n, 8}, rng, 1.0);
    std::vector<double> beta(n), none(n, 0.0);
    for (double& b : beta) b = rng.uniform();
    auto relation = relation_bias(random_graph(n, rng), 0.5 + rng.uniform());
    core::Tape tape;
    core::nn::AttentionTrace with, without;
    conditioned_attention(tape, w, tape.constant(x), relation, beta, 0.4, &with);
    conditioned_attention(tape, w, tape.constant(x), relation, none, 0.4, &without);
    for (std::size_t h = 0; h < 4; ++h) {
      for (std::size_t i = 0; i < n; ++i) {
        double row = 0;
        for (std::size_t j = 0; j < n; ++j) {
          row += with.weights[h].at(i, j);
          const double term_ij = with.scores[h].at(i, j) - without.scores[h].at(i, j);
          const double term_ji = with.scores[h].at(j, i) - without.scores[h].at(j, i);
          CHECK(std::abs(term_ij - term_ji) <= 1e-12);
          CHECK(std::abs(term_ij - 0.4 * beta[i] * beta[j]) <= 1e-12);
        }
        CHECK(std::abs(row - 1.0) <= 1e-9);
      }
    }
  }
}

TEST_CASE("raising similarity never lowers the attention weight") {
  core::ParameterStore store;
  core::Rng rng(5);
  auto w = core::nn::AttentionWeights::create(store, "attn", 8, 2, rng);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 2 + rng.below(5);
    Tensor x = testing::random_tensor({n, 8}, rng, 1.0);
    std::vector<double> beta(n);
    for (double& b : beta) b = rng.uniform();
    auto g = random_graph(n, rng);
    const std::size_t i = rng.below(n);
    std::size_t j = rng.below(n - 1);
    if (j >= i) ++j;
    auto bumped = g;
    const double up = g(i, j) + (1.0 - g(i, j)) * rng.uniform();
    bumped(i, j) = bumped(j, i) = up;
    core::Tape tape;
    core::nn::AttentionTrace before, after;
    conditioned_attention(tape, w, tape.constant(x), relation_bias(g, 1.0), beta, 0.4, &before);
    conditioned_attention(tape, w, tape.constant(x), relation_bias(bumped, 1.0), beta, 0.4,
                          &after);
    for (std::size_t h = 0; h < 2; ++h) CHECK(after.weights[h].at(i, j) >= before.weights[h].at(i, j));
  }
}

TEST_CASE("conditioned attention gradient matches finite differences") {
  core::ParameterStore store;
  core::Rng rng(6);
  auto w = core::nn::AttentionWeights::create(store, "attn", 6, 2, rng);
  Tensor x = testing::random_tensor({4, 6}, rng, 1.0);
  Tensor target = testing::random_tensor({4, 6}, rng, 1.0);
  const std::vector<double> beta = {0.9, 0.1, 0.6, 0.3};
  auto relation = relation_bias(random_graph(4, rng), 0.8);
  std::vector<std::pair<std::string, Tensor*>> params = {{"x", &x}};
  for (auto& [name, t] : store) params.emplace_back(name, &t);
  auto result = testing::gradient_check(
      [&](core::Tape& tape) {
        auto u = conditioned_attention(tape, w, tape.parameter(x), relation, beta, 0.4);
        return core::sum(core::mul(u, tape.constant(target)));
      },
      params);
  CHECK_MESSAGE(result.max_relative_error < 1e-4, result.worst_parameter);
}

TEST_CASE("encoder stack: shapes, α₂ = 0 and determinism") {
  EncoderConfig config;
  config.dim = 16;
  config.ffn = 24;
  config.heads = 2;
  core::ParameterStore store;
  core::Rng rng(7);
  auto encoder = GraphEncoder::create(store, "enc.", config, rng);
  Tensor table = testing::random_tensor({12, 16}, rng, 1.0);

  corpus::DocumentCluster cluster;
  cluster.documents = {{5, 6, 7, 8}, {9, 10, 5}};
  cluster.paragraphs = {{0, 0, 2}, {0, 2, 4}, {1, 0, 3}};
  auto cond = prepare_cluster(cluster, nullptr, 0, config, 64);
  CHECK(cond.beta == std::vector<double>(3, 0.0));
  auto out = encode_cluster(encoder, table, cond);
  CHECK(out.shape() == core::Shape{3, 16});
  CHECK(core::identical(out, encode_cluster(encoder, table, cond)));

  auto with_beta = cond;
  with_beta.beta = {0.9, 0.2, 0.7};
  EncoderConfig off = config;
  off.alpha2 = 0.0;
  auto disabled = GraphEncoder::bind(store, "enc.", off);
  auto a = encode_cluster(disabled, table, with_beta);
  auto b = encode_cluster(disabled, table, cond);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) <= 1e-12);
  auto on = encode_cluster(encoder, table, with_beta);
  CHECK_FALSE(core::identical(on, b));

  EncoderConfig bad = config;
  bad.sigma = 0;
  CHECK_THROWS_AS(validate(bad), ConfigError);
  bad = config;
  bad.heads = 3;
  CHECK_THROWS_AS(validate(bad), ConfigError);
}

TEST_CASE("same-class paragraphs attend to each other more than opposite-class ones") {
  corpus::SyntheticConfig sc;
  sc.clusters = 20;
  core::Rng data_rng(9);
  auto corpus = corpus::generate_synthetic_corpus(sc, data_rng);
  classifier::ClassifierConfig cc;
  cc.vocab_size = corpus.vocab.size();
  cc.max_input_tokens = 128;
  classifier::ClassifierTrainConfig tc;
  tc.epochs = 6;
  core::Rng train_rng(10);
  const auto prefixes = corpus::expand_units(corpus.classifier_data);
  auto trained = classifier::train_classifier(prefixes, cc, tc, train_rng);

  EncoderConfig config;
  core::ParameterStore store;
  core::Rng rng(11);
  auto encoder = GraphEncoder::create(store, "enc.", config, rng);
  Tensor table = testing::random_tensor({corpus.vocab.size(), config.dim}, rng, 1.0);

  double same = 0, opposite = 0;
  std::size_t same_n = 0, opposite_n = 0;
  for (std::size_t k = 0; k < corpus.clusters.size(); ++k) {
    auto cluster = corpus::make_cluster(corpus.clusters[k], corpus.vocab);
    const int target = corpus.summary_classes[k];
    auto cond = prepare_cluster(cluster, &trained.model, static_cast<std::size_t>(target), config,
                                512);
    EncoderTrace trace;
    encode_cluster(encoder, table, cond, &trace);
    const auto& labels = cluster.paragraph_labels;
    for (const auto& layer : trace.layers) {
      for (const auto& weights : layer.weights) {
        for (std::size_t i = 0; i < labels.size(); ++i) {
          for (std::size_t j = 0; j < labels.size(); ++j) {
            if (i == j) continue;
            if (labels[i] == target && labels[j] == target) {
              same += weights.at(i, j);
              ++same_n;
            } else if (labels[i] != labels[j]) {
              opposite += weights.at(i, j);
              ++opposite_n;
            }
          }
        }
      }
    }
  }
  same /= static_cast<double>(same_n);
  opposite /= static_cast<double>(opposite_n);
  MESSAGE("same-class mass " << same << ", opposite-class mass " << opposite);
  CHECK(same > opposite);
}
