#include <doctest.h>

#include <chrono>
#include <set>

#include "acm/core/error.hpp"
#include "acm/corpus/synthetic.hpp"
#include "acm/decoding/ablation.hpp"
#include "acm/decoding/adapters.hpp"
#include "acm/summarizer/train.hpp"
#include "support/toy_decoding.hpp"

using namespace acm;
using namespace acm::decoding;
using testing::ToyModel;
using testing::ToyScorer;

namespace {

BeamConfig full_width(double lambda) {
  BeamConfig c;
  c.beam_width = 27;
  c.shortlist_k = 27;
  c.max_steps = 3;
  c.length_penalty = lambda;
  return c;
}

std::set<TokenSeq> token_set(const std::vector<Beam>& beams) {
  std::set<TokenSeq> out;
  for (const auto& b : beams) out.insert(b.tokens);
  return out;
}

struct RealFixture {
  corpus::SyntheticCorpus corpus;
  std::vector<corpus::DocumentCluster> clusters;
  summarizer::SummarizerModel model;
  classifier::ClassifierModel trained_like;
  classifier::ClassifierModel uniform;
};

RealFixture real_fixture() {
  corpus::SyntheticConfig sc;
  sc.clusters = 3;
  core::Rng rng(11);
  auto corpus = corpus::generate_synthetic_corpus(sc, rng);
  std::vector<corpus::DocumentCluster> clusters;
  for (const auto& raw : corpus.clusters) clusters.push_back(corpus::make_cluster(raw, corpus.vocab));
  summarizer::SummarizerConfig c;
  c.vocab_size = corpus.vocab.size();
  c.dim = 16;
  c.heads = 2;
  c.ffn = 24;
  c.decoder_layers = 1;
  c.encoder.layers = 1;
  c.encoder.alpha2 = 0.0;
  c.max_summary_tokens = 16;
  auto model = summarizer::SummarizerModel::create(c, rng);
  classifier::ClassifierConfig cc;
  cc.vocab_size = corpus.vocab.size();
  cc.dim = 16;
  cc.heads = 2;
  cc.ffn = 24;
  auto uniform = classifier::ClassifierModel::create(cc, rng);
  auto random = classifier::ClassifierModel::create(cc, rng);
  for (auto& [name, t] : random.parameters()) {
    if (name.rfind("head.", 0) == 0)
      for (double& v : t.data()) v = 2.0 * rng.normal();
  }
  return {std::move(corpus), std::move(clusters), std::move(model), std::move(random),
          std::move(uniform)};
}

}  // namespace

TEST_CASE("full-width beam search matches exhaustive search") {
  for (double lambda : {0.0, 0.6}) {
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
      const ToyModel model(3, seed);
      const auto config = full_width(lambda);
      const auto oracle = testing::exhaustive(model, nullptr, config);
      const auto result = beam_search(model, config);
      REQUIRE(oracle.size() == 15);
      CHECK(testing::same_beams(result.hypotheses, oracle));
    }
  }
}

TEST_CASE("full-width conditioned search matches exhaustive search") {
  for (auto mode : {AttributeMode::kWholePrefix, AttributeMode::kAccumulated}) {
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
      const ToyModel model(3, seed);
      const ToyScorer scorer(seed + 1000);
      auto config = full_width(0.6);
      config.alpha1 = 0.22;
      config.attribute_mode = mode;
      const auto oracle = testing::exhaustive(model, &scorer, config);
      const auto result = conditioned_beam_search(model, scorer, config);
      CHECK(testing::same_beams(result.hypotheses, oracle));
    }
  }
}

TEST_CASE("a large discriminator weight can change the winner") {
  std::size_t changed = 0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const ToyModel model(3, seed);
    const ToyScorer scorer(seed + 1000);
    auto config = full_width(0.6);
    config.alpha1 = 5.0;
    const auto plain = beam_search(model, config).best().tokens;
    if (conditioned_beam_search(model, scorer, config).best().tokens != plain) ++changed;
  }
  CHECK(changed > 0);
}

TEST_CASE("width one is greedy decoding") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const ToyModel model(5, seed);
    BeamConfig config;
    config.beam_width = 1;
    config.max_steps = 6;
    TokenSeq greedy;
    while (greedy.size() < config.max_steps) {
      const auto lp = model.next_logprobs(greedy);
      const auto best = static_cast<TokenId>(std::max_element(lp.begin(), lp.end()) - lp.begin());
      greedy.push_back(best);
      if (best == model.eos()) break;
    }
    CHECK(beam_search(model, config).best().tokens == greedy);
  }
}

TEST_CASE("zero discriminator weight reproduces the baseline bit for bit") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const ToyModel model(6, seed);
    const ToyScorer scorer(seed);
    BeamConfig config;
    config.max_steps = 6;
    config.alpha1 = 0.0;
    const auto plain = beam_search(model, config);
    const auto conditioned = conditioned_beam_search(model, scorer, config);
    REQUIRE(plain.hypotheses.size() == conditioned.hypotheses.size());
    for (std::size_t i = 0; i < plain.hypotheses.size(); ++i) {
      CHECK(plain.hypotheses[i].tokens == conditioned.hypotheses[i].tokens);
      CHECK(plain.hypotheses[i].combined == conditioned.hypotheses[i].combined);
    }
  }

  auto f = real_fixture();
  BeamConfig config;
  config.max_steps = 10;
  config.alpha1 = 0.0;
  const auto conditioning = f.model.condition(f.clusters[0], nullptr, 0);
  const SummarizerLanguageModel lm(f.model, f.model.encode(conditioning));
  const ClassifierScorer scorer(f.trained_like, 1);
  const auto plain = beam_search(lm, config);
  const auto conditioned = conditioned_beam_search(lm, scorer, config);
  CHECK(plain.best().tokens == conditioned.best().tokens);
  CHECK(plain.best().combined == conditioned.best().combined);
}

TEST_CASE("a uniform classifier preserves the baseline ranking") {
  auto f = real_fixture();
  const auto conditioning = f.model.condition(f.clusters[1], nullptr, 0);
  const SummarizerLanguageModel lm(f.model, f.model.encode(conditioning));
  const ClassifierScorer scorer(f.uniform, 0);
  for (double alpha1 : {0.22, 1.0, 10.0}) {
    BeamConfig config;
    config.max_steps = 10;
    config.alpha1 = alpha1;
    config.length_penalty = 0.0;
    const auto plain = beam_search(lm, config);
    const auto conditioned = conditioned_beam_search(lm, scorer, config);
    CHECK(plain.best().tokens == conditioned.best().tokens);
    config.length_penalty = 0.6;
    CHECK(token_set(beam_search(lm, config).hypotheses) ==
          token_set(conditioned_beam_search(lm, scorer, config).hypotheses));
  }
}

TEST_CASE("scores along every hypothesis are consistent") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const ToyModel model(8, seed);
    const ToyScorer scorer(seed);
    for (auto mode : {AttributeMode::kWholePrefix, AttributeMode::kAccumulated}) {
      BeamConfig config;
      config.max_steps = 7;
      config.attribute_mode = mode;
      const auto result = conditioned_beam_search(model, scorer, config);
      for (const auto& h : result.hypotheses) {
        CHECK(h.base_lp <= 0.0);
        CHECK(h.attr_lp <= 0.0);
        CHECK(h.combined == h.base_lp + config.alpha1 * h.attr_lp);
        double base = 0.0, attr = 0.0, prev_base = 0.0, prev_combined = 0.0;
        TokenSeq prefix;
        for (TokenId t : h.tokens) {
          const TokenId cand[] = {t};
          base += model.next_logprobs(prefix)[t];
          const double s = scorer.extension_log_scores(prefix, cand)[0];
          attr = mode == AttributeMode::kAccumulated ? attr + s : s;
          const double combined = base + config.alpha1 * attr;
          CHECK(base <= prev_base);
          if (mode == AttributeMode::kAccumulated) CHECK(combined <= prev_combined);
          prev_base = base;
          prev_combined = combined;
          prefix.push_back(t);
        }
        CHECK(base == h.base_lp);
        CHECK(attr == h.attr_lp);
      }
    }
  }
}

TEST_CASE("decoding is deterministic and stays within the step limit") {
  auto f = real_fixture();
  BeamConfig config;
  config.max_steps = 12;
  const auto a = summarize_cluster(f.model, &f.trained_like, f.clusters[2], 1, config);
  const auto b = summarize_cluster(f.model, &f.trained_like, f.clusters[2], 1, config);
  CHECK(a.tokens == b.tokens);
  CHECK(a.combined == b.combined);
  CHECK(a.tokens.size() <= config.max_steps);
  for (TokenId t : a.tokens) CHECK(t < f.corpus.vocab.size());
}

TEST_CASE("finished beams are frozen") {
  const ToyModel model(4, 3);
  BeamConfig config;
  config.beam_width = 3;
  config.max_steps = 8;
  const auto result = beam_search(model, config);
  for (const auto& step : result.steps) {
    for (const auto& beam : step) CHECK_FALSE(beam.finished);
  }
  for (const auto& h : result.hypotheses) {
    const auto eos_at = std::find(h.tokens.begin(), h.tokens.end(), model.eos());
    if (h.finished) {
      CHECK(eos_at == h.tokens.end() - 1);
    } else {
      CHECK(eos_at == h.tokens.end());
      CHECK(h.tokens.size() == config.max_steps);
    }
  }
}

TEST_CASE("configuration is validated") {
  const ToyModel model(3, 0);
  BeamConfig config;
  config.shortlist_k = 2;
  CHECK_THROWS_AS(beam_search(model, config), ConfigError);
  config = BeamConfig{};
  config.beam_width = 0;
  CHECK_THROWS_AS(beam_search(model, config), ConfigError);
  config = BeamConfig{};
  config.alpha1 = -0.1;
  CHECK_THROWS_AS(beam_search(model, config), ConfigError);
  config = BeamConfig{};
  config.max_steps = 0;
  CHECK_THROWS_AS(beam_search(model, config), ConfigError);

  auto f = real_fixture();
  CHECK_THROWS_AS(summarize_cluster(f.model, nullptr, f.clusters[0], 0, BeamConfig{}),
                  ConfigError);
}

TEST_CASE("length penalty variants") {
  Beam b;
  b.tokens = {1, 2, 3, 4};
  b.combined = -2.0;
  BeamConfig config;
  config.length_penalty = 0.5;
  CHECK(final_score(b, config) == doctest::Approx(-1.0).epsilon(1e-15));
  config.penalty = LengthPenalty::kGnmt;
  CHECK(final_score(b, config) == doctest::Approx(-2.0 / std::sqrt(1.5)).epsilon(1e-15));
  config.length_penalty = 0.0;
  CHECK(final_score(b, config) == -2.0);
}

TEST_CASE("ablation reports one row per variant") {
  auto f = real_fixture();
  BeamConfig config;
  config.max_steps = 6;
  config.shortlist_k = 10;
  const std::vector<Variant> variants = {
      {"baseline", &f.model, 0.0}, {"discriminator", &f.model, 0.22}, {"strong", &f.model, 2.0}};
  const std::vector<std::size_t> targets = {0, 1, 0};
  const auto rows = ablate(variants, f.clusters, targets, f.trained_like, config);
  REQUIRE(rows.size() == 3);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].name == variants[i].name);
    CHECK(rows[i].decodes.size() == 3);
    CHECK(rows[i].report.pairs == 3);
    REQUIRE(rows[i].report.consistency);
    CHECK(rows[i].report.consistency->mean >= 0.0);
    CHECK(rows[i].report.consistency->mean <= 1.0);
  }
  const std::vector<Variant> missing = {{"broken", nullptr, 0.0}};
  CHECK_THROWS_AS(ablate(missing, f.clusters, targets, f.trained_like, config), ConfigError);
}
