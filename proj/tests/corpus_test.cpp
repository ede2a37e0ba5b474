#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "acm/core/error.hpp"
#include "acm/core/rng.hpp"
#include "acm/corpus/cluster.hpp"
#include "acm/corpus/jsonl.hpp"
#include "acm/corpus/prefix.hpp"
#include "acm/corpus/similarity.hpp"
#include "acm/corpus/synthetic.hpp"
#include "acm/corpus/vocabulary.hpp"

using namespace acm;
using namespace acm::corpus;

namespace {

std::filesystem::path temp_path(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "acm_corpus_test";
  std::filesystem::create_directories(dir);
  return dir / name;
}

// Dense tf-idf + cosine written without maps or sparse tricks.
std::vector<std::vector<double>> dense_similarity(const std::vector<TokenSeq>& paras,
                                                  std::size_t vocab_size) {
  const std::size_t n = paras.size();
  std::vector<std::vector<double>> tf(n, std::vector<double>(vocab_size, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (auto t : paras[i]) tf[i][t] += 1.0;
  std::vector<double> idf(vocab_size);
  for (std::size_t t = 0; t < vocab_size; ++t) {
    double df = 0;
    for (std::size_t i = 0; i < n; ++i) df += tf[i][t] > 0 ? 1.0 : 0.0;
    idf[t] = std::log((1.0 + n) / (1.0 + df)) + 1.0;
  }
  std::vector<std::vector<double>> g(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double dot = 0, ni = 0, nj = 0;
      for (std::size_t t = 0; t < vocab_size; ++t) {
        const double a = tf[i][t] * idf[t], b = tf[j][t] * idf[t];
        dot += a * b;
        ni += a * a;
        nj += b * b;
      }
      g[i][j] = i == j ? 1.0 : (ni > 0 && nj > 0 ? dot / std::sqrt(ni * nj) : 0.0);
    }
  }
  return g;
}

}  // namespace

TEST_CASE("tokenize splits words and punctuation") {
  Vocabulary vocab;
  CHECK(vocab.add("the") == 5);
  CHECK(vocab.add("cat") == 6);
  CHECK(vocab.add(".") == 7);
  CHECK(tokenize("", vocab).empty());
  CHECK(tokenize("The cat.", vocab) == TokenSeq{5, 6, 7});
  CHECK(tokenize("the dog.", vocab) == TokenSeq{5, kUnk, 7});
  CHECK(split_words("Hello,  WORLD!\n ok") ==
        std::vector<std::string>{"hello", ",", "world", "!", "ok"});
  CHECK(detokenize(TokenSeq{kBos, 5, 6, 7, kEos}, vocab) == "the cat .");
}

TEST_CASE("vocabulary reserves ids and round-trips through a file") {
  Vocabulary vocab;
  CHECK(vocab.size() == kReservedCount);
  CHECK(vocab.add("the") == kReservedCount);
  CHECK(vocab.add("the") == kReservedCount);
  std::vector<std::string> texts = {"b a b", "c b a"};
  auto built = Vocabulary::build(texts);
  CHECK(built.id("b") == 5);
  CHECK(built.id("a") == 6);
  CHECK(built.id("c") == 7);

  auto path = temp_path("vocab.txt");
  built.save(path);
  auto loaded = Vocabulary::load(path);
  CHECK(loaded == built);
  CHECK(loaded.id("<pad>") == kPad);
  CHECK(loaded.id("<docsep>") == kDocSep);
  CHECK_THROWS_AS(loaded.token(999), IndexError);

  std::ofstream(path) << "x\nx\n";
  CHECK_THROWS_AS(Vocabulary::load(path), DataError);
}

TEST_CASE("expand_prefixes") {
  CHECK(expand_prefixes({}, 0).empty());
  CHECK(expand_prefixes({9}, 1) == std::vector<LabeledPrefix>{{{9}, 1}});
  CHECK(expand_prefixes({5, 6, 7}, 0) ==
        std::vector<LabeledPrefix>{{{5}, 0}, {{5, 6}, 0}, {{5, 6, 7}, 0}});
  core::Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    TokenSeq s(1 + rng.below(15));
    for (auto& t : s) t = rng.below(50);
    const auto prefixes = expand_prefixes(s, 1);
    REQUIRE(prefixes.size() == s.size());
    for (std::size_t i = 0; i < prefixes.size(); ++i) {
      CHECK(prefixes[i].tokens.size() == i + 1);
      CHECK(std::equal(prefixes[i].tokens.begin(), prefixes[i].tokens.end(), s.begin()));
      CHECK(prefixes[i].label == 1);
    }
  }
}

TEST_CASE("similarity graph basics") {
  std::vector<TokenSeq> paras = {{5, 6, 7}, {5, 6, 7}, {8, 9}};
  auto g = build_similarity_graph(paras);
  CHECK(g(0, 1) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(g(0, 2) == 0.0);
  CHECK(g(2, 2) == 1.0);

  std::vector<TokenSeq> with_empty = {{5, 6}, {}, {6, 7}};
  auto h = build_similarity_graph(with_empty);
  CHECK(h(1, 1) == 1.0);
  CHECK(h(0, 1) == 0.0);
  CHECK(h(1, 2) == 0.0);
  CHECK(h(0, 2) > 0.0);

  CHECK_THROWS_AS(build_similarity_graph(std::vector<TokenSeq>{}), DataError);
}

TEST_CASE("similarity graph matches a dense tf-idf oracle") {
  std::vector<TokenSeq> toy = {{5, 6, 6, 7}, {6, 7, 8}, {5, 9, 9, 9, 6}};
  auto g = build_similarity_graph(toy);
  auto oracle = dense_similarity(toy, 10);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) CHECK(std::abs(g(i, j) - oracle[i][j]) <= 1e-12);

  core::Rng rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<TokenSeq> paras(1 + rng.below(6));
    for (auto& p : paras) {
      p.resize(rng.below(10));
      for (auto& t : p) t = 5 + rng.below(12);
    }
    auto graph = build_similarity_graph(paras);
    auto dense = dense_similarity(paras, 17);
    for (std::size_t i = 0; i < paras.size(); ++i) {
      CHECK(graph(i, i) == 1.0);
      for (std::size_t j = 0; j < paras.size(); ++j) {
        CHECK(graph(i, j) == graph(j, i));
        CHECK(graph(i, j) >= 0.0);
        CHECK(graph(i, j) <= 1.0);
        CHECK(std::abs(graph(i, j) - dense[i][j]) <= 1e-12);
      }
    }
  }
}

TEST_CASE("cluster spans and concatenated input") {
  Vocabulary vocab;
  for (auto w : {"a", "b", "c", "d", "."}) vocab.add(w);
  RawCluster raw{{"a b.\n\nc", "d d d"}, "a c", std::vector<std::vector<int>>{{0, 1}, {1}}, {}};
  auto cluster = make_cluster(raw, vocab);
  REQUIRE(cluster.paragraph_count() == 3);
  CHECK(cluster.paragraphs[0] == ParagraphSpan{0, 0, 3});
  CHECK(cluster.paragraphs[1] == ParagraphSpan{0, 3, 4});
  CHECK(cluster.paragraphs[2] == ParagraphSpan{1, 0, 3});
  CHECK(cluster.paragraph_labels == std::vector<int>{0, 1, 1});
  CHECK(*cluster.reference_summary == TokenSeq{5, 7});
  for (const auto& p : cluster.paragraphs) CHECK(p.end <= cluster.documents[p.doc].size());

  auto full = concatenate(cluster, 100);
  CHECK(full.tokens == TokenSeq{5, 6, 9, 7, kDocSep, 8, 8, 8});
  CHECK(full.spans.size() == 3);
  CHECK(full.spans[2] == std::pair<std::size_t, std::size_t>{5, 8});

  auto cut = concatenate(cluster, 6);
  CHECK(cut.tokens.size() == 6);
  CHECK(cut.spans.size() == 3);
  CHECK(cut.spans[2] == std::pair<std::size_t, std::size_t>{5, 6});
  auto cut2 = concatenate(cluster, 4);
  CHECK(cut2.spans.size() == 2);
  CHECK(cut2.paragraph_index == std::vector<std::size_t>{0, 1});

  RawCluster bad = raw;
  (*bad.labels)[0].pop_back();
  CHECK_THROWS_AS(make_cluster(bad, vocab), DataError);
}

TEST_CASE("labeled units cover paragraphs and sentences") {
  Vocabulary vocab;
  for (auto w : {"a", "b", "."}) vocab.add(w);
  RawCluster raw{{"a b. b a.\n\na ."}, std::nullopt, std::vector<std::vector<int>>{{1, 0}}, {}};
  std::vector<DocumentCluster> clusters = {make_cluster(raw, vocab)};
  auto units = labeled_units(clusters, vocab);
  REQUIRE(units.size() == 4);
  CHECK(units[0].tokens.size() == 6);
  CHECK(units[1].tokens == TokenSeq{5, 6, 7});
  CHECK(units[2].tokens == TokenSeq{6, 5, 7});
  CHECK(units[3].label == 0);
}

TEST_CASE("synthetic corpus structure") {
  SyntheticConfig config;
  config.clusters = 1;
  config.docs_per_cluster = 2;
  core::Rng rng(5);
  auto corpus = generate_synthetic_corpus(config, rng);
  REQUIRE(corpus.clusters.size() == 1);
  CHECK(corpus.vocab.size() == config.vocab_size);
  auto cluster = make_cluster(corpus.clusters[0], corpus.vocab);
  std::set<int> labels(cluster.paragraph_labels.begin(), cluster.paragraph_labels.end());
  CHECK(labels == std::set<int>{0, 1});
  CHECK(std::count(cluster.paragraph_labels.begin(), cluster.paragraph_labels.end(), 0) == 2);
  for (std::size_t i = 0; i < cluster.paragraph_count(); ++i) {
    for (auto t : cluster.paragraph_tokens(i)) CHECK(t != kUnk);
  }
  REQUIRE(corpus.clusters[0].summary);
  const auto summary_words = split_words(*corpus.clusters[0].summary);
  CHECK(lexicon_label(summary_words, 2) == corpus.summary_classes[0]);
  CHECK(corpus.clusters[0].attribute == corpus.summary_classes[0]);
}

TEST_CASE("planted labels are recoverable from class markers") {
  SyntheticConfig config;
  config.clusters = 20;
  config.classes = 3;
  config.vocab_size = 150;
  core::Rng rng(8);
  auto corpus = generate_synthetic_corpus(config, rng);
  std::size_t checked = 0;
  for (const auto& unit : corpus.classifier_data) {
    std::vector<std::string> words;
    for (auto t : unit.tokens) words.push_back(corpus.vocab.token(t));
    CHECK(lexicon_label(words, 3) == unit.label);
    ++checked;
  }
  CHECK(checked > 100);
}

TEST_CASE("synthetic label balance over 200 clusters") {
  SyntheticConfig config;
  config.clusters = 200;
  core::Rng rng(2024);
  auto corpus = generate_synthetic_corpus(config, rng);
  std::array<double, 2> paragraphs{}, summaries{};
  for (std::size_t k = 0; k < corpus.clusters.size(); ++k) {
    for (const auto& doc : *corpus.clusters[k].labels)
      for (int l : doc) paragraphs[static_cast<std::size_t>(l)] += 1;
    summaries[static_cast<std::size_t>(corpus.summary_classes[k])] += 1;
  }
  for (int c = 0; c < 2; ++c) {
    const double p = paragraphs[c] / (paragraphs[0] + paragraphs[1]);
    const double s = summaries[c] / 200.0;
    CHECK(p >= 0.4);
    CHECK(p <= 0.6);
    CHECK(s >= 0.4);
    CHECK(s <= 0.6);
  }
}

TEST_CASE("synthetic generator is deterministic per seed") {
  SyntheticConfig config;
  config.clusters = 10;
  core::Rng a(77), b(77), c(78);
  auto x = generate_synthetic_corpus(config, a);
  auto y = generate_synthetic_corpus(config, b);
  auto z = generate_synthetic_corpus(config, c);
  CHECK(x.clusters == y.clusters);
  CHECK(x.vocab == y.vocab);
  CHECK(x.summary_classes == y.summary_classes);
  CHECK_FALSE(x.clusters == z.clusters);
}

TEST_CASE("synthetic config errors") {
  core::Rng rng(1);
  SyntheticConfig tiny;
  tiny.vocab_size = 30;
  CHECK_THROWS_AS(generate_synthetic_corpus(tiny, rng), ConfigError);
  SyntheticConfig one_class;
  one_class.classes = 1;
  CHECK_THROWS_AS(generate_synthetic_corpus(one_class, rng), ConfigError);
}

TEST_CASE("jsonl round trip") {
  SyntheticConfig config;
  config.clusters = 5;
  core::Rng rng(9);
  auto corpus = generate_synthetic_corpus(config, rng);
  corpus.clusters[1].summary.reset();
  corpus.clusters[2].labels.reset();
  corpus.clusters[3].attribute.reset();
  auto path = temp_path("clusters.jsonl");
  save_jsonl(corpus.clusters, path);
  auto loaded = load_jsonl(path);
  CHECK(loaded == corpus.clusters);
  auto tokenized = load_jsonl(path, corpus.vocab);
  CHECK(tokenized.size() == 5);
  CHECK_FALSE(tokenized[1].reference_summary.has_value());
}

TEST_CASE("jsonl errors name the line") {
  std::istringstream in(R"({"documents": ["a"], "summary": null, "labels": null})"
                        "\n\n"
                        R"({"summary": "x"})"
                        "\n");
  try {
    parse_jsonl(in);
    FAIL("expected a DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    CHECK(std::string(e.what()).find("documents") != std::string::npos);
  }
  std::istringstream garbage("{not json\n");
  CHECK_THROWS_WITH_AS(parse_jsonl(garbage), doctest::Contains("line 1"), DataError);
  std::istringstream wrong(R"({"documents": ["a"], "labels": [[0.5]]})");
  CHECK_THROWS_AS(parse_jsonl(wrong), DataError);
  std::istringstream negative(R"({"documents": ["a"], "attribute": -1})");
  CHECK_THROWS_AS(parse_jsonl(negative), DataError);
  std::istringstream minimal(R"({"documents": ["a"], "attribute": 1})");
  auto parsed = parse_jsonl(minimal);
  CHECK(parsed[0].attribute == 1);
  CHECK_FALSE(parsed[0].summary.has_value());
}

TEST_CASE("multinews sources split on the separator") {
  const std::string source =
      "First story here.\n\nSecond paragraph. ||||| Another report on it. |||||   "
      "Third one, briefly.|||||";
  const std::vector<std::string> expected = {"First story here.\n\nSecond paragraph.",
                                             "Another report on it.", "Third one, briefly."};
  CHECK(split_multinews(source) == expected);

  std::istringstream in(R"({"documents": "One. ||||| Two.\n\nTwo b. ||||| Three.", )"
                        R"("summary": "s"})");
  auto clusters = parse_jsonl(in);
  REQUIRE(clusters.size() == 1);
  CHECK(clusters[0].documents ==
        std::vector<std::string>{"One.", "Two.\n\nTwo b.", "Three."});
  Vocabulary vocab;
  auto cluster = make_cluster(clusters[0], vocab);
  CHECK(cluster.documents.size() == 3);
  CHECK(cluster.paragraph_count() == 4);
}
