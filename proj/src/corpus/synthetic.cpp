#include "acm/corpus/synthetic.hpp"

#include <algorithm>
#include <array>
#include <numeric>

#include "acm/core/error.hpp"

namespace acm::corpus {

namespace {

const std::vector<std::string> kFunctionWords = {
    "the", "a",   "of",   "in",     "on",        "and",  "to",     "was",  "is",  "by",
    "with", "said", "after", "for", "officials", "report", "that", "this", "its", ".", ","};

const std::vector<std::string> kNouns = {
    "city",    "council", "plan",   "market",    "team",    "company",   "government", "project",
    "season",  "policy",  "meeting", "statement", "economy", "agency",   "group",      "deal"};

constexpr std::size_t kAdjectivesPerClass = 8;
constexpr std::size_t kVerbsPerClass = 6;

const std::array<std::array<const char*, kAdjectivesPerClass>, 2> kAdjectives = {{
    {"excellent", "strong", "successful", "good", "great", "promising", "positive", "brilliant"},
    {"terrible", "weak", "failed", "bad", "awful", "troubling", "negative", "disastrous"},
}};

const std::array<std::array<const char*, kVerbsPerClass>, 2> kVerbs = {{
    {"praised", "welcomed", "celebrated", "improved", "supported", "boosted"},
    {"criticized", "condemned", "slammed", "worsened", "opposed", "damaged"},
}};

std::vector<std::string> adjectives(std::size_t cls) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < kAdjectivesPerClass; ++i) {
    out.push_back(cls < 2 ? std::string(kAdjectives[cls][i])
                          : "c" + std::to_string(cls) + "adj" + std::to_string(i));
  }
  return out;
}

std::vector<std::string> verbs(std::size_t cls) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < kVerbsPerClass; ++i) {
    out.push_back(cls < 2 ? std::string(kVerbs[cls][i])
                          : "c" + std::to_string(cls) + "verb" + std::to_string(i));
  }
  return out;
}

template <typename T>
const T& pick(const std::vector<T>& items, core::Rng& rng) {
  return items[rng.below(items.size())];
}

struct Lexicon {
  std::vector<std::vector<std::string>> adjectives;
  std::vector<std::vector<std::string>> verbs;
  std::vector<std::string> entities;
};

std::string sentence(const Lexicon& lex, std::size_t cls,
                     const std::vector<std::string>& entities, core::Rng& rng) {
  const auto& adj = lex.adjectives[cls];
  const auto& verb = lex.verbs[cls];
  const std::string& e = pick(entities, rng);
  const std::string& e2 = pick(entities, rng);
  const std::string& n = pick(kNouns, rng);
  const std::string& n2 = pick(kNouns, rng);
  switch (rng.below(6)) {
    case 0:
      return "The " + e + " " + n + " was " + pick(adj, rng) + ".";
    case 1:
      return e + " " + pick(verb, rng) + " the " + n + ".";
    case 2:
      return "Officials said the " + n + " of " + e + " is " + pick(adj, rng) + ".";
    case 3:
      return "The " + pick(adj, rng) + " " + n + " in " + e + " was " + pick(verb, rng) +
             " by the " + n2 + ".";
    case 4:
      return e + " and " + e2 + " " + pick(verb, rng) + " the " + pick(adj, rng) + " " + n + ".";
    default:
      return "A report said " + e + " was " + pick(adj, rng) + " after the " + n + ".";
  }
}

}  // namespace

std::vector<std::string> class_markers(std::size_t cls, std::size_t classes) {
  if (cls >= classes) throw ConfigError("class " + std::to_string(cls) + " out of range");
  auto out = adjectives(cls);
  auto v = verbs(cls);
  out.insert(out.end(), v.begin(), v.end());
  return out;
}

int lexicon_label(std::span<const std::string> words, std::size_t classes) {
  std::vector<std::size_t> counts(classes, 0);
  for (std::size_t c = 0; c < classes; ++c) {
    const auto markers = class_markers(c, classes);
    for (const auto& w : words) {
      if (std::find(markers.begin(), markers.end(), w) != markers.end()) ++counts[c];
    }
  }
  const auto best = std::max_element(counts.begin(), counts.end());
  if (*best == 0 || std::count(counts.begin(), counts.end(), *best) > 1) return -1;
  return static_cast<int>(best - counts.begin());
}

SyntheticCorpus generate_synthetic_corpus(const SyntheticConfig& config, core::Rng& rng) {
  if (config.classes < 2) throw ConfigError("synthetic corpus needs at least 2 classes");
  if (config.docs_per_cluster == 0 || config.paragraphs_per_doc == 0) {
    throw ConfigError("synthetic corpus needs at least one document and paragraph");
  }
  if (config.summary_class >= static_cast<int>(config.classes)) {
    throw ConfigError("summary_class " + std::to_string(config.summary_class) +
                      " outside the class range");
  }
  if (config.entities_per_cluster == 0) throw ConfigError("entities_per_cluster must be > 0");

  SyntheticCorpus corpus;
  Lexicon lex;
  for (const auto& w : kFunctionWords) corpus.vocab.add(w);
  for (const auto& w : kNouns) corpus.vocab.add(w);
  for (std::size_t c = 0; c < config.classes; ++c) {
    lex.adjectives.push_back(adjectives(c));
    lex.verbs.push_back(verbs(c));
    for (const auto& w : lex.adjectives.back()) corpus.vocab.add(w);
    for (const auto& w : lex.verbs.back()) corpus.vocab.add(w);
  }
  const std::size_t fixed = corpus.vocab.size();
  if (config.vocab_size < fixed + config.entities_per_cluster) {
    throw ConfigError("vocab_size " + std::to_string(config.vocab_size) +
                      " too small for the templates; need at least " +
                      std::to_string(fixed + config.entities_per_cluster));
  }
  for (std::size_t i = 0; corpus.vocab.size() < config.vocab_size; ++i) {
    lex.entities.push_back("entity" + std::to_string(i));
    corpus.vocab.add(lex.entities.back());
  }

  std::vector<int> targets(config.clusters);
  for (std::size_t i = 0; i < config.clusters; ++i) {
    targets[i] = config.summary_class >= 0 ? config.summary_class
                                           : static_cast<int>(i % config.classes);
  }
  if (config.summary_class < 0) rng.shuffle(std::span<int>(targets));

  const std::size_t per_cluster = config.docs_per_cluster * config.paragraphs_per_doc;
  std::vector<DocumentCluster> made;
  for (std::size_t k = 0; k < config.clusters; ++k) {
    std::vector<std::string> entities = lex.entities;
    for (std::size_t i = 0; i < config.entities_per_cluster; ++i) {
      std::swap(entities[i], entities[i + rng.below(entities.size() - i)]);
    }
    entities.resize(config.entities_per_cluster);

    std::vector<int> labels(per_cluster);
    for (std::size_t i = 0; i < per_cluster; ++i) labels[i] = static_cast<int>(i % config.classes);
    rng.shuffle(std::span<int>(labels));

    RawCluster raw;
    raw.labels.emplace();
    std::vector<std::string> leads;
    for (std::size_t d = 0; d < config.docs_per_cluster; ++d) {
      std::string doc;
      std::vector<int> doc_labels;
      for (std::size_t p = 0; p < config.paragraphs_per_doc; ++p) {
        const int label = labels[d * config.paragraphs_per_doc + p];
        const std::size_t count = 2 + rng.below(3);
        std::string paragraph;
        for (std::size_t s = 0; s < count; ++s) {
          const auto text = sentence(lex, static_cast<std::size_t>(label), entities, rng);
          if (s == 0 && label == targets[k] && leads.size() < config.summary_sentences) {
            leads.push_back(text);
          }
          if (!paragraph.empty()) paragraph.push_back(' ');
          paragraph += text;
        }
        if (!doc.empty()) doc += "\n\n";
        doc += paragraph;
        doc_labels.push_back(label);
      }
      raw.documents.push_back(std::move(doc));
      raw.labels->push_back(std::move(doc_labels));
    }
    std::string summary;
    for (const auto& lead : leads) {
      if (!summary.empty()) summary.push_back(' ');
      summary += lead;
    }
    raw.summary = summary;
    raw.attribute = targets[k];
    made.push_back(make_cluster(raw, corpus.vocab));
    corpus.clusters.push_back(std::move(raw));
  }
  corpus.summary_classes = std::move(targets);
  corpus.classifier_data = labeled_units(made, corpus.vocab);
  return corpus;
}

}  // namespace acm::corpus
