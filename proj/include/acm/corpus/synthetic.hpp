#pragma once

#include <cstddef>
#include <vector>

#include "acm/core/rng.hpp"
#include "acm/corpus/cluster.hpp"
#include "acm/corpus/vocabulary.hpp"

namespace acm::corpus {

struct SyntheticConfig {
  /// Total vocabulary size including reserved ids; the surplus over the fixed
  /// lexicon becomes topic entity words.
  std::size_t vocab_size = 120;
  std::size_t clusters = 50;
  std::size_t docs_per_cluster = 3;
  std::size_t paragraphs_per_doc = 2;
  std::size_t classes = 2;
  std::size_t entities_per_cluster = 3;
  std::size_t summary_sentences = 2;
  /// Class the reference summaries are written from; -1 picks one per
  /// cluster, balanced over the corpus.
  int summary_class = -1;
};

struct SyntheticCorpus {
  /// Each cluster's `attribute` is the planted class of its summary.
  std::vector<RawCluster> clusters;
  std::vector<int> summary_classes;
  Vocabulary vocab;
  /// Labeled paragraphs and sentences for classifier training.
  std::vector<LabeledText> classifier_data;
};

/// Templated news-like clusters in which each paragraph expresses one
/// attribute class through class-marker words, and each cluster mixes
/// classes. Throws ConfigError when the vocabulary cannot hold the lexicon.
SyntheticCorpus generate_synthetic_corpus(const SyntheticConfig& config, core::Rng& rng);

/// Class-marker words of `cls` (the lexicon rule recovering planted labels).
std::vector<std::string> class_markers(std::size_t cls, std::size_t classes);

/// Label from marker counts; -1 if no marker or a tie.
int lexicon_label(std::span<const std::string> words, std::size_t classes);

}  // namespace acm::corpus
