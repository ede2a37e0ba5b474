#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "acm/corpus/vocabulary.hpp"

namespace acm::corpus {

/// A cluster as stored on disk: raw document texts with paragraphs separated
/// by blank lines, an optional reference summary, optional per-document,
/// per-paragraph attribute labels, and an optional conditioning class the
/// summary is written from.
struct RawCluster {
  std::vector<std::string> documents;
  std::optional<std::string> summary;
  std::optional<std::vector<std::vector<int>>> labels;
  std::optional<int> attribute;

  friend bool operator==(const RawCluster&, const RawCluster&) = default;
};

/// Token span [begin, end) of one paragraph inside document `doc`.
struct ParagraphSpan {
  std::size_t doc = 0;
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  friend bool operator==(const ParagraphSpan&, const ParagraphSpan&) = default;
};

/// Tokenized multi-document cluster.
struct DocumentCluster {
  std::vector<TokenSeq> documents;
  std::vector<ParagraphSpan> paragraphs;
  std::optional<TokenSeq> reference_summary;
  /// Ground-truth label per paragraph, -1 when unknown.
  std::vector<int> paragraph_labels;
  RawCluster raw;

  std::size_t paragraph_count() const { return paragraphs.size(); }
  TokenSeq paragraph_tokens(std::size_t i) const;
};

/// Splits on blank lines; whitespace-only pieces are dropped.
std::vector<std::string> split_paragraphs(const std::string& document);

/// Tokenizes a raw cluster. Paragraphs that tokenize to nothing are dropped.
/// Throws DataError when labels do not line up with the paragraphs.
DocumentCluster make_cluster(const RawCluster& raw, const Vocabulary& vocab);

/// The model's view of a cluster: documents joined by DOCSEP and truncated to
/// `max_tokens`, plus the paragraph spans that survive truncation (clipped to
/// the input) expressed as offsets into `tokens`.
struct ModelInput {
  TokenSeq tokens;
  std::vector<std::pair<std::size_t, std::size_t>> spans;
  /// Index into DocumentCluster::paragraphs for each surviving span.
  std::vector<std::size_t> paragraph_index;
};

ModelInput concatenate(const DocumentCluster& cluster, std::size_t max_tokens);

/// A token sequence with an attribute label, e.g. a paragraph or sentence.
struct LabeledText {
  TokenSeq tokens;
  int label = 0;
};

/// Every labeled paragraph of every cluster, followed by each sentence of
/// that paragraph (split after '.', '!' or '?').
std::vector<LabeledText> labeled_units(std::span<const DocumentCluster> clusters,
                                       const Vocabulary& vocab);

}  // namespace acm::corpus
