#include "acm/corpus/cluster.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "acm/core/error.hpp"
#include "acm/corpus/prefix.hpp"

namespace acm::corpus {

namespace {

bool blank(const std::string& s) {
  return std::all_of(s.begin(), s.end(),
                     [](char c) { return std::isspace(static_cast<unsigned char>(c)); });
}

}  // namespace

TokenSeq DocumentCluster::paragraph_tokens(std::size_t i) const {
  const auto& p = paragraphs.at(i);
  const auto& doc = documents[p.doc];
  return TokenSeq(doc.begin() + static_cast<std::ptrdiff_t>(p.begin),
                  doc.begin() + static_cast<std::ptrdiff_t>(p.end));
}

std::vector<std::string> split_paragraphs(const std::string& document) {
  std::vector<std::string> out;
  std::istringstream in(document);
  std::string line, current;
  auto flush = [&] {
    if (!blank(current)) out.push_back(current);
    current.clear();
  };
  while (std::getline(in, line)) {
    if (blank(line)) {
      flush();
      continue;
    }
    if (!current.empty()) current.push_back('\n');
    current += line;
  }
  flush();
  return out;
}

DocumentCluster make_cluster(const RawCluster& raw, const Vocabulary& vocab) {
  DocumentCluster cluster;
  cluster.raw = raw;
  if (raw.labels && raw.labels->size() != raw.documents.size()) {
    throw DataError("labels cover " + std::to_string(raw.labels->size()) + " documents but " +
                    std::to_string(raw.documents.size()) + " are present");
  }
  for (std::size_t d = 0; d < raw.documents.size(); ++d) {
    const auto paragraphs = split_paragraphs(raw.documents[d]);
    if (raw.labels && (*raw.labels)[d].size() != paragraphs.size()) {
      throw DataError("document " + std::to_string(d) + " has " +
                      std::to_string(paragraphs.size()) + " paragraphs but " +
                      std::to_string((*raw.labels)[d].size()) + " labels");
    }
    TokenSeq doc;
    for (std::size_t p = 0; p < paragraphs.size(); ++p) {
      const auto ids = tokenize(paragraphs[p], vocab);
      if (ids.empty()) continue;
      cluster.paragraphs.push_back({d, doc.size(), doc.size() + ids.size()});
      cluster.paragraph_labels.push_back(raw.labels ? (*raw.labels)[d][p] : -1);
      doc.insert(doc.end(), ids.begin(), ids.end());
    }
    cluster.documents.push_back(std::move(doc));
  }
  if (raw.summary) cluster.reference_summary = tokenize(*raw.summary, vocab);
  return cluster;
}

ModelInput concatenate(const DocumentCluster& cluster, std::size_t max_tokens) {
  ModelInput input;
  std::vector<std::size_t> offsets;
  for (std::size_t d = 0; d < cluster.documents.size(); ++d) {
    if (d > 0) input.tokens.push_back(kDocSep);
    offsets.push_back(input.tokens.size());
    input.tokens.insert(input.tokens.end(), cluster.documents[d].begin(),
                        cluster.documents[d].end());
  }
  if (input.tokens.size() > max_tokens) input.tokens.resize(max_tokens);
  for (std::size_t i = 0; i < cluster.paragraphs.size(); ++i) {
    const auto& p = cluster.paragraphs[i];
    const std::size_t begin = offsets[p.doc] + p.begin;
    if (begin >= input.tokens.size()) continue;
    const std::size_t end = std::min(offsets[p.doc] + p.end, input.tokens.size());
    input.spans.emplace_back(begin, end);
    input.paragraph_index.push_back(i);
  }
  return input;
}

std::vector<LabeledText> labeled_units(std::span<const DocumentCluster> clusters,
                                       const Vocabulary& vocab) {
  const TokenId stops[] = {vocab.id("."), vocab.id("!"), vocab.id("?")};
  auto is_stop = [&](TokenId t) {
    return t != kUnk && std::find(std::begin(stops), std::end(stops), t) != std::end(stops);
  };
  std::vector<LabeledText> units;
  for (const auto& cluster : clusters) {
    for (std::size_t i = 0; i < cluster.paragraph_count(); ++i) {
      const int label = cluster.paragraph_labels[i];
      if (label < 0) continue;
      TokenSeq paragraph = cluster.paragraph_tokens(i);
      units.push_back({paragraph, label});
      TokenSeq sentence;
      std::vector<LabeledText> pieces;
      for (TokenId t : paragraph) {
        sentence.push_back(t);
        if (is_stop(t)) {
          pieces.push_back({std::move(sentence), label});
          sentence.clear();
        }
      }
      if (!sentence.empty()) pieces.push_back({std::move(sentence), label});
      // A single-sentence paragraph is already covered by the paragraph unit.
      if (pieces.size() > 1) {
        for (auto& piece : pieces) units.push_back(std::move(piece));
      }
    }
  }
  return units;
}

std::vector<LabeledPrefix> expand_prefixes(const TokenSeq& sentence, int label) {
  std::vector<LabeledPrefix> out;
  out.reserve(sentence.size());
  for (std::size_t n = 1; n <= sentence.size(); ++n) {
    out.push_back({TokenSeq(sentence.begin(), sentence.begin() + static_cast<std::ptrdiff_t>(n)),
                   label});
  }
  return out;
}

std::vector<LabeledPrefix> expand_units(std::span<const LabeledText> units) {
  std::vector<LabeledPrefix> out;
  for (const auto& unit : units) {
    auto prefixes = expand_prefixes(unit.tokens, unit.label);
    out.insert(out.end(), std::make_move_iterator(prefixes.begin()),
               std::make_move_iterator(prefixes.end()));
  }
  return out;
}

}  // namespace acm::corpus
