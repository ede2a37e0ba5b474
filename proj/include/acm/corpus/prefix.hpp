#pragma once

#include <span>
#include <vector>

#include "acm/corpus/cluster.hpp"
#include "acm/corpus/vocabulary.hpp"

namespace acm::corpus {

struct LabeledPrefix {
  TokenSeq tokens;
  int label = 0;

  friend bool operator==(const LabeledPrefix&, const LabeledPrefix&) = default;
};

/// All prefixes of `sentence` (lengths 1..n), each carrying `label`.
std::vector<LabeledPrefix> expand_prefixes(const TokenSeq& sentence, int label);

/// expand_prefixes over every unit, concatenated.
std::vector<LabeledPrefix> expand_units(std::span<const LabeledText> units);

}  // namespace acm::corpus
