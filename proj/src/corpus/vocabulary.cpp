#include "acm/corpus/vocabulary.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>

#include "acm/core/error.hpp"

namespace acm::corpus {

namespace {

const char* const kReservedNames[kReservedCount] = {"<pad>", "<bos>", "<eos>", "<unk>",
                                                    "<docsep>"};

}  // namespace

Vocabulary::Vocabulary() {
  for (const char* name : kReservedNames) {
    index_.emplace(name, tokens_.size());
    tokens_.emplace_back(name);
  }
}

TokenId Vocabulary::add(std::string_view token) {
  auto [it, inserted] = index_.emplace(std::string(token), tokens_.size());
  if (inserted) tokens_.emplace_back(token);
  return it->second;
}

TokenId Vocabulary::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id >= tokens_.size()) {
    throw IndexError("token id " + std::to_string(id) + " outside vocabulary of " +
                     std::to_string(tokens_.size()));
  }
  return tokens_[id];
}

Vocabulary Vocabulary::build(std::span<const std::string> texts, std::size_t min_count) {
  std::map<std::string, std::size_t> counts;
  for (const auto& text : texts) {
    for (auto& word : split_words(text)) ++counts[std::move(word)];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  Vocabulary vocab;
  for (const auto& [word, count] : ranked) {
    if (count >= min_count) vocab.add(word);
  }
  return vocab;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write vocabulary file " + path.string());
  for (std::size_t i = kReservedCount; i < tokens_.size(); ++i) out << tokens_[i] << '\n';
  if (!out) throw DataError("failed writing vocabulary file " + path.string());
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read vocabulary file " + path.string());
  Vocabulary vocab;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t before = vocab.size();
    if (line.empty() || vocab.add(line) != before) {
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": empty or duplicate vocabulary entry");
    }
  }
  return vocab;
}

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) words.push_back(std::move(current));
    current.clear();
  };
  for (char raw : text) {
    const auto c = static_cast<unsigned char>(raw);
    if (std::isspace(c)) {
      flush();
    } else if (std::ispunct(c)) {
      flush();
      words.emplace_back(1, raw);
    } else {
      current.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  flush();
  return words;
}

std::vector<TokenId> tokenize(std::string_view text, const Vocabulary& vocab) {
  std::vector<TokenId> ids;
  for (const auto& word : split_words(text)) ids.push_back(vocab.id(word));
  return ids;
}

std::string detokenize(std::span<const TokenId> ids, const Vocabulary& vocab) {
  std::string text;
  for (TokenId id : ids) {
    if (is_control(id)) continue;
    if (!text.empty()) text.push_back(' ');
    text += vocab.token(id);
  }
  return text;
}

}  // namespace acm::corpus
