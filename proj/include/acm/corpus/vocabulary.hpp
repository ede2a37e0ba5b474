#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace acm::corpus {

using TokenId = std::size_t;
using TokenSeq = std::vector<TokenId>;

inline constexpr TokenId kPad = 0;
inline constexpr TokenId kBos = 1;
inline constexpr TokenId kEos = 2;
inline constexpr TokenId kUnk = 3;
inline constexpr TokenId kDocSep = 4;
inline constexpr std::size_t kReservedCount = 5;

/// Dense token ↔ id map. Ids 0..4 are reserved for PAD, BOS, EOS, UNK and
/// DOCSEP; ordinary tokens start at kReservedCount.
class Vocabulary {
 public:
  Vocabulary();

  /// Adds `token` if absent and returns its id.
  TokenId add(std::string_view token);
  /// Id of `token`, or kUnk.
  TokenId id(std::string_view token) const;
  bool contains(std::string_view token) const { return index_.contains(std::string(token)); }
  const std::string& token(TokenId id) const;
  std::size_t size() const { return tokens_.size(); }

  /// Vocabulary over every word of `texts`, most frequent first, ties by
  /// byte order, keeping words seen at least `min_count` times.
  static Vocabulary build(std::span<const std::string> texts, std::size_t min_count = 1);

  /// One token per line, ids in line order starting at kReservedCount.
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.tokens_ == b.tokens_;
  }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

/// Lowercased word split: whitespace separates words and every ASCII
/// punctuation character is a word of its own.
std::vector<std::string> split_words(std::string_view text);

std::vector<TokenId> tokenize(std::string_view text, const Vocabulary& vocab);

/// Space-joined tokens, skipping PAD/BOS/EOS.
std::string detokenize(std::span<const TokenId> ids, const Vocabulary& vocab);

/// True for ids that carry no text (PAD, BOS, EOS).
inline bool is_control(TokenId id) { return id == kPad || id == kBos || id == kEos; }

}  // namespace acm::corpus
