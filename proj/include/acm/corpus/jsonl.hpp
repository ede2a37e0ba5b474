#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "acm/corpus/cluster.hpp"

namespace acm::corpus {

/// Separator MultiNews uses between source documents in a single string.
inline constexpr const char* kMultiNewsSeparator = "|||||";

/// Splits a MultiNews-style source string into trimmed, non-empty documents.
std::vector<std::string> split_multinews(const std::string& source);

/// One JSON object per line:
///   {"documents": [string...] | string, "summary": string|null,
///    "labels": [[int...]...]|null, "attribute": int|null}
/// "summary", "labels" and "attribute" may be omitted. A string "documents"
/// value is split on the MultiNews separator.
/// Throws DataError naming the line on malformed records.
std::vector<RawCluster> load_jsonl(const std::filesystem::path& path);
std::vector<DocumentCluster> load_jsonl(const std::filesystem::path& path,
                                        const Vocabulary& vocab);
std::vector<RawCluster> parse_jsonl(std::istream& in);

void save_jsonl(std::span<const RawCluster> clusters, const std::filesystem::path& path);
std::string to_json_line(const RawCluster& cluster);

}  // namespace acm::corpus
