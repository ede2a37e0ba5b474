#include "acm/corpus/jsonl.hpp"

#include <fstream>

#include <json.hpp>

#include "acm/core/error.hpp"

namespace acm::corpus {

namespace {

using nlohmann::json;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

RawCluster parse_record(const std::string& line, std::size_t line_no) {
  auto fail = [&](const std::string& what) -> DataError {
    return DataError("line " + std::to_string(line_no) + ": " + what);
  };
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw fail(std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw fail("record is not an object");
  if (!j.contains("documents")) throw fail("missing \"documents\"");

  RawCluster raw;
  const auto& docs = j["documents"];
  if (docs.is_string()) {
    raw.documents = split_multinews(docs.get<std::string>());
  } else if (docs.is_array()) {
    for (const auto& d : docs) {
      if (!d.is_string()) throw fail("\"documents\" entries must be strings");
      raw.documents.push_back(d.get<std::string>());
    }
  } else {
    throw fail("\"documents\" must be a string or an array of strings");
  }

  if (j.contains("summary") && !j["summary"].is_null()) {
    if (!j["summary"].is_string()) throw fail("\"summary\" must be a string or null");
    raw.summary = j["summary"].get<std::string>();
  }
  if (j.contains("labels") && !j["labels"].is_null()) {
    const auto& labels = j["labels"];
    if (!labels.is_array()) throw fail("\"labels\" must be an array of arrays");
    raw.labels.emplace();
    for (const auto& doc : labels) {
      if (!doc.is_array()) throw fail("\"labels\" must be an array of arrays");
      std::vector<int> row;
      for (const auto& v : doc) {
        if (!v.is_number_integer()) throw fail("\"labels\" entries must be integers");
        row.push_back(v.get<int>());
      }
      raw.labels->push_back(std::move(row));
    }
  }
  if (j.contains("attribute") && !j["attribute"].is_null()) {
    if (!j["attribute"].is_number_integer() || j["attribute"].get<int>() < 0) {
      throw fail("\"attribute\" must be a non-negative integer or null");
    }
    raw.attribute = j["attribute"].get<int>();
  }
  return raw;
}

}  // namespace

std::vector<std::string> split_multinews(const std::string& source) {
  std::vector<std::string> docs;
  const std::string sep = kMultiNewsSeparator;
  std::size_t start = 0;
  while (true) {
    const auto pos = source.find(sep, start);
    auto piece = trim(source.substr(start, pos == std::string::npos ? std::string::npos
                                                                    : pos - start));
    if (!piece.empty()) docs.push_back(std::move(piece));
    if (pos == std::string::npos) break;
    start = pos + sep.size();
  }
  return docs;
}

std::vector<RawCluster> parse_jsonl(std::istream& in) {
  std::vector<RawCluster> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    out.push_back(parse_record(line, line_no));
  }
  return out;
}

std::vector<RawCluster> load_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  try {
    return parse_jsonl(in);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::vector<DocumentCluster> load_jsonl(const std::filesystem::path& path,
                                        const Vocabulary& vocab) {
  std::vector<DocumentCluster> out;
  std::size_t record = 0;
  for (const auto& raw : load_jsonl(path)) {
    ++record;
    try {
      out.push_back(make_cluster(raw, vocab));
    } catch (const DataError& e) {
      throw DataError(path.string() + ": record " + std::to_string(record) + ": " + e.what());
    }
  }
  return out;
}

std::string to_json_line(const RawCluster& cluster) {
  json j;
  j["documents"] = cluster.documents;
  j["summary"] = cluster.summary ? json(*cluster.summary) : json(nullptr);
  j["labels"] = cluster.labels ? json(*cluster.labels) : json(nullptr);
  if (cluster.attribute) j["attribute"] = *cluster.attribute;
  return j.dump();
}

void save_jsonl(std::span<const RawCluster> clusters, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& c : clusters) out << to_json_line(c) << '\n';
  if (!out) throw DataError("failed writing " + path.string());
}

}  // namespace acm::corpus
