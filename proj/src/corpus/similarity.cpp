#include "acm/corpus/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "acm/core/error.hpp"

namespace acm::corpus {

SimilarityGraph build_similarity_graph(std::span<const TokenSeq> paragraphs) {
  const std::size_t n = paragraphs.size();
  if (n == 0) throw DataError("similarity graph needs at least one paragraph");

  std::vector<std::map<TokenId, double>> tf(n);
  std::map<TokenId, double> df;
  for (std::size_t i = 0; i < n; ++i) {
    for (TokenId t : paragraphs[i]) tf[i][t] += 1.0;
    for (const auto& [t, count] : tf[i]) df[t] += 1.0;
  }

  const double l = static_cast<double>(n);
  std::vector<std::map<TokenId, double>> vecs(n);
  std::vector<double> norms(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& [t, count] : tf[i]) {
      const double w = count * (std::log((1.0 + l) / (1.0 + df[t])) + 1.0);
      vecs[i][t] = w;
      norms[i] += w * w;
    }
    norms[i] = std::sqrt(norms[i]);
  }

  SimilarityGraph g(n);
  for (std::size_t i = 0; i < n; ++i) {
    g(i, i) = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      double value = 0.0;
      if (norms[i] > 0.0 && norms[j] > 0.0) {
        double dot = 0.0;
        const auto& small = vecs[i].size() <= vecs[j].size() ? vecs[i] : vecs[j];
        const auto& large = vecs[i].size() <= vecs[j].size() ? vecs[j] : vecs[i];
        for (const auto& [t, w] : small) {
          auto it = large.find(t);
          if (it != large.end()) dot += w * it->second;
        }
        value = std::clamp(dot / (norms[i] * norms[j]), 0.0, 1.0);
      }
      g(i, j) = value;
      g(j, i) = value;
    }
  }
  return g;
}

SimilarityGraph build_similarity_graph(const DocumentCluster& cluster) {
  std::vector<TokenSeq> paragraphs;
  for (std::size_t i = 0; i < cluster.paragraph_count(); ++i) {
    paragraphs.push_back(cluster.paragraph_tokens(i));
  }
  return build_similarity_graph(paragraphs);
}

}  // namespace acm::corpus
