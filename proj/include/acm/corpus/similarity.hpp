#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "acm/corpus/cluster.hpp"

namespace acm::corpus {

/// Symmetric L×L paragraph similarity with unit diagonal and entries in [0,1].
class SimilarityGraph {
 public:
  explicit SimilarityGraph(std::size_t n = 0) : n_(n), values_(n * n, 0.0) {}

  std::size_t size() const { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return values_[i * n_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return values_[i * n_ + j]; }
  std::span<const double> values() const { return values_; }

 private:
  std::size_t n_;
  std::vector<double> values_;
};

/// Cosine similarity of tf-idf vectors (raw counts × ln((1+L)/(1+df)) + 1),
/// clamped to [0,1]. Empty paragraphs get a zero row and column except the
/// unit diagonal.
SimilarityGraph build_similarity_graph(std::span<const TokenSeq> paragraphs);
SimilarityGraph build_similarity_graph(const DocumentCluster& cluster);

}  // namespace acm::corpus
