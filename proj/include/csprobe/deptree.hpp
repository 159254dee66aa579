#pragma once

// Unordered, unlabeled dependency trees and their path metrics.

#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace csprobe {

// Symmetric, non-negative, zero diagonal.
using DistanceMatrix = Eigen::MatrixXd;

class DepTree {
 public:
  using Edge = std::pair<int, int>;  // first < second, 0-based

  DepTree() = default;
  // Normalizes and sorts edges; throws kValidation unless they form a
  // spanning tree over n >= 1 nodes.
  DepTree(int n, std::vector<Edge> edges);

  // heads are 1-based with 0 marking the root (CoNLL-U convention).
  static DepTree from_heads(std::span<const int> heads);

  int size() const { return n_; }
  const std::vector<Edge>& edges() const { return edges_; }
  std::vector<std::vector<int>> adjacency() const;
  bool has_edge(int a, int b) const;

  bool operator==(const DepTree&) const = default;

 private:
  int n_ = 0;
  std::vector<Edge> edges_;
};

// Hop counts along the unique path between every pair of nodes.
DistanceMatrix tree_distances(const DepTree& tree);

bool is_distance_matrix(const DistanceMatrix& d, double tol = 0.0);

// Minimum spanning tree of the complete graph weighted by d. Ties between
// equal weights go to the lexicographically smaller (i, j) edge, i < j.
DepTree mst_parse(const DistanceMatrix& d);

// Fraction of gold edges present in pred (undirected).
double uuas(const DepTree& pred, const DepTree& gold);

}  // namespace csprobe
