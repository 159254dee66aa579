#include "csprobe/deptree.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <tuple>

#include "csprobe/corpus.hpp"
#include "csprobe/error.hpp"

namespace csprobe {

DepTree::DepTree(int n, std::vector<Edge> edges) : n_(n), edges_(std::move(edges)) {
  if (n_ < 1) throw Error(ErrorKind::kValidation, "tree must have at least one node");
  if (edges_.size() != static_cast<std::size_t>(n_ - 1)) {
    throw Error(ErrorKind::kValidation, "tree over " + std::to_string(n_) + " nodes needs " +
                                            std::to_string(n_ - 1) + " edges, got " +
                                            std::to_string(edges_.size()));
  }
  std::vector<int> parent(static_cast<std::size_t>(n_));
  std::iota(parent.begin(), parent.end(), 0);
  const auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (Edge& e : edges_) {
    if (e.first > e.second) std::swap(e.first, e.second);
    if (e.first < 0 || e.second >= n_ || e.first == e.second) {
      throw Error(ErrorKind::kValidation, "invalid edge " + std::to_string(e.first) + "-" +
                                              std::to_string(e.second));
    }
    const int a = find(e.first), b = find(e.second);
    if (a == b) throw Error(ErrorKind::kValidation, "edges contain a cycle");
    parent[a] = b;
  }
  std::sort(edges_.begin(), edges_.end());
}

DepTree DepTree::from_heads(std::span<const int> heads) {
  if (std::string why = corpus::tree_violation(heads); !why.empty()) {
    throw Error(ErrorKind::kValidation, "invalid head array: " + why);
  }
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < heads.size(); ++i) {
    if (heads[i] != 0) edges.emplace_back(static_cast<int>(i), heads[i] - 1);
  }
  return DepTree(static_cast<int>(heads.size()), std::move(edges));
}

std::vector<std::vector<int>> DepTree::adjacency() const {
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(n_));
  for (const auto& [a, b] : edges_) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  return adj;
}

bool DepTree::has_edge(int a, int b) const {
  if (a > b) std::swap(a, b);
  return std::binary_search(edges_.begin(), edges_.end(), Edge{a, b});
}

DistanceMatrix tree_distances(const DepTree& tree) {
  const int n = tree.size();
  const auto adj = tree.adjacency();
  DistanceMatrix d = DistanceMatrix::Zero(n, n);
  std::vector<int> dist(static_cast<std::size_t>(n));
  for (int src = 0; src < n; ++src) {
    std::fill(dist.begin(), dist.end(), -1);
    std::deque<int> queue{src};
    dist[src] = 0;
    while (!queue.empty()) {
      const int u = queue.front();
      queue.pop_front();
      for (int v : adj[u]) {
        if (dist[v] < 0) {
          dist[v] = dist[u] + 1;
          queue.push_back(v);
        }
      }
    }
    for (int j = 0; j < n; ++j) d(src, j) = dist[j];
  }
  return d;
}

bool is_distance_matrix(const DistanceMatrix& d, double tol) {
  if (d.rows() != d.cols()) return false;
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    if (std::abs(d(i, i)) > tol) return false;
    for (Eigen::Index j = 0; j < d.cols(); ++j) {
      if (!std::isfinite(d(i, j)) || d(i, j) < -tol) return false;
      if (std::abs(d(i, j) - d(j, i)) > tol) return false;
    }
  }
  return true;
}

DepTree mst_parse(const DistanceMatrix& d) {
  const int n = static_cast<int>(d.rows());
  if (d.rows() != d.cols()) throw Error(ErrorKind::kDimensionMismatch, "mst_parse: matrix not square");
  if (n < 2) throw Error(ErrorKind::kInvalidArgument, "mst_parse: need at least 2 nodes");
  if (!d.allFinite()) throw Error(ErrorKind::kNonFinite, "mst_parse: non-finite distance");

  // Prim's algorithm over the strict order (weight, min(i,j), max(i,j)), which
  // makes the tree unique and equal to the tie-broken Kruskal result.
  using Key = std::tuple<double, int, int>;
  const auto key = [&](int a, int b) {
    const double w = 0.5 * (d(a, b) + d(b, a));
    return Key{w, std::min(a, b), std::max(a, b)};
  };
  std::vector<char> in_tree(static_cast<std::size_t>(n), 0);
  std::vector<Key> best(static_cast<std::size_t>(n));
  std::vector<int> via(static_cast<std::size_t>(n), 0);
  in_tree[0] = 1;
  for (int v = 1; v < n; ++v) best[v] = key(0, v);
  std::vector<DepTree::Edge> edges;
  for (int step = 1; step < n; ++step) {
    int pick = -1;
    for (int v = 0; v < n; ++v) {
      if (!in_tree[v] && (pick < 0 || best[v] < best[pick])) pick = v;
    }
    in_tree[pick] = 1;
    edges.emplace_back(via[pick], pick);
    for (int v = 0; v < n; ++v) {
      if (in_tree[v]) continue;
      const Key k = key(pick, v);
      if (k < best[v]) {
        best[v] = k;
        via[v] = pick;
      }
    }
  }
  return DepTree(n, std::move(edges));
}

double uuas(const DepTree& pred, const DepTree& gold) {
  if (pred.size() != gold.size()) {
    throw Error(ErrorKind::kDimensionMismatch, "uuas: trees have " + std::to_string(pred.size()) +
                                                   " and " + std::to_string(gold.size()) + " nodes");
  }
  if (gold.edges().empty()) return 1.0;
  std::size_t hit = 0;
  for (const DepTree::Edge& e : gold.edges()) {
    if (pred.has_edge(e.first, e.second)) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(gold.edges().size());
}

}  // namespace csprobe
