#include "csprobe/treedist.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <ostream>
#include <queue>

#include "csprobe/error.hpp"
#include "csprobe/parallel.hpp"
#include "csprobe/report.hpp"
#include "csprobe/stats.hpp"

namespace csprobe::treedist {
namespace {

constexpr int kMaxSearchNodes = 30;

using AdjMatrix = std::vector<std::vector<char>>;

AdjMatrix adjacency_matrix(const DepTree& t) {
  AdjMatrix m(static_cast<std::size_t>(t.size()), std::vector<char>(static_cast<std::size_t>(t.size()), 0));
  for (const auto& [u, v] : t.edges()) m[u][v] = m[v][u] = 1;
  return m;
}

// Breadth-first order from the highest-degree node, so every prefix of the
// order is connected and the cross-edge bound below is informative.
std::vector<int> processing_order(const DepTree& t) {
  const auto adj = t.adjacency();
  int start = 0;
  for (int v = 1; v < t.size(); ++v) {
    if (adj[v].size() > adj[start].size()) start = v;
  }
  std::vector<int> order;
  std::vector<char> seen(static_cast<std::size_t>(t.size()), 0);
  std::deque<int> queue{start};
  seen[start] = 1;
  while (!queue.empty()) {
    const int u = queue.front();
    queue.pop_front();
    order.push_back(u);
    std::vector<int> next = adj[u];
    std::sort(next.begin(), next.end(), [&](int x, int y) {
      return adj[x].size() != adj[y].size() ? adj[x].size() > adj[y].size() : x < y;
    });
    for (int v : next) {
      if (!seen[v]) {
        seen[v] = 1;
        queue.push_back(v);
      }
    }
  }
  return order;
}

class GedSearch {
 public:
  GedSearch(const DepTree& a, const DepTree& b, const GedOptions& options)
      : na_(a.size()),
        nb_(b.size()),
        costs_(options.costs),
        budget_(options.expansion_budget),
        adj_a_(adjacency_matrix(a)),
        adj_b_(adjacency_matrix(b)),
        order_(processing_order(a)) {}

  double run() {
    pool_.push_back({kNoParent, -1, 0});
    std::vector<int> image;
    queue_.push({heuristic(0, image), 0.0, 0, 0});
    std::uint64_t expansions = 0;
    while (!queue_.empty()) {
      const Entry top = queue_.top();
      queue_.pop();
      const int depth = pool_[top.node].depth;
      if (depth == na_ + 1) return top.g;  // goal sentinel
      if (++expansions > budget_) {
        throw Error(ErrorKind::kBudgetExceeded,
                    "graph edit distance search exceeded " + std::to_string(budget_) + " expansions");
      }
      reconstruct(top.node, image);
      if (depth == na_) {
        push(top.node, -1, top.g + completion_cost(image), na_ + 1, 0.0);
        continue;
      }
      const int v = order_[depth];
      std::uint32_t used = 0;
      for (int w : image) {
        if (w >= 0) used |= 1u << w;
      }
      for (int w = -1; w < nb_; ++w) {
        if (w >= 0 && (used >> w & 1u)) continue;
        const double g = top.g + step_cost(image, v, w);
        image.push_back(w);
        const double h = heuristic(depth + 1, image);
        image.pop_back();
        push(top.node, w, g, depth + 1, h);
      }
    }
    throw Error(ErrorKind::kBudgetExceeded, "graph edit distance search exhausted");
  }

 private:
  static constexpr std::uint32_t kNoParent = 0xffffffffu;

  struct PoolNode {
    std::uint32_t parent;
    std::int8_t image;  // node of b, or -1 for deletion
    std::int8_t depth;
  };

  struct Entry {
    double f;
    double g;
    int depth;
    std::uint32_t node;
    // Lowest f first, then deepest, then oldest: a total order, so the
    // search is deterministic.
    bool operator<(const Entry& o) const {
      if (f != o.f) return f > o.f;
      if (depth != o.depth) return depth < o.depth;
      return node > o.node;
    }
  };

  void push(std::uint32_t parent, int w, double g, int depth, double h) {
    pool_.push_back({parent, static_cast<std::int8_t>(w), static_cast<std::int8_t>(depth)});
    queue_.push({g + h, g, depth, static_cast<std::uint32_t>(pool_.size() - 1)});
  }

  // image[k] = b node assigned to order_[k].
  void reconstruct(std::uint32_t node, std::vector<int>& image) const {
    image.assign(static_cast<std::size_t>(std::min<int>(pool_[node].depth, na_)), 0);
    for (std::uint32_t cur = node; pool_[cur].parent != kNoParent; cur = pool_[cur].parent) {
      const int d = pool_[cur].depth;
      if (d <= na_) image[d - 1] = pool_[cur].image;
    }
  }

  double step_cost(const std::vector<int>& image, int v, int w) const {
    double cost = w < 0 ? costs_.node_delete : 0.0;
    for (std::size_t k = 0; k < image.size(); ++k) {
      const int u = order_[k];
      const int fu = image[k];
      const bool a_edge = adj_a_[v][u];
      if (w >= 0 && fu >= 0) {
        const bool b_edge = adj_b_[w][fu];
        if (a_edge && !b_edge) cost += costs_.edge_delete;
        if (!a_edge && b_edge) cost += costs_.edge_insert;
      } else if (a_edge) {
        cost += costs_.edge_delete;
      }
    }
    return cost;
  }

  double completion_cost(const std::vector<int>& image) const {
    std::vector<char> used(static_cast<std::size_t>(nb_), 0);
    for (int w : image) {
      if (w >= 0) used[w] = 1;
    }
    double cost = 0.0;
    for (int x = 0; x < nb_; ++x) {
      if (!used[x]) cost += costs_.node_insert;
      for (int y = x + 1; y < nb_; ++y) {
        if (adj_b_[x][y] && (!used[x] || !used[y])) cost += costs_.edge_insert;
      }
    }
    return cost;
  }

  // Lower bound on the cost still to come from a state with `depth` nodes
  // of a processed. Remaining a-edges incident to a processed node u can only
  // be preserved by b-edges from u's image to unused b nodes; edges among
  // unprocessed a nodes only by edges among unused b nodes. Node counts give
  // an independent bound.
  double heuristic(int depth, const std::vector<int>& image) const {
    std::vector<char> processed(static_cast<std::size_t>(na_), 0);
    std::vector<char> used(static_cast<std::size_t>(nb_), 0);
    for (int k = 0; k < depth; ++k) {
      processed[order_[k]] = 1;
      if (image[k] >= 0) used[image[k]] = 1;
    }
    const auto edge_gap = [&](int from_a, int from_b) {
      return from_a > from_b ? (from_a - from_b) * costs_.edge_delete
                             : (from_b - from_a) * costs_.edge_insert;
    };
    double h = 0.0;
    for (int k = 0; k < depth; ++k) {
      const int u = order_[k];
      int cross_a = 0;
      for (int v = 0; v < na_; ++v) cross_a += adj_a_[u][v] && !processed[v];
      int cross_b = 0;
      if (image[k] >= 0) {
        for (int x = 0; x < nb_; ++x) cross_b += adj_b_[image[k]][x] && !used[x];
      }
      h += edge_gap(cross_a, cross_b);
    }
    int inner_a = 0, inner_b = 0;
    for (int u = 0; u < na_; ++u) {
      for (int v = u + 1; v < na_; ++v) inner_a += adj_a_[u][v] && !processed[u] && !processed[v];
    }
    for (int x = 0; x < nb_; ++x) {
      for (int y = x + 1; y < nb_; ++y) inner_b += adj_b_[x][y] && !used[x] && !used[y];
    }
    h += edge_gap(inner_a, inner_b);
    const int rem_a = na_ - depth;
    int rem_b = 0;
    for (int x = 0; x < nb_; ++x) rem_b += !used[x];
    h += rem_a > rem_b ? (rem_a - rem_b) * costs_.node_delete : (rem_b - rem_a) * costs_.node_insert;
    return h;
  }

  int na_;
  int nb_;
  GedCostModel costs_;
  std::uint64_t budget_;
  AdjMatrix adj_a_;
  AdjMatrix adj_b_;
  std::vector<int> order_;
  std::vector<PoolNode> pool_;
  std::priority_queue<Entry> queue_;
};

}  // namespace

void GedCostModel::validate() const {
  for (double c : {node_insert, node_delete, edge_insert, edge_delete}) {
    if (!(c >= 0.0) || !std::isfinite(c)) {
      throw Error(ErrorKind::kInvalidArgument, "GED costs must be finite and non-negative");
    }
  }
}

double mapping_cost(const DepTree& a, const DepTree& b, std::span<const int> mapping,
                    const GedCostModel& costs) {
  const AdjMatrix adj_a = adjacency_matrix(a);
  const AdjMatrix adj_b = adjacency_matrix(b);
  std::vector<int> pre(static_cast<std::size_t>(b.size()), -1);
  double cost = 0.0;
  for (int u = 0; u < a.size(); ++u) {
    if (mapping[u] < 0) {
      cost += costs.node_delete;
    } else {
      pre[mapping[u]] = u;
    }
  }
  for (int x = 0; x < b.size(); ++x) {
    if (pre[x] < 0) cost += costs.node_insert;
  }
  for (const auto& [u, v] : a.edges()) {
    if (mapping[u] < 0 || mapping[v] < 0 || !adj_b[mapping[u]][mapping[v]]) cost += costs.edge_delete;
  }
  for (const auto& [x, y] : b.edges()) {
    if (pre[x] < 0 || pre[y] < 0 || !adj_a[pre[x]][pre[y]]) cost += costs.edge_insert;
  }
  return cost;
}

double ged(const DepTree& a, const DepTree& b, const GedOptions& options) {
  options.costs.validate();
  if (options.node_cap < 1 || options.node_cap > kMaxSearchNodes) {
    throw Error(ErrorKind::kInvalidArgument,
                "GED node cap must be in [1, " + std::to_string(kMaxSearchNodes) + "]");
  }
  if (a.size() > options.node_cap || b.size() > options.node_cap) {
    throw Error(ErrorKind::kCapExceeded, "GED refused: trees of " + std::to_string(a.size()) +
                                             " and " + std::to_string(b.size()) +
                                             " nodes exceed the cap of " +
                                             std::to_string(options.node_cap));
  }
  if (a == b) return 0.0;
  return GedSearch(a, b, options).run();
}

GedComparison ged_compare(std::span<const structprobe::ParseRecord> cs,
                          std::span<const structprobe::ParseRecord> es,
                          std::span<const structprobe::ParseRecord> en, const GedOptions& options,
                          int jobs) {
  using Index = std::map<std::string, const DepTree*>;
  const auto index = [](std::span<const structprobe::ParseRecord> parses, const char* name) {
    Index out;
    for (const auto& p : parses) {
      if (!out.emplace(p.id, &p.tree).second) {
        throw Error(ErrorKind::kValidation,
                    std::string("duplicate id \"") + p.id + "\" in " + name + " parses");
      }
    }
    return out;
  };
  const Index cs_idx = index(cs, "cs"), es_idx = index(es, "es"), en_idx = index(en, "en");

  GedComparison out;
  std::vector<std::string> ids;
  for (const auto& [id, tree] : cs_idx) ids.push_back(id);
  for (const Index* other : {&es_idx, &en_idx}) {
    for (const auto& [id, tree] : *other) {
      if (!cs_idx.count(id)) ids.push_back(id);
    }
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());

  std::vector<std::tuple<std::string, const DepTree*, const DepTree*, const DepTree*>> work;
  for (const std::string& id : ids) {
    const auto c = cs_idx.find(id), s = es_idx.find(id), e = en_idx.find(id);
    if (c == cs_idx.end() || s == es_idx.end() || e == en_idx.end()) {
      ++out.excluded_missing;
      continue;
    }
    if (c->second->size() > options.node_cap || s->second->size() > options.node_cap ||
        e->second->size() > options.node_cap) {
      ++out.excluded_cap;
      continue;
    }
    work.emplace_back(id, c->second, s->second, e->second);
  }
  if (work.empty()) {
    throw Error(ErrorKind::kValidation, "no records left after id matching and node-cap filtering");
  }
  out.rows.resize(work.size());
  parallel_for(work.size(), jobs, [&](std::size_t i) {
    const auto& [id, c, s, e] = work[i];
    GedRow& row = out.rows[i];
    row.id = id;
    row.n_cs = c->size();
    row.n_es = s->size();
    row.n_en = e->size();
    try {
      row.ged_cs_es = ged(*c, *s, options);
      row.ged_cs_en = ged(*c, *e, options);
    } catch (const Error& err) {
      throw Error(err.kind(), "record " + id + ": " + err.what());
    }
  });

  std::vector<double> x, y;
  for (const GedRow& r : out.rows) {
    x.push_back(r.ged_cs_es);
    y.push_back(r.ged_cs_en);
  }
  try {
    out.spearman = stats::spearman(x, y);
  } catch (const Error& e) {
    out.warnings.push_back(std::string("spearman undefined: ") + e.what());
  }
  return out;
}

void write_ged_csv(std::ostream& out, const GedComparison& comparison) {
  out << "id,n_cs,n_es,n_en,ged_cs_es,ged_cs_en\n";
  for (const GedRow& r : comparison.rows) {
    out << csv_field(r.id) << ',' << r.n_cs << ',' << r.n_es << ',' << r.n_en << ','
        << format_double(r.ged_cs_es, 4) << ',' << format_double(r.ged_cs_en, 4) << '\n';
  }
}

nlohmann::json ged_summary_json(const GedComparison& comparison) {
  nlohmann::json j;
  j["retained"] = comparison.retained();
  j["excluded"] = comparison.excluded_cap + comparison.excluded_missing;
  j["excluded_cap"] = comparison.excluded_cap;
  j["excluded_missing"] = comparison.excluded_missing;
  j["spearman"] = comparison.spearman ? nlohmann::json(*comparison.spearman) : nlohmann::json(nullptr);
  j["warnings"] = comparison.warnings;
  return j;
}

}  // namespace csprobe::treedist
