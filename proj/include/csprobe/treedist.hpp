#pragma once

// Exact graph edit distance between unlabeled, undirected trees, and the
// code-switched vs. translation distance comparison built on it.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "csprobe/deptree.hpp"
#include "csprobe/structprobe.hpp"

namespace csprobe::treedist {

struct GedCostModel {
  double node_insert = 1.0;
  double node_delete = 1.0;
  double edge_insert = 1.0;
  double edge_delete = 1.0;

  void validate() const;
};

struct GedOptions {
  GedCostModel costs;
  int node_cap = 10;
  std::uint64_t expansion_budget = 5'000'000;
};

// Minimum edit cost turning a into b. Node substitution is free because
// nodes are unlabeled. Best-first search over partial node mappings with an
// admissible bound; throws kCapExceeded if either tree is over the cap and
// kBudgetExceeded rather than returning an approximation.
double ged(const DepTree& a, const DepTree& b, const GedOptions& options = {});

// Cost of completing one explicit mapping (mapping[i] = node of b or -1).
double mapping_cost(const DepTree& a, const DepTree& b, std::span<const int> mapping,
                    const GedCostModel& costs);

struct GedRow {
  std::string id;
  int n_cs = 0;
  int n_es = 0;
  int n_en = 0;
  double ged_cs_es = 0.0;
  double ged_cs_en = 0.0;
};

struct GedComparison {
  std::vector<GedRow> rows;  // sorted by id
  std::size_t excluded_cap = 0;
  std::size_t excluded_missing = 0;
  std::optional<double> spearman;  // nullopt when the correlation is undefined
  std::vector<std::string> warnings;

  std::size_t retained() const { return rows.size(); }
};

// Matches the three parse lists by id. A record is dropped when any of its
// parses is missing or exceeds the node cap. Throws kValidation when nothing
// survives.
GedComparison ged_compare(std::span<const structprobe::ParseRecord> cs,
                          std::span<const structprobe::ParseRecord> es,
                          std::span<const structprobe::ParseRecord> en,
                          const GedOptions& options = {}, int jobs = 1);

void write_ged_csv(std::ostream& out, const GedComparison& comparison);
nlohmann::json ged_summary_json(const GedComparison& comparison);

}  // namespace csprobe::treedist
