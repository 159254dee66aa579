#pragma once

// Semantic consistency: cosine-similarity vectors over sentence pairs drawn
// from two embedding sets, compared across language pairings by Spearman.

#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "csprobe/embedstore.hpp"

namespace csprobe::semsim {

// Throws kDimensionMismatch on unequal lengths and kInvalidArgument on a
// zero vector. Result is clamped to [-1, 1].
double cosine(const Eigen::VectorXd& u, const Eigen::VectorXd& v);

enum class PairPolicy {
  kUnordered,  // i < j
  kOrdered,    // i != j (i == j too when include_diagonal)
};

struct SimEntry {
  std::size_t i = 0;
  std::size_t j = 0;
  double cosine = 0.0;
};

struct SimVector {
  std::string set_a;
  std::string set_b;
  std::vector<std::string> ids;  // canonical (sorted) id order; i, j index into it
  std::vector<SimEntry> values;

  std::string pair_name() const { return set_a + "-" + set_b; }
};

struct PairOptions {
  PairPolicy policy = PairPolicy::kUnordered;
  bool include_diagonal = false;  // ordered policy only: keep translation pairs (i, i)
};

// Both sets must be sentence-level and hold the same ids.
SimVector build_sim_vector(const embed::EmbeddingSet& emb_a, const std::string& name_a,
                           const embed::EmbeddingSet& emb_b, const std::string& name_b,
                           const PairOptions& options);

struct ConsistencyResult {
  std::string l_pair_1;
  std::string l_pair_2;
  double spearman = 0.0;
};

ConsistencyResult consistency(const SimVector& vec1, const SimVector& vec2);

struct PlanRow {
  std::string a1, b1;  // l-pair-1
  std::string a2, b2;  // l-pair-2
};

// Same-set vectors use i < j, cross-set vectors i != j.
std::vector<PlanRow> real_cs_plan();
std::vector<PlanRow> synthetic_plan(const std::string& synthetic_name);

struct ConsistencyReport {
  std::vector<ConsistencyResult> rows;
  std::vector<SimVector> vectors;  // every vector built, in first-use order
  std::vector<std::string> warnings;
};

// Rows whose sets are missing are skipped with a warning.
ConsistencyReport consistency_report(const std::map<std::string, embed::EmbeddingSet>& sets,
                                     std::span<const PlanRow> plan, bool include_diagonal = false);

void write_report_csv(std::ostream& out, std::span<const ConsistencyResult> rows,
                      const std::string& model);
void write_sim_vectors_csv(std::ostream& out, std::span<const SimVector> vectors);

}  // namespace csprobe::semsim
