#include "csprobe/semsim.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "csprobe/error.hpp"
#include "csprobe/report.hpp"
#include "csprobe/stats.hpp"

namespace csprobe::semsim {

double cosine(const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  if (u.size() != v.size()) {
    throw Error(ErrorKind::kDimensionMismatch, "cosine: vectors of length " + std::to_string(u.size()) +
                                                   " and " + std::to_string(v.size()));
  }
  const double nu = u.norm();
  const double nv = v.norm();
  if (nu == 0.0 || nv == 0.0) throw Error(ErrorKind::kInvalidArgument, "cosine: zero vector");
  return std::clamp(u.dot(v) / (nu * nv), -1.0, 1.0);
}

SimVector build_sim_vector(const embed::EmbeddingSet& emb_a, const std::string& name_a,
                           const embed::EmbeddingSet& emb_b, const std::string& name_b,
                           const PairOptions& options) {
  for (const auto* set : {&emb_a, &emb_b}) {
    if (!embed::is_sentence_kind(set->kind)) {
      throw Error(ErrorKind::kValidation, "similarity vectors need sentence-level embeddings");
    }
  }
  if (emb_a.dim != emb_b.dim) {
    throw Error(ErrorKind::kDimensionMismatch, "sets " + name_a + " and " + name_b + " differ in dim");
  }
  SimVector out;
  out.set_a = name_a;
  out.set_b = name_b;
  for (const auto& [id, rows] : emb_a.records) {
    if (!emb_b.contains(id)) {
      throw Error(ErrorKind::kValidation, "id \"" + id + "\" is in " + name_a + " but not " + name_b);
    }
    out.ids.push_back(id);
  }
  if (emb_b.records.size() != emb_a.records.size()) {
    throw Error(ErrorKind::kValidation, "sets " + name_a + " and " + name_b + " hold different ids");
  }
  std::vector<Eigen::VectorXd> a, b;
  for (const std::string& id : out.ids) {
    a.push_back(emb_a.at(id).row(0).cast<double>().transpose());
    b.push_back(emb_b.at(id).row(0).cast<double>().transpose());
  }
  const std::size_t n = out.ids.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const bool keep = options.policy == PairPolicy::kUnordered
                            ? i < j
                            : (i != j || options.include_diagonal);
      if (keep) {
        try {
          out.values.push_back({i, j, cosine(a[i], b[j])});
        } catch (const Error& e) {
          throw Error(e.kind(), "pair (" + out.ids[i] + ", " + out.ids[j] + "): " + e.what());
        }
      }
    }
  }
  return out;
}

ConsistencyResult consistency(const SimVector& vec1, const SimVector& vec2) {
  if (vec1.ids != vec2.ids || vec1.values.size() != vec2.values.size()) {
    throw Error(ErrorKind::kValidation,
                "index sets differ between " + vec1.pair_name() + " and " + vec2.pair_name());
  }
  std::vector<double> x, y;
  for (std::size_t k = 0; k < vec1.values.size(); ++k) {
    if (vec1.values[k].i != vec2.values[k].i || vec1.values[k].j != vec2.values[k].j) {
      throw Error(ErrorKind::kValidation,
                  "index sets differ between " + vec1.pair_name() + " and " + vec2.pair_name());
    }
    x.push_back(vec1.values[k].cosine);
    y.push_back(vec2.values[k].cosine);
  }
  if (x.size() < 3) {
    throw Error(ErrorKind::kInvalidArgument, "consistency needs at least 3 sentence pairs");
  }
  return {vec1.pair_name(), vec2.pair_name(), stats::spearman(x, y)};
}

std::vector<PlanRow> real_cs_plan() {
  return {{"en", "en", "cs", "cs"},
          {"es", "es", "cs", "cs"},
          {"en", "es", "cs", "en"},
          {"en", "es", "cs", "es"}};
}

std::vector<PlanRow> synthetic_plan(const std::string& s) {
  return {{s, s, "en", "en"}, {s, s, "es", "es"}, {"en", "es", s, "en"}, {"en", "es", s, "es"}};
}

ConsistencyReport consistency_report(const std::map<std::string, embed::EmbeddingSet>& sets,
                                     std::span<const PlanRow> plan, bool include_diagonal) {
  ConsistencyReport report;
  std::map<std::pair<std::string, std::string>, std::size_t> built;
  // Returns an index: report.vectors may reallocate between calls.
  const auto vector_for = [&](const std::string& a, const std::string& b) -> std::size_t {
    const auto key = std::make_pair(a, b);
    if (const auto it = built.find(key); it != built.end()) return it->second;
    PairOptions options;
    options.policy = a == b ? PairPolicy::kUnordered : PairPolicy::kOrdered;
    options.include_diagonal = include_diagonal;
    report.vectors.push_back(build_sim_vector(sets.at(a), a, sets.at(b), b, options));
    built.emplace(key, report.vectors.size() - 1);
    return report.vectors.size() - 1;
  };
  for (const PlanRow& row : plan) {
    std::vector<std::string> missing;
    for (const std::string* name : {&row.a1, &row.b1, &row.a2, &row.b2}) {
      if (!sets.count(*name) && std::find(missing.begin(), missing.end(), *name) == missing.end()) {
        missing.push_back(*name);
      }
    }
    const std::string label = row.a1 + "-" + row.b1 + " vs " + row.a2 + "-" + row.b2;
    if (!missing.empty()) {
      std::string list;
      for (const std::string& m : missing) list += (list.empty() ? "" : ", ") + m;
      report.warnings.push_back("skipping row " + label + ": missing set(s) " + list);
      continue;
    }
    const std::size_t first = vector_for(row.a1, row.b1);
    const std::size_t second = vector_for(row.a2, row.b2);
    report.rows.push_back(consistency(report.vectors[first], report.vectors[second]));
  }
  return report;
}

void write_report_csv(std::ostream& out, std::span<const ConsistencyResult> rows,
                      const std::string& model) {
  out << "l_pair_1,l_pair_2,model,spearman\n";
  for (const ConsistencyResult& r : rows) {
    out << csv_field(r.l_pair_1) << ',' << csv_field(r.l_pair_2) << ',' << csv_field(model) << ','
        << format_double(r.spearman) << '\n';
  }
}

void write_sim_vectors_csv(std::ostream& out, std::span<const SimVector> vectors) {
  out << "set_a,set_b,id_i,id_j,cosine\n";
  for (const SimVector& v : vectors) {
    for (const SimEntry& e : v.values) {
      out << csv_field(v.set_a) << ',' << csv_field(v.set_b) << ',' << csv_field(v.ids[e.i]) << ','
          << csv_field(v.ids[e.j]) << ',' << format_double(e.cosine, 8) << '\n';
    }
  }
}

}  // namespace csprobe::semsim
