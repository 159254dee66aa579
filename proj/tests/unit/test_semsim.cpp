#include <doctest.h>

#include <cmath>
#include <sstream>

#include "csprobe/error.hpp"
#include "csprobe/random.hpp"
#include "csprobe/semsim.hpp"

using namespace csprobe;
using namespace csprobe::semsim;

namespace {

embed::EmbeddingSet random_set(int n, int dim, Rng& rng, const std::string& model = "m") {
  embed::EmbeddingSet s;
  s.model_name = model;
  s.kind = embed::EmbeddingKind::kSentenceMean;
  s.dim = dim;
  for (int i = 0; i < n; ++i) {
    embed::FloatRows r(1, dim);
    for (int k = 0; k < dim; ++k) r(0, k) = static_cast<float>(rng.normal());
    s.records["id" + std::to_string(i)] = r;
  }
  return s;
}

}  // namespace

TEST_CASE("cosine") {
  const Eigen::Vector3d u(1, 2, 3), v(4, 5, 6);
  // 32 / sqrt(14 * 77)
  CHECK(cosine(u, v) == doctest::Approx(32.0 / std::sqrt(14.0 * 77.0)).epsilon(1e-15));
  CHECK(cosine(u, v) == doctest::Approx(0.974631846).epsilon(1e-9));
  CHECK(cosine(u, u) == 1.0);
  CHECK(cosine(Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1)) == 0.0);
  CHECK(std::abs(cosine(3.5 * u, 0.25 * v) - cosine(u, v)) <= 1e-12);
  CHECK_THROWS_AS(cosine(u, Eigen::Vector3d::Zero()), Error);
  CHECK_THROWS_AS(cosine(u, Eigen::Vector2d(1, 1)), Error);
}

TEST_CASE("similarity vectors") {
  Rng rng(1);
  const auto a = random_set(3, 5, rng), b = random_set(3, 5, rng);
  const auto un = build_sim_vector(a, "en", a, "en", {PairPolicy::kUnordered, false});
  CHECK(un.values.size() == 3);
  CHECK(un.pair_name() == "en-en");
  for (const auto& e : un.values) {
    CHECK(e.i < e.j);
    CHECK(e.cosine >= -1.0);
    CHECK(e.cosine <= 1.0);
  }
  const auto ord = build_sim_vector(a, "en", b, "cs", {PairPolicy::kOrdered, false});
  CHECK(ord.values.size() == 6);
  const auto diag = build_sim_vector(a, "en", b, "cs", {PairPolicy::kOrdered, true});
  CHECK(diag.values.size() == 9);
  CHECK(ord.ids == std::vector<std::string>{"id0", "id1", "id2"});

  auto c = b;
  c.records.erase("id2");
  c.records["other"] = b.records.at("id2");
  CHECK_THROWS_AS(build_sim_vector(a, "en", c, "cs", {}), Error);
}

TEST_CASE("consistency") {
  Rng rng(2);
  const auto a = random_set(8, 6, rng), b = random_set(8, 6, rng);
  const auto v1 = build_sim_vector(a, "en", a, "en", {});
  auto v2 = v1;
  for (auto& e : v2.values) e.cosine = std::exp(3 * e.cosine);
  CHECK(consistency(v1, v2).spearman == doctest::Approx(1.0));
  const auto v3 = build_sim_vector(b, "cs", b, "cs", {});
  CHECK(consistency(v1, v3).spearman == doctest::Approx(consistency(v3, v1).spearman).epsilon(1e-14));
  CHECK(consistency(v1, v3).l_pair_2 == "cs-cs");

  const auto ordered = build_sim_vector(a, "en", b, "cs", {PairPolicy::kOrdered, false});
  CHECK_THROWS_AS(consistency(v1, ordered), Error);

  const auto tiny = random_set(2, 3, rng);
  const auto t = build_sim_vector(tiny, "x", tiny, "x", {});
  CHECK_THROWS_AS(consistency(t, t), Error);
}

TEST_CASE("consistency report") {
  Rng rng(3);
  const auto base = random_set(6, 4, rng);
  std::map<std::string, embed::EmbeddingSet> same{{"cs", base}, {"en", base}, {"es", base}};
  const auto plan = real_cs_plan();
  REQUIRE(plan.size() == 4);
  const auto all_same = consistency_report(same, plan);
  REQUIRE(all_same.rows.size() == 4);
  for (const auto& r : all_same.rows) CHECK(r.spearman == doctest::Approx(1.0));
  CHECK(all_same.rows[0].l_pair_1 == "en-en");
  CHECK(all_same.rows[0].l_pair_2 == "cs-cs");
  CHECK(all_same.rows[2].l_pair_2 == "cs-en");

  std::map<std::string, embed::EmbeddingSet> partial{{"cs", base}, {"en", random_set(6, 4, rng)}};
  const auto part = consistency_report(partial, plan);
  CHECK(part.rows.size() == 1);
  CHECK(part.warnings.size() == 3);

  std::ostringstream csv, vec;
  write_report_csv(csv, all_same.rows, "m");
  CHECK(csv.str().rfind("l_pair_1,l_pair_2,model,spearman\nen-en,cs-cs,m,1.000000\n", 0) == 0);
  write_sim_vectors_csv(vec, all_same.vectors);
  CHECK(vec.str().rfind("set_a,set_b,id_i,id_j,cosine\n", 0) == 0);

  const auto syn = synthetic_plan("randcs");
  CHECK_FALSE(syn.empty());
  bool mentions = false;
  for (const auto& r : syn) mentions |= r.a1 == "randcs" || r.a2 == "randcs" || r.b2 == "randcs";
  CHECK(mentions);
}
