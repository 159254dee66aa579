#include <doctest.h>

#include <chrono>
#include <sstream>
#include <vector>

#include "csprobe/error.hpp"
#include "csprobe/treedist.hpp"
#include "support/oracles.hpp"

using namespace csprobe;
using namespace csprobe::treedist;
using structprobe::ParseRecord;

TEST_CASE("ged small cases") {
  const DepTree chain(3, {{0, 1}, {1, 2}});
  const DepTree star(3, {{0, 1}, {0, 2}});
  CHECK(ged(chain, chain) == 0.0);
  // Unlabeled three-node trees are all paths, so relabelling is free.
  CHECK(ged(chain, star) == 0.0);
  CHECK(testing::brute_force_ged(3, chain.edges(), 3, star.edges()) == 0.0);

  const DepTree path4(4, {{0, 1}, {1, 2}, {2, 3}});
  const DepTree star4(4, {{0, 1}, {0, 2}, {0, 3}});
  CHECK(ged(path4, star4) == 2.0);
  CHECK(ged(DepTree(1, {}), path4) == 3.0 + 3.0);
}

TEST_CASE("ged equals brute force on random pairs") {
  Rng rng(12);
  for (int trial = 0; trial < 60; ++trial) {
    const int na = 1 + static_cast<int>(rng.below(6));
    const int nb = 1 + static_cast<int>(rng.below(6));
    const DepTree a = testing::random_tree(na, rng), b = testing::random_tree(nb, rng);
    CHECK(ged(a, b) == testing::brute_force_ged(na, a.edges(), nb, b.edges()));
  }
}

TEST_CASE("ged with non-unit costs equals brute force") {
  Rng rng(13);
  GedOptions opt;
  opt.costs = {0.5, 2.0, 1.5, 0.25};
  for (int trial = 0; trial < 40; ++trial) {
    const int na = 1 + static_cast<int>(rng.below(5));
    const int nb = 1 + static_cast<int>(rng.below(5));
    const DepTree a = testing::random_tree(na, rng), b = testing::random_tree(nb, rng);
    CHECK(ged(a, b, opt) == doctest::Approx(testing::brute_force_ged(
                                na, a.edges(), nb, b.edges(), 0.5, 2.0, 1.5, 0.25)));
  }
}

TEST_CASE("ged metric properties") {
  Rng rng(14);
  GedOptions doubled;
  doubled.costs = {2, 2, 2, 2};
  for (int trial = 0; trial < 40; ++trial) {
    const DepTree a = testing::random_tree(1 + static_cast<int>(rng.below(5)), rng);
    const DepTree b = testing::random_tree(1 + static_cast<int>(rng.below(5)), rng);
    const DepTree c = testing::random_tree(1 + static_cast<int>(rng.below(5)), rng);
    const double ab = ged(a, b), bc = ged(b, c), ac = ged(a, c);
    CHECK(ab == ged(b, a));
    CHECK(ged(a, a) == 0.0);
    CHECK(ac <= ab + bc);
    CHECK(ab >= std::abs(a.size() - b.size()));
    CHECK(ged(a, b, doubled) == 2 * ab);
  }
}

TEST_CASE("ged on ten-node trees is fast") {
  Rng rng(15);
  const auto start = std::chrono::steady_clock::now();
  for (int trial = 0; trial < 20; ++trial) {
    const DepTree a = testing::random_tree(10, rng), b = testing::random_tree(10, rng);
    const double d = ged(a, b);
    CHECK(d >= 0.0);
    CHECK(d == ged(b, a));
  }
  CHECK(std::chrono::steady_clock::now() - start < std::chrono::seconds(30));
}

TEST_CASE("ged refuses oversize input and exhausted budgets") {
  Rng rng(16);
  const DepTree big = testing::random_tree(11, rng), small = testing::random_tree(4, rng);
  try {
    ged(big, small);
    FAIL("expected cap error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kCapExceeded);
  }
  GedOptions tiny;
  tiny.expansion_budget = 2;
  const DepTree a = testing::random_tree(8, rng), b = testing::random_tree(8, rng);
  try {
    ged(a, b, tiny);
    FAIL("expected budget error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kBudgetExceeded);
  }
  GedOptions negative;
  negative.costs.edge_insert = -1;
  CHECK_THROWS_AS(ged(a, b, negative), Error);
}

TEST_CASE("mapping_cost") {
  const DepTree chain(3, {{0, 1}, {1, 2}});
  const std::vector<int> ident{0, 1, 2}, none{-1, -1, -1};
  CHECK(mapping_cost(chain, chain, ident, {}) == 0.0);
  CHECK(mapping_cost(chain, chain, none, {}) == 3 + 3 + 2 + 2);
}

TEST_CASE("ged_compare") {
  Rng rng(20);
  std::vector<ParseRecord> cs, es, en;
  for (int i = 0; i < 8; ++i) {
    const std::string id = "r" + std::to_string(i);
    cs.push_back({id, testing::random_tree(3 + static_cast<int>(rng.below(6)), rng)});
    es.push_back({id, testing::random_tree(3 + static_cast<int>(rng.below(6)), rng)});
    en.push_back({id, testing::random_tree(3 + static_cast<int>(rng.below(6)), rng)});
  }
  cs.push_back({"big", testing::random_tree(12, rng)});
  es.push_back({"big", testing::random_tree(4, rng)});
  en.push_back({"big", testing::random_tree(4, rng)});
  es.push_back({"lonely", testing::random_tree(4, rng)});

  const auto same = ged_compare(cs, es, es);
  CHECK(same.retained() == 8);
  CHECK(same.excluded_cap == 1);
  CHECK(same.excluded_missing == 1);
  REQUIRE(same.spearman.has_value());
  CHECK(*same.spearman == doctest::Approx(1.0));

  const auto cmp = ged_compare(cs, es, en, {}, 2);
  CHECK(cmp.retained() == 8);
  for (const auto& row : cmp.rows) {
    const auto* c = &*std::find_if(cs.begin(), cs.end(), [&](auto& r) { return r.id == row.id; });
    const auto* e = &*std::find_if(es.begin(), es.end(), [&](auto& r) { return r.id == row.id; });
    CHECK(row.ged_cs_es == ged(c->tree, e->tree));
  }
  std::ostringstream csv;
  write_ged_csv(csv, cmp);
  CHECK(csv.str().rfind("id,n_cs,n_es,n_en,ged_cs_es,ged_cs_en\n", 0) == 0);
  const auto js = ged_summary_json(cmp);
  CHECK(js["retained"] == 8);
  CHECK(js["excluded"] == 2);

  const std::vector<ParseRecord> only_big{{"big", testing::random_tree(12, rng)}};
  CHECK_THROWS_AS(ged_compare(only_big, only_big, only_big), Error);
}
