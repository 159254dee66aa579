// Acceptance checks. Run with a criterion name to run one, or with no
// argument to run all of them; each prints a single PASS/FAIL line and the
// exit status is non-zero if any failed.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "csprobe/csgen.hpp"
#include "csprobe/deptree.hpp"
#include "csprobe/embedstore.hpp"
#include "csprobe/probe.hpp"
#include "csprobe/stats.hpp"
#include "csprobe/structprobe.hpp"
#include "csprobe/sweep.hpp"
#include "csprobe/treedist.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

using namespace csprobe;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int digits = 6) {
  std::ostringstream ss;
  ss.precision(digits);
  ss << v;
  return ss.str();
}

std::vector<structprobe::ProbeSentence> realizable(int count, int dim, Rng& rng, const std::string& prefix) {
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(dim, dim);
  std::vector<structprobe::ProbeSentence> out;
  for (int s = 0; s < count; ++s) {
    const int n = 5 + static_cast<int>(rng.below(6));
    DepTree t = testing::random_tree(n, rng);
    const int root = static_cast<int>(rng.below(n));
    Eigen::MatrixXd h = testing::path_indicator_vectors(t, root, dim, I);
    out.push_back(structprobe::make_probe_sentence(prefix + std::to_string(s), std::move(t), std::move(h)));
  }
  return out;
}

Outcome structural_oracle() {
  const auto t0 = Clock::now();
  Rng rng(0);
  const int dim = 10;
  const auto train = realizable(1000, dim, rng, "tr");
  const auto dev = realizable(50, dim, rng, "dv");
  const auto test = realizable(50, dim, rng, "te");
  const auto cfg = structprobe::default_structural_config();
  const auto fit = structprobe::train_structural_probe(train, dev, dim, cfg);
  const auto ev = structprobe::evaluate(fit.probe, test);
  const double secs = seconds_since(t0);
  // Diagnostics only: how far predictions are from gold, and the distance
  // Spearman once rounding restores the ties that gold distances have.
  double residual = 0.0, rounded = 0.0;
  for (const auto& s : test) {
    const DistanceMatrix pred = structprobe::predicted_distances(fit.probe, s.vectors);
    residual = std::max(residual, (pred - s.gold_distances).cwiseAbs().maxCoeff());
    const DistanceMatrix snapped = (pred.array() * 1e6).round() / 1e6;
    rounded += structprobe::sentence_distance_spearman(snapped, s.gold_distances);
  }
  rounded /= static_cast<double>(test.size());
  const bool pass = ev.uuas == 1.0 && ev.dspr >= 0.99 && fit.epochs_run <= 200 && secs < 120.0;
  return {pass, "UUAS " + fmt(ev.uuas) + ", DSpr " + fmt(ev.dspr) + " (need >= 0.99), " +
                    std::to_string(fit.epochs_run) + " epochs, " + fmt(secs, 3) + " s; max |pred - gold| " +
                    fmt(residual, 3) + ", DSpr on predictions rounded to 1e-6 " + fmt(rounded)};
}

Outcome gradient_check() {
  Rng rng(1);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(4));
    const int dim = 2 + static_cast<int>(rng.below(7));
    const int k = 1 + static_cast<int>(rng.below(dim));
    Eigen::MatrixXd h(n, dim), B(k, dim);
    for (Eigen::Index i = 0; i < h.size(); ++i) h.data()[i] = rng.normal();
    for (Eigen::Index i = 0; i < B.size(); ++i) B.data()[i] = rng.normal();
    const auto s = structprobe::make_probe_sentence("g", testing::random_tree(n, rng), h);
    const structprobe::ProbeSentence* batch[] = {&s};
    Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(k, dim);
    structprobe::batch_loss(B, batch, &grad);
    Eigen::MatrixXd fd(k, dim);
    const double step = 1e-5;
    for (Eigen::Index i = 0; i < B.size(); ++i) {
      Eigen::MatrixXd p = B, m = B;
      p.data()[i] += step;
      m.data()[i] -= step;
      fd.data()[i] = (structprobe::sentence_loss(p, s) - structprobe::sentence_loss(m, s)) / (2 * step);
    }
    const double scale = std::max({grad.norm(), fd.norm(), 1e-12});
    worst = std::max(worst, (grad - fd).norm() / scale);
  }
  return {worst <= 1e-4, "20 instances, worst relative error " + fmt(worst, 3)};
}

Outcome ged_oracle() {
  const auto t0 = Clock::now();
  std::vector<std::pair<int, testing::Edges>> trees;
  for (int n = 1; n <= 5; ++n) {
    for (auto& e : testing::nonisomorphic_trees(n)) trees.emplace_back(n, std::move(e));
  }
  int pairs = 0, mismatches = 0;
  for (std::size_t a = 0; a < trees.size(); ++a) {
    for (std::size_t b = a; b < trees.size(); ++b) {
      const auto& [na, ea] = trees[a];
      const auto& [nb, eb] = trees[b];
      const double got = treedist::ged(DepTree(na, ea), DepTree(nb, eb));
      if (got != testing::brute_force_ged(na, ea, nb, eb)) ++mismatches;
      ++pairs;
    }
  }
  const double secs = seconds_since(t0);
  return {mismatches == 0 && secs < 60.0, std::to_string(trees.size()) + " trees, " + std::to_string(pairs) +
                                               " pairs, " + std::to_string(mismatches) + " mismatches, " +
                                               fmt(secs, 3) + " s"};
}

Outcome mst_exactness() {
  Rng rng(3);
  int failures = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(5));
    const DepTree t = testing::random_tree(n, rng);
    const auto d = tree_distances(t);
    const auto [w, winners] = testing::brute_force_msts(d);
    const bool ok = mst_parse(d) == t && winners.size() == 1 && DepTree(n, winners.front()) == t;
    if (!ok) ++failures;
  }
  return {failures == 0, "1000 random trees (n 2..6), " + std::to_string(failures) + " failures"};
}

Outcome probe_sanity() {
  Rng rng(4);
  const int dim = 16, layers = 3, per_class = 500;
  std::vector<embed::EmbeddingSet> sets;
  std::vector<probe::LabelledSentence> labels;
  for (int layer = 0; layer < layers; ++layer) {
    // A fresh separating direction per layer; labels are shared.
    const auto c = testing::separable_clusters(per_class, dim, 1.0, rng);
    embed::EmbeddingSet set;
    set.model_name = "synthetic";
    set.layer = layer;
    set.kind = embed::EmbeddingKind::kSentenceCls;
    set.dim = dim;
    for (Eigen::Index i = 0; i < c.x.rows(); ++i) {
      set.records["s" + std::to_string(i)] = c.x.row(i).cast<float>();
      if (layer == 0) labels.push_back({"s" + std::to_string(i), c.y[static_cast<std::size_t>(i)]});
    }
    sets.push_back(std::move(set));
  }
  double worst_f1 = 1.0, slowest = 0.0;
  int cells = 0;
  for (const auto& set : sets) {
    for (std::uint64_t seed : probe::kDefaultSeeds) {
      probe::SweepOptions opt;
      opt.seeds = {seed};
      const probe::LayerSource source{"", &set};
      const auto t0 = Clock::now();
      const auto result = probe::sentence_classification_sweep({&source, 1}, labels, opt);
      slowest = std::max(slowest, seconds_since(t0));
      for (const auto& row : result.rows) {
        worst_f1 = std::min(worst_f1, row.f1_macro);
        ++cells;
      }
    }
  }
  const bool pass = cells == layers * 5 && worst_f1 >= 0.99 && slowest < 10.0;
  return {pass, std::to_string(cells) + " layer/seed cells, lowest test F1 " + fmt(worst_f1) + ", slowest cell " +
                    fmt(slowest, 3) + " s"};
}

// Textbook formula on ordinal ranks; only valid without ties.
double classical_spearman(const std::vector<double>& x, const std::vector<double>& y) {
  const auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t k = 0; k < idx.size(); ++k) r[idx[k]] = static_cast<double>(k + 1);
    return r;
  };
  const auto rx = ranks(x), ry = ranks(y);
  double d2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) d2 += (rx[i] - ry[i]) * (rx[i] - ry[i]);
  const double n = static_cast<double>(x.size());
  return 1.0 - 6.0 * d2 / (n * (n * n - 1.0));
}

Outcome spearman_kernel() {
  Rng rng(5);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 3 + static_cast<int>(rng.below(60));
    std::vector<double> x(n), y(n);
    for (int i = 0; i < n; ++i) {
      x[i] = rng.uniform(-1, 1);
      y[i] = rng.uniform(-1, 1);
    }
    worst = std::max(worst, std::abs(stats::spearman(x, y) - classical_spearman(x, y)));
  }
  const std::vector<double> tx{1, 2, 2, 4}, ty{1, 3, 2, 4};
  const double tie = stats::spearman(tx, ty);
  const bool formula_ok = worst <= 1e-12;
  const bool tie_ok = tie == 0.8;
  return {formula_ok && tie_ok,
          "1000 tie-free vectors, max |diff| " + fmt(worst, 3) + (formula_ok ? " (ok)" : " (too large)") +
              "; tie case [1,2,2,4]/[1,3,2,4] gives " + fmt(tie, 16) +
              (tie_ok ? " (ok)" : ", stated value 0.8; average-rank Pearson is 3/sqrt(10)")};
}

bool bit_equal(const embed::EmbeddingSet& a, const embed::EmbeddingSet& b) {
  if (a.model_name != b.model_name || a.layer != b.layer || a.kind != b.kind || a.dim != b.dim ||
      a.records.size() != b.records.size()) {
    return false;
  }
  for (auto ia = a.records.begin(), ib = b.records.begin(); ia != a.records.end(); ++ia, ++ib) {
    if (ia->first != ib->first || ia->second.rows() != ib->second.rows() ||
        ia->second.cols() != ib->second.cols()) {
      return false;
    }
    const auto bytes = static_cast<std::size_t>(ia->second.size()) * sizeof(float);
    if (bytes != 0 && std::memcmp(ia->second.data(), ib->second.data(), bytes) != 0) return false;
  }
  return true;
}

Outcome csem_round_trip() {
  Rng rng(6);
  const auto path = std::filesystem::temp_directory_path() / "csprobe_acceptance.csem";
  int failures = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    embed::EmbeddingSet s;
    s.model_name = "model-" + std::to_string(rng.below(100));
    s.layer = static_cast<int>(rng.below(25));
    s.kind = static_cast<embed::EmbeddingKind>(rng.below(3));
    s.dim = 1 + static_cast<int>(rng.below(16));
    const int count = static_cast<int>(rng.below(8));
    for (int r = 0; r < count; ++r) {
      const int rows = embed::is_sentence_kind(s.kind) ? 1 : 1 + static_cast<int>(rng.below(6));
      embed::FloatRows m(rows, s.dim);
      for (Eigen::Index i = 0; i < m.size(); ++i) {
        std::uint32_t bits;
        float f;
        do {
          bits = static_cast<std::uint32_t>(rng.next());
          std::memcpy(&f, &bits, 4);
        } while (!std::isfinite(f));
        m.data()[i] = f;
      }
      s.records["id" + std::to_string(rng.below(100000))] = m;
    }
    embed::write_container(s, path);
    if (!bit_equal(embed::read_container(path), s)) ++failures;
  }
  std::filesystem::remove(path);
  return {failures == 0, "1000 random sets written and read back, " + std::to_string(failures) + " differences"};
}

Outcome csgen_limits() {
  using namespace csgen;
  std::vector<corpus::ParallelCsRecord> records;
  TranslationLexicon lex;
  for (int i = 0; i < 1000; ++i) {
    const std::string id = "r" + std::to_string(i);
    std::string en, es;
    corpus::AlignmentRecord a;
    for (int t = 0; t < 10; ++t) {
      en += (t ? " e" : "e") + std::to_string(i) + "_" + std::to_string(t);
      es += (t ? " s" : "s") + std::to_string(i) + "_" + std::to_string(t);
      a.pairs.emplace_back(t, t);
    }
    records.push_back({id, "x", es, en, std::nullopt});
    lex.add_alignment(id, a);
  }
  const corpus::ParallelCsCorpus corpus(records);
  const auto run = [&](double p, int jobs) {
    GenerationParams params;
    params.random.p_switch = p;
    params.random.seed = 0;
    return gen_corpus(corpus, params, lex, nullptr, jobs);
  };
  const auto none = run(0.0, 1);
  const auto all = run(1.0, 1);
  bool identity = none.records.size() == records.size();
  bool projection = all.records.size() == records.size();
  for (std::size_t i = 0; i < records.size() && identity && projection; ++i) {
    identity = none.records[i].text == records[i].en && none.records[i].replaced_spans.empty();
    projection = all.records[i].text == records[i].es;
  }
  const auto half = run(0.5, 1);
  const auto half_threads = run(0.5, 4);
  std::ostringstream a, b;
  write_synthetic(a, half.records);
  write_synthetic(b, half_threads.records);
  const bool deterministic = a.str() == b.str();
  const double frac = static_cast<double>(half.report.tally.replaced) /
                      static_cast<double>(half.report.tally.source_tokens);
  const bool within = half.report.tally.source_tokens == 10000 && std::abs(frac - 0.5) <= 0.02;
  return {identity && projection && within && deterministic,
          std::string("p=0 identity ") + (identity ? "ok" : "FAILED") + ", p=1 projection " +
              (projection ? "ok" : "FAILED") + ", p=0.5 replaced " + fmt(frac, 4) + " of " +
              std::to_string(half.report.tally.source_tokens) + " tokens, thread-count determinism " +
              (deterministic ? "ok" : "FAILED")};
}

struct Criterion {
  const char* name;
  std::function<Outcome()> check;
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all = {
      {"structural_oracle", structural_oracle}, {"gradient_check", gradient_check},
      {"ged_oracle", ged_oracle},               {"mst_exactness", mst_exactness},
      {"probe_sanity", probe_sanity},           {"spearman_kernel", spearman_kernel},
      {"csem_round_trip", csem_round_trip},     {"csgen_limits", csgen_limits},
  };
  return all;
}

}  // namespace

int main(int argc, char** argv) {
  const std::string only = argc > 1 ? argv[1] : "";
  int failed = 0, ran = 0;
  for (const auto& c : criteria()) {
    if (!only.empty() && only != c.name) continue;
    ++ran;
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::cout << (o.pass ? "PASS " : "FAIL ") << c.name << ": " << o.detail << std::endl;
    if (!o.pass) ++failed;
  }
  if (ran == 0) {
    std::cerr << "unknown criterion " << only << '\n';
    return 2;
  }
  return failed == 0 ? 0 : 1;
}
