#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <sstream>
#include <vector>

#include "csprobe/error.hpp"
#include "csprobe/structprobe.hpp"
#include "support/oracles.hpp"

using namespace csprobe;
using namespace csprobe::structprobe;

namespace {

std::vector<ProbeSentence> realizable(int count, int dim, const Eigen::MatrixXd& rot, Rng& rng,
                                      const std::string& prefix) {
  std::vector<ProbeSentence> out;
  for (int s = 0; s < count; ++s) {
    const int n = 5 + static_cast<int>(rng.below(6));
    DepTree t = testing::random_tree(n, rng);
    const int root = static_cast<int>(rng.below(n));
    Eigen::MatrixXd h = testing::path_indicator_vectors(t, root, dim, rot);
    out.push_back(make_probe_sentence(prefix + std::to_string(s), std::move(t), std::move(h)));
  }
  return out;
}

// Loss written directly from its definition.
double loss_ref(const Eigen::MatrixXd& B, const ProbeSentence& s) {
  const int n = static_cast<int>(s.vectors.rows());
  double total = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const Eigen::VectorXd diff = B * (s.vectors.row(i) - s.vectors.row(j)).transpose();
      total += std::abs(s.gold_distances(i, j) - diff.squaredNorm());
    }
  return total / (static_cast<double>(n) * n);
}

}  // namespace

TEST_CASE("predicted distances") {
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(4, 4);
  const Eigen::MatrixXd d = predicted_distances(I, I);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) CHECK(d(i, j) == (i == j ? 0.0 : 2.0));

  Rng rng(4);
  Eigen::MatrixXd H(6, 5), B(3, 5);
  for (Eigen::Index i = 0; i < H.size(); ++i) H.data()[i] = rng.normal();
  for (Eigen::Index i = 0; i < B.size(); ++i) B.data()[i] = rng.normal();
  CHECK(predicted_distances(Eigen::MatrixXd::Zero(3, 5), H).isZero(0));
  const Eigen::MatrixXd base = predicted_distances(B, H);
  CHECK(is_distance_matrix(base, 1e-12));
  const Eigen::MatrixXd Q = testing::random_orthogonal(3, rng);
  CHECK((predicted_distances(Q * B, H) - base).cwiseAbs().maxCoeff() <= 1e-9);
  CHECK_THROWS_AS(predicted_distances(B, Eigen::MatrixXd::Zero(3, 4)), Error);
}

TEST_CASE("sentence loss matches definition and scales with length") {
  Rng rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(6));
    const int dim = 3 + static_cast<int>(rng.below(4));
    DepTree t = testing::random_tree(n, rng);
    Eigen::MatrixXd h(n, dim), B(2, dim);
    for (Eigen::Index i = 0; i < h.size(); ++i) h.data()[i] = rng.normal();
    for (Eigen::Index i = 0; i < B.size(); ++i) B.data()[i] = rng.normal();
    const auto s = make_probe_sentence("x", t, h);
    CHECK(sentence_loss(B, s) == doctest::Approx(loss_ref(B, s)).epsilon(1e-12));
  }
  // The same pair errors in a sentence twice as long count 1/4 as much.
  const DepTree two(2, {{0, 1}});
  const auto s2 = make_probe_sentence("a", two, Eigen::MatrixXd::Zero(2, 3));
  CHECK(sentence_loss(Eigen::MatrixXd::Identity(3, 3), s2) == doctest::Approx(1.0 / 4.0));
}

TEST_CASE("batch gradient matches central differences") {
  Rng rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    const int dim = 2 + static_cast<int>(rng.below(7));
    const int k = 1 + static_cast<int>(rng.below(dim));
    std::vector<ProbeSentence> batch;
    for (int s = 0; s < 3; ++s) {
      const int n = 2 + static_cast<int>(rng.below(4));
      Eigen::MatrixXd h(n, dim);
      for (Eigen::Index i = 0; i < h.size(); ++i) h.data()[i] = rng.normal();
      batch.push_back(make_probe_sentence("s", testing::random_tree(n, rng), h));
    }
    std::vector<const ProbeSentence*> ptrs;
    for (const auto& s : batch) ptrs.push_back(&s);
    Eigen::MatrixXd B(k, dim);
    for (Eigen::Index i = 0; i < B.size(); ++i) B.data()[i] = rng.normal();
    Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(k, dim);
    batch_loss(B, ptrs, &grad);
    Eigen::MatrixXd fd(k, dim);
    const double h = 1e-5;
    for (Eigen::Index i = 0; i < B.size(); ++i) {
      Eigen::MatrixXd p = B, m = B;
      p.data()[i] += h;
      m.data()[i] -= h;
      fd.data()[i] = (batch_loss(p, ptrs, nullptr) - batch_loss(m, ptrs, nullptr)) / (2 * h);
    }
    CHECK((grad - fd).norm() / std::max(1.0, fd.norm()) <= 1e-4);
  }
}

TEST_CASE("realizable treebank is learned") {
  Rng rng(1);
  const int dim = 10;
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(dim, dim);
  const auto train = realizable(300, dim, I, rng, "tr");
  const auto dev = realizable(50, dim, I, rng, "dv");
  const auto test = realizable(50, dim, I, rng, "te");
  // The identity map reproduces the gold metric exactly.
  CHECK(mean_loss(I, test) == 0.0);
  const auto fit = train_structural_probe(train, dev, dim, default_structural_config());
  CHECK(fit.best_dev_loss <= 0.05);
  CHECK(fit.epochs_run <= 200);
  const auto ev = evaluate(fit.probe, test);
  CHECK(ev.uuas == 1.0);
  CHECK(ev.n_sentences == 50);

  // Parsing the same sentences through a container reproduces gold trees.
  embed::EmbeddingSet set;
  set.model_name = "synthetic";
  set.dim = dim;
  for (const auto& s : test) set.records[s.id] = s.vectors.cast<float>();
  std::vector<std::string> warnings;
  const auto parses = parse_corpus(fit.probe, set, {}, warnings);
  REQUIRE(parses.size() == test.size());
  for (const auto& p : parses) {
    const auto it = std::find_if(test.begin(), test.end(), [&](const auto& s) { return s.id == p.id; });
    CHECK(p.tree == it->gold);
  }
  CHECK(parse_corpus(fit.probe, set, {}, warnings, 2) == parses);
}

TEST_CASE("rank beyond need gives the same parses") {
  Rng rng(2);
  const int dim = 144;
  const Eigen::MatrixXd rot = testing::random_orthogonal(dim, rng);
  const auto train = realizable(300, dim, rot, rng, "tr");
  const auto dev = realizable(50, dim, rot, rng, "dv");
  const auto test = realizable(50, dim, rot, rng, "te");
  for (int k : {dim, 128}) {
    const auto fit = train_structural_probe(train, dev, k, default_structural_config());
    CHECK(fit.probe.rank() == k);
    CHECK(evaluate(fit.probe, test).uuas >= 0.99);
  }
}

TEST_CASE("training with lr 0 keeps the loss fixed") {
  Rng rng(3);
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(10, 10);
  const auto train = realizable(40, 10, I, rng, "tr");
  const auto dev = realizable(10, 10, I, rng, "dv");
  auto cfg = default_structural_config();
  cfg.learning_rate = 0.0;
  cfg.max_epochs = 4;
  cfg.patience = 10;
  const auto fit = train_structural_probe(train, dev, 5, cfg);
  REQUIRE(fit.train_loss.size() >= 2);
  for (double v : fit.train_loss) CHECK(v == fit.train_loss.front());
  for (double v : fit.dev_loss) CHECK(v == fit.dev_loss.front());
}

TEST_CASE("training is deterministic and validates arguments") {
  Rng rng(5);
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(10, 10);
  const auto train = realizable(30, 10, I, rng, "tr");
  auto cfg = default_structural_config();
  cfg.max_epochs = 3;
  cfg.seed = 7;
  const auto a = train_structural_probe(train, {}, 4, cfg);
  const auto b = train_structural_probe(train, {}, 4, cfg);
  CHECK(a.probe.B == b.probe.B);
  CHECK_THROWS_AS(train_structural_probe(train, {}, 11, cfg), Error);
  CHECK_THROWS_AS(train_structural_probe({}, {}, 4, cfg), Error);
}

TEST_CASE("distance spearman") {
  const DepTree t(6, {{0, 1}, {1, 2}, {1, 3}, {3, 4}, {4, 5}});
  const auto gold = tree_distances(t);
  CHECK(sentence_distance_spearman(gold, gold) == doctest::Approx(1.0));
  CHECK(sentence_distance_spearman((10 * gold).array() + 1, gold) == doctest::Approx(1.0));
  CHECK(sentence_distance_spearman(-gold, gold) == doctest::Approx(-1.0));

  // Sentences outside [5, 50] do not count.
  const DepTree small(3, {{0, 1}, {1, 2}});
  const auto gs = tree_distances(small);
  Eigen::MatrixXd flipped = -gs;
  std::vector<DistanceMatrix> pred{gold, flipped}, golds{gold, gs};
  CHECK(distance_spearman(pred, golds) == doctest::Approx(1.0));
  CHECK(distance_spearman(pred, golds, {2, 50}) == doctest::Approx(0.0));
}

TEST_CASE("from_conllu drops punctuation") {
  corpus::ConlluSentence s;
  s.sent_id = "p1";
  // "Hi , there ." with heads: Hi->0, ,->1, there->1, .->3 (child of there)
  const char* forms[] = {"Hi", ",", "there", "."};
  const char* upos[] = {"INTJ", "PUNCT", "ADV", "PUNCT"};
  const int heads[] = {0, 1, 1, 3};
  for (int i = 0; i < 4; ++i) {
    corpus::ConlluWord w;
    w.index = i + 1;
    w.form = forms[i];
    w.upos = upos[i];
    w.head = heads[i];
    s.words.push_back(w);
  }
  embed::FloatRows v(4, 2);
  v << 1, 0, 2, 0, 3, 0, 4, 0;
  const auto ps = from_conllu(s, v);
  REQUIRE(ps.has_value());
  CHECK(ps->gold.size() == 2);
  CHECK(ps->vectors(1, 0) == 3.0);
  const auto keep = from_conllu(s, v, false);
  REQUIRE(keep.has_value());
  CHECK(keep->gold.size() == 4);
  embed::FloatRows wrong(3, 2);
  wrong.setZero();
  CHECK_THROWS_AS(from_conllu(s, wrong), Error);
}

TEST_CASE("parse serialization and checkpoints round-trip") {
  std::vector<ParseRecord> parses{{"a", DepTree(3, {{0, 1}, {1, 2}})}, {"b", DepTree(2, {{0, 1}})}};
  std::stringstream ss;
  write_parses(ss, parses);
  CHECK(ss.str().substr(0, ss.str().find('\n')) == R"({"edges":[[0,1],[1,2]],"id":"a","n":3})");
  CHECK(parse_parses(ss) == parses);

  std::istringstream bad(R"({"id":"x","n":3,"edges":[[0,1]]})" "\n");
  CHECK_THROWS_AS(parse_parses(bad), Error);

  StructuralProbe p;
  p.B = Eigen::MatrixXd::Constant(2, 3, 0.25);
  p.layer = 7;
  p.model_name = "m";
  const auto path = std::filesystem::temp_directory_path() / "csprobe_test_probe.csem";
  save_probe(p, path);
  const auto q = load_probe(path);
  CHECK(q.B == p.B);
  CHECK(q.layer == 7);
  CHECK(q.model_name == "m");
  std::filesystem::remove(path);
}

TEST_CASE("parse_corpus skips single words and rejects missing ids") {
  StructuralProbe p;
  p.B = Eigen::MatrixXd::Identity(2, 2);
  embed::EmbeddingSet set;
  set.dim = 2;
  set.records["one"] = embed::FloatRows::Zero(1, 2);
  set.records["two"] = embed::FloatRows::Identity(2, 2);
  std::vector<std::string> warnings;
  const auto out = parse_corpus(p, set, {}, warnings);
  CHECK(out.size() == 1);
  CHECK(out.front().id == "two");
  CHECK(warnings.size() == 1);
  const std::vector<std::string> ids{"two", "three"};
  try {
    parse_corpus(p, set, ids, warnings);
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("three") != std::string::npos);
  }
}
