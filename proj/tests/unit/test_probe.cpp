#include <doctest.h>

#include <cmath>
#include <vector>

#include "csprobe/adam.hpp"
#include "csprobe/error.hpp"
#include "csprobe/probe.hpp"
#include "support/synthetic.hpp"

using namespace csprobe;
using namespace csprobe::probe;

namespace {

LabelledSet to_set(const testing::Clusters& c, int from, int to) {
  LabelledSet s;
  s.features = c.x.middleRows(from, to - from);
  s.labels.assign(c.y.begin() + from, c.y.begin() + to);
  return s;
}

}  // namespace

TEST_CASE("softmax and predict") {
  Eigen::Vector2d logits(0.0, std::log(3.0));
  const auto p = softmax(logits);
  CHECK(p(0) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(p(1) == doctest::Approx(0.75).epsilon(1e-15));
  const Eigen::Vector3d big(1000, 1001, 999);
  CHECK(softmax(big).allFinite());
  CHECK(softmax(big).sum() == doctest::Approx(1.0).epsilon(1e-12));

  ProbeModel zero;
  zero.weights = Eigen::MatrixXd::Zero(3, 4);
  zero.bias = Eigen::VectorXd::Zero(3);
  zero.label_set = {"a", "b", "c"};
  const auto pred = predict(zero, Eigen::VectorXd::Ones(4));
  CHECK(pred.label == 0);
  for (int i = 0; i < 3; ++i) CHECK(pred.probabilities(i) == doctest::Approx(1.0 / 3));
  CHECK_THROWS_AS(predict(zero, Eigen::VectorXd::Ones(5)), Error);

  Rng rng(1);
  ProbeModel m = zero;
  for (Eigen::Index i = 0; i < m.weights.size(); ++i) m.weights.data()[i] = rng.normal();
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd x(4);
    for (int i = 0; i < 4; ++i) x(i) = rng.normal();
    const int label = predict(m, x).label;
    ProbeModel shifted = m;
    shifted.weights *= 2.5;
    shifted.bias = m.bias * 2.5 + Eigen::VectorXd::Constant(3, 7.0);
    CHECK(predict(shifted, x).label == label);
    CHECK(predict(m, x).probabilities.sum() == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("f1 modes") {
  const std::vector<int> g{0, 1, 2, 1, 0}, perfect = g;
  for (F1Averaging mode : {F1Averaging::kBinaryPositive, F1Averaging::kMacro, F1Averaging::kWeighted})
    CHECK(f1_score(g, perfect, mode) == 1.0);

  const std::vector<int> gold{1, 1, 0, 0}, pred{1, 0, 1, 0};
  CHECK(f1_score(gold, pred, F1Averaging::kBinaryPositive, 1) == doctest::Approx(0.5));

  ClassificationReport r;
  r.f1 = {1.0, 0.5, 0.0};
  r.precision = r.recall = r.f1;
  r.support = {2, 2, 2};
  r.present = {true, true, true};
  CHECK(average_f1(r, F1Averaging::kMacro) == doctest::Approx(0.5));
  CHECK(average_f1(r, F1Averaging::kWeighted) == doctest::Approx(0.5));

  // Classes 0 and 2 only; the missing class 1 carries no weight.
  const std::vector<int> g2{0, 0, 2, 2}, p2{0, 2, 2, 2};
  const auto rep = classification_report(g2, p2);
  CHECK_FALSE(rep.present[1]);
  // class 0: P=1 R=.5 F=2/3; class 2: P=2/3 R=1 F=.8
  CHECK(f1_score(g2, p2, F1Averaging::kMacro) == doctest::Approx((2.0 / 3 + 0.8) / 2));
  CHECK(f1_score(g2, p2, F1Averaging::kWeighted) == doctest::Approx((2.0 / 3 * 2 + 0.8 * 2) / 4));

  // Relabelling classes consistently leaves every mode unchanged.
  Rng rng(4);
  std::vector<int> a(40), b(40);
  for (int i = 0; i < 40; ++i) {
    a[i] = static_cast<int>(rng.below(4));
    b[i] = rng.uniform() < 0.6 ? a[i] : static_cast<int>(rng.below(4));
  }
  const int perm[] = {2, 0, 3, 1};
  std::vector<int> pa, pb;
  for (int v : a) pa.push_back(perm[v]);
  for (int v : b) pb.push_back(perm[v]);
  CHECK(f1_score(a, b, F1Averaging::kMacro) == doctest::Approx(f1_score(pa, pb, F1Averaging::kMacro)));
  CHECK(f1_score(a, b, F1Averaging::kWeighted) ==
        doctest::Approx(f1_score(pa, pb, F1Averaging::kWeighted)));

  const std::vector<int> shorter{1};
  CHECK_THROWS_AS(f1_score(gold, shorter, F1Averaging::kMacro), Error);
  CHECK_THROWS_AS(f1_score(std::vector<int>{}, std::vector<int>{}, F1Averaging::kMacro), Error);
}

TEST_CASE("encode_labels") {
  const std::vector<std::string> set{"x", "y"}, ok{"y", "x", "y"}, bad{"z"};
  CHECK(encode_labels(ok, set) == std::vector<int>{1, 0, 1});
  CHECK_THROWS_AS(encode_labels(bad, set), Error);
}

TEST_CASE("adam with zero learning rate is a no-op") {
  Adam opt(2, 3, {0.0, 0.9, 0.999, 1e-8});
  Eigen::MatrixXd p = Eigen::MatrixXd::Random(2, 3), before = p;
  opt.step(p, Eigen::MatrixXd::Ones(2, 3));
  CHECK(p == before);
  Adam one(1, 1, {0.1, 0.9, 0.999, 1e-8});
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(1, 1);
  one.step(q, Eigen::MatrixXd::Constant(1, 1, 3.0));
  // First bias-corrected step has magnitude lr.
  CHECK(q(0, 0) == doctest::Approx(-0.1).epsilon(1e-6));
}

TEST_CASE("probe separates synthetic clusters") {
  Rng rng(2);
  const auto c = testing::separable_clusters(200, 16, 1.0, rng);
  for (int k = 0; k < 400; ++k) CHECK(((c.x.row(k) * c.u)(0) > 0) == (c.y[k] == 1));
  const auto train = to_set(c, 0, 320), dev = to_set(c, 320, 360), test = to_set(c, 360, 400);
  ProbeTrainConfig cfg;
  cfg.seed = 3;
  const auto fit = train_probe(train, dev, {"0", "1"}, cfg);
  const auto pred = predict_labels(fit.model, test.features);
  CHECK(f1_score(test.labels, pred, F1Averaging::kMacro) >= 0.99);
  CHECK(std::isfinite(cross_entropy(fit.model, test)));
  CHECK(fit.best_epoch >= 1);
  CHECK(fit.best_epoch <= fit.epochs_run);

  const auto& losses = fit.first_epoch_batch_loss;
  REQUIRE(losses.size() == 10);
  for (double l : losses) CHECK(std::isfinite(l));
  CHECK(losses.back() < losses.front());
}

TEST_CASE("probe training is deterministic per seed") {
  Rng rng(5);
  const auto c = testing::separable_clusters(50, 8, 1.0, rng);
  const auto train = to_set(c, 0, 80), dev = to_set(c, 80, 100);
  ProbeTrainConfig cfg;
  cfg.seed = 7;
  cfg.max_epochs = 5;
  const auto a = train_probe(train, dev, {"0", "1"}, cfg);
  const auto b = train_probe(train, dev, {"0", "1"}, cfg);
  CHECK(a.model.weights == b.model.weights);
  CHECK(a.model.bias == b.model.bias);
  cfg.seed = 8;
  CHECK_FALSE(train_probe(train, dev, {"0", "1"}, cfg).model.weights == a.model.weights);
}

TEST_CASE("single-class training warns and predicts that class") {
  LabelledSet train;
  train.features = Eigen::MatrixXd::Random(20, 4);
  train.labels.assign(20, 1);
  ProbeTrainConfig cfg;
  cfg.max_epochs = 5;
  const auto fit = train_probe(train, {}, {"a", "b", "c"}, cfg);
  CHECK(fit.warnings.size() == 1);
  for (int l : predict_labels(fit.model, Eigen::MatrixXd::Random(10, 4))) CHECK(l == 1);
}

TEST_CASE("probe argument validation") {
  LabelledSet train;
  train.features = Eigen::MatrixXd::Zero(4, 3);
  train.labels = {0, 1, 0, 1};
  LabelledSet dev;
  dev.features = Eigen::MatrixXd::Zero(2, 5);
  dev.labels = {0, 1};
  CHECK_THROWS_AS(train_probe(train, dev, {"a", "b"}, {}), Error);
  LabelledSet unseen;
  unseen.features = Eigen::MatrixXd::Zero(1, 3);
  unseen.labels = {2};
  CHECK_THROWS_AS(train_probe(train, unseen, {"a", "b"}, {}), Error);
  CHECK_THROWS_AS(train_probe({}, {}, {"a", "b"}, {}), Error);
  CHECK_THROWS_AS(train_probe(train, {}, {"a", "a"}, {}), Error);
  ProbeTrainConfig bad;
  bad.batch_size = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = {};
  bad.learning_rate = -1e-3;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad.learning_rate = NAN;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = {};
  bad.patience = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
}
