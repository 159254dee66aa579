#include "csprobe/probe.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "csprobe/adam.hpp"
#include "csprobe/error.hpp"
#include "csprobe/random.hpp"

namespace csprobe::probe {
namespace {

void check_set(const LabelledSet& data, Eigen::Index dim, std::size_t n_classes, const char* name) {
  if (static_cast<std::size_t>(data.features.rows()) != data.labels.size()) {
    throw Error(ErrorKind::kDimensionMismatch,
                std::string(name) + ": feature rows and label count differ");
  }
  if (data.size() > 0 && data.features.cols() != dim) {
    throw Error(ErrorKind::kDimensionMismatch,
                std::string(name) + ": expected dim " + std::to_string(dim) + ", got " +
                    std::to_string(data.features.cols()));
  }
  for (int label : data.labels) {
    if (label < 0 || static_cast<std::size_t>(label) >= n_classes) {
      throw Error(ErrorKind::kValidation,
                  std::string(name) + ": label index " + std::to_string(label) +
                      " is not in the label set");
    }
  }
}

// Row-wise softmax of logits for a batch.
Eigen::MatrixXd batch_probabilities(const ProbeModel& model, const Eigen::MatrixXd& x) {
  Eigen::MatrixXd logits = x * model.weights.transpose();
  logits.rowwise() += model.bias.transpose();
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    logits.row(i).array() -= logits.row(i).maxCoeff();
    logits.row(i) = logits.row(i).array().exp();
    logits.row(i) /= logits.row(i).sum();
  }
  return logits;
}

double selection_score(const ProbeModel& model, const LabelledSet& data, F1Averaging mode) {
  const std::vector<int> pred = predict_labels(model, data.features);
  return f1_score(data.labels, pred, mode);
}

}  // namespace

std::string_view to_string(F1Averaging mode) {
  switch (mode) {
    case F1Averaging::kBinaryPositive: return "binary";
    case F1Averaging::kMacro: return "macro";
    case F1Averaging::kWeighted: return "weighted";
  }
  return "?";
}

void ProbeTrainConfig::validate() const {
  if (batch_size < 1) throw Error(ErrorKind::kInvalidArgument, "batch_size must be >= 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw Error(ErrorKind::kInvalidArgument, "learning_rate must be finite and non-negative");
  }
  if (max_epochs < 1) throw Error(ErrorKind::kInvalidArgument, "max_epochs must be >= 1");
  if (patience < 1) throw Error(ErrorKind::kInvalidArgument, "patience must be >= 1");
  if (!(lr_decay_on_plateau > 0.0 && lr_decay_on_plateau <= 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "lr_decay_on_plateau must be in (0, 1]");
  }
}

void ProbeModel::validate() const {
  if (label_set.empty()) throw Error(ErrorKind::kValidation, "probe label set is empty");
  std::vector<std::string> sorted = label_set;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw Error(ErrorKind::kValidation, "probe label set has duplicates");
  }
  if (weights.rows() != static_cast<Eigen::Index>(label_set.size()) ||
      bias.size() != weights.rows()) {
    throw Error(ErrorKind::kValidation, "probe weight/bias shapes disagree with label set");
  }
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  Eigen::VectorXd p = (logits.array() - logits.maxCoeff()).exp().matrix();
  return p / p.sum();
}

Prediction predict(const ProbeModel& model, const Eigen::VectorXd& x) {
  if (x.size() != model.dim()) {
    throw Error(ErrorKind::kDimensionMismatch, "predict: vector has dim " +
                                                   std::to_string(x.size()) + ", probe expects " +
                                                   std::to_string(model.dim()));
  }
  const Eigen::VectorXd logits = model.weights * x + model.bias;
  Prediction out;
  out.probabilities = softmax(logits);
  Eigen::Index best = 0;
  for (Eigen::Index c = 1; c < logits.size(); ++c) {
    if (logits[c] > logits[best]) best = c;
  }
  out.label = static_cast<int>(best);
  return out;
}

std::vector<int> predict_labels(const ProbeModel& model, const Eigen::MatrixXd& features) {
  if (features.rows() > 0 && features.cols() != model.dim()) {
    throw Error(ErrorKind::kDimensionMismatch, "predict: feature dim does not match probe");
  }
  Eigen::MatrixXd logits = features * model.weights.transpose();
  logits.rowwise() += model.bias.transpose();
  std::vector<int> out(static_cast<std::size_t>(features.rows()));
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < logits.cols(); ++c) {
      if (logits(i, c) > logits(i, best)) best = c;
    }
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

double cross_entropy(const ProbeModel& model, const LabelledSet& data) {
  if (data.size() == 0) return 0.0;
  const Eigen::MatrixXd p = batch_probabilities(model, data.features);
  double loss = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    loss -= std::log(std::max(p(static_cast<Eigen::Index>(i), data.labels[i]), 1e-300));
  }
  return loss / static_cast<double>(data.size());
}

ClassificationReport classification_report(std::span<const int> gold, std::span<const int> pred) {
  if (gold.size() != pred.size()) {
    throw Error(ErrorKind::kDimensionMismatch, "f1: gold and pred lengths differ");
  }
  if (gold.empty()) throw Error(ErrorKind::kInvalidArgument, "f1: empty label sequences");
  int max_label = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i] < 0 || pred[i] < 0) {
      throw Error(ErrorKind::kInvalidArgument, "f1: negative class index");
    }
    max_label = std::max({max_label, gold[i], pred[i]});
  }
  const std::size_t n = static_cast<std::size_t>(max_label) + 1;
  std::vector<std::size_t> tp(n, 0), pred_count(n, 0);
  ClassificationReport r;
  r.support.assign(n, 0);
  for (std::size_t i = 0; i < gold.size(); ++i) {
    ++r.support[gold[i]];
    ++pred_count[pred[i]];
    if (gold[i] == pred[i]) ++tp[gold[i]];
  }
  r.precision.assign(n, 0.0);
  r.recall.assign(n, 0.0);
  r.f1.assign(n, 0.0);
  r.present.assign(n, false);
  for (std::size_t c = 0; c < n; ++c) {
    r.present[c] = r.support[c] > 0 || pred_count[c] > 0;
    if (pred_count[c] > 0) r.precision[c] = static_cast<double>(tp[c]) / pred_count[c];
    if (r.support[c] > 0) r.recall[c] = static_cast<double>(tp[c]) / r.support[c];
    const double denom = r.precision[c] + r.recall[c];
    if (denom > 0.0) r.f1[c] = 2.0 * r.precision[c] * r.recall[c] / denom;
  }
  return r;
}

double average_f1(const ClassificationReport& report, F1Averaging mode, int positive_class) {
  switch (mode) {
    case F1Averaging::kBinaryPositive:
      if (positive_class < 0 || static_cast<std::size_t>(positive_class) >= report.f1.size()) {
        return 0.0;
      }
      return report.f1[positive_class];
    case F1Averaging::kMacro: {
      double sum = 0.0;
      std::size_t n = 0;
      for (std::size_t c = 0; c < report.f1.size(); ++c) {
        if (!report.present[c]) continue;
        sum += report.f1[c];
        ++n;
      }
      return n == 0 ? 0.0 : sum / static_cast<double>(n);
    }
    case F1Averaging::kWeighted: {
      double sum = 0.0;
      double total = 0.0;
      for (std::size_t c = 0; c < report.f1.size(); ++c) {
        sum += static_cast<double>(report.support[c]) * report.f1[c];
        total += static_cast<double>(report.support[c]);
      }
      return total == 0.0 ? 0.0 : sum / total;
    }
  }
  return 0.0;
}

double f1_score(std::span<const int> gold, std::span<const int> pred, F1Averaging mode,
                int positive_class) {
  return average_f1(classification_report(gold, pred), mode, positive_class);
}

std::vector<int> encode_labels(std::span<const std::string> labels,
                               std::span<const std::string> label_set) {
  std::vector<int> out;
  out.reserve(labels.size());
  for (const std::string& label : labels) {
    const auto it = std::find(label_set.begin(), label_set.end(), label);
    if (it == label_set.end()) {
      throw Error(ErrorKind::kValidation, "unseen label \"" + label + "\"");
    }
    out.push_back(static_cast<int>(it - label_set.begin()));
  }
  return out;
}

TrainResult train_probe(const LabelledSet& train, const LabelledSet& dev,
                        std::vector<std::string> label_set, const ProbeTrainConfig& cfg) {
  cfg.validate();
  if (train.size() == 0) throw Error(ErrorKind::kInvalidArgument, "train_probe: empty train set");
  const Eigen::Index dim = train.features.cols();
  const std::size_t n_classes = label_set.size();
  check_set(train, dim, n_classes, "train");
  check_set(dev, dim, n_classes, "dev");

  TrainResult result;
  result.model.label_set = std::move(label_set);
  Rng rng(cfg.seed);
  result.model.weights.resize(static_cast<Eigen::Index>(n_classes), dim);
  for (Eigen::Index i = 0; i < result.model.weights.size(); ++i) {
    result.model.weights.data()[i] = rng.uniform(-0.01, 0.01);
  }
  result.model.bias = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_classes));
  result.model.validate();

  {
    std::vector<int> distinct = train.labels;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() == 1) {
      result.warnings.push_back("train set contains a single class (\"" +
                                result.model.label_set[distinct.front()] +
                                "\"); the probe is degenerate");
      // Cross-entropy has no finite minimizer here; return the constant
      // classifier instead of a half-trained one.
      result.model.weights.setZero();
      result.model.bias(distinct.front()) = 1.0;
      const LabelledSet& eval = dev.size() > 0 ? dev : train;
      result.best_dev_f1 = selection_score(result.model, eval, cfg.selection);
      return result;
    }
  }

  const LabelledSet& selection_set = dev.size() > 0 ? dev : train;
  Adam w_opt(result.model.weights.rows(), result.model.weights.cols(),
             {.learning_rate = cfg.learning_rate});
  Adam b_opt(result.model.bias.rows(), 1, {.learning_rate = cfg.learning_rate});

  ProbeModel best = result.model;
  double best_score = -1.0;
  int since_improvement = 0;
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t batch = static_cast<std::size_t>(cfg.batch_size);

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t n_batches = 0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      const Eigen::Index b = static_cast<Eigen::Index>(end - start);
      Eigen::MatrixXd x(b, dim);
      for (Eigen::Index r = 0; r < b; ++r) {
        x.row(r) = train.features.row(static_cast<Eigen::Index>(order[start + r]));
      }
      Eigen::MatrixXd delta = batch_probabilities(result.model, x);  // P - Y after update below
      double loss = 0.0;
      for (Eigen::Index r = 0; r < b; ++r) {
        const int y = train.labels[order[start + r]];
        loss -= std::log(std::max(delta(r, y), 1e-300));
        delta(r, y) -= 1.0;
      }
      loss /= static_cast<double>(b);
      delta /= static_cast<double>(b);
      const Eigen::MatrixXd grad_w = delta.transpose() * x;
      const Eigen::MatrixXd grad_b = delta.colwise().sum().transpose();
      Eigen::MatrixXd bias = result.model.bias;
      w_opt.step(result.model.weights, grad_w);
      b_opt.step(bias, grad_b);
      result.model.bias = bias.col(0);

      loss_sum += loss;
      ++n_batches;
      if (epoch == 1) result.first_epoch_batch_loss.push_back(loss);
    }
    result.epoch_train_loss.push_back(loss_sum / static_cast<double>(n_batches));
    result.epochs_run = epoch;

    const double score = selection_score(result.model, selection_set, cfg.selection);
    if (score > best_score) {
      best_score = score;
      best = result.model;
      result.best_epoch = epoch;
      since_improvement = 0;
    } else {
      ++since_improvement;
      w_opt.set_learning_rate(w_opt.learning_rate() * cfg.lr_decay_on_plateau);
      b_opt.set_learning_rate(b_opt.learning_rate() * cfg.lr_decay_on_plateau);
      if (since_improvement >= cfg.patience) break;
    }
  }
  result.model = std::move(best);
  result.best_dev_f1 = best_score;
  return result;
}

}  // namespace csprobe::probe
