#pragma once

// Linear softmax probes over frozen embeddings.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace csprobe::probe {

enum class F1Averaging { kBinaryPositive, kMacro, kWeighted };

std::string_view to_string(F1Averaging mode);

struct ProbeTrainConfig {
  int batch_size = 32;
  double learning_rate = 1e-3;
  int max_epochs = 50;
  int patience = 5;
  std::uint64_t seed = 0;
  // Multiplies the learning rate after an epoch without dev improvement;
  // 1.0 disables the schedule.
  double lr_decay_on_plateau = 1.0;
  // Dev metric used for best-snapshot selection.
  F1Averaging selection = F1Averaging::kMacro;

  void validate() const;
};

// Rows of `features` are examples; labels index into the probe's label set.
struct LabelledSet {
  Eigen::MatrixXd features;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
};

struct ProbeModel {
  Eigen::MatrixXd weights;  // n_classes x dim
  Eigen::VectorXd bias;     // n_classes
  std::vector<std::string> label_set;

  Eigen::Index dim() const { return weights.cols(); }
  Eigen::Index n_classes() const { return weights.rows(); }
  void validate() const;
};

struct Prediction {
  int label = 0;
  Eigen::VectorXd probabilities;
};

Eigen::VectorXd softmax(const Eigen::VectorXd& logits);

Prediction predict(const ProbeModel& model, const Eigen::VectorXd& x);
std::vector<int> predict_labels(const ProbeModel& model, const Eigen::MatrixXd& features);

// Mean cross-entropy of the model on a labelled set.
double cross_entropy(const ProbeModel& model, const LabelledSet& data);

// Per-class scores over the union of classes seen in gold or pred.
struct ClassificationReport {
  std::vector<double> precision;
  std::vector<double> recall;
  std::vector<double> f1;
  std::vector<std::size_t> support;  // gold count
  std::vector<bool> present;         // appears in gold or pred
};

ClassificationReport classification_report(std::span<const int> gold, std::span<const int> pred);

// Combines per-class F1. Absent classes carry zero weight; binary mode
// reports the F1 of `positive_class`.
double average_f1(const ClassificationReport& report, F1Averaging mode, int positive_class = 1);

double f1_score(std::span<const int> gold, std::span<const int> pred, F1Averaging mode,
                int positive_class = 1);

// Maps label names to indices in label_set; throws kValidation on an unseen label.
std::vector<int> encode_labels(std::span<const std::string> labels,
                               std::span<const std::string> label_set);

struct TrainResult {
  ProbeModel model;
  double best_dev_f1 = 0.0;
  int best_epoch = 0;  // 1-based
  int epochs_run = 0;
  std::vector<double> epoch_train_loss;   // mean batch loss per epoch
  std::vector<double> first_epoch_batch_loss;
  std::vector<std::string> warnings;
};

// Trains with softmax cross-entropy and Adam, returning the snapshot with the
// best dev score. An empty dev set falls back to selecting on train.
TrainResult train_probe(const LabelledSet& train, const LabelledSet& dev,
                        std::vector<std::string> label_set, const ProbeTrainConfig& cfg);

}  // namespace csprobe::probe
