#pragma once

// Structural distance probe: a rank-k linear map B under which squared
// distances between word vectors approximate dependency-tree path lengths.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "csprobe/corpus.hpp"
#include "csprobe/deptree.hpp"
#include "csprobe/embedstore.hpp"
#include "csprobe/probe.hpp"

namespace csprobe::structprobe {

struct StructuralProbe {
  Eigen::MatrixXd B;  // k x dim
  int layer = 0;
  std::string model_name;

  Eigen::Index rank() const { return B.rows(); }
  Eigen::Index dim() const { return B.cols(); }
  void validate() const;
};

// (i, j) -> ||B (h_i - h_j)||^2 for rows h of H.
DistanceMatrix predicted_distances(const Eigen::MatrixXd& B, const Eigen::MatrixXd& H);
DistanceMatrix predicted_distances(const StructuralProbe& probe, const Eigen::MatrixXd& H);

// One training/evaluation sentence with punctuation already removed.
struct ProbeSentence {
  std::string id;
  DepTree gold;
  DistanceMatrix gold_distances;
  Eigen::MatrixXd vectors;  // n x dim
};

ProbeSentence make_probe_sentence(std::string id, DepTree gold, Eigen::MatrixXd vectors);

// Drops PUNCT words (re-attaching any dependents to the nearest non-PUNCT
// ancestor) and the matching rows. Returns nullopt when fewer than 2 words
// remain.
std::optional<ProbeSentence> from_conllu(const corpus::ConlluSentence& sentence,
                                         const embed::FloatRows& vectors,
                                         bool drop_punct = true);

// Pairs CoNLL-U sentences with word vectors by sent_id. Sentences with fewer
// than 2 non-punctuation words are skipped and reported in `warnings`.
std::vector<ProbeSentence> build_treebank(std::span<const corpus::ConlluSentence> sentences,
                                          const embed::EmbeddingSet& embeddings,
                                          std::vector<std::string>& warnings,
                                          bool drop_punct = true);

// (1/n^2) * sum_{i<j} |d_T(i,j) - ||B(h_i - h_j)||^2|
double sentence_loss(const Eigen::MatrixXd& B, const ProbeSentence& sentence);

// Mean sentence loss over the batch; adds d(loss)/dB into *grad when non-null.
double batch_loss(const Eigen::MatrixXd& B, std::span<const ProbeSentence* const> batch,
                  Eigen::MatrixXd* grad);

double mean_loss(const Eigen::MatrixXd& B, std::span<const ProbeSentence> sentences);

// Recipe defaults: Adam lr 1e-3, 20 sentences per batch, dev-loss patience 3,
// learning rate x0.1 on each non-improving epoch.
probe::ProbeTrainConfig default_structural_config();

struct StructuralFit {
  StructuralProbe probe;
  double best_dev_loss = 0.0;
  int best_epoch = 0;
  int epochs_run = 0;
  std::vector<double> train_loss;  // per epoch
  std::vector<double> dev_loss;    // per epoch
};

// Learns B from uniform [-0.05, 0.05] initialization. An empty dev set
// selects on training loss.
StructuralFit train_structural_probe(std::span<const ProbeSentence> train,
                                     std::span<const ProbeSentence> dev, int rank,
                                     const probe::ProbeTrainConfig& cfg);

struct SpearmanWindow {
  int min_length = 5;
  int max_length = 50;
};

// Spearman over the upper triangle of one sentence's matrices.
double sentence_distance_spearman(const DistanceMatrix& pred, const DistanceMatrix& gold);

// Mean per-sentence Spearman over sentences whose length lies in the window.
double distance_spearman(std::span<const DistanceMatrix> pred, std::span<const DistanceMatrix> gold,
                         SpearmanWindow window = {});

struct EvalResult {
  double uuas = 0.0;          // mean per-sentence UUAS
  double dspr = 0.0;          // mean per-sentence distance Spearman in window
  std::size_t n_sentences = 0;
  std::size_t n_dspr_sentences = 0;
};

EvalResult evaluate(const StructuralProbe& probe, std::span<const ProbeSentence> sentences,
                    SpearmanWindow window = {});

struct ParseRecord {
  std::string id;
  DepTree tree;
  bool operator==(const ParseRecord&) const = default;
};

// MST parse for every id (all container records when ids is empty).
// Single-word sentences are skipped with a warning; a missing record throws.
std::vector<ParseRecord> parse_corpus(const StructuralProbe& probe,
                                      const embed::EmbeddingSet& embeddings,
                                      std::span<const std::string> ids,
                                      std::vector<std::string>& warnings, int jobs = 1);

// JSONL {"id","n","edges":[[i,j],...]}, 0-based.
void write_parses(std::ostream& out, std::span<const ParseRecord> parses);
std::vector<ParseRecord> parse_parses(std::istream& in);
std::vector<ParseRecord> load_parses(const std::filesystem::path& path);

// Checkpoints reuse the CSEM container with kind "probe_matrix" and one
// record "B" holding the k x dim matrix.
void save_probe(const StructuralProbe& probe, const std::filesystem::path& path);
StructuralProbe load_probe(const std::filesystem::path& path);
embed::EmbeddingSet probe_to_container(const StructuralProbe& probe);
StructuralProbe probe_from_container(const embed::EmbeddingSet& set);

}  // namespace csprobe::structprobe
