#include "csprobe/structprobe.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>

#include <json.hpp>

#include "csprobe/adam.hpp"
#include "csprobe/error.hpp"
#include "csprobe/parallel.hpp"
#include "csprobe/random.hpp"
#include "csprobe/stats.hpp"

namespace csprobe::structprobe {
namespace {

constexpr const char* kProbeRecordId = "B";

double sign(double x) { return (x > 0.0) - (x < 0.0); }

// Loss of one sentence; accumulates scale * dL/dB into grad when non-null.
double sentence_loss_impl(const Eigen::MatrixXd& B, const ProbeSentence& s, double scale,
                          Eigen::MatrixXd* grad) {
  const Eigen::Index n = s.vectors.rows();
  const Eigen::MatrixXd t = s.vectors * B.transpose();  // n x k
  const double norm = 1.0 / static_cast<double>(n * n);
  Eigen::MatrixXd grad_t;
  if (grad != nullptr) grad_t = Eigen::MatrixXd::Zero(n, B.rows());
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const Eigen::VectorXd diff = (t.row(i) - t.row(j)).transpose();
      const double predicted = diff.squaredNorm();
      const double residual = predicted - s.gold_distances(i, j);
      loss += std::abs(residual);
      if (grad != nullptr) {
        const double g = 2.0 * sign(residual) * norm;
        grad_t.row(i) += g * diff.transpose();
        grad_t.row(j) -= g * diff.transpose();
      }
    }
  }
  if (grad != nullptr) grad->noalias() += scale * (grad_t.transpose() * s.vectors);
  return loss * norm;
}

}  // namespace

void StructuralProbe::validate() const {
  if (B.rows() < 1 || B.rows() > B.cols()) {
    throw Error(ErrorKind::kValidation, "structural probe rank must satisfy 1 <= k <= dim");
  }
  if (!B.allFinite()) throw Error(ErrorKind::kNonFinite, "structural probe has non-finite entries");
}

DistanceMatrix predicted_distances(const Eigen::MatrixXd& B, const Eigen::MatrixXd& H) {
  if (H.cols() != B.cols()) {
    throw Error(ErrorKind::kDimensionMismatch, "predicted_distances: vectors have dim " +
                                                   std::to_string(H.cols()) + ", probe expects " +
                                                   std::to_string(B.cols()));
  }
  const Eigen::MatrixXd t = H * B.transpose();
  const Eigen::Index n = H.rows();
  DistanceMatrix d = DistanceMatrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      d(i, j) = d(j, i) = (t.row(i) - t.row(j)).squaredNorm();
    }
  }
  return d;
}

DistanceMatrix predicted_distances(const StructuralProbe& probe, const Eigen::MatrixXd& H) {
  return predicted_distances(probe.B, H);
}

ProbeSentence make_probe_sentence(std::string id, DepTree gold, Eigen::MatrixXd vectors) {
  if (vectors.rows() != gold.size()) {
    throw Error(ErrorKind::kDimensionMismatch,
                "sentence " + id + ": " + std::to_string(gold.size()) + " words but " +
                    std::to_string(vectors.rows()) + " vectors");
  }
  ProbeSentence s;
  s.id = std::move(id);
  s.gold_distances = tree_distances(gold);
  s.gold = std::move(gold);
  s.vectors = std::move(vectors);
  return s;
}

std::optional<ProbeSentence> from_conllu(const corpus::ConlluSentence& sentence,
                                         const embed::FloatRows& vectors, bool drop_punct) {
  const int n = static_cast<int>(sentence.words.size());
  if (vectors.rows() != n) {
    throw Error(ErrorKind::kDimensionMismatch,
                "sentence " + sentence.sent_id + ": " + std::to_string(n) + " words but " +
                    std::to_string(vectors.rows()) + " vectors");
  }
  std::vector<int> keep;  // original 0-based indices
  std::vector<int> new_index(static_cast<std::size_t>(n), -1);
  for (int i = 0; i < n; ++i) {
    if (drop_punct && sentence.words[i].upos == "PUNCT") continue;
    new_index[i] = static_cast<int>(keep.size());
    keep.push_back(i);
  }
  if (keep.size() < 2) return std::nullopt;

  // Nearest kept ancestor of each kept word; 0 when it reaches the root.
  std::vector<int> heads;
  heads.reserve(keep.size());
  int roots = 0;
  for (int i : keep) {
    int h = sentence.words[i].head;
    while (h != 0 && new_index[h - 1] < 0) h = sentence.words[h - 1].head;
    heads.push_back(h == 0 ? 0 : new_index[h - 1] + 1);
    if (h == 0) ++roots;
  }
  // If the root itself was punctuation several words may now be roots;
  // attach the extra ones to the first.
  if (roots > 1) {
    int first_root = -1;
    for (std::size_t i = 0; i < heads.size(); ++i) {
      if (heads[i] != 0) continue;
      if (first_root < 0) {
        first_root = static_cast<int>(i) + 1;
      } else {
        heads[i] = first_root;
      }
    }
  }
  Eigen::MatrixXd rows(static_cast<Eigen::Index>(keep.size()), vectors.cols());
  for (std::size_t r = 0; r < keep.size(); ++r) {
    rows.row(static_cast<Eigen::Index>(r)) = vectors.row(keep[r]).cast<double>();
  }
  return make_probe_sentence(sentence.sent_id, DepTree::from_heads(heads), std::move(rows));
}

std::vector<ProbeSentence> build_treebank(std::span<const corpus::ConlluSentence> sentences,
                                          const embed::EmbeddingSet& embeddings,
                                          std::vector<std::string>& warnings, bool drop_punct) {
  if (embeddings.kind != embed::EmbeddingKind::kWord) {
    throw Error(ErrorKind::kValidation, "structural probing needs a word-level container");
  }
  std::vector<ProbeSentence> out;
  for (const corpus::ConlluSentence& s : sentences) {
    auto ps = from_conllu(s, embeddings.at(s.sent_id), drop_punct);
    if (!ps) {
      warnings.push_back("sentence " + s.sent_id + ": fewer than 2 words after filtering, skipped");
      continue;
    }
    out.push_back(std::move(*ps));
  }
  return out;
}

double sentence_loss(const Eigen::MatrixXd& B, const ProbeSentence& sentence) {
  return sentence_loss_impl(B, sentence, 0.0, nullptr);
}

double batch_loss(const Eigen::MatrixXd& B, std::span<const ProbeSentence* const> batch,
                  Eigen::MatrixXd* grad) {
  if (batch.empty()) return 0.0;
  const double scale = 1.0 / static_cast<double>(batch.size());
  double loss = 0.0;
  for (const ProbeSentence* s : batch) loss += sentence_loss_impl(B, *s, scale, grad);
  return loss * scale;
}

double mean_loss(const Eigen::MatrixXd& B, std::span<const ProbeSentence> sentences) {
  if (sentences.empty()) return 0.0;
  double loss = 0.0;
  for (const ProbeSentence& s : sentences) loss += sentence_loss(B, s);
  return loss / static_cast<double>(sentences.size());
}

probe::ProbeTrainConfig default_structural_config() {
  probe::ProbeTrainConfig cfg;
  cfg.batch_size = 20;
  cfg.learning_rate = 1e-3;
  cfg.max_epochs = 200;
  cfg.patience = 3;
  cfg.lr_decay_on_plateau = 0.1;
  return cfg;
}

StructuralFit train_structural_probe(std::span<const ProbeSentence> train,
                                     std::span<const ProbeSentence> dev, int rank,
                                     const probe::ProbeTrainConfig& cfg) {
  cfg.validate();
  if (train.empty()) throw Error(ErrorKind::kInvalidArgument, "structural probe: empty treebank");
  const Eigen::Index dim = train.front().vectors.cols();
  if (rank < 1 || rank > dim) {
    throw Error(ErrorKind::kInvalidArgument, "structural probe: rank " + std::to_string(rank) +
                                                 " outside [1, " + std::to_string(dim) + "]");
  }
  for (const auto* set : {&train, &dev}) {
    for (const ProbeSentence& s : *set) {
      if (s.vectors.cols() != dim) {
        throw Error(ErrorKind::kDimensionMismatch, "sentence " + s.id + " has a different vector dim");
      }
    }
  }

  Rng rng(cfg.seed);
  StructuralFit fit;
  fit.probe.B.resize(rank, dim);
  for (Eigen::Index i = 0; i < fit.probe.B.size(); ++i) {
    fit.probe.B.data()[i] = rng.uniform(-0.05, 0.05);
  }
  const std::span<const ProbeSentence> selection = dev.empty() ? train : dev;
  Adam opt(rank, dim, {.learning_rate = cfg.learning_rate});

  Eigen::MatrixXd best = fit.probe.B;
  double best_loss = mean_loss(best, selection);
  int since_improvement = 0;
  std::vector<const ProbeSentence*> order;
  for (const ProbeSentence& s : train) order.push_back(&s);
  const std::size_t batch_size = static_cast<std::size_t>(cfg.batch_size);
  Eigen::MatrixXd grad(rank, dim);

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      const std::size_t end = std::min(order.size(), start + batch_size);
      const std::span<const ProbeSentence* const> batch(order.data() + start, end - start);
      grad.setZero();
      epoch_loss += batch_loss(fit.probe.B, batch, &grad) * static_cast<double>(batch.size());
      opt.step(fit.probe.B, grad);
    }
    fit.train_loss.push_back(epoch_loss / static_cast<double>(order.size()));
    const double dev_loss = mean_loss(fit.probe.B, selection);
    fit.dev_loss.push_back(dev_loss);
    fit.epochs_run = epoch;
    if (dev_loss < best_loss) {
      best_loss = dev_loss;
      best = fit.probe.B;
      fit.best_epoch = epoch;
      since_improvement = 0;
    } else {
      opt.set_learning_rate(opt.learning_rate() * cfg.lr_decay_on_plateau);
      if (++since_improvement >= cfg.patience) break;
    }
  }
  fit.probe.B = std::move(best);
  fit.best_dev_loss = best_loss;
  return fit;
}

double sentence_distance_spearman(const DistanceMatrix& pred, const DistanceMatrix& gold) {
  if (pred.rows() != gold.rows() || pred.cols() != gold.cols() || pred.rows() != pred.cols()) {
    throw Error(ErrorKind::kDimensionMismatch, "distance_spearman: matrix shapes differ");
  }
  const Eigen::Index n = pred.rows();
  if (n * (n - 1) / 2 < 2) {
    throw Error(ErrorKind::kInvalidArgument, "distance_spearman: fewer than 2 word pairs");
  }
  std::vector<double> p, g;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      p.push_back(pred(i, j));
      g.push_back(gold(i, j));
    }
  }
  return stats::spearman(p, g);
}

double distance_spearman(std::span<const DistanceMatrix> pred, std::span<const DistanceMatrix> gold,
                         SpearmanWindow window) {
  if (pred.size() != gold.size()) {
    throw Error(ErrorKind::kDimensionMismatch, "distance_spearman: sentence counts differ");
  }
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t s = 0; s < pred.size(); ++s) {
    const Eigen::Index len = gold[s].rows();
    if (len < window.min_length || len > window.max_length) continue;
    sum += sentence_distance_spearman(pred[s], gold[s]);
    ++n;
  }
  if (n == 0) {
    throw Error(ErrorKind::kInvalidArgument, "distance_spearman: no sentence length in window");
  }
  return sum / static_cast<double>(n);
}

EvalResult evaluate(const StructuralProbe& probe, std::span<const ProbeSentence> sentences,
                    SpearmanWindow window) {
  EvalResult r;
  std::vector<DistanceMatrix> pred, gold;
  double uuas_sum = 0.0;
  for (const ProbeSentence& s : sentences) {
    const DistanceMatrix d = predicted_distances(probe, s.vectors);
    uuas_sum += uuas(mst_parse(d), s.gold);
    ++r.n_sentences;
    const Eigen::Index len = s.gold.size();
    if (len >= window.min_length && len <= window.max_length) {
      pred.push_back(d);
      gold.push_back(s.gold_distances);
    }
  }
  if (r.n_sentences > 0) r.uuas = uuas_sum / static_cast<double>(r.n_sentences);
  r.n_dspr_sentences = pred.size();
  if (!pred.empty()) r.dspr = distance_spearman(pred, gold, window);
  return r;
}

std::vector<ParseRecord> parse_corpus(const StructuralProbe& probe,
                                      const embed::EmbeddingSet& embeddings,
                                      std::span<const std::string> ids,
                                      std::vector<std::string>& warnings, int jobs) {
  probe.validate();
  if (embeddings.kind != embed::EmbeddingKind::kWord) {
    throw Error(ErrorKind::kValidation, "parse_corpus needs a word-level container");
  }
  std::vector<std::string> all_ids;
  if (ids.empty()) {
    for (const auto& [id, rows] : embeddings.records) all_ids.push_back(id);
    ids = all_ids;
  }
  for (const std::string& id : ids) {
    if (!embeddings.contains(id)) {
      throw Error(ErrorKind::kValidation, "no embedding record for sentence \"" + id + "\"");
    }
  }
  std::vector<std::optional<ParseRecord>> slots(ids.size());
  parallel_for(ids.size(), jobs, [&](std::size_t i) {
    const embed::FloatRows& rows = embeddings.at(ids[i]);
    if (rows.rows() < 2) return;
    const DistanceMatrix d = predicted_distances(probe, embed::to_double(rows));
    slots[i] = ParseRecord{ids[i], mst_parse(d)};
  });
  std::vector<ParseRecord> out;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (!slots[i]) {
      warnings.push_back("sentence " + ids[i] + ": single word, no parse");
      continue;
    }
    out.push_back(std::move(*slots[i]));
  }
  return out;
}

void write_parses(std::ostream& out, std::span<const ParseRecord> parses) {
  for (const ParseRecord& p : parses) {
    nlohmann::json edges = nlohmann::json::array();
    for (const auto& [a, b] : p.tree.edges()) edges.push_back({a, b});
    nlohmann::json obj;
    obj["id"] = p.id;
    obj["n"] = p.tree.size();
    obj["edges"] = std::move(edges);
    out << obj.dump() << '\n';
  }
}

std::vector<ParseRecord> parse_parses(std::istream& in) {
  std::vector<ParseRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const nlohmann::json obj = nlohmann::json::parse(line);
      std::vector<DepTree::Edge> edges;
      for (const auto& e : obj.at("edges")) edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
      out.push_back({obj.at("id").get<std::string>(), DepTree(obj.at("n").get<int>(), std::move(edges))});
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::kParse, "parse file line " + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(e.kind(), "parse file line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<ParseRecord> load_parses(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  return parse_parses(in);
}

embed::EmbeddingSet probe_to_container(const StructuralProbe& probe) {
  probe.validate();
  embed::EmbeddingSet set;
  set.model_name = probe.model_name;
  set.layer = probe.layer;
  set.kind = embed::EmbeddingKind::kProbeMatrix;
  set.dim = static_cast<int>(probe.dim());
  set.records.emplace(kProbeRecordId, probe.B.cast<float>());
  return set;
}

StructuralProbe probe_from_container(const embed::EmbeddingSet& set) {
  if (set.kind != embed::EmbeddingKind::kProbeMatrix) {
    throw Error(ErrorKind::kValidation, "container is not a probe checkpoint");
  }
  StructuralProbe probe;
  probe.model_name = set.model_name;
  probe.layer = set.layer;
  probe.B = set.at(kProbeRecordId).cast<double>();
  probe.validate();
  return probe;
}

void save_probe(const StructuralProbe& probe, const std::filesystem::path& path) {
  embed::write_container(probe_to_container(probe), path);
}

StructuralProbe load_probe(const std::filesystem::path& path) {
  return probe_from_container(embed::read_container(path));
}

}  // namespace csprobe::structprobe
