#include "csprobe/sweep.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <tuple>

#include "csprobe/error.hpp"
#include "csprobe/parallel.hpp"
#include "csprobe/random.hpp"
#include "csprobe/report.hpp"

namespace csprobe::probe {
namespace {

// Flattened examples plus, for each example, the unit (sentence) it came from.
struct TaskData {
  Eigen::MatrixXd features;
  std::vector<int> labels;
  std::vector<std::size_t> unit;  // unit index per row
  std::size_t n_units = 0;
};

LabelledSet gather(const TaskData& data, const std::vector<std::size_t>& units) {
  std::vector<char> keep(data.n_units, 0);
  for (std::size_t u : units) keep[u] = 1;
  std::vector<Eigen::Index> rows;
  for (std::size_t r = 0; r < data.unit.size(); ++r) {
    if (keep[data.unit[r]]) rows.push_back(static_cast<Eigen::Index>(r));
  }
  LabelledSet out;
  out.features.resize(static_cast<Eigen::Index>(rows.size()), data.features.cols());
  out.labels.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.features.row(static_cast<Eigen::Index>(i)) = data.features.row(rows[i]);
    out.labels.push_back(data.labels[static_cast<std::size_t>(rows[i])]);
  }
  return out;
}

const embed::EmbeddingSet& resolve(const LayerSource& source, embed::EmbeddingSet& storage) {
  if (source.set != nullptr) {
    source.set->validate();
    return *source.set;
  }
  storage = embed::read_container(source.path);
  return storage;
}

std::string describe(const LayerSource& source) {
  if (source.set != nullptr) {
    return source.set->model_name + " layer " + std::to_string(source.set->layer);
  }
  return source.path.string();
}

template <typename BuildFn, typename PoolingFn>
LayerSweepResult run_sweep(std::span<const LayerSource> layers, const SweepOptions& options,
                           const std::vector<std::string>& label_set, F1Averaging selection,
                           BuildFn&& build, PoolingFn&& pooling_of) {
  if (options.seeds.empty()) throw Error(ErrorKind::kInvalidArgument, "sweep: no seeds given");
  options.cfg.validate();
  LayerSweepResult result;
  std::set<std::tuple<std::string, std::string, int>> done;
  for (const LayerSource& source : layers) {
    embed::EmbeddingSet storage;
    TaskData data;
    const embed::EmbeddingSet* set = nullptr;
    std::string pooling;
    try {
      set = &resolve(source, storage);
      pooling = pooling_of(*set);
      if (!done.emplace(set->model_name, pooling, set->layer).second) {
        throw Error(ErrorKind::kValidation, "duplicate (model, pooling, layer) cell");
      }
    } catch (const Error& e) {
      result.warnings.push_back("skipping " + describe(source) + ": " + e.what());
      continue;
    }
    // Data problems (missing records, token/vector mismatches) are fatal.
    data = build(*set);

    std::vector<SweepRow> cells(options.seeds.size());
    std::vector<std::vector<std::string>> cell_warnings(options.seeds.size());
    parallel_for(options.seeds.size(), options.jobs, [&](std::size_t i) {
      const std::uint64_t seed = options.seeds[i];
      const DataSplit split = split_80_10_10(data.n_units, seed);
      const LabelledSet train = gather(data, split.train);
      const LabelledSet dev = gather(data, split.dev);
      const LabelledSet test = gather(data, split.test);
      ProbeTrainConfig cfg = options.cfg;
      cfg.seed = seed;
      cfg.selection = selection;
      TrainResult fit = train_probe(train, dev, label_set, cfg);
      SweepRow& row = cells[i];
      row.model = set->model_name;
      row.layer = set->layer;
      row.pooling = pooling;
      row.seed = seed;
      if (test.size() > 0) {
        const std::vector<int> pred = predict_labels(fit.model, test.features);
        const ClassificationReport report = classification_report(test.labels, pred);
        row.f1_macro = average_f1(report, F1Averaging::kMacro);
        row.f1_weighted = average_f1(report, F1Averaging::kWeighted);
      }
      cell_warnings[i] = std::move(fit.warnings);
    });
    for (std::size_t i = 0; i < cells.size(); ++i) {
      for (std::string& w : cell_warnings[i]) {
        result.warnings.push_back(describe(source) + " seed " + std::to_string(cells[i].seed) +
                                  ": " + w);
      }
      result.rows.push_back(std::move(cells[i]));
    }
  }

  std::sort(result.rows.begin(), result.rows.end(), [](const SweepRow& a, const SweepRow& b) {
    return std::tie(a.model, a.pooling, a.layer, a.seed) <
           std::tie(b.model, b.pooling, b.layer, b.seed);
  });
  std::map<std::tuple<std::string, std::string, int>, std::pair<std::vector<double>, std::vector<double>>>
      groups;
  for (const SweepRow& r : result.rows) {
    auto& g = groups[{r.model, r.pooling, r.layer}];
    g.first.push_back(r.f1_macro);
    g.second.push_back(r.f1_weighted);
  }
  for (const auto& [key, values] : groups) {
    SweepSummary s;
    std::tie(s.model, s.pooling, s.layer) = key;
    s.macro = stats::aggregate_seeds(values.first);
    s.weighted = stats::aggregate_seeds(values.second);
    result.summary.push_back(std::move(s));
  }
  return result;
}

}  // namespace

DataSplit split_80_10_10(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(seed, "split"));
  rng.shuffle(order);
  const std::size_t n_train = n * 8 / 10;
  const std::size_t n_dev = n / 10;
  DataSplit split;
  split.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.dev.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
                   order.begin() + static_cast<std::ptrdiff_t>(n_train + n_dev));
  split.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_dev), order.end());
  return split;
}

std::string pooling_name(embed::EmbeddingKind kind) {
  switch (kind) {
    case embed::EmbeddingKind::kSentenceCls: return "cls";
    case embed::EmbeddingKind::kSentenceMean: return "mean";
    case embed::EmbeddingKind::kWord: return "word";
    case embed::EmbeddingKind::kProbeMatrix: return "probe";
  }
  return "?";
}

LayerSweepResult sentence_classification_sweep(std::span<const LayerSource> layers,
                                               std::span<const LabelledSentence> dataset,
                                               const SweepOptions& options) {
  for (const LabelledSentence& s : dataset) {
    if (s.label != 0 && s.label != 1) {
      throw Error(ErrorKind::kValidation,
                  "sentence " + s.id + ": label must be 0 or 1, got " + std::to_string(s.label));
    }
  }
  const std::vector<std::string> label_set = {"0", "1"};
  auto build = [&](const embed::EmbeddingSet& set) {
    if (set.kind == embed::EmbeddingKind::kProbeMatrix) {
      throw Error(ErrorKind::kValidation, "probe checkpoints cannot be swept");
    }
    TaskData data;
    data.n_units = dataset.size();
    data.features.resize(static_cast<Eigen::Index>(dataset.size()), set.dim);
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      const embed::FloatRows& rows = set.at(dataset[i].id);
      data.features.row(static_cast<Eigen::Index>(i)) =
          embed::is_sentence_kind(set.kind) ? embed::to_double(rows).row(0).transpose()
                                            : embed::mean_pool(rows);
      data.labels.push_back(dataset[i].label);
      data.unit.push_back(i);
    }
    return data;
  };
  // Word containers are mean-pooled here, so they report as "mean".
  const auto pooling_of = [](const embed::EmbeddingSet& set) {
    return set.kind == embed::EmbeddingKind::kWord ? std::string("mean") : pooling_name(set.kind);
  };
  return run_sweep(layers, options, label_set, F1Averaging::kMacro, build, pooling_of);
}

LayerSweepResult lid_sweep(std::span<const LayerSource> layers,
                           std::span<const corpus::LidSentence> dataset,
                           const SweepOptions& options) {
  std::vector<std::string> label_set;
  for (corpus::LidLabel l : corpus::kAllLidLabels) label_set.emplace_back(corpus::to_string(l));
  auto build = [&](const embed::EmbeddingSet& set) {
    if (set.kind != embed::EmbeddingKind::kWord) {
      throw Error(ErrorKind::kValidation, "LID sweep needs word-level containers");
    }
    std::size_t n_tokens = 0;
    for (const corpus::LidSentence& s : dataset) {
      const embed::FloatRows& rows = set.at(s.id);
      if (static_cast<std::size_t>(rows.rows()) != s.tokens.size()) {
        throw Error(ErrorKind::kDimensionMismatch,
                    "sentence " + s.id + ": " + std::to_string(s.tokens.size()) + " tokens but " +
                        std::to_string(rows.rows()) + " word vectors");
      }
      n_tokens += s.tokens.size();
    }
    TaskData data;
    data.n_units = dataset.size();
    data.features.resize(static_cast<Eigen::Index>(n_tokens), set.dim);
    Eigen::Index row = 0;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      const embed::FloatRows& rows = set.at(dataset[i].id);
      data.features.middleRows(row, rows.rows()) = embed::to_double(rows);
      row += rows.rows();
      for (const corpus::LidToken& t : dataset[i].tokens) {
        data.labels.push_back(static_cast<int>(t.label));
        data.unit.push_back(i);
      }
    }
    return data;
  };
  return run_sweep(layers, options, label_set, F1Averaging::kWeighted, build,
                   [](const embed::EmbeddingSet& set) { return pooling_name(set.kind); });
}

void write_sweep_csv(std::ostream& out, const LayerSweepResult& result) {
  out << "model,layer,pooling,seed,split,f1_macro,f1_weighted\n";
  for (const SweepRow& r : result.rows) {
    out << csv_field(r.model) << ',' << r.layer << ',' << csv_field(r.pooling) << ',' << r.seed
        << ',' << r.split << ',' << format_double(r.f1_macro) << ','
        << format_double(r.f1_weighted) << '\n';
  }
}

nlohmann::json sweep_summary_json(const LayerSweepResult& result) {
  nlohmann::json cells = nlohmann::json::array();
  const auto agg = [](const stats::SeedAggregate& a) {
    return nlohmann::json{{"mean", a.mean}, {"std", a.std}, {"min", a.min}, {"max", a.max}, {"n", a.n}};
  };
  for (const SweepSummary& s : result.summary) {
    cells.push_back({{"model", s.model},
                     {"layer", s.layer},
                     {"pooling", s.pooling},
                     {"f1_macro", agg(s.macro)},
                     {"f1_weighted", agg(s.weighted)}});
  }
  return {{"cells", cells}, {"std_kind", "population"}, {"warnings", result.warnings}};
}

}  // namespace csprobe::probe
