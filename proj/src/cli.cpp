#include "csprobe/cli.hpp"

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "csprobe/corpus.hpp"
#include "csprobe/csgen.hpp"
#include "csprobe/embedstore.hpp"
#include "csprobe/error.hpp"
#include "csprobe/manifest.hpp"
#include "csprobe/probe.hpp"
#include "csprobe/random.hpp"
#include "csprobe/report.hpp"
#include "csprobe/semsim.hpp"
#include "csprobe/structprobe.hpp"
#include "csprobe/sweep.hpp"
#include "csprobe/treedist.hpp"

namespace csprobe::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Globals {
  std::string out = "csprobe_out";
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> seeds{std::begin(probe::kDefaultSeeds), std::end(probe::kDefaultSeeds)};
  int jobs = 1;
};

// Collects inputs, outputs and settings for one command and writes the
// manifest last.
class Run {
 public:
  Run(std::string command, const Globals& g, std::ostream& err)
      : out_dir_(g.out), err_(err) {
    manifest_.tool_version = std::string(kToolVersion);
    manifest_.command = std::move(command);
    manifest_.config = json::object();
  }

  json& config() { return manifest_.config; }

  // Records the digest of an input; throws kIo when it is missing.
  fs::path input(const std::string& role, const std::string& path) {
    if (!fs::is_regular_file(path)) {
      throw Error(ErrorKind::kIo, role + ": no such file " + path);
    }
    manifest_.inputs.push_back({role, path, file_sha256(path)});
    return path;
  }

  void write(const std::string& name, std::string_view contents) {
    write_text_file(out_dir_ / name, contents);
    manifest_.outputs.push_back(name);
  }
  void write_json(const std::string& name, const json& value) { write(name, value.dump(2) + "\n"); }
  void write_container(const std::string& name, const embed::EmbeddingSet& set) {
    fs::create_directories(out_dir_);
    embed::write_container(set, out_dir_ / name);
    manifest_.outputs.push_back(name);
  }

  void warn(const std::string& message) {
    err_ << "warning: " << message << '\n';
    warnings_.push_back(message);
  }
  void warn_all(const std::vector<std::string>& messages) {
    for (const auto& m : messages) warn(m);
  }
  const std::vector<std::string>& warnings() const { return warnings_; }

  void finish() {
    std::sort(manifest_.outputs.begin(), manifest_.outputs.end());
    manifest_.outputs.erase(std::unique(manifest_.outputs.begin(), manifest_.outputs.end()),
                            manifest_.outputs.end());
    write_text_file(out_dir_ / "manifest.json", manifest_.to_json().dump(2) + "\n");
  }

  const fs::path& out_dir() const { return out_dir_; }

 private:
  fs::path out_dir_;
  std::ostream& err_;
  Manifest manifest_;
  std::vector<std::string> warnings_;
};

std::string stem(const std::string& path) { return fs::path(path).stem().string(); }

// ---- shared loaders --------------------------------------------------------

// "id<TAB>label" lines with label 0 or 1; '#' starts a comment line.
std::vector<probe::LabelledSentence> load_sentence_labels(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  std::vector<probe::LabelledSentence> out;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (corpus::normalize_whitespace(line).empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    const std::string where = path.string() + " line " + std::to_string(line_no);
    if (tab == std::string::npos) throw Error(ErrorKind::kParse, where + ": expected id<TAB>label");
    const std::string id = line.substr(0, tab);
    const std::string label = corpus::normalize_whitespace(line.substr(tab + 1));
    if (label != "0" && label != "1") {
      throw Error(ErrorKind::kParse, where + ": label must be 0 or 1, got \"" + label + "\"");
    }
    if (!seen.insert(id).second) throw Error(ErrorKind::kValidation, where + ": duplicate id " + id);
    out.push_back({id, label == "1" ? 1 : 0});
  }
  return out;
}

std::vector<std::string> load_id_list(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  std::vector<std::string> ids;
  std::string line;
  while (std::getline(in, line)) {
    const std::string id = corpus::normalize_whitespace(line);
    if (!id.empty() && id[0] != '#') ids.push_back(id);
  }
  return ids;
}

std::string stats_csv_header() {
  return "dataset,n_tokens,en,es,other,ne,unk,en_pct,es_pct,other_pct,ne_pct,unk_pct\n";
}

std::string stats_csv_row(const std::string& name, const corpus::CorpusStats& s) {
  std::string row = csv_field(name) + "," + std::to_string(s.n_tokens);
  for (std::size_t c = 0; c < corpus::kNumStatsCategories; ++c) row += "," + std::to_string(s.counts[c]);
  for (std::size_t c = 0; c < corpus::kNumStatsCategories; ++c) {
    row += "," + format_double(s.percent(static_cast<corpus::StatsCategory>(c)), 2);
  }
  return row + "\n";
}

// ---- stats -------------------------------------------------------------------

struct StatsArgs {
  std::vector<std::string> corpora;
  std::vector<std::string> lid_files;
  bool intra_only = false;
};

void cmd_stats(const StatsArgs& a, const Globals& g, std::ostream& out, std::ostream& err) {
  Run run("stats", g, err);
  run.config()["corpora"] = a.corpora;
  run.config()["lid_files"] = a.lid_files;
  run.config()["intra_only"] = a.intra_only;
  if (a.corpora.empty() && a.lid_files.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "stats: give at least one --corpus or --lid file");
  }
  for (const auto& p : a.corpora) run.input("corpus", p);
  for (const auto& p : a.lid_files) run.input("lid", p);

  std::string csv = stats_csv_header();
  json datasets = json::array();
  for (const auto& p : a.corpora) {
    const auto corpus = corpus::load_parallel_corpus(p);
    const auto s = corpus::corpus_stats(corpus);
    csv += stats_csv_row(stem(p), s);
    json j = csgen::stats_json(s);
    j["dataset"] = stem(p);
    j["n_records"] = corpus.size();
    datasets.push_back(j);
  }
  for (const auto& p : a.lid_files) {
    auto sentences = corpus::load_lid_file(p);
    const std::size_t n_all = sentences.size();
    const auto intra = corpus::intra_sentential_filter(sentences);
    if (a.intra_only) sentences = intra;
    const auto s = corpus::corpus_stats(sentences);
    csv += stats_csv_row(stem(p), s);
    json j = csgen::stats_json(s);
    j["dataset"] = stem(p);
    j["n_sentences"] = n_all;
    j["n_intra_sentential"] = intra.size();
    datasets.push_back(j);
  }
  run.write("stats.csv", csv);
  run.write_json("stats.json", {{"datasets", datasets}});
  run.finish();
  out << csv;
}

// ---- generate ----------------------------------------------------------------

struct GenerateArgs {
  std::string corpus;
  std::string alignments;
  std::string dict_en_es;
  std::string dict_es_en;
  std::string en_parses;
  std::string es_parses;
  std::vector<std::string> methods{"random"};
  std::string direction = "en2es";
  double p_switch = 0.5;
  bool no_match_case = false;
};

std::map<std::string, corpus::ConlluSentence> parses_by_id(const std::string& path) {
  std::map<std::string, corpus::ConlluSentence> out;
  for (auto& s : corpus::load_conllu(path)) {
    const std::string id = s.sent_id;
    if (!out.emplace(id, std::move(s)).second) {
      throw Error(ErrorKind::kValidation, path + ": duplicate sent_id " + id);
    }
  }
  return out;
}

void cmd_generate(const GenerateArgs& a, const Globals& g, std::ostream& out, std::ostream& err) {
  Run run("generate", g, err);
  const auto direction = csgen::parse_direction(a.direction);
  if (!direction) throw Error(ErrorKind::kInvalidArgument, "unknown direction " + a.direction);
  if (!(a.p_switch >= 0.0 && a.p_switch <= 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "--p-switch must lie in [0, 1]");
  }
  std::vector<csgen::Method> methods;
  for (const auto& m : a.methods) {
    if (m == "random") methods.push_back(csgen::Method::kRandom);
    else if (m == "np_en_matrix") methods.push_back(csgen::Method::kNpEnMatrix);
    else if (m == "np_es_matrix") methods.push_back(csgen::Method::kNpEsMatrix);
    else throw Error(ErrorKind::kInvalidArgument, "unknown method " + m);
  }
  json& c = run.config();
  c["methods"] = a.methods;
  c["direction"] = a.direction;
  c["p_switch"] = a.p_switch;
  c["match_case"] = !a.no_match_case;
  c["seed"] = g.seed;

  run.input("corpus", a.corpus);
  const auto corpus = corpus::load_parallel_corpus(a.corpus);
  csgen::TranslationLexicon lexicon;
  if (!a.alignments.empty()) {
    run.input("alignments_en_es", a.alignments);
    lexicon = csgen::TranslationLexicon::from_alignment_file(corpus, a.alignments);
  }
  for (const auto& [path, dir, role] :
       {std::tuple{a.dict_en_es, csgen::Direction::kEnToEs, "dictionary_en_es"},
        std::tuple{a.dict_es_en, csgen::Direction::kEsToEn, "dictionary_es_en"}}) {
    if (path.empty()) continue;
    run.input(role, path);
    std::ifstream in(path);
    lexicon.load_dictionary(dir, in);
  }
  std::map<std::string, corpus::ConlluSentence> en_parses, es_parses;
  if (!a.en_parses.empty()) {
    run.input("en_parses", a.en_parses);
    en_parses = parses_by_id(a.en_parses);
  }
  if (!a.es_parses.empty()) {
    run.input("es_parses", a.es_parses);
    es_parses = parses_by_id(a.es_parses);
  }

  std::string stats_csv = stats_csv_header();
  for (csgen::Method m : methods) {
    csgen::GenerationParams params;
    params.method = m;
    params.random.direction = *direction;
    params.random.p_switch = a.p_switch;
    params.random.seed = g.seed;
    params.random.match_case = !a.no_match_case;
    params.np.match_case = !a.no_match_case;
    const std::map<std::string, corpus::ConlluSentence>* parses = nullptr;
    if (m == csgen::Method::kNpEnMatrix) {
      if (a.en_parses.empty()) throw Error(ErrorKind::kInvalidArgument, "np_en_matrix needs --en-parses");
      parses = &en_parses;
    } else if (m == csgen::Method::kNpEsMatrix) {
      if (a.es_parses.empty()) throw Error(ErrorKind::kInvalidArgument, "np_es_matrix needs --es-parses");
      parses = &es_parses;
    }
    const auto result = csgen::gen_corpus(corpus, params, lexicon, parses, g.jobs);
    const std::string name(csgen::to_string(m));
    std::ostringstream jsonl;
    csgen::write_synthetic(jsonl, result.records);
    run.write(name + ".jsonl", jsonl.str());
    run.write_json(name + "_report.json", csgen::report_json(result.report));
    stats_csv += stats_csv_row(name, result.report.stats);
    for (const auto& [id, reason] : result.report.skipped) run.warn(name + ": skipped " + id + ": " + reason);
    out << name << ": " << result.records.size() << " of " << result.report.n_input
        << " records generated\n";
  }
  run.write("generation_stats.csv", stats_csv);
  run.finish();
}

// ---- probe sweeps ------------------------------------------------------------

struct SweepArgs {
  std::string task = "sentence";
  std::vector<std::string> embeddings;
  std::string labels;
  std::string lid;
  int batch_size = 32;
  double lr = 1e-3;
  int max_epochs = 50;
  int patience = 5;
};

void cmd_sweep(const SweepArgs& a, const Globals& g, const std::string& command, std::ostream& out,
               std::ostream& err) {
  Run run(command, g, err);
  if (a.task != "sentence" && a.task != "lid") {
    throw Error(ErrorKind::kInvalidArgument, "--task must be sentence or lid");
  }
  if (g.seeds.empty()) throw Error(ErrorKind::kInvalidArgument, "--seeds must not be empty");
  probe::SweepOptions opt;
  opt.cfg.batch_size = a.batch_size;
  opt.cfg.learning_rate = a.lr;
  opt.cfg.max_epochs = a.max_epochs;
  opt.cfg.patience = a.patience;
  opt.cfg.validate();
  opt.seeds = g.seeds;
  opt.jobs = g.jobs;
  json& c = run.config();
  c["task"] = a.task;
  c["seeds"] = g.seeds;
  c["batch_size"] = a.batch_size;
  c["learning_rate"] = a.lr;
  c["max_epochs"] = a.max_epochs;
  c["patience"] = a.patience;

  std::vector<probe::LayerSource> layers;
  for (const auto& p : a.embeddings) {
    // Missing layer files are reported by the sweep and skipped.
    if (fs::is_regular_file(p)) run.input("embeddings", p);
    layers.push_back({p, nullptr});
  }
  if (layers.empty()) throw Error(ErrorKind::kInvalidArgument, "no --embeddings given");

  probe::LayerSweepResult result;
  if (a.task == "sentence") {
    if (a.labels.empty()) throw Error(ErrorKind::kInvalidArgument, "sentence task needs --labels");
    run.input("labels", a.labels);
    result = probe::sentence_classification_sweep(layers, load_sentence_labels(a.labels), opt);
  } else {
    if (a.lid.empty()) throw Error(ErrorKind::kInvalidArgument, "lid task needs --lid");
    run.input("lid", a.lid);
    result = probe::lid_sweep(layers, corpus::load_lid_file(a.lid), opt);
  }
  run.warn_all(result.warnings);
  if (result.rows.empty()) throw Error(ErrorKind::kIo, "no layer could be read");

  std::ostringstream csv;
  probe::write_sweep_csv(csv, result);
  run.write("sweep.csv", csv.str());
  json summary = probe::sweep_summary_json(result);
  summary["task"] = a.task;
  summary["selection_f1"] = a.task == "sentence" ? "macro" : "weighted";
  run.write_json("sweep_summary.json", summary);

  LineChart chart;
  const bool macro = a.task == "sentence";
  chart.title = std::string("Mean F1 (") + (macro ? "macro" : "weighted") + ") across layers";
  chart.x_label = "layer";
  chart.y_label = macro ? "macro F1" : "weighted F1";
  std::map<std::string, ChartSeries> series;
  for (const auto& s : result.summary) {
    ChartSeries& cs = series[s.model + " " + s.pooling];
    cs.name = s.model + " " + s.pooling;
    cs.x.push_back(s.layer);
    cs.y.push_back(macro ? s.macro.mean : s.weighted.mean);
  }
  for (auto& [name, s] : series) chart.series.push_back(std::move(s));
  run.write("sweep.svg", render_svg(chart));
  run.finish();

  for (const auto& s : result.summary) {
    out << s.model << " layer " << s.layer << " " << s.pooling << ": macro "
        << format_double(s.macro.mean, 4) << " weighted " << format_double(s.weighted.mean, 4) << '\n';
  }
}

// ---- structural probe --------------------------------------------------------

struct StructArgs {
  std::vector<std::string> treebanks;
  std::vector<std::string> embeddings;
  std::string dev_treebank;
  std::string dev_embeddings;
  double dev_fraction = 0.1;
  bool per_language = false;
  bool keep_punct = false;
  int rank = 128;
  int batch_size = 20;
  double lr = 1e-3;
  int max_epochs = 200;
  int patience = 3;
  double lr_decay = 0.1;
};

void structural_config(const StructArgs& a, const Globals& g, json& c) {
  c["rank"] = a.rank;
  c["batch_size"] = a.batch_size;
  c["learning_rate"] = a.lr;
  c["max_epochs"] = a.max_epochs;
  c["patience"] = a.patience;
  c["lr_decay_on_plateau"] = a.lr_decay;
  c["dev_fraction"] = a.dev_fraction;
  c["keep_punct"] = a.keep_punct;
  c["per_language"] = a.per_language;
  c["seed"] = g.seed;
}

std::vector<structprobe::ProbeSentence> load_treebank(Run& run, const std::string& treebank,
                                                      const std::string& embeddings, bool keep_punct) {
  run.input("treebank", treebank);
  run.input("treebank_embeddings", embeddings);
  const auto sentences = corpus::load_conllu(treebank);
  const auto set = embed::read_container(embeddings);
  std::vector<std::string> warnings;
  auto bank = structprobe::build_treebank(sentences, set, warnings, !keep_punct);
  for (auto& w : warnings) run.warn(treebank + ": " + w);
  return bank;
}

struct TrainedProbe {
  std::string name;
  structprobe::StructuralFit fit;
  structprobe::EvalResult dev_eval;
  std::size_t n_train = 0;
  std::size_t n_dev = 0;
};

std::vector<TrainedProbe> train_structural(Run& run, const StructArgs& a, const Globals& g) {
  if (a.treebanks.empty() || a.treebanks.size() != a.embeddings.size()) {
    throw Error(ErrorKind::kInvalidArgument,
                "give one --embeddings container per --treebank (same order)");
  }
  if (!(a.dev_fraction >= 0.0 && a.dev_fraction < 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "--dev-fraction must lie in [0, 1)");
  }
  probe::ProbeTrainConfig cfg = structprobe::default_structural_config();
  cfg.batch_size = a.batch_size;
  cfg.learning_rate = a.lr;
  cfg.max_epochs = a.max_epochs;
  cfg.patience = a.patience;
  cfg.lr_decay_on_plateau = a.lr_decay;
  cfg.seed = g.seed;
  cfg.validate();

  std::vector<std::pair<std::string, std::vector<structprobe::ProbeSentence>>> groups;
  for (std::size_t i = 0; i < a.treebanks.size(); ++i) {
    auto bank = load_treebank(run, a.treebanks[i], a.embeddings[i], a.keep_punct);
    if (a.per_language || groups.empty()) {
      groups.emplace_back(a.per_language ? stem(a.treebanks[i]) : "joint", std::move(bank));
    } else {
      auto& g0 = groups.front().second;
      g0.insert(g0.end(), std::make_move_iterator(bank.begin()), std::make_move_iterator(bank.end()));
    }
  }
  std::vector<structprobe::ProbeSentence> shared_dev;
  const bool explicit_dev = !a.dev_treebank.empty();
  if (explicit_dev) {
    if (a.dev_embeddings.empty()) throw Error(ErrorKind::kInvalidArgument, "--dev-treebank needs --dev-embeddings");
    shared_dev = load_treebank(run, a.dev_treebank, a.dev_embeddings, a.keep_punct);
  }

  std::vector<TrainedProbe> out;
  for (auto& [name, bank] : groups) {
    if (bank.empty()) throw Error(ErrorKind::kValidation, name + ": no usable training sentences");
    std::vector<structprobe::ProbeSentence> train, dev;
    if (explicit_dev) {
      train = std::move(bank);
      dev = shared_dev;
    } else {
      std::vector<std::size_t> order(bank.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      Rng rng(derive_seed(g.seed, "dev-split:" + name));
      rng.shuffle(order);
      const auto n_dev = static_cast<std::size_t>(a.dev_fraction * static_cast<double>(bank.size()));
      for (std::size_t i = 0; i < order.size(); ++i) {
        (i < n_dev ? dev : train).push_back(std::move(bank[order[i]]));
      }
    }
    TrainedProbe tp;
    tp.name = name;
    tp.n_train = train.size();
    tp.n_dev = dev.size();
    tp.fit = structprobe::train_structural_probe(train, dev, a.rank, cfg);
    if (!dev.empty()) tp.dev_eval = structprobe::evaluate(tp.fit.probe, dev);
    out.push_back(std::move(tp));
  }
  return out;
}

json eval_json(const structprobe::EvalResult& e) {
  return {{"uuas", e.uuas},
          {"dspr", e.dspr},
          {"n_sentences", e.n_sentences},
          {"n_dspr_sentences", e.n_dspr_sentences},
          {"dspr_window", {5, 50}}};
}

std::string probe_file(const TrainedProbe& tp, bool per_language) {
  return per_language ? "probe_" + tp.name + ".csem" : "probe.csem";
}

void write_training_outputs(Run& run, const std::vector<TrainedProbe>& probes, bool per_language,
                            json& summary) {
  json list = json::array();
  for (const auto& tp : probes) {
    run.write_container(probe_file(tp, per_language), structprobe::probe_to_container(tp.fit.probe));
    std::string log = "epoch,train_loss,dev_loss\n";
    for (std::size_t e = 0; e < tp.fit.train_loss.size(); ++e) {
      log += std::to_string(e + 1) + "," + format_double(tp.fit.train_loss[e], 8) + "," +
             (e < tp.fit.dev_loss.size() ? format_double(tp.fit.dev_loss[e], 8) : "") + "\n";
    }
    const std::string log_name = per_language ? "train_log_" + tp.name + ".csv" : "train_log.csv";
    run.write(log_name, log);
    list.push_back({{"name", tp.name},
                    {"probe", probe_file(tp, per_language)},
                    {"rank", tp.fit.probe.rank()},
                    {"dim", tp.fit.probe.dim()},
                    {"n_train", tp.n_train},
                    {"n_dev", tp.n_dev},
                    {"best_epoch", tp.fit.best_epoch},
                    {"epochs_run", tp.fit.epochs_run},
                    {"best_dev_loss", tp.fit.best_dev_loss},
                    {"dev", eval_json(tp.dev_eval)}});
  }
  summary["probes"] = list;
}

void cmd_train_structural(const StructArgs& a, const Globals& g, std::ostream& out, std::ostream& err) {
  Run run("train-structural", g, err);
  structural_config(a, g, run.config());
  const auto probes = train_structural(run, a, g);
  json summary;
  write_training_outputs(run, probes, a.per_language, summary);
  summary["warnings"] = run.warnings();
  run.write_json("train_summary.json", summary);
  run.finish();
  for (const auto& tp : probes) {
    out << tp.name << ": best dev loss " << format_double(tp.fit.best_dev_loss, 6) << " at epoch "
        << tp.fit.best_epoch << ", dev UUAS " << format_double(tp.dev_eval.uuas, 4) << '\n';
  }
}

struct ParseArgs {
  std::string probe;
  std::string embeddings;
  std::string ids;
};

void cmd_parse(const ParseArgs& a, const Globals& g, std::ostream& out, std::ostream& err) {
  Run run("parse", g, err);
  run.input("probe", a.probe);
  run.input("embeddings", a.embeddings);
  std::vector<std::string> ids;
  if (!a.ids.empty()) {
    run.input("ids", a.ids);
    ids = load_id_list(a.ids);
  }
  const auto probe = structprobe::load_probe(a.probe);
  const auto set = embed::read_container(a.embeddings);
  std::vector<std::string> warnings;
  const auto parses = structprobe::parse_corpus(probe, set, ids, warnings, g.jobs);
  run.warn_all(warnings);
  std::ostringstream jsonl;
  structprobe::write_parses(jsonl, parses);
  run.write("parses.jsonl", jsonl.str());
  run.finish();
  out << parses.size() << " sentences parsed\n";
}

struct GedArgs {
  int node_cap = 10;
  std::uint64_t budget = 5'000'000;
  double node_insert = 1.0;
  double node_delete = 1.0;
  double edge_insert = 1.0;
  double edge_delete = 1.0;
};

treedist::GedOptions ged_options(const GedArgs& a, json& c) {
  treedist::GedOptions opt;
  opt.node_cap = a.node_cap;
  opt.expansion_budget = a.budget;
  opt.costs = {a.node_insert, a.node_delete, a.edge_insert, a.edge_delete};
  opt.costs.validate();
  if (a.node_cap < 1) throw Error(ErrorKind::kInvalidArgument, "--node-cap must be >= 1");
  c["node_cap"] = a.node_cap;
  c["expansion_budget"] = a.budget;
  c["costs"] = {{"node_insert", a.node_insert},
                {"node_delete", a.node_delete},
                {"edge_insert", a.edge_insert},
                {"edge_delete", a.edge_delete}};
  return opt;
}

void write_ged_outputs(Run& run, const treedist::GedComparison& cmp, std::ostream& out) {
  run.warn_all(cmp.warnings);
  std::ostringstream csv;
  treedist::write_ged_csv(csv, cmp);
  run.write("ged.csv", csv.str());
  run.write_json("ged_summary.json", treedist::ged_summary_json(cmp));
  out << "GED: " << cmp.retained() << " records retained, " << cmp.excluded_cap
      << " over the node cap, " << cmp.excluded_missing << " missing a parse; spearman "
      << (cmp.spearman ? format_double(*cmp.spearman, 4) : std::string("undefined")) << '\n';
}

struct GedFiles {
  std::string cs, es, en;
};

void cmd_ged(const GedFiles& f, const GedArgs& a, const Globals& g, std::ostream& out, std::ostream& err) {
  Run run("ged", g, err);
  const auto opt = ged_options(a, run.config());
  run.input("cs_parses", f.cs);
  run.input("es_parses", f.es);
  run.input("en_parses", f.en);
  const auto cmp = treedist::ged_compare(structprobe::load_parses(f.cs), structprobe::load_parses(f.es),
                                         structprobe::load_parses(f.en), opt, g.jobs);
  write_ged_outputs(run, cmp, out);
  run.finish();
}

struct SyntaxArgs {
  StructArgs train;
  std::string probe;
  std::string eval_treebank;
  std::string eval_embeddings;
  std::string cs_embeddings;
  std::string es_embeddings;
  std::string en_embeddings;
  GedArgs ged;
};

void cmd_syntax(const SyntaxArgs& a, const Globals& g, std::ostream& out, std::ostream& err) {
  Run run("syntax", g, err);
  json summary;
  structprobe::StructuralProbe probe;
  if (!a.probe.empty()) {
    run.input("probe", a.probe);
    probe = structprobe::load_probe(a.probe);
    run.config()["probe"] = "given";
  } else {
    StructArgs t = a.train;
    t.per_language = false;
    structural_config(t, g, run.config());
    auto probes = train_structural(run, t, g);
    write_training_outputs(run, probes, false, summary);
    probe = probes.front().fit.probe;
  }
  const auto ged_opt = ged_options(a.ged, run.config());
  run.config()["keep_punct"] = a.train.keep_punct;

  if (!a.eval_treebank.empty()) {
    if (a.eval_embeddings.empty()) throw Error(ErrorKind::kInvalidArgument, "--eval-treebank needs --eval-embeddings");
    const auto bank = load_treebank(run, a.eval_treebank, a.eval_embeddings, a.train.keep_punct);
    if (bank.empty()) throw Error(ErrorKind::kValidation, "evaluation treebank has no usable sentences");
    const auto e = structprobe::evaluate(probe, bank);
    summary["eval"] = eval_json(e);
    out << "UUAS " << format_double(e.uuas, 4) << ", distance Spearman " << format_double(e.dspr, 4)
        << " over " << e.n_sentences << " sentences\n";
  }

  const int given = !a.cs_embeddings.empty() + !a.es_embeddings.empty() + !a.en_embeddings.empty();
  if (given != 0 && given != 3) {
    throw Error(ErrorKind::kInvalidArgument, "GED needs all of --cs-embeddings, --es-embeddings, --en-embeddings");
  }
  if (given == 3) {
    std::map<std::string, std::vector<structprobe::ParseRecord>> parses;
    for (const auto& [name, path] : {std::pair{"cs", a.cs_embeddings}, std::pair{"es", a.es_embeddings},
                                     std::pair{"en", a.en_embeddings}}) {
      run.input(std::string(name) + "_embeddings", path);
      std::vector<std::string> warnings;
      parses[name] = structprobe::parse_corpus(probe, embed::read_container(path), {}, warnings, g.jobs);
      for (const auto& w : warnings) run.warn(std::string(name) + ": " + w);
      std::ostringstream jsonl;
      structprobe::write_parses(jsonl, parses[name]);
      run.write(std::string("parses_") + name + ".jsonl", jsonl.str());
    }
    const auto cmp = treedist::ged_compare(parses["cs"], parses["es"], parses["en"], ged_opt, g.jobs);
    write_ged_outputs(run, cmp, out);
    summary["ged"] = treedist::ged_summary_json(cmp);
  }
  if (a.eval_treebank.empty() && given == 0) {
    throw Error(ErrorKind::kInvalidArgument,
                "syntax: nothing to do; give --eval-treebank and/or the three --*-embeddings");
  }
  summary["warnings"] = run.warnings();
  run.write_json("syntax_summary.json", summary);
  run.finish();
}

// ---- semantics ---------------------------------------------------------------

struct SemanticsArgs {
  std::vector<std::string> sets;
  std::vector<std::string> synthetic;
  bool real_plan = true;
  bool include_diagonal = false;
  bool dump_vectors = false;
  std::string model;
};

void cmd_semantics(const SemanticsArgs& a, const Globals& g, std::ostream& out, std::ostream& err) {
  Run run("semantics", g, err);
  std::map<std::string, embed::EmbeddingSet> sets;
  std::map<std::string, std::string> paths;
  for (const auto& item : a.sets) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == item.size()) {
      throw Error(ErrorKind::kInvalidArgument, "--set expects name=path, got " + item);
    }
    const std::string name = item.substr(0, eq);
    if (!paths.emplace(name, item.substr(eq + 1)).second) {
      throw Error(ErrorKind::kInvalidArgument, "set " + name + " given twice");
    }
  }
  for (const auto& [name, path] : paths) {
    run.input("set:" + name, path);
    sets.emplace(name, embed::read_container(path));
  }
  std::vector<semsim::PlanRow> plan;
  if (a.real_plan) plan = semsim::real_cs_plan();
  for (const auto& s : a.synthetic) {
    const auto rows = semsim::synthetic_plan(s);
    plan.insert(plan.end(), rows.begin(), rows.end());
  }
  if (plan.empty()) throw Error(ErrorKind::kInvalidArgument, "empty pair plan");

  std::string model = a.model;
  if (model.empty()) {
    std::set<std::string> names;
    for (const auto& [n, s] : sets) names.insert(s.model_name);
    model = names.size() == 1 ? *names.begin() : "mixed";
    if (names.size() > 1) run.warn("sets come from different models; labelling rows \"mixed\"");
  }
  json& c = run.config();
  c["real_plan"] = a.real_plan;
  c["synthetic"] = a.synthetic;
  c["include_diagonal"] = a.include_diagonal;
  c["model"] = model;

  const auto report = semsim::consistency_report(sets, plan, a.include_diagonal);
  run.warn_all(report.warnings);
  if (report.rows.empty()) throw Error(ErrorKind::kInvalidArgument, "no planned row had its sets available");
  std::ostringstream csv;
  semsim::write_report_csv(csv, report.rows, model);
  run.write("semantics.csv", csv.str());
  if (a.dump_vectors) {
    std::ostringstream vec;
    semsim::write_sim_vectors_csv(vec, report.vectors);
    run.write("sim_vectors.csv", vec.str());
  }
  run.finish();
  out << csv.str();
}

int fail(std::ostream& err, int code, const std::string& message) {
  err << "error: " << message << '\n';
  return code;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Probing multilingual encoders on code-switched text", "csprobe"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);
  app.set_config("--config", "", "INI/TOML file with option values; flags override it");

  Globals g;
  app.add_option("--out", g.out, "Output directory")->capture_default_str();
  app.add_option("--seed", g.seed, "Seed for generation, initialisation and dev splits")->capture_default_str();
  app.add_option("--seeds", g.seeds, "Probe seeds for sweeps")->delimiter(',');
  app.add_option("--jobs", g.jobs, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();

  StatsArgs stats;
  auto* c_stats = app.add_subcommand("stats", "Token-language statistics of labelled corpora");
  c_stats->add_option("--corpus", stats.corpora, "Parallel JSONL with cs_tokens");
  c_stats->add_option("--lid", stats.lid_files, "Token<TAB>label file");
  c_stats->add_flag("--intra-only", stats.intra_only, "Keep only sentences with both lang1 and lang2");

  GenerateArgs gen;
  auto* c_gen = app.add_subcommand("generate", "Synthetic code-switched corpora");
  c_gen->add_option("--corpus", gen.corpus, "Parallel JSONL")->required();
  c_gen->add_option("--alignments", gen.alignments, "Pharaoh en-es alignments, one line per record");
  c_gen->add_option("--dictionary-en-es", gen.dict_en_es, "Fallback dictionary source<TAB>target");
  c_gen->add_option("--dictionary-es-en", gen.dict_es_en, "Fallback dictionary source<TAB>target");
  c_gen->add_option("--en-parses", gen.en_parses, "CoNLL-U of the English side, sent_id = record id");
  c_gen->add_option("--es-parses", gen.es_parses, "CoNLL-U of the Spanish side, sent_id = record id");
  c_gen->add_option("--method", gen.methods, "random, np_en_matrix, np_es_matrix")->delimiter(',')->capture_default_str();
  c_gen->add_option("--direction", gen.direction, "en2es or es2en (random method)")->capture_default_str();
  c_gen->add_option("--p-switch", gen.p_switch, "Per-token switch probability")->capture_default_str();
  c_gen->add_flag("--no-match-case", gen.no_match_case, "Keep replacement casing as in the translation");

  SweepArgs sweep, single;
  const auto add_sweep_options = [](CLI::App* c, SweepArgs& s) {
    c->add_option("--task", s.task, "sentence or lid")->capture_default_str();
    c->add_option("--embeddings", s.embeddings, "CSEM containers")->required();
    c->add_option("--labels", s.labels, "id<TAB>label (0 or 1) for the sentence task");
    c->add_option("--lid", s.lid, "Token<TAB>label file for the lid task");
    c->add_option("--batch-size", s.batch_size)->capture_default_str();
    c->add_option("--lr", s.lr)->capture_default_str();
    c->add_option("--max-epochs", s.max_epochs)->capture_default_str();
    c->add_option("--patience", s.patience)->capture_default_str();
  };
  auto* c_sweep = app.add_subcommand("sweep", "Probe every layer container over all seeds");
  add_sweep_options(c_sweep, sweep);
  auto* c_train = app.add_subcommand("train-probe", "Probe a single container over all seeds");
  add_sweep_options(c_train, single);
  c_train->get_option("--embeddings")->expected(1);

  StructArgs st;
  const auto add_struct_options = [](CLI::App* c, StructArgs& s, bool required) {
    auto* tb = c->add_option("--treebank", s.treebanks, "CoNLL-U training treebank");
    auto* em = c->add_option("--embeddings", s.embeddings, "Word container for each treebank");
    if (required) {
      tb->required();
      em->required();
    }
    c->add_option("--dev-treebank", s.dev_treebank);
    c->add_option("--dev-embeddings", s.dev_embeddings);
    c->add_option("--dev-fraction", s.dev_fraction, "Held out when no dev treebank is given")->capture_default_str();
    c->add_flag("--keep-punct", s.keep_punct, "Do not drop PUNCT words");
    c->add_option("--rank", s.rank)->capture_default_str();
    c->add_option("--batch-size", s.batch_size)->capture_default_str();
    c->add_option("--lr", s.lr)->capture_default_str();
    c->add_option("--max-epochs", s.max_epochs)->capture_default_str();
    c->add_option("--patience", s.patience)->capture_default_str();
    c->add_option("--lr-decay", s.lr_decay, "Learning-rate factor after a non-improving epoch")->capture_default_str();
  };
  auto* c_struct = app.add_subcommand("train-structural", "Train a structural distance probe");
  add_struct_options(c_struct, st, true);
  c_struct->add_flag("--per-language", st.per_language, "One probe per treebank instead of a joint one");

  ParseArgs pa;
  auto* c_parse = app.add_subcommand("parse", "MST parses from a trained probe");
  c_parse->add_option("--probe", pa.probe)->required();
  c_parse->add_option("--embeddings", pa.embeddings)->required();
  c_parse->add_option("--ids", pa.ids, "File with one sentence id per line");

  const auto add_ged_options = [](CLI::App* c, GedArgs& a) {
    c->add_option("--node-cap", a.node_cap)->capture_default_str();
    c->add_option("--budget", a.budget, "Search expansion budget per pair")->capture_default_str();
    c->add_option("--cost-node-insert", a.node_insert)->capture_default_str();
    c->add_option("--cost-node-delete", a.node_delete)->capture_default_str();
    c->add_option("--cost-edge-insert", a.edge_insert)->capture_default_str();
    c->add_option("--cost-edge-delete", a.edge_delete)->capture_default_str();
  };
  GedFiles gf;
  GedArgs ga;
  auto* c_ged = app.add_subcommand("ged", "Tree edit distances of cs parses to both translations");
  c_ged->add_option("--cs-parses", gf.cs)->required();
  c_ged->add_option("--es-parses", gf.es)->required();
  c_ged->add_option("--en-parses", gf.en)->required();
  add_ged_options(c_ged, ga);

  SyntaxArgs sx;
  auto* c_syntax = app.add_subcommand("syntax", "Structural probe evaluation, parses and GED in one run");
  add_struct_options(c_syntax, sx.train, false);
  c_syntax->add_option("--probe", sx.probe, "Existing checkpoint instead of training");
  c_syntax->add_option("--eval-treebank", sx.eval_treebank);
  c_syntax->add_option("--eval-embeddings", sx.eval_embeddings);
  c_syntax->add_option("--cs-embeddings", sx.cs_embeddings);
  c_syntax->add_option("--es-embeddings", sx.es_embeddings);
  c_syntax->add_option("--en-embeddings", sx.en_embeddings);
  add_ged_options(c_syntax, sx.ged);

  SemanticsArgs se;
  bool no_real = false;
  auto* c_sem = app.add_subcommand("semantics", "Cosine-similarity consistency across language pairs");
  c_sem->add_option("--set", se.sets, "name=container (cs, es, en or a synthetic name)")->required();
  c_sem->add_option("--synthetic", se.synthetic, "Add the plan rows for these synthetic sets")->delimiter(',');
  c_sem->add_flag("--no-real-plan", no_real, "Skip the real code-switching rows");
  c_sem->add_flag("--include-diagonal", se.include_diagonal, "Keep (i, i) translation pairs");
  c_sem->add_flag("--dump-vectors", se.dump_vectors, "Also write every similarity vector");
  c_sem->add_option("--model", se.model, "Model label for the report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion& e) {
    out << kToolVersion << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    return fail(err, 2, e.what());
  }
  se.real_plan = !no_real;

  try {
    if (*c_stats) cmd_stats(stats, g, out, err);
    else if (*c_gen) cmd_generate(gen, g, out, err);
    else if (*c_sweep) cmd_sweep(sweep, g, "sweep", out, err);
    else if (*c_train) cmd_sweep(single, g, "train-probe", out, err);
    else if (*c_struct) cmd_train_structural(st, g, out, err);
    else if (*c_parse) cmd_parse(pa, g, out, err);
    else if (*c_ged) cmd_ged(gf, ga, g, out, err);
    else if (*c_syntax) cmd_syntax(sx, g, out, err);
    else if (*c_sem) cmd_semantics(se, g, out, err);
  } catch (const Error& e) {
    return fail(err, is_input_error(e.kind()) ? 2 : 1, std::string(to_string(e.kind())) + ": " + e.what());
  } catch (const fs::filesystem_error& e) {
    return fail(err, 2, e.what());
  } catch (const std::exception& e) {
    return fail(err, 1, e.what());
  }
  return 0;
}

}  // namespace csprobe::cli
