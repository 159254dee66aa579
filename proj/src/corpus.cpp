#include "csprobe/corpus.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "csprobe/error.hpp"

namespace csprobe::corpus {
namespace {

using nlohmann::json;

constexpr std::array<std::string_view, kNumLidLabels> kLidNames = {
    "lang1", "lang2", "other", "ne", "fw", "mixed", "unk", "ambiguous"};

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorKind::kIo, "cannot open " + path.string());
  }
  return in;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

std::string ordinal_id(std::size_t ordinal) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%06zu", ordinal);
  return buf;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return fields;
}

std::optional<int> parse_int(std::string_view text) {
  if (text.empty()) return std::nullopt;
  int value = 0;
  for (char c : text) {
    if (c < '0' || c > '9') return std::nullopt;
    value = value * 10 + (c - '0');
    if (value > 1'000'000) return std::nullopt;
  }
  return value;
}

std::string comment_value(const std::string& line, std::string_view key) {
  // "# key = value"
  std::string_view rest(line);
  rest.remove_prefix(1);
  while (!rest.empty() && rest.front() == ' ') rest.remove_prefix(1);
  if (rest.substr(0, key.size()) != key) return {};
  rest.remove_prefix(key.size());
  while (!rest.empty() && rest.front() == ' ') rest.remove_prefix(1);
  if (rest.empty() || rest.front() != '=') return {};
  rest.remove_prefix(1);
  while (!rest.empty() && rest.front() == ' ') rest.remove_prefix(1);
  while (!rest.empty() && is_space(rest.back())) rest.remove_suffix(1);
  return std::string(rest);
}

std::string required_string(const json& obj, const char* field, std::size_t line_no) {
  const auto it = obj.find(field);
  if (it == obj.end()) {
    throw Error(ErrorKind::kParse, "line " + std::to_string(line_no) +
                                       ": missing field \"" + field + "\"");
  }
  if (!it->is_string()) {
    throw Error(ErrorKind::kParse, "line " + std::to_string(line_no) + ": field \"" +
                                       field + "\" is not a string");
  }
  return it->get<std::string>();
}

void validate_record(const ParallelCsRecord& r) {
  if (r.id.empty()) throw Error(ErrorKind::kValidation, "record with empty id");
  const auto require = [&](const std::string& value, const char* field) {
    if (normalize_whitespace(value).empty()) {
      throw Error(ErrorKind::kValidation,
                  "record " + r.id + ": field \"" + field + "\" is empty");
    }
  };
  require(r.cs, "cs");
  require(r.es, "es");
  require(r.en, "en");
  if (r.cs_tokens) {
    std::string joined;
    for (const LidToken& t : *r.cs_tokens) {
      if (t.form.empty() ||
          std::any_of(t.form.begin(), t.form.end(), is_space)) {
        throw Error(ErrorKind::kValidation,
                    "record " + r.id + ": token form \"" + t.form + "\" is empty or has whitespace");
      }
      if (!joined.empty()) joined += ' ';
      joined += t.form;
    }
    if (joined != normalize_whitespace(r.cs)) {
      throw Error(ErrorKind::kValidation,
                  "record " + r.id + ": cs_tokens do not reproduce the cs text");
    }
  }
}

}  // namespace

std::string_view to_string(LidLabel label) {
  return kLidNames[static_cast<std::size_t>(label)];
}

std::optional<LidLabel> parse_lid_label(std::string_view text) {
  for (std::size_t i = 0; i < kLidNames.size(); ++i) {
    if (kLidNames[i] == text) return kAllLidLabels[i];
  }
  return std::nullopt;
}

std::string_view to_string(StatsCategory category) {
  switch (category) {
    case StatsCategory::kEn: return "en";
    case StatsCategory::kEs: return "es";
    case StatsCategory::kOther: return "other";
    case StatsCategory::kNe: return "ne";
    case StatsCategory::kUnk: return "unk";
  }
  return "?";
}

ParallelCsCorpus::ParallelCsCorpus(std::vector<ParallelCsRecord> records)
    : records_(std::move(records)) {
  for (std::size_t i = 0; i < records_.size(); ++i) {
    validate_record(records_[i]);
    if (!index_.emplace(records_[i].id, i).second) {
      throw Error(ErrorKind::kValidation, "duplicate record id \"" + records_[i].id + "\"");
    }
  }
}

const ParallelCsRecord* ParallelCsCorpus::find(std::string_view id) const {
  const auto it = index_.find(id);
  return it == index_.end() ? nullptr : &records_[it->second];
}

std::vector<std::string> ConlluSentence::forms() const {
  std::vector<std::string> out;
  out.reserve(words.size());
  for (const ConlluWord& w : words) out.push_back(w.form);
  return out;
}

void AlignmentRecord::validate(std::size_t src_len, std::size_t tgt_len) const {
  for (const auto& [s, t] : pairs) {
    if (s < 0 || t < 0 || static_cast<std::size_t>(s) >= src_len ||
        static_cast<std::size_t>(t) >= tgt_len) {
      throw Error(ErrorKind::kValidation,
                  "alignment pair " + std::to_string(s) + "-" + std::to_string(t) +
                      " out of range for sentence lengths " + std::to_string(src_len) +
                      "/" + std::to_string(tgt_len));
    }
  }
}

AlignmentRecord AlignmentRecord::inverted() const {
  AlignmentRecord out;
  out.pairs.reserve(pairs.size());
  for (const auto& [s, t] : pairs) out.pairs.emplace_back(t, s);
  std::sort(out.pairs.begin(), out.pairs.end());
  return out;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t j = i;
    while (j < text.size() && !is_space(text[j])) ++j;
    if (j > i) tokens.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return tokens;
}

std::string normalize_whitespace(std::string_view text) {
  std::string out;
  for (const std::string& t : tokenize(text)) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

std::string tree_violation(std::span<const int> heads) {
  const int n = static_cast<int>(heads.size());
  if (n == 0) return "empty sentence";
  int roots = 0;
  for (int i = 0; i < n; ++i) {
    if (heads[i] < 0 || heads[i] > n) {
      return "word " + std::to_string(i + 1) + " has out-of-range head " +
             std::to_string(heads[i]);
    }
    if (heads[i] == i + 1) return "word " + std::to_string(i + 1) + " is its own head";
    if (heads[i] == 0) ++roots;
  }
  if (roots != 1) return std::to_string(roots) + " root words (expected exactly 1)";
  // Every word must reach the root within n steps.
  for (int i = 0; i < n; ++i) {
    int cur = i + 1;
    int steps = 0;
    while (cur != 0 && steps <= n) {
      cur = heads[cur - 1];
      ++steps;
    }
    if (cur != 0) return "cycle through word " + std::to_string(i + 1);
  }
  return {};
}

// ---- parallel corpus ----------------------------------------------------

ParallelCsCorpus parse_parallel_corpus(std::istream& in) {
  std::vector<ParallelCsRecord> records;
  std::map<std::string, std::size_t> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (normalize_whitespace(line).empty()) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(ErrorKind::kParse,
                  "line " + std::to_string(line_no) + ": malformed JSON (" + e.what() + ")");
    }
    if (!obj.is_object()) {
      throw Error(ErrorKind::kParse, "line " + std::to_string(line_no) + ": not a JSON object");
    }
    ParallelCsRecord rec;
    rec.id = required_string(obj, "id", line_no);
    rec.cs = required_string(obj, "cs", line_no);
    rec.es = required_string(obj, "es", line_no);
    rec.en = required_string(obj, "en", line_no);
    if (const auto it = obj.find("cs_tokens"); it != obj.end() && !it->is_null()) {
      if (!it->is_array()) {
        throw Error(ErrorKind::kParse,
                    "line " + std::to_string(line_no) + ": cs_tokens is not an array");
      }
      std::vector<LidToken> tokens;
      for (const json& pair : *it) {
        if (!pair.is_array() || pair.size() != 2 || !pair[0].is_string() ||
            !pair[1].is_string()) {
          throw Error(ErrorKind::kParse, "line " + std::to_string(line_no) +
                                             ": cs_tokens entries must be [form, label]");
        }
        const std::string label_text = pair[1].get<std::string>();
        const auto label = parse_lid_label(label_text);
        if (!label) {
          throw Error(ErrorKind::kParse, "line " + std::to_string(line_no) +
                                             ": unknown LID label \"" + label_text + "\"");
        }
        tokens.push_back({pair[0].get<std::string>(), *label});
      }
      rec.cs_tokens = std::move(tokens);
    }
    if (const auto [it, inserted] = seen.emplace(rec.id, line_no); !inserted) {
      throw Error(ErrorKind::kValidation, "line " + std::to_string(line_no) +
                                              ": duplicate id \"" + rec.id +
                                              "\" (first seen on line " +
                                              std::to_string(it->second) + ")");
    }
    try {
      validate_record(rec);
    } catch (const Error& e) {
      throw Error(e.kind(), "line " + std::to_string(line_no) + ": " + e.what());
    }
    records.push_back(std::move(rec));
  }
  return ParallelCsCorpus(std::move(records));
}

ParallelCsCorpus load_parallel_corpus(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  return parse_parallel_corpus(in);
}

void write_parallel_corpus(std::ostream& out, const ParallelCsCorpus& corpus) {
  for (const ParallelCsRecord& r : corpus.records()) {
    json obj = json::object();
    obj["id"] = r.id;
    obj["cs"] = r.cs;
    obj["es"] = r.es;
    obj["en"] = r.en;
    if (r.cs_tokens) {
      json tokens = json::array();
      for (const LidToken& t : *r.cs_tokens) {
        tokens.push_back(json::array({t.form, std::string(to_string(t.label))}));
      }
      obj["cs_tokens"] = std::move(tokens);
    }
    out << obj.dump() << '\n';
  }
}

// ---- LID -----------------------------------------------------------------

std::vector<LidSentence> parse_lid(std::istream& in) {
  std::vector<LidSentence> sentences;
  LidSentence current;
  std::string pending_id;
  const auto flush = [&] {
    if (current.tokens.empty()) return;
    current.id = pending_id.empty() ? ordinal_id(sentences.size()) : pending_id;
    sentences.push_back(std::move(current));
    current = LidSentence{};
    pending_id.clear();
  };

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (normalize_whitespace(line).empty()) {
      flush();
      continue;
    }
    if (line[0] == '#') {
      if (std::string id = comment_value(line, "id"); !id.empty()) pending_id = id;
      continue;
    }
    const std::vector<std::string> fields = split_tabs(line);
    if (fields.size() != 2) {
      throw Error(ErrorKind::kParse, "line " + std::to_string(line_no) +
                                         ": expected token<TAB>label, got " +
                                         std::to_string(fields.size()) + " fields");
    }
    const std::string& form = fields[0];
    if (form.empty() || std::any_of(form.begin(), form.end(), is_space)) {
      throw Error(ErrorKind::kParse, "line " + std::to_string(line_no) +
                                         ": token is empty or contains whitespace");
    }
    const auto label = parse_lid_label(fields[1]);
    if (!label) {
      throw Error(ErrorKind::kParse, "line " + std::to_string(line_no) +
                                         ": unknown LID label \"" + fields[1] + "\"");
    }
    current.tokens.push_back({form, *label});
  }
  flush();
  return sentences;
}

std::vector<LidSentence> load_lid_file(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  return parse_lid(in);
}

void write_lid(std::ostream& out, std::span<const LidSentence> sentences) {
  for (const LidSentence& s : sentences) {
    out << "# id = " << s.id << '\n';
    for (const LidToken& t : s.tokens) out << t.form << '\t' << to_string(t.label) << '\n';
    out << '\n';
  }
}

// ---- CoNLL-U -------------------------------------------------------------

std::vector<ConlluSentence> parse_conllu(std::istream& in) {
  std::vector<ConlluSentence> sentences;
  ConlluSentence current;
  std::size_t sentence_start_line = 0;
  const auto flush = [&] {
    if (current.words.empty()) {
      current = ConlluSentence{};
      return;
    }
    if (current.sent_id.empty()) current.sent_id = ordinal_id(sentences.size());
    std::vector<int> heads;
    for (std::size_t i = 0; i < current.words.size(); ++i) {
      if (current.words[i].index != static_cast<int>(i + 1)) {
        throw Error(ErrorKind::kValidation, "sentence " + current.sent_id +
                                                ": word indices not contiguous from 1");
      }
      heads.push_back(current.words[i].head);
    }
    if (std::string why = tree_violation(heads); !why.empty()) {
      throw Error(ErrorKind::kValidation, "sentence " + current.sent_id + " (line " +
                                              std::to_string(sentence_start_line) + "): " + why);
    }
    sentences.push_back(std::move(current));
    current = ConlluSentence{};
  };

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (normalize_whitespace(line).empty()) {
      flush();
      continue;
    }
    if (current.words.empty() && current.sent_id.empty()) sentence_start_line = line_no;
    if (line[0] == '#') {
      if (std::string id = comment_value(line, "sent_id"); !id.empty()) current.sent_id = id;
      continue;
    }
    std::vector<std::string> f = split_tabs(line);
    if (f.size() != 10) {
      throw Error(ErrorKind::kParse, "line " + std::to_string(line_no) + ": expected 10 columns, got " +
                                         std::to_string(f.size()));
    }
    // Multiword-token ranges and empty nodes carry no tree position.
    if (f[0].find('-') != std::string::npos || f[0].find('.') != std::string::npos) continue;
    const auto index = parse_int(f[0]);
    const auto head = parse_int(f[6]);
    if (!index || !head) {
      throw Error(ErrorKind::kParse,
                  "line " + std::to_string(line_no) + ": non-numeric ID or HEAD column");
    }
    ConlluWord w;
    w.index = *index;
    w.form = std::move(f[1]);
    w.lemma = std::move(f[2]);
    w.upos = std::move(f[3]);
    w.xpos = std::move(f[4]);
    w.feats = std::move(f[5]);
    w.head = *head;
    w.deprel = std::move(f[7]);
    w.deps = std::move(f[8]);
    w.misc = std::move(f[9]);
    current.words.push_back(std::move(w));
  }
  flush();
  return sentences;
}

std::vector<ConlluSentence> load_conllu(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  return parse_conllu(in);
}

void write_conllu(std::ostream& out, std::span<const ConlluSentence> sentences) {
  for (const ConlluSentence& s : sentences) {
    out << "# sent_id = " << s.sent_id << '\n';
    for (const ConlluWord& w : s.words) {
      out << w.index << '\t' << w.form << '\t' << w.lemma << '\t' << w.upos << '\t' << w.xpos
          << '\t' << w.feats << '\t' << w.head << '\t' << w.deprel << '\t' << w.deps << '\t'
          << w.misc << '\n';
    }
    out << '\n';
  }
}

// ---- alignments ------------------------------------------------------------

std::vector<AlignmentRecord> parse_alignments(std::istream& in) {
  std::vector<AlignmentRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    AlignmentRecord rec;
    for (const std::string& tok : tokenize(line)) {
      const std::size_t dash = tok.find('-');
      const auto s = dash == std::string::npos ? std::nullopt : parse_int(std::string_view(tok).substr(0, dash));
      const auto t = dash == std::string::npos ? std::nullopt : parse_int(std::string_view(tok).substr(dash + 1));
      if (!s || !t) {
        throw Error(ErrorKind::kParse, "line " + std::to_string(line_no) +
                                           ": malformed alignment pair \"" + tok + "\"");
      }
      rec.pairs.emplace_back(*s, *t);
    }
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<AlignmentRecord> load_alignments(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  return parse_alignments(in);
}

void write_alignments(std::ostream& out, std::span<const AlignmentRecord> records) {
  for (const AlignmentRecord& r : records) {
    for (std::size_t i = 0; i < r.pairs.size(); ++i) {
      if (i) out << ' ';
      out << r.pairs[i].first << '-' << r.pairs[i].second;
    }
    out << '\n';
  }
}

// ---- statistics ----------------------------------------------------------

double CorpusStats::percent(StatsCategory c) const {
  if (n_tokens == 0) return 0.0;
  return 100.0 * static_cast<double>(count(c)) / static_cast<double>(n_tokens);
}

CorpusStats corpus_stats(std::span<const LidSentence> sentences, const LabelCollapse& collapse) {
  CorpusStats stats;
  for (const LidSentence& s : sentences) {
    for (const LidToken& t : s.tokens) {
      ++stats.counts[static_cast<std::size_t>(collapse(t.label))];
      ++stats.n_tokens;
    }
  }
  return stats;
}

CorpusStats corpus_stats(const ParallelCsCorpus& corpus, const LabelCollapse& collapse) {
  std::vector<LidSentence> sentences;
  sentences.reserve(corpus.size());
  for (const ParallelCsRecord& r : corpus.records()) {
    if (!r.cs_tokens) {
      throw Error(ErrorKind::kValidation,
                  "record \"" + r.id + "\" has no cs_tokens; per-token labels are required for statistics");
    }
    sentences.push_back({r.id, *r.cs_tokens});
  }
  return corpus_stats(sentences, collapse);
}

std::vector<LidSentence> intra_sentential_filter(std::span<const LidSentence> sentences) {
  std::vector<LidSentence> kept;
  for (const LidSentence& s : sentences) {
    bool has_lang1 = false;
    bool has_lang2 = false;
    for (const LidToken& t : s.tokens) {
      has_lang1 |= t.label == LidLabel::kLang1;
      has_lang2 |= t.label == LidLabel::kLang2;
    }
    if (has_lang1 && has_lang2) kept.push_back(s);
  }
  return kept;
}

}  // namespace csprobe::corpus
