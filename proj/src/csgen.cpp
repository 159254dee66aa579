#include "csprobe/csgen.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <ostream>

#include "csprobe/error.hpp"
#include "csprobe/parallel.hpp"
#include "csprobe/random.hpp"

namespace csprobe::csgen {
namespace {

using corpus::LidLabel;
using corpus::LidToken;

std::string lowercase(std::string_view text) {
  std::string out(text);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool is_ascii_upper(char c) { return c >= 'A' && c <= 'Z'; }
bool is_ascii_lower(char c) { return c >= 'a' && c <= 'z'; }

LidLabel language_label(Language lang) {
  return lang == Language::kEn ? LidLabel::kLang1 : LidLabel::kLang2;
}

// Tokens without any letter (ASCII or multibyte) are punctuation/symbols.
LidToken labelled(std::string form, Language lang) {
  const bool has_letter = std::any_of(form.begin(), form.end(), [](char c) {
    const auto u = static_cast<unsigned char>(c);
    return std::isalpha(u) || u >= 0x80;
  });
  return {std::move(form), has_letter ? language_label(lang) : LidLabel::kOther};
}

const std::string& side(const corpus::ParallelCsRecord& r, Language lang) {
  return lang == Language::kEn ? r.en : r.es;
}

// Replacement tokens take the first replaced source token's capitalization:
// an uppercase initial is copied; a sentence-initial target token moved into
// a lowercase position is lowered.
void apply_case(std::string_view source_form, std::vector<std::string>& replacement,
                bool from_target_start, bool at_output_start) {
  if (replacement.empty() || replacement.front().empty() || source_form.empty()) return;
  char& first = replacement.front().front();
  if (is_ascii_upper(source_form.front())) {
    if (is_ascii_lower(first)) first = static_cast<char>(first - 'a' + 'A');
  } else if (is_ascii_lower(source_form.front()) && from_target_start && !at_output_start) {
    if (is_ascii_upper(first)) first = static_cast<char>(first - 'A' + 'a');
  }
}

std::vector<std::vector<int>> aligned_targets(const corpus::AlignmentRecord& alignment,
                                              std::size_t source_len) {
  std::vector<std::vector<int>> out(source_len);
  for (const auto& [s, t] : alignment.pairs) out[s].push_back(t);
  for (auto& v : out) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }
  return out;
}

std::string join(const std::vector<LidToken>& tokens) {
  std::string out;
  for (const LidToken& t : tokens) {
    if (!out.empty()) out += ' ';
    out += t.form;
  }
  return out;
}

std::string_view base_relation(std::string_view deprel) {
  return deprel.substr(0, deprel.find(':'));
}

}  // namespace

std::string_view to_string(Direction d) {
  return d == Direction::kEnToEs ? "en2es" : "es2en";
}

std::optional<Direction> parse_direction(std::string_view text) {
  if (text == "en2es" || text == "en->es") return Direction::kEnToEs;
  if (text == "es2en" || text == "es->en") return Direction::kEsToEn;
  return std::nullopt;
}

std::string_view to_string(Method m) {
  switch (m) {
    case Method::kRandom: return "random";
    case Method::kNpEnMatrix: return "np_en_matrix";
    case Method::kNpEsMatrix: return "np_es_matrix";
  }
  return "?";
}

Language source_language(Direction d) { return d == Direction::kEnToEs ? Language::kEn : Language::kEs; }
Language target_language(Direction d) { return d == Direction::kEnToEs ? Language::kEs : Language::kEn; }

GenerationTally& GenerationTally::operator+=(const GenerationTally& o) {
  source_tokens += o.source_tokens;
  switch_draws += o.switch_draws;
  replaced += o.replaced;
  noop += o.noop;
  unaligned_kept += o.unaligned_kept;
  spans_found += o.spans_found;
  skipped_spans += o.skipped_spans;
  return *this;
}

// ---- lexicon ---------------------------------------------------------------

void TranslationLexicon::add_alignment(std::string record_id, corpus::AlignmentRecord en_es) {
  alignments_[std::move(record_id)] = std::move(en_es);
}

void TranslationLexicon::add_entry(Direction direction, std::string_view source_form,
                                   std::string target_form) {
  auto& dict = direction == Direction::kEnToEs ? en_es_ : es_en_;
  dict[lowercase(source_form)] = std::move(target_form);
}

std::optional<corpus::AlignmentRecord> TranslationLexicon::alignment(std::string_view record_id,
                                                                     Direction direction) const {
  const auto it = alignments_.find(record_id);
  if (it == alignments_.end()) return std::nullopt;
  return direction == Direction::kEnToEs ? it->second : it->second.inverted();
}

std::optional<std::string> TranslationLexicon::lookup(Direction direction,
                                                      std::string_view form) const {
  const auto& dict = direction == Direction::kEnToEs ? en_es_ : es_en_;
  const auto it = dict.find(lowercase(form));
  if (it == dict.end()) return std::nullopt;
  return it->second;
}

bool TranslationLexicon::has_dictionary(Direction direction) const {
  return !(direction == Direction::kEnToEs ? en_es_ : es_en_).empty();
}

TranslationLexicon TranslationLexicon::from_alignment_file(
    const corpus::ParallelCsCorpus& corpus, const std::filesystem::path& en_es_alignments) {
  std::vector<corpus::AlignmentRecord> lines = corpus::load_alignments(en_es_alignments);
  if (lines.size() != corpus.size()) {
    throw Error(ErrorKind::kValidation, en_es_alignments.string() + ": " +
                                            std::to_string(lines.size()) + " alignment lines for " +
                                            std::to_string(corpus.size()) + " corpus records");
  }
  TranslationLexicon lex;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    lex.add_alignment(corpus.records()[i].id, std::move(lines[i]));
  }
  return lex;
}

void TranslationLexicon::load_dictionary(Direction direction, std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 >= line.size()) {
      throw Error(ErrorKind::kParse,
                  "dictionary line " + std::to_string(line_no) + ": expected source<TAB>target");
    }
    add_entry(direction, line.substr(0, tab), line.substr(tab + 1));
  }
}

// ---- random replacement -----------------------------------------------------

SyntheticRecord gen_random(const corpus::ParallelCsRecord& record, const RandomOptions& options,
                           const TranslationLexicon& lexicon, GenerationTally* tally) {
  if (!(options.p_switch >= 0.0 && options.p_switch <= 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "p_switch must lie in [0, 1]");
  }
  const Language src_lang = source_language(options.direction);
  const Language tgt_lang = target_language(options.direction);
  const std::vector<std::string> source = corpus::tokenize(side(record, src_lang));
  const std::vector<std::string> target = corpus::tokenize(side(record, tgt_lang));
  const auto alignment = lexicon.alignment(record.id, options.direction);
  if (!alignment && !lexicon.has_dictionary(options.direction)) {
    throw Error(ErrorKind::kInvalidArgument, "record " + record.id + ": no alignment or dictionary for " +
                                                 std::string(to_string(options.direction)));
  }
  std::vector<std::vector<int>> aligned(source.size());
  if (alignment) {
    alignment->validate(source.size(), target.size());
    aligned = aligned_targets(*alignment, source.size());
  }

  GenerationTally local;
  local.source_tokens = source.size();
  SyntheticRecord out;
  out.id = record.id + "_randcs";
  out.method = Method::kRandom;
  out.source_id = record.id;
  Rng rng(derive_seed(options.seed, record.id));
  for (std::size_t i = 0; i < source.size(); ++i) {
    // Draw for every token so the stream does not depend on alignments.
    const bool do_switch = rng.uniform() < options.p_switch;
    if (!do_switch) {
      out.tokens.push_back(labelled(source[i], src_lang));
      continue;
    }
    ++local.switch_draws;
    std::vector<std::string> replacement;
    bool from_target_start = false;
    if (!aligned[i].empty()) {
      for (int t : aligned[i]) replacement.push_back(target[t]);
      from_target_start = aligned[i].front() == 0;
    } else if (auto entry = lexicon.lookup(options.direction, source[i])) {
      replacement = corpus::tokenize(*entry);
    }
    if (replacement.empty()) {
      ++local.unaligned_kept;
      out.tokens.push_back(labelled(source[i], src_lang));
      continue;
    }
    if (options.match_case) apply_case(source[i], replacement, from_target_start, out.tokens.empty());
    ++local.replaced;
    if (replacement.size() == 1 && replacement.front() == source[i]) ++local.noop;
    out.replaced_spans.push_back({static_cast<int>(i), static_cast<int>(i) + 1});
    for (std::string& r : replacement) out.tokens.push_back(labelled(std::move(r), tgt_lang));
  }
  out.text = join(out.tokens);
  if (tally != nullptr) *tally += local;
  return out;
}

// ---- noun-phrase replacement --------------------------------------------------

std::vector<NounPhraseSpan> identify_noun_phrases(const corpus::ConlluSentence& sentence,
                                                  const NpRules& rules) {
  const int n = static_cast<int>(sentence.words.size());
  std::vector<std::vector<int>> children(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const int head = sentence.words[i].head;
    if (head > 0 && head <= n) children[head - 1].push_back(i);
  }
  std::vector<NounPhraseSpan> candidates;
  for (int h = 0; h < n; ++h) {
    if (!rules.head_upos.count(sentence.words[h].upos)) continue;
    int lo = h, hi = h;
    std::vector<int> stack{h};
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      for (int c : children[u]) {
        if (!rules.relations.count(std::string(base_relation(sentence.words[c].deprel)))) continue;
        lo = std::min(lo, c);
        hi = std::max(hi, c);
        stack.push_back(c);
      }
    }
    candidates.push_back({lo, hi + 1});
  }
  std::sort(candidates.begin(), candidates.end(), [](const NounPhraseSpan& a, const NounPhraseSpan& b) {
    const int la = a.end - a.start, lb = b.end - b.start;
    return la != lb ? la > lb : a.start < b.start;
  });
  std::vector<NounPhraseSpan> kept;
  for (const NounPhraseSpan& c : candidates) {
    const bool overlaps = std::any_of(kept.begin(), kept.end(), [&](const NounPhraseSpan& k) {
      return c.start < k.end && k.start < c.end;
    });
    if (!overlaps) kept.push_back(c);
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

SyntheticRecord gen_np(const corpus::ParallelCsRecord& record,
                       const corpus::ConlluSentence& matrix_parse, const NpOptions& options,
                       const TranslationLexicon& lexicon, GenerationTally* tally) {
  const Direction direction =
      options.matrix == Language::kEn ? Direction::kEnToEs : Direction::kEsToEn;
  const Language src_lang = options.matrix;
  const Language tgt_lang = target_language(direction);
  const std::vector<std::string> source = matrix_parse.forms();
  const std::vector<std::string> target = corpus::tokenize(side(record, tgt_lang));
  const auto alignment = lexicon.alignment(record.id, direction);
  if (!alignment) {
    throw Error(ErrorKind::kInvalidArgument, "record " + record.id + ": no alignment available");
  }
  alignment->validate(source.size(), target.size());
  const auto aligned = aligned_targets(*alignment, source.size());

  GenerationTally local;
  local.source_tokens = source.size();
  SyntheticRecord out;
  out.id = record.id + (options.matrix == Language::kEn ? "_npen" : "_npes");
  out.method = options.matrix == Language::kEn ? Method::kNpEnMatrix : Method::kNpEsMatrix;
  out.source_id = record.id;

  const std::vector<NounPhraseSpan> spans = identify_noun_phrases(matrix_parse, options.rules);
  local.spans_found = spans.size();
  std::size_t next_span = 0;
  for (int i = 0; i < static_cast<int>(source.size());) {
    if (next_span < spans.size() && spans[next_span].start == i) {
      const NounPhraseSpan span = spans[next_span++];
      std::vector<int> targets;
      for (int s = span.start; s < span.end; ++s) {
        targets.insert(targets.end(), aligned[s].begin(), aligned[s].end());
      }
      std::sort(targets.begin(), targets.end());
      targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
      if (targets.empty()) {
        ++local.skipped_spans;
        for (int s = span.start; s < span.end; ++s) out.tokens.push_back(labelled(source[s], src_lang));
      } else {
        std::vector<std::string> replacement;
        for (int t : targets) replacement.push_back(target[t]);
        if (options.match_case) {
          apply_case(source[span.start], replacement, targets.front() == 0, out.tokens.empty());
        }
        std::vector<std::string> original(source.begin() + span.start, source.begin() + span.end);
        ++local.replaced;
        if (replacement == original) ++local.noop;
        out.replaced_spans.push_back(span);
        for (std::string& r : replacement) out.tokens.push_back(labelled(std::move(r), tgt_lang));
      }
      i = span.end;
      continue;
    }
    out.tokens.push_back(labelled(source[i], src_lang));
    ++i;
  }
  out.text = join(out.tokens);
  if (tally != nullptr) *tally += local;
  return out;
}

// ---- corpus level -----------------------------------------------------------

GenerationOutput gen_corpus(const corpus::ParallelCsCorpus& corpus, const GenerationParams& params,
                            const TranslationLexicon& lexicon,
                            const std::map<std::string, corpus::ConlluSentence>* parses, int jobs) {
  const auto& records = corpus.records();
  std::vector<std::optional<SyntheticRecord>> slots(records.size());
  std::vector<GenerationTally> tallies(records.size());
  std::vector<std::string> failures(records.size());

  parallel_for(records.size(), jobs, [&](std::size_t i) {
    const corpus::ParallelCsRecord& r = records[i];
    try {
      if (params.method == Method::kRandom) {
        slots[i] = gen_random(r, params.random, lexicon, &tallies[i]);
        return;
      }
      if (parses == nullptr || !parses->count(r.id)) {
        failures[i] = "no matrix-side parse";
        return;
      }
      NpOptions np = params.np;
      np.matrix = params.method == Method::kNpEnMatrix ? Language::kEn : Language::kEs;
      slots[i] = gen_np(r, parses->at(r.id), np, lexicon, &tallies[i]);
    } catch (const Error& e) {
      failures[i] = e.what();
    }
  });

  GenerationOutput out;
  out.report.method = params.method;
  out.report.n_input = records.size();
  std::vector<corpus::LidSentence> labelled_output;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!slots[i]) {
      out.report.skipped.emplace_back(records[i].id, failures[i]);
      continue;
    }
    out.report.tally += tallies[i];
    labelled_output.push_back({slots[i]->id, slots[i]->tokens});
    out.records.push_back(std::move(*slots[i]));
  }
  out.report.stats = corpus::corpus_stats(labelled_output);
  return out;
}

void write_synthetic(std::ostream& out, std::span<const SyntheticRecord> records) {
  for (const SyntheticRecord& r : records) {
    nlohmann::json spans = nlohmann::json::array();
    for (const NounPhraseSpan& s : r.replaced_spans) spans.push_back({s.start, s.end});
    nlohmann::json obj;
    obj["id"] = r.id;
    obj["text"] = r.text;
    obj["method"] = std::string(to_string(r.method));
    obj["source_id"] = r.source_id;
    obj["replaced_spans"] = std::move(spans);
    out << obj.dump() << '\n';
  }
}

nlohmann::json stats_json(const corpus::CorpusStats& stats) {
  nlohmann::json j;
  j["n_tokens"] = stats.n_tokens;
  for (std::size_t c = 0; c < corpus::kNumStatsCategories; ++c) {
    const auto cat = static_cast<corpus::StatsCategory>(c);
    j[std::string(corpus::to_string(cat))] = {{"count", stats.count(cat)}, {"percent", stats.percent(cat)}};
  }
  return j;
}

nlohmann::json report_json(const GenerationReport& report) {
  nlohmann::json skipped = nlohmann::json::array();
  for (const auto& [id, reason] : report.skipped) skipped.push_back({{"id", id}, {"reason", reason}});
  const GenerationTally& t = report.tally;
  nlohmann::json j;
  j["method"] = std::string(to_string(report.method));
  j["n_input"] = report.n_input;
  j["n_generated"] = report.n_input - report.skipped.size();
  j["skipped"] = std::move(skipped);
  j["tally"] = {{"source_tokens", t.source_tokens}, {"switch_draws", t.switch_draws},
                {"replaced", t.replaced},           {"noop", t.noop},
                {"unaligned_kept", t.unaligned_kept}, {"spans_found", t.spans_found},
                {"skipped_spans", t.skipped_spans}};
  j["stats"] = stats_json(report.stats);
  return j;
}

}  // namespace csprobe::csgen
