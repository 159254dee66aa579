#pragma once

// Synthetic code-switching from parallel translations: random token
// replacement and noun-phrase replacement, both driven by word alignments
// with an optional dictionary fallback.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "csprobe/corpus.hpp"

namespace csprobe::csgen {

enum class Language { kEn, kEs };
enum class Direction { kEnToEs, kEsToEn };
enum class Method { kRandom, kNpEnMatrix, kNpEsMatrix };

std::string_view to_string(Direction d);
std::string_view to_string(Method m);
std::optional<Direction> parse_direction(std::string_view text);

Language source_language(Direction d);
Language target_language(Direction d);

struct NounPhraseSpan {
  int start = 0;
  int end = 0;  // exclusive
  bool operator==(const NounPhraseSpan&) const = default;
  auto operator<=>(const NounPhraseSpan&) const = default;
};

class TranslationLexicon {
 public:
  // Alignment in en->es orientation: first index into the English tokens,
  // second into the Spanish tokens.
  void add_alignment(std::string record_id, corpus::AlignmentRecord en_es);
  // Keys are stored lowercased.
  void add_entry(Direction direction, std::string_view source_form, std::string target_form);

  // Pairs oriented source->target for the direction, if the record has one.
  std::optional<corpus::AlignmentRecord> alignment(std::string_view record_id,
                                                   Direction direction) const;
  std::optional<std::string> lookup(Direction direction, std::string_view form) const;
  bool has_dictionary(Direction direction) const;

  // Alignment lines are matched to corpus records by position.
  static TranslationLexicon from_alignment_file(const corpus::ParallelCsCorpus& corpus,
                                                const std::filesystem::path& en_es_alignments);
  // "source<TAB>target" lines.
  void load_dictionary(Direction direction, std::istream& in);

 private:
  std::map<std::string, corpus::AlignmentRecord, std::less<>> alignments_;
  std::map<std::string, std::string, std::less<>> en_es_;
  std::map<std::string, std::string, std::less<>> es_en_;
};

struct SyntheticRecord {
  std::string id;
  std::string text;
  Method method = Method::kRandom;
  std::string source_id;
  std::vector<NounPhraseSpan> replaced_spans;  // over source-side token indices
  std::vector<corpus::LidToken> tokens;        // output tokens with language labels
};

struct GenerationTally {
  std::size_t source_tokens = 0;
  std::size_t switch_draws = 0;     // tokens selected for replacement
  std::size_t replaced = 0;         // selected and actually replaced
  std::size_t noop = 0;             // replaced by an identical form
  std::size_t unaligned_kept = 0;   // selected but nothing to replace with
  std::size_t spans_found = 0;
  std::size_t skipped_spans = 0;    // noun phrases with no aligned target tokens

  GenerationTally& operator+=(const GenerationTally& o);
};

struct RandomOptions {
  Direction direction = Direction::kEnToEs;
  double p_switch = 0.5;
  std::uint64_t seed = 0;
  bool match_case = true;
};

SyntheticRecord gen_random(const corpus::ParallelCsRecord& record, const RandomOptions& options,
                           const TranslationLexicon& lexicon, GenerationTally* tally = nullptr);

struct NpRules {
  std::set<std::string> head_upos = {"NOUN", "PROPN", "PRON"};
  // Matched on the universal part of the relation ("flat:name" -> "flat").
  std::set<std::string> relations = {"det", "amod", "nummod", "compound", "flat"};
};

// For each nominal head, the span from its leftmost to rightmost word
// reachable through the allowed relations. Overlaps resolve to the outermost
// (longest, then leftmost) span. Indices are 0-based word positions.
std::vector<NounPhraseSpan> identify_noun_phrases(const corpus::ConlluSentence& sentence,
                                                  const NpRules& rules = {});

struct NpOptions {
  Language matrix = Language::kEn;
  bool match_case = true;
  NpRules rules;
};

// The parse supplies the matrix-side tokens; alignment indices refer to them.
SyntheticRecord gen_np(const corpus::ParallelCsRecord& record,
                       const corpus::ConlluSentence& matrix_parse, const NpOptions& options,
                       const TranslationLexicon& lexicon, GenerationTally* tally = nullptr);

struct GenerationParams {
  Method method = Method::kRandom;
  RandomOptions random;
  NpOptions np;  // matrix is derived from method
};

struct GenerationReport {
  Method method = Method::kRandom;
  std::size_t n_input = 0;
  std::vector<std::pair<std::string, std::string>> skipped;  // (record id, reason)
  GenerationTally tally;
  corpus::CorpusStats stats;
};

struct GenerationOutput {
  std::vector<SyntheticRecord> records;
  GenerationReport report;
};

// parses maps record id -> matrix-side parse (needed for NP methods only).
GenerationOutput gen_corpus(const corpus::ParallelCsCorpus& corpus, const GenerationParams& params,
                            const TranslationLexicon& lexicon,
                            const std::map<std::string, corpus::ConlluSentence>* parses = nullptr,
                            int jobs = 1);

void write_synthetic(std::ostream& out, std::span<const SyntheticRecord> records);
nlohmann::json report_json(const GenerationReport& report);
nlohmann::json stats_json(const corpus::CorpusStats& stats);

}  // namespace csprobe::csgen
