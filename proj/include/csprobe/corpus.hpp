#pragma once

// Corpus ingestion: parallel code-switched JSONL, token-level LID files,
// CoNLL-U treebanks and Pharaoh alignments, plus Table-style token statistics.

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace csprobe::corpus {

enum class LidLabel { kLang1, kLang2, kOther, kNe, kFw, kMixed, kUnk, kAmbiguous };

inline constexpr std::size_t kNumLidLabels = 8;
inline constexpr std::array<LidLabel, kNumLidLabels> kAllLidLabels = {
    LidLabel::kLang1, LidLabel::kLang2, LidLabel::kOther, LidLabel::kNe,
    LidLabel::kFw,    LidLabel::kMixed, LidLabel::kUnk,   LidLabel::kAmbiguous};

std::string_view to_string(LidLabel label);
std::optional<LidLabel> parse_lid_label(std::string_view text);

struct LidToken {
  std::string form;
  LidLabel label = LidLabel::kOther;
  bool operator==(const LidToken&) const = default;
};

struct LidSentence {
  std::string id;  // from a "# id = ..." comment, else a zero-padded ordinal
  std::vector<LidToken> tokens;
  bool operator==(const LidSentence&) const = default;
};

struct ParallelCsRecord {
  std::string id;
  std::string cs;
  std::string es;
  std::string en;
  std::optional<std::vector<LidToken>> cs_tokens;
  bool operator==(const ParallelCsRecord&) const = default;
};

class ParallelCsCorpus {
 public:
  ParallelCsCorpus() = default;
  // Validates every record and id uniqueness.
  explicit ParallelCsCorpus(std::vector<ParallelCsRecord> records);

  const std::vector<ParallelCsRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  const ParallelCsRecord* find(std::string_view id) const;

  bool operator==(const ParallelCsCorpus& other) const { return records_ == other.records_; }

 private:
  std::vector<ParallelCsRecord> records_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

struct ConlluWord {
  int index = 0;  // 1-based
  std::string form;
  std::string lemma = "_";
  std::string upos = "_";
  std::string xpos = "_";
  std::string feats = "_";
  int head = 0;  // 0 = root
  std::string deprel = "_";
  std::string deps = "_";
  std::string misc = "_";
  bool operator==(const ConlluWord&) const = default;
};

struct ConlluSentence {
  std::string sent_id;
  std::vector<ConlluWord> words;
  bool operator==(const ConlluSentence&) const = default;

  std::vector<std::string> forms() const;
};

// Pharaoh "i-j" pairs, 0-based: src index into the first sentence of the
// pair, tgt index into the second.
struct AlignmentRecord {
  std::vector<std::pair<int, int>> pairs;
  bool operator==(const AlignmentRecord&) const = default;

  void validate(std::size_t src_len, std::size_t tgt_len) const;
  AlignmentRecord inverted() const;
};

// Whitespace tokenization; punctuation stays attached.
std::vector<std::string> tokenize(std::string_view text);
std::string normalize_whitespace(std::string_view text);

// Returns an empty string if heads (1-based, 0 = root) describe a single
// rooted tree, otherwise a description of the first violation.
std::string tree_violation(std::span<const int> heads);

// ---- loading / writing -------------------------------------------------

ParallelCsCorpus parse_parallel_corpus(std::istream& in);
ParallelCsCorpus load_parallel_corpus(const std::filesystem::path& path);
void write_parallel_corpus(std::ostream& out, const ParallelCsCorpus& corpus);

std::vector<LidSentence> parse_lid(std::istream& in);
std::vector<LidSentence> load_lid_file(const std::filesystem::path& path);
void write_lid(std::ostream& out, std::span<const LidSentence> sentences);

std::vector<ConlluSentence> parse_conllu(std::istream& in);
std::vector<ConlluSentence> load_conllu(const std::filesystem::path& path);
void write_conllu(std::ostream& out, std::span<const ConlluSentence> sentences);

std::vector<AlignmentRecord> parse_alignments(std::istream& in);
std::vector<AlignmentRecord> load_alignments(const std::filesystem::path& path);
void write_alignments(std::ostream& out, std::span<const AlignmentRecord> records);

// ---- statistics ----------------------------------------------------------

enum class StatsCategory { kEn, kEs, kOther, kNe, kUnk };
inline constexpr std::size_t kNumStatsCategories = 5;
std::string_view to_string(StatsCategory category);

// Maps each LID label onto one of the five reporting columns.
struct LabelCollapse {
  std::array<StatsCategory, kNumLidLabels> target = {
      StatsCategory::kEn,    // lang1
      StatsCategory::kEs,    // lang2
      StatsCategory::kOther, // other
      StatsCategory::kNe,    // ne
      StatsCategory::kOther, // fw
      StatsCategory::kOther, // mixed
      StatsCategory::kUnk,   // unk
      StatsCategory::kOther, // ambiguous
  };
  StatsCategory operator()(LidLabel label) const {
    return target[static_cast<std::size_t>(label)];
  }
};

struct CorpusStats {
  std::size_t n_tokens = 0;
  std::array<std::size_t, kNumStatsCategories> counts{};

  std::size_t count(StatsCategory c) const { return counts[static_cast<std::size_t>(c)]; }
  // Percentage of n_tokens, 0 for an empty corpus.
  double percent(StatsCategory c) const;
};

CorpusStats corpus_stats(std::span<const LidSentence> sentences,
                         const LabelCollapse& collapse = {});
// Uses each record's cs_tokens; throws kValidation naming the first record
// without per-token labels.
CorpusStats corpus_stats(const ParallelCsCorpus& corpus, const LabelCollapse& collapse = {});

// Keeps sentences with at least one lang1 and at least one lang2 token.
std::vector<LidSentence> intra_sentential_filter(std::span<const LidSentence> sentences);

}  // namespace csprobe::corpus
