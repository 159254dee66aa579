#pragma once

// CSEM embedding container.
//
// Layout, little-endian throughout:
//   "CSEM"            4 bytes magic
//   u16 version       = 1
//   u16 reserved      = 0
//   u32 header_len
//   header_len bytes  UTF-8 JSON {"count","dim","kind","layer","model"}
//   count records:    u32 id_len, id bytes, u32 n_rows,
//                     n_rows * dim float32, row-major
//
// One container holds one (model, layer, kind) triple. Records are written
// sorted by id, and the header JSON is emitted compactly with sorted keys,
// so writing is canonical.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace csprobe::embed {

using FloatRows = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using WordVector = Eigen::VectorXd;

enum class EmbeddingKind { kWord, kSentenceCls, kSentenceMean, kProbeMatrix };

std::string_view to_string(EmbeddingKind kind);
std::optional<EmbeddingKind> parse_embedding_kind(std::string_view text);
bool is_sentence_kind(EmbeddingKind kind);

inline constexpr std::uint16_t kContainerVersion = 1;
inline constexpr std::size_t kFixedHeaderBytes = 12;   // magic + version + reserved + header_len
inline constexpr std::size_t kRecordOverheadBytes = 8; // id_len + n_rows

struct EmbeddingSet {
  std::string model_name;
  int layer = 0;
  EmbeddingKind kind = EmbeddingKind::kWord;
  int dim = 0;
  std::map<std::string, FloatRows, std::less<>> records;

  // Throws kValidation / kNonFinite on any invariant violation.
  void validate() const;
  const FloatRows& at(std::string_view id) const;
  bool contains(std::string_view id) const { return records.find(id) != records.end(); }

  bool operator==(const EmbeddingSet& other) const;
};

// Canonical header JSON as stored in the container.
std::string header_json(const EmbeddingSet& set);

std::vector<std::uint8_t> serialize_container(const EmbeddingSet& set);
EmbeddingSet deserialize_container(std::span<const std::uint8_t> bytes);

EmbeddingSet read_container(const std::filesystem::path& path);
void write_container(const EmbeddingSet& set, const std::filesystem::path& path);

// Exact size of the serialized container.
std::size_t container_size(const EmbeddingSet& set);

// Arithmetic mean of the rows, computed in double precision.
WordVector mean_pool(const FloatRows& words);
WordVector mean_pool(const Eigen::MatrixXd& words);

// Rows as double precision.
Eigen::MatrixXd to_double(const FloatRows& rows);

}  // namespace csprobe::embed
