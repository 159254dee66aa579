#include "csprobe/embedstore.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

#include <json.hpp>

#include "csprobe/error.hpp"

namespace csprobe::embed {
namespace {

static_assert(std::endian::native == std::endian::little,
              "CSEM I/O assumes a little-endian host");
static_assert(sizeof(float) == 4 && std::numeric_limits<float>::is_iec559);

constexpr char kMagic[4] = {'C', 'S', 'E', 'M'};
constexpr std::uint32_t kMaxIdBytes = 1u << 20;

class Writer {
 public:
  explicit Writer(std::vector<std::uint8_t>& out) : out_(out) {}

  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    out_.insert(out_.end(), p, p + n);
  }
  void u16(std::uint16_t v) { bytes(&v, sizeof v); }
  void u32(std::uint32_t v) { bytes(&v, sizeof v); }

 private:
  std::vector<std::uint8_t>& out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  std::size_t remaining() const { return in_.size() - pos_; }

  void need(std::size_t n, const char* what) const {
    if (n > remaining()) {
      throw Error(ErrorKind::kTruncated, std::string("container truncated while reading ") + what);
    }
  }
  const std::uint8_t* take(std::size_t n, const char* what) {
    need(n, what);
    const std::uint8_t* p = in_.data() + pos_;
    pos_ += n;
    return p;
  }
  std::uint16_t u16(const char* what) {
    std::uint16_t v;
    std::memcpy(&v, take(sizeof v, what), sizeof v);
    return v;
  }
  std::uint32_t u32(const char* what) {
    std::uint32_t v;
    std::memcpy(&v, take(sizeof v, what), sizeof v);
    return v;
  }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

void check_finite(const FloatRows& m, std::string_view id) {
  if (!m.allFinite()) {
    throw Error(ErrorKind::kNonFinite, "record \"" + std::string(id) + "\" contains NaN or Inf");
  }
}

}  // namespace

std::string_view to_string(EmbeddingKind kind) {
  switch (kind) {
    case EmbeddingKind::kWord: return "word";
    case EmbeddingKind::kSentenceCls: return "sentence_cls";
    case EmbeddingKind::kSentenceMean: return "sentence_mean";
    case EmbeddingKind::kProbeMatrix: return "probe_matrix";
  }
  return "?";
}

std::optional<EmbeddingKind> parse_embedding_kind(std::string_view text) {
  for (EmbeddingKind k : {EmbeddingKind::kWord, EmbeddingKind::kSentenceCls,
                          EmbeddingKind::kSentenceMean, EmbeddingKind::kProbeMatrix}) {
    if (to_string(k) == text) return k;
  }
  return std::nullopt;
}

bool is_sentence_kind(EmbeddingKind kind) {
  return kind == EmbeddingKind::kSentenceCls || kind == EmbeddingKind::kSentenceMean;
}

void EmbeddingSet::validate() const {
  if (dim <= 0) throw Error(ErrorKind::kValidation, "embedding dim must be positive");
  if (layer < 0) throw Error(ErrorKind::kValidation, "embedding layer must be >= 0");
  for (const auto& [id, m] : records) {
    if (m.cols() != dim) {
      throw Error(ErrorKind::kValidation, "record \"" + id + "\" has " +
                                              std::to_string(m.cols()) + " columns, expected " +
                                              std::to_string(dim));
    }
    if (is_sentence_kind(kind) && m.rows() != 1) {
      throw Error(ErrorKind::kValidation,
                  "record \"" + id + "\" of a sentence-level set must have exactly 1 row");
    }
    check_finite(m, id);
  }
}

const FloatRows& EmbeddingSet::at(std::string_view id) const {
  const auto it = records.find(id);
  if (it == records.end()) {
    throw Error(ErrorKind::kValidation, "no embedding record for sentence \"" + std::string(id) + "\"");
  }
  return it->second;
}

bool EmbeddingSet::operator==(const EmbeddingSet& other) const {
  if (model_name != other.model_name || layer != other.layer || kind != other.kind ||
      dim != other.dim || records.size() != other.records.size()) {
    return false;
  }
  auto a = records.begin();
  auto b = other.records.begin();
  for (; a != records.end(); ++a, ++b) {
    if (a->first != b->first || a->second.rows() != b->second.rows() ||
        a->second.cols() != b->second.cols()) {
      return false;
    }
    // Bitwise comparison so that round-trip checks are exact.
    if (std::memcmp(a->second.data(), b->second.data(),
                    sizeof(float) * static_cast<std::size_t>(a->second.size())) != 0) {
      return false;
    }
  }
  return true;
}

std::string header_json(const EmbeddingSet& set) {
  nlohmann::json h;
  h["model"] = set.model_name;
  h["layer"] = set.layer;
  h["kind"] = std::string(to_string(set.kind));
  h["dim"] = set.dim;
  h["count"] = set.records.size();
  return h.dump();
}

std::size_t container_size(const EmbeddingSet& set) {
  std::size_t total = kFixedHeaderBytes + header_json(set).size();
  for (const auto& [id, m] : set.records) {
    total += kRecordOverheadBytes + id.size() + sizeof(float) * static_cast<std::size_t>(m.size());
  }
  return total;
}

std::vector<std::uint8_t> serialize_container(const EmbeddingSet& set) {
  set.validate();
  std::vector<std::uint8_t> out;
  out.reserve(container_size(set));
  Writer w(out);
  const std::string header = header_json(set);
  w.bytes(kMagic, sizeof kMagic);
  w.u16(kContainerVersion);
  w.u16(0);
  w.u32(static_cast<std::uint32_t>(header.size()));
  w.bytes(header.data(), header.size());
  for (const auto& [id, m] : set.records) {
    w.u32(static_cast<std::uint32_t>(id.size()));
    w.bytes(id.data(), id.size());
    w.u32(static_cast<std::uint32_t>(m.rows()));
    w.bytes(m.data(), sizeof(float) * static_cast<std::size_t>(m.size()));
  }
  return out;
}

EmbeddingSet deserialize_container(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  if (bytes.size() < sizeof kMagic || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
    throw Error(ErrorKind::kBadMagic, "not a CSEM container (bad magic)");
  }
  r.take(sizeof kMagic, "magic");
  const std::uint16_t version = r.u16("version");
  if (version != kContainerVersion) {
    throw Error(ErrorKind::kUnsupportedVersion,
                "unsupported CSEM version " + std::to_string(version));
  }
  r.u16("reserved");
  const std::uint32_t header_len = r.u32("header length");
  const auto* header_bytes = r.take(header_len, "header");
  nlohmann::json h;
  try {
    h = nlohmann::json::parse(header_bytes, header_bytes + header_len);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("CSEM header is not valid JSON: ") + e.what());
  }

  EmbeddingSet set;
  std::uint64_t count = 0;
  try {
    set.model_name = h.at("model").get<std::string>();
    set.layer = h.at("layer").get<int>();
    const std::string kind = h.at("kind").get<std::string>();
    const auto parsed = parse_embedding_kind(kind);
    if (!parsed) throw Error(ErrorKind::kParse, "unknown embedding kind \"" + kind + "\"");
    set.kind = *parsed;
    set.dim = h.at("dim").get<int>();
    count = h.at("count").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("CSEM header missing or mistyped field: ") + e.what());
  }
  if (set.dim <= 0) throw Error(ErrorKind::kValidation, "CSEM header dim must be positive");
  if (set.layer < 0) throw Error(ErrorKind::kValidation, "CSEM header layer must be >= 0");
  // Each record needs at least its fixed overhead, so a count larger than
  // that allows is corrupt.
  if (count > r.remaining() / kRecordOverheadBytes) {
    throw Error(ErrorKind::kTruncated, "CSEM record count exceeds file size");
  }

  const std::size_t row_bytes = sizeof(float) * static_cast<std::size_t>(set.dim);
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::uint32_t id_len = r.u32("record id length");
    if (id_len > kMaxIdBytes) throw Error(ErrorKind::kValidation, "record id too long");
    const auto* id_bytes = r.take(id_len, "record id");
    std::string id(reinterpret_cast<const char*>(id_bytes), id_len);
    const std::uint32_t n_rows = r.u32("record row count");
    if (n_rows > r.remaining() / row_bytes) {
      throw Error(ErrorKind::kTruncated, "record \"" + id + "\" truncated");
    }
    FloatRows m(n_rows, set.dim);
    std::memcpy(m.data(), r.take(n_rows * row_bytes, "record data"), n_rows * row_bytes);
    check_finite(m, id);
    if (!set.records.emplace(std::move(id), std::move(m)).second) {
      throw Error(ErrorKind::kValidation, "duplicate record id in container");
    }
  }
  if (r.remaining() != 0) {
    throw Error(ErrorKind::kValidation, "trailing bytes after last CSEM record");
  }
  set.validate();
  return set;
}

EmbeddingSet read_container(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                        std::istreambuf_iterator<char>());
  try {
    return deserialize_container(bytes);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

void write_container(const EmbeddingSet& set, const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = serialize_container(set);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::kIo, "write failed for " + path.string());
}

WordVector mean_pool(const Eigen::MatrixXd& words) {
  if (words.rows() == 0) throw Error(ErrorKind::kInvalidArgument, "mean_pool: no rows");
  return words.colwise().mean().transpose();
}

WordVector mean_pool(const FloatRows& words) {
  return mean_pool(to_double(words));
}

Eigen::MatrixXd to_double(const FloatRows& rows) {
  return rows.cast<double>();
}

}  // namespace csprobe::embed
