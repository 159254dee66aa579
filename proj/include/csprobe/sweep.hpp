#pragma once

// Layer-by-layer probe sweeps: sentence-level CS detection and token-level LID.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "csprobe/corpus.hpp"
#include "csprobe/embedstore.hpp"
#include "csprobe/probe.hpp"
#include "csprobe/stats.hpp"

namespace csprobe::probe {

inline constexpr std::uint64_t kDefaultSeeds[] = {0, 1, 2, 3, 4};

struct DataSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> dev;
  std::vector<std::size_t> test;
};

// Seeded shuffle of 0..n-1 cut into floor(0.8n) / floor(0.1n) / rest.
DataSplit split_80_10_10(std::size_t n, std::uint64_t seed);

struct LabelledSentence {
  std::string id;
  int label = 0;  // 0 monolingual, 1 code-switched
};

struct SweepRow {
  std::string model;
  int layer = 0;
  std::string pooling;
  std::uint64_t seed = 0;
  std::string split = "test";
  double f1_macro = 0.0;
  double f1_weighted = 0.0;
};

struct SweepSummary {
  std::string model;
  int layer = 0;
  std::string pooling;
  stats::SeedAggregate macro;
  stats::SeedAggregate weighted;
};

struct LayerSweepResult {
  std::vector<SweepRow> rows;          // sorted by (model, pooling, layer, seed)
  std::vector<SweepSummary> summary;   // sorted by (model, pooling, layer)
  std::vector<std::string> warnings;
};

// Either a container on disk or one already in memory.
struct LayerSource {
  std::filesystem::path path;
  const embed::EmbeddingSet* set = nullptr;
};

struct SweepOptions {
  ProbeTrainConfig cfg;
  std::vector<std::uint64_t> seeds{std::begin(kDefaultSeeds), std::end(kDefaultSeeds)};
  int jobs = 1;
};

// Sentence-level containers are used as-is; word-level containers are
// mean-pooled. Unreadable layers are skipped with a warning.
LayerSweepResult sentence_classification_sweep(std::span<const LayerSource> layers,
                                               std::span<const LabelledSentence> dataset,
                                               const SweepOptions& options);

// Token-level LID over the 8 labels. Word rows must align 1:1 with tokens.
LayerSweepResult lid_sweep(std::span<const LayerSource> layers,
                           std::span<const corpus::LidSentence> dataset,
                           const SweepOptions& options);

std::string pooling_name(embed::EmbeddingKind kind);

void write_sweep_csv(std::ostream& out, const LayerSweepResult& result);
nlohmann::json sweep_summary_json(const LayerSweepResult& result);

}  // namespace csprobe::probe
