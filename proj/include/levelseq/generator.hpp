#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "levelseq/codec.hpp"
#include "levelseq/lstm.hpp"
#include "levelseq/pathfinder.hpp"

namespace levelseq {

inline constexpr int kSeedColumns = 3;
inline constexpr int kMaxGeneratedColumns = 600;

enum class SeedKind { Aboveground, Underground, Custom };

std::string_view to_string(SeedKind kind);

// Three opening columns that prime generation.
struct SeedSpec {
  SeedKind kind = SeedKind::Aboveground;
  TileGrid grid;

  static SeedSpec builtin(SeedKind kind);
  static SeedSpec from_file(const std::filesystem::path& path, const CharMap& map = CharMap{});

  // LevelStart, the three columns, and any depth markers opening column 3.
  // Path specs annotate the seed first.
  std::vector<int> tokens(EncodingSpec spec, const MovementModel& movement,
                          int slack = kDefaultSlack) const;
};

// Tokens needed for a max-width level under `spec`, plus LevelStart/End.
std::size_t default_max_tokens(EncodingSpec spec, int max_columns = kMaxGeneratedColumns);

struct GeneratedLevel {
  enum class Status { Ok, Overflow, Malformed };
  Status status = Status::Ok;
  TokenSequence sequence;
  std::optional<TileGrid> grid;  // lenient decode, path markers kept
  std::vector<DecodeWarning> warnings;
  std::string error;

  std::size_t column_integrity_warnings() const {
    return static_cast<std::size_t>(std::count_if(warnings.begin(), warnings.end(),
                                                  [](const auto& w) { return w.column_integrity(); }));
  }
};

std::string_view to_string(GeneratedLevel::Status status);

// Samples until LevelEnd or `max_tokens`, then decodes leniently.
GeneratedLevel generate_level(const LstmModel& model, EncodingSpec spec,
                              std::span<const int> seed_tokens, double temperature, Rng& rng,
                              std::size_t max_tokens);

struct GenerationJob {
  SeedSpec seed;
  int count = 1;
  double temperature = 1.0;
  std::size_t max_tokens = 0;  // 0: default_max_tokens(spec)
  std::uint64_t master_seed = 1;
  int jobs = 1;
  int slack = kDefaultSlack;
};

struct BatchEntry {
  int index = 0;
  std::uint64_t rng_seed = 0;
  GeneratedLevel level;
};

// Level i draws from Rng(derive_seed(master_seed, i)); output does not depend
// on `jobs`.
std::vector<BatchEntry> sample_batch(const LstmModel& model, EncodingSpec spec,
                                     const GenerationJob& job, const MovementModel& movement);

// Writes level_NNNN.txt (paths stripped), level_NNNN.path.txt for path specs,
// the raw sequences, and returns the batch manifest.
nlohmann::json write_batch(const std::vector<BatchEntry>& batch, EncodingSpec spec,
                           const GenerationJob& job, const std::filesystem::path& out_dir);

}  // namespace levelseq
