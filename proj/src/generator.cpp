#include "levelseq/generator.hpp"

#include <fmt/core.h>

#include "levelseq/error.hpp"

namespace levelseq {

std::string_view to_string(SeedKind kind) {
  switch (kind) {
    case SeedKind::Aboveground: return "above";
    case SeedKind::Underground: return "under";
    case SeedKind::Custom: return "custom";
  }
  return "?";
}

std::string_view to_string(GeneratedLevel::Status status) {
  switch (status) {
    case GeneratedLevel::Status::Ok: return "ok";
    case GeneratedLevel::Status::Overflow: return "overflow";
    case GeneratedLevel::Status::Malformed: return "malformed";
  }
  return "?";
}

SeedSpec SeedSpec::builtin(SeedKind kind) {
  if (kind == SeedKind::Custom) {
    throw Error(ErrorCode::InvalidConfig, "custom seeds are loaded from a file");
  }
  SeedSpec seed{kind, TileGrid(kSeedColumns)};
  for (int c = 0; c < kSeedColumns; ++c) {
    seed.grid.set(c, kLevelHeight - 1, Tile::Solid);
    seed.grid.set(c, kLevelHeight - 2, Tile::Solid);
    if (kind == SeedKind::Underground) seed.grid.set(c, 0, Tile::Solid);
  }
  return seed;
}

SeedSpec SeedSpec::from_file(const std::filesystem::path& path, const CharMap& map) {
  SeedSpec seed{SeedKind::Custom, load_level_file(path, map)};
  if (seed.grid.width() != kSeedColumns) {
    throw Error(ErrorCode::InvalidConfig,
                fmt::format("{}: seed must be {} columns wide, got {}", path.string(), kSeedColumns,
                            seed.grid.width()));
  }
  return seed;
}

std::vector<int> SeedSpec::tokens(EncodingSpec spec, const MovementModel& movement, int slack) const {
  TileGrid g = strip_path(grid);
  if (spec.paths) g = annotate_paths(g, movement, slack);
  return encode_prefix(g, spec, Direction::Up);
}

std::size_t default_max_tokens(EncodingSpec spec, int max_columns) {
  std::size_t n = 2;
  for (int c = 0; c < max_columns; ++c) {
    n += kLevelHeight + 1;
    if (spec.depth) n += static_cast<std::size_t>(c / kDepthStride);
  }
  return n;
}

GeneratedLevel generate_level(const LstmModel& model, EncodingSpec spec,
                              std::span<const int> seed_tokens, double temperature, Rng& rng,
                              std::size_t max_tokens) {
  if (seed_tokens.empty()) throw Error(ErrorCode::InvalidConfig, "empty seed");
  if (max_tokens < seed_tokens.size()) {
    throw Error(ErrorCode::InvalidConfig, "max_tokens is shorter than the seed");
  }
  const Vocabulary vocab(spec);
  if (vocab.size() != model.vocab_size()) {
    throw Error(ErrorCode::ShapeMismatch,
                fmt::format("model vocabulary {} does not match encoding {} ({} tokens)",
                            model.vocab_size(), spec.label(), vocab.size()));
  }
  GeneratedLevel out;
  out.sequence = {spec, Direction::Up, {seed_tokens.begin(), seed_tokens.end()}};
  auto& toks = out.sequence.tokens;

  LstmState state = LstmState::zeros(model);
  for (std::size_t i = 0; i + 1 < seed_tokens.size(); ++i) forward_step(model, state, seed_tokens[i]);
  int last = toks.back();
  while (last != Vocabulary::level_end()) {
    if (toks.size() >= max_tokens) {
      out.status = GeneratedLevel::Status::Overflow;
      out.error = fmt::format("no LevelEnd within {} tokens", max_tokens);
      return out;
    }
    last = sample_next(model, state, last, temperature, rng);
    toks.push_back(last);
  }
  try {
    auto decoded = decode(out.sequence, DecodeMode::Lenient);
    out.grid = std::move(decoded.grid);
    out.warnings = std::move(decoded.warnings);
  } catch (const Error& e) {
    out.status = GeneratedLevel::Status::Malformed;
    out.error = e.what();
  }
  return out;
}

std::vector<BatchEntry> sample_batch(const LstmModel& model, EncodingSpec spec,
                                     const GenerationJob& job, const MovementModel& movement) {
  if (job.count < 1) throw Error(ErrorCode::InvalidConfig, "count must be at least 1");
  const auto seed_tokens = job.seed.tokens(spec, movement, job.slack);
  const std::size_t cap = job.max_tokens > 0 ? job.max_tokens : default_max_tokens(spec);
  std::vector<BatchEntry> batch(static_cast<std::size_t>(job.count));
  const int threads = std::max(1, job.jobs);
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (int i = 0; i < job.count; ++i) {
    auto& entry = batch[static_cast<std::size_t>(i)];
    entry.index = i;
    entry.rng_seed = derive_seed(job.master_seed, static_cast<std::uint64_t>(i));
    Rng rng(entry.rng_seed);
    entry.level = generate_level(model, spec, seed_tokens, job.temperature, rng, cap);
  }
  return batch;
}

nlohmann::json write_batch(const std::vector<BatchEntry>& batch, EncodingSpec spec,
                           const GenerationJob& job, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  nlohmann::json levels = nlohmann::json::array();
  int overflow = 0;
  int malformed = 0;
  int clean = 0;
  int ok = 0;
  for (const auto& e : batch) {
    const auto stem = fmt::format("level_{:04d}", e.index);
    nlohmann::json entry{{"index", e.index},
                         {"rng_seed", e.rng_seed},
                         {"status", to_string(e.level.status)},
                         {"tokens", e.level.sequence.tokens.size()}};
    write_text_file(out_dir / (stem + ".seq"), format_sequences(std::span(&e.level.sequence, 1)));
    if (e.level.status == GeneratedLevel::Status::Ok) {
      ++ok;
      write_text_file(out_dir / (stem + ".txt"), serialize_level(strip_path(*e.level.grid)));
      entry["level_file"] = stem + ".txt";
      if (spec.paths) {
        write_text_file(out_dir / (stem + ".path.txt"), serialize_level(*e.level.grid));
        entry["path_file"] = stem + ".path.txt";
      }
      nlohmann::json warnings = nlohmann::json::array();
      for (const auto& w : e.level.warnings) warnings.push_back(w.message);
      entry["warnings"] = warnings;
      const auto integrity = e.level.column_integrity_warnings();
      entry["column_integrity_warnings"] = integrity;
      if (integrity == 0) ++clean;
    } else {
      entry["error"] = e.level.error;
      (e.level.status == GeneratedLevel::Status::Overflow ? overflow : malformed) += 1;
    }
    levels.push_back(std::move(entry));
  }
  nlohmann::json manifest{
      {"spec", {{"snaking", spec.snaking}, {"paths", spec.paths}, {"depth", spec.depth}}},
      {"seed_kind", to_string(job.seed.kind)},
      {"count", job.count},
      {"temperature", job.temperature},
      {"max_tokens", job.max_tokens > 0 ? job.max_tokens : default_max_tokens(spec)},
      {"master_seed", job.master_seed},
      {"decoded", ok},
      {"overflow_count", overflow},
      {"malformed_count", malformed},
      {"zero_warning_fraction",
       batch.empty() ? 0.0 : static_cast<double>(clean) / static_cast<double>(batch.size())},
      {"levels", levels},
  };
  write_text_file(out_dir / "batch.json", manifest.dump(2) + "\n");
  return manifest;
}

}  // namespace levelseq
