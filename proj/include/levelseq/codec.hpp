#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "levelseq/level.hpp"

namespace levelseq {

// One of the eight level orderings.
struct EncodingSpec {
  bool snaking = false;
  bool paths = false;
  bool depth = false;

  // Bit order (snaking, paths, depth) = (4, 2, 1); 0..7.
  int code() const { return (snaking ? 4 : 0) | (paths ? 2 : 0) | (depth ? 1 : 0); }
  static EncodingSpec from_code(int code);
  static std::array<EncodingSpec, 8> all();

  // e.g. "S-P-D", "B-N-N"
  std::string label() const;

  friend bool operator==(EncodingSpec, EncodingSpec) = default;
};

inline constexpr int kDepthStride = 5;

// Tile tokens use the Tile enum value; structural tokens follow.
class Vocabulary {
 public:
  explicit Vocabulary(EncodingSpec spec);

  int size() const { return size_; }
  EncodingSpec spec() const { return spec_; }

  static constexpr int tile_token(Tile t) { return static_cast<int>(t); }
  static constexpr int column_delimiter() { return kGroundTruthTiles; }
  static constexpr int level_start() { return kGroundTruthTiles + 1; }
  static constexpr int level_end() { return kGroundTruthTiles + 2; }
  int path_marker() const { return path_marker_; }  // -1 if absent
  int depth_marker() const { return depth_marker_; }  // -1 if absent

  // Tile carried by a token, if it is a tile or path token.
  std::optional<Tile> tile_of(int token) const;
  std::optional<int> token_of(Tile t) const;

  std::string_view name(int token) const;
  std::optional<int> index_of(std::string_view name) const;

 private:
  EncodingSpec spec_;
  int size_ = 0;
  int path_marker_ = -1;
  int depth_marker_ = -1;
};

enum class Direction { Up, Down };  // Up: bottom-to-top

inline Direction flip(Direction d) { return d == Direction::Up ? Direction::Down : Direction::Up; }

struct TokenSequence {
  EncodingSpec spec;
  Direction start_dir = Direction::Up;
  std::vector<int> tokens;

  friend bool operator==(const TokenSequence&, const TokenSequence&) = default;
};

// One sequence, or two (starting up, then down) when snaking.
std::vector<TokenSequence> encode(const TileGrid& grid, EncodingSpec spec);
TokenSequence encode_with_direction(const TileGrid& grid, EncodingSpec spec,
                                    Direction start_dir);

// Tokens for the opening columns of a level, without the closing LevelEnd.
// Used to prime generation.
std::vector<int> encode_prefix(const TileGrid& grid, EncodingSpec spec,
                               Direction start_dir);

enum class DecodeMode { Strict, Lenient };

struct DecodeWarning {
  enum class Kind { ColumnLength, DepthCount, StrayToken };
  Kind kind;
  int column = 0;
  std::string message;

  // Violations of the 16-tiles-per-column structure.
  bool column_integrity() const { return kind != Kind::DepthCount; }
};

struct DecodeResult {
  TileGrid grid;
  std::vector<DecodeWarning> warnings;

  std::size_t column_integrity_warnings() const;
};

DecodeResult decode(const TokenSequence& seq, DecodeMode mode = DecodeMode::Strict);

TileGrid strip_path(TileGrid grid);

// Sequence file: a `#spec ...` header line per sequence followed by
// whitespace-separated token names.
std::string format_sequences(std::span<const TokenSequence> seqs);
std::vector<TokenSequence> parse_sequences(std::string_view text);

}  // namespace levelseq
