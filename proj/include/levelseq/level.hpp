#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace levelseq {

// The 13 ground-truth categories come first, in vocabulary order.
// PathMarker only appears in path-annotated grids.
enum class Tile : std::uint8_t {
  Solid,
  Enemy,
  DestructibleBlock,
  QuestionCoin,
  QuestionPowerup,
  Coin,
  BulletTop,
  BulletColumn,
  PipeLeft,
  PipeRight,
  PipeTopLeft,
  PipeTopRight,
  Empty,
  PathMarker,
};

inline constexpr int kGroundTruthTiles = 13;
inline constexpr int kAllTiles = 14;
inline constexpr int kLevelHeight = 16;
inline constexpr int kWideLevelWarning = 500;

std::string_view tile_name(Tile t);
std::optional<Tile> tile_from_name(std::string_view name);

// Blocks movement and supports an agent standing on top of it.
constexpr bool is_solid(Tile t) {
  switch (t) {
    case Tile::Empty:
    case Tile::PathMarker:
    case Tile::Coin:
    case Tile::Enemy:
      return false;
    default:
      return true;
  }
}

// Geometry view: path annotations are air.
constexpr bool is_empty_like(Tile t) {
  return t == Tile::Empty || t == Tile::PathMarker;
}

struct Cell {
  int col = 0;
  int row = 0;

  friend constexpr bool operator==(Cell, Cell) = default;
  friend constexpr auto operator<=>(Cell, Cell) = default;
};

// width x 16 grid, row 0 at the top of the level.
class TileGrid {
 public:
  TileGrid() = default;
  explicit TileGrid(int width, Tile fill = Tile::Empty);

  int width() const { return width_; }
  static constexpr int height() { return kLevelHeight; }
  std::size_t size() const { return cells_.size(); }

  Tile at(int col, int row) const { return cells_[index(col, row)]; }
  Tile at(Cell c) const { return at(c.col, c.row); }
  void set(int col, int row, Tile t) { cells_[index(col, row)] = t; }
  void set(Cell c, Tile t) { set(c.col, c.row, t); }

  bool in_bounds(int col, int row) const {
    return col >= 0 && col < width_ && row >= 0 && row < kLevelHeight;
  }

  std::size_t index(int col, int row) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(col);
  }

  const std::vector<Tile>& cells() const { return cells_; }

  std::size_t count(Tile t) const;
  bool contains(Tile t) const { return count(t) > 0; }

  // Columns [first, first + n).
  TileGrid columns(int first, int n) const;

  friend bool operator==(const TileGrid&, const TileGrid&) = default;

 private:
  int width_ = 0;
  std::vector<Tile> cells_;
};

// Bijection between tiles and single ASCII characters.
class CharMap {
 public:
  CharMap();  // default community-style map

  static CharMap from_text(std::string_view text);
  static CharMap from_file(const std::filesystem::path& path);

  char to_char(Tile t) const { return chars_[static_cast<int>(t)]; }
  std::optional<Tile> to_tile(char c) const;

  std::string to_text() const;

 private:
  void rebuild_reverse();

  std::array<char, kAllTiles> chars_{};
  std::array<std::int8_t, 256> reverse_{};
};

TileGrid parse_level(std::string_view text, const CharMap& map = CharMap{});
std::string serialize_level(const TileGrid& grid, const CharMap& map = CharMap{});

// Raw corpus loading: PathMarker is rejected.
TileGrid load_level_file(const std::filesystem::path& path,
                         const CharMap& map = CharMap{},
                         bool allow_path_marker = false);
void save_level_file(const std::filesystem::path& path, const TileGrid& grid,
                     const CharMap& map = CharMap{});

// Sorted list of *.txt level files in a directory.
std::vector<std::filesystem::path> list_level_files(
    const std::filesystem::path& dir);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace levelseq
