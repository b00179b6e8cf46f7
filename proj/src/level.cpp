#include "levelseq/level.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <fmt/core.h>
#include <spdlog/spdlog.h>

#include "levelseq/error.hpp"

namespace levelseq {

namespace {

constexpr std::array<std::string_view, kAllTiles> kTileNames = {
    "Solid",        "Enemy",    "DestructibleBlock", "QuestionCoin",
    "QuestionPowerup", "Coin",  "BulletTop",         "BulletColumn",
    "PipeLeft",     "PipeRight", "PipeTopLeft",      "PipeTopRight",
    "Empty",        "PathMarker",
};

constexpr std::array<char, kAllTiles> kDefaultChars = {
    'X', 'E', 'S', '?', 'Q', 'o', 'B', 'b', '[', ']', '<', '>', '-', 'x',
};

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) {
      lines.push_back(text.substr(pos));
      break;
    }
    lines.push_back(text.substr(pos, nl - pos));
    pos = nl + 1;
  }
  return lines;
}

}  // namespace

std::string_view tile_name(Tile t) { return kTileNames[static_cast<int>(t)]; }

std::optional<Tile> tile_from_name(std::string_view name) {
  for (int i = 0; i < kAllTiles; ++i) {
    if (kTileNames[i] == name) return static_cast<Tile>(i);
  }
  return std::nullopt;
}

TileGrid::TileGrid(int width, Tile fill)
    : width_(width),
      cells_(static_cast<std::size_t>(std::max(width, 0)) * kLevelHeight, fill) {
  if (width < 1) {
    throw Error(ErrorCode::InvalidConfig,
                fmt::format("grid width must be positive, got {}", width));
  }
}

std::size_t TileGrid::count(Tile t) const {
  return static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), t));
}

TileGrid TileGrid::columns(int first, int n) const {
  TileGrid out(n);
  for (int c = 0; c < n; ++c) {
    for (int r = 0; r < kLevelHeight; ++r) out.set(c, r, at(first + c, r));
  }
  return out;
}

CharMap::CharMap() : chars_(kDefaultChars) { rebuild_reverse(); }

void CharMap::rebuild_reverse() {
  reverse_.fill(-1);
  for (int i = 0; i < kAllTiles; ++i) {
    auto slot = static_cast<unsigned char>(chars_[i]);
    if (reverse_[slot] != -1) {
      throw Error(ErrorCode::BadCharMap,
                  fmt::format("character '{}' mapped to both {} and {}",
                              chars_[i], kTileNames[reverse_[slot]],
                              kTileNames[i]));
    }
    reverse_[slot] = static_cast<std::int8_t>(i);
  }
}

std::optional<Tile> CharMap::to_tile(char c) const {
  auto v = reverse_[static_cast<unsigned char>(c)];
  if (v < 0) return std::nullopt;
  return static_cast<Tile>(v);
}

// `category=char` lines; unlisted categories keep their default character.
CharMap CharMap::from_text(std::string_view text) {
  CharMap map;
  int lineno = 0;
  for (auto line : split_lines(text)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string_view::npos || eq + 2 != line.size()) {
      throw Error(ErrorCode::BadCharMap,
                  fmt::format("charmap line {}: expected category=char", lineno));
    }
    auto tile = tile_from_name(line.substr(0, eq));
    if (!tile) {
      throw Error(ErrorCode::BadCharMap,
                  fmt::format("charmap line {}: unknown category '{}'", lineno,
                              line.substr(0, eq)));
    }
    char c = line[eq + 1];
    if (c == '\n' || c == ' ' || c == '\t') {
      throw Error(ErrorCode::BadCharMap,
                  fmt::format("charmap line {}: whitespace is not a tile", lineno));
    }
    map.chars_[static_cast<int>(*tile)] = c;
  }
  map.rebuild_reverse();
  return map;
}

CharMap CharMap::from_file(const std::filesystem::path& path) {
  return from_text(read_text_file(path));
}

std::string CharMap::to_text() const {
  std::string out;
  for (int i = 0; i < kAllTiles; ++i) {
    out += fmt::format("{}={}\n", kTileNames[i], chars_[i]);
  }
  return out;
}

TileGrid parse_level(std::string_view text, const CharMap& map) {
  auto lines = split_lines(text);
  if (static_cast<int>(lines.size()) != kLevelHeight) {
    throw Error(ErrorCode::BadHeight,
                fmt::format("expected {} lines, got {}", kLevelHeight,
                            lines.size()));
  }
  const std::size_t width = lines[0].size();
  for (std::size_t r = 0; r < lines.size(); ++r) {
    if (lines[r].size() != width) {
      throw Error(ErrorCode::RaggedLines,
                  fmt::format("line {} has length {}, expected {}", r + 1,
                              lines[r].size(), width));
    }
  }
  if (width == 0) {
    throw Error(ErrorCode::RaggedLines, "level has zero width");
  }
  if (width > kWideLevelWarning) {
    spdlog::warn("level is {} columns wide (corpus levels are at most {})",
                 width, kWideLevelWarning);
  }
  TileGrid grid(static_cast<int>(width));
  for (int r = 0; r < kLevelHeight; ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      auto tile = map.to_tile(lines[r][c]);
      if (!tile) {
        throw Error(ErrorCode::UnknownChar,
                    fmt::format("unknown tile character '{}' at line {}, "
                                "column {}",
                                lines[r][c], r + 1, c + 1));
      }
      grid.set(static_cast<int>(c), r, *tile);
    }
  }
  return grid;
}

std::string serialize_level(const TileGrid& grid, const CharMap& map) {
  std::string out;
  out.reserve(static_cast<std::size_t>(grid.width() + 1) * kLevelHeight);
  for (int r = 0; r < kLevelHeight; ++r) {
    for (int c = 0; c < grid.width(); ++c) out += map.to_char(grid.at(c, r));
    out += '\n';
  }
  return out;
}

TileGrid load_level_file(const std::filesystem::path& path, const CharMap& map,
                         bool allow_path_marker) {
  TileGrid grid;
  try {
    grid = parse_level(read_text_file(path), map);
  } catch (const Error& e) {
    throw Error(e.code(), fmt::format("{}: {}", path.string(), e.what()));
  }
  if (!allow_path_marker && grid.contains(Tile::PathMarker)) {
    throw Error(ErrorCode::UnknownChar,
                fmt::format("{}: path markers are not allowed in a raw corpus "
                            "level",
                            path.string()));
  }
  return grid;
}

void save_level_file(const std::filesystem::path& path, const TileGrid& grid,
                     const CharMap& map) {
  write_text_file(path, serialize_level(grid, map));
}

std::vector<std::filesystem::path> list_level_files(
    const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  std::error_code ec;
  for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
    if (entry.is_regular_file() && entry.path().extension() == ".txt") {
      files.push_back(entry.path());
    }
  }
  if (ec) {
    throw Error(ErrorCode::Io,
                fmt::format("cannot list {}: {}", dir.string(), ec.message()));
  }
  std::sort(files.begin(), files.end());
  return files;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::Io, fmt::format("cannot open {}", path.string()));
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::Io, fmt::format("cannot write {}", path.string()));
  }
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

}  // namespace levelseq
