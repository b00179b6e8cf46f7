#include "levelseq/codec.hpp"

#include <sstream>

#include <fmt/core.h>

#include "levelseq/error.hpp"

namespace levelseq {

EncodingSpec EncodingSpec::from_code(int code) {
  if (code < 0 || code > 7) {
    throw Error(ErrorCode::InvalidConfig, fmt::format("bad encoding code {}", code));
  }
  return {(code & 4) != 0, (code & 2) != 0, (code & 1) != 0};
}

std::array<EncodingSpec, 8> EncodingSpec::all() {
  std::array<EncodingSpec, 8> out;
  for (int i = 0; i < 8; ++i) out[static_cast<std::size_t>(i)] = from_code(i);
  return out;
}

std::string EncodingSpec::label() const {
  std::string s;
  s += snaking ? 'Y' : 'N';
  s += paths ? 'Y' : 'N';
  s += depth ? 'Y' : 'N';
  return s;
}

Vocabulary::Vocabulary(EncodingSpec spec) : spec_(spec), size_(kGroundTruthTiles + 3) {
  if (spec.paths) path_marker_ = size_++;
  if (spec.depth) depth_marker_ = size_++;
}

std::optional<Tile> Vocabulary::tile_of(int token) const {
  if (token >= 0 && token < kGroundTruthTiles) return static_cast<Tile>(token);
  if (token >= 0 && token == path_marker_) return Tile::PathMarker;
  return std::nullopt;
}

std::optional<int> Vocabulary::token_of(Tile t) const {
  if (t == Tile::PathMarker) {
    if (path_marker_ < 0) return std::nullopt;
    return path_marker_;
  }
  return tile_token(t);
}

std::string_view Vocabulary::name(int token) const {
  if (auto t = tile_of(token)) return tile_name(*t);
  if (token == column_delimiter()) return "ColumnDelimiter";
  if (token == level_start()) return "LevelStart";
  if (token == level_end()) return "LevelEnd";
  if (token >= 0 && token == depth_marker_) return "DepthMarker";
  return "?";
}

std::optional<int> Vocabulary::index_of(std::string_view name) const {
  for (int i = 0; i < size_; ++i) {
    if (this->name(i) == name) return i;
  }
  return std::nullopt;
}

namespace {

void check_encodable(const TileGrid& grid, EncodingSpec spec) {
  const bool has_markers = grid.contains(Tile::PathMarker);
  if (spec.paths && !has_markers && grid.contains(Tile::Empty)) {
    throw Error(ErrorCode::PathsRequestedButAbsent,
                "path encoding requested but the grid carries no path markers");
  }
  if (!spec.paths && has_markers) {
    throw Error(ErrorCode::UnencodableTile,
                "grid has path markers but the encoding has no path token");
  }
}

void emit_columns(const TileGrid& grid, const Vocabulary& vocab, Direction start_dir,
                  int first, int last, std::vector<int>& out) {
  const EncodingSpec spec = vocab.spec();
  for (int c = first; c < last; ++c) {
    if (spec.depth) out.insert(out.end(), static_cast<std::size_t>(c / kDepthStride), vocab.depth_marker());
    Direction dir = (spec.snaking && c % 2 == 1) ? flip(start_dir) : start_dir;
    for (int k = 0; k < kLevelHeight; ++k) {
      int row = dir == Direction::Up ? kLevelHeight - 1 - k : k;
      out.push_back(*vocab.token_of(grid.at(c, row)));
    }
    out.push_back(Vocabulary::column_delimiter());
  }
}

}  // namespace

TokenSequence encode_with_direction(const TileGrid& grid, EncodingSpec spec,
                                    Direction start_dir) {
  check_encodable(grid, spec);
  Vocabulary vocab(spec);
  TokenSequence seq{spec, start_dir, {}};
  seq.tokens.reserve(static_cast<std::size_t>(grid.width()) * (kLevelHeight + 1) + 2);
  seq.tokens.push_back(Vocabulary::level_start());
  emit_columns(grid, vocab, start_dir, 0, grid.width(), seq.tokens);
  seq.tokens.push_back(Vocabulary::level_end());
  return seq;
}

std::vector<TokenSequence> encode(const TileGrid& grid, EncodingSpec spec) {
  std::vector<TokenSequence> out;
  out.push_back(encode_with_direction(grid, spec, Direction::Up));
  if (spec.snaking) out.push_back(encode_with_direction(grid, spec, Direction::Down));
  return out;
}

std::vector<int> encode_prefix(const TileGrid& grid, EncodingSpec spec,
                               Direction start_dir) {
  check_encodable(grid, spec);
  Vocabulary vocab(spec);
  std::vector<int> out{Vocabulary::level_start()};
  emit_columns(grid, vocab, start_dir, 0, grid.width(), out);
  // Depth markers that open the next column belong to the prefix.
  if (spec.depth) {
    out.insert(out.end(), static_cast<std::size_t>(grid.width() / kDepthStride),
               vocab.depth_marker());
  }
  return out;
}

std::size_t DecodeResult::column_integrity_warnings() const {
  std::size_t n = 0;
  for (const auto& w : warnings) n += w.column_integrity() ? 1 : 0;
  return n;
}

DecodeResult decode(const TokenSequence& seq, DecodeMode mode) {
  const Vocabulary vocab(seq.spec);
  const bool lenient = mode == DecodeMode::Lenient;
  std::vector<DecodeWarning> warnings;
  const auto& toks = seq.tokens;

  if (toks.empty() || toks.front() != Vocabulary::level_start()) {
    throw Error(ErrorCode::MalformedSequence, "sequence does not begin with LevelStart");
  }
  for (int t : toks) {
    if (t < 0 || t >= vocab.size()) {
      throw Error(ErrorCode::MalformedSequence,
                  fmt::format("token {} outside vocabulary of size {}", t, vocab.size()));
    }
  }

  std::vector<std::vector<Tile>> columns;
  std::vector<Tile> current;
  int depth_seen = 0;
  bool ended = false;
  std::size_t i = 1;

  auto stray = [&](std::string msg) {
    if (!lenient) throw Error(ErrorCode::MalformedSequence, msg);
    warnings.push_back({DecodeWarning::Kind::StrayToken, static_cast<int>(columns.size()), std::move(msg)});
  };

  auto close_column = [&]() {
    const int col = static_cast<int>(columns.size());
    if (static_cast<int>(current.size()) != kLevelHeight) {
      auto msg = fmt::format("column {} has {} tiles, expected {}", col, current.size(), kLevelHeight);
      if (!lenient) throw Error(ErrorCode::MalformedColumn, msg);
      warnings.push_back({DecodeWarning::Kind::ColumnLength, col, std::move(msg)});
      current.resize(kLevelHeight, Tile::Empty);
    }
    if (seq.spec.depth && depth_seen != col / kDepthStride) {
      auto msg = fmt::format("column {} has {} depth markers, expected {}", col, depth_seen,
                             col / kDepthStride);
      if (!lenient) throw Error(ErrorCode::BadDepthCount, msg);
      warnings.push_back({DecodeWarning::Kind::DepthCount, col, std::move(msg)});
    }
    columns.push_back(std::move(current));
    current.clear();
    depth_seen = 0;
  };

  for (; i < toks.size(); ++i) {
    const int t = toks[i];
    if (t == Vocabulary::level_end()) {
      if (!current.empty()) close_column();
      ended = true;
      ++i;
      break;
    }
    if (t == Vocabulary::column_delimiter()) {
      close_column();
    } else if (t == vocab.depth_marker()) {
      if (current.empty()) {
        ++depth_seen;
      } else {
        stray(fmt::format("depth marker inside column {}", columns.size()));
      }
    } else if (auto tile = vocab.tile_of(t)) {
      current.push_back(*tile);
    } else {
      stray(fmt::format("unexpected {} at position {}", vocab.name(t), i));
    }
  }
  if (!ended) {
    throw Error(ErrorCode::TruncatedSequence, "sequence ends without LevelEnd");
  }
  if (i < toks.size()) {
    stray(fmt::format("{} tokens after LevelEnd", toks.size() - i));
  }
  if (columns.empty()) {
    throw Error(ErrorCode::MalformedSequence, "sequence contains no columns");
  }

  TileGrid grid(static_cast<int>(columns.size()));
  for (std::size_t c = 0; c < columns.size(); ++c) {
    Direction dir = (seq.spec.snaking && c % 2 == 1) ? flip(seq.start_dir) : seq.start_dir;
    for (int k = 0; k < kLevelHeight; ++k) {
      int row = dir == Direction::Up ? kLevelHeight - 1 - k : k;
      grid.set(static_cast<int>(c), row, columns[c][static_cast<std::size_t>(k)]);
    }
  }
  return {std::move(grid), std::move(warnings)};
}

TileGrid strip_path(TileGrid grid) {
  for (int c = 0; c < grid.width(); ++c) {
    for (int r = 0; r < kLevelHeight; ++r) {
      if (grid.at(c, r) == Tile::PathMarker) grid.set(c, r, Tile::Empty);
    }
  }
  return grid;
}

std::string format_sequences(std::span<const TokenSequence> seqs) {
  std::string out;
  for (const auto& seq : seqs) {
    const Vocabulary vocab(seq.spec);
    auto yn = [](bool b) { return b ? 'Y' : 'N'; };
    out += fmt::format("#spec snaking={} paths={} depth={} start_dir={}\n", yn(seq.spec.snaking),
                       yn(seq.spec.paths), yn(seq.spec.depth),
                       seq.start_dir == Direction::Up ? "up" : "down");
    for (std::size_t i = 0; i < seq.tokens.size(); ++i) {
      if (i > 0) out += seq.tokens[i - 1] == Vocabulary::column_delimiter() ? '\n' : ' ';
      out += vocab.name(seq.tokens[i]);
    }
    out += '\n';
  }
  return out;
}

std::vector<TokenSequence> parse_sequences(std::string_view text) {
  std::vector<TokenSequence> out;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.rfind("#spec", 0) == 0) {
      TokenSequence seq;
      std::istringstream ls(line.substr(5));
      std::string field;
      int seen = 0;
      while (ls >> field) {
        auto eq = field.find('=');
        if (eq == std::string::npos) {
          throw Error(ErrorCode::MalformedSequence, fmt::format("line {}: bad header field '{}'", lineno, field));
        }
        auto key = field.substr(0, eq);
        auto val = field.substr(eq + 1);
        auto flag = [&](bool& b) {
          if (val != "Y" && val != "N") {
            throw Error(ErrorCode::MalformedSequence, fmt::format("line {}: {} must be Y or N", lineno, key));
          }
          b = val == "Y";
          ++seen;
        };
        if (key == "snaking") {
          flag(seq.spec.snaking);
        } else if (key == "paths") {
          flag(seq.spec.paths);
        } else if (key == "depth") {
          flag(seq.spec.depth);
        } else if (key == "start_dir") {
          if (val != "up" && val != "down") {
            throw Error(ErrorCode::MalformedSequence, fmt::format("line {}: start_dir must be up or down", lineno));
          }
          seq.start_dir = val == "up" ? Direction::Up : Direction::Down;
          ++seen;
        } else {
          throw Error(ErrorCode::MalformedSequence, fmt::format("line {}: unknown header field '{}'", lineno, key));
        }
      }
      if (seen != 4) {
        throw Error(ErrorCode::MalformedSequence, fmt::format("line {}: incomplete #spec header", lineno));
      }
      out.push_back(std::move(seq));
      continue;
    }
    if (!line.empty() && line.front() == '#') continue;
    std::istringstream ls(line);
    std::string name;
    while (ls >> name) {
      if (out.empty()) {
        throw Error(ErrorCode::MalformedSequence, fmt::format("line {}: tokens before #spec header", lineno));
      }
      const Vocabulary vocab(out.back().spec);
      auto idx = vocab.index_of(name);
      if (!idx) {
        throw Error(ErrorCode::MalformedSequence, fmt::format("line {}: unknown token '{}'", lineno, name));
      }
      out.back().tokens.push_back(*idx);
    }
  }
  return out;
}

}  // namespace levelseq
