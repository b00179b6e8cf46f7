#include "levelseq/manifest.hpp"

#include <fmt/core.h>

#include "levelseq/error.hpp"
#include "levelseq/level.hpp"

namespace levelseq {

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_hash(const nlohmann::json& config) {
  // nlohmann::json objects iterate in sorted key order
  return fmt::format("{:016x}", fnv1a64(config.dump()));
}

nlohmann::json make_manifest(std::string_view command, const std::vector<std::string>& argv,
                             const nlohmann::json& config, std::uint64_t seed) {
  return {{"command", command},
          {"argv", argv},
          {"cwd", std::filesystem::current_path().string()},
          {"config", config},
          {"config_hash", config_hash(config)},
          {"seed", seed},
          {"tool_version", kToolVersion}};
}

void write_manifest(const std::filesystem::path& dir, const nlohmann::json& manifest) {
  write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

nlohmann::json read_manifest(const std::filesystem::path& path) {
  try {
    auto j = nlohmann::json::parse(read_text_file(path));
    if (!j.contains("command") || !j.contains("argv")) {
      throw Error(ErrorCode::InvalidConfig, fmt::format("{}: not a manifest", path.string()));
    }
    return j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, fmt::format("{}: {}", path.string(), e.what()));
  }
}

}  // namespace levelseq
