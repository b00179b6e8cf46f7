#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace levelseq {

inline constexpr std::string_view kToolVersion = "0.3.0";

std::uint64_t fnv1a64(std::string_view bytes);

// Hex FNV-1a of the canonical (sorted-key) JSON dump.
std::string config_hash(const nlohmann::json& config);

// manifest.json: command, argv, working directory, config, its hash, seed
// and tool version. Enough to re-run the command.
nlohmann::json make_manifest(std::string_view command, const std::vector<std::string>& argv,
                             const nlohmann::json& config, std::uint64_t seed);
void write_manifest(const std::filesystem::path& dir, const nlohmann::json& manifest);
nlohmann::json read_manifest(const std::filesystem::path& path);

}  // namespace levelseq
