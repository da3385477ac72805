#pragma once

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace mobifair {

inline constexpr const char* kToolVersion = "mobifair 0.1.0";

// Reproducibility record written to <out>/manifest.json before any other
// output of a command.
struct RunManifest {
    std::string command;
    std::uint64_t master_seed = 0;
    nlohmann::json config_echo = nlohmann::json(nullptr);
    std::map<std::string, std::string> input_digests; // path -> digest of raw bytes
    std::vector<std::string> outputs; // planned outputs, relative to the out dir
};

std::string bytes_digest_hex(std::string_view bytes);

std::string read_file(const std::filesystem::path& path); // data_error when unreadable
void write_file(const std::filesystem::path& path, std::string_view content);

void write_manifest(const std::filesystem::path& out_dir, const RunManifest& manifest);

} // namespace mobifair
