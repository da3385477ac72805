#include "mobifair/manifest.hpp"
#include "mobifair/errors.hpp"
#include "mobifair/rng.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace mobifair {

std::string bytes_digest_hex(std::string_view bytes) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "fnv1a64:%016llx",
                  static_cast<unsigned long long>(rng::fnv1a64(bytes)));
    return buf;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("cannot read file: " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw data_error("cannot write file: " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw data_error("write failed: " + path.string());
}

void write_manifest(const std::filesystem::path& out_dir, const RunManifest& manifest) {
    nlohmann::json j{{"tool", kToolVersion},
                     {"command", manifest.command},
                     {"master_seed", manifest.master_seed},
                     {"config_echo", manifest.config_echo},
                     {"input_digests", manifest.input_digests},
                     {"outputs", manifest.outputs}};
    write_file(out_dir / "manifest.json", j.dump(2) + "\n");
}

} // namespace mobifair
