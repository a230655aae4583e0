#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace noisecal::cli {

/// Provenance record written beside every output file. Timestamps live only
/// here, so data files from equal manifests are byte-identical.
class RunManifest {
public:
    RunManifest(std::vector<std::string> command_line, unsigned threads);

    void add_config(const std::filesystem::path& path);
    void add_seed(const std::string& name, std::uint64_t seed);
    void add_output(const std::filesystem::path& path);

    [[nodiscard]] nlohmann::json to_json() const;
    void write(const std::filesystem::path& path) const;

private:
    std::vector<std::string> command_line_;
    unsigned threads_ = 1;
    std::map<std::string, std::string> config_hashes_;
    std::map<std::string, std::uint64_t> seeds_;
    std::vector<std::string> outputs_;
    std::string started_;
};

/// FNV-1a 64-bit digest of a file's bytes, as 16 hex digits.
[[nodiscard]] std::string file_digest(const std::filesystem::path& path);

[[nodiscard]] std::string tool_version();

}  // namespace noisecal::cli
