#include "manifest.hpp"

#include <array>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "noisecal/errors.hpp"

namespace noisecal::cli {

namespace {

std::string utc_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::array<char, 32> buf{};
    std::strftime(buf.data(), buf.size(), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf.data();
}

}  // namespace

std::string tool_version() { return NOISECAL_VERSION; }

std::string file_digest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open " + path.string());
    std::uint64_t h = 0xcbf29ce484222325ULL;
    std::array<char, 1 << 16> buf{};
    while (in) {
        in.read(buf.data(), buf.size());
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[static_cast<std::size_t>(i)]);
            h *= 0x100000001b3ULL;
        }
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

RunManifest::RunManifest(std::vector<std::string> command_line, unsigned threads)
    : command_line_(std::move(command_line)), threads_(threads), started_(utc_now()) {}

void RunManifest::add_config(const std::filesystem::path& path) {
    config_hashes_[path.string()] = "fnv1a64:" + file_digest(path);
}

void RunManifest::add_seed(const std::string& name, std::uint64_t seed) { seeds_[name] = seed; }

void RunManifest::add_output(const std::filesystem::path& path) { outputs_.push_back(path.filename().string()); }

nlohmann::json RunManifest::to_json() const {
    return {{"tool", "noisecal"},
            {"version", tool_version()},
            {"command_line", command_line_},
            {"threads", threads_},
            {"config_hashes", config_hashes_},
            {"seeds", seeds_},
            {"outputs", outputs_},
            {"started_utc", started_},
            {"finished_utc", utc_now()}};
}

void RunManifest::write(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << to_json().dump(2) << '\n';
}

}  // namespace noisecal::cli
