#include "noisecal/trace.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "noisecal/errors.hpp"

namespace noisecal {

namespace {

constexpr std::array<char, 8> kMagic = {'N', 'C', 'T', 'R', 'A', 'C', 'E', '1'};

template <typename T>
void write_le(std::ostream& out, T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    std::array<unsigned char, sizeof(T)> bytes{};
    std::memcpy(bytes.data(), &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
    out.write(reinterpret_cast<const char*>(bytes.data()), bytes.size());
}

template <typename T>
T read_le(std::istream& in) {
    std::array<unsigned char, sizeof(T)> bytes{};
    in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
    if (!in) throw ValidationError("truncated trace file");
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
    T value;
    std::memcpy(&value, bytes.data(), sizeof(T));
    return value;
}

}  // namespace

void Trace::validate() const {
    if (samples.size() < 2) throw ValidationError("trace must hold at least 2 samples");
    if (!(fs > 0.0) || !std::isfinite(fs)) throw ValidationError("trace sampling rate must be positive");
    for (double v : samples) {
        if (!std::isfinite(v)) throw ValidationError("trace contains non-finite samples");
    }
}

void save_trace(const Trace& trace, const std::filesystem::path& path) {
    trace.validate();
    nlohmann::json header = {{"fs", trace.fs},
                             {"n", trace.samples.size()},
                             {"dtype", "f64le"},
                             {"switches", {{"lo", trace.switches.lo}, {"signal", trace.switches.signal}}},
                             {"seed", trace.seed},
                             {"label", trace.label}};
    const std::string text = header.dump();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write trace file " + path.string());
    out.write(kMagic.data(), kMagic.size());
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(text.size()));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (double v : trace.samples) write_le<double>(out, v);
}

Trace load_trace(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open trace file " + path.string());
    std::array<char, 8> magic{};
    in.read(magic.data(), magic.size());
    if (!in || magic != kMagic) throw ValidationError("not a trace file (bad magic): " + path.string());
    const auto header_len = read_le<std::uint32_t>(in);
    std::string text(header_len, '\0');
    in.read(text.data(), header_len);
    if (!in) throw ValidationError("truncated trace header");

    Trace trace;
    std::size_t n = 0;
    try {
        const auto header = nlohmann::json::parse(text);
        if (header.value("dtype", std::string{}) != "f64le") throw ValidationError("unsupported dtype");
        trace.fs = header.at("fs").get<double>();
        n = header.at("n").get<std::size_t>();
        trace.switches.lo = header.at("switches").at("lo").get<bool>();
        trace.switches.signal = header.at("switches").at("signal").get<bool>();
        trace.seed = header.value("seed", std::uint64_t{0});
        trace.label = header.value("label", std::string{});
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed trace header: ") + e.what());
    }
    trace.samples.resize(n);
    for (auto& v : trace.samples) v = read_le<double>(in);
    trace.validate();
    return trace;
}

Trace load_trace_csv(const std::filesystem::path& path, double fs) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open CSV trace " + path.string());
    Trace trace;
    trace.fs = fs;
    trace.label = path.stem().string();
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        try {
            std::size_t used = 0;
            trace.samples.push_back(std::stod(line, &used));
        } catch (const std::exception&) {
            throw ValidationError("bad sample on line " + std::to_string(line_no) + " of " + path.string());
        }
    }
    trace.validate();
    return trace;
}

}  // namespace noisecal
