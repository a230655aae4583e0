#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "noisecal/psd_model.hpp"
#include "noisecal/qkd_estimation.hpp"

namespace noisecal::cli {

struct FigureInputs {
    NoisePsdModel elec = reference_electronic_model();
    NoisePsdModel rec = reference_receiver_model();
    QkdScenario scenario;
    double fs = 625e6;
    double epsilon_secu = 0.01;
    std::uint64_t seed = 1;
    // fig8 stand-in acquisition: ~20M samples at 0.5 MHz, as in the reference measurement
    double trace_fs = 0.5e6;
    std::size_t trace_samples = std::size_t{1} << 24;
    unsigned threads = 1;
};

struct FigureOutput {
    std::vector<std::filesystem::path> files;
    nlohmann::json summary;
};

[[nodiscard]] const std::vector<std::string>& figure_ids();

/// Writes the data behind one figure into out_dir. Unknown ids are a ValidationError.
[[nodiscard]] FigureOutput reproduce_figure(const std::string& id, const std::filesystem::path& out_dir,
                                            const FigureInputs& inputs);

[[nodiscard]] std::vector<double> log_grid(double lo, double hi, int per_decade);

}  // namespace noisecal::cli
