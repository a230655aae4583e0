#pragma once

#include <ostream>
#include <vector>

#include <json.hpp>

#include "noisecal/calibration.hpp"
#include "noisecal/qkd_estimation.hpp"
#include "noisecal/white_isolation.hpp"
#include "noisecal/wss_test.hpp"

namespace noisecal::cli {

// tau_s,n0_hat_V2,n0_upper_V2,n0_lower_V2
void write_opt_tau_csv(const OptimalTauResult& result, std::ostream& out);
// tau_s,key_fraction,duty_factor,effective_rate
void write_skr_csv(const SkrCurve& curve, std::ostream& out);
// tau_s,duty_factor,characterized_key_fraction,characterized_effective_rate,fully_white_key_fraction,fully_white_effective_rate
void write_skr_pair_csv(const SkrCurve& characterized, const SkrCurve& fully_white, std::ostream& out);
// tau_s,ratio,standard_error,decimation,fs_effective_Hz,model_ratio
void write_ratio_csv(const RatioCurve& curve, std::ostream& out);
// block_index,wilcoxon_p,bf_p,acf_stat,passed (verdicts at alphas[alpha_index])
void write_wss_csv(const BlockScanReport& report, std::size_t alpha_index, std::ostream& out);
// block_index,alpha_<a>... cumulative pass counts
void write_cumulative_csv(const BlockScanReport& report, std::ostream& out);

[[nodiscard]] nlohmann::json to_json(const CalibrationResult& result);
[[nodiscard]] nlohmann::json to_json(const WhiteEstimate& estimate);
[[nodiscard]] nlohmann::json summary_json(const OptimalTauResult& result, double fs, double epsilon_secu);
[[nodiscard]] nlohmann::json summary_json(const SkrCurve& curve);

}  // namespace noisecal::cli
