#pragma once

#include <string>
#include <vector>

#include "dpfl/simulator.hpp"

namespace dpfl {

inline constexpr const char* kCsvHeader =
    "round,device,scheme,loss,deviation,iterations,tx_power_w,rate_bps,"
    "e_cp_j,e_tx_j,e_tot_j,sigma_g,utility,skipped";

// CSV serialization: fixed header above, rows ordered by (round, device),
// floating values at 17 significant digits, NaN metrics of skipped rows as
// empty fields. Byte-stable for a given record list.
std::string records_to_csv(std::span<const RoundRecord> records);

std::vector<RoundRecord> parse_csv(const std::string& text);

// Writes records_to_csv to path; IO failure raises std::runtime_error.
void emit_records(std::span<const RoundRecord> records, const std::string& path);

std::vector<RoundRecord> load_records(const std::string& path);

// Headline quantities of a paired proposed-vs-benchmark run.
struct SchemeComparison {
  double energy_std_reduction_pct = 0.0;   // cross-device std of mean E_tot
  double mean_energy_reduction_pct = 0.0;  // cross-device mean of mean E_tot
  double loss_std_proposed = 0.0;          // per-round cross-device std, averaged
  double loss_std_benchmark = 0.0;
  double mean_loss_gap_pct = 0.0;          // final-window mean loss, proposed vs benchmark
};

// Requires both runs to have the same round/device shape.
SchemeComparison compare_schemes(std::span<const RoundRecord> proposed,
                                 std::span<const RoundRecord> benchmark);

std::string summary_text(const RunSummary& summary, const std::string& label);
std::string comparison_text(const SchemeComparison& comparison);

// Provenance sidecar written next to the CSV outputs before round 0 and
// finalized after the run. The embedded config snapshot is the canonical
// flat text and parses back to the exact configuration.
struct RunManifest {
  std::string artifact_version;
  std::uint64_t seed = 0;
  std::string scheme;
  std::string started_at;
  std::string finished_at;
  std::string config_text;
  std::vector<std::string> outputs;
};

void write_manifest(const RunManifest& manifest, const std::string& path);
RunManifest load_manifest(const std::string& path);

std::string current_timestamp();

}  // namespace dpfl
