#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "dpfl/config.hpp"
#include "dpfl/fl_core.hpp"
#include "dpfl/policy.hpp"
#include "dpfl/privacy.hpp"
#include "dpfl/wireless.hpp"

namespace dpfl {

// One device's metrics for one round. Metric fields of skipped devices are
// NaN and serialize as empty CSV fields.
struct RoundRecord {
  int round = 0;
  int device = 0;
  Scheme scheme = Scheme::kProposed;
  bool skipped = false;
  double loss = std::nan("");
  double deviation = std::nan("");
  double iterations = std::nan("");
  double tx_power_w = std::nan("");
  double rate_bps = std::nan("");
  double e_cp_j = std::nan("");
  double e_tx_j = std::nan("");
  double e_tot_j = std::nan("");
  double sigma_g = std::nan("");
  double utility = std::nan("");
};

struct MtdState {
  Dataset data;
  MtdProfile profile;
  ModelVector model;  // the device's current (noisy) copy of the global model
  DeviationModelFit fit;
  DeviationHistory history;
  PrivacyLedger local_ledger;   // releases of the device's own update
  PrivacyLedger global_ledger;  // global-model releases received
  double cumulative_e_cp_j = 0.0;
  double cumulative_e_tx_j = 0.0;
};

// Drives one configured run: synthetic data generation, the per-round
// channel/policy/train/perturb/aggregate/release loop, and the device
// state evolution. Deterministic in (config, seed) regardless of the
// thread count: every random draw comes from a stream keyed by
// (seed, purpose, device, round) and results merge in device order.
class Simulation {
 public:
  explicit Simulation(const SimConfig& config);

  std::vector<RoundRecord> run_round(int round);

  // All rounds of a fresh simulation.
  static std::vector<RoundRecord> run(const SimConfig& config);

  const SimConfig& config() const { return cfg_; }
  const LossSpec& loss_spec() const { return spec_; }
  const ModelVector& global_model() const { return w_true_; }
  const std::vector<MtdState>& states() const { return states_; }

 private:
  SimConfig cfg_;
  LossSpec spec_;
  std::vector<MtdState> states_;
  ModelVector w_true_;  // the master's un-noised global model
};

std::vector<RoundRecord> run_simulation(const SimConfig& config);

struct DeviceSummary {
  int device = 0;
  int rounds_participated = 0;
  int rounds_skipped = 0;
  double mean_e_cp_j = 0.0;
  double mean_e_tx_j = 0.0;
  double mean_e_tot_j = 0.0;
  double mean_iterations = 0.0;
  double mean_rate_bps = 0.0;
  double mean_loss = 0.0;
};

struct RunSummary {
  int rounds = 0;
  int devices = 0;
  std::vector<DeviceSummary> per_device;
  double mean_of_device_mean_e_tot = 0.0;  // cross-device mean of means
  double std_of_device_mean_e_tot = 0.0;   // cross-device (population) std
  double mean_loss = 0.0;                  // over all participating records
  double mean_cross_device_loss_std = 0.0; // per-round std, averaged
  double final_window_mean_loss = 0.0;     // mean loss over last quarter rounds
  double mean_iterations = 0.0;
  double mean_rate_bps = 0.0;
};

RunSummary summarize(std::span<const RoundRecord> records);

}  // namespace dpfl
