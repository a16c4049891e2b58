#pragma once

#include <deque>
#include <optional>
#include <utility>

#include "dpfl/fl_core.hpp"
#include "dpfl/wireless.hpp"

namespace dpfl {

// Exponential model of the deviation factor a device expects for a given
// computation-energy spend: beta1 * exp(-e_cp / beta2), beta1 in (0, 1],
// beta2 > 0. Energies are in the simulation's normalized unit.
struct DeviationModelFit {
  double beta1 = 1.0;
  double beta2 = 1.0;
};

// Sliding window of (e_cp, observed deviation) pairs used to refit the model.
struct DeviationHistory {
  std::deque<std::pair<double, double>> samples;
  std::size_t window = 8;

  void push(double e_cp, double observed) {
    samples.emplace_back(e_cp, observed);
    while (samples.size() > window) samples.pop_front();
  }
};

double expected_deviation(const DeviationModelFit& fit, double e_cp);

// Log-domain least squares of ln E = ln beta1 - e_cp / beta2 over window
// points with observed deviation > 0. Fewer than two usable points returns
// `fallback`; a degenerate spread in e_cp (or a fit the model family cannot
// represent, i.e. deviation increasing with spend) keeps `previous`.
// Results are clamped to beta1 in (0, 1], beta2 in (0, 1e6].
DeviationModelFit fit_deviation_model(const DeviationHistory& history,
                                      const DeviationModelFit& fallback,
                                      const DeviationModelFit& previous);

// One device-round policy instance: physical profile, channel realization,
// round deadline/payload, and utility parameters. Precomputes the link
// coefficients the transformed problem is written in:
//   snr_slope  (1/W)  so that Z(P) = ln(1 + snr_slope * P)
//   b_coef     E_tx(Z) = (V b / Z)(e^Z + c)   [before energy scaling]
//   c_coef     rho * snr_slope * P_cir - 1
class PolicyProblem {
 public:
  PolicyProblem(const MtdProfile& profile, const ChannelState& ch,
                double deadline_s, double payload_bits, double utility_rho,
                double energy_scale);

  const MtdProfile& profile() const { return profile_; }
  const ChannelState& channel() const { return ch_; }
  double deadline() const { return deadline_s_; }
  double payload() const { return payload_bits_; }
  double utility_rho() const { return utility_rho_; }
  double energy_scale() const { return energy_scale_; }
  double snr_slope() const { return snr_slope_; }
  double b_coef() const { return b_coef_; }
  double c_coef() const { return c_coef_; }

  double z_of_p(double p_w) const;
  double p_of_z(double z) const;
  double rate_of_z(double z) const;    // bits/s
  double tx_time_z(double z) const;    // seconds
  double cp_time_j(double j) const;    // seconds
  double e_cp(double j) const;         // joules
  double e_tx(double z) const;         // joules, throws on z <= 0
  // Deadline-saturating iteration count for a given Z (continuous).
  double j_saturating(double z) const;

  // -beta1 exp(-E_cp/beta2) + beta1 - E(E - rho) with energies normalized
  // by energy_scale. Throws on z <= 0.
  double utility(const DeviationModelFit& fit, double j, double z) const;

 private:
  MtdProfile profile_;
  ChannelState ch_;
  double deadline_s_;
  double payload_bits_;
  double utility_rho_;
  double energy_scale_;
  double snr_slope_;
  double b_coef_;
  double c_coef_;
};

// Transmit power needed to fit j_min iterations plus the upload into the
// deadline. Throws std::invalid_argument when the deadline cannot even
// hold the iterations ("deadline infeasible").
double p_min(const MtdProfile& profile, const ChannelState& ch, int j_min,
             double deadline_s, double payload_bits);

struct JmaxResult {
  int value = 0;
  bool no_compute_budget = false;  // deadline exhausted by transmission alone
};

// Most iterations that leave room to transmit at p_max within the deadline,
// floored and capped by profile.j_max_cap. Negative values clamp to 0 with
// the no_compute_budget flag set.
JmaxResult j_max(const MtdProfile& profile, const ChannelState& ch,
                 double p_max_w, double deadline_s, double payload_bits);

struct PolicyBounds {
  double p_min_w = 0.0;
  double p_max_w = 0.0;
  double z_min = 0.0;
  double z_max = 0.0;
  int j_min = 0;
  int j_max = 0;
};

// All box bounds of the per-round problem. nullopt when they are not
// well-formed (p_min > p_max or j_max < j_min): the device skips the round.
std::optional<PolicyBounds> compute_bounds(const PolicyProblem& problem);

// Stationarity residual of the transformed problem along the active
// deadline, whose root is the interior optimum Z.
double zhat_residual(const PolicyProblem& problem, const DeviationModelFit& fit,
                     double z);

// Bracketed bisection for the residual root on
// [max(z_min, payload ln2 / (B T)), z_max]. nullopt when the residual does
// not change sign over the bracket. Non-finite residual values inside the
// bracket raise std::runtime_error with diagnostics.
std::optional<double> solve_zhat(const PolicyProblem& problem,
                                 const DeviationModelFit& fit,
                                 const PolicyBounds& bounds);

struct PolicyDecision {
  int j = 0;
  double z = 0.0;          // nats
  double p_w = 0.0;
  double rate_bps = 0.0;
  double phi_bound = 1.0;  // accuracy reached after j iterations
  double utility = 0.0;
};

// Utility-optimal computation/transmission choice: interior root clamped to
// the Z box, deadline-saturating iteration count floored to an integer, and
// the better of keeping the root Z or re-saturating the deadline at the
// integral j. nullopt when the bounds are infeasible (skip round).
std::optional<PolicyDecision> optimal_policy(const DeviationModelFit& fit,
                                             const PolicyProblem& problem,
                                             const LossSpec& spec);

// Exhaustive search over every feasible integer j and a Z grid with
// `grid_resolution` intervals between z_min and z_max. Testing oracle.
std::optional<PolicyDecision> brute_force_policy(const DeviationModelFit& fit,
                                                 const PolicyProblem& problem,
                                                 const LossSpec& spec,
                                                 int grid_resolution);

// Maximum-effort baseline: transmit at p_max and run as many iterations as
// the deadline allows.
std::optional<PolicyDecision> benchmark_policy(const DeviationModelFit& fit,
                                               const PolicyProblem& problem,
                                               const LossSpec& spec);

}  // namespace dpfl
