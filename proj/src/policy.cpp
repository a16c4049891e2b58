#include "dpfl/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace dpfl {
namespace {

constexpr double kLn2 = 0.6931471805599453;
constexpr double kBeta1Min = 1e-9;
constexpr double kBeta2Min = 1e-9;
constexpr double kBeta2Max = 1e6;
constexpr double kDeadlineSlack = 1e-12;  // relative

double link_snr_slope(const MtdProfile& profile, const ChannelState& ch) {
  return ch.kappa * ch.gain /
         (ch.noise_w * std::pow(profile.distance_m, ch.alpha) * ch.mod_gap);
}

}  // namespace

double expected_deviation(const DeviationModelFit& fit, double e_cp) {
  if (e_cp < 0.0) throw std::invalid_argument("negative computation energy");
  return fit.beta1 * std::exp(-e_cp / fit.beta2);
}

DeviationModelFit fit_deviation_model(const DeviationHistory& history,
                                      const DeviationModelFit& fallback,
                                      const DeviationModelFit& previous) {
  std::vector<std::pair<double, double>> pts;  // (e_cp, ln E)
  for (const auto& [e_cp, observed] : history.samples) {
    if (observed > 1e-12) pts.emplace_back(e_cp, std::log(observed));
  }
  if (pts.size() < 2) return fallback;

  double mean_x = 0.0, mean_y = 0.0;
  for (const auto& [x, y] : pts) {
    mean_x += x;
    mean_y += y;
  }
  mean_x /= static_cast<double>(pts.size());
  mean_y /= static_cast<double>(pts.size());
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [x, y] : pts) {
    sxx += (x - mean_x) * (x - mean_x);
    sxy += (x - mean_x) * (y - mean_y);
  }
  if (sxx <= 1e-24) return previous;  // no spread in e_cp

  const double slope = sxy / sxx;
  DeviationModelFit fit;
  if (slope >= -1e-12) {
    // Deviation not decreasing with spend: the model family cannot express
    // this, so fall back to the flattest member at the observed level.
    fit.beta2 = kBeta2Max;
    fit.beta1 = std::clamp(std::exp(mean_y), kBeta1Min, 1.0);
  } else {
    fit.beta2 = std::clamp(-1.0 / slope, kBeta2Min, kBeta2Max);
    fit.beta1 = std::clamp(std::exp(mean_y - slope * mean_x), kBeta1Min, 1.0);
  }
  return fit;
}

PolicyProblem::PolicyProblem(const MtdProfile& profile, const ChannelState& ch,
                             double deadline_s, double payload_bits,
                             double utility_rho, double energy_scale)
    : profile_(profile),
      ch_(ch),
      deadline_s_(deadline_s),
      payload_bits_(payload_bits),
      utility_rho_(utility_rho),
      energy_scale_(energy_scale) {
  if (!(deadline_s > 0.0) || !(payload_bits > 0.0) || !(utility_rho > 0.0) ||
      !(energy_scale > 0.0)) {
    throw std::invalid_argument("policy problem parameters must be positive");
  }
  snr_slope_ = link_snr_slope(profile, ch);
  if (!(snr_slope_ > 0.0) || !std::isfinite(snr_slope_)) {
    throw std::invalid_argument("degenerate link: SNR slope must be positive and finite");
  }
  b_coef_ = kLn2 / (profile.rho * snr_slope_ * profile.bandwidth_hz);
  c_coef_ = profile.rho * snr_slope_ * profile.p_cir_w - 1.0;
}

double PolicyProblem::z_of_p(double p_w) const {
  if (p_w < 0.0) throw std::invalid_argument("negative transmit power");
  return std::log1p(snr_slope_ * p_w);
}

double PolicyProblem::p_of_z(double z) const {
  if (z < 0.0) throw std::invalid_argument("negative rate variable");
  return std::expm1(z) / snr_slope_;
}

double PolicyProblem::rate_of_z(double z) const {
  return profile_.bandwidth_hz * z / kLn2;
}

double PolicyProblem::tx_time_z(double z) const {
  return payload_bits_ * kLn2 / (profile_.bandwidth_hz * z);
}

double PolicyProblem::cp_time_j(double j) const {
  return j * profile_.sample_count * profile_.tau_s;
}

double PolicyProblem::e_cp(double j) const {
  return cp_time_j(j) * profile_.p_cp_w;
}

double PolicyProblem::e_tx(double z) const {
  if (!(z > 0.0)) throw std::invalid_argument("rate variable must be positive");
  return payload_bits_ * b_coef_ / z * (std::exp(z) + c_coef_);
}

double PolicyProblem::j_saturating(double z) const {
  return (deadline_s_ - tx_time_z(z)) /
         (profile_.sample_count * profile_.tau_s);
}

double PolicyProblem::utility(const DeviationModelFit& fit, double j,
                              double z) const {
  const double en_cp = energy_scale_ * e_cp(j);
  const double en_tot = en_cp + energy_scale_ * e_tx(z);
  return -fit.beta1 * std::exp(-en_cp / fit.beta2) + fit.beta1 -
         en_tot * (en_tot - utility_rho_);
}

double p_min(const MtdProfile& profile, const ChannelState& ch, int j_min,
             double deadline_s, double payload_bits) {
  const double residual_s = deadline_s - j_min * profile.sample_count * profile.tau_s;
  if (!(residual_s > 0.0)) {
    std::ostringstream msg;
    msg << "deadline infeasible: " << j_min << " iterations need "
        << j_min * profile.sample_count * profile.tau_s
        << " s, deadline is " << deadline_s << " s";
    throw std::invalid_argument(msg.str());
  }
  const double z_required =
      payload_bits * kLn2 / (profile.bandwidth_hz * residual_s);
  return std::expm1(z_required) / link_snr_slope(profile, ch);
}

JmaxResult j_max(const MtdProfile& profile, const ChannelState& ch,
                 double p_max_w, double deadline_s, double payload_bits) {
  const double z_at_pmax = std::log1p(link_snr_slope(profile, ch) * p_max_w);
  if (!(z_at_pmax > 0.0)) return {0, true};
  const double tx_s = payload_bits * kLn2 / (profile.bandwidth_hz * z_at_pmax);
  const double raw =
      (deadline_s - tx_s) / (profile.sample_count * profile.tau_s);
  if (raw < 0.0) return {0, true};
  const double floored = std::floor(raw + 1e-9);
  return {static_cast<int>(std::min(floored, static_cast<double>(profile.j_max_cap))),
          false};
}

std::optional<PolicyBounds> compute_bounds(const PolicyProblem& problem) {
  const MtdProfile& prof = problem.profile();
  PolicyBounds b;
  try {
    b.p_min_w = p_min(prof, problem.channel(), prof.j_min, problem.deadline(),
                      problem.payload());
  } catch (const std::invalid_argument&) {
    return std::nullopt;  // deadline cannot hold j_min iterations
  }
  b.p_max_w = prof.p_max_w;
  if (!(b.p_min_w <= b.p_max_w)) return std::nullopt;
  const JmaxResult jm = j_max(prof, problem.channel(), prof.p_max_w,
                              problem.deadline(), problem.payload());
  b.j_min = prof.j_min;
  b.j_max = jm.value;
  if (jm.no_compute_budget || b.j_max < b.j_min) return std::nullopt;
  b.z_min = problem.z_of_p(b.p_min_w);
  b.z_max = problem.z_of_p(b.p_max_w);
  return b;
}

double zhat_residual(const PolicyProblem& problem, const DeviationModelFit& fit,
                     double z) {
  if (!(z > 0.0)) throw std::invalid_argument("rate variable must be positive");
  const double scale = problem.energy_scale();
  const double p_cp = scale * problem.profile().p_cp_w;
  const double b = scale * problem.b_coef();
  const double c = problem.c_coef();
  const double bandwidth = problem.profile().bandwidth_hz;
  const double payload = problem.payload();
  const double tx_s = payload * kLn2 / (bandwidth * z);
  const double exp_z = std::exp(z);

  const double energy_term = 2.0 * p_cp * (problem.deadline() - tx_s) +
                             2.0 * payload * b / z * (exp_z + c) -
                             problem.utility_rho();
  const double multiplier_term =
      bandwidth * b / (p_cp * kLn2) * ((z - 1.0) * exp_z - c) + 1.0;
  const double deviation_term =
      fit.beta1 / fit.beta2 *
      std::exp(p_cp / fit.beta2 * (tx_s - problem.deadline()));
  return energy_term * multiplier_term - deviation_term;
}

std::optional<double> solve_zhat(const PolicyProblem& problem,
                                 const DeviationModelFit& fit,
                                 const PolicyBounds& bounds) {
  const double z_floor = problem.payload() * kLn2 /
                         (problem.profile().bandwidth_hz * problem.deadline());
  double lo = std::max(bounds.z_min, z_floor * (1.0 + 1e-12));
  double hi = bounds.z_max;
  if (!(lo < hi)) return std::nullopt;

  auto residual_checked = [&](double z) {
    const double r = zhat_residual(problem, fit, z);
    if (!std::isfinite(r)) {
      std::ostringstream msg;
      msg << "non-finite stationarity residual at Z = " << z
          << " (bracket [" << lo << ", " << hi << "], beta1 = " << fit.beta1
          << ", beta2 = " << fit.beta2 << ")";
      throw std::runtime_error(msg.str());
    }
    return r;
  };

  double r_lo = residual_checked(lo);
  double r_hi = residual_checked(hi);
  if (r_lo == 0.0) return lo;
  if (r_hi == 0.0) return hi;
  if (r_lo * r_hi > 0.0) return std::nullopt;

  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;  // bracket at float resolution
    const double r_mid = residual_checked(mid);
    if (r_mid == 0.0) return mid;
    if ((r_lo < 0.0) == (r_mid < 0.0)) {
      lo = mid;
      r_lo = r_mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

namespace {

struct Candidate {
  int j = 0;
  double z = 0.0;
};

// Deadline-saturating Z for an integral iteration count, clamped to the box.
std::optional<double> saturating_z(const PolicyProblem& problem,
                                   const PolicyBounds& bounds, int j) {
  const double residual_s = problem.deadline() - problem.cp_time_j(j);
  if (!(residual_s > 0.0)) return std::nullopt;
  const double z_sat =
      problem.payload() * kLn2 / (problem.profile().bandwidth_hz * residual_s);
  if (z_sat > bounds.z_max * (1.0 + kDeadlineSlack)) return std::nullopt;
  return std::clamp(z_sat, bounds.z_min, bounds.z_max);
}

// Integral-j candidates derived from a target Z: the floored
// deadline-saturating iteration count paired with (a) the Z that re-saturates
// the deadline at that integer (listed first so ties prefer an active
// deadline), (b) the target Z itself, and (c) one extra saturated step when
// the cap allows it.
void push_candidates(const PolicyProblem& problem, const PolicyBounds& bounds,
                     double z_target, std::vector<Candidate>& out) {
  const double z = std::clamp(z_target, bounds.z_min, bounds.z_max);
  const double j_cont =
      std::min(problem.j_saturating(z), static_cast<double>(bounds.j_max));
  const int j_int = std::clamp(static_cast<int>(std::floor(j_cont + 1e-9)),
                               bounds.j_min, bounds.j_max);

  if (auto z_sat = saturating_z(problem, bounds, j_int)) {
    out.push_back({j_int, *z_sat});
  }
  out.push_back({j_int, z});
  if (j_int + 1 <= bounds.j_max) {
    if (auto z_sat = saturating_z(problem, bounds, j_int + 1)) {
      out.push_back({j_int + 1, *z_sat});
    }
  }
}

// Z minimizing E_tx on [z_lo, z_hi]: the sign change of
// d/dZ (e^Z + c)/Z, i.e. of (Z-1)e^Z - c.
double tx_energy_argmin(const PolicyProblem& problem, double z_lo, double z_hi) {
  auto slope_sign = [&problem](double z) {
    return (z - 1.0) * std::exp(z) - problem.c_coef();
  };
  if (slope_sign(z_lo) >= 0.0) return z_lo;
  if (slope_sign(z_hi) <= 0.0) return z_hi;
  double lo = z_lo, hi = z_hi;
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (slope_sign(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Roots of e_tx(z) = target on [z_lo, z_hi], where e_tx is convex with its
// minimum at z_e. At most one root on either side of z_e.
void tx_energy_roots(const PolicyProblem& problem, double target, double z_lo,
                     double z_hi, double z_e, std::vector<double>& out) {
  auto bisect = [&problem, target](double lo, double hi) -> std::optional<double> {
    double f_lo = problem.e_tx(lo) - target;
    double f_hi = problem.e_tx(hi) - target;
    if (f_lo == 0.0) return lo;
    if (f_hi == 0.0) return hi;
    if ((f_lo < 0.0) == (f_hi < 0.0)) return std::nullopt;
    for (int iter = 0; iter < 200; ++iter) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      const double f_mid = problem.e_tx(mid) - target;
      if (f_mid == 0.0) return mid;
      if ((f_lo < 0.0) == (f_mid < 0.0)) {
        lo = mid;
        f_lo = f_mid;
      } else {
        hi = mid;
      }
    }
    return 0.5 * (lo + hi);
  };
  if (z_e > z_lo) {
    if (auto r = bisect(z_lo, z_e)) out.push_back(*r);
  }
  if (z_hi > z_e) {
    if (auto r = bisect(z_e, z_hi)) out.push_back(*r);
  }
}

bool is_feasible(const PolicyProblem& problem, const PolicyBounds& bounds,
                 const Candidate& c) {
  if (c.j < bounds.j_min || c.j > bounds.j_max) return false;
  if (c.z < bounds.z_min * (1.0 - kDeadlineSlack) ||
      c.z > bounds.z_max * (1.0 + kDeadlineSlack)) {
    return false;
  }
  const double total_s = problem.cp_time_j(c.j) + problem.tx_time_z(c.z);
  return total_s <= problem.deadline() * (1.0 + 1e-9);
}

PolicyDecision make_decision(const PolicyProblem& problem,
                             const DeviationModelFit& fit, const LossSpec& spec,
                             int j, double z) {
  PolicyDecision d;
  d.j = j;
  d.z = z;
  d.p_w = problem.p_of_z(z);
  d.rate_bps = problem.rate_of_z(z);
  d.phi_bound = accuracy_upper_bound(j, spec.eta, spec.lipschitz);
  d.utility = problem.utility(fit, j, z);
  return d;
}

}  // namespace

std::optional<PolicyDecision> optimal_policy(const DeviationModelFit& fit,
                                             const PolicyProblem& problem,
                                             const LossSpec& spec) {
  const auto bounds = compute_bounds(problem);
  if (!bounds) return std::nullopt;

  // Stationary point of the deadline-active case, clamped to the box.
  // Listed first so it wins ties whenever it is optimal, which is the case
  // whenever the transformed objective is concave over the feasible set.
  std::vector<Candidate> candidates;
  const auto zhat = solve_zhat(problem, fit, *bounds);
  if (zhat) {
    const double z_star =
        (*zhat < bounds->z_max) ? std::max(bounds->z_min, *zhat) : bounds->z_max;
    push_candidates(problem, *bounds, z_star, candidates);
  }
  push_candidates(problem, *bounds, bounds->z_max, candidates);
  push_candidates(problem, *bounds, bounds->z_min, candidates);

  // Remaining KKT cases, exact per integral iteration count. For fixed j the
  // deviation term is constant, so the Z-optimum is a critical point of the
  // quadratic energy term: the deadline boundary, the box edge, the
  // transmission-energy minimum, or a Z putting the scaled total energy at
  // the quadratic's vertex rho/2.
  const double z_e = tx_energy_argmin(problem, bounds->z_min, bounds->z_max);
  const double scale = problem.energy_scale();
  std::vector<double> roots;
  for (int j = bounds->j_min; j <= bounds->j_max; ++j) {
    const auto z_dead = saturating_z(problem, *bounds, j);
    if (!z_dead) break;  // larger j only shrinks the transmit window
    const double z_lo = *z_dead;
    candidates.push_back({j, z_lo});
    candidates.push_back({j, bounds->z_max});
    candidates.push_back({j, std::clamp(z_e, z_lo, bounds->z_max)});
    const double e_tx_target =
        problem.utility_rho() / (2.0 * scale) - problem.e_cp(j);
    if (e_tx_target > 0.0) {
      roots.clear();
      tx_energy_roots(problem, e_tx_target, z_lo, bounds->z_max,
                      std::clamp(z_e, z_lo, bounds->z_max), roots);
      for (double r : roots) candidates.push_back({j, r});
    }
  }

  const Candidate* best = nullptr;
  double best_utility = -std::numeric_limits<double>::infinity();
  for (const Candidate& c : candidates) {
    if (!is_feasible(problem, *bounds, c)) continue;
    const double u = problem.utility(fit, c.j, c.z);
    if (u > best_utility) {
      best_utility = u;
      best = &c;
    }
  }
  if (best == nullptr) return std::nullopt;
  return make_decision(problem, fit, spec, best->j, best->z);
}

std::optional<PolicyDecision> brute_force_policy(const DeviationModelFit& fit,
                                                 const PolicyProblem& problem,
                                                 const LossSpec& spec,
                                                 int grid_resolution) {
  if (grid_resolution < 2) {
    throw std::invalid_argument("grid resolution must be at least 2");
  }
  const auto bounds = compute_bounds(problem);
  if (!bounds) return std::nullopt;

  int best_j = -1;
  double best_z = 0.0;
  double best_utility = -std::numeric_limits<double>::infinity();
  for (int j = bounds->j_min; j <= bounds->j_max; ++j) {
    for (int i = 0; i <= grid_resolution; ++i) {
      const double z = bounds->z_min + (bounds->z_max - bounds->z_min) * i /
                                           grid_resolution;
      const double total_s = problem.cp_time_j(j) + problem.tx_time_z(z);
      if (total_s > problem.deadline() * (1.0 + 1e-9)) continue;
      const double u = problem.utility(fit, j, z);
      if (u > best_utility) {
        best_utility = u;
        best_j = j;
        best_z = z;
      }
    }
  }
  if (best_j < 0) return std::nullopt;
  return make_decision(problem, fit, spec, best_j, best_z);
}

std::optional<PolicyDecision> benchmark_policy(const DeviationModelFit& fit,
                                               const PolicyProblem& problem,
                                               const LossSpec& spec) {
  const auto bounds = compute_bounds(problem);
  if (!bounds) return std::nullopt;
  return make_decision(problem, fit, spec, bounds->j_max, bounds->z_max);
}

}  // namespace dpfl
