#pragma once

#include <utility>
#include <vector>

#include "dpfl/fl_core.hpp"
#include "dpfl/rng.hpp"

namespace dpfl {

// Per-release privacy target. epsilon must lie in (0, 1) for the Gaussian
// mechanism calibration below to be valid.
struct PrivacyParams {
  double epsilon = 0.0;
  double delta = 0.0;
};

struct ComposedBudget {
  double epsilon = 0.0;
  double delta = 0.0;
};

// Smallest noise multiplier achieving (epsilon, delta)-DP:
// (1/epsilon) * sqrt(2 ln(1.25/delta)).
double min_sigma(const PrivacyParams& p);

// Noise multiplier enlarged by the deviation factor:
// min_sigma / (1 - deviation * theta). Equals min_sigma at deviation 0.
// Throws if deviation * theta >= 1.
double adaptive_sigma(const PrivacyParams& p, double deviation, double theta);

// v + n with n_i i.i.d. N(0, (sensitivity * sigma)^2).
ModelVector gaussian_perturb(const ModelVector& v, double sensitivity,
                             double sigma, Rng& rng);

// Rescales h to L2 norm max_norm when it is longer; the clip bound is the
// released vector's sensitivity. Returns (clipped vector, sensitivity).
std::pair<ModelVector, double> clip_to_sensitivity(const ModelVector& h,
                                                   double max_norm);

// a.b / (|a||b|), or 0 when either norm is <= 1e-15.
double cosine_similarity(const ModelVector& a, const ModelVector& b);

// Relative dissimilarity of each update to the global model:
// E_k = 1 - sim(w_g, h_k) / max_k sim(w_g, h_k), clamped to [0, 1].
// The best device gets exactly 0. When every similarity is <= 0 there is
// no usable relative ordering and all factors are 0.
std::vector<double> deviation_factors(const ModelVector& w_g,
                                      std::span<const ModelVector> updates);

// Privacy loss after m rounds under basic composition: (m eps, m delta).
ComposedBudget compose_basic(int rounds, const PrivacyParams& p);

// Strong composition: (eps sqrt(m ln(1/delta)), m delta). Requires m >= 1.
ComposedBudget compose_strong(int rounds, const PrivacyParams& p);

// Accumulated privacy loss of one entity releasing once per round with
// fixed per-round parameters. Totals are evaluated via the closed forms so
// they match compose_basic / compose_strong exactly.
class PrivacyLedger {
 public:
  PrivacyLedger() = default;
  explicit PrivacyLedger(PrivacyParams per_round) : per_round_(per_round) {}

  void record_round() { ++rounds_; }
  int rounds() const { return rounds_; }
  ComposedBudget basic_total() const { return compose_basic(rounds_, per_round_); }
  ComposedBudget strong_total() const {
    if (rounds_ == 0) return {0.0, 0.0};
    return compose_strong(rounds_, per_round_);
  }

 private:
  PrivacyParams per_round_;
  int rounds_ = 0;
};

}  // namespace dpfl
