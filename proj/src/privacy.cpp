#include "dpfl/privacy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dpfl {
namespace {

void check_params(const PrivacyParams& p) {
  if (!(p.epsilon > 0.0 && p.epsilon < 1.0)) {
    throw std::invalid_argument("privacy budget epsilon must lie in (0, 1)");
  }
  if (!(p.delta > 0.0 && p.delta < 1.0)) {
    throw std::invalid_argument("leakage probability delta must lie in (0, 1)");
  }
}

}  // namespace

double min_sigma(const PrivacyParams& p) {
  check_params(p);
  return std::sqrt(2.0 * std::log(1.25 / p.delta)) / p.epsilon;
}

double adaptive_sigma(const PrivacyParams& p, double deviation, double theta) {
  check_params(p);
  if (!(theta >= 0.0 && theta <= 1.0)) {
    throw std::invalid_argument("privacy scale theta must lie in [0, 1]");
  }
  if (!(deviation >= 0.0 && deviation <= 1.0)) {
    throw std::invalid_argument("deviation factor must lie in [0, 1]");
  }
  const double shrink = 1.0 - deviation * theta;
  if (!(shrink > 0.0)) {
    throw std::invalid_argument("deviation * theta >= 1 leaves no privacy budget");
  }
  return std::sqrt(2.0 * std::log(1.25 / p.delta)) / (p.epsilon * shrink);
}

ModelVector gaussian_perturb(const ModelVector& v, double sensitivity,
                             double sigma, Rng& rng) {
  if (sensitivity < 0.0 || sigma < 0.0) {
    throw std::invalid_argument("sensitivity and sigma must be nonnegative");
  }
  return v + sensitivity * sigma * rng.gaussian_vector(v.size());
}

std::pair<ModelVector, double> clip_to_sensitivity(const ModelVector& h,
                                                   double max_norm) {
  if (!(max_norm > 0.0)) throw std::invalid_argument("clip bound must be positive");
  const double norm = h.norm();
  if (norm <= max_norm) return {h, max_norm};
  return {h * (max_norm / norm), max_norm};
}

double cosine_similarity(const ModelVector& a, const ModelVector& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na <= 1e-15 || nb <= 1e-15) return 0.0;
  return a.dot(b) / (na * nb);
}

std::vector<double> deviation_factors(const ModelVector& w_g,
                                      std::span<const ModelVector> updates) {
  if (updates.empty()) throw std::invalid_argument("deviation_factors: empty list");
  std::vector<double> sims(updates.size());
  for (std::size_t k = 0; k < updates.size(); ++k) {
    sims[k] = cosine_similarity(w_g, updates[k]);
  }
  const auto best = std::max_element(sims.begin(), sims.end());
  std::vector<double> factors(updates.size(), 0.0);
  if (*best <= 0.0) return factors;  // no relative information
  for (std::size_t k = 0; k < updates.size(); ++k) {
    factors[k] = std::clamp(1.0 - sims[k] / *best, 0.0, 1.0);
  }
  factors[static_cast<std::size_t>(best - sims.begin())] = 0.0;
  return factors;
}

ComposedBudget compose_basic(int rounds, const PrivacyParams& p) {
  if (rounds < 0) throw std::invalid_argument("negative round count");
  return {rounds * p.epsilon, rounds * p.delta};
}

ComposedBudget compose_strong(int rounds, const PrivacyParams& p) {
  if (rounds < 1) throw std::invalid_argument("strong composition needs rounds >= 1");
  if (!(p.delta > 0.0 && p.delta < 1.0)) {
    throw std::invalid_argument("strong composition needs delta in (0, 1)");
  }
  return {p.epsilon * std::sqrt(rounds * std::log(1.0 / p.delta)),
          rounds * p.delta};
}

}  // namespace dpfl
