#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "dpfl/privacy.hpp"
#include "dpfl/rng.hpp"

using namespace dpfl;

TEST_CASE("min_sigma calibration values") {
  CHECK(min_sigma({0.5, 1e-5}) == doctest::Approx(9.6896).epsilon(1e-3 / 9.6896));
  CHECK(min_sigma({0.95, 1e-5}) == doctest::Approx(5.100).epsilon(1e-2 / 5.1));
  CHECK_THROWS_AS(min_sigma({1.5, 1e-5}), std::invalid_argument);
  CHECK_THROWS_AS(min_sigma({0.0, 1e-5}), std::invalid_argument);
  CHECK_THROWS_AS(min_sigma({0.5, 0.0}), std::invalid_argument);
}

TEST_CASE("min_sigma strictly decreasing in epsilon") {
  Rng rng(1);
  for (int rep = 0; rep < 50; ++rep) {
    const double e1 = rng.uniform(0.01, 0.99);
    const double e2 = rng.uniform(0.01, 0.99);
    if (e1 == e2) continue;
    const double lo = std::min(e1, e2), hi = std::max(e1, e2);
    CHECK(min_sigma({lo, 1e-5}) > min_sigma({hi, 1e-5}));
  }
}

TEST_CASE("gaussian_perturb with zero sigma is the identity") {
  Rng rng(2);
  const ModelVector v = rng.gaussian_vector(8);
  Rng noise(3);
  CHECK((gaussian_perturb(v, 0.01, 0.0, noise) - v).norm() == 0.0);
}

TEST_CASE("gaussian_perturb empirical moments") {
  const int draws = 100000;
  const double s_f = 0.02;
  const double sigma = 4.0;
  const ModelVector zero = ModelVector::Zero(4);
  Rng rng(4);
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < draws; ++i) {
    const ModelVector n = gaussian_perturb(zero, s_f, sigma, rng);
    for (int c = 0; c < 4; ++c) {
      sum += n[c];
      sq += n[c] * n[c];
    }
  }
  const double count = 4.0 * draws;
  const double mean = sum / count;
  const double var = sq / count - mean * mean;
  const double target = s_f * s_f * sigma * sigma;
  CHECK(std::abs(var - target) <= 0.05 * target);
  CHECK(std::abs(mean) <= 3.0 * s_f * sigma / std::sqrt(count));
}

TEST_CASE("gaussian_perturb replays bit-for-bit under a fixed seed") {
  Rng data_rng(5);
  const ModelVector v = data_rng.gaussian_vector(16);
  Rng a(777), b(777);
  const ModelVector x = gaussian_perturb(v, 0.01, 5.1, a);
  const ModelVector y = gaussian_perturb(v, 0.01, 5.1, b);
  CHECK((x - y).norm() == 0.0);
}

TEST_CASE("clip_to_sensitivity") {
  Rng rng(6);
  ModelVector h = rng.gaussian_vector(6);
  h *= 0.005 / h.norm();
  const auto [unchanged, s1] = clip_to_sensitivity(h, 0.01);
  CHECK((unchanged - h).norm() == 0.0);
  CHECK(s1 == 0.01);

  ModelVector big = rng.gaussian_vector(6);
  big *= 0.02 / big.norm();  // twice the bound
  const auto [clipped, s2] = clip_to_sensitivity(big, 0.01);
  CHECK(clipped.norm() == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(s2 == 0.01);
  CHECK_THROWS_AS(clip_to_sensitivity(h, 0.0), std::invalid_argument);
}

TEST_CASE("cosine_similarity reference directions") {
  Rng rng(7);
  const ModelVector a = rng.gaussian_vector(5);
  CHECK(cosine_similarity(a, a) == doctest::Approx(1.0));
  CHECK(cosine_similarity(a, -a) == doctest::Approx(-1.0));

  ModelVector e1 = ModelVector::Zero(4), e2 = ModelVector::Zero(4);
  e1[0] = 1.0;
  e2[1] = 1.0;
  CHECK(cosine_similarity(e1, e2) == doctest::Approx(0.0));
  CHECK(cosine_similarity(e1, ModelVector::Zero(4)) == 0.0);
}

TEST_CASE("deviation_factors hand case and invariants") {
  ModelVector w = ModelVector::Zero(2);
  w[0] = 1.0;
  ModelVector u1(2), u2(2);
  u1 << 0.8, 0.6;                       // cosine 0.8 against w
  u2 << 0.4, std::sqrt(1.0 - 0.16);     // cosine 0.4
  const auto factors = deviation_factors(w, std::vector<ModelVector>{u1, u2});
  CHECK(factors[0] == 0.0);
  CHECK(factors[1] == doctest::Approx(0.5).epsilon(1e-12));

  SUBCASE("single device is its own best") {
    const auto single = deviation_factors(w, std::vector<ModelVector>{u2});
    CHECK(single.size() == 1);
    CHECK(single[0] == 0.0);
  }
  SUBCASE("identical updates all get zero") {
    const auto same = deviation_factors(w, std::vector<ModelVector>{u1, u1, u1});
    for (double f : same) CHECK(f == 0.0);
  }
  SUBCASE("no positive similarity collapses to zero") {
    const auto all_bad = deviation_factors(w, std::vector<ModelVector>{-u1, -u2});
    for (double f : all_bad) CHECK(f == 0.0);
  }
  SUBCASE("always clamped with an exact zero present") {
    Rng rng(8);
    for (int rep = 0; rep < 50; ++rep) {
      std::vector<ModelVector> updates;
      for (int k = 0; k < 6; ++k) updates.push_back(rng.gaussian_vector(4));
      const ModelVector wg = rng.gaussian_vector(4);
      const auto out = deviation_factors(wg, updates);
      bool has_zero = false;
      for (double f : out) {
        CHECK(f >= 0.0);
        CHECK(f <= 1.0);
        has_zero = has_zero || f == 0.0;
      }
      CHECK(has_zero);
    }
  }
}

TEST_CASE("adaptive_sigma reduces to min_sigma and grows with deviation") {
  const PrivacyParams p{0.95, 1e-5};
  for (double theta : {0.0, 0.3, 0.6, 1.0}) {
    CHECK(adaptive_sigma(p, 0.0, theta) == min_sigma(p));
  }
  CHECK(std::abs(adaptive_sigma(p, 0.0, 0.6) - min_sigma(p)) <= 1e-12);
  CHECK(adaptive_sigma(p, 1.0, 0.6) ==
        doctest::Approx(12.75).epsilon(1e-2 / 12.75));
  double previous = 0.0;
  for (double dev = 0.0; dev <= 1.0; dev += 0.1) {
    const double s = adaptive_sigma(p, dev, 0.6);
    CHECK(s > previous);
    previous = s;
  }
  CHECK_THROWS_AS(adaptive_sigma(p, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("basic composition") {
  const PrivacyParams p{0.95, 1e-5};
  const auto none = compose_basic(0, p);
  CHECK(none.epsilon == 0.0);
  CHECK(none.delta == 0.0);
  const auto one = compose_basic(1, p);
  CHECK(one.epsilon == p.epsilon);
  CHECK(one.delta == p.delta);
  const auto fifty = compose_basic(50, p);
  CHECK(fifty.epsilon == doctest::Approx(47.5));
  CHECK(fifty.delta == doctest::Approx(5e-4));
}

TEST_CASE("strong composition") {
  const PrivacyParams at_e{0.7, std::exp(-1.0)};
  const auto one = compose_strong(1, at_e);
  CHECK(one.epsilon == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(one.delta == doctest::Approx(std::exp(-1.0)));

  const PrivacyParams p{0.95, 1e-5};
  const auto fifty = compose_strong(50, p);
  CHECK(fifty.epsilon == doctest::Approx(22.79).epsilon(0.05 / 22.79));
  CHECK(fifty.delta == doctest::Approx(5e-4));
  // Tighter than basic composition once rounds accumulate.
  CHECK(fifty.epsilon < compose_basic(50, p).epsilon);
  CHECK_THROWS_AS(compose_strong(0, p), std::invalid_argument);
}

TEST_CASE("ledger totals equal the closed forms exactly") {
  const PrivacyParams p{0.5, 1e-6};
  PrivacyLedger ledger(p);
  for (int m = 1; m <= 40; ++m) {
    ledger.record_round();
    const auto basic = ledger.basic_total();
    const auto strong = ledger.strong_total();
    const auto basic_ref = compose_basic(m, p);
    const auto strong_ref = compose_strong(m, p);
    CHECK(basic.epsilon == basic_ref.epsilon);
    CHECK(basic.delta == basic_ref.delta);
    CHECK(strong.epsilon == strong_ref.epsilon);
    CHECK(strong.delta == strong_ref.delta);
  }
}
