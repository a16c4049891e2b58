#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dpfl/rng.hpp"
#include "dpfl/wireless.hpp"

using namespace dpfl;

namespace {

ChannelState unit_channel() {
  ChannelState ch;
  ch.gain = 1.0;
  ch.kappa = 0.556;
  ch.alpha = 4.0;
  ch.noise_w = 1e-12;
  ch.mod_gap = 1.0;
  return ch;
}

}  // namespace

TEST_CASE("pathloss factor at 32 MHz") {
  CHECK(pathloss_factor(32e6) == doctest::Approx(0.556).epsilon(2e-3));
}

TEST_CASE("draw_channel is reproducible and matches the fading scale") {
  Rng a(42), b(42);
  const ChannelState ca = draw_channel(a, 4.0, 32e6, 1.0, 1e-15, 9.55);
  const ChannelState cb = draw_channel(b, 4.0, 32e6, 1.0, 1e-15, 9.55);
  CHECK(ca.gain == cb.gain);
  CHECK(ca.kappa == cb.kappa);

  Rng rng(7);
  double sum = 0.0;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    sum += draw_channel(rng, 4.0, 32e6, 1.0, 1e-15, 9.55).gain;
  }
  CHECK(sum / draws == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("snr spot value and linearity") {
  const ChannelState ch = unit_channel();
  CHECK(snr(0.0, ch, 100.0) == 0.0);
  // kappa P gain / (N r^alpha) = 0.556 * 0.1 / (1e-12 * 1e8)
  CHECK(snr(0.1, ch, 100.0) == doctest::Approx(556.0).epsilon(1e-12));
  CHECK(snr(0.2, ch, 100.0) == doctest::Approx(2.0 * snr(0.1, ch, 100.0)));
}

TEST_CASE("rate reference points") {
  CHECK(rate(250e3, 0.0, 9.55) == 0.0);
  CHECK(rate(250e3, 3.0, 1.0) == doctest::Approx(500e3));   // log2(4) = 2
  CHECK(rate(250e3, 9.55, 9.55) == doctest::Approx(250e3)); // log2(2) = 1
}

TEST_CASE("tx_time and link-down") {
  CHECK(tx_time(875e3, 875e3) == doctest::Approx(1.0));
  CHECK(tx_time(875e3, 2.0 * 875e3) == doctest::Approx(0.5));
  CHECK_THROWS_AS(tx_time(875e3, 0.0), LinkDownError);
}

TEST_CASE("tx_power_total") {
  CHECK(tx_power_total(0.25, 1.0, 0.0) == doctest::Approx(0.25));
  CHECK(tx_power_total(0.09, 0.45, 0.0825) == doctest::Approx(0.2825));
  CHECK(tx_power_total(0.2, 0.45, 0.0825) > tx_power_total(0.1, 0.45, 0.0825));
  CHECK_THROWS_AS(tx_power_total(0.1, 0.0, 0.0), std::invalid_argument);
}

TEST_CASE("cp_time is linear in the iteration count") {
  CHECK(cp_time(0, 200, 5e-5) == 0.0);
  CHECK(cp_time(80, 200, 5e-5) == doctest::Approx(0.8));
  CHECK(cp_time(40, 200, 5e-5) == doctest::Approx(0.5 * cp_time(80, 200, 5e-5)));
}

TEST_CASE("round_energy composes the published pieces") {
  MtdProfile profile;
  profile.sample_count = 200;
  profile.tau_s = 5e-5;  // d*tau = 0.01 s per iteration
  profile.p_cp_w = 0.096;
  profile.p_cir_w = 0.0825;
  profile.rho = 0.45;
  profile.bandwidth_hz = 250e3;
  profile.distance_m = 100.0;
  ChannelState ch = unit_channel();
  ch.mod_gap = 9.55;

  // Pick P so the spot checks are easy: E_cp = 80 * 0.01 * 0.096 = 76.8 mJ.
  const double p_w = 0.09;
  const RoundEnergy e = round_energy(80, p_w, profile, ch, 875e3);
  CHECK(e.e_cp_j == doctest::Approx(0.0768).epsilon(1e-12));
  const double r = rate(profile.bandwidth_hz, snr(p_w, ch, 100.0), ch.mod_gap);
  const double expected_tx = (875e3 / r) * 0.2825;
  CHECK(e.e_tx_j == doctest::Approx(expected_tx).epsilon(1e-12));
  CHECK(e.e_tot_j == doctest::Approx(e.e_cp_j + e.e_tx_j));

  SUBCASE("computation energy is exactly linear in j") {
    const double slope = profile.sample_count * profile.tau_s * profile.p_cp_w;
    for (int j : {0, 1, 7, 33}) {
      CHECK(round_energy(j, p_w, profile, ch, 875e3).e_cp_j ==
            doctest::Approx(j * slope).epsilon(1e-12));
    }
  }
  SUBCASE("hand-composed transmission energy") {
    // 0.2 s at total power 282.5 mW -> 56.5 mJ on top of 76.8 mJ compute.
    const double tx_s = tx_time(875e3, 875e3 / 0.2);
    CHECK(tx_s * tx_power_total(0.09, 0.45, 0.0825) ==
          doctest::Approx(0.0565).epsilon(1e-12));
  }
}

TEST_CASE("monotonicity in transmit power") {
  const ChannelState ch = unit_channel();
  double prev_snr = -1.0, prev_rate = -1.0;
  for (double p = 0.0; p <= 1.0; p += 0.1) {
    const double s = snr(p, ch, 150.0);
    const double r = rate(250e3, s, ch.mod_gap);
    CHECK(s >= prev_snr);
    CHECK(r >= prev_rate);
    prev_snr = s;
    prev_rate = r;
  }
}
