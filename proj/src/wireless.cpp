#include "dpfl/wireless.hpp"

#include <cmath>

namespace dpfl {

namespace {
constexpr double kSpeedOfLight = 299792458.0;  // m/s
}

double pathloss_factor(double carrier_hz) {
  if (!(carrier_hz > 0.0)) throw std::invalid_argument("carrier frequency must be positive");
  const double ratio = kSpeedOfLight / (4.0 * M_PI * carrier_hz);
  return ratio * ratio;
}

ChannelState draw_channel(Rng& rng, double alpha, double carrier_hz,
                          double fading_scale, double noise_w, double mod_gap) {
  if (!(alpha > 0.0) || !(fading_scale > 0.0) || !(noise_w > 0.0) || !(mod_gap >= 1.0)) {
    throw std::invalid_argument("invalid channel parameters");
  }
  ChannelState ch;
  ch.gain = rng.exponential(fading_scale);
  ch.kappa = pathloss_factor(carrier_hz);
  ch.alpha = alpha;
  ch.noise_w = noise_w;
  ch.mod_gap = mod_gap;
  return ch;
}

double snr(double p_w, const ChannelState& ch, double distance_m) {
  if (p_w < 0.0) throw std::invalid_argument("transmit power must be nonnegative");
  return ch.kappa * p_w * ch.gain / (ch.noise_w * std::pow(distance_m, ch.alpha));
}

double rate(double bandwidth_hz, double snr_value, double mod_gap) {
  if (snr_value < 0.0) throw std::invalid_argument("SNR must be nonnegative");
  return bandwidth_hz * std::log2(1.0 + snr_value / mod_gap);
}

double tx_time(double payload_bits, double rate_bps) {
  if (!(rate_bps > 0.0)) throw LinkDownError();
  return payload_bits / rate_bps;
}

double tx_power_total(double p_w, double rho, double p_cir_w) {
  if (!(rho > 0.0 && rho <= 1.0)) throw std::invalid_argument("rho must lie in (0, 1]");
  return p_w / rho + p_cir_w;
}

double cp_time(double iterations, int sample_count, double tau_s) {
  if (iterations < 0.0) throw std::invalid_argument("negative iteration count");
  return iterations * sample_count * tau_s;
}

RoundEnergy round_energy(int iterations, double p_w, const MtdProfile& profile,
                         const ChannelState& ch, double payload_bits) {
  RoundEnergy e;
  e.e_cp_j = cp_time(iterations, profile.sample_count, profile.tau_s) * profile.p_cp_w;
  const double r = rate(profile.bandwidth_hz, snr(p_w, ch, profile.distance_m), ch.mod_gap);
  e.e_tx_j = tx_time(payload_bits, r) * tx_power_total(p_w, profile.rho, profile.p_cir_w);
  e.e_tot_j = e.e_cp_j + e.e_tx_j;
  return e;
}

}  // namespace dpfl
