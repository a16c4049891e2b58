#pragma once

#include <stdexcept>

#include "dpfl/rng.hpp"

namespace dpfl {

// Static per-device hardware, radio, and data-size parameters. All values
// are SI (watts, seconds, hertz, meters); dB-valued config entries are
// converted before a profile is built.
struct MtdProfile {
  int sample_count = 0;      // d_k
  double tau_s = 0.0;        // seconds per sample per local iteration
  double p_cp_w = 0.0;       // computation power
  double p_cir_w = 0.0;      // transmit circuitry power
  double rho = 1.0;          // power amplifier drain efficiency, (0, 1]
  double bandwidth_hz = 0.0; // B_k
  double distance_m = 0.0;   // r_k
  double p_max_w = 0.0;      // transmit power bound
  int j_min = 1;             // minimum local iterations
  int j_max_cap = 1 << 20;   // hard cap on iterations per round
};

// One round's channel realization and the link constants needed to turn a
// transmit power into an SNR. Immutable for the duration of the round.
struct ChannelState {
  double gain = 0.0;       // |h_k|^2, exponential with scale varsigma
  double kappa = 0.0;      // (c / (4 pi f_c))^2
  double alpha = 0.0;      // path-loss exponent
  double noise_w = 0.0;    // receiver noise power sigma^2_awgn = N_0 * B
  double mod_gap = 1.0;    // modulation/coding gap Gamma, linear, >= 1
};

// Raised when a zero rate makes transmission impossible; callers record the
// device as skipping the round.
struct LinkDownError : std::runtime_error {
  LinkDownError() : std::runtime_error("link down: transmission rate is zero") {}
};

double pathloss_factor(double carrier_hz);  // kappa

ChannelState draw_channel(Rng& rng, double alpha, double carrier_hz,
                          double fading_scale, double noise_w, double mod_gap);

// kappa * P * gain / (noise * r^alpha)
double snr(double p_w, const ChannelState& ch, double distance_m);

// B * log2(1 + snr / Gamma) in bits/s
double rate(double bandwidth_hz, double snr_value, double mod_gap);

// bits / rate; throws LinkDownError when the rate is zero.
double tx_time(double payload_bits, double rate_bps);

// P / rho + P_cir
double tx_power_total(double p_w, double rho, double p_cir_w);

// j * d_k * tau_k
double cp_time(double iterations, int sample_count, double tau_s);

struct RoundEnergy {
  double e_cp_j = 0.0;
  double e_tx_j = 0.0;
  double e_tot_j = 0.0;
};

// Energy of j local iterations plus one upload of payload_bits at transmit
// power p_w. LinkDownError propagates from tx_time.
RoundEnergy round_energy(int iterations, double p_w, const MtdProfile& profile,
                         const ChannelState& ch, double payload_bits);

}  // namespace dpfl
