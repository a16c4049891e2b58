#include "dpfl/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace dpfl {
namespace {

// Runs fn(0..n-1) on up to `threads` workers. Work items must be
// independent; the first exception is rethrown on the caller.
void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  if (threads <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error = nullptr;
  std::mutex error_mutex;
  auto worker = [&]() {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  const int count = std::min(threads, n);
  pool.reserve(count);
  for (int t = 0; t < count; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

Dataset generate_dataset(const SimConfig& cfg, const ModelVector& w_star,
                         int device) {
  Rng rng(cfg.seed, StreamLabel::kDataGen, static_cast<std::uint64_t>(device));
  const int d = cfg.samples_per_device;
  const int s = cfg.feature_dim;
  Dataset data;
  data.features.resize(d, s);
  data.labels.resize(d);
  for (int i = 0; i < d; ++i) {
    for (int f = 0; f < s; ++f) data.features(i, f) = rng.gaussian();
    const double margin = data.features.row(i).dot(w_star);
    if (cfg.task_kind == LossKind::kLeastSquaresRidge) {
      data.labels[i] = margin + cfg.label_noise * rng.gaussian();
    } else {
      double label = margin >= 0.0 ? 1.0 : -1.0;
      if (rng.uniform() < cfg.label_noise) label = -label;
      data.labels[i] = label;
    }
  }
  return data;
}

// Per-device scratch for one round.
struct DeviceRound {
  bool participating = false;
  ChannelState ch;
  PolicyDecision decision;
  ModelVector local_grad;
  ModelVector update;  // clipped + locally perturbed h_k as received by the AP
  RoundEnergy energy;
  double deviation = std::nan("");
  double sigma_g = std::nan("");
};

}  // namespace

Simulation::Simulation(const SimConfig& config) : cfg_(config) {
  validate_config(cfg_);

  Rng truth_rng(cfg_.seed, StreamLabel::kGroundTruth);
  ModelVector w_star = truth_rng.gaussian_vector(cfg_.feature_dim);
  w_star *= cfg_.model_scale / std::sqrt(static_cast<double>(cfg_.feature_dim));

  spec_.kind = cfg_.task_kind;
  spec_.lambda = cfg_.lambda;
  spec_.xi = cfg_.xi;

  states_.resize(cfg_.devices);
  std::vector<Dataset> datasets(cfg_.devices);
  for (int k = 0; k < cfg_.devices; ++k) {
    datasets[k] = generate_dataset(cfg_, w_star, k);
  }
  estimate_curvature(datasets, spec_);
  spec_.eta = cfg_.eta > 0.0 ? cfg_.eta : cfg_.eta_l_target / spec_.lipschitz;
  contraction_factor(spec_.eta, spec_.lipschitz);  // rejects eta*L outside (0, 2)

  const DeviationModelFit initial_fit{1.0, cfg_.beta2_default_value()};
  for (int k = 0; k < cfg_.devices; ++k) {
    MtdState& st = states_[k];
    st.data = std::move(datasets[k]);
    st.profile.sample_count = cfg_.samples_per_device;
    st.profile.tau_s = cfg_.tau_s;
    st.profile.p_cp_w = cfg_.p_cp_w;
    st.profile.p_cir_w = cfg_.p_cir_w;
    st.profile.rho = cfg_.rho;
    st.profile.bandwidth_hz = cfg_.bandwidth_hz;
    st.profile.distance_m = cfg_.device_distance_m(k);
    st.profile.p_max_w = cfg_.p_max_w;
    st.profile.j_min = cfg_.j_min;
    st.profile.j_max_cap = cfg_.j_max_cap;
    st.model = ModelVector::Zero(cfg_.feature_dim);
    st.fit = initial_fit;
    st.history.window = static_cast<std::size_t>(cfg_.fit_window);
    st.local_ledger = PrivacyLedger({cfg_.epsilon_local, cfg_.delta_local});
    st.global_ledger = PrivacyLedger({cfg_.epsilon_g, cfg_.delta_g});
  }
  w_true_ = ModelVector::Zero(cfg_.feature_dim);
}

std::vector<RoundRecord> Simulation::run_round(int round) {
  if (round < 0) throw std::invalid_argument("negative round index");
  const int devices = cfg_.devices;
  const PrivacyParams global_params{cfg_.epsilon_g, cfg_.delta_g};
  const PrivacyParams local_params{cfg_.epsilon_local, cfg_.delta_local};
  const double local_sigma = min_sigma(local_params);
  std::vector<DeviceRound> scratch(devices);

  // Channel realization, policy solve, and gradient exchange. The policy
  // uses the fit revealed at the end of the previous round.
  parallel_for(devices, cfg_.threads, [&](int k) {
    DeviceRound& dr = scratch[k];
    MtdState& st = states_[k];
    Rng ch_rng(cfg_.seed, StreamLabel::kChannel, static_cast<std::uint64_t>(k),
               static_cast<std::uint64_t>(round));
    dr.ch = draw_channel(ch_rng, cfg_.alpha, cfg_.carrier_hz, cfg_.fading_scale,
                         cfg_.noise_w(), cfg_.mod_gap_linear());
    const PolicyProblem problem(st.profile, dr.ch, cfg_.deadline_s,
                                cfg_.payload_bits, cfg_.utility_rho,
                                cfg_.energy_scale);
    const auto decision = cfg_.scheme == Scheme::kProposed
                              ? optimal_policy(st.fit, problem, spec_)
                              : benchmark_policy(st.fit, problem, spec_);
    if (!decision) return;  // skip round
    dr.participating = true;
    dr.decision = *decision;
    dr.local_grad = local_gradient(st.model, st.data, spec_);
  });

  std::vector<int> participants;
  std::vector<ModelVector> grads;
  for (int k = 0; k < devices; ++k) {
    if (scratch[k].participating) {
      participants.push_back(k);
      grads.push_back(scratch[k].local_grad);
    }
  }

  if (!participants.empty()) {
    const ModelVector global_grad = average_gradient(grads);

    // Local training, sensitivity clipping, and the local release.
    parallel_for(static_cast<int>(participants.size()), cfg_.threads, [&](int i) {
      const int k = participants[static_cast<std::size_t>(i)];
      DeviceRound& dr = scratch[k];
      MtdState& st = states_[k];
      ModelVector h;
      try {
        h = run_local_iterations(st.model, st.data, global_grad, spec_,
                                 dr.decision.j);
      } catch (const std::runtime_error& e) {
        std::ostringstream msg;
        msg << "round " << round << ", device " << k << ": " << e.what();
        throw std::runtime_error(msg.str());
      }
      Rng noise_rng(cfg_.seed, StreamLabel::kLocalNoise,
                    static_cast<std::uint64_t>(k),
                    static_cast<std::uint64_t>(round));
      if (cfg_.noiseless) {
        dr.update = h;
        noise_rng.gaussian_vector(h.size());  // keep stream consumption fixed
      } else {
        auto [clipped, sensitivity] = clip_to_sensitivity(h, cfg_.clip);
        dr.update = gaussian_perturb(clipped, sensitivity, local_sigma, noise_rng);
      }
      dr.energy = round_energy(dr.decision.j, dr.decision.p_w, st.profile, dr.ch,
                               cfg_.payload_bits);
    });

    std::vector<ModelVector> updates;
    updates.reserve(participants.size());
    for (int k : participants) updates.push_back(scratch[k].update);

    const ModelVector w_new = aggregate(w_true_, updates);
    ModelVector release_increment = w_new - w_true_;
    if (!cfg_.noiseless) {
      release_increment =
          clip_to_sensitivity(release_increment, cfg_.clip_global).first;
    }
    const ModelVector release_base = w_true_ + release_increment;

    const std::vector<double> deviations = deviation_factors(w_new, updates);
    for (std::size_t i = 0; i < participants.size(); ++i) {
      scratch[participants[i]].deviation = deviations[i];
    }

    // Per-device global release with deviation-scaled noise, fit update.
    parallel_for(static_cast<int>(participants.size()), cfg_.threads, [&](int i) {
      const int k = participants[static_cast<std::size_t>(i)];
      DeviceRound& dr = scratch[k];
      MtdState& st = states_[k];
      dr.sigma_g = cfg_.scheme == Scheme::kProposed
                       ? adaptive_sigma(global_params, dr.deviation, cfg_.theta)
                       : min_sigma(global_params);
      Rng noise_rng(cfg_.seed, StreamLabel::kGlobalNoise,
                    static_cast<std::uint64_t>(k),
                    static_cast<std::uint64_t>(round));
      const double noise_level = cfg_.noiseless ? 0.0 : dr.sigma_g;
      st.model = gaussian_perturb(release_base, cfg_.clip_global, noise_level,
                                  noise_rng);
      st.local_ledger.record_round();
      st.global_ledger.record_round();
      st.cumulative_e_cp_j += dr.energy.e_cp_j;
      st.cumulative_e_tx_j += dr.energy.e_tx_j;
      st.history.push(cfg_.energy_scale * dr.energy.e_cp_j, dr.deviation);
      st.fit = fit_deviation_model(st.history,
                                   {1.0, cfg_.beta2_default_value()}, st.fit);
    });

    w_true_ = w_new;
  }

  std::vector<RoundRecord> records(devices);
  parallel_for(devices, cfg_.threads, [&](int k) {
    const DeviceRound& dr = scratch[k];
    RoundRecord& rec = records[k];
    rec.round = round;
    rec.device = k;
    rec.scheme = cfg_.scheme;
    if (!dr.participating) {
      rec.skipped = true;
      return;
    }
    rec.loss = local_loss(states_[k].model, states_[k].data, spec_);
    rec.deviation = dr.deviation;
    rec.iterations = dr.decision.j;
    rec.tx_power_w = dr.decision.p_w;
    rec.rate_bps = dr.decision.rate_bps;
    rec.e_cp_j = dr.energy.e_cp_j;
    rec.e_tx_j = dr.energy.e_tx_j;
    rec.e_tot_j = dr.energy.e_tot_j;
    rec.sigma_g = dr.sigma_g;
    rec.utility = dr.decision.utility;
  });
  return records;
}

std::vector<RoundRecord> Simulation::run(const SimConfig& config) {
  Simulation sim(config);
  std::vector<RoundRecord> all;
  all.reserve(static_cast<std::size_t>(config.rounds) * config.devices);
  for (int m = 0; m < config.rounds; ++m) {
    auto records = sim.run_round(m);
    all.insert(all.end(), records.begin(), records.end());
  }
  return all;
}

std::vector<RoundRecord> run_simulation(const SimConfig& config) {
  return Simulation::run(config);
}

RunSummary summarize(std::span<const RoundRecord> records) {
  if (records.empty()) throw std::invalid_argument("summarize: no records");
  int max_device = 0;
  int max_round = 0;
  for (const auto& r : records) {
    max_device = std::max(max_device, r.device);
    max_round = std::max(max_round, r.round);
  }
  RunSummary summary;
  summary.devices = max_device + 1;
  summary.rounds = max_round + 1;

  summary.per_device.resize(summary.devices);
  for (int k = 0; k < summary.devices; ++k) summary.per_device[k].device = k;
  for (const auto& r : records) {
    DeviceSummary& d = summary.per_device[r.device];
    if (r.skipped) {
      ++d.rounds_skipped;
      continue;
    }
    ++d.rounds_participated;
    d.mean_e_cp_j += r.e_cp_j;
    d.mean_e_tx_j += r.e_tx_j;
    d.mean_e_tot_j += r.e_tot_j;
    d.mean_iterations += r.iterations;
    d.mean_rate_bps += r.rate_bps;
    d.mean_loss += r.loss;
  }
  for (auto& d : summary.per_device) {
    if (d.rounds_participated == 0) continue;
    const double n = d.rounds_participated;
    d.mean_e_cp_j /= n;
    d.mean_e_tx_j /= n;
    d.mean_e_tot_j /= n;
    d.mean_iterations /= n;
    d.mean_rate_bps /= n;
    d.mean_loss /= n;
  }

  // Cross-device spread of the per-device mean total energy.
  double mean = 0.0, sq = 0.0;
  int active = 0;
  for (const auto& d : summary.per_device) {
    if (d.rounds_participated == 0) continue;
    mean += d.mean_e_tot_j;
    sq += d.mean_e_tot_j * d.mean_e_tot_j;
    ++active;
  }
  if (active > 0) {
    mean /= active;
    summary.mean_of_device_mean_e_tot = mean;
    summary.std_of_device_mean_e_tot = std::sqrt(std::max(0.0, sq / active - mean * mean));
  }

  // Loss statistics per round.
  std::vector<std::vector<double>> losses_by_round(summary.rounds);
  double loss_sum = 0.0, iter_sum = 0.0, rate_sum = 0.0;
  long participated = 0;
  for (const auto& r : records) {
    if (r.skipped) continue;
    losses_by_round[r.round].push_back(r.loss);
    loss_sum += r.loss;
    iter_sum += r.iterations;
    rate_sum += r.rate_bps;
    ++participated;
  }
  if (participated > 0) {
    summary.mean_loss = loss_sum / participated;
    summary.mean_iterations = iter_sum / participated;
    summary.mean_rate_bps = rate_sum / participated;
  }
  double std_sum = 0.0;
  int rounds_with_losses = 0;
  for (const auto& round_losses : losses_by_round) {
    if (round_losses.empty()) continue;
    double m = 0.0, s = 0.0;
    for (double v : round_losses) m += v;
    m /= round_losses.size();
    for (double v : round_losses) s += (v - m) * (v - m);
    std_sum += std::sqrt(s / round_losses.size());
    ++rounds_with_losses;
  }
  if (rounds_with_losses > 0) {
    summary.mean_cross_device_loss_std = std_sum / rounds_with_losses;
  }

  const int window = std::max(1, summary.rounds / 4);
  double window_sum = 0.0;
  long window_count = 0;
  for (int m = summary.rounds - window; m < summary.rounds; ++m) {
    for (double v : losses_by_round[m]) {
      window_sum += v;
      ++window_count;
    }
  }
  if (window_count > 0) summary.final_window_mean_loss = window_sum / window_count;
  return summary;
}

}  // namespace dpfl
