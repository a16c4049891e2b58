#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "dpfl/config.hpp"
#include "dpfl/report.hpp"
#include "dpfl/simulator.hpp"

using namespace dpfl;

namespace {

bool same_metric(double a, double b) {
  if (std::isnan(a) && std::isnan(b)) return true;
  return a == b;
}

bool same_record(const RoundRecord& a, const RoundRecord& b) {
  return a.round == b.round && a.device == b.device && a.scheme == b.scheme &&
         a.skipped == b.skipped && same_metric(a.loss, b.loss) &&
         same_metric(a.deviation, b.deviation) &&
         same_metric(a.iterations, b.iterations) &&
         same_metric(a.tx_power_w, b.tx_power_w) &&
         same_metric(a.rate_bps, b.rate_bps) &&
         same_metric(a.e_cp_j, b.e_cp_j) && same_metric(a.e_tx_j, b.e_tx_j) &&
         same_metric(a.e_tot_j, b.e_tot_j) &&
         same_metric(a.sigma_g, b.sigma_g) && same_metric(a.utility, b.utility);
}

std::vector<RoundRecord> sample_records() {
  SimConfig config;
  config.devices = 2;
  config.rounds = 4;
  config.feature_dim = 5;
  config.samples_per_device = 30;
  config.seed = 99;
  return run_simulation(config);
}

}  // namespace

TEST_CASE("config defaults survive an empty document") {
  const SimConfig defaults;
  const SimConfig parsed = parse_config("");
  CHECK(parsed == defaults);
  CHECK(parsed.devices == 10);
  CHECK(parsed.rounds == 200);
  CHECK(parsed.epsilon_g == 0.95);
  CHECK(parsed.theta == 0.6);
  CHECK(parsed.clip == 0.01);
  CHECK(parsed.r_min_m == 50.0);
  CHECK(parsed.r_max_m == 200.0);
  CHECK(parsed.j_min == 10);
  CHECK(parsed.p_cir_w == 0.0825);
  CHECK(parsed.p_cp_w == 0.096);
  CHECK(parsed.utility_rho == 0.5);
  CHECK(parsed.bandwidth_hz == 250e3);
}

TEST_CASE("config validation names the violated key") {
  CHECK_THROWS_WITH_AS(parse_config("privacy.epsilon_g = 1.5"),
                       doctest::Contains("epsilon must lie in (0, 1)"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(parse_config("nonsense.key = 1"),
                       doctest::Contains("unknown config key"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(parse_config("sim.devices = many"),
                       doctest::Contains("sim.devices"), std::invalid_argument);
  // Multiple violations are all reported.
  try {
    parse_config("sim.devices = 0\nradio.rho = 7\n");
    FAIL("expected rejection");
  } catch (const std::invalid_argument& e) {
    const std::string what = e.what();
    CHECK(what.find("sim.devices") != std::string::npos);
    CHECK(what.find("radio.rho") != std::string::npos);
  }
}

TEST_CASE("config round trip is lossless") {
  SimConfig config;
  config.devices = 7;
  config.rounds = 123;
  config.seed = 31337;
  config.scheme = Scheme::kBenchmark;
  config.task_kind = LossKind::kLeastSquaresRidge;
  config.eta = 0.0123456789012345;
  config.delta_g = 3.1e-7;
  config.noiseless = true;
  const SimConfig reparsed = parse_config(save_config(config));
  CHECK(reparsed == config);
  CHECK(reparsed.eta == config.eta);
  CHECK(reparsed.delta_g == config.delta_g);
}

TEST_CASE("config file comments and spacing are tolerated") {
  const SimConfig parsed = parse_config(
      "# a comment\n"
      "\n"
      "sim.devices = 4   # trailing\n"
      "  task.feature_dim=8\n");
  CHECK(parsed.devices == 4);
  CHECK(parsed.feature_dim == 8);
}

TEST_CASE("csv header and shape") {
  const auto records = sample_records();
  const std::string csv = records_to_csv(records);
  CHECK(csv.rfind(kCsvHeader, 0) == 0);
  const auto parsed = parse_csv(csv);
  REQUIRE(parsed.size() == records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    CHECK(same_record(parsed[i], records[i]));
  }
}

TEST_CASE("csv of no records is just the header") {
  const std::string csv = records_to_csv(std::vector<RoundRecord>{});
  CHECK(csv == std::string(kCsvHeader) + "\n");
  CHECK(parse_csv(csv).empty());
}

TEST_CASE("skipped rows serialize with empty metric fields") {
  RoundRecord rec;
  rec.round = 3;
  rec.device = 1;
  rec.scheme = Scheme::kBenchmark;
  rec.skipped = true;
  const std::string csv = records_to_csv(std::vector<RoundRecord>{rec});
  CHECK(csv.find("3,1,benchmark,,,,,,,,,,,1\n") != std::string::npos);
  const auto parsed = parse_csv(csv);
  REQUIRE(parsed.size() == 1);
  CHECK(parsed[0].skipped);
  CHECK(std::isnan(parsed[0].loss));
}

TEST_CASE("csv is byte-stable and every number finite") {
  const auto records = sample_records();
  CHECK(records_to_csv(records) == records_to_csv(sample_records()));
  for (const auto& rec : records) {
    if (rec.skipped) continue;
    CHECK(std::isfinite(rec.loss));
    CHECK(std::isfinite(rec.e_tot_j));
    CHECK(std::isfinite(rec.utility));
  }
}

TEST_CASE("emit and reload through the filesystem") {
  const auto records = sample_records();
  const std::string path = "/tmp/dpfl_test_records.csv";
  emit_records(records, path);
  const auto loaded = load_records(path);
  REQUIRE(loaded.size() == records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    CHECK(same_record(loaded[i], records[i]));
  }
  std::remove(path.c_str());
  CHECK_THROWS_AS(emit_records(records, "/nonexistent-dir/x.csv"),
                  std::runtime_error);
}

TEST_CASE("compare_schemes on identical runs reports no change") {
  const auto records = sample_records();
  const auto cmp = compare_schemes(records, records);
  CHECK(cmp.energy_std_reduction_pct == doctest::Approx(0.0));
  CHECK(cmp.mean_energy_reduction_pct == doctest::Approx(0.0));
  CHECK(cmp.mean_loss_gap_pct == doctest::Approx(0.0));
  CHECK(cmp.loss_std_proposed == cmp.loss_std_benchmark);
}

TEST_CASE("compare_schemes hand-built toy records") {
  auto make = [](int round, int device, double loss, double e_tot) {
    RoundRecord r;
    r.round = round;
    r.device = device;
    r.loss = loss;
    r.iterations = 1;
    r.tx_power_w = 0.1;
    r.rate_bps = 1e6;
    r.deviation = 0.0;
    r.e_cp_j = 0.0;
    r.e_tx_j = e_tot;
    r.e_tot_j = e_tot;
    r.sigma_g = 5.0;
    r.utility = 0.0;
    return r;
  };
  // Benchmark: device means 0.2 / 0.6 -> mean 0.4, std 0.2.
  std::vector<RoundRecord> bench{make(0, 0, 1.0, 0.2), make(0, 1, 1.0, 0.6)};
  // Proposed: device means 0.3 / 0.4 -> mean 0.35, std 0.05.
  std::vector<RoundRecord> prop{make(0, 0, 1.1, 0.3), make(0, 1, 1.1, 0.4)};
  const auto cmp = compare_schemes(prop, bench);
  CHECK(cmp.energy_std_reduction_pct == doctest::Approx(75.0));
  CHECK(cmp.mean_energy_reduction_pct == doctest::Approx(12.5));
  CHECK(cmp.mean_loss_gap_pct == doctest::Approx(10.0));

  std::vector<RoundRecord> misshapen{make(0, 0, 1.0, 0.2)};
  CHECK_THROWS_AS(compare_schemes(misshapen, bench), std::invalid_argument);
}

TEST_CASE("comparison text carries the four headline quantities") {
  SchemeComparison cmp;
  cmp.energy_std_reduction_pct = 91.5;
  cmp.mean_energy_reduction_pct = 43.0;
  cmp.loss_std_proposed = 0.031;
  cmp.loss_std_benchmark = 0.019;
  cmp.mean_loss_gap_pct = 4.9;
  const std::string text = comparison_text(cmp);
  CHECK(text.find("energy std reduction") != std::string::npos);
  CHECK(text.find("mean energy reduction") != std::string::npos);
  CHECK(text.find("loss std (proposed)") != std::string::npos);
  CHECK(text.find("loss std (benchmark)") != std::string::npos);
  CHECK(text.find("mean loss gap") != std::string::npos);
}

TEST_CASE("manifest round trip preserves the config snapshot") {
  SimConfig config;
  config.devices = 5;
  config.seed = 404;
  RunManifest manifest;
  manifest.artifact_version = "dpflsim test";
  manifest.seed = config.seed;
  manifest.scheme = "both";
  manifest.started_at = current_timestamp();
  manifest.config_text = save_config(config);
  manifest.outputs = {"a.csv", "b.csv"};
  const std::string path = "/tmp/dpfl_test_manifest.json";
  write_manifest(manifest, path);
  const RunManifest loaded = load_manifest(path);
  std::remove(path.c_str());
  CHECK(loaded.seed == manifest.seed);
  CHECK(loaded.scheme == "both");
  CHECK(loaded.outputs == manifest.outputs);
  CHECK(parse_config(loaded.config_text) == config);
}
