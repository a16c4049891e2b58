#include "dpfl/report.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace dpfl {
namespace {

constexpr const char* kArtifactVersion = "dpflsim 0.1.0";

std::string format_metric(double v) {
  if (std::isnan(v)) return "";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_metric(const std::string& field) {
  if (field.empty()) return std::nan("");
  return std::stod(field);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string::size_type start = 0;
  for (;;) {
    const auto pos = line.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

}  // namespace

std::string records_to_csv(std::span<const RoundRecord> records) {
  std::ostringstream out;
  out << kCsvHeader << "\n";
  for (const auto& r : records) {
    out << r.round << ',' << r.device << ',' << scheme_name(r.scheme) << ','
        << format_metric(r.loss) << ',' << format_metric(r.deviation) << ','
        << format_metric(r.iterations) << ',' << format_metric(r.tx_power_w)
        << ',' << format_metric(r.rate_bps) << ',' << format_metric(r.e_cp_j)
        << ',' << format_metric(r.e_tx_j) << ',' << format_metric(r.e_tot_j)
        << ',' << format_metric(r.sigma_g) << ',' << format_metric(r.utility)
        << ',' << (r.skipped ? 1 : 0) << "\n";
  }
  return out.str();
}

std::vector<RoundRecord> parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) {
    throw std::runtime_error("CSV header mismatch");
  }
  std::vector<RoundRecord> records;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    if (fields.size() != 14) {
      throw std::runtime_error("CSV row has " + std::to_string(fields.size()) +
                               " fields, expected 14");
    }
    RoundRecord r;
    r.round = std::stoi(fields[0]);
    r.device = std::stoi(fields[1]);
    if (fields[2] == "proposed") r.scheme = Scheme::kProposed;
    else if (fields[2] == "benchmark") r.scheme = Scheme::kBenchmark;
    else throw std::runtime_error("unknown scheme '" + fields[2] + "'");
    r.loss = parse_metric(fields[3]);
    r.deviation = parse_metric(fields[4]);
    r.iterations = parse_metric(fields[5]);
    r.tx_power_w = parse_metric(fields[6]);
    r.rate_bps = parse_metric(fields[7]);
    r.e_cp_j = parse_metric(fields[8]);
    r.e_tx_j = parse_metric(fields[9]);
    r.e_tot_j = parse_metric(fields[10]);
    r.sigma_g = parse_metric(fields[11]);
    r.utility = parse_metric(fields[12]);
    r.skipped = fields[13] == "1";
    records.push_back(r);
  }
  return records;
}

void emit_records(std::span<const RoundRecord> records, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << records_to_csv(records);
  if (!out) throw std::runtime_error("failed writing records to '" + path + "'");
}

std::vector<RoundRecord> load_records(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_csv(buffer.str());
}

SchemeComparison compare_schemes(std::span<const RoundRecord> proposed,
                                 std::span<const RoundRecord> benchmark) {
  if (proposed.size() != benchmark.size()) {
    throw std::invalid_argument("scheme runs have different record counts");
  }
  for (std::size_t i = 0; i < proposed.size(); ++i) {
    if (proposed[i].round != benchmark[i].round ||
        proposed[i].device != benchmark[i].device) {
      throw std::invalid_argument("scheme runs are not aligned by (round, device)");
    }
  }
  const RunSummary p = summarize(proposed);
  const RunSummary b = summarize(benchmark);

  SchemeComparison cmp;
  cmp.energy_std_reduction_pct =
      b.std_of_device_mean_e_tot > 0.0
          ? 100.0 * (1.0 - p.std_of_device_mean_e_tot / b.std_of_device_mean_e_tot)
          : 0.0;
  cmp.mean_energy_reduction_pct =
      b.mean_of_device_mean_e_tot > 0.0
          ? 100.0 * (1.0 - p.mean_of_device_mean_e_tot / b.mean_of_device_mean_e_tot)
          : 0.0;
  cmp.loss_std_proposed = p.mean_cross_device_loss_std;
  cmp.loss_std_benchmark = b.mean_cross_device_loss_std;
  cmp.mean_loss_gap_pct =
      b.final_window_mean_loss != 0.0
          ? 100.0 * (p.final_window_mean_loss / b.final_window_mean_loss - 1.0)
          : 0.0;
  return cmp;
}

std::string summary_text(const RunSummary& s, const std::string& label) {
  std::ostringstream out;
  out << label << ": " << s.rounds << " rounds, " << s.devices << " devices\n";
  out << "  mean total energy per round [J]: " << s.mean_of_device_mean_e_tot
      << " (cross-device std " << s.std_of_device_mean_e_tot << ")\n";
  out << "  mean loss: " << s.mean_loss << " (final window "
      << s.final_window_mean_loss << ", cross-device std "
      << s.mean_cross_device_loss_std << ")\n";
  out << "  mean iterations: " << s.mean_iterations << ", mean rate [bit/s]: "
      << s.mean_rate_bps << "\n";
  return out.str();
}

std::string comparison_text(const SchemeComparison& c) {
  std::ostringstream out;
  out << "proposed vs benchmark:\n";
  out << "  energy std reduction:  " << c.energy_std_reduction_pct << " %\n";
  out << "  mean energy reduction: " << c.mean_energy_reduction_pct << " %\n";
  out << "  loss std (proposed):   " << c.loss_std_proposed << "\n";
  out << "  loss std (benchmark):  " << c.loss_std_benchmark << "\n";
  out << "  mean loss gap:         " << c.mean_loss_gap_pct << " %\n";
  return out.str();
}

void write_manifest(const RunManifest& manifest, const std::string& path) {
  nlohmann::json j;
  j["artifact_version"] = manifest.artifact_version.empty() ? kArtifactVersion
                                                            : manifest.artifact_version;
  j["seed"] = manifest.seed;
  j["scheme"] = manifest.scheme;
  j["started_at"] = manifest.started_at;
  j["finished_at"] = manifest.finished_at;
  j["config"] = manifest.config_text;
  j["outputs"] = manifest.outputs;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << j.dump(2) << "\n";
}

RunManifest load_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  nlohmann::json j;
  in >> j;
  RunManifest m;
  m.artifact_version = j.at("artifact_version").get<std::string>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.scheme = j.at("scheme").get<std::string>();
  m.started_at = j.at("started_at").get<std::string>();
  m.finished_at = j.at("finished_at").get<std::string>();
  m.config_text = j.at("config").get<std::string>();
  m.outputs = j.at("outputs").get<std::vector<std::string>>();
  return m;
}

std::string current_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm_utc{};
  gmtime_r(&t, &tm_utc);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

}  // namespace dpfl
