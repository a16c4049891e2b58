#include "dpfl/config.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace dpfl {
namespace {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const double v = std::strtod(value.c_str(), &end);
  if (end == value.c_str() || *end != '\0') {
    throw std::invalid_argument(key + ": cannot parse '" + value + "' as a number");
  }
  return v;
}

long long parse_int(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const long long v = std::strtoll(value.c_str(), &end, 10);
  if (end == value.c_str() || *end != '\0') {
    throw std::invalid_argument(key + ": cannot parse '" + value + "' as an integer");
  }
  return v;
}

struct FieldDef {
  std::string key;
  std::function<void(SimConfig&, const std::string&)> set;
  std::function<std::string(const SimConfig&)> get;
};

std::vector<FieldDef> field_table() {
  std::vector<FieldDef> fields;
  auto add_int = [&fields](const char* key, int SimConfig::* member) {
    fields.push_back({key,
                      [key, member](SimConfig& c, const std::string& v) {
                        c.*member = static_cast<int>(parse_int(key, v));
                      },
                      [member](const SimConfig& c) { return std::to_string(c.*member); }});
  };
  auto add_double = [&fields](const char* key, double SimConfig::* member) {
    fields.push_back({key,
                      [key, member](SimConfig& c, const std::string& v) {
                        c.*member = parse_double(key, v);
                      },
                      [member](const SimConfig& c) { return format_double(c.*member); }});
  };

  add_int("sim.devices", &SimConfig::devices);
  add_int("sim.rounds", &SimConfig::rounds);
  fields.push_back({"sim.scheme",
                    [](SimConfig& c, const std::string& v) {
                      if (v == "proposed") c.scheme = Scheme::kProposed;
                      else if (v == "benchmark") c.scheme = Scheme::kBenchmark;
                      else throw std::invalid_argument(
                          "sim.scheme: expected 'proposed' or 'benchmark', got '" + v + "'");
                    },
                    [](const SimConfig& c) { return scheme_name(c.scheme); }});
  fields.push_back({"sim.seed",
                    [](SimConfig& c, const std::string& v) {
                      char* end = nullptr;
                      c.seed = std::strtoull(v.c_str(), &end, 10);
                      if (end == v.c_str() || *end != '\0') {
                        throw std::invalid_argument("sim.seed: cannot parse '" + v + "'");
                      }
                    },
                    [](const SimConfig& c) { return std::to_string(c.seed); }});
  add_int("sim.threads", &SimConfig::threads);
  fields.push_back({"sim.noiseless",
                    [](SimConfig& c, const std::string& v) {
                      if (v == "0" || v == "false") c.noiseless = false;
                      else if (v == "1" || v == "true") c.noiseless = true;
                      else throw std::invalid_argument(
                          "sim.noiseless: expected 0/1, got '" + v + "'");
                    },
                    [](const SimConfig& c) { return c.noiseless ? "1" : "0"; }});

  fields.push_back({"task.kind",
                    [](SimConfig& c, const std::string& v) {
                      if (v == "least-squares-ridge") c.task_kind = LossKind::kLeastSquaresRidge;
                      else if (v == "logistic-ridge") c.task_kind = LossKind::kLogisticRidge;
                      else throw std::invalid_argument(
                          "task.kind: expected 'least-squares-ridge' or 'logistic-ridge', got '" + v + "'");
                    },
                    [](const SimConfig& c) {
                      return std::string(c.task_kind == LossKind::kLeastSquaresRidge
                                             ? "least-squares-ridge"
                                             : "logistic-ridge");
                    }});
  add_int("task.feature_dim", &SimConfig::feature_dim);
  add_int("task.samples_per_device", &SimConfig::samples_per_device);
  add_double("task.label_noise", &SimConfig::label_noise);
  add_double("task.model_scale", &SimConfig::model_scale);

  add_double("fl.lambda", &SimConfig::lambda);
  add_double("fl.eta", &SimConfig::eta);
  add_double("fl.eta_l_target", &SimConfig::eta_l_target);
  add_double("fl.xi", &SimConfig::xi);

  add_double("privacy.epsilon_g", &SimConfig::epsilon_g);
  add_double("privacy.delta_g", &SimConfig::delta_g);
  add_double("privacy.epsilon_local", &SimConfig::epsilon_local);
  add_double("privacy.delta_local", &SimConfig::delta_local);
  add_double("privacy.theta", &SimConfig::theta);
  add_double("privacy.clip", &SimConfig::clip);
  add_double("privacy.clip_global", &SimConfig::clip_global);

  add_double("channel.alpha", &SimConfig::alpha);
  add_double("channel.carrier_hz", &SimConfig::carrier_hz);
  add_double("channel.fading_scale", &SimConfig::fading_scale);
  add_double("channel.mod_gap_db", &SimConfig::mod_gap_db);
  add_double("channel.noise_dbm_hz", &SimConfig::noise_dbm_hz);

  add_double("radio.bandwidth_hz", &SimConfig::bandwidth_hz);
  add_double("radio.p_max_w", &SimConfig::p_max_w);
  add_double("radio.p_cir_w", &SimConfig::p_cir_w);
  add_double("radio.rho", &SimConfig::rho);
  add_double("radio.r_min_m", &SimConfig::r_min_m);
  add_double("radio.r_max_m", &SimConfig::r_max_m);

  add_double("compute.tau_s", &SimConfig::tau_s);
  add_double("compute.p_cp_w", &SimConfig::p_cp_w);
  add_int("compute.j_min", &SimConfig::j_min);
  add_int("compute.j_max_cap", &SimConfig::j_max_cap);

  add_double("round.deadline_s", &SimConfig::deadline_s);
  add_double("round.payload_bits", &SimConfig::payload_bits);

  add_double("utility.rho", &SimConfig::utility_rho);
  add_double("utility.energy_scale", &SimConfig::energy_scale);

  add_int("policy.fit_window", &SimConfig::fit_window);
  add_double("policy.beta2_default", &SimConfig::beta2_default);
  return fields;
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

std::string scheme_name(Scheme s) {
  return s == Scheme::kProposed ? "proposed" : "benchmark";
}

double SimConfig::mod_gap_linear() const { return std::pow(10.0, mod_gap_db / 10.0); }

double SimConfig::noise_w() const {
  return std::pow(10.0, (noise_dbm_hz - 30.0) / 10.0) * bandwidth_hz;
}

double SimConfig::beta2_default_value() const {
  if (beta2_default > 0.0) return beta2_default;
  return 0.5 * deadline_s * p_cp_w * energy_scale;
}

double SimConfig::device_distance_m(int device) const {
  if (devices <= 1) return 0.5 * (r_min_m + r_max_m);
  return r_min_m + (r_max_m - r_min_m) * device / (devices - 1);
}

SimConfig parse_config(const std::string& text) {
  SimConfig config;
  const auto fields = field_table();
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto comment = line.find('#');
    if (comment != std::string::npos) line.erase(comment);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("line " + std::to_string(line_no) +
                                  ": expected 'key = value', got '" + line + "'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    bool found = false;
    for (const auto& field : fields) {
      if (field.key == key) {
        field.set(config, value);
        found = true;
        break;
      }
    }
    if (!found) throw std::invalid_argument("unknown config key '" + key + "'");
  }
  validate_config(config);
  return config;
}

SimConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

std::string save_config(const SimConfig& config) {
  std::ostringstream out;
  for (const auto& field : field_table()) {
    out << field.key << " = " << field.get(config) << "\n";
  }
  return out.str();
}

void validate_config(const SimConfig& c) {
  std::vector<std::string> problems;
  auto require = [&problems](bool ok, const std::string& message) {
    if (!ok) problems.push_back(message);
  };

  require(c.devices >= 1, "sim.devices: need at least 1 device");
  require(c.rounds >= 1, "sim.rounds: need at least 1 round");
  require(c.threads >= 1, "sim.threads: need at least 1 thread");

  require(c.feature_dim >= 1, "task.feature_dim: must be >= 1");
  require(c.samples_per_device >= 1, "task.samples_per_device: must be >= 1");
  require(c.label_noise >= 0.0, "task.label_noise: must be >= 0");
  require(c.task_kind != LossKind::kLogisticRidge || c.label_noise <= 0.5,
          "task.label_noise: flip probability must be <= 0.5 for logistic-ridge");
  require(c.model_scale > 0.0, "task.model_scale: must be > 0");

  require(c.lambda >= 0.0, "fl.lambda: must be >= 0");
  require(c.task_kind != LossKind::kLogisticRidge || c.lambda > 0.0,
          "fl.lambda: logistic-ridge needs lambda > 0 for strong convexity");
  require(c.eta >= 0.0, "fl.eta: must be >= 0 (0 = auto)");
  require(c.eta > 0.0 || (c.eta_l_target > 0.0 && c.eta_l_target < 2.0),
          "fl.eta_l_target: must lie in (0, 2) when fl.eta is auto");
  require(c.xi > 0.0, "fl.xi: must be > 0");

  require(c.epsilon_g > 0.0 && c.epsilon_g < 1.0,
          "privacy.epsilon_g: epsilon must lie in (0, 1)");
  require(c.delta_g > 0.0 && c.delta_g < 1.0,
          "privacy.delta_g: delta must lie in (0, 1)");
  require(c.epsilon_local > 0.0 && c.epsilon_local < 1.0,
          "privacy.epsilon_local: epsilon must lie in (0, 1)");
  require(c.delta_local > 0.0 && c.delta_local < 1.0,
          "privacy.delta_local: delta must lie in (0, 1)");
  require(c.theta >= 0.0 && c.theta <= 1.0, "privacy.theta: must lie in [0, 1]");
  require(c.clip > 0.0, "privacy.clip: must be > 0");
  require(c.clip_global > 0.0, "privacy.clip_global: must be > 0");

  require(c.alpha > 0.0, "channel.alpha: must be > 0");
  require(c.carrier_hz > 0.0, "channel.carrier_hz: must be > 0");
  require(c.fading_scale > 0.0, "channel.fading_scale: must be > 0");
  require(c.mod_gap_db >= 0.0, "channel.mod_gap_db: must be >= 0");

  require(c.bandwidth_hz > 0.0, "radio.bandwidth_hz: must be > 0");
  require(c.p_max_w > 0.0, "radio.p_max_w: must be > 0");
  require(c.p_cir_w >= 0.0, "radio.p_cir_w: must be >= 0");
  require(c.rho > 0.0 && c.rho <= 1.0, "radio.rho: must lie in (0, 1]");
  require(c.r_min_m > 0.0 && c.r_min_m <= c.r_max_m,
          "radio.r_min_m/r_max_m: need 0 < r_min <= r_max");

  require(c.tau_s > 0.0, "compute.tau_s: must be > 0");
  require(c.p_cp_w > 0.0, "compute.p_cp_w: must be > 0");
  require(c.j_min >= 1, "compute.j_min: must be >= 1");
  require(c.j_max_cap >= c.j_min, "compute.j_max_cap: must be >= compute.j_min");

  require(c.deadline_s > 0.0, "round.deadline_s: must be > 0");
  require(c.payload_bits > 0.0, "round.payload_bits: must be > 0");

  require(c.utility_rho > 0.0, "utility.rho: must be > 0");
  require(c.energy_scale > 0.0, "utility.energy_scale: must be > 0");

  require(c.fit_window >= 1, "policy.fit_window: must be >= 1");
  require(c.beta2_default >= 0.0, "policy.beta2_default: must be >= 0 (0 = auto)");

  if (!problems.empty()) {
    std::ostringstream msg;
    msg << "invalid configuration (" << problems.size() << " problem(s)):";
    for (const auto& p : problems) msg << "\n  - " << p;
    throw std::invalid_argument(msg.str());
  }
}

bool operator==(const SimConfig& a, const SimConfig& b) {
  return save_config(a) == save_config(b);
}

}  // namespace dpfl
