#include "swarmraft/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "swarmraft/error.hpp"

namespace swarmraft {

std::string_view to_string(MotionModel m) {
  return m == MotionModel::static_formation ? "static" : "constant_velocity";
}

MotionModel parse_motion_model(std::string_view text) {
  if (text == "static") return MotionModel::static_formation;
  if (text == "constant_velocity") return MotionModel::constant_velocity;
  throw Error(fmt::format("unknown motion model '{}'", text));
}

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_double(std::string_view key, std::string_view text) {
  text = trim(text);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v)) {
    throw Error(fmt::format("invalid number '{}' for {}", text, key));
  }
  return v;
}

std::uint64_t parse_uint(std::string_view key, std::string_view text) {
  text = trim(text);
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw Error(fmt::format("invalid non-negative integer '{}' for {}", text, key));
  }
  return v;
}

bool parse_bool(std::string_view key, std::string_view text) {
  text = trim(text);
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw Error(fmt::format("invalid boolean '{}' for {}", text, key));
}

std::vector<double> parse_list(std::string_view key, std::string_view text) {
  std::vector<double> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = text.find(',', start);
    out.push_back(parse_double(key, text.substr(start, comma == std::string_view::npos ? text.size() - start
                                                                                       : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

Position parse_vector(std::string_view key, std::string_view text) {
  const auto v = parse_list(key, text);
  if (v.size() != 3) throw Error(fmt::format("{} needs three comma-separated components", key));
  return {v[0], v[1], v[2]};
}

// A single value means an isotropic covariance.
CovarianceDiag parse_covariance(std::string_view key, std::string_view text) {
  const auto v = parse_list(key, text);
  if (v.size() == 1) return CovarianceDiag::isotropic(v[0]);
  if (v.size() == 3) return CovarianceDiag{{v[0], v[1], v[2]}};
  throw Error(fmt::format("{} needs one or three variances", key));
}

std::optional<double> parse_auto(std::string_view key, std::string_view text) {
  if (trim(text) == "auto") return std::nullopt;
  return parse_double(key, text);
}

std::string num(double v) { return fmt::format("{}", v); }
std::string vec(const Position& p) { return fmt::format("{},{},{}", p.x, p.y, p.z); }
std::string cov(const CovarianceDiag& c) {
  if (c.variances[0] == c.variances[1] && c.variances[1] == c.variances[2]) return num(c.variances[0]);
  return fmt::format("{},{},{}", c.variances[0], c.variances[1], c.variances[2]);
}
std::string boolean(bool b) { return b ? "true" : "false"; }
std::string opt(const std::optional<double>& v) { return v ? num(*v) : "auto"; }

struct Field {
  std::function<void(SwarmConfig&, std::string_view, std::string_view)> set;
  std::function<std::string(const SwarmConfig&)> get;
};

const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = [] {
    std::vector<std::pair<std::string, Field>> t;
    auto add = [&](std::string key, auto set, auto get) { t.emplace_back(std::move(key), Field{set, get}); };
    using C = SwarmConfig;
    using K = std::string_view;
    add("n", [](C& c, K k, K v) { c.n = parse_uint(k, v); }, [](const C& c) { return std::to_string(c.n); });
    add("f", [](C& c, K k, K v) { c.f = parse_uint(k, v); }, [](const C& c) { return std::to_string(c.f); });
    add("rounds", [](C& c, K k, K v) { c.rounds = parse_uint(k, v); },
        [](const C& c) { return std::to_string(c.rounds); });
    add("dimension", [](C& c, K k, K v) { c.dimension = static_cast<int>(parse_uint(k, v)); },
        [](const C& c) { return std::to_string(c.dimension); });
    add("bounding_box", [](C& c, K k, K v) { c.bounding_box = parse_double(k, v); },
        [](const C& c) { return num(c.bounding_box); });
    add("min_separation", [](C& c, K k, K v) { c.min_separation = parse_double(k, v); },
        [](const C& c) { return num(c.min_separation); });
    add("r_gnss", [](C& c, K k, K v) { c.r_gnss = parse_covariance(k, v); },
        [](const C& c) { return cov(c.r_gnss); });
    add("r_ins", [](C& c, K k, K v) { c.r_ins = parse_covariance(k, v); },
        [](const C& c) { return cov(c.r_ins); });
    add("sigma_d", [](C& c, K k, K v) { c.sigma_d = parse_double(k, v); },
        [](const C& c) { return num(c.sigma_d); });
    add("motion", [](C& c, K, K v) { c.motion = parse_motion_model(trim(v)); },
        [](const C& c) { return std::string(to_string(c.motion)); });
    add("speed", [](C& c, K k, K v) { c.speed = parse_double(k, v); }, [](const C& c) { return num(c.speed); });
    add("consensus_enabled", [](C& c, K k, K v) { c.consensus_enabled = parse_bool(k, v); },
        [](const C& c) { return boolean(c.consensus_enabled); });
    add("seed", [](C& c, K k, K v) { c.seed = Seed{parse_uint(k, v)}; },
        [](const C& c) { return std::to_string(c.seed.value); });

    add("attack.mode", [](C& c, K, K v) { c.attack.mode = parse_attack_mode(trim(v)); },
        [](const C& c) { return std::string(to_string(c.attack.mode)); });
    add("attack.offset_magnitude", [](C& c, K k, K v) { c.attack.offset_magnitude = parse_double(k, v); },
        [](const C& c) { return num(c.attack.offset_magnitude); });
    add("attack.offset_model", [](C& c, K, K v) { c.attack.offset_model = parse_offset_model(trim(v)); },
        [](const C& c) { return std::string(to_string(c.attack.offset_model)); });
    add("attack.fixed_offset", [](C& c, K k, K v) { c.attack.fixed_offset = parse_vector(k, v); },
        [](const C& c) { return vec(c.attack.fixed_offset); });
    add("attack.drift", [](C& c, K k, K v) { c.attack.drift = parse_vector(k, v); },
        [](const C& c) { return vec(c.attack.drift); });
    add("attack.range_bias", [](C& c, K k, K v) { c.attack.range_bias = parse_double(k, v); },
        [](const C& c) { return num(c.attack.range_bias); });
    add("attack.colluding", [](C& c, K k, K v) { c.attack.colluding = parse_bool(k, v); },
        [](const C& c) { return boolean(c.attack.colluding); });
    add("attack.unsafe", [](C& c, K k, K v) { c.attack.unsafe = parse_bool(k, v); },
        [](const C& c) { return boolean(c.attack.unsafe); });

    add("detection.tau", [](C& c, K k, K v) { c.detection.tau = parse_auto(k, v); },
        [](const C& c) { return opt(c.detection.tau); });
    add("detection.epsilon", [](C& c, K k, K v) { c.detection.epsilon = parse_auto(k, v); },
        [](const C& c) { return opt(c.detection.epsilon); });
    add("detection.residual_threshold_T", [](C& c, K k, K v) { c.detection.residual_threshold_T = parse_auto(k, v); },
        [](const C& c) { return opt(c.detection.residual_threshold_T); });
    add("detection.k_max", [](C& c, K k, K v) { c.detection.k_max = static_cast<int>(parse_uint(k, v)); },
        [](const C& c) { return std::to_string(c.detection.k_max); });
    add("detection.step_tol", [](C& c, K k, K v) { c.detection.step_tol = parse_double(k, v); },
        [](const C& c) { return num(c.detection.step_tol); });
    add("detection.min_anchors", [](C& c, K k, K v) { c.detection.min_anchors = parse_uint(k, v); },
        [](const C& c) { return std::to_string(c.detection.min_anchors); });
    add("detection.fallback", [](C& c, K, K v) { c.detection.fallback = parse_fallback_policy(trim(v)); },
        [](const C& c) { return std::string(to_string(c.detection.fallback)); });
    add("detection.init", [](C& c, K, K v) { c.detection.init = parse_init_policy(trim(v)); },
        [](const C& c) { return std::string(to_string(c.detection.init)); });
    add("detection.use_residual_detector",
        [](C& c, K k, K v) { c.detection.use_residual_detector = parse_bool(k, v); },
        [](const C& c) { return boolean(c.detection.use_residual_detector); });
    add("detection.calibration_trials",
        [](C& c, K k, K v) { c.detection.calibration_trials = parse_uint(k, v); },
        [](const C& c) { return std::to_string(c.detection.calibration_trials); });

    add("raft.election_timeout_min",
        [](C& c, K k, K v) { c.raft_timeouts.min = static_cast<int>(parse_uint(k, v)); },
        [](const C& c) { return std::to_string(c.raft_timeouts.min); });
    add("raft.election_timeout_max",
        [](C& c, K k, K v) { c.raft_timeouts.max = static_cast<int>(parse_uint(k, v)); },
        [](const C& c) { return std::to_string(c.raft_timeouts.max); });
    return t;
  }();
  return table;
}

const Field& field(std::string_view key) {
  for (const auto& [k, f] : fields()) {
    if (k == key) return f;
  }
  throw Error(fmt::format("unknown config key '{}'", key));
}

}  // namespace

void SwarmConfig::validate() const {
  if (n < 2) throw Error("n must be at least 2");
  if (f > n) throw Error("f must not exceed n");
  if (!attack.unsafe && 2 * f + 1 > n) {
    throw Error(fmt::format("f = {} exceeds the majority bound for n = {} (set attack.unsafe to allow)", f, n));
  }
  if (rounds < 1) throw Error("rounds must be at least 1");
  if (dimension != 2 && dimension != 3) throw Error("dimension must be 2 or 3");
  if (!(bounding_box > 0.0)) throw Error("bounding_box must be positive");
  if (!(min_separation > 0.0)) throw Error("min_separation must be positive");
  r_gnss.validate();
  r_ins.validate();
  if (!(sigma_d >= 0.0)) throw Error("sigma_d must be non-negative");
  if (!(speed >= 0.0)) throw Error("speed must be non-negative");
  if (!(attack.offset_magnitude >= 0.0)) throw Error("attack.offset_magnitude must be non-negative");
  if (attack.mode == AttackMode::collusion && !attack.colluding) {
    throw Error("attack.mode = collusion requires attack.colluding = true");
  }
  if (detection.tau && !(*detection.tau > 0.0)) throw Error("detection.tau must be positive");
  if (detection.epsilon && !(*detection.epsilon > 0.0)) throw Error("detection.epsilon must be positive");
  if (detection.residual_threshold_T && !(*detection.residual_threshold_T >= 0.0)) {
    throw Error("detection.residual_threshold_T must be non-negative");
  }
  if (detection.k_max < 1) throw Error("detection.k_max must be at least 1");
  if (!(detection.step_tol > 0.0)) throw Error("detection.step_tol must be positive");
  if (detection.min_anchors < 1) throw Error("detection.min_anchors must be at least 1");
  if (raft_timeouts.min < 1 || raft_timeouts.max < raft_timeouts.min) {
    throw Error("raft election timeouts need 1 <= min <= max");
  }
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& [key, f] : fields()) k.push_back(key);
    return k;
  }();
  return keys;
}

void apply_override(SwarmConfig& cfg, std::string_view key, std::string_view value) {
  field(key).set(cfg, key, value);
}

SwarmConfig parse_config(std::string_view text, SwarmConfig base) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto eol = text.find('\n', pos);
    std::string_view line = text.substr(pos, eol == std::string_view::npos ? text.size() - pos : eol - pos);
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw Error(fmt::format("line {}: expected key = value", line_no));
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    try {
      apply_override(base, key, value);
    } catch (const Error& e) {
      throw Error(fmt::format("line {}: {}", line_no, e.what()));
    }
  }
  return base;
}

SwarmConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot read config '{}'", path));
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_config(buffer.str());
  } catch (const IoError&) {
    throw;
  } catch (const Error& e) {
    throw Error(fmt::format("{}: {}", path, e.what()));
  }
}

std::string config_value(const SwarmConfig& cfg, std::string_view key) { return field(key).get(cfg); }

std::string to_text(const SwarmConfig& cfg) {
  std::string out;
  for (const auto& [key, f] : fields()) out += fmt::format("{} = {}\n", key, f.get(cfg));
  return out;
}

nlohmann::ordered_json to_json(const SwarmConfig& cfg) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [key, f] : fields()) j[key] = f.get(cfg);
  return j;
}

DetectionParams resolve_detection(const DetectionConfig& cfg, double calibrated_T) {
  DetectionParams p;
  p.residual_threshold_T = cfg.residual_threshold_T.value_or(calibrated_T);
  p.tau = cfg.tau.value_or(std::max(p.residual_threshold_T, kMinTolerance));
  p.epsilon = cfg.epsilon.value_or(p.tau);
  p.k_max = cfg.k_max;
  p.step_tol = cfg.step_tol;
  p.min_anchors = cfg.min_anchors;
  p.fallback = cfg.fallback;
  p.init = cfg.init;
  p.use_residual_detector = cfg.use_residual_detector;
  p.validate();
  return p;
}

}  // namespace swarmraft
