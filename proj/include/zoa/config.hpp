#pragma once

// Flat key=value experiment config with [oracle], [attack] and [suite]
// sections. Blank lines and '#' comments are ignored.

#include "zoa/attack.hpp"
#include "zoa/suite.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace zoa {

struct SuiteSettings {
  std::size_t inputs = 20;           // generated test inputs
  std::uint64_t input_seed = 1;      // seed for the input generator
  std::vector<Variant> variants{kAllVariants.begin(), kAllVariants.end()};
  std::size_t replications = 1;

  bool operator==(const SuiteSettings&) const = default;
};

struct ExperimentConfig {
  TranslatorSpec oracle;
  AttackConfig attack;
  SuiteSettings suite;
};

class ConfigError : public Error {
 public:
  ConfigError(std::size_t line, const std::string& msg)
      : Error("config:" + std::to_string(line) + ": " + msg), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_double(std::string_view v) {
  const std::string s(v);
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(s, &used);
  } catch (const std::exception&) {
    throw Error("expected a number, got '" + s + "'");
  }
  if (used != s.size() || !std::isfinite(out)) throw Error("expected a number, got '" + s + "'");
  return out;
}

inline std::uint64_t parse_u64(std::string_view v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty())
    throw Error("expected a non-negative integer, got '" + std::string(v) + "'");
  return out;
}

inline std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::vector<Variant> parse_variant_list(std::string_view v) {
  std::vector<Variant> out;
  while (!v.empty()) {
    const auto comma = v.find(',');
    const std::string_view item = trim(v.substr(0, comma));
    if (item.empty()) throw Error("empty entry in variant list");
    out.push_back(parse_variant(item));
    if (comma == std::string_view::npos) break;
    v.remove_prefix(comma + 1);
  }
  if (out.empty()) throw Error("variant list is empty");
  return out;
}

inline void set_oracle(TranslatorSpec& o, std::string_view key, std::string_view v) {
  if (key == "kind") o.kind = parse_translator_kind(v);
  else if (key == "height") o.shape.height = static_cast<Eigen::Index>(parse_u64(v));
  else if (key == "width") o.shape.width = static_cast<Eigen::Index>(parse_u64(v));
  else if (key == "channels") o.shape.channels = static_cast<Eigen::Index>(parse_u64(v));
  else if (key == "mask") o.mask = std::string(v);
  else if (key == "target") o.target = parse_double(v);
  else if (key == "shift") o.shift = parse_double(v);
  else if (key == "coupling") o.coupling = parse_double(v);
  else if (key == "blur_gain") o.blur_gain = parse_double(v);
  else if (key == "nonlinearity") o.nonlinearity = parse_double(v);
  else if (key == "seed") o.seed = parse_u64(v);
  else throw Error("unknown key '" + std::string(key) + "' in [oracle]");
}

inline void set_attack(AttackConfig& a, std::string_view key, std::string_view v) {
  if (key == "delta") a.delta = parse_double(v);
  else if (key == "epsilon") a.epsilon = parse_double(v);
  else if (key == "eta") a.eta = parse_double(v);
  else if (key == "q") a.q = parse_u64(v);
  else if (key == "S") a.S = parse_u64(v);
  else if (key == "R") a.R = parse_u64(v);
  else if (key == "budget") a.budget = parse_u64(v);
  else if (key == "threshold") a.threshold = parse_double(v);
  else if (key == "variant") a.variant = parse_variant(v);
  else if (key == "loss") a.loss = parse_loss_kind(v);
  else if (key == "scale_mode") a.scale_mode = parse_scale_mode(v);
  else if (key == "max_slide_steps") a.max_slide_steps = parse_u64(v);
  else if (key == "stall_retries") a.stall_retries = parse_u64(v);
  else if (key == "surrogate_scale") a.surrogate_scale = parse_double(v);
  else if (key == "seed") a.seed = parse_u64(v);
  else throw Error("unknown key '" + std::string(key) + "' in [attack]");
}

inline void set_suite(SuiteSettings& s, std::string_view key, std::string_view v) {
  if (key == "inputs") s.inputs = parse_u64(v);
  else if (key == "input_seed") s.input_seed = parse_u64(v);
  else if (key == "variants") s.variants = parse_variant_list(v);
  else if (key == "replications") s.replications = parse_u64(v);
  else throw Error("unknown key '" + std::string(key) + "' in [suite]");
}

} // namespace detail

/// Checks cross-field constraints that a single key cannot express.
inline void validate(const ExperimentConfig& c) {
  c.attack.validate();
  if (c.oracle.shape.size() < 1) throw Error("oracle shape must be nonempty");
  build_synthetic(c.oracle); // rejects bad translator parameters
  if (c.suite.inputs < 1) throw Error("suite needs at least one input");
  if (c.suite.replications < 1) throw Error("suite needs at least one replication");
}

/// Parses config text. Every failure is reported as "config:LINE: message";
/// whole-file validation failures use the line past the end.
inline ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig cfg;
  std::string section;
  std::set<std::string> seen;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    try {
      if (line.front() == '[') {
        if (line.back() != ']') throw Error("unterminated section header");
        section = std::string(detail::trim(line.substr(1, line.size() - 2)));
        if (section != "oracle" && section != "attack" && section != "suite")
          throw Error("unknown section [" + section + "]");
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) throw Error("expected key = value");
      const std::string_view key = detail::trim(line.substr(0, eq));
      const std::string_view value = detail::trim(line.substr(eq + 1));
      if (key.empty()) throw Error("missing key");
      if (value.empty()) throw Error("missing value for '" + std::string(key) + "'");
      if (section.empty()) throw Error("key '" + std::string(key) + "' outside any section");
      if (!seen.insert(section + "." + std::string(key)).second)
        throw Error("duplicate key '" + std::string(key) + "'");
      if (section == "oracle") detail::set_oracle(cfg.oracle, key, value);
      else if (section == "attack") detail::set_attack(cfg.attack, key, value);
      else detail::set_suite(cfg.suite, key, value);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError(line_no, e.what());
    }
  }
  try {
    validate(cfg);
  } catch (const std::exception& e) {
    throw ConfigError(line_no + 1, e.what());
  }
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open config " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

/// Canonical text: every key, fixed order, round-trip exact doubles.
inline std::string serialize_config(const ExperimentConfig& c) {
  using detail::fmt_double;
  std::ostringstream os;
  const TranslatorSpec& o = c.oracle;
  os << "[oracle]\n"
     << "kind = " << to_string(o.kind) << '\n'
     << "height = " << o.shape.height << '\n'
     << "width = " << o.shape.width << '\n'
     << "channels = " << o.shape.channels << '\n'
     << "mask = " << o.mask << '\n'
     << "target = " << fmt_double(o.target) << '\n'
     << "shift = " << fmt_double(o.shift) << '\n'
     << "coupling = " << fmt_double(o.coupling) << '\n'
     << "blur_gain = " << fmt_double(o.blur_gain) << '\n'
     << "nonlinearity = " << fmt_double(o.nonlinearity) << '\n'
     << "seed = " << o.seed << '\n';
  const AttackConfig& a = c.attack;
  os << "\n[attack]\n"
     << "delta = " << fmt_double(a.delta) << '\n'
     << "epsilon = " << fmt_double(a.epsilon) << '\n'
     << "eta = " << fmt_double(a.eta) << '\n'
     << "q = " << a.q << '\n'
     << "S = " << a.S << '\n'
     << "R = " << a.R << '\n'
     << "budget = " << a.budget << '\n'
     << "threshold = " << fmt_double(a.threshold) << '\n'
     << "variant = " << to_string(a.variant) << '\n'
     << "loss = " << to_string(a.loss) << '\n'
     << "scale_mode = " << to_string(a.scale_mode) << '\n'
     << "max_slide_steps = " << a.max_slide_steps << '\n'
     << "stall_retries = " << a.stall_retries << '\n'
     << "surrogate_scale = " << fmt_double(a.surrogate_scale) << '\n'
     << "seed = " << a.seed << '\n';
  const SuiteSettings& s = c.suite;
  os << "\n[suite]\n"
     << "inputs = " << s.inputs << '\n'
     << "input_seed = " << s.input_seed << '\n'
     << "variants = ";
  for (std::size_t k = 0; k < s.variants.size(); ++k) os << (k ? "," : "") << to_string(s.variants[k]);
  os << "\nreplications = " << s.replications << '\n';
  return os.str();
}

/// 64-bit FNV-1a over the canonical serialization.
inline std::uint64_t config_hash(const ExperimentConfig& c) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : serialize_config(c)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Test input i of a config-defined suite.
inline Vec suite_input(const ExperimentConfig& c, std::size_t i) {
  return synthetic_image(c.oracle.shape, mix_seed(c.suite.input_seed, i));
}

inline ExperimentSuite make_suite(const ExperimentConfig& c, unsigned parallel) {
  ExperimentSuite s;
  s.oracle = c.oracle;
  for (std::size_t i = 0; i < c.suite.inputs; ++i) s.inputs.push_back(suite_input(c, i));
  s.variants = c.suite.variants;
  s.base = c.attack;
  s.replications = c.suite.replications;
  s.parallel = parallel;
  return s;
}

} // namespace zoa
