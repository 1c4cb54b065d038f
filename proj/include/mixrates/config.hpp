#pragma once

// Flat "key = value" configuration files (one pair per line, '#' starts a
// comment) and their translation into a LadderConfig.

#include <charconv>
#include <cstdint>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "mixrates/errors.hpp"
#include "mixrates/harness.hpp"

namespace mixrates {

using ConfigMap = std::map<std::string, std::string>;

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <class T>
T parse_number(std::string_view key, const std::string& text) {
  T v{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || text.empty())
    throw ValidationError("config key '" + std::string(key) + "': cannot parse '" + text + "'");
  return v;
}

inline bool parse_bool(std::string_view key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ValidationError("config key '" + std::string(key) + "': expected true or false, got '" + text + "'");
}

}  // namespace detail

/// Later assignments to a key override earlier ones. Malformed lines throw with the line number.
inline ConfigMap parse_config(std::istream& in) {
  ConfigMap out;
  std::string line;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = detail::trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw ValidationError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = detail::trim(std::string_view(body).substr(0, eq));
    const std::string value = detail::trim(std::string_view(body).substr(eq + 1));
    if (key.empty()) throw ValidationError("config line " + std::to_string(lineno) + ": empty key");
    out[key] = value;
  }
  return out;
}

inline ConfigMap parse_config(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_config(in);
}

/// Keys understood by ladder_config_from.
inline const std::vector<std::string>& ladder_config_keys() {
  static const std::vector<std::string> keys{"experiment", "n_values", "replicates", "seed",  "threads",
                                             "lambda0",    "gamma",    "sigma",      "beta1", "beta2",
                                             "fixed_design"};
  return keys;
}

/// Applies `values` on top of `base`; unknown keys are rejected. The result is validated.
inline LadderConfig ladder_config_from(const ConfigMap& values, LadderConfig base = {}) {
  for (const auto& [key, text] : values) {
    if (key == "experiment") {
      base.experiment = parse_experiment(text);
    } else if (key == "n_values") {
      base.n_values.clear();
      std::string item;
      std::istringstream items(text);
      while (std::getline(items, item, ','))
        base.n_values.push_back(detail::parse_number<std::size_t>(key, detail::trim(item)));
    } else if (key == "replicates") {
      base.replicates = detail::parse_number<std::size_t>(key, text);
    } else if (key == "seed") {
      base.master_seed = detail::parse_number<std::uint64_t>(key, text);
    } else if (key == "threads") {
      base.threads = detail::parse_number<unsigned>(key, text);
      detail::require(base.threads >= 1, "config key 'threads' must be at least 1");
    } else if (key == "lambda0") {
      base.lasso.lambda0 = detail::parse_number<double>(key, text);
    } else if (key == "gamma") {
      base.lasso.gamma = detail::parse_number<double>(key, text);
    } else if (key == "sigma") {
      base.lasso.sigma = detail::parse_number<double>(key, text);
    } else if (key == "beta1") {
      base.lasso.beta1 = detail::parse_number<double>(key, text);
    } else if (key == "beta2") {
      base.lasso.beta2 = detail::parse_number<double>(key, text);
    } else if (key == "fixed_design") {
      base.lasso.fixed_design = detail::parse_bool(key, text);
    } else {
      throw ValidationError("unknown config key '" + key + "'");
    }
  }
  validate(base);
  return base;
}

/// Resolved configuration as key/value pairs (inverse of ladder_config_from).
inline ConfigMap to_config_map(const LadderConfig& cfg) {
  std::ostringstream ns;
  for (std::size_t i = 0; i < cfg.n_values.size(); ++i) ns << (i ? "," : "") << cfg.n_values[i];
  auto num = [](double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
  };
  return {{"experiment", std::string(to_string(cfg.experiment))},
          {"n_values", ns.str()},
          {"replicates", std::to_string(cfg.replicates)},
          {"seed", std::to_string(cfg.master_seed)},
          {"threads", std::to_string(cfg.threads)},
          {"lambda0", num(cfg.lasso.lambda0)},
          {"gamma", num(cfg.lasso.gamma)},
          {"sigma", num(cfg.lasso.sigma)},
          {"beta1", num(cfg.lasso.beta1)},
          {"beta2", num(cfg.lasso.beta2)},
          {"fixed_design", cfg.lasso.fixed_design ? "true" : "false"}};
}

}  // namespace mixrates
