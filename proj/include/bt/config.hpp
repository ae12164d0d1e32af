#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "bt/analysis.hpp"
#include "bt/distributions.hpp"

namespace bt {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ExperimentKind { simulate, schedule, theorem1, theorem2, theorem3, bounds, oracle };

inline const char* to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::simulate: return "simulate";
    case ExperimentKind::schedule: return "schedule";
    case ExperimentKind::theorem1: return "theorem1";
    case ExperimentKind::theorem2: return "theorem2";
    case ExperimentKind::theorem3: return "theorem3";
    case ExperimentKind::bounds: return "bounds";
    case ExperimentKind::oracle: return "oracle";
  }
  return "?";
}

enum class OutputFormat { csv, jsonl };

struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::simulate;
  std::optional<StrengthModel> model;     // absent for schedule
  std::vector<int> n_grid;                // ascending, non-empty
  std::size_t replicates = 1000;
  std::uint64_t seed = 0;
  std::vector<double> c_values;           // theorem3 sweep
  std::vector<double> u_values{1, 2, 4};  // bounds deviations
  std::optional<double> tagged_strength;  // simulate / oracle
  unsigned workers = 0;                   // 0 = auto
  OutputFormat format = OutputFormat::csv;
  EnvironmentMode environment = EnvironmentMode::resample;
  std::map<std::string, std::string> echo;  // normalized key-values for the manifest
};

namespace detail {

inline std::string trim(std::string s) {
  const auto issp = [](unsigned char c) { return std::isspace(c); };
  while (!s.empty() && issp(s.front())) s.erase(s.begin());
  while (!s.empty() && issp(s.back())) s.pop_back();
  return s;
}

inline std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    auto key = trim(line.substr(0, eq));
    auto value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ConfigError("line " + std::to_string(lineno) + ": empty key or value");
    if (kv.count(key)) throw ConfigError(key + ": duplicate key");
    kv.emplace(std::move(key), std::move(value));
  }
  return kv;
}

inline double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return x;
  } catch (const std::exception&) {
    throw ConfigError(key + ": not a number: '" + v + "'");
  }
}

inline std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t x = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc{} || ptr != v.data() + v.size())
    throw ConfigError(key + ": not an unsigned integer: '" + v + "'");
  return x;
}

inline std::vector<double> to_double_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::istringstream in(v);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(to_double(key, trim(item)));
  if (out.empty()) throw ConfigError(key + ": empty list");
  return out;
}

inline StrengthModel model_from_config(const std::map<std::string, std::string>& kv,
                                       std::set<std::string>& consumed) {
  const auto get = [&](const std::string& key) -> std::optional<std::string> {
    const auto it = kv.find(key);
    if (it == kv.end()) return std::nullopt;
    consumed.insert(key);
    return it->second;
  };
  const auto need = [&](const std::string& key) {
    auto v = get(key);
    if (!v) throw ConfigError(key + ": required for this model kind");
    return *v;
  };
  const auto kind = get("model.kind");
  if (!kind) throw ConfigError("model.kind: required");
  StrengthModel model = [&] {
    try {
      if (*kind == "exponential") return StrengthModel::exponential(to_double("model.rate", need("model.rate")));
      if (*kind == "uniform01") return StrengthModel::uniform01();
      if (*kind == "beta")
        return StrengthModel::beta(to_double("model.a", need("model.a")),
                                   to_double("model.b", need("model.b")));
      if (*kind == "arcsine") return StrengthModel::arcsine();
      if (*kind == "pointmass") return StrengthModel::pointmass(to_double("model.value", need("model.value")));
      if (*kind == "mixture")
        return StrengthModel::finite_mixture(to_double_list("model.values", need("model.values")),
                                             to_double_list("model.weights", need("model.weights")));
      if (*kind == "pareto") return StrengthModel::pareto(to_double("model.shape", need("model.shape")));
      if (*kind == "exp_of_gaussian")
        return StrengthModel::exp_of_gaussian(to_double("model.mu", need("model.mu")),
                                              to_double("model.sigma", need("model.sigma")));
      if (*kind == "half_gaussian")
        return StrengthModel::half_gaussian(to_double("model.sigma", need("model.sigma")));
      throw ConfigError("model.kind: unknown kind '" + *kind + "'");
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError(std::string("model: ") + e.what());
    }
  }();
  if (const auto alpha = get("model.alpha")) {
    try {
      model.set_alpha(to_double("model.alpha", *alpha));
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError(std::string("model.alpha: ") + e.what());
    }
  }
  return model;
}

}  // namespace detail

/// Strict parse of a key = value document: unknown or inapplicable keys are
/// errors, seeds are mandatory, defaults are replicates=1000, workers=auto,
/// format=csv, environment=resample.
inline ExperimentSpec parse_config(const std::string& text) {
  using detail::to_double;
  using detail::to_double_list;
  using detail::to_u64;
  const auto kv = detail::parse_key_values(text);
  std::set<std::string> consumed;
  const auto get = [&](const std::string& key) -> std::optional<std::string> {
    const auto it = kv.find(key);
    if (it == kv.end()) return std::nullopt;
    consumed.insert(key);
    return it->second;
  };

  ExperimentSpec spec;
  const auto kind_str = get("experiment");
  if (!kind_str) throw ConfigError("experiment: required");
  if (*kind_str == "simulate") spec.kind = ExperimentKind::simulate;
  else if (*kind_str == "schedule") spec.kind = ExperimentKind::schedule;
  else if (*kind_str == "theorem1") spec.kind = ExperimentKind::theorem1;
  else if (*kind_str == "theorem2") spec.kind = ExperimentKind::theorem2;
  else if (*kind_str == "theorem3") spec.kind = ExperimentKind::theorem3;
  else if (*kind_str == "bounds") spec.kind = ExperimentKind::bounds;
  else if (*kind_str == "oracle") spec.kind = ExperimentKind::oracle;
  else throw ConfigError("experiment: unknown kind '" + *kind_str + "'");

  const auto seed = get("seed");
  if (!seed) throw ConfigError("seed: required (no entropy defaults)");
  spec.seed = to_u64("seed", *seed);

  // N grid: exactly one of n | n_grid.
  const auto n_single = get("n");
  const auto n_grid = get("n_grid");
  const bool grid_allowed =
      spec.kind == ExperimentKind::theorem1 || spec.kind == ExperimentKind::theorem2;
  if (n_single && n_grid) throw ConfigError("n: give either n or n_grid, not both");
  if (!n_single && !n_grid) throw ConfigError("n: required");
  if (n_grid && !grid_allowed) throw ConfigError("n_grid: only theorem1/theorem2 accept a grid");
  const auto parse_n = [&](const std::string& key, const std::string& v) {
    const auto x = to_u64(key, v);
    if (x < 2 || x > 1'000'000) throw ConfigError(key + ": N must lie in [2, 1e6]");
    return int(x);
  };
  if (n_single) {
    spec.n_grid = {parse_n("n", *n_single)};
  } else {
    std::istringstream in(*n_grid);
    std::string item;
    while (std::getline(in, item, ',')) spec.n_grid.push_back(parse_n("n_grid", detail::trim(item)));
    if (spec.n_grid.empty()) throw ConfigError("n_grid: empty list");
    for (std::size_t i = 1; i < spec.n_grid.size(); ++i)
      if (spec.n_grid[i] <= spec.n_grid[i - 1]) throw ConfigError("n_grid: must be strictly ascending");
  }

  if (const auto rep = get("replicates")) {
    if (spec.kind == ExperimentKind::schedule || spec.kind == ExperimentKind::oracle)
      throw ConfigError("replicates: not applicable to " + std::string(to_string(spec.kind)));
    spec.replicates = to_u64("replicates", *rep);
    if (spec.replicates < 1) throw ConfigError("replicates: must be >= 1");
  }

  if (const auto w = get("workers")) {
    if (*w == "auto") spec.workers = 0;
    else {
      spec.workers = unsigned(to_u64("workers", *w));
      if (spec.workers == 0) throw ConfigError("workers: must be positive or 'auto'");
    }
  }

  if (const auto f = get("format")) {
    if (spec.kind == ExperimentKind::oracle)
      throw ConfigError("format: oracle output is always JSON");
    if (*f == "csv") spec.format = OutputFormat::csv;
    else if (*f == "jsonl") spec.format = OutputFormat::jsonl;
    else throw ConfigError("format: must be csv or jsonl");
  }

  if (const auto env = get("environment")) {
    if (spec.kind != ExperimentKind::theorem2 && spec.kind != ExperimentKind::theorem3)
      throw ConfigError("environment: only theorem2/theorem3 support quenched mode");
    if (*env == "resample") spec.environment = EnvironmentMode::resample;
    else if (*env == "fixed") spec.environment = EnvironmentMode::fixed;
    else throw ConfigError("environment: must be resample or fixed");
  }

  if (const auto c = get("c_values")) {
    if (spec.kind != ExperimentKind::theorem3)
      throw ConfigError("c_values: only theorem3 takes a sweep");
    spec.c_values = to_double_list("c_values", *c);
    for (std::size_t i = 0; i < spec.c_values.size(); ++i) {
      if (!(spec.c_values[i] > 0)) throw ConfigError("c_values: must be positive");
      if (i > 0 && spec.c_values[i] <= spec.c_values[i - 1])
        throw ConfigError("c_values: must be strictly ascending");
    }
  } else if (spec.kind == ExperimentKind::theorem3) {
    throw ConfigError("c_values: required for theorem3");
  }

  if (const auto u = get("u_values")) {
    if (spec.kind != ExperimentKind::bounds) throw ConfigError("u_values: only bounds takes deviations");
    spec.u_values = to_double_list("u_values", *u);
    for (double x : spec.u_values)
      if (!(x > 0)) throw ConfigError("u_values: must be positive");
  }

  if (const auto t = get("tagged_strength")) {
    if (spec.kind != ExperimentKind::simulate && spec.kind != ExperimentKind::oracle)
      throw ConfigError("tagged_strength: only simulate/oracle take a tagged player");
    spec.tagged_strength = to_double("tagged_strength", *t);
    if (!(*spec.tagged_strength > 0)) throw ConfigError("tagged_strength: must be > 0");
  }

  if (spec.kind == ExperimentKind::schedule) {
    if (kv.count("model.kind")) throw ConfigError("model.kind: schedule takes no model");
  } else {
    spec.model = detail::model_from_config(kv, consumed);
  }

  // Kind-specific invariants.
  if (spec.kind == ExperimentKind::theorem2 || spec.kind == ExperimentKind::theorem3) {
    if (!spec.model->alpha())
      throw ConfigError("model: " + std::string(to_string(spec.kind)) +
                        " requires alpha metadata (Assumption-A regime)");
  }
  if (spec.kind == ExperimentKind::theorem3 && spec.model->support_max() != 1.0)
    throw ConfigError("model: theorem3 requires support_max = 1");
  if (spec.kind == ExperimentKind::oracle) {
    const int n = spec.n_grid.front();
    const int matches = n * (n - 1) / 2 + (spec.tagged_strength ? n : 0);
    if (matches > 28) throw ConfigError("n: oracle needs N(N-1)/2 (+N if tagged) <= 28 matches");
  }

  for (const auto& [key, value] : kv)
    if (!consumed.count(key)) throw ConfigError(key + ": unknown key (strict mode)");

  spec.echo = kv;
  spec.echo["replicates"] = std::to_string(spec.replicates);
  spec.echo["workers"] = spec.workers == 0 ? "auto" : std::to_string(spec.workers);
  spec.echo["format"] = spec.format == OutputFormat::csv ? "csv" : "jsonl";
  if (spec.kind == ExperimentKind::theorem2 || spec.kind == ExperimentKind::theorem3)
    spec.echo["environment"] = to_string(spec.environment);
  if (spec.kind == ExperimentKind::oracle) spec.echo["format"] = "json";
  if (spec.kind == ExperimentKind::schedule || spec.kind == ExperimentKind::oracle)
    spec.echo.erase("replicates");
  return spec;
}

}  // namespace bt
