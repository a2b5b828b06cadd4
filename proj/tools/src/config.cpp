#include "config.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <nested_lsmc/errors.hpp>

namespace nlsmc::cli {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string unquote(const std::string& v) {
  if (v.size() >= 2 && v.front() == '"' && v.back() == '"') return v.substr(1, v.size() - 2);
  return v;
}

double to_double(const std::string& key, const std::string& v) {
  char* end = nullptr;
  errno = 0;
  const double d = std::strtod(v.c_str(), &end);
  if (v.empty() || *end != '\0' || errno == ERANGE || !std::isfinite(d)) {
    throw ConfigError(key, "key '" + key + "': expected a real number, got '" + v + "'");
  }
  return d;
}

long long to_integer(const std::string& key, const std::string& v) {
  char* end = nullptr;
  errno = 0;
  const long long n = std::strtoll(v.c_str(), &end, 10);
  if (v.empty() || *end != '\0' || errno == ERANGE) {
    throw ConfigError(key, "key '" + key + "': expected an integer, got '" + v + "'");
  }
  return n;
}

int to_int(const std::string& key, const std::string& v) {
  const long long n = to_integer(key, v);
  if (n < -2147483647LL || n > 2147483647LL) throw ConfigError(key, "key '" + key + "': value out of range");
  return static_cast<int>(n);
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  char* end = nullptr;
  errno = 0;
  if (v.empty() || v.front() == '-') throw ConfigError(key, "key '" + key + "': expected an unsigned integer, got '" + v + "'");
  const unsigned long long n = std::strtoull(v.c_str(), &end, 10);
  if (*end != '\0' || errno == ERANGE) {
    throw ConfigError(key, "key '" + key + "': expected an unsigned integer, got '" + v + "'");
  }
  return n;
}

std::vector<int> to_int_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_int(key, trim(item)));
  if (out.empty()) throw ConfigError(key, "key '" + key + "': expected a comma-separated list of integers");
  return out;
}

template <class F>
auto guarded(const std::string& key, F&& f) {
  try {
    return f();
  } catch (const DomainError& e) {
    throw ConfigError(key, "key '" + key + "': " + e.what());
  }
}

}  // namespace

const std::vector<KeyInfo>& config_schema() {
  static const std::vector<KeyInfo> keys{
      {"model", "toy | sde | butterfly"},
      {"rho", "toy correlation"},
      {"t1", "sde: date of X"},
      {"t2", "sde: date of Y"},
      {"steps", "sde: Euler steps on [0, t2]"},
      {"s0", "butterfly: initial spot"},
      {"sigma", "butterfly: volatility"},
      {"k1", "butterfly: lower strike"},
      {"k2", "butterfly: upper strike"},
      {"shock", "butterfly: multiplicative shock s"},
      {"t", "butterfly: inner date"},
      {"T", "butterfly: maturity"},
      {"cost_ratio_override", "replace the model's inner/outer cost ratio"},
      {"basis", "constant | poly | piecewise"},
      {"degree", "poly degree"},
      {"cells", "piecewise cells per dimension (M)"},
      {"fit", "closed | regularized | descent"},
      {"eps", "eigenvalue floor of the regularized fit"},
      {"tol", "descent gradient tolerance"},
      {"max_iter", "descent iteration limit"},
      {"kbar_a", "half inner count for the A-based estimators"},
      {"kbar_gamma", "half inner count for the Gamma-based estimators"},
      {"k_cap", "saturation value of the K estimators"},
      {"budget", "simulation budget in outer-draw units"},
      {"replications", "Monte Carlo replications J"},
      {"base_n", "outer sample size at K = 1"},
      {"theta_star_n", "sample size of the reference fit"},
      {"kdist_n", "outer sample size for the K estimators"},
      {"k_grid", "comma-separated inner sample counts, must contain 1"},
      {"quad_nodes", "quadrature panels for the butterfly loss"},
      {"seed", "master seed"},
      {"threads", "worker threads"},
      {"scale", "desk-scale factor on replications and sample sizes"},
  };
  return keys;
}

bool is_known_key(const std::string& key) {
  const auto& s = config_schema();
  return std::any_of(s.begin(), s.end(), [&](const KeyInfo& k) { return k.name == key; });
}

RawConfig parse_config_text(const std::string& text, const std::string& source) {
  RawConfig raw;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = source + ":" + std::to_string(lineno);
    if (eq == std::string::npos) throw ConfigError("", where + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = unquote(trim(line.substr(eq + 1)));
    if (!is_known_key(key)) throw ConfigError(key, where + ": unknown key '" + key + "'");
    if (raw.count(key)) throw ConfigError(key, where + ": key '" + key + "' given twice");
    raw[key] = value;
  }
  return raw;
}

RawConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot read config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path);
}

void apply_override(RawConfig& raw, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("", "override '" + assignment + "' is not key=value");
  const std::string key = trim(assignment.substr(0, eq));
  if (!is_known_key(key)) throw ConfigError(key, "unknown key '" + key + "'");
  raw[key] = unquote(trim(assignment.substr(eq + 1)));
}

ExperimentConfig build_config(const RawConfig& raw, bool require_model) {
  ExperimentConfig cfg;
  for (const auto& [key, value] : raw) {
    if (!is_known_key(key)) throw ConfigError(key, "unknown key '" + key + "'");
  }
  if (require_model && !raw.count("model")) throw ConfigError("model", "missing required key 'model'");

  const auto get = [&](const char* key) -> const std::string* {
    const auto it = raw.find(key);
    return it == raw.end() ? nullptr : &it->second;
  };
  const auto set_double = [&](const char* key, double& target) {
    if (const auto* v = get(key)) target = to_double(key, *v);
  };
  const auto set_int = [&](const char* key, int& target) {
    if (const auto* v = get(key)) target = to_int(key, *v);
  };

  if (const auto* v = get("model")) cfg.model.kind = guarded("model", [&] { return parse_model_kind(*v); });
  set_double("rho", cfg.model.rho);
  set_double("t1", cfg.model.t1);
  set_double("t2", cfg.model.t2);
  set_int("steps", cfg.model.steps);
  set_double("s0", cfg.model.butterfly.s0);
  set_double("sigma", cfg.model.butterfly.sigma);
  set_double("k1", cfg.model.butterfly.k1);
  set_double("k2", cfg.model.butterfly.k2);
  set_double("shock", cfg.model.butterfly.shock);
  set_double("t", cfg.model.butterfly.t);
  set_double("T", cfg.model.butterfly.T);
  if (const auto* v = get("cost_ratio_override")) cfg.model.cost_ratio_override = to_double("cost_ratio_override", *v);

  if (const auto* v = get("basis")) cfg.basis.kind = guarded("basis", [&] { return parse_basis_kind(*v); });
  set_int("degree", cfg.basis.degree);
  set_int("cells", cfg.basis.cells);

  if (const auto* v = get("fit")) cfg.fit.method = guarded("fit", [&] { return parse_fit_method(*v); });
  set_double("eps", cfg.fit.eps);
  set_double("tol", cfg.fit.tol);
  set_int("max_iter", cfg.fit.max_iter);

  set_int("kbar_a", cfg.estimators.kbar_a);
  set_int("kbar_gamma", cfg.estimators.kbar_gamma);
  if (const auto* v = get("k_cap")) cfg.estimators.k_cap = to_u64("k_cap", *v);

  if (const auto* v = get("budget")) cfg.budget = to_double("budget", *v);
  set_int("replications", cfg.replications);
  set_int("base_n", cfg.base_n);
  set_int("theta_star_n", cfg.theta_star_n);
  set_int("kdist_n", cfg.kdist_n);
  if (const auto* v = get("k_grid")) cfg.k_grid = to_int_list("k_grid", *v);
  set_int("quad_nodes", cfg.quad_nodes);
  if (const auto* v = get("seed")) cfg.seed = to_u64("seed", *v);
  set_int("threads", cfg.threads);
  set_double("scale", cfg.scale);

  // Validation messages name the field; map them back to keys.
  try {
    cfg.validate();
  } catch (const DomainError& e) {
    const std::string msg = e.what();
    const auto sp = msg.find(' ');
    throw ConfigError(msg.substr(0, sp), std::string("invalid configuration: ") + e.what());
  }
  try {
    (void)make_model(cfg.model);
  } catch (const DomainError& e) {
    throw ConfigError("model", std::string("invalid model parameters: ") + e.what());
  }
  return cfg;
}

nlohmann::ordered_json config_to_json(const ExperimentConfig& cfg) {
  nlohmann::ordered_json j;
  j["model"] = to_string(cfg.model.kind);
  j["rho"] = cfg.model.rho;
  j["t1"] = cfg.model.t1;
  j["t2"] = cfg.model.t2;
  j["steps"] = cfg.model.steps;
  j["s0"] = cfg.model.butterfly.s0;
  j["sigma"] = cfg.model.butterfly.sigma;
  j["k1"] = cfg.model.butterfly.k1;
  j["k2"] = cfg.model.butterfly.k2;
  j["shock"] = cfg.model.butterfly.shock;
  j["t"] = cfg.model.butterfly.t;
  j["T"] = cfg.model.butterfly.T;
  j["cost_ratio_override"] =
      cfg.model.cost_ratio_override ? nlohmann::ordered_json(*cfg.model.cost_ratio_override) : nullptr;
  j["basis"] = to_string(cfg.basis.kind);
  j["degree"] = cfg.basis.degree;
  j["cells"] = cfg.basis.cells;
  j["fit"] = to_string(cfg.fit.method);
  j["eps"] = cfg.fit.eps;
  j["tol"] = cfg.fit.tol;
  j["max_iter"] = cfg.fit.max_iter;
  j["kbar_a"] = cfg.estimators.kbar_a;
  j["kbar_gamma"] = cfg.estimators.kbar_gamma;
  j["k_cap"] = cfg.estimators.k_cap;
  j["budget"] = cfg.budget ? nlohmann::ordered_json(*cfg.budget) : nullptr;
  j["replications"] = cfg.replications;
  j["base_n"] = cfg.base_n;
  j["theta_star_n"] = cfg.theta_star_n;
  j["kdist_n"] = cfg.kdist_n;
  j["k_grid"] = cfg.k_grid;
  j["quad_nodes"] = cfg.quad_nodes;
  j["seed"] = cfg.seed;
  j["threads"] = cfg.threads;
  j["scale"] = cfg.scale;
  return j;
}

}  // namespace nlsmc::cli
