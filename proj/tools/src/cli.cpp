#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>

#include <nested_lsmc/alloc.hpp>
#include <nested_lsmc/errors.hpp>
#include <nested_lsmc/experiment.hpp>

#include "CLI11.hpp"
#include "config.hpp"

namespace nlsmc::cli {
namespace {

using json = nlohmann::ordered_json;

std::string fmt12(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

struct Invocation {
  std::string command;
  std::string config_path;
  std::string out_dir = "nested_lsmc_out";
  std::vector<std::string> sets;
  std::map<std::string, std::string> flags;  // --<key> values
};

RawConfig resolve_raw(const Invocation& inv) {
  RawConfig raw;
  if (!inv.config_path.empty()) raw = load_config_file(inv.config_path);
  if (const char* env = std::getenv("NESTED_LSMC_SEED")) {
    const auto seed = seed_from_env();
    if (!seed) throw ConfigError("seed", "NESTED_LSMC_SEED='" + std::string(env) + "' is not an unsigned integer");
    raw["seed"] = std::to_string(*seed);
  }
  for (const auto& s : inv.sets) apply_override(raw, s);
  for (const auto& [key, value] : inv.flags) raw[key] = value;
  return raw;
}

std::filesystem::path prepare_out(const Invocation& inv) {
  std::filesystem::path dir(inv.out_dir);
  std::filesystem::create_directories(dir);
  return dir;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write '" + path.string() + "'");
  f << text;
}

template <class Writer>
void write_csv(const std::filesystem::path& path, Writer&& w) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write '" + path.string() + "'");
  w(f);
}

void write_summary(const std::filesystem::path& dir, const json& summary) {
  write_text(dir / "summary.json", summary.dump(2) + "\n");
}

json k_summary(const KEstimates& k) {
  json j;
  j["KA_H"] = k.k_a_h;
  j["KA_noH"] = k.k_a_noh;
  j["KG_H"] = k.k_g_h;
  j["KG_noH"] = k.k_g_noh;
  return j;
}

int cmd_toy_closed_form(const ExperimentConfig& cfg, const Invocation& inv, std::ostream& out, double& elapsed_s) {
  const auto t0 = std::chrono::steady_clock::now();
  const double rho = cfg.model.rho;
  const double r4 = rho * rho * rho * rho;
  const double a = 2.0 * r4;
  const double b = 2.0 * (1.0 - r4);
  const double c = cfg.model.cost_ratio_override.value_or(1.0);
  const AllocationResult alloc = optimal_k_n({a, b, c, effective_budget(cfg, c)});
  out << "A = " << fmt12(a) << "\n";
  out << "B = " << fmt12(b) << "\n";
  out << "theta_star = 1\n";
  out << "K_star = " << alloc.k_star << "\n";
  out << "N_star = " << alloc.n_star << "\n";
  out << "r_star = " << fmt12(alloc.r_star) << "\n";
  out << "k,r_K\n";
  json table = json::array();
  for (int k : cfg.k_grid) {
    const double r = gain_rk(a, b, c, static_cast<std::uint64_t>(k));
    out << k << "," << fmt12(r) << "\n";
    table.push_back({{"k", k}, {"r_K", r}});
  }
  elapsed_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  json s;
  s["command"] = inv.command;
  s["config"] = config_to_json(cfg);
  s["A"] = a;
  s["B"] = b;
  s["theta_star"] = 1.0;
  s["K_star"] = alloc.k_star;
  s["N_star"] = alloc.n_star;
  s["r_star"] = alloc.r_star;
  s["r_K"] = table;
  s["wall_clock_seconds"] = elapsed_s;
  write_summary(prepare_out(inv), s);
  return kExitOk;
}

int cmd_gain_curve(const ExperimentConfig& cfg, const Invocation& inv, std::ostream& out) {
  const auto t0 = std::chrono::steady_clock::now();
  const GainCurve curve = gain_curve(cfg);
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const auto dir = prepare_out(inv);
  write_csv(dir / "gain_curve.csv", [&](std::ostream& f) { write_gain_curve_csv(f, curve); });
  json s;
  s["command"] = inv.command;
  s["config"] = config_to_json(cfg);
  s["cost_ratio"] = curve.cost_ratio;
  json rows = json::array();
  out << "r_hat:";
  for (const auto& e : curve.entries) {
    rows.push_back({{"k", e.k}, {"n_prime", e.n_prime}, {"r_hat", e.r_hat}, {"r_hat_se", e.r_hat_se}});
    out << " K=" << e.k << ":" << fmt12(e.r_hat);
  }
  out << "\n";
  s["gain_curve"] = rows;
  s["wall_clock_seconds"] = elapsed;
  write_summary(dir, s);
  return kExitOk;
}

int cmd_k_dist(const ExperimentConfig& cfg, const Invocation& inv, std::ostream& out) {
  const auto t0 = std::chrono::steady_clock::now();
  const KDistribution d = k_distribution(cfg);
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const auto dir = prepare_out(inv);
  write_csv(dir / "k_dist.csv", [&](std::ostream& f) { write_k_dist_csv(f, d); });
  json s;
  s["command"] = inv.command;
  s["config"] = config_to_json(cfg);
  json stats;
  const auto& names = k_estimator_names();
  for (std::size_t i = 0; i < names.size(); ++i) {
    stats[names[i]] = {{"mean", d.mean[i]}, {"std", d.sd[i]}};
    out << (i ? " " : "") << names[i] << " mean=" << fmt12(d.mean[i]) << " std=" << fmt12(d.sd[i]);
  }
  out << "\n";
  s["k_estimates"] = stats;
  s["wall_clock_seconds"] = elapsed;
  write_summary(dir, s);
  return kExitOk;
}

int cmd_loss_mse(const ExperimentConfig& cfg, const Invocation& inv, std::ostream& out) {
  const auto t0 = std::chrono::steady_clock::now();
  const LossStudy study = loss_mse(cfg);
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const auto dir = prepare_out(inv);
  write_csv(dir / "loss_mse.csv", [&](std::ostream& f) { write_loss_mse_csv(f, study); });
  json s;
  s["command"] = inv.command;
  s["config"] = config_to_json(cfg);
  s["reference_loss"] = study.reference_loss;
  json rows = json::array();
  const LossEntry* best = nullptr;
  for (const auto& e : study.entries) {
    rows.push_back({{"k", e.k}, {"n_prime", e.n_prime}, {"mse", e.mse}, {"se", e.se}});
    if (!best || e.mse < best->mse) best = &e;
  }
  s["loss_mse"] = rows;
  s["wall_clock_seconds"] = elapsed;
  write_summary(dir, s);
  out << "L = " << fmt12(study.reference_loss) << " best K = " << best->k << " mse = " << fmt12(best->mse) << "\n";
  return kExitOk;
}

int cmd_estimate_k(const ExperimentConfig& cfg, const Invocation& inv, std::ostream& out) {
  const auto t0 = std::chrono::steady_clock::now();
  const EstimateKResult r = estimate_k(cfg);
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  out << "KA_H = " << r.k.k_a_h << "\n";
  out << "KA_noH = " << r.k.k_a_noh << "\n";
  out << "KG_H = " << r.k.k_g_h << "\n";
  out << "KG_noH = " << r.k.k_g_noh << "\n";
  out << "recommended K = " << r.recommended_k << " (KG_noH)\n";
  out << "r_star = " << fmt12(r.r_star) << "\n";
  out << "N_star = " << r.n_star << "\n";
  json s;
  s["command"] = inv.command;
  s["config"] = config_to_json(cfg);
  s["k_estimates"] = k_summary(r.k);
  s["recommended_k"] = r.recommended_k;
  s["xi"] = std::isfinite(r.xi) ? json(r.xi) : json(nullptr);
  s["r_star"] = r.r_star;
  s["n_star"] = r.n_star;
  s["budget"] = r.budget;
  s["cost_ratio"] = r.cost_ratio;
  s["wall_clock_seconds"] = elapsed;
  write_summary(prepare_out(inv), s);
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Nested least-squares Monte Carlo experiments", "nested_lsmc"};
  app.require_subcommand(1, 1);
  app.fallthrough();

  Invocation inv;
  app.add_option("--config", inv.config_path, "key = value configuration file");
  app.add_option("--out", inv.out_dir, "output directory")->capture_default_str();
  app.add_option("--set", inv.sets, "override as key=value (repeatable)");
  for (const auto& key : config_schema()) {
    app.add_option_function<std::string>(
        "--" + key.name, [&inv, name = key.name](const std::string& v) { inv.flags[name] = v; }, key.help);
  }

  const std::vector<std::pair<std::string, std::string>> commands{
      {"gain-curve", "gain r_hat^K over k_grid at a fixed budget"},
      {"k-dist", "empirical distribution of the four K estimators"},
      {"loss-mse", "butterfly expected-loss MSE over k_grid"},
      {"estimate-k", "one-shot estimate of the optimal K"},
      {"toy-closed-form", "closed-form toy quantities (no sampling)"},
  };
  for (const auto& [name, help] : commands) {
    app.add_subcommand(name, help)->callback([&inv, n = name] { inv.command = n; });
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  ExperimentConfig cfg;
  try {
    const RawConfig raw = resolve_raw(inv);
    cfg = build_config(raw, inv.command != "toy-closed-form");
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    if (inv.command == "toy-closed-form") {
      double elapsed = 0.0;
      return cmd_toy_closed_form(cfg, inv, out, elapsed);
    }
    if (inv.command == "gain-curve") return cmd_gain_curve(cfg, inv, out);
    if (inv.command == "k-dist") return cmd_k_dist(cfg, inv, out);
    if (inv.command == "loss-mse") return cmd_loss_mse(cfg, inv, out);
    if (inv.command == "estimate-k") return cmd_estimate_k(cfg, inv, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  err << "error: unknown command\n";
  return kExitConfig;
}

}  // namespace nlsmc::cli
