#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "hybridsde/coupling.hpp"
#include "hybridsde/diagnostics.hpp"
#include "hybridsde/errors.hpp"
#include "hybridsde/integrator.hpp"
#include "hybridsde/model.hpp"
#include "hybridsde/resolvent.hpp"
#include "hybridsde/serialize.hpp"
#include "hybridsde/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace hybridsde;

namespace {

struct CliOptions {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed_override;
  unsigned threads = 0;
};

void reject_unknown(const json& j, const std::vector<std::string>& allowed,
                    const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end()) {
      throw ConfigError(where + ": unknown field \"" + it.key() + "\"");
    }
  }
}

template <typename T>
T required(const json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key)) {
    throw ConfigError(where + ": missing required field \"" + key + "\"");
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + ": field \"" + key + "\": " + e.what());
  }
}

template <typename T>
T optional_field(const json& j, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  return j.at(key).get<T>();
}

IntegratorConfig parse_integrator(const json& j,
                                  std::optional<std::uint64_t> seed_override) {
  reject_unknown(j,
                 {"dt", "horizon", "truncation_radius", "small_jump_cutoff",
                  "switch_mode", "master_seed"},
                 "integrator");
  IntegratorConfig cfg;
  cfg.dt = required<double>(j, "dt", "integrator");
  cfg.horizon = required<double>(j, "horizon", "integrator");
  cfg.truncation_radius =
      optional_field(j, "truncation_radius", cfg.truncation_radius);
  cfg.small_jump_cutoff =
      optional_field(j, "small_jump_cutoff", cfg.small_jump_cutoff);
  const std::string mode =
      optional_field<std::string>(j, "switch_mode", "clock_integration");
  if (mode == "clock_integration") {
    cfg.switch_mode = SwitchMode::ClockIntegration;
  } else if (mode == "thinning") {
    cfg.switch_mode = SwitchMode::Thinning;
  } else {
    throw ConfigError("integrator: switch_mode must be clock_integration or thinning");
  }
  cfg.master_seed = optional_field<std::uint64_t>(j, "master_seed", 0);
  if (seed_override) cfg.master_seed = *seed_override;
  return cfg;
}

Vec parse_point(const json& j, const std::string& key, int dim,
                const std::string& where) {
  const auto arr = required<std::vector<double>>(j, key, where);
  if (static_cast<int>(arr.size()) != dim) {
    throw ConfigError(where + ": \"" + key + "\" must have " +
                      std::to_string(dim) + " coordinates");
  }
  return arr;
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw ConfigError("cannot open output file " + p.string());
  f << content;
}

void write_json(const fs::path& p, const json& j) {
  write_file(p, j.dump(2) + "\n");
}

json resolved_config(const json& config, const CliOptions& opt) {
  json r = config;
  r["resolved"] = {{"version", kVersion},
                   {"threads", opt.threads},
                   {"seed_override",
                    opt.seed_override ? json(*opt.seed_override) : json()}};
  return r;
}

SamplePlan parse_plan(const json& j) {
  reject_unknown(j,
                 {"n_points", "R", "delta0", "n_pair_radii", "regimes",
                  "holder_delta", "seed"},
                 "plan");
  SamplePlan plan;
  plan.n_points = optional_field<std::size_t>(j, "n_points", plan.n_points);
  plan.R = optional_field(j, "R", plan.R);
  plan.delta0 = optional_field(j, "delta0", plan.delta0);
  plan.n_pair_radii = optional_field(j, "n_pair_radii", plan.n_pair_radii);
  plan.regimes = optional_field(j, "regimes", plan.regimes);
  plan.holder_delta = optional_field(j, "holder_delta", plan.holder_delta);
  plan.seed = optional_field<std::uint64_t>(j, "seed", plan.seed);
  return plan;
}

ModulusSpec parse_modulus(const std::string& name) {
  if (name == "identity") return ModulusSpec::identity();
  if (name == "r_log") return ModulusSpec::r_log();
  if (name == "r_loglog") return ModulusSpec::r_loglog();
  throw ConfigError("modulus must be identity, r_log, or r_loglog");
}

ScalarField parse_target(const json& j, double& f_sup) {
  const std::string type = required<std::string>(j, "type", "target");
  if (type == "one") {
    reject_unknown(j, {"type"}, "target");
    f_sup = 1.0;
    return [](std::span<const double>, int) { return 1.0; };
  }
  if (type == "regime_indicator") {
    reject_unknown(j, {"type", "k"}, "target");
    const int k0 = required<int>(j, "k", "target");
    f_sup = 1.0;
    return [k0](std::span<const double>, int k) { return k == k0 ? 1.0 : 0.0; };
  }
  if (type == "gaussian") {
    reject_unknown(j, {"type"}, "target");
    f_sup = 1.0;
    return [](std::span<const double> x, int) {
      return std::exp(-dot(x, x));
    };
  }
  throw ConfigError("target: type must be one, regime_indicator, or gaussian");
}

int cmd_simulate(const json& config, const CliOptions& opt) {
  reject_unknown(config,
                 {"command", "model", "integrator", "x0", "k0", "n_paths",
                  "emit_paths"},
                 "config");
  const ModelSpec model = model_from_json(config.at("model").dump());
  const IntegratorConfig cfg =
      parse_integrator(config.at("integrator"), opt.seed_override);
  cfg.validate(model);
  const Vec x0 = parse_point(config, "x0", model.dim, "config");
  const int k0 = required<int>(config, "k0", "config");
  if (k0 < 1 || k0 > model.regime_cap) {
    throw ConfigError("config: k0 out of range");
  }
  const std::size_t n_paths = required<std::size_t>(config, "n_paths", "config");
  const bool emit_paths = optional_field(config, "emit_paths", n_paths <= 10);

  const json rc = resolved_config(config, opt);
  if (emit_paths) {
    for (std::size_t p = 0; p < n_paths; ++p) {
      const PathRecord rec = simulate_hybrid(model, x0, k0, cfg, p);
      const std::string stem = "path_" + std::to_string(p);
      write_file(fs::path(opt.out_dir) / (stem + ".csv"), path_csv(rec));
      write_json(fs::path(opt.out_dir) / (stem + ".json"),
                 path_sidecar(rec, rc));
    }
  }

  PathStatistic stat;
  stat.size = 2;
  stat.truncation_invalidates = true;
  stat.eval = [](const PathRecord& rec) {
    const std::size_t last = rec.nodes() - 1;
    return Vec{norm2(rec.x_at(last)), static_cast<double>(rec.regimes[last])};
  };
  const EnsembleReport rep = ensemble(model, x0, k0, cfg, n_paths, stat, opt.threads);
  json summary = ensemble_json(rep);
  summary["statistics"] = {"final_norm", "final_regime"};
  summary["config"] = rc;
  write_json(fs::path(opt.out_dir) / "summary.json", summary);
  return 0;
}

int cmd_check(const json& config, const CliOptions& opt) {
  reject_unknown(config,
                 {"command", "model", "set", "plan", "modulus", "R", "delta0",
                  "user_constants"},
                 "config");
  const ModelSpec model = model_from_json(config.at("model").dump());
  const std::string set = required<std::string>(config, "set", "config");
  const SamplePlan plan =
      config.contains("plan") ? parse_plan(config.at("plan")) : SamplePlan{};

  std::vector<CheckReport> reports;
  if (set == "2.1") {
    reports = check_assumption_2_1(model, plan);
  } else if (set == "2.2") {
    const ModulusSpec mod = parse_modulus(
        optional_field<std::string>(config, "modulus", "identity"));
    const double R = optional_field(config, "R", plan.R);
    const double delta0 = optional_field(config, "delta0", plan.delta0);
    reports = check_assumption_2_2_and_3_2(model, mod, R, delta0, plan);
  } else if (set == "4.3") {
    const double R = optional_field(config, "R", plan.R);
    reports = check_assumption_4_3_and_ellipticity(model, R, plan);
  } else {
    throw ConfigError("config: set must be 2.1, 2.2, or 4.3");
  }

  if (config.contains("user_constants")) {
    for (auto& rep : reports) {
      const auto& uc = config.at("user_constants");
      if (uc.contains(rep.assumption_id)) {
        rep.has_user_constant = true;
        rep.user_constant = uc.at(rep.assumption_id).get<double>();
        const bool min_type = rep.assumption_id == "uniform-ellipticity" ||
                              rep.assumption_id == "jump-map-lower-bound-1d";
        rep.pass = min_type ? rep.fitted_constant >= rep.user_constant
                            : rep.fitted_constant <= rep.user_constant;
        if (rep.violated) rep.pass = false;
      }
    }
  }

  json out;
  out["config"] = resolved_config(config, opt);
  json arr = json::array();
  for (const auto& rep : reports) arr.push_back(check_report_json(rep));
  out["reports"] = arr;
  write_json(fs::path(opt.out_dir) / "checks.json", out);
  return 0;
}

int cmd_couple(const json& config, const CliOptions& opt) {
  reject_unknown(config,
                 {"command", "model", "integrator", "t", "x0", "k0",
                  "r0_values", "n_paths", "delta0", "ball_radius", "kappa_R",
                  "modulus"},
                 "config");
  const ModelSpec model = model_from_json(config.at("model").dump());
  CouplingConfig ccfg;
  ccfg.base = parse_integrator(config.at("integrator"), opt.seed_override);
  ccfg.base.validate(model);
  ccfg.delta0 = optional_field(config, "delta0", ccfg.delta0);
  ccfg.ball_radius = optional_field(config, "ball_radius", ccfg.ball_radius);
  const double t = required<double>(config, "t", "config");
  const Vec x0 = parse_point(config, "x0", model.dim, "config");
  const int k0 = required<int>(config, "k0", "config");
  const auto r0s = required<std::vector<double>>(config, "r0_values", "config");
  const std::size_t n_paths = required<std::size_t>(config, "n_paths", "config");
  const double kappa_R = optional_field(config, "kappa_R", 0.0);
  const ModulusSpec mod = parse_modulus(
      optional_field<std::string>(config, "modulus", "identity"));

  json runs = json::array();
  std::string csv = "r0,estimate,se,bound\n";
  for (const double r0 : r0s) {
    Vec z0 = x0;
    z0[0] += r0;
    const WfEstimate est =
        estimate_Wf(model, t, x0, z0, k0, ccfg, n_paths, opt.threads);
    const double bound = bihari_bound(r0, t, kappa_R, mod);
    const bool pass = est.mean <= bound + 3.0 * est.se + est.switch_loss +
                                      3.0 * est.switch_loss_se;
    runs.push_back(wf_json(est, bound, pass));
    csv += format_double(r0) + "," + format_double(est.mean) + "," +
           format_double(est.se) + "," + format_double(bound) + "\n";
  }
  json out;
  out["config"] = resolved_config(config, opt);
  out["runs"] = runs;
  write_json(fs::path(opt.out_dir) / "couple.json", out);
  write_file(fs::path(opt.out_dir) / "couple.csv", csv);
  return 0;
}

int cmd_resolvent(const json& config, const CliOptions& opt) {
  reject_unknown(config,
                 {"command", "model", "integrator", "alpha", "kappa", "m_values",
                  "x0", "k0", "n_paths", "target"},
                 "config");
  const ModelSpec model = model_from_json(config.at("model").dump());
  const IntegratorConfig cfg =
      parse_integrator(config.at("integrator"), opt.seed_override);
  cfg.validate(model);
  const double alpha = required<double>(config, "alpha", "config");
  const double kappa = optional_field(config, "kappa", 0.0);
  const auto ms = required<std::vector<int>>(config, "m_values", "config");
  const Vec x0 = parse_point(config, "x0", model.dim, "config");
  const int k0 = required<int>(config, "k0", "config");
  const std::size_t n_paths = required<std::size_t>(config, "n_paths", "config");
  double f_sup = 1.0;
  const ScalarField f =
      config.contains("target")
          ? parse_target(config.at("target"), f_sup)
          : ScalarField([](std::span<const double>, int) { return 1.0; });

  json runs = json::array();
  std::string csv = "m,estimate,se,bound\n";
  for (const int m : ms) {
    const SeriesReport rep = verify_series(model, f, f_sup, alpha, kappa, x0,
                                           k0, m, cfg, n_paths, opt.threads);
    runs.push_back(series_json(rep));
    csv += std::to_string(m) + "," + format_double(rep.D) + "," +
           format_double(rep.se) + "," + format_double(rep.B) + "\n";
  }
  json out;
  out["config"] = resolved_config(config, opt);
  out["runs"] = runs;
  write_json(fs::path(opt.out_dir) / "resolvent.json", out);
  write_file(fs::path(opt.out_dir) / "resolvent.csv", csv);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo engine for hybrid switching jump diffusions"};
  app.set_version_flag("--version", std::string(kVersion));

  CliOptions opt;
  long long seed_flag = -1;

  const std::vector<std::string> commands = {"simulate", "couple", "check",
                                             "resolvent"};
  std::string command;
  for (const auto& name : commands) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", opt.config_path, "JSON run configuration")
        ->required();
    sub->add_option("--out", opt.out_dir, "output directory")->required();
    sub->add_option("--seed", seed_flag, "master seed override");
    sub->add_option("--threads", opt.threads, "worker thread count");
    sub->callback([&command, name] { command = name; });
  }
  app.require_subcommand(1);

  CLI11_PARSE(app, argc, argv);

  if (seed_flag >= 0) {
    opt.seed_override = static_cast<std::uint64_t>(seed_flag);
  }
  if (opt.threads == 0) {
    if (const char* env = std::getenv("HYBRIDSDE_THREADS")) {
      opt.threads = static_cast<unsigned>(std::strtoul(env, nullptr, 10));
    }
  }

  try {
    std::ifstream in(opt.config_path);
    if (!in) throw ConfigError("cannot open config file " + opt.config_path);
    json config;
    try {
      config = json::parse(in);
    } catch (const json::exception& e) {
      throw ConfigError(std::string("config parse error: ") + e.what());
    }
    if (config.contains("command") &&
        config.at("command").get<std::string>() != command) {
      throw ConfigError("config: \"command\" disagrees with the subcommand");
    }
    fs::create_directories(opt.out_dir);

    if (command == "simulate") return cmd_simulate(config, opt);
    if (command == "check") return cmd_check(config, opt);
    if (command == "couple") return cmd_couple(config, opt);
    return cmd_resolvent(config, opt);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const AllPathsTruncated& e) {
    std::cerr << "degenerate result: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
