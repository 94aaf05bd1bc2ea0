#include "hybridsde/serialize.hpp"

#include <cstdio>

#include "hybridsde/version.hpp"

namespace hybridsde {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

const char* termination_name(Termination t) {
  return t == Termination::Completed ? "completed" : "truncated_at_radius";
}

nlohmann::json vec_json(std::span<const double> v) {
  nlohmann::json a = nlohmann::json::array();
  for (double c : v) a.push_back(c);
  return a;
}

}  // namespace

std::string path_csv(const PathRecord& rec) {
  std::string out = "t";
  for (int i = 1; i <= rec.dim; ++i) out += ",x_" + std::to_string(i);
  out += ",k\n";
  for (std::size_t n = 0; n < rec.nodes(); ++n) {
    out += format_double(rec.times[n]);
    const auto x = rec.x_at(n);
    for (double c : x) {
      out += ',';
      out += format_double(c);
    }
    out += ',';
    out += std::to_string(rec.regimes[n]);
    out += '\n';
  }
  return out;
}

nlohmann::json path_sidecar(const PathRecord& rec,
                            const nlohmann::json& config) {
  nlohmann::json j;
  j["version"] = kVersion;
  j["config"] = config;
  j["master_seed"] = rec.master_seed;
  j["path_id"] = rec.path_id;
  j["termination"] = termination_name(rec.termination);
  nlohmann::json switches = nlohmann::json::array();
  for (const auto& s : rec.switches) {
    switches.push_back({{"tau", s.tau},
                        {"from", s.from},
                        {"to", s.to},
                        {"x_pre", vec_json(s.x_pre)},
                        {"clock_residual", s.clock_residual}});
  }
  j["switches"] = switches;
  nlohmann::json jumps = nlohmann::json::array();
  for (const auto& e : rec.jumps) {
    jumps.push_back({{"t", e.t},
                     {"mark", vec_json(e.mark)},
                     {"displacement", vec_json(e.displacement)}});
  }
  j["jumps"] = jumps;
  return j;
}

std::string coupling_csv(const CouplingRecord& rec) {
  std::string out = "t";
  for (int i = 1; i <= rec.dim; ++i) out += ",x_" + std::to_string(i);
  out += ",i";
  for (int i = 1; i <= rec.dim; ++i) out += ",z_" + std::to_string(i);
  out += ",j\n";
  for (std::size_t n = 0; n < rec.nodes(); ++n) {
    out += format_double(rec.times[n]);
    for (double c : rec.x_at(n)) {
      out += ',';
      out += format_double(c);
    }
    out += ',';
    out += std::to_string(rec.i_regimes[n]);
    for (double c : rec.z_at(n)) {
      out += ',';
      out += format_double(c);
    }
    out += ',';
    out += std::to_string(rec.j_regimes[n]);
    out += '\n';
  }
  return out;
}

nlohmann::json ensemble_json(const EnsembleReport& rep) {
  return {{"mean", vec_json(rep.mean)},
          {"se", vec_json(rep.se)},
          {"n_total", rep.n_total},
          {"n_used", rep.n_used},
          {"truncated_count", rep.truncated_count}};
}

nlohmann::json check_report_json(const CheckReport& rep) {
  nlohmann::json j;
  j["assumption"] = rep.assumption_id;
  j["n_samples"] = rep.n_samples;
  j["fitted_constant"] = rep.fitted_constant;
  j["witness"] = {{"x", vec_json(rep.witness_x)}, {"k", rep.witness_k}};
  if (!rep.witness_y.empty()) j["witness"]["y"] = vec_json(rep.witness_y);
  j["violated"] = rep.violated;
  j["pass"] = rep.pass;
  if (rep.has_user_constant) j["user_constant"] = rep.user_constant;
  if (!rep.note.empty()) j["note"] = rep.note;
  return j;
}

nlohmann::json wf_json(const WfEstimate& est, double bound, bool pass) {
  return {{"t", est.t},
          {"r0", est.r0},
          {"estimate", est.mean},
          {"se", est.se},
          {"switch_loss", est.switch_loss},
          {"switch_loss_se", est.switch_loss_se},
          {"delta0_exit_frac", est.delta0_exit_frac},
          {"radius_exit_frac", est.radius_exit_frac},
          {"n_used", est.n_used},
          {"truncated_count", est.truncated_count},
          {"bound", bound},
          {"pass", pass}};
}

nlohmann::json resolvent_json(const ResolventEstimate& est) {
  return {{"alpha", est.alpha},
          {"value", est.value},
          {"se", est.se},
          {"t_cut", est.t_cut},
          {"tail_bound", est.tail_bound},
          {"n_used", est.n_used},
          {"truncated_count", est.truncated_count}};
}

nlohmann::json series_json(const SeriesReport& rep) {
  return {{"alpha", rep.alpha},
          {"kappa", rep.kappa},
          {"m", rep.m},
          {"D", rep.D},
          {"B", rep.B},
          {"se", rep.se},
          {"tail", rep.tail},
          {"pass", rep.pass},
          {"threshold_warning", rep.threshold_warning},
          {"psi_means", vec_json(rep.psi_means)},
          {"psi_ses", vec_json(rep.psi_ses)},
          {"g_mean", rep.g_mean},
          {"g_se", rep.g_se},
          {"n_used", rep.n_used},
          {"truncated_count", rep.truncated_count}};
}

nlohmann::json integrator_config_json(const IntegratorConfig& cfg) {
  return {{"dt", cfg.dt},
          {"horizon", cfg.horizon},
          {"truncation_radius", cfg.truncation_radius},
          {"small_jump_cutoff", cfg.small_jump_cutoff},
          {"switch_mode", cfg.switch_mode == SwitchMode::Thinning
                              ? "thinning"
                              : "clock_integration"},
          {"master_seed", cfg.master_seed}};
}

}  // namespace hybridsde
