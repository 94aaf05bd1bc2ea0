#ifndef HYBRIDSDE_SERIALIZE_HPP
#define HYBRIDSDE_SERIALIZE_HPP

#include <string>

#include <nlohmann/json.hpp>

#include "hybridsde/coupling.hpp"
#include "hybridsde/diagnostics.hpp"
#include "hybridsde/integrator.hpp"
#include "hybridsde/resolvent.hpp"

namespace hybridsde {

/// 17-significant-digit decimal rendering: round-trips any double exactly,
/// locale-independent ('.' decimal point).
std::string format_double(double v);

/// CSV with header t,x_1..x_d,k; '\n' line ends.
std::string path_csv(const PathRecord& rec);

/// Events, seed lineage, termination, and the resolved config; everything the
/// CSV itself does not carry.
nlohmann::json path_sidecar(const PathRecord& rec, const nlohmann::json& config);

/// Paired columns: t,x_1..x_d,i,z_1..z_d,j.
std::string coupling_csv(const CouplingRecord& rec);

nlohmann::json ensemble_json(const EnsembleReport& rep);
nlohmann::json check_report_json(const CheckReport& rep);
nlohmann::json wf_json(const WfEstimate& est, double bound, bool pass);
nlohmann::json resolvent_json(const ResolventEstimate& est);
nlohmann::json series_json(const SeriesReport& rep);

nlohmann::json integrator_config_json(const IntegratorConfig& cfg);

}  // namespace hybridsde

#endif
