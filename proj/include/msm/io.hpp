#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "msm/fitted.hpp"
#include "msm/nonparam.hpp"
#include "msm/quantities.hpp"
#include "msm/synthdata.hpp"

namespace msm {

using Json = nlohmann::json;

/// Writes to a temporary file in the same directory, then renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);
Json read_json(const std::filesystem::path& path);
/// Two-space indented, trailing newline.
std::string dump_json(const Json& j);

/// Shortest text that round-trips; empty for NaN.
std::string format_double(double v);

// --- observations ---------------------------------------------------------------

inline const std::vector<std::string> kObservationColumns{"subject_id", "from_state", "to_state", "time_days", "status"};

struct ObservationTable {
    std::vector<std::string> covariate_names;
    std::vector<RawRow> rows;
};

/// Parses the observation CSV; columns after `status` are covariates.
ObservationTable parse_observations_csv(const std::string& text);
ObservationTable read_observations_csv(const std::filesystem::path& path);
std::string observations_csv(const std::vector<std::string>& covariate_names, const std::vector<RawRow>& rows);

// --- structure and specs ----------------------------------------------------------

Json structure_to_json(const ModelStructure& structure);
ModelStructure structure_from_json(const Json& j);

Json spec_to_json(const DistributionSpec& spec);
DistributionSpec spec_from_json(const Json& j);

Json membership_to_json(const MembershipSpec& spec);
MembershipSpec membership_from_json(const Json& j);

/// {"Hospital->ICU": spec, ...}
Json transition_specs_to_json(const std::vector<DistributionSpec>& specs, const ModelStructure& structure);
std::vector<DistributionSpec> transition_specs_from_json(const Json& j, const ModelStructure& structure);

Json mixture_spec_to_json(const MixtureModelSpec& spec, const ModelStructure& structure);
MixtureModelSpec mixture_spec_from_json(const Json& j, const ModelStructure& structure);

// --- fitted models ----------------------------------------------------------------

/// Self-contained model record: framework, structure, covariate coding,
/// parameter tables (name, estimate, std_error, transform), covariance,
/// log-likelihood, AIC, k, and for mixtures the EM trace.
Json model_to_json(const FittedModel& model);
FittedModel model_from_json(const Json& j);

// --- synthetic data ---------------------------------------------------------------

Json synth_config_to_json(const SynthConfig& config);
/// "truth" may be a model record or the string "default" / "mixture-default".
SynthConfig synth_config_from_json(const Json& j);

// --- tables -----------------------------------------------------------------------

/// profile,quantity,target,type,value,mc_se with type in {estimate, lower, upper}.
std::string quantities_csv(const std::vector<QuantitySummary>& summaries);
Json quantities_to_json(const std::vector<QuantitySummary>& summaries);

std::string gof_csv(const std::vector<GofRow>& rows);
std::string histogram_csv(const std::vector<HistogramRow>& rows);

}  // namespace msm
