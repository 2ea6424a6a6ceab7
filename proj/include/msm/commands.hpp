#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "msm/io.hpp"
#include "msm/parallel.hpp"
#include "msm/selection.hpp"

namespace msm {

inline constexpr const char* kToolName = "msmsurv";
std::string tool_version();

/// Command-line overrides shared by all commands; unset fields fall back to the config file.
struct CommandOptions {
    std::optional<std::filesystem::path> config;
    std::optional<std::filesystem::path> data;
    std::optional<std::filesystem::path> fit;  // results JSON for predict / gof
    std::optional<std::filesystem::path> out;
    std::optional<std::string> framework;      // csh | mixture | both
    std::optional<std::uint64_t> seed;
    std::optional<int> B;
    std::optional<std::size_t> S;
    std::vector<std::string> profiles;         // "a=x,b=y", or "all"
    std::optional<std::vector<std::string>> grouping;
    bool paper_procedure = false;
    Exec exec = Exec::Parallel;
};

/// Everything cmd_fit needs, read from the config JSON and the overrides.
struct RunConfig {
    ModelStructure structure = hospital_icu_structure();
    std::filesystem::path data;
    std::vector<std::string> frameworks{"csh", "mixture"};
    std::vector<std::string> covariates;  // empty: every covariate column of the data
    std::optional<CshCandidateSet> csh;
    std::optional<MixtureCandidateSet> mixture;
    bool paper_procedure = false;
    FitControls controls;
    DataOptions data_options;
    std::vector<std::string> grouping;  // subgroup comparison; empty: each covariate in turn
    int B = 100;
    std::size_t S = 100000;
    std::uint64_t seed = 1;
    std::filesystem::path out = "out";
};

/// Parses a run config. Candidate sets are resolved against `structure`.
RunConfig run_config_from_json(const Json& j, const std::filesystem::path& base_dir = {});
void apply_overrides(RunConfig& config, const CommandOptions& options);

/// The loaded dataset plus its raw covariate columns.
Dataset load_observations(const std::filesystem::path& path, const ModelStructure& structure,
                          const std::vector<std::string>& covariates, const DataOptions& options,
                          const CovariateCoding* coding = nullptr);

struct FitOutput {
    std::optional<CshSelection> csh;
    std::optional<MixtureSelection> mixture;
    Json results;
};

/// Runs model selection for each requested framework and builds the results JSON.
FitOutput run_fit(const RunConfig& config, const Dataset& data, Exec exec);

/// Writes observations.csv and truth.json into the output directory.
void cmd_simulate(const CommandOptions& options);
/// Writes results.json and candidates.csv.
void cmd_fit(const CommandOptions& options);
/// Writes quantities_<framework>.csv and .json.
void cmd_predict(const CommandOptions& options);
/// Writes the goodness-of-fit tables.
void cmd_gof(const CommandOptions& options);

/// Fitted models stored in a results JSON, keyed by framework name.
std::map<std::string, FittedModel> load_results(const Json& results);

/// Profiles to predict for: every categorical combination for "all" or an empty list.
std::vector<CovariateValues> resolve_profiles(const std::vector<std::string>& specs, const CovariateCoding& coding);

}  // namespace msm
