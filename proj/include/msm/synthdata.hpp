#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "msm/fitted.hpp"
#include "msm/parallel.hpp"
#include "msm/simulate.hpp"

namespace msm {

struct CovariateDistribution {
    std::string name;
    std::vector<std::string> levels;
    std::vector<double> probs;
};

struct SynthConfig {
    std::size_t n = 5000;
    FittedModel truth;
    std::vector<CovariateDistribution> covariates;
    /// Time from admission to data extraction ~ Uniform(extraction_min, extraction_max).
    double extraction_min = 0.0;
    double extraction_max = 140.0;
    bool censoring = true;
    /// Fraction of subjects alive at extraction whose outcome is reported as unknown (status 3).
    double status3_fraction = 0.03;
    std::uint64_t seed = 1;
};

/// Throws ConfigError on out-of-range fractions, N = 0, or covariate
/// levels unknown to the truth's coding.
void validate_synth_config(const SynthConfig& config);

struct SynthSubject {
    std::string id;
    CovariateValues covariates;
    Pathway pathway;           // full latent history
    double extraction = 0.0;   // time from admission to extraction (infinite without censoring)
    bool unknown_outcome = false;
};

struct SynthResult {
    std::vector<RawRow> rows;
    std::vector<SynthSubject> subjects;
};

/// Simulates covariates and full pathways from the truth, then applies
/// extraction censoring and status-3 coarsening. Each subject uses its own
/// stream, so the output does not depend on the execution policy.
SynthResult generate(const SynthConfig& config, Exec exec = Exec::Serial);

/// Recomputes one subject from the config alone.
SynthSubject replay_subject(const SynthConfig& config, std::size_t index);

/// Default age-group and gender distribution.
std::vector<CovariateDistribution> default_covariates();

/// CSH truth with cure on Hospital->ICU (log-normal) and Hospital->Death,
/// ICU->Death (generalized gamma), generalized gamma elsewhere.
CshFit default_csh_truth();
CshModelSpec default_csh_truth_spec();

/// Mixture truth with constant membership and covariate effects on the time models.
MixtureFit default_mixture_truth();

SynthConfig default_synth_config(std::size_t n = 5000, std::uint64_t seed = 1);
SynthConfig mixture_synth_config(std::size_t n = 5000, std::uint64_t seed = 1);

/// Coefficients from a name -> value map; covariate effects default to 0, baselines are required.
std::vector<double> coefficients_from_names(const std::vector<std::string>& names,
                                            const std::map<std::string, double>& values, const std::string& what);

}  // namespace msm
