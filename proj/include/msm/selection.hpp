#pragma once

#include <limits>
#include <string>
#include <vector>

#include "msm/csh.hpp"
#include "msm/mixture.hpp"

namespace msm {

struct CandidateResult {
    std::size_t candidate = 0;  // index in the candidate set
    std::string label;
    double loglik = std::numeric_limits<double>::quiet_NaN();
    int k = 0;
    double aic = std::numeric_limits<double>::quiet_NaN();
    bool ok = false;
    std::string error;
};

/// Sorts ascending by AIC; failed candidates go last, ties keep candidate order.
void sort_by_aic(std::vector<CandidateResult>& table);

/// Candidate specs per transition (indexed like ModelStructure::transitions()).
struct CshCandidateSet {
    std::vector<std::vector<DistributionSpec>> per_transition;
};

/// Generalized gamma with covariates on mu first, then gamma, Weibull and
/// log-normal, then extra covariate parameters, then cure variants on
/// transitions that are not into the discharge state.
CshCandidateSet preset_csh_candidates(const ModelStructure& structure, const std::vector<std::string>& covariates);

struct CshTransitionSelection {
    int transition = -1;
    std::vector<CandidateResult> table;  // sorted, selected first
    double aic = 0.0;                    // of the selected candidate
};

struct CshSelection {
    std::vector<CshTransitionSelection> transitions;
    CshFit fit;  // selected spec per transition, with covariance
};

/// Fits every candidate of every transition (concurrently), selects the lowest
/// AIC per transition and computes the covariance for the selection only.
/// Throws NumericalError listing the per-candidate errors when every candidate
/// of a transition fails.
CshSelection select_csh(const Dataset& data, const ModelStructure& structure, const CshCandidateSet& candidates,
                        const DataOptions& options = {}, const FitControls& controls = {}, Exec exec = Exec::Serial);

/// Whole-model mixture specs; the selection is made separately for each from-state.
struct MixtureCandidateSet {
    std::vector<MixtureModelSpec> candidates;
};

/// One family for all destinations of a submodel: generalized gamma, gamma,
/// Weibull, log-normal with constant parameters, then generalized gamma with
/// covariates on mu and on mu and sigma. Membership always uses `covariates`.
MixtureCandidateSet preset_mixture_candidates(const ModelStructure& structure, const std::vector<std::string>& covariates);

struct MixtureSubmodelSelection {
    int from = -1;
    std::vector<CandidateResult> table;
    double aic = 0.0;
};

struct MixtureSelection {
    std::vector<MixtureSubmodelSelection> submodels;
    MixtureFit fit;
};

MixtureSelection select_mixture(const Dataset& data, const ModelStructure& structure,
                                const MixtureCandidateSet& candidates, const DataOptions& options = {},
                                const FitControls& controls = {}, Exec exec = Exec::Serial);

/// "gengamma[...] -> ICU; lognormal[...] -> Death | membership: age_group,gender"
std::string describe_submodel(const MixtureModelSpec& spec, const ModelStructure& structure, int from);

}  // namespace msm
