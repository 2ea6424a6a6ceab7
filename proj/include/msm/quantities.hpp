#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "msm/covariates.hpp"
#include "msm/fitted.hpp"
#include "msm/forward.hpp"
#include "msm/inference.hpp"
#include "msm/parallel.hpp"
#include "msm/simulate.hpp"

namespace msm {

/// Mean, median and 5%/95% quantiles of a time; `mean_se` is the Monte
/// Carlo standard error of the mean (0 for analytic values).
struct TimeSummary {
    double mean = 0.0;
    double median = 0.0;
    double q05 = 0.0;
    double q95 = 0.0;
    double mean_se = 0.0;
    std::size_t n = 0;  // simulated cases (0 for analytic)
};

/// Summarises a sample; NaN fields when empty.
TimeSummary summarize(std::vector<double> values);

/// Type-7 (linear interpolation) quantile of sorted values.
double sorted_quantile(std::span<const double> sorted, double p);

struct QuantityOptions {
    std::size_t simulations = 100000;  // S
    std::uint64_t seed = 0;
    Exec exec = Exec::Serial;
    double mass_tol = 1e-6;
    OdeTolerances ode;
    /// Fewer simulated (r, s) transitions than this triggers a warning.
    std::size_t min_transitions = 50;
    bool warn = true;
};

struct NextStateResult {
    std::vector<double> probs;  // per outgoing transition, renormalised over destinations
    double residual = 0.0;      // mass still in the from-state at the horizon
    double horizon = 0.0;
};

/// CSH: ODE limit of the submodel transition probabilities for each transient state (indexed by state).
std::vector<NextStateResult> next_state_probs_csh(const CshFit& fit, std::span<const double> design,
                                                  const QuantityOptions& options = {});
/// Mixture: membership probabilities (indexed by state).
std::vector<NextStateResult> next_state_probs_mixture(const MixtureFit& fit, std::span<const double> design);

/// Empirical summaries of stage times of transition k over the histories.
TimeSummary conditional_los(std::span<const Pathway> histories, int transition);

struct UltimateOutcomes {
    std::vector<double> probs;  // per state; non-zero only for absorbing states
    std::vector<double> probs_se;
    std::vector<TimeSummary> times;  // per state
    double unabsorbed = 0.0;
};

/// Empirical outcome probabilities and total times over simulated histories.
UltimateOutcomes ultimate_outcomes(std::span<const Pathway> histories, const ModelStructure& structure);

/// Mixture analytic: pathway products of membership probabilities and
/// pathway-weighted mean times (normalised within pathways ending in s);
/// quantiles from the given simulated histories.
UltimateOutcomes ultimate_outcomes_mixture(const MixtureFit& fit, std::span<const double> design,
                                           std::span<const Pathway> histories);

/// All derived quantities for one parameter vector and one profile.
struct ProfileQuantities {
    std::vector<double> next_state;       // per transition
    std::vector<double> residual;         // per state
    std::vector<TimeSummary> los;         // per transition
    UltimateOutcomes ultimate;
};

ProfileQuantities compute_quantities(const FittedModel& fit, std::span<const double> design,
                                     const QuantityOptions& options);

/// One named scalar, e.g. ("los_mean", "Hospital->ICU").
struct QuantityRecord {
    std::string quantity;
    std::string target;
    double value = 0.0;
    double mc_se = 0.0;
};

std::vector<QuantityRecord> flatten(const ProfileQuantities& q, const ModelStructure& structure);

struct QuantityInterval {
    std::string quantity;
    std::string target;
    double estimate = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    double mc_se = 0.0;
};

struct QuantitySummary {
    CovariateValues profile;
    std::vector<QuantityInterval> rows;
    std::size_t draws_used = 0;
    std::size_t draws_failed = 0;
};

/// Point estimates at the MLE and 2.5%/97.5% percentiles over the parameter
/// draws. Every draw reuses the same simulation streams.
std::vector<QuantitySummary> quantities_with_intervals(const FittedModel& fit, const ParamDraws& draws,
                                                       const std::vector<CovariateValues>& profiles,
                                                       const QuantityOptions& options);

}  // namespace msm
