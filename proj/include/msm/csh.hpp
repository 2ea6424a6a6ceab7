#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "msm/dist.hpp"
#include "msm/model.hpp"
#include "msm/survfit.hpp"

namespace msm {

/// One distribution spec per transition, indexed like ModelStructure::transitions().
struct CshModelSpec {
    std::vector<DistributionSpec> transitions;
};

/// Throws ConfigError on a wrong spec count, cure on a discharge transition or
/// an unknown covariate.
void validate_csh_spec(const CshModelSpec& spec, const ModelStructure& structure, const CovariateCoding& coding);

struct CshTransitionFit {
    LinkedDistribution model;
    std::vector<double> coef;       // link scale
    Eigen::MatrixXd covariance;     // of coef
    double loglik = 0.0;
    std::size_t events = 0;
    /// No events observed: the intensity is pinned to zero and nothing is estimated.
    bool zero_events = false;
    bool covariance_repaired = false;
    int iterations = 0;
    std::vector<double> trace;

    std::size_t parameter_count() const { return zero_events ? 0 : coef.size(); }
    Distribution resolve(std::span<const double> design) const;
};

struct CshFit {
    ModelContext context;
    std::vector<CshTransitionFit> transitions;
    double loglik = 0.0;
    int k = 0;
    double aic = 0.0;

    /// Estimated coefficients of all non-pinned transitions, concatenated in transition order.
    Eigen::VectorXd coefficients() const;
    /// Block-diagonal: the per-transition fits are independent.
    Eigen::MatrixXd covariance() const;
    /// Copy with the estimated coefficients replaced (same layout as coefficients()).
    CshFit with_coefficients(const Eigen::VectorXd& coef) const;

    /// Resolved distributions for every transition at one design row.
    std::vector<Distribution> resolve(std::span<const double> design) const;
};

/// Log-likelihood contribution of one observation given the resolved
/// distribution of every transition (indexed by transition). Throws
/// LikelihoodDomainError when the result is not finite.
double csh_obs_loglik(const Observation& obs, const ModelStructure& structure,
                      std::span<const Distribution> by_transition, bool status3_censors_all = false);

/// Sum of csh_obs_loglik over the dataset.
double csh_total_loglik(const CshFit& fit, const Dataset& data);

/// Independent maximum-likelihood fits per transition. Transitions without
/// events are pinned to zero intensity with a warning.
CshFit fit_csh(const Dataset& data, const ModelStructure& structure, const CshModelSpec& spec,
               const DataOptions& options = {}, const FitControls& controls = {}, Exec exec = Exec::Serial);

/// A CSH model with given coefficients and no data (used for simulation truths).
CshFit make_csh_model(const ModelContext& context, const CshModelSpec& spec,
                      const std::vector<std::vector<double>>& coefficients);

struct NextEvent {
    int index = -1;  // position among the competitors, -1 when no event ever happens
    double time = kNever;
};

/// Draws a latent time from each competitor and returns the earliest.
NextEvent csh_next_event_sample(std::span<const Distribution> competitors, Rng& rng);

}  // namespace msm
