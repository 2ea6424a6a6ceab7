#pragma once

#include <optional>
#include <span>
#include <vector>

#include "msm/dist.hpp"
#include "msm/inference.hpp"
#include "msm/model.hpp"
#include "msm/parallel.hpp"

namespace msm {

/// Controls shared by the CSH and mixture fitters.
struct FitControls {
    OptimControls optim;
    /// Fit a covariate-free version first and use it as the start point.
    bool staged = true;
    // Mixture EM
    int em_max_iter = 500;
    double em_tol = 1e-8;
    /// Tolerance of the inner M-step fits.
    double inner_grad_tol = 1e-6;
    /// Membership coefficients are capped at +-this value.
    double membership_cap = 25.0;
    /// Maximise the mixture likelihood directly instead of by EM (debugging aid).
    bool direct = false;
};

/// Weighted right-censored log-likelihood of one parametric survival model:
/// sum over rows of weight * (event ? log f(t) : log S(t)).
/// Non-finite terms propagate; callers decide how to treat them.
double survival_loglik(const LinkedDistribution& model, std::span<const double> coef,
                       std::span<const TransitionRow> rows, const std::vector<std::vector<double>>& profiles,
                       Exec exec = Exec::Serial);

/// Coefficients for `to` taken by name from a fit of `from` (same family and
/// cure flag); unmatched covariate effects are zero. nullopt when the families differ.
std::optional<std::vector<double>> transfer_coefficients(const LinkedDistribution& to, const LinkedDistribution& from,
                                                         std::span<const double> from_coef);

/// The same distribution with every covariate link removed.
LinkedDistribution without_covariates(const LinkedDistribution& model);

/// Crude moment-based start values on the link scale (covariate effects zero).
std::vector<double> start_values(const LinkedDistribution& model, std::span<const TransitionRow> rows);

/// Maximum-likelihood fit of one survival model. With `staged`, a model without
/// covariates is fitted first. Throws NumericalError if the optimizer fails.
OptimResult fit_survival(const LinkedDistribution& model, std::span<const TransitionRow> rows,
                         const std::vector<std::vector<double>>& profiles, const FitControls& controls,
                         const std::optional<std::vector<double>>& start = std::nullopt, Exec exec = Exec::Serial);

}  // namespace msm
