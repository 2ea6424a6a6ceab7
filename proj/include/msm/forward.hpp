#pragma once

#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "msm/dist.hpp"

namespace msm {

/// t -> Q(t): off-diagonal intensities, rows summing to zero.
struct IntensityMatrixFunction {
    std::size_t states = 0;
    std::function<void(double t, Eigen::MatrixXd& q)> fill;
};

IntensityMatrixFunction constant_intensity(const Eigen::MatrixXd& q);

/// State 0 is the from-state; state j+1 is destination j, treated as absorbing.
IntensityMatrixFunction submodel_intensity(std::vector<Distribution> destinations);

struct OdeTolerances {
    double abs = 1e-8;
    double rel = 1e-8;
    /// Integration starts here (with P = I) when Q(0) is not finite.
    double start = 1e-6;
    long max_steps = 1000000;
};

struct TransitionProbMatrix {
    std::vector<double> times;
    std::vector<Eigen::MatrixXd> p;
};

/// Solves dP/dt = P Q(t), P(0) = I, by adaptive Dormand-Prince 5(4), landing
/// exactly on every grid time. The grid must be non-decreasing from 0.
TransitionProbMatrix solve_forward(const IntensityMatrixFunction& q, std::span<const double> grid,
                                   const OdeTolerances& tol = {});

struct SubmodelLimit {
    std::vector<double> absorbed;  // mass in each destination at the horizon
    double remaining = 0.0;        // mass still in the from-state
    double horizon = 0.0;
};

/// Integrates the first row of a submodel until the from-state mass drops
/// below `mass_tol` or `cap` is reached.
SubmodelLimit submodel_limit(const std::vector<Distribution>& destinations, double cap, double mass_tol = 1e-6,
                             const OdeTolerances& tol = {});

/// Horizon for next-state limits: 10 x the largest observed time, or 1000 days when unknown.
double limit_cap(double max_observed_time);

}  // namespace msm
