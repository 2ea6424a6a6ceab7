#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace msm {

using LogLikFn = std::function<double(const Eigen::VectorXd&)>;

struct OptimControls {
    int max_iter = 500;
    /// Converged when max_i |g_i| * max(1, |x_i|) <= grad_tol * max(1, |f|).
    double grad_tol = 1e-8;
    /// Converged when the accepted step is below this (inf-norm) and f stalls.
    double step_tol = 1e-10;
    /// Relative central-difference steps on the transformed scale.
    double gradient_step = 1e-6;
    double hessian_step = 1e-4;
    /// Largest inf-norm move per iteration on the transformed scale.
    double max_step = 5.0;
    bool compute_covariance = true;
};

enum class OptimStatus { Converged, MaxIterations, LineSearchFailed };

std::string to_string(OptimStatus status);

struct OptimResult {
    Eigen::VectorXd argmax;
    double loglik = 0.0;
    /// Inverse observed information on the transformed scale (empty if not requested).
    Eigen::MatrixXd covariance;
    OptimStatus status = OptimStatus::Converged;
    int iterations = 0;
    int evaluations = 0;
    bool covariance_repaired = false;
    std::vector<double> trace;  // loglik after each iteration

    bool converged() const { return status == OptimStatus::Converged; }
};

/// Quasi-Newton (BFGS) ascent with central-difference gradients and a
/// backtracking line search. Non-finite trial values are treated as a failed
/// step. Throws NumericalError if the start value is not finite.
OptimResult maximize(const LogLikFn& loglik, const Eigen::VectorXd& initial, const OptimControls& controls = {});

Eigen::VectorXd numeric_gradient(const LogLikFn& f, const Eigen::VectorXd& x, double rel_step);

/// Central-difference Hessian with steps rel_step * max(1, |x_i|).
Eigen::MatrixXd numeric_hessian(const LogLikFn& f, const Eigen::VectorXd& x, double rel_step);

struct CovarianceResult {
    Eigen::MatrixXd covariance;
    bool repaired = false;
};

/// Inverts an observed-information matrix. Eigenvalues below `floor` are
/// clipped (and `repaired` set); a positive-definite input is inverted as is.
CovarianceResult covariance_from_information(const Eigen::MatrixXd& information, double floor = 1e-10);

/// -2 loglik + 2k. Throws std::domain_error for k < 0.
double aic(double loglik, int k);

struct ParamDraws {
    Eigen::MatrixXd draws;  // B x k, transformed scale
    std::uint64_t seed = 0;

    Eigen::Index count() const { return draws.rows(); }
    Eigen::VectorXd row(Eigen::Index b) const { return draws.row(b).transpose(); }
};

/// B multivariate-normal draws centred at the MLE, via an LDLT (pivoted
/// Cholesky) factor of the covariance. Throws NumericalError if the covariance
/// is not positive semi-definite.
ParamDraws draw_params(const Eigen::VectorXd& mle, const Eigen::MatrixXd& covariance, int B, std::uint64_t seed);
ParamDraws draw_params(const OptimResult& result, int B, std::uint64_t seed);

}  // namespace msm
