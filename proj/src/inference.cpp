#include "msm/inference.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <random>
#include <stdexcept>

#include "msm/errors.hpp"
#include "msm/random.hpp"

namespace msm {
namespace {

double safe_eval(const LogLikFn& f, const Eigen::VectorXd& x) {
    double v;
    try {
        v = f(x);
    } catch (const std::domain_error&) {
        return -std::numeric_limits<double>::infinity();
    }
    return std::isnan(v) ? -std::numeric_limits<double>::infinity() : v;
}

double step_for(double x, double rel) { return rel * std::max(1.0, std::abs(x)); }

double relative_gradient(const Eigen::VectorXd& g, const Eigen::VectorXd& x, double f) {
    double m = 0.0;
    for (Eigen::Index i = 0; i < g.size(); ++i) m = std::max(m, std::abs(g[i]) * std::max(1.0, std::abs(x[i])));
    return m / std::max(1.0, std::abs(f));
}

}  // namespace

std::string to_string(OptimStatus status) {
    switch (status) {
        case OptimStatus::Converged: return "converged";
        case OptimStatus::MaxIterations: return "max-iterations";
        case OptimStatus::LineSearchFailed: return "line-search-failed";
    }
    return "?";
}

Eigen::VectorXd numeric_gradient(const LogLikFn& f, const Eigen::VectorXd& x, double rel_step) {
    Eigen::VectorXd g(x.size());
    Eigen::VectorXd xp = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double h = step_for(x[i], rel_step);
        xp[i] = x[i] + h;
        const double fp = safe_eval(f, xp);
        xp[i] = x[i] - h;
        const double fm = safe_eval(f, xp);
        xp[i] = x[i];
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

Eigen::MatrixXd numeric_hessian(const LogLikFn& f, const Eigen::VectorXd& x, double rel_step) {
    const Eigen::Index k = x.size();
    Eigen::MatrixXd H(k, k);
    Eigen::VectorXd h(k);
    for (Eigen::Index i = 0; i < k; ++i) h[i] = step_for(x[i], rel_step);
    const double f0 = safe_eval(f, x);
    Eigen::VectorXd xp = x;
    for (Eigen::Index i = 0; i < k; ++i) {
        xp[i] = x[i] + h[i];
        const double fp = safe_eval(f, xp);
        xp[i] = x[i] - h[i];
        const double fm = safe_eval(f, xp);
        xp[i] = x[i];
        H(i, i) = (fp - 2.0 * f0 + fm) / (h[i] * h[i]);
        for (Eigen::Index j = 0; j < i; ++j) {
            auto at = [&](double si, double sj) {
                xp[i] = x[i] + si * h[i];
                xp[j] = x[j] + sj * h[j];
                const double v = safe_eval(f, xp);
                xp[i] = x[i];
                xp[j] = x[j];
                return v;
            };
            const double v = (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4.0 * h[i] * h[j]);
            H(i, j) = v;
            H(j, i) = v;
        }
    }
    return H;
}

CovarianceResult covariance_from_information(const Eigen::MatrixXd& information, double floor) {
    CovarianceResult out;
    if (information.size() == 0) return out;
    if (!information.allFinite()) throw NumericalError("observed information is not finite");
    const Eigen::MatrixXd sym = 0.5 * (information + information.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
    if (eig.info() != Eigen::Success) throw NumericalError("eigendecomposition of information failed");
    if (eig.eigenvalues().minCoeff() >= floor) {
        Eigen::LLT<Eigen::MatrixXd> llt(sym);
        if (llt.info() == Eigen::Success) {
            out.covariance = llt.solve(Eigen::MatrixXd::Identity(sym.rows(), sym.cols()));
            out.covariance = 0.5 * (out.covariance + out.covariance.transpose());
            return out;
        }
    }
    Eigen::VectorXd clipped = eig.eigenvalues().cwiseMax(floor);
    out.covariance = eig.eigenvectors() * clipped.cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
    out.covariance = 0.5 * (out.covariance + out.covariance.transpose());
    out.repaired = true;
    std::cerr << "warning: observed information not positive definite; eigenvalues clipped at " << floor << "\n";
    return out;
}

OptimResult maximize(const LogLikFn& loglik, const Eigen::VectorXd& initial, const OptimControls& c) {
    int evals = 0;
    auto f = [&](const Eigen::VectorXd& x) {
        ++evals;
        return safe_eval(loglik, x);
    };
    LogLikFn counted = f;

    const Eigen::Index k = initial.size();
    OptimResult res;
    Eigen::VectorXd x = initial;
    double fx = f(x);
    if (!std::isfinite(fx)) throw NumericalError("log-likelihood is not finite at the initial values");

    if (k == 0) {
        res.argmax = x;
        res.loglik = fx;
        res.evaluations = evals;
        return res;
    }

    // Work with the minimisation of -loglik; Hinv approximates the inverse Hessian.
    Eigen::VectorXd g = -numeric_gradient(counted, x, c.gradient_step);
    Eigen::MatrixXd Hinv = Eigen::MatrixXd::Identity(k, k);
    bool scaled = false;
    res.status = OptimStatus::MaxIterations;

    int it = 0;
    for (; it < c.max_iter; ++it) {
        if (relative_gradient(g, x, fx) <= c.grad_tol) {
            res.status = OptimStatus::Converged;
            break;
        }
        Eigen::VectorXd dir = -Hinv * g;
        double slope = g.dot(dir);
        if (!(slope < 0.0) || !dir.allFinite()) {
            Hinv.setIdentity();
            dir = -g;
            slope = g.dot(dir);
        }
        double alpha = 1.0;
        const double maxmove = dir.cwiseAbs().maxCoeff();
        if (maxmove > c.max_step) alpha = c.max_step / maxmove;

        bool accepted = false;
        Eigen::VectorXd xn;
        double fn = 0.0;
        for (int ls = 0; ls < 60; ++ls) {
            xn = x + alpha * dir;
            fn = f(xn);
            // Armijo on -loglik: -fn <= -fx + c1 alpha slope
            if (std::isfinite(fn) && -fn <= -fx + 1e-4 * alpha * slope) {
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted) {
            if (!Hinv.isIdentity()) {
                Hinv.setIdentity();
                scaled = false;
                continue;
            }
            // Gradient noise floor: accept if nearly stationary.
            res.status = relative_gradient(g, x, fx) <= std::max(1e3 * c.grad_tol, 1e-6)
                             ? OptimStatus::Converged
                             : OptimStatus::LineSearchFailed;
            break;
        }

        const Eigen::VectorXd s = xn - x;
        const double fchange = fn - fx;
        Eigen::VectorXd gn = -numeric_gradient(counted, xn, c.gradient_step);
        const Eigen::VectorXd y = gn - g;
        x = xn;
        fx = fn;
        g = gn;
        res.trace.push_back(fx);

        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            if (!scaled) {
                Hinv = Eigen::MatrixXd::Identity(k, k) * (sy / y.squaredNorm());
                scaled = true;
            }
            const double rho = 1.0 / sy;
            const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(k, k);
            Hinv = (I - rho * s * y.transpose()) * Hinv * (I - rho * y * s.transpose()) + rho * s * s.transpose();
        }
        if (s.cwiseAbs().maxCoeff() < c.step_tol && std::abs(fchange) <= 1e-14 * std::max(1.0, std::abs(fx))) {
            res.status = OptimStatus::Converged;
            ++it;
            break;
        }
    }

    res.argmax = x;
    res.loglik = fx;
    res.iterations = it;
    if (c.compute_covariance) {
        const Eigen::MatrixXd info = -numeric_hessian(counted, x, c.hessian_step);
        auto cov = covariance_from_information(info);
        res.covariance = std::move(cov.covariance);
        res.covariance_repaired = cov.repaired;
    }
    res.evaluations = evals;
    return res;
}

double aic(double loglik, int k) {
    if (k < 0) throw std::domain_error("parameter count must be non-negative");
    return -2.0 * loglik + 2.0 * k;
}

ParamDraws draw_params(const Eigen::VectorXd& mle, const Eigen::MatrixXd& covariance, int B, std::uint64_t seed) {
    if (B < 1) throw std::domain_error("number of draws must be at least 1");
    const Eigen::Index k = mle.size();
    if (covariance.rows() != k || covariance.cols() != k) throw NumericalError("covariance has wrong dimension");
    ParamDraws out;
    out.seed = seed;
    out.draws.resize(B, k);

    Eigen::MatrixXd factor = Eigen::MatrixXd::Zero(k, k);
    if (k > 0) {
        Eigen::LDLT<Eigen::MatrixXd> ldlt(0.5 * (covariance + covariance.transpose()));
        if (ldlt.info() != Eigen::Success) throw NumericalError("covariance factorisation failed");
        const double scale = std::max(1.0, covariance.cwiseAbs().maxCoeff());
        Eigen::VectorXd d = ldlt.vectorD();
        for (Eigen::Index i = 0; i < k; ++i) {
            if (d[i] < -1e-10 * scale) throw NumericalError("covariance is not positive semi-definite");
            d[i] = std::sqrt(std::max(d[i], 0.0));
        }
        // cov = P^T L D L^T P  =>  factor = P^T L sqrt(D)
        Eigen::MatrixXd L = ldlt.matrixL();
        factor = ldlt.transpositionsP().transpose() * (L * d.asDiagonal());
    }

    Rng rng = make_stream(seed, "draws");
    std::normal_distribution<double> normal;
    Eigen::VectorXd z(k);
    for (int b = 0; b < B; ++b) {
        for (Eigen::Index i = 0; i < k; ++i) z[i] = normal(rng);
        out.draws.row(b) = (mle + factor * z).transpose();
    }
    return out;
}

ParamDraws draw_params(const OptimResult& result, int B, std::uint64_t seed) {
    return draw_params(result.argmax, result.covariance, B, seed);
}

}  // namespace msm
