#include "msm/forward.hpp"

#include <algorithm>
#include <cmath>

#include "msm/errors.hpp"

namespace msm {
namespace {

using Vec = Eigen::VectorXd;
using Rhs = std::function<void(double, const Vec&, Vec&)>;

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

class Integrator {
public:
    Integrator(Rhs f, const OdeTolerances& tol, std::size_t n)
        : f_(std::move(f)), tol_(tol), k1_(n), k2_(n), k3_(n), k4_(n), k5_(n), k6_(n), k7_(n), tmp_(n), ynew_(n) {}

    /// Advances (t, y) to `target`. `stop` is checked after every accepted step
    /// and ends integration early when it returns true.
    template <class Stop>
    void advance(double& t, Vec& y, double target, Stop&& stop) {
        if (target <= t) return;
        if (h_ <= 0.0) h_ = std::min(1e-3 * std::max(1.0, t), target - t);
        if (!fsal_) f_(t, y, k1_);
        fsal_ = true;
        while (t < target) {
            if (++steps_ > tol_.max_steps) throw NumericalError("ODE step limit exceeded");
            double h = std::min(h_, target - t);
            const bool last = h >= target - t;
            tmp_ = y + h * a21 * k1_;
            f_(t + c2 * h, tmp_, k2_);
            tmp_ = y + h * (a31 * k1_ + a32 * k2_);
            f_(t + c3 * h, tmp_, k3_);
            tmp_ = y + h * (a41 * k1_ + a42 * k2_ + a43 * k3_);
            f_(t + c4 * h, tmp_, k4_);
            tmp_ = y + h * (a51 * k1_ + a52 * k2_ + a53 * k3_ + a54 * k4_);
            f_(t + c5 * h, tmp_, k5_);
            tmp_ = y + h * (a61 * k1_ + a62 * k2_ + a63 * k3_ + a64 * k4_ + a65 * k5_);
            f_(t + h, tmp_, k6_);
            ynew_ = y + h * (b1 * k1_ + b3 * k3_ + b4 * k4_ + b5 * k5_ + b6 * k6_);
            f_(t + h, ynew_, k7_);

            double err = 0.0;
            for (Eigen::Index i = 0; i < y.size(); ++i) {
                const double e = h * (e1 * k1_[i] + e3 * k3_[i] + e4 * k4_[i] + e5 * k5_[i] + e6 * k6_[i] + e7 * k7_[i]);
                const double sc = tol_.abs + tol_.rel * std::max(std::abs(y[i]), std::abs(ynew_[i]));
                err += (e / sc) * (e / sc);
            }
            err = std::sqrt(err / static_cast<double>(y.size()));
            if (!std::isfinite(err)) {
                h_ = 0.25 * h;
                if (h_ < 1e-14 * std::max(1.0, t)) throw NumericalError("ODE step size underflow");
                continue;
            }
            const double factor = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
            if (err <= 1.0) {
                t = last ? target : t + h;
                y.swap(ynew_);
                k1_.swap(k7_);
                // Keep the unclipped step length when the step was shortened to hit the target.
                if (!last) h_ = h * factor;
                else h_ = std::max(h_, h * factor);
                if (stop(t, y)) return;
            } else {
                h_ = h * std::max(factor, 0.1);
                if (h_ < 1e-14 * std::max(1.0, t)) throw NumericalError("ODE step size underflow");
            }
        }
    }

private:
    Rhs f_;
    OdeTolerances tol_;
    Vec k1_, k2_, k3_, k4_, k5_, k6_, k7_, tmp_, ynew_;
    double h_ = 0.0;
    bool fsal_ = false;
    long steps_ = 0;
};

double start_time(const IntensityMatrixFunction& q, const OdeTolerances& tol) {
    Eigen::MatrixXd m(q.states, q.states);
    try {
        q.fill(0.0, m);
        if (m.allFinite()) return 0.0;
    } catch (const std::domain_error&) {
    }
    return tol.start;
}

}  // namespace

IntensityMatrixFunction constant_intensity(const Eigen::MatrixXd& q) {
    if (q.rows() != q.cols()) throw ConfigError("intensity matrix must be square");
    return {static_cast<std::size_t>(q.rows()), [q](double, Eigen::MatrixXd& out) { out = q; }};
}

IntensityMatrixFunction submodel_intensity(std::vector<Distribution> destinations) {
    const std::size_t n = destinations.size() + 1;
    return {n, [d = std::move(destinations), n](double t, Eigen::MatrixXd& out) {
                out.setZero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
                double total = 0.0;
                for (std::size_t j = 0; j < d.size(); ++j) {
                    const double h = d[j].hazard(t);
                    out(0, static_cast<Eigen::Index>(j + 1)) = h;
                    total += h;
                }
                out(0, 0) = -total;
            }};
}

TransitionProbMatrix solve_forward(const IntensityMatrixFunction& q, std::span<const double> grid,
                                   const OdeTolerances& tol) {
    const auto n = static_cast<Eigen::Index>(q.states);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (grid[i] < 0.0 || (i > 0 && grid[i] < grid[i - 1]))
            throw ConfigError("time grid must be non-decreasing from 0");
    }
    Eigen::MatrixXd qm(n, n), pm(n, n), dp(n, n);
    Rhs f = [&](double t, const Vec& y, Vec& out) {
        q.fill(t, qm);
        pm = Eigen::Map<const Eigen::MatrixXd>(y.data(), n, n);
        dp.noalias() = pm * qm;
        out = Eigen::Map<const Vec>(dp.data(), n * n);
    };
    double t = start_time(q, tol);
    Vec y = Eigen::Map<const Vec>(Eigen::MatrixXd::Identity(n, n).eval().data(), n * n);
    Integrator ode(f, tol, static_cast<std::size_t>(n * n));
    TransitionProbMatrix out;
    for (double g : grid) {
        if (g > t) ode.advance(t, y, g, [](double, const Vec&) { return false; });
        out.times.push_back(g);
        out.p.push_back(g <= 0.0 ? Eigen::MatrixXd::Identity(n, n)
                                 : Eigen::MatrixXd(Eigen::Map<const Eigen::MatrixXd>(y.data(), n, n)));
    }
    return out;
}

SubmodelLimit submodel_limit(const std::vector<Distribution>& destinations, double cap, double mass_tol,
                             const OdeTolerances& tol) {
    const std::size_t d = destinations.size();
    const auto n = static_cast<Eigen::Index>(d + 1);
    std::vector<double> h(d);
    Rhs f = [&](double t, const Vec& y, Vec& out) {
        double total = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            h[j] = destinations[j].hazard(t);
            total += h[j];
        }
        out[0] = -y[0] * total;
        for (std::size_t j = 0; j < d; ++j) out[static_cast<Eigen::Index>(j + 1)] = y[0] * h[j];
    };
    const auto q = submodel_intensity(destinations);
    double t = start_time(q, tol);
    Vec y = Vec::Zero(n);
    y[0] = 1.0;
    Integrator ode(f, tol, d + 1);
    ode.advance(t, y, cap, [&](double, const Vec& v) { return v[0] < mass_tol; });
    SubmodelLimit out;
    out.horizon = t;
    out.remaining = y[0];
    for (std::size_t j = 0; j < d; ++j) out.absorbed.push_back(y[static_cast<Eigen::Index>(j + 1)]);
    return out;
}

double limit_cap(double max_observed_time) { return max_observed_time > 0.0 ? 10.0 * max_observed_time : 1000.0; }

}  // namespace msm
