#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "helpers.hpp"
#include "msm/errors.hpp"
#include "msm/inference.hpp"
#include "msm/survfit.hpp"

using namespace msm;
using namespace testing_helpers;

TEST_CASE("quadratic maximum") {
    const auto res = maximize([](const Eigen::VectorXd& x) { return -(x[0] - 3.0) * (x[0] - 3.0); }, Eigen::VectorXd::Zero(1));
    CHECK(res.converged());
    CHECK(std::abs(res.argmax[0] - 3.0) < 1e-6);
    CHECK(res.covariance(0, 0) == doctest::Approx(0.5).epsilon(1e-4));
}

TEST_CASE("non-finite start is rejected") {
    CHECK_THROWS_AS(maximize([](const Eigen::VectorXd&) { return NAN; }, Eigen::VectorXd::Zero(2)), NumericalError);
}

TEST_CASE("exponential rate MLE and its variance") {
    auto rng = make_stream(5, "exp-mle");
    std::exponential_distribution<double> e(2.5);
    std::vector<TransitionRow> rows;
    double total = 0.0;
    const std::size_t n = 4000;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = e(rng);
        total += t;
        rows.push_back({t, true, 1.0, 0, i});
    }
    // log-likelihood in the log-rate: n * theta - exp(theta) * T
    const auto res = maximize(
        [&](const Eigen::VectorXd& x) { return static_cast<double>(n) * x[0] - std::exp(x[0]) * total; }, Eigen::VectorXd::Zero(1));
    const double rate = std::exp(res.argmax[0]);
    CHECK(std::abs(rate - n / total) < 1e-6);
    // Delta method: var(rate) = rate^2 var(theta)
    CHECK(rate * rate * res.covariance(0, 0) == doctest::Approx(rate * rate / n).epsilon(0.05));

    // Same through the survival fitter with a Weibull of free shape.
    FitControls c;
    const LinkedDistribution wb(DistributionSpec{Family::Weibull, false, {}}, CovariateCoding{});
    const auto fit = fit_survival(wb, rows, {std::vector<double>{}}, c);
    CHECK(std::abs(fit.argmax[0]) < 3.0 * std::sqrt(fit.covariance(0, 0)));
}

TEST_CASE("AIC") {
    CHECK(aic(-22850.5, 58) == 45817.0);
    CHECK(aic(-23379.0, 52) == 46862.0);
    CHECK(aic(0.0, 0) == 0.0);
    CHECK_THROWS_AS(aic(1.0, -1), std::domain_error);
}

TEST_CASE("covariance repair clips eigenvalues") {
    Eigen::MatrixXd info(2, 2);
    info << 1.0, 0.0, 0.0, -1.0;
    const auto r = covariance_from_information(info);
    CHECK(r.repaired);
    CHECK(r.covariance.allFinite());
    Eigen::MatrixXd pd(2, 2);
    pd << 2.0, 0.5, 0.5, 1.0;
    const auto q = covariance_from_information(pd);
    CHECK_FALSE(q.repaired);
    CHECK((q.covariance * pd - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("parameter draws") {
    SUBCASE("variance") {
        Eigen::MatrixXd cov(1, 1);
        cov << 4.0;
        const auto d = draw_params(Eigen::VectorXd::Zero(1), cov, 100000, 3);
        const double mean = d.draws.col(0).mean();
        const double var = (d.draws.col(0).array() - mean).square().sum() / (d.count() - 1);
        CHECK(std::abs(var - 4.0) < 0.03 * 4.0);
    }
    SUBCASE("zero covariance") {
        Eigen::VectorXd mle(3);
        mle << 1.0, -2.0, 0.5;
        const auto d = draw_params(mle, Eigen::MatrixXd::Zero(3, 3), 50, 3);
        for (Eigen::Index b = 0; b < d.count(); ++b) CHECK(d.row(b) == mle);
    }
    SUBCASE("same seed, same draws") {
        Eigen::MatrixXd cov(2, 2);
        cov << 1.0, 0.3, 0.3, 2.0;
        CHECK(draw_params(Eigen::VectorXd::Zero(2), cov, 20, 9).draws == draw_params(Eigen::VectorXd::Zero(2), cov, 20, 9).draws);
        CHECK(draw_params(Eigen::VectorXd::Zero(2), cov, 20, 9).draws != draw_params(Eigen::VectorXd::Zero(2), cov, 20, 10).draws);
    }
    SUBCASE("correlated draws reproduce the covariance") {
        Eigen::MatrixXd cov(2, 2);
        cov << 1.0, 0.8, 0.8, 2.0;
        const auto d = draw_params(Eigen::VectorXd::Zero(2), cov, 100000, 4);
        const Eigen::MatrixXd centred = d.draws.rowwise() - d.draws.colwise().mean();
        const Eigen::MatrixXd emp = centred.transpose() * centred / double(d.count() - 1);
        CHECK((emp - cov).cwiseAbs().maxCoeff() < 0.05);
    }
}
