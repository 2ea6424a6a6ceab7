#include <cmath>
#include <limits>

#include "doctest.h"
#include "msm/dist.hpp"
#include "msm/errors.hpp"
#include "msm/random.hpp"
#include "oracles.hpp"

using namespace msm;

namespace {

Distribution gengamma(double mu, double sigma, double q) { return Distribution(BaseParams{GenGammaParams{mu, sigma, q}}); }
Distribution lognormal(double m, double s) { return Distribution(BaseParams{LogNormalParams{m, s}}); }
Distribution weibull(double shape, double scale) { return Distribution(BaseParams{WeibullParams{shape, scale}}); }
Distribution gamma(double shape, double rate) { return Distribution(BaseParams{GammaParams{shape, rate}}); }

}  // namespace

TEST_CASE("gengamma cdf at reference points") {
    CHECK(gengamma_cdf(1.0, {0.0, 1.0, 0.0}) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(gengamma_cdf(1.0, {0.0, 1.0, 1.0}) == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-12));
    CHECK(gengamma_cdf(1.0, {0.0, 1.0, -1.0}) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
}

TEST_CASE("gengamma log density at reference points") {
    CHECK(gengamma_logpdf(1.0, {0.0, 1.0, 0.0}) == doctest::Approx(std::log(1.0 / std::sqrt(2.0 * M_PI))).epsilon(1e-12));
    CHECK(gengamma_logpdf(1.0, {0.0, 1.0, 1.0}) == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("gengamma density is the derivative of the cdf") {
    const GenGammaParams p{0.3, 0.8, 0.5};
    const double h = 1e-5;
    const double fd = (gengamma_cdf(2.0 + h, p) - gengamma_cdf(2.0 - h, p)) / (2.0 * h);
    CHECK(std::abs(fd - std::exp(gengamma_logpdf(2.0, p))) < 1e-6);
    for (double q : {-1.5, -0.4, 0.7, 2.0}) {
        const GenGammaParams pq{0.1, 0.6, q};
        for (double t : {0.3, 1.0, 4.0}) {
            const double d = (gengamma_cdf(t + h, pq) - gengamma_cdf(t - h, pq)) / (2.0 * h);
            CHECK(std::abs(d - std::exp(gengamma_logpdf(t, pq))) < 1e-6);
        }
    }
}

TEST_CASE("gengamma reduces to log-normal, Weibull and gamma") {
    const double mu = 0.4, sigma = 0.7;
    double worst_ln = 0.0, worst_wb = 0.0, worst_ga = 0.0;
    for (int i = 1; i <= 50; ++i) {
        const double t = 0.1 * i;
        worst_ln = std::max(worst_ln, std::abs(gengamma_cdf(t, {mu, sigma, 0.0}) - oracle::lognormal_cdf(t, mu, sigma)));
        worst_wb = std::max(worst_wb, std::abs(gengamma_cdf(t, {mu, sigma, 1.0}) - oracle::weibull_cdf(t, 1.0 / sigma, std::exp(mu))));
        worst_ga = std::max(worst_ga, std::abs(gengamma_cdf(t, {mu, sigma, sigma}) -
                                               oracle::gamma_cdf(t, 1.0 / (sigma * sigma), std::exp(-mu) / (sigma * sigma))));
    }
    CHECK(worst_ln < 1e-8);
    CHECK(worst_wb < 1e-8);
    CHECK(worst_ga < 1e-8);
}

TEST_CASE("gengamma is continuous across the log-normal switch") {
    const double t = 2.5;
    const double at0 = gengamma_cdf(t, {0.3, 0.9, 0.0});
    for (double q : {1e-4, -1e-4, 2e-5, -2e-5}) CHECK(std::abs(detail::gengamma_cdf_prentice(t, {0.3, 0.9, q}) - at0) < 1e-4);
}

TEST_CASE("family cdfs match closed forms") {
    for (double t : {0.2, 1.0, 3.5}) {
        CHECK(weibull(1.7, 2.2).cdf(t) == doctest::Approx(oracle::weibull_cdf(t, 1.7, 2.2)).epsilon(1e-12));
        CHECK(gamma(2.5, 0.8).cdf(t) == doctest::Approx(oracle::gamma_cdf(t, 2.5, 0.8)).epsilon(1e-10));
        CHECK(lognormal(0.2, 0.6).cdf(t) == doctest::Approx(oracle::lognormal_cdf(t, 0.2, 0.6)).epsilon(1e-12));
        CHECK(gamma(2.5, 0.8).survival(t) + gamma(2.5, 0.8).cdf(t) == doctest::Approx(1.0));
    }
}

TEST_CASE("cure wrapper") {
    const BaseParams ln = LogNormalParams{0.0, 1.0};
    CHECK(Distribution(CureParams{0.0, ln}).cdf(1.7) == doctest::Approx(lognormal(0.0, 1.0).cdf(1.7)));
    CHECK(Distribution(CureParams{1.0, ln}).cdf(1.7) == 0.0);
    CHECK(cure_cdf(1.0, CureParams{0.3, ln}) == doctest::Approx(0.35).epsilon(1e-12));
    const Distribution c(CureParams{0.3, ln});
    CHECK(c.survival(1e9) == doctest::Approx(0.3));
    CHECK(std::isinf(c.mean()));
}

TEST_CASE("quantiles invert the cdf") {
    CHECK(lognormal(0.0, 1.0).quantile(0.5) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(gengamma(0.0, 1.0, 1.0).quantile(1.0 - std::exp(-1.0)) == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(Distribution(CureParams{0.6, WeibullParams{1.0, 1.0}}).quantile(0.5) == kNever);
    const auto g = gengamma(0.2, 0.7, -0.8);
    for (double u : {0.01, 0.3, 0.9, 0.999}) CHECK(g.cdf(g.quantile(u)) == doctest::Approx(u).epsilon(1e-9));
}

TEST_CASE("sampling") {
    auto rng = make_stream(11, "dist-test");
    SUBCASE("cure with p = 1 never fires") {
        const Distribution c(CureParams{1.0, LogNormalParams{0.0, 1.0}});
        for (int i = 0; i < 100; ++i) CHECK(c.sample(rng) == kNever);
    }
    SUBCASE("unit exponential mean") {
        const auto e = weibull(1.0, 1.0);
        const int n = 100000;
        double sum = 0.0;
        for (int i = 0; i < n; ++i) sum += e.sample(rng);
        CHECK(std::abs(sum / n - 1.0) < 3.0 / std::sqrt(double(n)));
    }
    SUBCASE("gengamma draws pass a KS test") {
        for (double q : {0.4, 0.0, -0.6, 1.5}) {
            const auto g = gengamma(0.2, 0.7, q);
            std::vector<double> x(10000);
            for (auto& v : x) v = g.sample(rng);
            CHECK(oracle::ks_statistic(x, [&](double t) { return g.cdf(t); }) < oracle::ks_critical_1pct(x.size()));
        }
    }
    SUBCASE("gamma draws pass a KS test") {
        for (double shape : {0.3, 1.0, 4.0}) {
            const auto g = gamma(shape, 2.0);
            std::vector<double> x(10000);
            for (auto& v : x) v = g.sample(rng);
            CHECK(oracle::ks_statistic(x, [&](double t) { return oracle::gamma_cdf(t, shape, 2.0); }) <
                  oracle::ks_critical_1pct(x.size()));
        }
    }
}

TEST_CASE("linked parameters") {
    const CovariateCoding coding({Covariate{"z", false, {"0", "1"}}});
    SUBCASE("zero coefficients keep the baseline") {
        const LinkedDistribution ld(DistributionSpec{Family::GenGamma, false, {{"mu", {"z"}}, {"sigma", {"z"}}}}, coding);
        const std::vector<double> coef{1.5, 0.0, std::log(0.8), 0.0, 0.3};
        const auto nat = ld.natural(coef, std::vector<double>{1.0});
        CHECK(nat[0] == doctest::Approx(1.5));
        CHECK(nat[1] == doctest::Approx(0.8));
        CHECK(nat[2] == doctest::Approx(0.3));
    }
    SUBCASE("log link on sigma") {
        const LinkedDistribution ld(DistributionSpec{Family::GenGamma, false, {{"sigma", {"z"}}}}, coding);
        REQUIRE(ld.coefficient_names() == std::vector<std::string>{"mu", "sigma", "sigma:z=1", "Q"});
        const auto nat = ld.natural(std::vector<double>{0.0, 0.0, std::log(2.0), 0.1}, std::vector<double>{1.0});
        CHECK(nat[1] == doctest::Approx(2.0).epsilon(1e-14));
    }
    SUBCASE("logit link on the cure probability") {
        const LinkedDistribution ld(DistributionSpec{Family::LogNormal, true, {{"p", {"z"}}}}, coding);
        const auto nat = ld.natural(std::vector<double>{0.0, 0.0, 0.0, 1.0}, std::vector<double>{1.0});
        CHECK(nat[2] == doctest::Approx(0.7311).epsilon(1e-4));
        CHECK(nat[2] == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))).epsilon(1e-14));
    }
    SUBCASE("unknown covariate is rejected") {
        CHECK_THROWS_AS(LinkedDistribution(DistributionSpec{Family::Weibull, false, {{"scale", {"nope"}}}}, coding), ConfigError);
    }
}
