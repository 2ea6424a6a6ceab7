#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "msm/csh.hpp"
#include "msm/errors.hpp"
#include "oracles.hpp"

using namespace msm;
using namespace testing_helpers;

namespace {

CshModelSpec weibull_spec(std::size_t transitions) {
    return CshModelSpec{std::vector<DistributionSpec>(transitions, DistributionSpec{Family::Weibull, false, {}})};
}

}  // namespace

TEST_CASE("CSH observation contributions") {
    const auto s = hospital_icu_structure();
    std::vector<Distribution> d(s.transition_count(), exponential(1.0));
    CHECK(csh_obs_loglik(obs(0, 1, 1.0, Status::Exact), s, d) == doctest::Approx(-3.0).epsilon(1e-12));
    std::fill(d.begin(), d.end(), exponential(0.5));
    CHECK(csh_obs_loglik(obs(0, -1, 2.0, Status::Censored), s, d) == doctest::Approx(-3.0).epsilon(1e-12));
    CHECK(csh_obs_loglik(obs(0, -1, 2.0, Status::PartialOutcome), s, d) == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("non-finite contributions name the subject") {
    const auto s = hospital_icu_structure();
    std::vector<Distribution> d(s.transition_count(), Distribution::never());
    CHECK_THROWS_WITH_AS(csh_obs_loglik(obs(0, 1, 1.0, Status::Exact, "S42"), s, d), doctest::Contains("S42"),
                         LikelihoodDomainError);
}

TEST_CASE("constant hazards are recovered") {
    const auto s = three_destination_structure();
    const std::vector<double> rates{1.0, 0.5, 2.0};
    const auto data = competing_exponential_data(s, rates, 5000, 3);
    const auto fit = fit_csh(data, s, weibull_spec(3));
    for (std::size_t k = 0; k < 3; ++k) {
        const auto& t = fit.transitions[k];
        // coef = (log shape, log scale); rate = 1 / scale for shape 1.
        const double se_shape = std::sqrt(t.covariance(0, 0)), se_scale = std::sqrt(t.covariance(1, 1));
        CHECK(std::abs(t.coef[0]) < 3.0 * se_shape);
        CHECK(std::abs(t.coef[1] + std::log(rates[k])) < 3.0 * se_scale);
    }
}

TEST_CASE("total log-likelihood is the sum of observation contributions") {
    const auto s = three_destination_structure();
    const auto data = competing_exponential_data(s, {1.0, 0.5, 2.0}, 800, 4, 0.7);
    const auto fit = fit_csh(data, s, weibull_spec(3));
    CHECK(std::abs(csh_total_loglik(fit, data) - fit.loglik) < 1e-8);
    CHECK(fit.k == 6);
    CHECK(fit.aic == doctest::Approx(-2.0 * fit.loglik + 12.0));
}

TEST_CASE("transitions without events are pinned") {
    const auto s = three_destination_structure();
    const auto data = competing_exponential_data(s, {1.0, 1e-12, 1e-12}, 200, 5);
    const auto fit = fit_csh(data, s, weibull_spec(3));
    CHECK_FALSE(fit.transitions[0].zero_events);
    CHECK(fit.transitions[1].zero_events);
    CHECK(fit.transitions[2].zero_events);
    CHECK(fit.k == 2);
    CHECK(fit.resolve(std::vector<double>{})[1].survival(1e6) == 1.0);
}

TEST_CASE("cure on a discharge transition is rejected") {
    const auto s = three_destination_structure();
    auto spec = weibull_spec(3);
    spec.transitions[2].cure = true;
    CHECK_THROWS_AS(validate_csh_spec(spec, s, CovariateCoding{}), ConfigError);
}

TEST_CASE("next-event sampling") {
    auto rng = make_stream(8, "next-event");
    SUBCASE("probability follows the rate ratio") {
        const std::vector<Distribution> c{exponential(1.0), exponential(3.0)};
        const int n = 100000;
        int first = 0;
        for (int i = 0; i < n; ++i) first += csh_next_event_sample(c, rng).index == 0;
        const double se = std::sqrt(0.25 * 0.75 / n);
        CHECK(std::abs(first / double(n) - 0.25) < 3.0 * se);
    }
    SUBCASE("a fully cured competitor is never selected") {
        const std::vector<Distribution> c{Distribution(CureParams{1.0, WeibullParams{1.0, 1.0}}), exponential(1.0)};
        for (int i = 0; i < 1000; ++i) CHECK(csh_next_event_sample(c, rng).index == 1);
    }
    SUBCASE("a single competitor is always selected with its own law") {
        const auto g = Distribution(BaseParams{GenGammaParams{0.1, 0.5, 0.3}});
        const std::vector<Distribution> c{g};
        std::vector<double> x(5000);
        for (auto& v : x) {
            const auto e = csh_next_event_sample(c, rng);
            REQUIRE(e.index == 0);
            v = e.time;
        }
        CHECK(oracle::ks_statistic(x, [&](double t) { return g.cdf(t); }) < oracle::ks_critical_1pct(x.size()));
    }
}
