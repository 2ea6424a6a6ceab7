#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "msm/quantities.hpp"
#include "msm/simulate.hpp"

using namespace msm;
using namespace testing_helpers;

namespace {

ModelContext context(const ModelStructure& s) {
    ModelContext c;
    c.structure = s;
    c.max_time = 20.0;
    return c;
}

/// Exponential CSH model with given rates per transition (Weibull shape 1).
CshFit exponential_csh(const ModelStructure& s, const std::vector<double>& rates) {
    CshModelSpec spec{std::vector<DistributionSpec>(s.transition_count(), DistributionSpec{Family::Weibull, false, {}})};
    std::vector<std::vector<double>> coef;
    for (double r : rates) coef.push_back({0.0, -std::log(r)});
    return make_csh_model(context(s), spec, coef);
}

/// Mixture on the hospital/ICU structure with constant membership and Weibull times.
MixtureFit hospital_mixture(double pi_icu, double pi_death, double pi_icu_death) {
    const auto s = hospital_icu_structure();
    MixtureModelSpec spec{{}, std::vector<DistributionSpec>(5, DistributionSpec{Family::Weibull, false, {}})};
    const double ref = 1.0 - pi_icu - pi_death;
    auto lg = [](double p, double r) { return p > 0.0 ? std::log(p / r) : -1e4; };
    std::map<std::string, std::vector<double>> coef{
        {"Hospital", {lg(pi_icu, ref), lg(pi_death, ref), 0.3, 0.5, 0.0, 1.0, 0.1, 2.0}},
        {"ICU", {lg(pi_icu_death, 1.0 - pi_icu_death), 0.0, 2.0, -0.2, 2.5}}};
    return make_mixture_model(context(s), spec, coef);
}

}  // namespace

TEST_CASE("CSH next-state probabilities for constant hazards") {
    const auto s = three_destination_structure();
    const auto fit = exponential_csh(s, {1.0, 0.5, 2.0});
    const auto next = next_state_probs_csh(fit, std::vector<double>{});
    CHECK(std::abs(next[0].probs[0] - 2.0 / 7.0) < 1e-6);
    CHECK(std::abs(next[0].probs[1] - 1.0 / 7.0) < 1e-6);
    CHECK(std::abs(next[0].probs[2] - 4.0 / 7.0) < 1e-6);
    CHECK(next[0].residual < 1e-6);

    const auto single = exponential_csh(single_destination_structure(), {0.3});
    CHECK(next_state_probs_csh(single, std::vector<double>{})[0].probs[0] == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("a fully cured ICU transition has next-state probability zero") {
    const auto s = hospital_icu_structure();
    CshModelSpec spec{std::vector<DistributionSpec>(5, DistributionSpec{Family::Weibull, false, {}})};
    spec.transitions[0].cure = true;
    std::vector<std::vector<double>> coef(5, {0.0, 0.0});
    coef[0] = {0.0, 0.0, 50.0};  // logit p
    const auto fit = make_csh_model(context(s), spec, coef);
    const auto next = next_state_probs_csh(fit, std::vector<double>{});
    CHECK(next[0].probs[0] < 1e-12);
    CHECK(next[0].probs[1] == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("mixture next state equals membership") {
    const auto fit = hospital_mixture(0.2, 0.1, 0.4);
    const auto next = next_state_probs_mixture(fit, std::vector<double>{});
    const auto pi = membership_probs(fit, 0, std::vector<double>{});
    CHECK(next[0].probs == pi);
    CHECK(pi[0] == doctest::Approx(0.2));
    CHECK(next[0].residual == 0.0);
}

TEST_CASE("simulated next states follow the rate ratio") {
    const auto s = three_destination_structure();
    const auto fit = exponential_csh(s, {1.0, 0.5, 2.0});
    const auto hist = simulate_histories(profile_model(fit, std::vector<double>{}), 100000, 3);
    std::vector<double> count(3, 0.0);
    for (const auto& p : hist) {
        CHECK(p.stages == 1);
        count[static_cast<std::size_t>(p.transitions[0])] += 1.0;
    }
    const double truth[] = {2.0 / 7.0, 1.0 / 7.0, 4.0 / 7.0};
    for (int k = 0; k < 3; ++k) {
        const double se = std::sqrt(truth[k] * (1.0 - truth[k]) / 1e5);
        CHECK(std::abs(count[k] / 1e5 - truth[k]) < 3.0 * se);
    }
}

TEST_CASE("pathway bookkeeping") {
    const auto fit = hospital_mixture(0.2, 0.1, 0.4);
    for (const auto& p : simulate_histories(profile_model(fit, std::vector<double>{}), 2000, 4)) {
        double total = 0.0;
        for (std::size_t i = 0; i < p.stages; ++i) total += p.times[i];
        CHECK(total == doctest::Approx(p.total_time).epsilon(1e-14));
        CHECK(p.absorbed);
    }
    const auto no_icu = hospital_mixture(0.0, 0.1, 0.4);
    for (const auto& p : simulate_histories(profile_model(no_icu, std::vector<double>{}), 5000, 5)) CHECK(p.stages == 1);
}

TEST_CASE("conditional length of stay") {
    SUBCASE("minimum of two unit exponentials") {
        const auto fit = exponential_csh(two_destination_structure(), {1.0, 1.0});
        const auto hist = simulate_histories(profile_model(fit, std::vector<double>{}), 100000, 6);
        const auto los = conditional_los(hist, 0);
        CHECK(std::abs(los.mean - 0.5) < 3.0 * los.mean_se);
        CHECK(los.q05 <= los.median);
        CHECK(los.median <= los.q95);
    }
    SUBCASE("mixture log-normal median is analytic") {
        const auto s = two_destination_structure();
        MixtureModelSpec spec{{}, {DistributionSpec{Family::LogNormal, false, {}}, DistributionSpec{Family::Weibull, false, {}}}};
        const auto fit = make_mixture_model(context(s), spec, {{"Hospital", {0.0, 0.0, 0.0, 0.0, 0.0}}});
        QuantityOptions opt;
        opt.simulations = 1000;
        const auto q = compute_quantities(fit, std::vector<double>{}, opt);
        CHECK(q.los[0].median == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("ultimate outcomes of a mixture") {
    const auto fit = hospital_mixture(0.2, 0.1, 0.4);
    QuantityOptions opt;
    opt.simulations = 100000;
    const auto q = compute_quantities(fit, std::vector<double>{}, opt);
    const auto& st = fit.context.structure;
    const auto death = static_cast<std::size_t>(st.death_state()), discharge = static_cast<std::size_t>(st.discharge_state());
    CHECK(q.ultimate.probs[death] == doctest::Approx(0.18).epsilon(1e-12));
    CHECK(q.ultimate.probs[death] + q.ultimate.probs[discharge] == doctest::Approx(1.0).epsilon(1e-12));
    // Simulated proportions agree with the analytic pathway products.
    const auto hist = simulate_histories(profile_model(fit, std::vector<double>{}), 100000, 7);
    const auto emp = ultimate_outcomes(hist, st);
    CHECK(std::abs(emp.probs[death] - 0.18) < 3.0 * emp.probs_se[death]);
}

TEST_CASE("intervals") {
    const auto s = three_destination_structure();
    const auto data = competing_exponential_data(s, {1.0, 0.5, 2.0}, 500, 9, 1.5);
    const auto fit = fit_csh(data, s, CshModelSpec{std::vector<DistributionSpec>(3, DistributionSpec{Family::Weibull, false, {}})});
    QuantityOptions opt;
    opt.simulations = 2000;
    opt.seed = 3;
    opt.warn = false;
    const std::vector<CovariateValues> profiles{{}};

    SUBCASE("zero covariance collapses the intervals") {
        const auto k = fit.k;
        const auto draws = draw_params(fit.coefficients(), Eigen::MatrixXd::Zero(k, k), 5, 1);
        for (const auto& r : quantities_with_intervals(fit, draws, profiles, opt)[0].rows) {
            if (std::isnan(r.estimate)) continue;
            CHECK(r.lower == r.estimate);
            CHECK(r.upper == r.estimate);
        }
    }
    SUBCASE("a single draw gives degenerate intervals at its own values") {
        const auto draws = draw_params(fit.coefficients(), fit.covariance(), 1, 2);
        const auto one = FittedModel(fit.with_coefficients(draws.row(0)));
        const auto own = flatten(compute_quantities(one, std::vector<double>{}, opt), s);
        const auto rows = quantities_with_intervals(fit, draws, profiles, opt)[0].rows;
        REQUIRE(rows.size() == own.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (std::isnan(own[i].value)) continue;
            CHECK(rows[i].lower == own[i].value);
            CHECK(rows[i].upper == own[i].value);
        }
    }
    SUBCASE("intervals bracket the estimate") {
        const auto draws = draw_params(fit.coefficients(), fit.covariance(), 100, 3);
        const auto sum = quantities_with_intervals(fit, draws, profiles, opt)[0];
        CHECK(sum.draws_used == 100);
        for (const auto& r : sum.rows) {
            if (std::isnan(r.estimate)) continue;
            CHECK(r.lower <= r.estimate);
            CHECK(r.estimate <= r.upper);
        }
    }
    SUBCASE("serial and parallel agree bit for bit") {
        const auto draws = draw_params(fit.coefficients(), fit.covariance(), 8, 4);
        auto par = opt;
        par.exec = Exec::Parallel;
        const auto a = quantities_with_intervals(fit, draws, profiles, opt)[0].rows;
        const auto b = quantities_with_intervals(fit, draws, profiles, par)[0].rows;
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK((a[i].estimate == b[i].estimate || (std::isnan(a[i].estimate) && std::isnan(b[i].estimate))));
            CHECK((a[i].lower == b[i].lower || (std::isnan(a[i].lower) && std::isnan(b[i].lower))));
        }
    }
}

TEST_CASE("quantiles are ordered") {
    const auto fit = hospital_mixture(0.2, 0.1, 0.4);
    QuantityOptions opt;
    opt.simulations = 20000;
    const auto q = compute_quantities(fit, std::vector<double>{}, opt);
    for (const auto& t : q.los) {
        CHECK(t.q05 <= t.median);
        CHECK(t.median <= t.q95);
    }
    for (int s : fit.context.structure.absorbing_states()) {
        const auto& t = q.ultimate.times[static_cast<std::size_t>(s)];
        CHECK(t.q05 <= t.median);
        CHECK(t.median <= t.q95);
    }
}

TEST_CASE("type-7 quantile") {
    const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
    CHECK(sorted_quantile(v, 0.0) == 1.0);
    CHECK(sorted_quantile(v, 1.0) == 4.0);
    CHECK(sorted_quantile(v, 0.5) == 2.5);
    CHECK(sorted_quantile(v, 0.25) == doctest::Approx(1.75));
}
