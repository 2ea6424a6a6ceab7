#include <cmath>
#include <numeric>

#include "doctest.h"
#include "helpers.hpp"
#include "msm/errors.hpp"
#include "msm/nonparam.hpp"
#include "msm/synthdata.hpp"

using namespace msm;
using namespace testing_helpers;

namespace {

Dataset synthetic(std::size_t n, std::uint64_t seed, SynthConfig* out = nullptr) {
    auto config = default_synth_config(n, seed);
    const auto result = generate(config);
    const auto& ctx = context_of(config.truth);
    if (out) *out = config;
    return load_dataset(result.rows, ctx.covariate_names, ctx.structure, ctx.options, &ctx.coding);
}

}  // namespace

TEST_CASE("Kaplan-Meier on a hand-worked sample") {
    const std::vector<double> t{1.0, 2.0, 3.0};
    const std::vector<int> e{1, 0, 1};
    const auto km = kaplan_meier(t, e);
    CHECK(km.at(0.5) == 1.0);
    CHECK(km.at(1.0) == doctest::Approx(2.0 / 3.0));
    CHECK(km.at(2.5) == doctest::Approx(2.0 / 3.0));
    CHECK(km.at(3.0) == doctest::Approx(0.0));
}

TEST_CASE("Kaplan-Meier without events stays at one") {
    const std::vector<double> t{1.0, 2.0, 3.0};
    const std::vector<int> e{0, 0, 0};
    const auto km = kaplan_meier(t, e);
    for (double x : {0.0, 1.0, 2.5, 10.0}) CHECK(km.at(x) == 1.0);
}

TEST_CASE("Kaplan-Meier without censoring is the empirical survivor function") {
    std::vector<double> t{4.0, 1.0, 3.0, 3.0, 7.0};
    const std::vector<int> e(t.size(), 1);
    const auto km = kaplan_meier(t, e);
    for (double x : {0.0, 1.0, 2.0, 3.0, 5.0, 7.0}) {
        const double ecdf = static_cast<double>(std::count_if(t.begin(), t.end(), [&](double v) { return v <= x; })) / 5.0;
        CHECK(km.at(x) == doctest::Approx(1.0 - ecdf));
    }
}

TEST_CASE("Kaplan-Meier rejects empty input") {
    CHECK_THROWS_AS(kaplan_meier(std::vector<double>{}, std::vector<int>{}), ConfigError);
}

TEST_CASE("Aalen-Johansen with one destination is one minus Kaplan-Meier") {
    const auto s = single_destination_structure();
    const auto data = competing_exponential_data(s, {0.3}, 400, 5, 4.0);
    std::vector<std::size_t> rows(data.rows.size());
    std::iota(rows.begin(), rows.end(), 0);
    const auto aj = aalen_johansen(data, rows, s, 0);
    std::vector<double> t;
    std::vector<int> e;
    for (const auto& o : data.rows) {
        t.push_back(o.time);
        e.push_back(o.status == Status::Exact ? 1 : 0);
    }
    const auto km = kaplan_meier(t, e);
    for (double x = 0.0; x <= 4.0; x += 0.25) CHECK(aj.incidence[0].at(x) == doctest::Approx(1.0 - km.at(x)).epsilon(1e-12));
}

TEST_CASE("Aalen-Johansen without censoring gives observed proportions") {
    const auto s = three_destination_structure();
    const auto data = competing_exponential_data(s, {1.0, 0.5, 2.0}, 500, 6);
    std::vector<std::size_t> rows(data.rows.size());
    std::iota(rows.begin(), rows.end(), 0);
    const auto aj = aalen_johansen(data, rows, s, 0);
    const double end = aj.max_followup;
    for (std::size_t j = 0; j < 3; ++j) {
        const int to = s.transitions()[static_cast<std::size_t>(s.outgoing(0)[j])].to;
        const double share =
            static_cast<double>(std::count_if(data.rows.begin(), data.rows.end(), [&](const Observation& o) { return o.to == to; })) / 500.0;
        CHECK(aj.incidence[j].at(end) == doctest::Approx(share).epsilon(1e-12));
    }
    CHECK(aj.remaining.at(end) == doctest::Approx(0.0));
}

TEST_CASE("Aalen-Johansen redistributes mass of earlier censorings") {
    const auto s = two_destination_structure();
    const auto data = make_dataset({obs(0, -1, 1.0, Status::Censored, "A"), obs(0, 1, 2.0, Status::Exact, "B")}, {});
    const std::vector<std::size_t> rows{0, 1};
    const auto aj = aalen_johansen(data, rows, s, 0);
    CHECK(aj.incidence[0].at(1.5) == 0.0);
    CHECK(aj.incidence[0].at(2.0) == doctest::Approx(1.0));
    CHECK(aj.incidence[1].at(2.0) == 0.0);
}

TEST_CASE("status-3 rows are censored in Aalen-Johansen") {
    const auto s = two_destination_structure();
    const auto data = make_dataset(
        {obs(0, -1, 1.0, Status::PartialOutcome, "A"), obs(0, 1, 2.0, Status::Exact, "B"), obs(0, 2, 3.0, Status::Exact, "C")}, {});
    const std::vector<std::size_t> rows{0, 1, 2};
    const auto aj = aalen_johansen(data, rows, s, 0);
    CHECK(aj.incidence[0].at(2.0) == doctest::Approx(0.5));
    CHECK(aj.incidence[1].at(3.0) == doctest::Approx(0.5));
}

TEST_CASE("grouping by two covariates yields one group per level combination") {
    const auto data = synthetic(2000, 3);
    const auto groups = group_rows(data, {"gender"});
    CHECK(groups.size() == 2);
    const auto by_both = group_rows(data, {"age_group", "gender"});
    std::size_t total = 0;
    for (const auto& g : by_both) total += g.rows.size();
    CHECK(total == data.rows.size());
    CHECK(by_both.size() == 10);
    CHECK(by_both.front().label.find("age_group=") == 0);
    const auto all = group_rows(data, {});
    REQUIRE(all.size() == 1);
    CHECK(all[0].label == "all");
}

TEST_CASE("goodness-of-fit rows start at zero and stop after follow-up") {
    SynthConfig config;
    const auto data = synthetic(1500, 4, &config);
    const std::vector<double> grid{0.0, 5.0, 400.0};
    const auto rows = gof_table(config.truth, data, grid, {});
    REQUIRE(!rows.empty());
    for (const auto& r : rows) {
        if (r.t == 0.0) {
            CHECK(r.parametric == doctest::Approx(0.0).epsilon(1e-12));
            CHECK(r.nonparametric == 0.0);
        }
        if (r.t == 400.0) CHECK(std::isnan(r.nonparametric));
    }
    const double gap = max_gap(rows);
    CHECK(std::isfinite(gap));
    CHECK(gap < 0.1);
}

TEST_CASE("Kaplan-Meier comparison against the generating CSH model") {
    SynthConfig config;
    const auto data = synthetic(3000, 8, &config);
    const std::vector<double> grid{0.0, 1.0, 3.0, 7.0, 14.0};
    const auto rows = km_comparison(std::get<CshFit>(config.truth), data, grid, {});
    CHECK(rows.size() == 5 * grid.size());
    CHECK(max_gap(rows) < 0.1);
}

TEST_CASE("histogram counts add up to the observed transitions") {
    auto config = mixture_synth_config(2000, 5);
    const auto result = generate(config);
    const auto& ctx = context_of(config.truth);
    const auto data = load_dataset(result.rows, ctx.covariate_names, ctx.structure, ctx.options, &ctx.coding);
    const auto rows = histogram_table(std::get<MixtureFit>(config.truth), data, {}, 10);
    std::size_t binned = 0;
    double expected = 0.0;
    for (const auto& r : rows) {
        binned += r.count;
        expected += r.expected;
        CHECK(r.upper > r.lower);
    }
    const auto exact = static_cast<std::size_t>(
        std::count_if(data.rows.begin(), data.rows.end(), [](const Observation& o) { return o.status == Status::Exact; }));
    CHECK(binned == exact);
    CHECK(expected < static_cast<double>(exact));
    CHECK(expected > 0.9 * static_cast<double>(exact));
}

TEST_CASE("subgroup log-likelihoods add up to the total") {
    SynthConfig config;
    const auto data = synthetic(1000, 9, &config);
    const auto groups = subgroup_loglik(config.truth, data, {"age_group"});
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& g : groups) {
        sum += g.loglik;
        count += g.count;
    }
    CHECK(count == data.rows.size());
    CHECK(sum == doctest::Approx(csh_total_loglik(std::get<CshFit>(config.truth), data)).epsilon(1e-10));
}
