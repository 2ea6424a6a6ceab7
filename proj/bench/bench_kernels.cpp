// Serial vs parallel kernels. The argument selects the policy: 0 serial, 1 parallel.
#include <numeric>

#include <benchmark/benchmark.h>

#include "msm/quantities.hpp"
#include "msm/simulate.hpp"
#include "msm/survfit.hpp"
#include "msm/synthdata.hpp"

using namespace msm;

namespace {

Exec policy(const benchmark::State& state) { return state.range(0) == 0 ? Exec::Serial : Exec::Parallel; }

struct Fixture {
    SynthConfig config = default_synth_config(20000, 1);
    Dataset data;
    std::vector<TransitionDataset> split;

    Fixture() {
        const auto& ctx = context_of(config.truth);
        data = load_dataset(generate(config).rows, ctx.covariate_names, ctx.structure, ctx.options, &ctx.coding);
        split = split_by_transition(data, ctx.structure, ctx.options);
    }
};

const Fixture& fixture() {
    static const Fixture f;
    return f;
}

std::vector<double> design(const FittedModel& m) {
    return context_of(m).coding.encode({{"age_group", "75-84"}, {"gender", "M"}});
}

void BM_SurvivalLoglik(benchmark::State& state) {
    const auto& f = fixture();
    const auto& t = std::get<CshFit>(f.config.truth).transitions[2];
    for (auto _ : state)
        benchmark::DoNotOptimize(survival_loglik(t.model, t.coef, f.split[2].rows, f.data.profiles, policy(state)));
    state.SetItemsProcessed(state.iterations() * static_cast<long>(f.split[2].rows.size()));
}

void BM_MixtureLoglik(benchmark::State& state) {
    const auto& f = fixture();
    const auto truth = default_mixture_truth();
    const auto& sub = truth.submodel(0);
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < f.data.rows.size(); ++i)
        if (f.data.rows[i].from == 0) rows.push_back(i);
    for (auto _ : state)
        benchmark::DoNotOptimize(
            mixture_submodel_loglik(sub, sub.coef, f.data, rows, truth.context.structure, policy(state)));
    state.SetItemsProcessed(state.iterations() * static_cast<long>(rows.size()));
}

void BM_SimulateHistories(benchmark::State& state) {
    const FittedModel m = default_csh_truth();
    const auto pm = profile_model(m, design(m));
    for (auto _ : state) benchmark::DoNotOptimize(simulate_histories(pm, 100000, 1, policy(state)));
    state.SetItemsProcessed(state.iterations() * 100000);
}

void BM_Generate(benchmark::State& state) {
    const auto config = default_synth_config(20000, 1);
    for (auto _ : state) benchmark::DoNotOptimize(generate(config, policy(state)));
    state.SetItemsProcessed(state.iterations() * 20000);
}

void BM_Quantities(benchmark::State& state) {
    const FittedModel m = default_csh_truth();
    QuantityOptions q;
    q.simulations = 20000;
    q.seed = 1;
    q.exec = policy(state);
    q.warn = false;
    const auto d = design(m);
    for (auto _ : state) benchmark::DoNotOptimize(compute_quantities(m, d, q));
}

}  // namespace

BENCHMARK(BM_SurvivalLoglik)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MixtureLoglik)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SimulateHistories)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Generate)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Quantities)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
