#include "msm/simulate.hpp"

#include "msm/errors.hpp"

namespace msm {

ProfileModel profile_model(const CshFit& fit, std::span<const double> design) {
    const auto& st = fit.context.structure;
    ProfileModel out;
    out.structure = &st;
    out.states.resize(st.state_count());
    const auto dists = fit.resolve(design);
    for (int r : st.transient_states()) {
        auto& s = out.states[static_cast<std::size_t>(r)];
        s.transitions = st.outgoing(r);
        for (int k : s.transitions) s.dists.push_back(dists[static_cast<std::size_t>(k)]);
    }
    return out;
}

ProfileModel profile_model(const MixtureFit& fit, std::span<const double> design) {
    const auto& st = fit.context.structure;
    ProfileModel out;
    out.structure = &st;
    out.states.resize(st.state_count());
    for (const auto& sub : fit.submodels) {
        auto& s = out.states[static_cast<std::size_t>(sub.from())];
        s.transitions = sub.membership.transitions();
        s.dists = sub.resolve(design);
        s.membership = sub.probs(design);
    }
    return out;
}

ProfileModel profile_model(const FittedModel& fit, std::span<const double> design) {
    return std::visit([&](const auto& m) { return profile_model(m, design); }, fit);
}

NextEvent sample_next(const StateModel& state, Rng& rng) {
    if (state.membership.empty()) return csh_next_event_sample(state.dists, rng);
    const double u = uniform_open(rng);
    double cum = 0.0;
    std::size_t j = 0;
    for (; j + 1 < state.membership.size(); ++j) {
        cum += state.membership[j];
        if (u < cum) break;
    }
    return {static_cast<int>(j), state.dists[j].sample(rng)};
}

Pathway simulate_pathway(const ProfileModel& model, int start, Rng& rng) {
    Pathway p;
    int state = start;
    while (true) {
        const auto& sm = model.states[static_cast<std::size_t>(state)];
        if (sm.transitions.empty()) {
            p.absorbed = true;
            break;
        }
        const auto next = sample_next(sm, rng);
        if (next.index < 0 || next.time == kNever) break;
        if (p.stages == kMaxStages) throw NumericalError("pathway longer than the state count");
        const int k = sm.transitions[static_cast<std::size_t>(next.index)];
        p.transitions[p.stages] = k;
        p.times[p.stages] = next.time;
        ++p.stages;
        p.total_time += next.time;
        state = model.structure->transitions()[static_cast<std::size_t>(k)].to;
    }
    p.final_state = state;
    return p;
}

std::vector<Pathway> simulate_histories(const ProfileModel& model, std::size_t count, std::uint64_t seed, Exec exec) {
    std::vector<Pathway> out(count);
    const std::size_t chunks = (count + kSimulationChunk - 1) / kSimulationChunk;
    const int start = model.structure->initial_state();
    for_each_index(exec, chunks, [&](std::size_t c) {
        Rng rng = make_stream(seed, "histories", c);
        const std::size_t end = std::min(count, (c + 1) * kSimulationChunk);
        for (std::size_t i = c * kSimulationChunk; i < end; ++i) out[i] = simulate_pathway(model, start, rng);
    });
    return out;
}

}  // namespace msm
