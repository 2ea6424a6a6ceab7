#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "msm/fitted.hpp"
#include "msm/parallel.hpp"
#include "msm/random.hpp"

namespace msm {

/// Next-event law of one transient state for one covariate profile.
struct StateModel {
    std::vector<int> transitions;          // outgoing, declaration order
    std::vector<Distribution> dists;       // one per transition
    /// Mixture membership probabilities; empty for competing latent times.
    std::vector<double> membership;
};

/// A fitted model resolved at one covariate profile.
struct ProfileModel {
    const ModelStructure* structure = nullptr;
    std::vector<StateModel> states;  // indexed by state; empty for absorbing states
};

ProfileModel profile_model(const CshFit& fit, std::span<const double> design);
ProfileModel profile_model(const MixtureFit& fit, std::span<const double> design);
ProfileModel profile_model(const FittedModel& fit, std::span<const double> design);

inline constexpr std::size_t kMaxStages = 8;

/// One simulated history from the initial state.
struct Pathway {
    std::array<int, kMaxStages> transitions{};
    std::array<double, kMaxStages> times{};
    std::size_t stages = 0;
    int final_state = -1;
    /// False when the history stopped in a transient state because no event can happen.
    bool absorbed = false;
    double total_time = 0.0;
};

/// Draws the next (transition, time) from a state: the earliest latent time
/// for competing risks, or destination then time for a mixture.
NextEvent sample_next(const StateModel& state, Rng& rng);

Pathway simulate_pathway(const ProfileModel& model, int start, Rng& rng);

/// Histories are simulated in fixed chunks, each with its own stream, so the
/// result does not depend on the execution policy.
inline constexpr std::size_t kSimulationChunk = 1024;

std::vector<Pathway> simulate_histories(const ProfileModel& model, std::size_t count, std::uint64_t seed,
                                        Exec exec = Exec::Serial);

}  // namespace msm
