#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "msm/dist.hpp"
#include "msm/model.hpp"
#include "msm/random.hpp"

namespace testing_helpers {

inline msm::Distribution exponential(double rate) {
    return msm::Distribution(msm::BaseParams{msm::WeibullParams{1.0, 1.0 / rate}});
}

inline msm::Observation obs(int from, int to, double time, msm::Status status, std::string id = "S") {
    msm::Observation o;
    o.subject = std::move(id);
    o.from = from;
    o.to = to;
    o.time = time;
    o.status = status;
    return o;
}

/// Competing exponential latent times out of state 0 of `structure`, with
/// optional administrative censoring at `censor` (infinite for none).
inline msm::Dataset competing_exponential_data(const msm::ModelStructure& structure, const std::vector<double>& rates,
                                               std::size_t n, std::uint64_t seed, double censor = INFINITY) {
    auto rng = msm::make_stream(seed, "test-data");
    std::exponential_distribution<double> unit(1.0);
    std::vector<msm::Observation> rows;
    const auto& out = structure.outgoing(0);
    for (std::size_t i = 0; i < n; ++i) {
        double best = INFINITY;
        int k_best = -1;
        for (std::size_t j = 0; j < out.size(); ++j) {
            const double t = unit(rng) / rates[j];
            if (t < best) {
                best = t;
                k_best = out[j];
            }
        }
        const auto id = "S" + std::to_string(i);
        if (best > censor)
            rows.push_back(obs(0, -1, censor, msm::Status::Censored, id));
        else
            rows.push_back(obs(0, structure.transitions()[static_cast<std::size_t>(k_best)].to, best, msm::Status::Exact, id));
    }
    return msm::make_dataset(std::move(rows), {});
}

/// Hospital -> {Death, Discharge}.
inline msm::ModelStructure two_destination_structure() {
    return msm::ModelStructure({"Hospital", "Death", "Discharge"}, {{"Hospital", "Death"}, {"Hospital", "Discharge"}});
}

/// Hospital -> Discharge only.
inline msm::ModelStructure single_destination_structure() {
    return msm::ModelStructure({"Hospital", "Discharge"}, {{"Hospital", "Discharge"}});
}

inline msm::ModelStructure three_destination_structure() {
    return msm::ModelStructure({"Hospital", "ICU", "Death", "Discharge"},
                               {{"Hospital", "ICU"}, {"Hospital", "Death"}, {"Hospital", "Discharge"}});
}

}  // namespace testing_helpers
