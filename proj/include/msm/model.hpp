#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "msm/covariates.hpp"

namespace msm {

struct Transition {
    int from = -1;
    int to = -1;
};

/// States, permitted transitions and the two designated outcome states.
///
/// The first state is the initial state. States named by `death` and
/// `discharge` must be absorbing; status-3 observations are interpreted
/// relative to them.
class ModelStructure {
public:
    ModelStructure() = default;
    ModelStructure(std::vector<std::string> states, std::vector<std::pair<std::string, std::string>> transitions,
                   std::string death = "Death", std::string discharge = "Discharge");

    const std::vector<std::string>& states() const { return states_; }
    const std::vector<std::pair<std::string, std::string>>& transition_names() const { return names_; }
    const std::vector<Transition>& transitions() const { return transitions_; }
    std::size_t state_count() const { return states_.size(); }
    std::size_t transition_count() const { return transitions_.size(); }

    /// -1 when unknown.
    int find_state(std::string_view name) const;
    /// Throws ConfigError when unknown.
    int state_index(std::string_view name) const;
    const std::string& state_name(int s) const { return states_.at(static_cast<std::size_t>(s)); }

    int initial_state() const { return 0; }
    bool is_absorbing(int s) const;
    std::vector<int> absorbing_states() const;
    std::vector<int> transient_states() const;

    /// Transition indices out of r (the set S_r, in declaration order).
    const std::vector<int>& outgoing(int r) const { return outgoing_.at(static_cast<std::size_t>(r)); }
    /// -1 when (r, s) is not permitted.
    int transition_index(int r, int s) const;
    std::string transition_label(int k) const;
    /// Parses "From->To".
    int transition_by_label(std::string_view label) const;

    const std::string& death_name() const { return death_; }
    const std::string& discharge_name() const { return discharge_; }
    int death_state() const { return find_state(death_); }
    int discharge_state() const { return find_state(discharge_); }

    /// Transitions into the discharge state; cure wrapping is rejected there.
    bool eventually_certain(int k) const;

    bool operator==(const ModelStructure& o) const {
        return states_ == o.states_ && names_ == o.names_ && death_ == o.death_ && discharge_ == o.discharge_;
    }

private:
    std::vector<std::string> states_;
    std::vector<std::pair<std::string, std::string>> names_;
    std::vector<Transition> transitions_;
    std::vector<std::vector<int>> outgoing_;
    std::string death_;
    std::string discharge_;
};

/// Empty when the structure is valid; otherwise one message per problem.
std::vector<std::string> validate_structure(const ModelStructure& structure);
/// Throws ConfigError listing every problem.
void require_valid(const ModelStructure& structure);

/// Hospital -> {ICU, Death, Discharge}, ICU -> {Death, Discharge}.
ModelStructure hospital_icu_structure();

enum class Status { Exact = 1, Censored = 2, PartialOutcome = 3 };

struct Observation {
    std::string subject;
    int from = -1;
    int to = -1;  // only for Status::Exact
    double time = 0.0;  // since entry to `from`
    Status status = Status::Censored;
    CovariateValues covariates;
    std::size_t profile = 0;  // index into Dataset::profiles
};

/// Validated observations plus the covariate design shared by all rows.
struct Dataset {
    std::vector<Observation> rows;
    CovariateCoding coding;
    std::vector<std::string> covariate_names;
    std::vector<std::vector<double>> profiles;  // distinct design rows

    double max_time() const;
    const std::vector<double>& design(const Observation& obs) const { return profiles[obs.profile]; }
};

/// One unparsed CSV row.
struct RawRow {
    std::string subject;
    std::string from;
    std::string to;
    std::string time;
    std::string status;
    CovariateValues covariates;
};

struct DataOptions {
    /// Event or censoring times recorded as 0 are moved to this value.
    double zero_time = 0.5;
    /// Status-3 rows additionally censor every non-discharge transition
    /// (not only the one into death). Off by default.
    bool status3_censors_all = false;
};

/// Validates rows against the structure. Uses `coding` when given, otherwise
/// infers one from the rows.
Dataset load_dataset(const std::vector<RawRow>& rows, const std::vector<std::string>& covariate_names,
                     const ModelStructure& structure, const DataOptions& options = {},
                     const CovariateCoding* coding = nullptr);

/// Builds a dataset directly from observations (used by the simulator and tests).
Dataset make_dataset(std::vector<Observation> rows, const std::vector<std::string>& covariate_names,
                     const CovariateCoding* coding = nullptr);

struct TransitionRow {
    double time = 0.0;
    bool event = false;
    double weight = 1.0;
    std::size_t profile = 0;
    std::size_t obs = 0;
};

/// Survival data for one (r, s) transition: events to s and censored times.
struct TransitionDataset {
    int transition = -1;
    std::vector<TransitionRow> rows;
    std::size_t events = 0;
    double max_time() const;
};

/// Partitions observations into per-transition datasets, indexed by transition.
std::vector<TransitionDataset> split_by_transition(const Dataset& data, const ModelStructure& structure,
                                                   const DataOptions& options = {});

/// Transitions whose survival term a status-3 observation from r contributes.
std::vector<int> partial_outcome_transitions(const ModelStructure& structure, int from, bool censor_all);

/// Everything a fitted model needs to know about the data it came from.
struct ModelContext {
    ModelStructure structure;
    CovariateCoding coding;
    std::vector<std::string> covariate_names;
    DataOptions options;
    double max_time = 0.0;  // largest observed time, drives the ODE horizon
};

ModelContext make_context(const Dataset& data, const ModelStructure& structure, const DataOptions& options);

/// All simple paths from start to target, as transition-index sequences.
std::vector<std::vector<int>> enumerate_pathways(const ModelStructure& structure, int start, int target);

}  // namespace msm
