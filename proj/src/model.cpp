#include "msm/model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <set>

#include "msm/errors.hpp"

namespace msm {

ModelStructure::ModelStructure(std::vector<std::string> states,
                               std::vector<std::pair<std::string, std::string>> transitions, std::string death,
                               std::string discharge)
    : states_(std::move(states)), names_(std::move(transitions)), death_(std::move(death)),
      discharge_(std::move(discharge)) {
    outgoing_.assign(states_.size(), {});
    for (const auto& [from, to] : names_) {
        Transition t{find_state(from), find_state(to)};
        transitions_.push_back(t);
        if (t.from >= 0 && t.to >= 0)
            outgoing_[static_cast<std::size_t>(t.from)].push_back(static_cast<int>(transitions_.size()) - 1);
    }
}

int ModelStructure::find_state(std::string_view name) const {
    for (std::size_t i = 0; i < states_.size(); ++i)
        if (states_[i] == name) return static_cast<int>(i);
    return -1;
}

int ModelStructure::state_index(std::string_view name) const {
    const int s = find_state(name);
    if (s < 0) throw ConfigError("unknown state '" + std::string(name) + "'");
    return s;
}

bool ModelStructure::is_absorbing(int s) const { return outgoing(s).empty(); }

std::vector<int> ModelStructure::absorbing_states() const {
    std::vector<int> out;
    for (int s = 0; s < static_cast<int>(states_.size()); ++s)
        if (is_absorbing(s)) out.push_back(s);
    return out;
}

std::vector<int> ModelStructure::transient_states() const {
    std::vector<int> out;
    for (int s = 0; s < static_cast<int>(states_.size()); ++s)
        if (!is_absorbing(s)) out.push_back(s);
    return out;
}

int ModelStructure::transition_index(int r, int s) const {
    if (r < 0 || r >= static_cast<int>(states_.size())) return -1;
    for (int k : outgoing(r))
        if (transitions_[static_cast<std::size_t>(k)].to == s) return k;
    return -1;
}

std::string ModelStructure::transition_label(int k) const {
    const auto& [from, to] = names_.at(static_cast<std::size_t>(k));
    return from + "->" + to;
}

int ModelStructure::transition_by_label(std::string_view label) const {
    for (int k = 0; k < static_cast<int>(names_.size()); ++k)
        if (transition_label(k) == label) return k;
    throw ConfigError("unknown transition '" + std::string(label) + "'");
}

bool ModelStructure::eventually_certain(int k) const {
    return transitions_.at(static_cast<std::size_t>(k)).to == discharge_state();
}

std::vector<std::string> validate_structure(const ModelStructure& st) {
    std::vector<std::string> errors;
    if (st.states().empty()) errors.push_back("no states");
    if (st.transitions().empty()) errors.push_back("no transitions");
    std::set<std::string> seen;
    for (const auto& s : st.states())
        if (!seen.insert(s).second) errors.push_back("duplicate state '" + s + "'");

    std::set<std::pair<int, int>> pairs;
    for (std::size_t k = 0; k < st.transitions().size(); ++k) {
        const auto& [from_name, to_name] = st.transition_names()[k];
        const auto& t = st.transitions()[k];
        if (t.from < 0) errors.push_back("transition references unknown state '" + from_name + "'");
        if (t.to < 0) errors.push_back("transition references unknown state '" + to_name + "'");
        if (t.from < 0 || t.to < 0) continue;
        if (t.from == t.to) errors.push_back("self-transition on '" + from_name + "'");
        if (!pairs.insert({t.from, t.to}).second)
            errors.push_back("duplicate transition " + from_name + "->" + to_name);
        if (from_name == st.death_name() || from_name == st.discharge_name())
            errors.push_back("transition out of absorbing state '" + from_name + "'");
        if (t.to == st.initial_state()) errors.push_back("transition into the initial state '" + to_name + "'");
    }
    if (!errors.empty()) return errors;

    // Cycle detection by DFS colouring.
    const auto n = st.state_count();
    std::vector<int> colour(n, 0);
    bool cyclic = false;
    std::function<void(int)> visit = [&](int s) {
        colour[static_cast<std::size_t>(s)] = 1;
        for (int k : st.outgoing(s)) {
            const int to = st.transitions()[static_cast<std::size_t>(k)].to;
            if (colour[static_cast<std::size_t>(to)] == 1) cyclic = true;
            else if (colour[static_cast<std::size_t>(to)] == 0) visit(to);
        }
        colour[static_cast<std::size_t>(s)] = 2;
    };
    for (int s = 0; s < static_cast<int>(n); ++s)
        if (colour[static_cast<std::size_t>(s)] == 0) visit(s);
    if (cyclic) errors.push_back("structure contains a cycle");
    return errors;
}

void require_valid(const ModelStructure& structure) {
    const auto errors = validate_structure(structure);
    if (errors.empty()) return;
    std::string msg = "invalid model structure:";
    for (const auto& e : errors) msg += " " + e + ";";
    throw ConfigError(msg);
}

ModelStructure hospital_icu_structure() {
    return ModelStructure({"Hospital", "ICU", "Death", "Discharge"},
                          {{"Hospital", "ICU"},
                           {"Hospital", "Death"},
                           {"Hospital", "Discharge"},
                           {"ICU", "Death"},
                           {"ICU", "Discharge"}});
}

double Dataset::max_time() const {
    double m = 0.0;
    for (const auto& r : rows) m = std::max(m, r.time);
    return m;
}

double TransitionDataset::max_time() const {
    double m = 0.0;
    for (const auto& r : rows) m = std::max(m, r.time);
    return m;
}

namespace {

double parse_double(const std::string& s, const std::string& what) {
    double v = 0.0;
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (s.empty() || ec != std::errc() || ptr != end || !std::isfinite(v))
        throw DataError("invalid " + what + " '" + s + "'");
    return v;
}

Dataset finish_dataset(std::vector<Observation> rows, const std::vector<std::string>& covariate_names,
                       const CovariateCoding* coding) {
    Dataset data;
    data.covariate_names = covariate_names;
    if (coding) {
        data.coding = *coding;
    } else {
        std::vector<CovariateValues> values;
        values.reserve(rows.size());
        for (const auto& r : rows) values.push_back(r.covariates);
        data.coding = CovariateCoding::infer(covariate_names, values);
    }
    std::map<std::vector<double>, std::size_t> index;
    for (auto& r : rows) {
        auto design = data.coding.encode(r.covariates);
        auto [it, inserted] = index.emplace(design, data.profiles.size());
        if (inserted) data.profiles.push_back(std::move(design));
        r.profile = it->second;
    }
    data.rows = std::move(rows);
    return data;
}

}  // namespace

Dataset make_dataset(std::vector<Observation> rows, const std::vector<std::string>& covariate_names,
                     const CovariateCoding* coding) {
    return finish_dataset(std::move(rows), covariate_names, coding);
}

Dataset load_dataset(const std::vector<RawRow>& raw, const std::vector<std::string>& covariate_names,
                     const ModelStructure& structure, const DataOptions& options, const CovariateCoding* coding) {
    require_valid(structure);
    std::vector<Observation> rows;
    rows.reserve(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const auto& in = raw[i];
        const std::string where = " (row " + std::to_string(i + 1) + ", subject " + in.subject + ")";
        Observation obs;
        obs.subject = in.subject;
        obs.from = structure.find_state(in.from);
        if (obs.from < 0) throw DataError("unknown from-state '" + in.from + "'" + where);
        if (structure.is_absorbing(obs.from)) throw DataError("observation from absorbing state '" + in.from + "'" + where);

        const double status = parse_double(in.status, "status" + where);
        if (status == 1.0) obs.status = Status::Exact;
        else if (status == 2.0) obs.status = Status::Censored;
        else if (status == 3.0) obs.status = Status::PartialOutcome;
        else throw DataError("status must be 1, 2 or 3" + where);

        if (obs.status == Status::Exact) {
            if (in.to.empty()) throw DataError("status 1 requires a to-state" + where);
            obs.to = structure.find_state(in.to);
            if (obs.to < 0) throw DataError("unknown to-state '" + in.to + "'" + where);
            if (structure.transition_index(obs.from, obs.to) < 0)
                throw DataError("transition not permitted: " + in.from + "->" + in.to + where);
        } else if (!in.to.empty()) {
            throw DataError("status 2/3 rows must leave to-state empty" + where);
        }

        obs.time = parse_double(in.time, "time" + where);
        if (obs.time < 0.0) throw DataError("negative time" + where);
        if (obs.time == 0.0) obs.time = options.zero_time;
        if (!(obs.time > 0.0)) throw DataError("time must be positive after zero-time adjustment" + where);

        for (const auto& name : covariate_names) {
            auto it = in.covariates.find(name);
            if (it == in.covariates.end()) throw DataError("missing covariate '" + name + "'" + where);
            obs.covariates[name] = it->second;
        }
        rows.push_back(std::move(obs));
    }
    return finish_dataset(std::move(rows), covariate_names, coding);
}

ModelContext make_context(const Dataset& data, const ModelStructure& structure, const DataOptions& options) {
    return ModelContext{structure, data.coding, data.covariate_names, options, data.max_time()};
}

std::vector<int> partial_outcome_transitions(const ModelStructure& structure, int from, bool censor_all) {
    std::vector<int> out;
    const int death = structure.death_state();
    const int discharge = structure.discharge_state();
    for (int k : structure.outgoing(from)) {
        const int to = structure.transitions()[static_cast<std::size_t>(k)].to;
        if (to == death || (censor_all && to != discharge)) out.push_back(k);
    }
    return out;
}

std::vector<TransitionDataset> split_by_transition(const Dataset& data, const ModelStructure& structure,
                                                   const DataOptions& options) {
    std::vector<TransitionDataset> out(structure.transition_count());
    for (std::size_t k = 0; k < out.size(); ++k) out[k].transition = static_cast<int>(k);

    for (std::size_t i = 0; i < data.rows.size(); ++i) {
        const auto& obs = data.rows[i];
        auto add = [&](int k, bool event) {
            auto& td = out[static_cast<std::size_t>(k)];
            td.rows.push_back({obs.time, event, 1.0, obs.profile, i});
            if (event) ++td.events;
        };
        switch (obs.status) {
            case Status::Exact:
                for (int k : structure.outgoing(obs.from))
                    add(k, structure.transitions()[static_cast<std::size_t>(k)].to == obs.to);
                break;
            case Status::Censored:
                for (int k : structure.outgoing(obs.from)) add(k, false);
                break;
            case Status::PartialOutcome:
                for (int k : partial_outcome_transitions(structure, obs.from, options.status3_censors_all))
                    add(k, false);
                break;
        }
    }
    return out;
}

std::vector<std::vector<int>> enumerate_pathways(const ModelStructure& structure, int start, int target) {
    const auto n = static_cast<int>(structure.state_count());
    if (start < 0 || start >= n) throw ConfigError("pathway start state not in structure");
    if (target < 0 || target >= n) throw ConfigError("pathway target state not in structure");
    std::vector<std::vector<int>> paths;
    std::vector<int> current;
    std::vector<bool> on_path(static_cast<std::size_t>(n), false);
    std::function<void(int)> walk = [&](int s) {
        if (s == target) {
            paths.push_back(current);
            return;
        }
        on_path[static_cast<std::size_t>(s)] = true;
        for (int k : structure.outgoing(s)) {
            const int to = structure.transitions()[static_cast<std::size_t>(k)].to;
            if (on_path[static_cast<std::size_t>(to)]) continue;
            current.push_back(k);
            walk(to);
            current.pop_back();
        }
        on_path[static_cast<std::size_t>(s)] = false;
    };
    walk(start);
    return paths;
}

}  // namespace msm
