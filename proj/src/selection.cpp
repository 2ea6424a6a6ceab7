#include "msm/selection.hpp"

#include <algorithm>
#include <cmath>

#include "msm/errors.hpp"

namespace msm {

void sort_by_aic(std::vector<CandidateResult>& table) {
    std::stable_sort(table.begin(), table.end(), [](const CandidateResult& a, const CandidateResult& b) {
        if (a.ok != b.ok) return a.ok;
        if (!a.ok) return a.candidate < b.candidate;
        if (a.aic != b.aic) return a.aic < b.aic;
        return a.candidate < b.candidate;
    });
}

namespace {

DistributionSpec make_spec(Family family, bool cure, std::initializer_list<std::string> params,
                           const std::vector<std::string>& covariates) {
    DistributionSpec spec{family, cure, {}};
    if (!covariates.empty())
        for (const auto& p : params) spec.links[p] = covariates;
    return spec;
}

std::string failure_log(const std::vector<CandidateResult>& table) {
    std::string out;
    for (const auto& c : table) out += "\n  " + c.label + ": " + c.error;
    return out;
}

}  // namespace

CshCandidateSet preset_csh_candidates(const ModelStructure& structure, const std::vector<std::string>& covariates) {
    CshCandidateSet set;
    for (std::size_t k = 0; k < structure.transition_count(); ++k) {
        std::vector<DistributionSpec> c{
            make_spec(Family::GenGamma, false, {"mu"}, covariates),
            make_spec(Family::Gamma, false, {"rate"}, covariates),
            make_spec(Family::Weibull, false, {"scale"}, covariates),
            make_spec(Family::LogNormal, false, {"meanlog"}, covariates),
            make_spec(Family::GenGamma, false, {"mu", "sigma"}, covariates),
            make_spec(Family::GenGamma, false, {"mu", "Q"}, covariates),
        };
        if (!structure.eventually_certain(static_cast<int>(k))) {
            c.push_back(make_spec(Family::GenGamma, true, {"mu", "p"}, covariates));
            c.push_back(make_spec(Family::LogNormal, true, {"meanlog", "p"}, covariates));
            c.push_back(make_spec(Family::GenGamma, true, {"p"}, covariates));
            c.push_back(make_spec(Family::LogNormal, true, {"p"}, covariates));
        }
        set.per_transition.push_back(std::move(c));
    }
    return set;
}

CshSelection select_csh(const Dataset& data, const ModelStructure& structure, const CshCandidateSet& candidates,
                        const DataOptions& options, const FitControls& controls, Exec exec) {
    require_valid(structure);
    const std::size_t K = structure.transition_count();
    if (candidates.per_transition.size() != K)
        throw ConfigError("candidate set has " + std::to_string(candidates.per_transition.size()) +
                          " transitions, structure has " + std::to_string(K));
    for (std::size_t k = 0; k < K; ++k) {
        if (candidates.per_transition[k].empty())
            throw ConfigError("no candidates for transition " + structure.transition_label(static_cast<int>(k)));
        for (const auto& spec : candidates.per_transition[k]) {
            if (spec.cure && structure.eventually_certain(static_cast<int>(k)))
                throw ConfigError("cure fraction not allowed on transition " + structure.transition_label(static_cast<int>(k)));
            LinkedDistribution(spec, data.coding);
        }
    }

    const auto split = split_by_transition(data, structure, options);
    struct Task {
        std::size_t k, c;
    };
    std::vector<Task> tasks;
    std::vector<std::vector<CandidateResult>> tables(K);
    std::vector<std::vector<std::vector<double>>> coefs(K);
    for (std::size_t k = 0; k < K; ++k) {
        const auto& cands = candidates.per_transition[k];
        tables[k].resize(cands.size());
        coefs[k].resize(cands.size());
        for (std::size_t c = 0; c < cands.size(); ++c) {
            tables[k][c].candidate = c;
            tables[k][c].label = describe(cands[c]);
            if (split[k].events == 0)
                tables[k][c].error = "no events";
            else
                tasks.push_back({k, c});
        }
    }

    FitControls quick = controls;
    quick.optim.compute_covariance = false;
    for_each_task(exec, tasks.size(), [&](std::size_t i) {
        const auto [k, c] = tasks[i];
        auto& row = tables[k][c];
        try {
            const LinkedDistribution model(candidates.per_transition[k][c], data.coding);
            const auto res = fit_survival(model, split[k].rows, data.profiles, quick);
            row.loglik = res.loglik;
            row.k = static_cast<int>(model.size());
            row.aic = aic(res.loglik, row.k);
            row.ok = std::isfinite(row.aic);
            if (!row.ok) row.error = "non-finite log-likelihood";
            coefs[k][c].assign(res.argmax.data(), res.argmax.data() + res.argmax.size());
        } catch (const std::exception& e) {
            row.error = e.what();
        }
    });

    CshSelection out;
    out.fit.context = make_context(data, structure, options);
    out.fit.transitions.resize(K);
    for (std::size_t k = 0; k < K; ++k) {
        sort_by_aic(tables[k]);
        if (split[k].events > 0 && !tables[k].front().ok)
            throw NumericalError("every candidate failed for " + structure.transition_label(static_cast<int>(k)) +
                                 ":" + failure_log(tables[k]));
    }

    for_each_task(exec, K, [&](std::size_t k) {
        const auto& best = tables[k].front();
        auto& t = out.fit.transitions[k];
        t.model = LinkedDistribution(candidates.per_transition[k][best.candidate], data.coding);
        t.events = split[k].events;
        if (split[k].events == 0) {
            t.zero_events = true;
            t.coef.assign(t.model.size(), 0.0);
            return;
        }
        const auto res = fit_survival(t.model, split[k].rows, data.profiles, controls, coefs[k][best.candidate]);
        t.coef.assign(res.argmax.data(), res.argmax.data() + res.argmax.size());
        t.covariance = res.covariance;
        t.covariance_repaired = res.covariance_repaired;
        t.loglik = res.loglik;
        t.iterations = res.iterations;
        t.trace = res.trace;
    });

    for (std::size_t k = 0; k < K; ++k) {
        const auto& t = out.fit.transitions[k];
        out.fit.loglik += t.loglik;
        out.fit.k += static_cast<int>(t.parameter_count());
        out.transitions.push_back({static_cast<int>(k), std::move(tables[k]), aic(t.loglik, static_cast<int>(t.parameter_count()))});
    }
    out.fit.aic = aic(out.fit.loglik, out.fit.k);
    return out;
}

MixtureCandidateSet preset_mixture_candidates(const ModelStructure& structure, const std::vector<std::string>& covariates) {
    MixtureCandidateSet set;
    auto uniform = [&](const DistributionSpec& spec) {
        MixtureModelSpec m;
        for (int r : structure.transient_states()) m.membership[structure.state_name(r)] = MembershipSpec{"", covariates};
        m.transitions.assign(structure.transition_count(), spec);
        return m;
    };
    for (auto f : {Family::GenGamma, Family::Gamma, Family::Weibull, Family::LogNormal})
        set.candidates.push_back(uniform(DistributionSpec{f, false, {}}));
    set.candidates.push_back(uniform(make_spec(Family::GenGamma, false, {"mu"}, covariates)));
    set.candidates.push_back(uniform(make_spec(Family::GenGamma, false, {"mu", "sigma"}, covariates)));
    return set;
}

std::string describe_submodel(const MixtureModelSpec& spec, const ModelStructure& structure, int from) {
    std::string out;
    for (int k : structure.outgoing(from)) {
        if (!out.empty()) out += "; ";
        out += describe(spec.transitions[static_cast<std::size_t>(k)]) + " -> " +
               structure.state_name(structure.transitions()[static_cast<std::size_t>(k)].to);
    }
    const auto it = spec.membership.find(structure.state_name(from));
    out += " | membership:";
    if (it == spec.membership.end() || it->second.covariates.empty()) {
        out += " constant";
    } else {
        for (std::size_t i = 0; i < it->second.covariates.size(); ++i) out += (i ? "," : " ") + it->second.covariates[i];
    }
    return out;
}

MixtureSelection select_mixture(const Dataset& data, const ModelStructure& structure,
                                const MixtureCandidateSet& candidates, const DataOptions& options,
                                const FitControls& controls, Exec exec) {
    require_valid(structure);
    if (candidates.candidates.empty()) throw ConfigError("empty mixture candidate set");
    for (const auto& c : candidates.candidates) validate_mixture_spec(c, structure, data.coding);

    const auto from_states = structure.transient_states();
    const std::size_t R = from_states.size(), C = candidates.candidates.size();
    std::vector<std::vector<CandidateResult>> tables(R, std::vector<CandidateResult>(C));
    std::vector<std::vector<MixtureSubmodelFit>> fits(R, std::vector<MixtureSubmodelFit>(C));
    FitControls quick = controls;
    quick.optim.compute_covariance = false;
    for_each_task(exec, R * C, [&](std::size_t i) {
        const std::size_t r = i / C, c = i % C;
        auto& row = tables[r][c];
        row.candidate = c;
        row.label = describe_submodel(candidates.candidates[c], structure, from_states[r]);
        try {
            fits[r][c] = fit_mixture_submodel(data, structure, from_states[r], candidates.candidates[c], quick);
            row.loglik = fits[r][c].loglik;
            row.k = static_cast<int>(fits[r][c].size());
            row.aic = aic(row.loglik, row.k);
            row.ok = std::isfinite(row.aic);
            if (!row.ok) row.error = "non-finite log-likelihood";
        } catch (const std::exception& e) {
            row.error = e.what();
        }
    });

    MixtureModelSpec combined;
    combined.transitions.resize(structure.transition_count());
    std::vector<MixtureSubmodelFit> selected(R);
    for (std::size_t r = 0; r < R; ++r) {
        sort_by_aic(tables[r]);
        const auto& name = structure.state_name(from_states[r]);
        if (!tables[r].front().ok) throw NumericalError("every mixture candidate failed for " + name + ":" + failure_log(tables[r]));
        const auto& best = candidates.candidates[tables[r].front().candidate];
        if (const auto it = best.membership.find(name); it != best.membership.end()) combined.membership[name] = it->second;
        for (int k : structure.outgoing(from_states[r]))
            combined.transitions[static_cast<std::size_t>(k)] = best.transitions[static_cast<std::size_t>(k)];
        selected[r] = std::move(fits[r][tables[r].front().candidate]);
    }
    if (controls.optim.compute_covariance)
        for_each_task(exec, R, [&](std::size_t r) { mixture_submodel_covariance(selected[r], data, structure, controls); });

    MixtureSelection out;
    for (std::size_t r = 0; r < R; ++r)
        out.submodels.push_back({from_states[r], std::move(tables[r]),
                                 aic(selected[r].loglik, static_cast<int>(selected[r].size()))});
    out.fit = assemble_mixture(make_context(data, structure, options), combined, std::move(selected));
    return out;
}

}  // namespace msm
