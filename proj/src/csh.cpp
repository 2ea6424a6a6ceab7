#include "msm/csh.hpp"

#include <cmath>
#include <iostream>

#include "msm/errors.hpp"

namespace msm {

void validate_csh_spec(const CshModelSpec& spec, const ModelStructure& structure, const CovariateCoding& coding) {
    if (spec.transitions.size() != structure.transition_count())
        throw ConfigError("CSH spec has " + std::to_string(spec.transitions.size()) + " transitions, structure has " +
                          std::to_string(structure.transition_count()));
    for (std::size_t k = 0; k < spec.transitions.size(); ++k) {
        if (spec.transitions[k].cure && structure.eventually_certain(static_cast<int>(k)))
            throw ConfigError("cure fraction not allowed on transition " +
                              structure.transition_label(static_cast<int>(k)));
        LinkedDistribution(spec.transitions[k], coding);  // throws on unknown covariates
    }
}

Distribution CshTransitionFit::resolve(std::span<const double> design) const {
    if (zero_events) return Distribution::never();
    return model.resolve(coef, design);
}

Eigen::VectorXd CshFit::coefficients() const {
    std::vector<double> all;
    for (const auto& t : transitions)
        if (!t.zero_events) all.insert(all.end(), t.coef.begin(), t.coef.end());
    return Eigen::Map<Eigen::VectorXd>(all.data(), static_cast<Eigen::Index>(all.size()));
}

Eigen::MatrixXd CshFit::covariance() const {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(k, k);
    Eigen::Index at = 0;
    for (const auto& t : transitions) {
        if (t.zero_events) continue;
        const auto n = static_cast<Eigen::Index>(t.coef.size());
        if (t.covariance.rows() == n) out.block(at, at, n, n) = t.covariance;
        at += n;
    }
    return out;
}

CshFit CshFit::with_coefficients(const Eigen::VectorXd& coef) const {
    if (coef.size() != k) throw ConfigError("coefficient vector has wrong length");
    CshFit out = *this;
    Eigen::Index at = 0;
    for (auto& t : out.transitions) {
        if (t.zero_events) continue;
        for (auto& c : t.coef) c = coef[at++];
    }
    return out;
}

std::vector<Distribution> CshFit::resolve(std::span<const double> design) const {
    std::vector<Distribution> out;
    out.reserve(transitions.size());
    for (const auto& t : transitions) out.push_back(t.resolve(design));
    return out;
}

double csh_obs_loglik(const Observation& obs, const ModelStructure& structure,
                      std::span<const Distribution> by_transition, bool status3_censors_all) {
    double ll = 0.0;
    switch (obs.status) {
        case Status::Exact:
            for (int k : structure.outgoing(obs.from)) {
                const auto& d = by_transition[static_cast<std::size_t>(k)];
                ll += structure.transitions()[static_cast<std::size_t>(k)].to == obs.to ? d.logpdf(obs.time)
                                                                                        : d.log_survival(obs.time);
            }
            break;
        case Status::Censored:
            for (int k : structure.outgoing(obs.from)) ll += by_transition[static_cast<std::size_t>(k)].log_survival(obs.time);
            break;
        case Status::PartialOutcome:
            for (int k : partial_outcome_transitions(structure, obs.from, status3_censors_all))
                ll += by_transition[static_cast<std::size_t>(k)].log_survival(obs.time);
            break;
    }
    if (!std::isfinite(ll)) throw LikelihoodDomainError(obs.subject, "CSH contribution " + std::to_string(ll));
    return ll;
}

double csh_total_loglik(const CshFit& fit, const Dataset& data) {
    std::vector<std::vector<Distribution>> dists;
    for (const auto& z : data.profiles) dists.push_back(fit.resolve(z));
    double total = 0.0;
    for (const auto& obs : data.rows)
        total += csh_obs_loglik(obs, fit.context.structure, dists[obs.profile], fit.context.options.status3_censors_all);
    return total;
}

namespace {

void finish(CshFit& fit) {
    fit.loglik = 0.0;
    fit.k = 0;
    for (const auto& t : fit.transitions) {
        fit.loglik += t.loglik;
        fit.k += static_cast<int>(t.parameter_count());
    }
    fit.aic = aic(fit.loglik, fit.k);
}

}  // namespace

CshFit fit_csh(const Dataset& data, const ModelStructure& structure, const CshModelSpec& spec,
               const DataOptions& options, const FitControls& controls, Exec exec) {
    require_valid(structure);
    validate_csh_spec(spec, structure, data.coding);
    const auto split = split_by_transition(data, structure, options);

    CshFit fit;
    fit.context = make_context(data, structure, options);
    fit.transitions.resize(structure.transition_count());
    for_each_index(exec, split.size(), [&](std::size_t k) {
        auto& out = fit.transitions[k];
        const auto& td = split[k];
        out.model = LinkedDistribution(spec.transitions[k], data.coding);
        out.events = td.events;
        if (td.events == 0) {
            out.zero_events = true;
            out.coef.assign(out.model.size(), 0.0);
            return;
        }
        const auto res = fit_survival(out.model, td.rows, data.profiles, controls);
        out.coef.assign(res.argmax.data(), res.argmax.data() + res.argmax.size());
        out.covariance = res.covariance;
        out.covariance_repaired = res.covariance_repaired;
        out.loglik = res.loglik;
        out.iterations = res.iterations;
        out.trace = res.trace;
    });
    for (std::size_t k = 0; k < split.size(); ++k)
        if (fit.transitions[k].zero_events)
            std::cerr << "warning: no events on " << structure.transition_label(static_cast<int>(k))
                      << "; intensity pinned to zero\n";
    finish(fit);
    return fit;
}

CshFit make_csh_model(const ModelContext& context, const CshModelSpec& spec,
                      const std::vector<std::vector<double>>& coefficients) {
    validate_csh_spec(spec, context.structure, context.coding);
    if (coefficients.size() != spec.transitions.size()) throw ConfigError("one coefficient vector per transition required");
    CshFit fit;
    fit.context = context;
    for (std::size_t k = 0; k < spec.transitions.size(); ++k) {
        CshTransitionFit t;
        t.model = LinkedDistribution(spec.transitions[k], context.coding);
        if (coefficients[k].size() != t.model.size())
            throw ConfigError("transition " + context.structure.transition_label(static_cast<int>(k)) + " needs " +
                              std::to_string(t.model.size()) + " coefficients");
        t.coef = coefficients[k];
        t.covariance = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(t.coef.size()),
                                             static_cast<Eigen::Index>(t.coef.size()));
        fit.transitions.push_back(std::move(t));
    }
    finish(fit);
    return fit;
}

NextEvent csh_next_event_sample(std::span<const Distribution> competitors, Rng& rng) {
    NextEvent out;
    for (std::size_t i = 0; i < competitors.size(); ++i) {
        const double t = competitors[i].sample(rng);
        if (t < out.time) {
            out.time = t;
            out.index = static_cast<int>(i);
        }
    }
    return out;
}

}  // namespace msm
