#include "msm/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>

#include "msm/errors.hpp"

namespace msm {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_sum_exp(std::span<const double> a) {
    double m = kNegInf;
    for (double v : a) m = std::max(m, v);
    if (m == kNegInf) return kNegInf;
    double s = 0.0;
    for (double v : a) s += std::exp(v - m);
    return m + std::log(s);
}

int position_of(std::span<const int> transitions, const ModelStructure& structure, int to) {
    for (std::size_t j = 0; j < transitions.size(); ++j)
        if (structure.transitions()[static_cast<std::size_t>(transitions[j])].to == to) return static_cast<int>(j);
    return -1;
}

// Log of pi_j times the likelihood factor of destination j; -inf where excluded.
void log_masses(const Observation& obs, const ModelStructure& structure, std::span<const int> transitions,
                std::span<const double> log_pi, std::span<const Distribution> dists, std::span<double> out) {
    const std::size_t n = transitions.size();
    switch (obs.status) {
        case Status::Exact: {
            std::fill(out.begin(), out.end(), kNegInf);
            const int j = position_of(transitions, structure, obs.to);
            if (j < 0) throw DataError("observed destination not in submodel for subject " + obs.subject);
            out[static_cast<std::size_t>(j)] = log_pi[static_cast<std::size_t>(j)] + dists[static_cast<std::size_t>(j)].logpdf(obs.time);
            break;
        }
        case Status::Censored:
            for (std::size_t j = 0; j < n; ++j) out[j] = log_pi[j] + dists[j].log_survival(obs.time);
            break;
        case Status::PartialOutcome: {
            const int discharge = structure.discharge_state();
            for (std::size_t j = 0; j < n; ++j) {
                const bool to_discharge = structure.transitions()[static_cast<std::size_t>(transitions[j])].to == discharge;
                out[j] = to_discharge ? log_pi[j] : log_pi[j] + dists[j].log_survival(obs.time);
            }
            break;
        }
    }
}

std::vector<double> logs(std::span<const double> pi) {
    std::vector<double> out(pi.size());
    for (std::size_t j = 0; j < pi.size(); ++j) out[j] = std::log(pi[j]);
    return out;
}

}  // namespace

void validate_mixture_spec(const MixtureModelSpec& spec, const ModelStructure& structure,
                           const CovariateCoding& coding) {
    if (spec.transitions.size() != structure.transition_count())
        throw ConfigError("mixture spec has " + std::to_string(spec.transitions.size()) +
                          " transitions, structure has " + std::to_string(structure.transition_count()));
    for (std::size_t k = 0; k < spec.transitions.size(); ++k) {
        if (spec.transitions[k].cure)
            throw ConfigError("cure fraction not allowed in mixture time model for " +
                              structure.transition_label(static_cast<int>(k)));
        LinkedDistribution(spec.transitions[k], coding);
    }
    for (const auto& [from, m] : spec.membership) {
        const int r = structure.find_state(from);
        if (r < 0 || structure.is_absorbing(r)) throw ConfigError("membership spec for non-transient state '" + from + "'");
        MembershipModel(structure, r, m, coding);
    }
}

// --- membership ---------------------------------------------------------------

MembershipModel::MembershipModel(const ModelStructure& structure, int from, const MembershipSpec& spec,
                                 const CovariateCoding& coding)
    : from_(from), transitions_(structure.outgoing(from)), spec_(spec) {
    if (transitions_.empty()) throw ConfigError("membership model for absorbing state");
    auto dest_name = [&](std::size_t j) {
        return structure.state_name(structure.transitions()[static_cast<std::size_t>(transitions_[j])].to);
    };
    if (!spec.reference.empty()) {
        bool found = false;
        for (std::size_t j = 0; j < transitions_.size(); ++j)
            if (dest_name(j) == spec.reference) {
                reference_ = j;
                found = true;
            }
        if (!found)
            throw ConfigError("reference '" + spec.reference + "' is not a destination of '" + structure.state_name(from) + "'");
    } else {
        const int pos = position_of(transitions_, structure, structure.discharge_state());
        reference_ = pos >= 0 ? static_cast<std::size_t>(pos) : 0;
    }
    std::vector<std::string> term_names;
    for (const auto& c : spec.covariates)
        for (auto t : coding.terms_for(c)) {
            terms_.push_back(t);
            term_names.push_back(coding.term_names()[t]);
        }
    for (std::size_t j = 0; j < transitions_.size(); ++j) {
        if (j == reference_) continue;
        names_.push_back(dest_name(j));
        for (const auto& t : term_names) names_.push_back(dest_name(j) + ":" + t);
    }
}

std::vector<double> MembershipModel::logits(std::span<const double> coef, std::span<const double> design) const {
    if (coef.size() != names_.size()) throw ConfigError("membership coefficient vector has wrong length");
    const std::size_t q = 1 + terms_.size();
    std::vector<double> eta(transitions_.size(), 0.0);
    std::size_t b = 0;
    for (std::size_t j = 0; j < transitions_.size(); ++j) {
        if (j == reference_) continue;
        double e = coef[b * q];
        for (std::size_t t = 0; t < terms_.size(); ++t) e += coef[b * q + 1 + t] * design[terms_[t]];
        eta[j] = e;
        ++b;
    }
    return eta;
}

std::vector<double> MembershipModel::log_probs(std::span<const double> coef, std::span<const double> design) const {
    auto eta = logits(coef, design);
    const double lse = log_sum_exp(eta);
    for (auto& e : eta) e -= lse;
    return eta;
}

std::vector<double> MembershipModel::probs(std::span<const double> coef, std::span<const double> design) const {
    auto lp = log_probs(coef, design);
    for (auto& v : lp) v = std::exp(v);
    return lp;
}

std::vector<double> fit_membership(const MembershipModel& model, const std::vector<std::vector<double>>& profiles,
                                   const std::vector<std::vector<double>>& weights, double cap, bool& capped,
                                   std::span<const double> start) {
    const std::size_t d = model.destinations();
    const std::size_t q = 1 + model.terms().size();
    const auto k = static_cast<Eigen::Index>(model.size());
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(k);
    if (!start.empty()) theta = Eigen::Map<const Eigen::VectorXd>(start.data(), k);
    capped = false;
    if (k == 0) return {};

    std::vector<Eigen::VectorXd> x(profiles.size(), Eigen::VectorXd(static_cast<Eigen::Index>(q)));
    for (std::size_t p = 0; p < profiles.size(); ++p) {
        x[p][0] = 1.0;
        for (std::size_t t = 0; t < model.terms().size(); ++t)
            x[p][static_cast<Eigen::Index>(t + 1)] = profiles[p][model.terms()[t]];
    }
    auto span_of = [](const Eigen::VectorXd& v) { return std::span<const double>(v.data(), static_cast<std::size_t>(v.size())); };
    auto objective = [&](const Eigen::VectorXd& th) {
        double ll = 0.0;
        for (std::size_t p = 0; p < profiles.size(); ++p) {
            const auto lp = model.log_probs(span_of(th), profiles[p]);
            for (std::size_t j = 0; j < d; ++j)
                if (weights[p][j] > 0.0) ll += weights[p][j] * lp[j];
        }
        return ll;
    };
    // Non-reference destination j -> block index.
    std::vector<int> block(d, -1);
    for (std::size_t j = 0, b = 0; j < d; ++j)
        if (j != model.reference()) block[j] = static_cast<int>(b++);

    double total = 0.0;
    for (const auto& w : weights)
        for (double v : w) total += v;

    double f = objective(theta);
    for (int it = 0; it < 200; ++it) {
        Eigen::VectorXd g = Eigen::VectorXd::Zero(k);
        Eigen::MatrixXd H = Eigen::MatrixXd::Zero(k, k);  // negative Hessian
        for (std::size_t p = 0; p < profiles.size(); ++p) {
            double n = 0.0;
            for (double v : weights[p]) n += v;
            if (n == 0.0) continue;
            const auto pi = model.probs(span_of(theta), profiles[p]);
            const Eigen::MatrixXd xx = x[p] * x[p].transpose();
            for (std::size_t j = 0; j < d; ++j) {
                if (block[j] < 0) continue;
                const auto bj = static_cast<Eigen::Index>(block[j]) * static_cast<Eigen::Index>(q);
                g.segment(bj, static_cast<Eigen::Index>(q)) += (weights[p][j] - n * pi[j]) * x[p];
                for (std::size_t l = 0; l < d; ++l) {
                    if (block[l] < 0) continue;
                    const auto bl = static_cast<Eigen::Index>(block[l]) * static_cast<Eigen::Index>(q);
                    const double c = n * pi[j] * ((j == l ? 1.0 : 0.0) - pi[l]);
                    H.block(bj, bl, static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(q)) += c * xx;
                }
            }
        }
        if (g.cwiseAbs().maxCoeff() <= 1e-10 * std::max(1.0, total)) break;
        H.diagonal().array() += 1e-10 * std::max(1.0, H.diagonal().cwiseAbs().maxCoeff());
        Eigen::VectorXd step = H.ldlt().solve(g);
        if (!step.allFinite()) step = g;
        double alpha = 1.0;
        bool improved = false;
        for (int ls = 0; ls < 50; ++ls) {
            Eigen::VectorXd trial = (theta + alpha * step).cwiseMax(-cap).cwiseMin(cap);
            const double ft = objective(trial);
            if (ft >= f) {
                improved = (trial - theta).cwiseAbs().maxCoeff() > 0.0;
                theta = trial;
                f = ft;
                break;
            }
            alpha *= 0.5;
        }
        if (!improved) break;
    }
    for (Eigen::Index i = 0; i < k; ++i)
        if (std::abs(theta[i]) >= cap) capped = true;
    return std::vector<double>(theta.data(), theta.data() + k);
}

// --- submodel -----------------------------------------------------------------

std::size_t MixtureSubmodelFit::time_offset(std::size_t j) const {
    std::size_t at = membership.size();
    for (std::size_t i = 0; i < j; ++i) at += times[i].size();
    return at;
}

std::vector<double> MixtureSubmodelFit::probs(std::span<const double> design) const {
    return membership.probs(membership_coef(), design);
}

std::vector<Distribution> MixtureSubmodelFit::resolve(std::span<const double> design) const {
    std::vector<Distribution> out;
    out.reserve(times.size());
    for (std::size_t j = 0; j < times.size(); ++j) out.push_back(times[j].resolve(time_coef(j), design));
    return out;
}

std::vector<std::string> MixtureSubmodelFit::coefficient_names() const {
    std::vector<std::string> out;
    for (const auto& n : membership.coefficient_names()) out.push_back("pi:" + n);
    for (std::size_t j = 0; j < times.size(); ++j)
        for (const auto& n : times[j].coefficient_names()) out.push_back(std::to_string(j) + ":" + n);
    return out;
}

const MixtureSubmodelFit& MixtureFit::submodel(int from) const {
    for (const auto& s : submodels)
        if (s.from() == from) return s;
    throw ConfigError("no mixture submodel for state " + std::to_string(from));
}

Eigen::VectorXd MixtureFit::coefficients() const {
    std::vector<double> all;
    for (const auto& s : submodels) all.insert(all.end(), s.coef.begin(), s.coef.end());
    return Eigen::Map<Eigen::VectorXd>(all.data(), static_cast<Eigen::Index>(all.size()));
}

Eigen::MatrixXd MixtureFit::covariance() const {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(k, k);
    Eigen::Index at = 0;
    for (const auto& s : submodels) {
        const auto n = static_cast<Eigen::Index>(s.coef.size());
        if (s.covariance.rows() == n) out.block(at, at, n, n) = s.covariance;
        at += n;
    }
    return out;
}

MixtureFit MixtureFit::with_coefficients(const Eigen::VectorXd& coef) const {
    if (coef.size() != k) throw ConfigError("coefficient vector has wrong length");
    MixtureFit out = *this;
    Eigen::Index at = 0;
    for (auto& s : out.submodels)
        for (auto& c : s.coef) c = coef[at++];
    return out;
}

double mix_obs_loglik(const Observation& obs, const ModelStructure& structure, std::span<const int> transitions,
                      std::span<const double> pi, std::span<const Distribution> dists) {
    const auto lp = logs(pi);
    std::vector<double> a(transitions.size());
    log_masses(obs, structure, transitions, lp, dists, a);
    const double ll = log_sum_exp(a);
    if (!std::isfinite(ll)) throw LikelihoodDomainError(obs.subject, "mixture contribution " + std::to_string(ll));
    return ll;
}

std::vector<double> em_e_step(const Observation& obs, const ModelStructure& structure, std::span<const int> transitions,
                              std::span<const double> pi, std::span<const Distribution> dists) {
    const auto lp = logs(pi);
    std::vector<double> a(transitions.size());
    log_masses(obs, structure, transitions, lp, dists, a);
    const double lse = log_sum_exp(a);
    if (!std::isfinite(lse)) throw NumericalError("membership weights underflow for subject " + obs.subject);
    for (auto& v : a) v = std::exp(v - lse);
    return a;
}

std::vector<double> membership_probs(const MixtureFit& fit, int from, std::span<const double> design) {
    return fit.submodel(from).probs(design);
}

namespace {

// Per-row log-likelihood terms; non-finite terms are returned as they are.
void submodel_terms(const MixtureSubmodelFit& sub, std::span<const double> coef, const Dataset& data,
                    std::span<const std::size_t> rows, const ModelStructure& structure, Exec exec,
                    std::vector<double>& terms, std::vector<std::vector<double>>* weights) {
    MixtureSubmodelFit local;
    local.membership = sub.membership;
    local.times = sub.times;
    local.coef.assign(coef.begin(), coef.end());
    std::vector<std::vector<double>> log_pi;
    std::vector<std::vector<Distribution>> dists;
    for (const auto& z : data.profiles) {
        log_pi.push_back(local.membership.log_probs(local.membership_coef(), z));
        dists.push_back(local.resolve(z));
    }
    const auto& tr = sub.membership.transitions();
    terms.assign(rows.size(), 0.0);
    if (weights) weights->assign(rows.size(), std::vector<double>(tr.size(), 0.0));
    for_each_index(exec, rows.size(), [&](std::size_t i) {
        const auto& obs = data.rows[rows[i]];
        std::vector<double> a(tr.size());
        log_masses(obs, structure, tr, log_pi[obs.profile], dists[obs.profile], a);
        const double lse = log_sum_exp(a);
        terms[i] = lse;
        if (weights && std::isfinite(lse))
            for (std::size_t j = 0; j < a.size(); ++j) (*weights)[i][j] = std::exp(a[j] - lse);
    });
}

double sum(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
}

}  // namespace

double mixture_submodel_loglik(const MixtureSubmodelFit& sub, std::span<const double> coef, const Dataset& data,
                               std::span<const std::size_t> rows, const ModelStructure& structure, Exec exec) {
    std::vector<double> terms;
    submodel_terms(sub, coef, data, rows, structure, exec, terms, nullptr);
    return sum(terms);
}

double mixture_total_loglik(const MixtureFit& fit, const Dataset& data) {
    double total = 0.0;
    for (const auto& sub : fit.submodels) {
        std::vector<std::vector<double>> pi;
        std::vector<std::vector<Distribution>> dists;
        for (const auto& z : data.profiles) {
            pi.push_back(sub.probs(z));
            dists.push_back(sub.resolve(z));
        }
        for (const auto& obs : data.rows)
            if (obs.from == sub.from())
                total += mix_obs_loglik(obs, fit.context.structure, sub.membership.transitions(), pi[obs.profile],
                                        dists[obs.profile]);
    }
    return total;
}

MixtureSubmodelFit mixture_submodel(const ModelStructure& structure, int r, const MixtureModelSpec& spec,
                                  const CovariateCoding& coding) {
    MixtureSubmodelFit sub;
    const auto it = spec.membership.find(structure.state_name(r));
    sub.membership = MembershipModel(structure, r, it == spec.membership.end() ? MembershipSpec{} : it->second, coding);
    for (int k : sub.membership.transitions())
        sub.times.emplace_back(spec.transitions[static_cast<std::size_t>(k)], coding);
    return sub;
}

namespace {

struct DestRows {
    std::vector<TransitionRow> rows;
    std::vector<std::pair<std::size_t, std::size_t>> censored;  // (index in rows, index in submodel rows)
};

void submodel_covariance(MixtureSubmodelFit& sub, const Dataset& data, std::span<const std::size_t> rows,
                         const ModelStructure& structure, const FitControls& controls, Exec exec) {
    auto f = [&](const Eigen::VectorXd& x) {
        return mixture_submodel_loglik(sub, std::span<const double>(x.data(), static_cast<std::size_t>(x.size())), data,
                                       rows, structure, exec);
    };
    const Eigen::VectorXd x = Eigen::Map<Eigen::VectorXd>(sub.coef.data(), static_cast<Eigen::Index>(sub.coef.size()));
    auto cov = covariance_from_information(-numeric_hessian(f, x, controls.optim.hessian_step));
    sub.covariance = std::move(cov.covariance);
    sub.covariance_repaired = cov.repaired;
}

void fit_submodel(MixtureSubmodelFit& sub, const Dataset& data, const ModelStructure& structure,
                  const FitControls& controls, Exec exec) {
    const int r = sub.from();
    const auto& tr = sub.membership.transitions();
    const std::size_t d = tr.size();
    const int discharge = structure.discharge_state();

    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < data.rows.size(); ++i)
        if (data.rows[i].from == r) rows.push_back(i);
    if (rows.empty()) throw NumericalError("no observations from state " + structure.state_name(r));

    std::vector<DestRows> dest(d);
    std::vector<std::size_t> event_counts(d, 0);
    for (std::size_t q = 0; q < rows.size(); ++q) {
        const auto& obs = data.rows[rows[q]];
        for (std::size_t j = 0; j < d; ++j) {
            const int to = structure.transitions()[static_cast<std::size_t>(tr[j])].to;
            if (obs.status == Status::Exact) {
                if (obs.to == to) {
                    dest[j].rows.push_back({obs.time, true, 1.0, obs.profile, rows[q]});
                    ++event_counts[j];
                }
            } else if (obs.status == Status::Censored || to != discharge) {
                dest[j].censored.emplace_back(dest[j].rows.size(), q);
                dest[j].rows.push_back({obs.time, false, 0.0, obs.profile, rows[q]});
            }
        }
    }
    for (std::size_t j = 0; j < d; ++j)
        if (event_counts[j] == 0)
            throw NumericalError("no observed transitions " + structure.transition_label(tr[j]) +
                                 "; mixture component not identifiable");

    // Initial values: observed next-state proportions and status-1-only fits.
    std::vector<std::vector<double>> w_profile(data.profiles.size(), std::vector<double>(d, 0.0));
    for (std::size_t j = 0; j < d; ++j)
        for (const auto& row : dest[j].rows)
            if (row.event) w_profile[row.profile][j] += 1.0;
    bool capped = false;
    auto mcoef = fit_membership(sub.membership, data.profiles, w_profile, controls.membership_cap, capped);
    sub.coef = mcoef;
    for (std::size_t j = 0; j < d; ++j) {
        FitControls c = controls;
        c.optim.compute_covariance = false;
        const auto res = fit_survival(sub.times[j], dest[j].rows, data.profiles, c);
        sub.coef.insert(sub.coef.end(), res.argmax.data(), res.argmax.data() + res.argmax.size());
    }

    std::vector<double> terms;
    std::vector<std::vector<double>> weights;
    auto evaluate = [&](bool with_weights) {
        submodel_terms(sub, sub.coef, data, rows, structure, exec, terms, with_weights ? &weights : nullptr);
        const double ll = sum(terms);
        if (!std::isfinite(ll)) throw NumericalError("mixture log-likelihood not finite for state " + structure.state_name(r));
        return ll;
    };
    double ll = evaluate(true);
    sub.em_trace = {ll};

    if (controls.direct) {
        auto f = [&](const Eigen::VectorXd& x) {
            return mixture_submodel_loglik(sub, std::span<const double>(x.data(), static_cast<std::size_t>(x.size())),
                                           data, rows, structure, exec);
        };
        OptimControls oc = controls.optim;
        oc.compute_covariance = false;
        const auto res = maximize(f, Eigen::Map<Eigen::VectorXd>(sub.coef.data(), static_cast<Eigen::Index>(sub.coef.size())), oc);
        sub.coef.assign(res.argmax.data(), res.argmax.data() + res.argmax.size());
        ll = evaluate(false);
        sub.em_trace.push_back(ll);
        sub.em_iterations = res.iterations;
    } else {
        bool converged = false;
        int it = 0;
        for (; it < controls.em_max_iter && !converged; ++it) {
            // M-step, membership.
            for (auto& w : w_profile) std::fill(w.begin(), w.end(), 0.0);
            for (std::size_t q = 0; q < rows.size(); ++q)
                for (std::size_t j = 0; j < d; ++j) w_profile[data.rows[rows[q]].profile][j] += weights[q][j];
            mcoef.assign(sub.coef.begin(), sub.coef.begin() + static_cast<std::ptrdiff_t>(sub.membership.size()));
            mcoef = fit_membership(sub.membership, data.profiles, w_profile, controls.membership_cap, capped, mcoef);
            std::copy(mcoef.begin(), mcoef.end(), sub.coef.begin());

            // M-step, conditional times.
            for (std::size_t j = 0; j < d; ++j)
                for (const auto& [at, q] : dest[j].censored) dest[j].rows[at].weight = weights[q][j];
            for_each_index(exec, d, [&](std::size_t j) {
                const auto off = static_cast<std::ptrdiff_t>(sub.time_offset(j));
                const auto n = static_cast<Eigen::Index>(sub.times[j].size());
                auto f = [&](const Eigen::VectorXd& x) {
                    return survival_loglik(sub.times[j], std::span<const double>(x.data(), static_cast<std::size_t>(x.size())),
                                           dest[j].rows, data.profiles);
                };
                OptimControls oc = controls.optim;
                oc.compute_covariance = false;
                oc.grad_tol = controls.inner_grad_tol;
                const Eigen::VectorXd x0 = Eigen::Map<const Eigen::VectorXd>(sub.coef.data() + off, n);
                const auto res = maximize(f, x0, oc);
                std::copy(res.argmax.data(), res.argmax.data() + n, sub.coef.begin() + off);
            });

            const double next = evaluate(true);
            sub.em_trace.push_back(next);
            converged = std::abs(next - ll) <= controls.em_tol * std::abs(ll);
            ll = next;
        }
        sub.em_iterations = it;
        if (!converged) {
            std::string trace;
            const auto n = sub.em_trace.size();
            for (std::size_t i = n > 5 ? n - 5 : 0; i < n; ++i) trace += " " + std::to_string(sub.em_trace[i]);
            throw NumericalError("EM for state " + structure.state_name(r) + " did not converge in " +
                                 std::to_string(it) + " iterations; last log-likelihoods:" + trace);
        }
    }
    sub.capped = capped;
    if (capped)
        std::cerr << "warning: membership probability near zero from state " << structure.state_name(r)
                  << "; coefficient capped at +-" << controls.membership_cap << "\n";
    sub.loglik = ll;
    if (controls.optim.compute_covariance) submodel_covariance(sub, data, rows, structure, controls, exec);
}

void finish(MixtureFit& fit) {
    fit.loglik = 0.0;
    fit.k = 0;
    for (const auto& s : fit.submodels) {
        fit.loglik += s.loglik;
        fit.k += static_cast<int>(s.size());
    }
    fit.aic = aic(fit.loglik, fit.k);
}

}  // namespace

void mixture_submodel_covariance(MixtureSubmodelFit& sub, const Dataset& data, const ModelStructure& structure,
                                 const FitControls& controls, Exec exec) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < data.rows.size(); ++i)
        if (data.rows[i].from == sub.from()) rows.push_back(i);
    submodel_covariance(sub, data, rows, structure, controls, exec);
}

MixtureSubmodelFit fit_mixture_submodel(const Dataset& data, const ModelStructure& structure, int from,
                                        const MixtureModelSpec& spec, const FitControls& controls, Exec exec) {
    validate_mixture_spec(spec, structure, data.coding);
    auto sub = mixture_submodel(structure, from, spec, data.coding);
    fit_submodel(sub, data, structure, controls, exec);
    return sub;
}

MixtureFit assemble_mixture(const ModelContext& context, const MixtureModelSpec& spec,
                            std::vector<MixtureSubmodelFit> submodels) {
    MixtureFit fit;
    fit.context = context;
    fit.spec = spec;
    fit.submodels = std::move(submodels);
    finish(fit);
    return fit;
}

MixtureFit fit_mixture(const Dataset& data, const ModelStructure& structure, const MixtureModelSpec& spec,
                       const DataOptions& options, const FitControls& controls, Exec exec) {
    require_valid(structure);
    validate_mixture_spec(spec, structure, data.coding);
    MixtureFit fit;
    fit.context = make_context(data, structure, options);
    fit.spec = spec;
    for (int r : structure.transient_states()) fit.submodels.push_back(mixture_submodel(structure, r, spec, data.coding));
    for (auto& sub : fit.submodels) fit_submodel(sub, data, structure, controls, exec);
    finish(fit);
    return fit;
}

MixtureFit make_mixture_model(const ModelContext& context, const MixtureModelSpec& spec,
                              const std::map<std::string, std::vector<double>>& coefficients) {
    validate_mixture_spec(spec, context.structure, context.coding);
    MixtureFit fit;
    fit.context = context;
    fit.spec = spec;
    for (int r : context.structure.transient_states()) {
        auto sub = mixture_submodel(context.structure, r, spec, context.coding);
        const auto& name = context.structure.state_name(r);
        const auto it = coefficients.find(name);
        if (it == coefficients.end()) throw ConfigError("no coefficients for mixture submodel '" + name + "'");
        sub.coef = it->second;
        if (sub.coef.size() != sub.time_offset(sub.times.size()))
            throw ConfigError("mixture submodel '" + name + "' needs " + std::to_string(sub.time_offset(sub.times.size())) +
                              " coefficients");
        const auto n = static_cast<Eigen::Index>(sub.coef.size());
        sub.covariance = Eigen::MatrixXd::Zero(n, n);
        fit.submodels.push_back(std::move(sub));
    }
    finish(fit);
    return fit;
}

}  // namespace msm
