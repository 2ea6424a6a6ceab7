#include "msm/survfit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "msm/errors.hpp"

namespace msm {

double survival_loglik(const LinkedDistribution& model, std::span<const double> coef,
                       std::span<const TransitionRow> rows, const std::vector<std::vector<double>>& profiles,
                       Exec exec) {
    std::vector<Distribution> dist;
    dist.reserve(profiles.size());
    for (const auto& z : profiles) dist.push_back(model.resolve(coef, z));

    std::vector<double> terms(rows.size());
    for_each_index(exec, rows.size(), [&](std::size_t i) {
        const auto& r = rows[i];
        if (r.weight == 0.0) {
            terms[i] = 0.0;
            return;
        }
        const auto& d = dist[r.profile];
        terms[i] = r.weight * (r.event ? d.logpdf(r.time) : d.log_survival(r.time));
    });
    double total = 0.0;
    for (double v : terms) total += v;
    return total;
}

std::optional<std::vector<double>> transfer_coefficients(const LinkedDistribution& to, const LinkedDistribution& from,
                                                         std::span<const double> from_coef) {
    if (to.spec().family != from.spec().family || to.spec().cure != from.spec().cure) return std::nullopt;
    std::map<std::string, double> byname;
    for (std::size_t i = 0; i < from.size(); ++i) byname[from.coefficient_names()[i]] = from_coef[i];
    std::vector<double> out(to.size(), 0.0);
    for (std::size_t i = 0; i < to.size(); ++i)
        if (auto it = byname.find(to.coefficient_names()[i]); it != byname.end()) out[i] = it->second;
    return out;
}

LinkedDistribution without_covariates(const LinkedDistribution& model) {
    DistributionSpec spec = model.spec();
    spec.links.clear();
    return LinkedDistribution(spec, CovariateCoding{});
}

namespace {

// Weighted product-limit survival at the last observed time.
double km_tail(std::span<const TransitionRow> rows) {
    std::vector<const TransitionRow*> sorted;
    for (const auto& r : rows)
        if (r.weight > 0.0) sorted.push_back(&r);
    std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) {
        if (a->time != b->time) return a->time < b->time;
        return a->event > b->event;
    });
    double at_risk = 0.0;
    for (auto* r : sorted) at_risk += r->weight;
    double s = 1.0;
    std::size_t i = 0;
    while (i < sorted.size()) {
        const double t = sorted[i]->time;
        double d = 0.0, leaving = 0.0;
        for (; i < sorted.size() && sorted[i]->time == t; ++i) {
            if (sorted[i]->event) d += sorted[i]->weight;
            leaving += sorted[i]->weight;
        }
        if (at_risk > 0.0) s *= 1.0 - d / at_risk;
        at_risk -= leaving;
    }
    return s;
}

}  // namespace

std::vector<double> start_values(const LinkedDistribution& model, std::span<const TransitionRow> rows) {
    double w = 0.0, sum = 0.0, sum2 = 0.0;
    auto accumulate = [&](bool events_only) {
        for (const auto& r : rows) {
            if (r.weight <= 0.0 || (events_only && !r.event)) continue;
            const double l = std::log(r.time);
            w += r.weight;
            sum += r.weight * l;
            sum2 += r.weight * l * l;
        }
    };
    accumulate(true);
    if (w == 0.0) accumulate(false);
    double m = 0.0, s = 1.0;
    if (w > 0.0) {
        m = sum / w;
        s = std::sqrt(std::max(sum2 / w - m * m, 0.0));
    }
    s = std::clamp(s, 0.2, 5.0);

    std::vector<double> natural;
    switch (model.spec().family) {
        case Family::GenGamma: natural = {m, s, 0.2}; break;
        case Family::Gamma: {
            const double shape = std::clamp(1.0 / (s * s), 0.05, 100.0);
            natural = {shape, shape / std::exp(m + 0.5 * s * s)};
            break;
        }
        case Family::Weibull: {
            const double shape = std::clamp(1.2825 / s, 0.1, 20.0);
            natural = {shape, std::exp(m + 0.5772 / shape)};
            break;
        }
        case Family::LogNormal: natural = {m, s}; break;
    }
    if (model.spec().cure) natural.push_back(std::clamp(km_tail(rows), 0.05, 0.9));
    return model.baseline_coefficients(natural);
}

OptimResult fit_survival(const LinkedDistribution& model, std::span<const TransitionRow> rows,
                         const std::vector<std::vector<double>>& profiles, const FitControls& controls,
                         const std::optional<std::vector<double>>& start, Exec exec) {
    std::vector<double> coef0;
    if (start) {
        coef0 = *start;
    } else if (controls.staged && model.size() > model.parameter_count()) {
        const auto base = without_covariates(model);
        FitControls inner = controls;
        inner.staged = false;
        inner.optim.compute_covariance = false;
        const auto r0 = fit_survival(base, rows, profiles, inner, std::nullopt, exec);
        coef0 = *transfer_coefficients(model, base, std::span<const double>(r0.argmax.data(), r0.argmax.size()));
    } else {
        coef0 = start_values(model, rows);
    }

    auto f = [&](const Eigen::VectorXd& x) {
        return survival_loglik(model, std::span<const double>(x.data(), x.size()), rows, profiles, exec);
    };
    const Eigen::VectorXd x0 = Eigen::Map<const Eigen::VectorXd>(coef0.data(), static_cast<Eigen::Index>(coef0.size()));
    OptimResult res = maximize(f, x0, controls.optim);
    if (!res.converged()) {
        // One restart clears a stale inverse-Hessian approximation.
        OptimResult again = maximize(f, res.argmax, controls.optim);
        again.iterations += res.iterations;
        again.evaluations += res.evaluations;
        res = std::move(again);
    }
    if (!res.converged()) {
        std::string trace;
        const auto n = res.trace.size();
        for (std::size_t i = n > 5 ? n - 5 : 0; i < n; ++i) trace += " " + std::to_string(res.trace[i]);
        throw NumericalError("fit of " + describe(model.spec()) + " did not converge (" + to_string(res.status) +
                             " after " + std::to_string(res.iterations) + " iterations); last log-likelihoods:" +
                             trace);
    }
    return res;
}

}  // namespace msm
