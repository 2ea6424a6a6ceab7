#include "msm/quantities.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>

#include "msm/errors.hpp"

namespace msm {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool has_cure(const std::vector<Distribution>& d) {
    return std::any_of(d.begin(), d.end(), [](const Distribution& x) { return x.is_cure(); });
}

TimeSummary analytic_summary(const Distribution& d) {
    TimeSummary s;
    s.mean = d.mean();
    s.median = d.quantile(0.5);
    s.q05 = d.quantile(0.05);
    s.q95 = d.quantile(0.95);
    return s;
}

}  // namespace

double sorted_quantile(std::span<const double> sorted, double p) {
    if (sorted.empty()) return kNaN;
    const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

TimeSummary summarize(std::vector<double> values) {
    TimeSummary s;
    s.n = values.size();
    if (values.empty()) {
        s.mean = s.median = s.q05 = s.q95 = s.mean_se = kNaN;
        return s;
    }
    std::sort(values.begin(), values.end());
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(values.size());
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.mean_se = values.size() > 1 ? std::sqrt(ss / static_cast<double>(values.size() - 1) / static_cast<double>(values.size())) : kNaN;
    s.median = sorted_quantile(values, 0.5);
    s.q05 = sorted_quantile(values, 0.05);
    s.q95 = sorted_quantile(values, 0.95);
    return s;
}

std::vector<NextStateResult> next_state_probs_csh(const CshFit& fit, std::span<const double> design,
                                                  const QuantityOptions& options) {
    const auto& st = fit.context.structure;
    const auto dists = fit.resolve(design);
    std::vector<NextStateResult> out(st.state_count());
    const double cap = limit_cap(fit.context.max_time);
    for (int r : st.transient_states()) {
        std::vector<Distribution> d;
        for (int k : st.outgoing(r)) d.push_back(dists[static_cast<std::size_t>(k)]);
        const auto lim = submodel_limit(d, cap, options.mass_tol, options.ode);
        auto& res = out[static_cast<std::size_t>(r)];
        res.residual = lim.remaining;
        res.horizon = lim.horizon;
        double total = 0.0;
        for (double a : lim.absorbed) total += a;
        for (double a : lim.absorbed) res.probs.push_back(total > 0.0 ? a / total : kNaN);
        if (options.warn && lim.remaining >= options.mass_tol && !has_cure(d))
            std::cerr << "warning: " << lim.remaining << " of the mass remains in " << st.state_name(r)
                      << " at t=" << lim.horizon << "\n";
    }
    return out;
}

std::vector<NextStateResult> next_state_probs_mixture(const MixtureFit& fit, std::span<const double> design) {
    std::vector<NextStateResult> out(fit.context.structure.state_count());
    for (const auto& sub : fit.submodels) out[static_cast<std::size_t>(sub.from())].probs = sub.probs(design);
    return out;
}

TimeSummary conditional_los(std::span<const Pathway> histories, int transition) {
    std::vector<double> v;
    for (const auto& p : histories)
        for (std::size_t i = 0; i < p.stages; ++i)
            if (p.transitions[i] == transition) v.push_back(p.times[i]);
    return summarize(std::move(v));
}

UltimateOutcomes ultimate_outcomes(std::span<const Pathway> histories, const ModelStructure& structure) {
    const std::size_t n = structure.state_count();
    UltimateOutcomes out;
    out.probs.assign(n, 0.0);
    out.probs_se.assign(n, 0.0);
    std::vector<std::vector<double>> times(n);
    std::size_t unabsorbed = 0;
    for (const auto& p : histories) {
        if (!p.absorbed) {
            ++unabsorbed;
            continue;
        }
        times[static_cast<std::size_t>(p.final_state)].push_back(p.total_time);
    }
    const auto S = static_cast<double>(histories.size());
    for (std::size_t s = 0; s < n; ++s) {
        const double pr = S > 0 ? static_cast<double>(times[s].size()) / S : kNaN;
        out.probs[s] = pr;
        out.probs_se[s] = S > 0 ? std::sqrt(pr * (1.0 - pr) / S) : kNaN;
        out.times.push_back(summarize(std::move(times[s])));
    }
    out.unabsorbed = S > 0 ? static_cast<double>(unabsorbed) / S : kNaN;
    return out;
}

UltimateOutcomes ultimate_outcomes_mixture(const MixtureFit& fit, std::span<const double> design,
                                           std::span<const Pathway> histories) {
    const auto& st = fit.context.structure;
    // Per-transition membership probability and conditional mean time.
    std::vector<double> pi(st.transition_count(), 0.0), mean(st.transition_count(), 0.0);
    for (const auto& sub : fit.submodels) {
        const auto p = sub.probs(design);
        const auto d = sub.resolve(design);
        const auto& tr = sub.membership.transitions();
        for (std::size_t j = 0; j < tr.size(); ++j) {
            pi[static_cast<std::size_t>(tr[j])] = p[j];
            mean[static_cast<std::size_t>(tr[j])] = d[j].mean();
        }
    }
    auto out = ultimate_outcomes(histories, st);
    for (std::size_t s = 0; s < st.state_count(); ++s) {
        out.probs[s] = 0.0;
        out.probs_se[s] = 0.0;
        if (!st.is_absorbing(static_cast<int>(s))) continue;
        double total = 0.0, weighted = 0.0;
        for (const auto& path : enumerate_pathways(st, st.initial_state(), static_cast<int>(s))) {
            double pr = 1.0, m = 0.0;
            for (int k : path) {
                pr *= pi[static_cast<std::size_t>(k)];
                m += mean[static_cast<std::size_t>(k)];
            }
            total += pr;
            if (pr > 0.0) weighted += pr * m;
        }
        out.probs[s] = total;
        out.times[s].mean = total > 0.0 ? weighted / total : kNaN;
        out.times[s].mean_se = 0.0;
    }
    out.unabsorbed = 0.0;
    return out;
}

ProfileQuantities compute_quantities(const FittedModel& fit, std::span<const double> design,
                                     const QuantityOptions& options) {
    const auto& st = context_of(fit).structure;
    const auto pm = profile_model(fit, design);
    const auto histories = simulate_histories(pm, options.simulations, derive_seed(options.seed, "quantities"),
                                              options.exec);
    ProfileQuantities q;
    q.next_state.assign(st.transition_count(), 0.0);
    q.residual.assign(st.state_count(), 0.0);
    q.los.resize(st.transition_count());

    const auto* csh = std::get_if<CshFit>(&fit);
    const auto next = csh ? next_state_probs_csh(*csh, design, options)
                          : next_state_probs_mixture(std::get<MixtureFit>(fit), design);
    for (int r : st.transient_states()) {
        const auto& res = next[static_cast<std::size_t>(r)];
        const auto& out = st.outgoing(r);
        for (std::size_t j = 0; j < out.size(); ++j) q.next_state[static_cast<std::size_t>(out[j])] = res.probs[j];
        q.residual[static_cast<std::size_t>(r)] = res.residual;
    }

    if (csh) {
        for (std::size_t k = 0; k < st.transition_count(); ++k) {
            q.los[k] = conditional_los(histories, static_cast<int>(k));
            if (options.warn && q.los[k].n < options.min_transitions)
                std::cerr << "warning: only " << q.los[k].n << " simulated transitions "
                          << st.transition_label(static_cast<int>(k)) << "; length-of-stay summaries are unreliable\n";
        }
        q.ultimate = ultimate_outcomes(histories, st);
    } else {
        const auto& mix = std::get<MixtureFit>(fit);
        for (const auto& sub : mix.submodels) {
            const auto d = sub.resolve(design);
            const auto& tr = sub.membership.transitions();
            for (std::size_t j = 0; j < tr.size(); ++j) q.los[static_cast<std::size_t>(tr[j])] = analytic_summary(d[j]);
        }
        q.ultimate = ultimate_outcomes_mixture(mix, design, histories);
    }
    return q;
}

std::vector<QuantityRecord> flatten(const ProfileQuantities& q, const ModelStructure& st) {
    std::vector<QuantityRecord> out;
    for (std::size_t k = 0; k < st.transition_count(); ++k)
        out.push_back({"next_state_prob", st.transition_label(static_cast<int>(k)), q.next_state[k], 0.0});
    for (std::size_t k = 0; k < st.transition_count(); ++k) {
        const auto label = st.transition_label(static_cast<int>(k));
        const auto& s = q.los[k];
        out.push_back({"los_mean", label, s.mean, s.mean_se});
        out.push_back({"los_median", label, s.median, 0.0});
        out.push_back({"los_q05", label, s.q05, 0.0});
        out.push_back({"los_q95", label, s.q95, 0.0});
    }
    for (int s : st.absorbing_states()) {
        const auto i = static_cast<std::size_t>(s);
        const auto& name = st.state_name(s);
        const auto& t = q.ultimate.times[i];
        out.push_back({"ultimate_prob", name, q.ultimate.probs[i], q.ultimate.probs_se[i]});
        out.push_back({"outcome_time_mean", name, t.mean, t.mean_se});
        out.push_back({"outcome_time_median", name, t.median, 0.0});
        out.push_back({"outcome_time_q05", name, t.q05, 0.0});
        out.push_back({"outcome_time_q95", name, t.q95, 0.0});
    }
    return out;
}

std::vector<QuantitySummary> quantities_with_intervals(const FittedModel& fit, const ParamDraws& draws,
                                                       const std::vector<CovariateValues>& profiles,
                                                       const QuantityOptions& options) {
    const auto& ctx = context_of(fit);
    const auto B = static_cast<std::size_t>(draws.count());
    std::vector<FittedModel> models;
    models.reserve(B);
    for (std::size_t b = 0; b < B; ++b) models.push_back(with_coefficients(fit, draws.row(static_cast<Eigen::Index>(b))));

    std::vector<QuantitySummary> out;
    for (const auto& profile : profiles) {
        const auto design = ctx.coding.encode(profile);
        QuantitySummary summary;
        summary.profile = profile;
        const auto point = flatten(compute_quantities(fit, design, options), ctx.structure);

        QuantityOptions inner = options;
        inner.warn = false;
        if (options.exec == Exec::Parallel) inner.exec = Exec::Serial;
        const Exec outer = options.exec;
        std::vector<std::vector<QuantityRecord>> per_draw(B);
        std::vector<char> failed(B, 0);
        for_each_index(outer, B, [&](std::size_t b) {
            try {
                per_draw[b] = flatten(compute_quantities(models[b], design, inner), ctx.structure);
            } catch (const std::exception&) {
                failed[b] = 1;
            }
        });
        for (std::size_t b = 0; b < B; ++b) {
            if (failed[b]) ++summary.draws_failed;
            else ++summary.draws_used;
        }
        if (summary.draws_failed > 0 && options.warn)
            std::cerr << "warning: " << summary.draws_failed << " of " << B << " parameter draws failed for profile "
                      << profile_label(profile) << " and were dropped\n";

        for (std::size_t i = 0; i < point.size(); ++i) {
            std::vector<double> v;
            for (std::size_t b = 0; b < B; ++b)
                if (!failed[b] && std::isfinite(per_draw[b][i].value)) v.push_back(per_draw[b][i].value);
            std::sort(v.begin(), v.end());
            summary.rows.push_back({point[i].quantity, point[i].target, point[i].value, sorted_quantile(v, 0.025),
                                    sorted_quantile(v, 0.975), point[i].mc_se});
        }
        out.push_back(std::move(summary));
    }
    return out;
}

}  // namespace msm
