#include "msm/nonparam.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include "msm/errors.hpp"
#include "msm/forward.hpp"

namespace msm {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string label_of(const CovariateValues& values, const std::vector<std::string>& grouping) {
    if (grouping.empty()) return "all";
    std::string out;
    for (const auto& g : grouping) out += (out.empty() ? "" : ",") + g + "=" + values.at(g);
    return out;
}

// Count of rows per profile among `rows`.
std::map<std::size_t, double> profile_weights(const Dataset& data, std::span<const std::size_t> rows, int from) {
    std::map<std::size_t, double> w;
    for (auto i : rows)
        if (from < 0 || data.rows[i].from == from) w[data.rows[i].profile] += 1.0;
    return w;
}

}  // namespace

double StepFunction::at(double t) const {
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    if (it == times.begin()) return initial;
    return values[static_cast<std::size_t>(it - times.begin()) - 1];
}

StepFunction kaplan_meier(std::span<const double> times, std::span<const int> events) {
    if (times.empty()) throw ConfigError("Kaplan-Meier needs at least one observation");
    if (times.size() != events.size()) throw ConfigError("times and events differ in length");
    std::vector<std::size_t> order(times.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (times[a] != times[b]) return times[a] < times[b];
        return events[a] > events[b];
    });
    StepFunction out;
    double at_risk = static_cast<double>(times.size());
    double s = 1.0;
    std::size_t i = 0;
    while (i < order.size()) {
        const double t = times[order[i]];
        double d = 0.0, leaving = 0.0;
        for (; i < order.size() && times[order[i]] == t; ++i) {
            if (events[order[i]]) d += 1.0;
            leaving += 1.0;
        }
        if (d > 0.0) {
            s *= 1.0 - d / at_risk;
            out.times.push_back(t);
            out.values.push_back(s);
        }
        at_risk -= leaving;
    }
    return out;
}

StepFunction kaplan_meier(std::span<const TransitionRow> rows) {
    std::vector<double> t;
    std::vector<int> e;
    for (const auto& r : rows) {
        t.push_back(r.time);
        e.push_back(r.event ? 1 : 0);
    }
    return kaplan_meier(t, e);
}

AalenJohansen aalen_johansen(const Dataset& data, std::span<const std::size_t> rows, const ModelStructure& structure,
                             int from) {
    AalenJohansen out;
    out.from = from;
    out.transitions = structure.outgoing(from);
    const std::size_t d = out.transitions.size();
    out.incidence.assign(d, StepFunction{{}, {}, 0.0});
    out.remaining.initial = 1.0;

    // (time, destination position or -1 for censoring)
    std::vector<std::pair<double, int>> ev;
    for (auto i : rows) {
        const auto& obs = data.rows[i];
        if (obs.from != from) throw ConfigError("Aalen-Johansen rows must all start in the same state");
        int j = -1;
        if (obs.status == Status::Exact)
            for (std::size_t q = 0; q < d; ++q)
                if (structure.transitions()[static_cast<std::size_t>(out.transitions[q])].to == obs.to) j = static_cast<int>(q);
        ev.emplace_back(obs.time, j);
        out.max_followup = std::max(out.max_followup, obs.time);
    }
    std::sort(ev.begin(), ev.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first < b.first;
        return a.second > b.second;
    });
    double at_risk = static_cast<double>(ev.size());
    double s = 1.0;
    std::vector<double> cif(d, 0.0);
    std::size_t i = 0;
    while (i < ev.size()) {
        const double t = ev[i].first;
        std::vector<double> count(d, 0.0);
        double total = 0.0, leaving = 0.0;
        for (; i < ev.size() && ev[i].first == t; ++i) {
            if (ev[i].second >= 0) {
                count[static_cast<std::size_t>(ev[i].second)] += 1.0;
                total += 1.0;
            }
            leaving += 1.0;
        }
        if (total > 0.0) {
            for (std::size_t q = 0; q < d; ++q) {
                cif[q] += s * count[q] / at_risk;
                out.incidence[q].times.push_back(t);
                out.incidence[q].values.push_back(cif[q]);
            }
            s *= 1.0 - total / at_risk;
            out.remaining.times.push_back(t);
            out.remaining.values.push_back(s);
        }
        at_risk -= leaving;
    }
    return out;
}

std::vector<Group> group_rows(const Dataset& data, const std::vector<std::string>& grouping, bool include_empty) {
    for (const auto& g : grouping)
        if (std::find(data.covariate_names.begin(), data.covariate_names.end(), g) == data.covariate_names.end())
            throw ConfigError("grouping covariate '" + g + "' not in data");
    std::map<std::string, std::vector<std::size_t>> groups;
    if (include_empty && !grouping.empty()) {
        std::vector<std::vector<std::string>> levels;
        for (const auto& g : grouping) {
            if (data.coding.has(g) && !data.coding.covariate(g).numeric) {
                levels.push_back(data.coding.covariate(g).levels);
            } else {
                std::set<std::string> seen;
                for (const auto& r : data.rows) seen.insert(r.covariates.at(g));
                levels.emplace_back(seen.begin(), seen.end());
            }
        }
        std::vector<std::size_t> idx(grouping.size(), 0);
        while (true) {
            CovariateValues v;
            for (std::size_t k = 0; k < grouping.size(); ++k) v[grouping[k]] = levels[k][idx[k]];
            groups[label_of(v, grouping)];
            std::size_t k = grouping.size();
            while (k > 0 && ++idx[k - 1] == levels[k - 1].size()) idx[--k] = 0;
            if (k == 0) break;
        }
    }
    for (std::size_t i = 0; i < data.rows.size(); ++i) groups[label_of(data.rows[i].covariates, grouping)].push_back(i);
    if (grouping.empty()) groups.try_emplace("all");
    std::vector<Group> out;
    for (auto& [label, rows] : groups) out.push_back({label, std::move(rows)});
    return out;
}

std::vector<GofRow> gof_table(const FittedModel& fit, const Dataset& data, std::span<const double> grid,
                              const std::vector<std::string>& grouping) {
    const auto& st = context_of(fit).structure;
    std::vector<GofRow> out;
    for (const auto& group : group_rows(data, grouping)) {
        for (int r : st.transient_states()) {
            std::vector<std::size_t> rows;
            for (auto i : group.rows)
                if (data.rows[i].from == r) rows.push_back(i);
            if (rows.empty()) continue;
            const auto aj = aalen_johansen(data, rows, st, r);
            const auto& tr = st.outgoing(r);
            // Parametric occupancy averaged over the group's covariate profiles.
            std::vector<std::vector<double>> p(tr.size(), std::vector<double>(grid.size(), 0.0));
            const auto weights = profile_weights(data, rows, r);
            double wsum = 0.0;
            for (const auto& [profile, w] : weights) {
                wsum += w;
                const auto& z = data.profiles[profile];
                if (const auto* csh = std::get_if<CshFit>(&fit)) {
                    const auto all = csh->resolve(z);
                    std::vector<Distribution> d;
                    for (int k : tr) d.push_back(all[static_cast<std::size_t>(k)]);
                    const auto sol = solve_forward(submodel_intensity(d), grid);
                    for (std::size_t j = 0; j < tr.size(); ++j)
                        for (std::size_t g = 0; g < grid.size(); ++g)
                            p[j][g] += w * sol.p[g](0, static_cast<Eigen::Index>(j + 1));
                } else {
                    const auto& sub = std::get<MixtureFit>(fit).submodel(r);
                    const auto pi = sub.probs(z);
                    const auto d = sub.resolve(z);
                    for (std::size_t j = 0; j < tr.size(); ++j)
                        for (std::size_t g = 0; g < grid.size(); ++g)
                            p[j][g] += w * (grid[g] > 0.0 ? pi[j] * d[j].cdf(grid[g]) : 0.0);
                }
            }
            for (std::size_t j = 0; j < tr.size(); ++j) {
                const auto& to = st.state_name(st.transitions()[static_cast<std::size_t>(tr[j])].to);
                for (std::size_t g = 0; g < grid.size(); ++g) {
                    const double np = grid[g] <= aj.max_followup ? aj.incidence[j].at(grid[g]) : kNaN;
                    out.push_back({group.label, st.state_name(r), to, grid[g], p[j][g] / wsum, np});
                }
            }
        }
    }
    return out;
}

std::vector<GofRow> km_comparison(const CshFit& fit, const Dataset& data, std::span<const double> grid,
                                  const std::vector<std::string>& grouping) {
    const auto& st = fit.context.structure;
    std::vector<GofRow> out;
    for (const auto& group : group_rows(data, grouping)) {
        std::vector<Observation> sub_rows;
        for (auto i : group.rows) sub_rows.push_back(data.rows[i]);
        Dataset sub = make_dataset(std::move(sub_rows), data.covariate_names, &data.coding);
        const auto split = split_by_transition(sub, st, fit.context.options);
        for (std::size_t k = 0; k < split.size(); ++k) {
            const auto& td = split[k];
            if (td.rows.empty()) continue;
            const auto km = kaplan_meier(td.rows);
            const double followup = td.max_time();
            std::map<std::size_t, double> weights;
            for (const auto& r : td.rows) weights[r.profile] += 1.0;
            const auto& tr = st.transitions()[k];
            for (double t : grid) {
                double s = 0.0, wsum = 0.0;
                for (const auto& [profile, w] : weights) {
                    s += w * (t > 0.0 ? fit.transitions[k].resolve(sub.profiles[profile]).survival(t) : 1.0);
                    wsum += w;
                }
                out.push_back({group.label, st.state_name(tr.from), st.state_name(tr.to), t, s / wsum,
                               t <= followup ? km.at(t) : kNaN});
            }
        }
    }
    return out;
}

std::vector<HistogramRow> histogram_table(const MixtureFit& fit, const Dataset& data,
                                          const std::vector<std::string>& grouping, std::size_t bins) {
    if (bins == 0) throw ConfigError("histogram needs at least one bin");
    const auto& st = fit.context.structure;
    std::vector<HistogramRow> out;
    for (const auto& group : group_rows(data, grouping)) {
        for (const auto& sub : fit.submodels) {
            const auto& tr = sub.membership.transitions();
            for (std::size_t j = 0; j < tr.size(); ++j) {
                const int to = st.transitions()[static_cast<std::size_t>(tr[j])].to;
                std::vector<double> times;
                std::map<std::size_t, double> weights;
                for (auto i : group.rows) {
                    const auto& obs = data.rows[i];
                    if (obs.from == sub.from() && obs.status == Status::Exact && obs.to == to) {
                        times.push_back(obs.time);
                        weights[obs.profile] += 1.0;
                    }
                }
                if (times.empty()) continue;
                const double hi = *std::max_element(times.begin(), times.end());
                const double width = hi / static_cast<double>(bins);
                std::vector<std::size_t> counts(bins, 0);
                for (double t : times)
                    ++counts[std::min(bins - 1, static_cast<std::size_t>(t / width))];
                for (std::size_t b = 0; b < bins; ++b) {
                    const double mid = (static_cast<double>(b) + 0.5) * width;
                    const double lo = static_cast<double>(b) * width;
                    double dens = 0.0, expected = 0.0;
                    for (const auto& [profile, w] : weights) {
                        const auto d = sub.resolve(data.profiles[profile])[j];
                        dens += w * d.pdf(mid);
                        expected += w * (d.cdf(lo + width) - (lo > 0.0 ? d.cdf(lo) : 0.0));
                    }
                    dens /= static_cast<double>(times.size());
                    out.push_back({group.label, st.state_name(sub.from()), st.state_name(to), lo, lo + width,
                                   counts[b], dens, expected});
                }
            }
        }
    }
    return out;
}

double max_gap(std::span<const GofRow> rows) {
    double m = 0.0;
    for (const auto& r : rows)
        if (std::isfinite(r.nonparametric)) m = std::max(m, std::abs(r.parametric - r.nonparametric));
    return m;
}

std::vector<SubgroupLoglik> subgroup_loglik(const FittedModel& fit, const Dataset& data,
                                            const std::vector<std::string>& grouping) {
    const auto contributions = observation_logliks(fit, data);
    std::vector<SubgroupLoglik> out;
    for (const auto& g : group_rows(data, grouping, true)) {
        SubgroupLoglik row{g.label, g.rows.size(), 0.0};
        for (auto i : g.rows) row.loglik += contributions[i];
        out.push_back(row);
    }
    return out;
}

}  // namespace msm
