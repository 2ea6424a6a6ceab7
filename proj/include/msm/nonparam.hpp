#pragma once

#include <span>
#include <string>
#include <vector>

#include "msm/fitted.hpp"
#include "msm/model.hpp"

namespace msm {

/// Right-continuous step function: `initial` before times[0], values[i] on [times[i], times[i+1]).
struct StepFunction {
    std::vector<double> times;
    std::vector<double> values;
    double initial = 1.0;

    double at(double t) const;
};

/// Product-limit estimate; events are processed before censorings at tied
/// times. Throws ConfigError on empty input.
StepFunction kaplan_meier(std::span<const double> times, std::span<const int> events);
StepFunction kaplan_meier(std::span<const TransitionRow> rows);

struct AalenJohansen {
    int from = -1;
    std::vector<int> transitions;       // outgoing, declaration order
    std::vector<StepFunction> incidence;  // per transition
    StepFunction remaining;
    double max_followup = 0.0;
};

/// Cumulative incidence of each destination of `from` over the given
/// observations (all must start in `from`). Status-2 and status-3 rows are
/// right-censored at their time.
AalenJohansen aalen_johansen(const Dataset& data, std::span<const std::size_t> rows, const ModelStructure& structure,
                             int from);

/// Observation indices per group, keyed by a label such as "age_group=85+,gender=M".
/// With no grouping covariates there is a single group "all".
struct Group {
    std::string label;
    std::vector<std::size_t> rows;
};
std::vector<Group> group_rows(const Dataset& data, const std::vector<std::string>& grouping,
                              bool include_empty = false);

struct GofRow {
    std::string group;
    std::string from;
    std::string to;
    double t = 0.0;
    double parametric = 0.0;
    double nonparametric = 0.0;  // NaN beyond the last follow-up time
};

/// Parametric next-state occupancy p_rs(t) against Aalen-Johansen per group.
std::vector<GofRow> gof_table(const FittedModel& fit, const Dataset& data, std::span<const double> grid,
                              const std::vector<std::string>& grouping);

/// Parametric latent-time survival against Kaplan-Meier per transition (CSH only).
/// `to` holds the destination; values are survival probabilities.
std::vector<GofRow> km_comparison(const CshFit& fit, const Dataset& data, std::span<const double> grid,
                                  const std::vector<std::string>& grouping);

struct HistogramRow {
    std::string group;
    std::string from;
    std::string to;
    double lower = 0.0;
    double upper = 0.0;
    std::size_t count = 0;
    double density = 0.0;   // fitted conditional density at the bin midpoint
    double expected = 0.0;  // count implied by the fitted distribution over the bin
};

/// Observed status-1 times binned per destination with fitted conditional densities (mixture only).
std::vector<HistogramRow> histogram_table(const MixtureFit& fit, const Dataset& data,
                                          const std::vector<std::string>& grouping, std::size_t bins = 20);

/// Largest |parametric - nonparametric| over rows where both are available.
double max_gap(std::span<const GofRow> rows);

struct SubgroupLoglik {
    std::string group;
    std::size_t count = 0;
    double loglik = 0.0;
};

/// Sum of observation contributions within each group (empty groups included).
std::vector<SubgroupLoglik> subgroup_loglik(const FittedModel& fit, const Dataset& data,
                                            const std::vector<std::string>& grouping);

}  // namespace msm
