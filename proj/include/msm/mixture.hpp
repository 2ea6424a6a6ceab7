#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "msm/dist.hpp"
#include "msm/model.hpp"
#include "msm/survfit.hpp"

namespace msm {

/// Multinomial-logit sub-spec for the next state after one from-state.
struct MembershipSpec {
    /// Reference destination; empty selects the discharge state when it is a
    /// destination, otherwise the first destination.
    std::string reference;
    std::vector<std::string> covariates;

    bool operator==(const MembershipSpec&) const = default;
};

struct MixtureModelSpec {
    /// Keyed by from-state name; from-states without an entry use the default sub-spec.
    std::map<std::string, MembershipSpec> membership;
    /// Conditional time-to-event spec per transition (cure not allowed).
    std::vector<DistributionSpec> transitions;
};

void validate_mixture_spec(const MixtureModelSpec& spec, const ModelStructure& structure,
                           const CovariateCoding& coding);

/// Multinomial logit over the destinations of one from-state.
///
/// Coefficient layout: for each non-reference destination (in outgoing order)
/// an intercept followed by one coefficient per design term.
class MembershipModel {
public:
    MembershipModel() = default;
    MembershipModel(const ModelStructure& structure, int from, const MembershipSpec& spec,
                    const CovariateCoding& coding);

    int from() const { return from_; }
    std::size_t destinations() const { return transitions_.size(); }
    const std::vector<int>& transitions() const { return transitions_; }
    std::size_t reference() const { return reference_; }
    const std::vector<std::size_t>& terms() const { return terms_; }
    std::size_t size() const { return names_.size(); }
    const std::vector<std::string>& coefficient_names() const { return names_; }
    const MembershipSpec& spec() const { return spec_; }

    /// Linear predictors (reference fixed at 0), one per destination.
    std::vector<double> logits(std::span<const double> coef, std::span<const double> design) const;
    std::vector<double> probs(std::span<const double> coef, std::span<const double> design) const;
    std::vector<double> log_probs(std::span<const double> coef, std::span<const double> design) const;

private:
    int from_ = -1;
    std::vector<int> transitions_;
    std::size_t reference_ = 0;
    std::vector<std::size_t> terms_;
    std::vector<std::string> names_;
    MembershipSpec spec_;
};

/// Fitted (or given) parameters of one from-state's mixture submodel.
struct MixtureSubmodelFit {
    MembershipModel membership;
    std::vector<LinkedDistribution> times;  // one per destination, outgoing order
    /// Membership coefficients, then each time model's coefficients.
    std::vector<double> coef;
    Eigen::MatrixXd covariance;  // joint, same layout as coef
    double loglik = 0.0;
    std::vector<double> em_trace;
    int em_iterations = 0;
    bool capped = false;  // a membership coefficient hit the cap
    bool covariance_repaired = false;

    int from() const { return membership.from(); }
    std::size_t size() const { return coef.size(); }
    std::size_t time_offset(std::size_t j) const;
    std::span<const double> membership_coef() const { return {coef.data(), membership.size()}; }
    std::span<const double> time_coef(std::size_t j) const { return {coef.data() + time_offset(j), times[j].size()}; }

    std::vector<double> probs(std::span<const double> design) const;
    std::vector<Distribution> resolve(std::span<const double> design) const;
    std::vector<std::string> coefficient_names() const;
};

struct MixtureFit {
    ModelContext context;
    MixtureModelSpec spec;
    std::vector<MixtureSubmodelFit> submodels;  // one per transient state, in state order
    double loglik = 0.0;
    int k = 0;
    double aic = 0.0;

    const MixtureSubmodelFit& submodel(int from) const;
    Eigen::VectorXd coefficients() const;
    /// Block-diagonal across submodels, joint within each.
    Eigen::MatrixXd covariance() const;
    MixtureFit with_coefficients(const Eigen::VectorXd& coef) const;
};

/// Log-likelihood contribution of one observation from a submodel with
/// destinations `transitions`, membership `pi` and conditional times `dists`.
/// Throws LikelihoodDomainError when not finite.
double mix_obs_loglik(const Observation& obs, const ModelStructure& structure, std::span<const int> transitions,
                      std::span<const double> pi, std::span<const Distribution> dists);

/// Posterior membership weights over the destinations (sum to 1).
std::vector<double> em_e_step(const Observation& obs, const ModelStructure& structure, std::span<const int> transitions,
                              std::span<const double> pi, std::span<const Distribution> dists);

/// Membership probabilities for one design row, ordered like the from-state's outgoing transitions.
std::vector<double> membership_probs(const MixtureFit& fit, int from, std::span<const double> design);

/// Sum of mix_obs_loglik over the rows of one submodel (from-state) at coefficients `coef`.
double mixture_submodel_loglik(const MixtureSubmodelFit& sub, std::span<const double> coef, const Dataset& data,
                               std::span<const std::size_t> rows, const ModelStructure& structure,
                               Exec exec = Exec::Serial);

double mixture_total_loglik(const MixtureFit& fit, const Dataset& data);

/// Unfitted submodel for one from-state (coefficients empty).
MixtureSubmodelFit mixture_submodel(const ModelStructure& structure, int from, const MixtureModelSpec& spec,
                                    const CovariateCoding& coding);

/// EM fit of every submodel, followed by the observed-information covariance
/// of the full mixture likelihood.
MixtureFit fit_mixture(const Dataset& data, const ModelStructure& structure, const MixtureModelSpec& spec,
                       const DataOptions& options = {}, const FitControls& controls = {}, Exec exec = Exec::Serial);

/// EM fit of a single submodel (covariance per controls.optim.compute_covariance).
MixtureSubmodelFit fit_mixture_submodel(const Dataset& data, const ModelStructure& structure, int from,
                                        const MixtureModelSpec& spec, const FitControls& controls = {},
                                        Exec exec = Exec::Serial);

/// Observed-information covariance of a submodel at its current coefficients.
void mixture_submodel_covariance(MixtureSubmodelFit& sub, const Dataset& data, const ModelStructure& structure,
                                 const FitControls& controls = {}, Exec exec = Exec::Serial);

/// Combines separately fitted submodels (one per transient state, in state order).
MixtureFit assemble_mixture(const ModelContext& context, const MixtureModelSpec& spec,
                            std::vector<MixtureSubmodelFit> submodels);

/// A mixture model with given coefficients (per transient state, layout as MixtureSubmodelFit::coef).
MixtureFit make_mixture_model(const ModelContext& context, const MixtureModelSpec& spec,
                              const std::map<std::string, std::vector<double>>& coefficients);

/// Weighted multinomial-logit MLE by Newton's method, aggregated by profile.
/// `weights` is profiles x destinations. Returns the coefficients; sets
/// `capped` if any coefficient reached +-cap.
std::vector<double> fit_membership(const MembershipModel& model, const std::vector<std::vector<double>>& profiles,
                                   const std::vector<std::vector<double>>& weights, double cap, bool& capped,
                                   std::span<const double> start = {});

}  // namespace msm
