#pragma once

#include <limits>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "msm/covariates.hpp"
#include "msm/random.hpp"

namespace msm {

/// Time returned by sampling when the event never occurs (cure fraction).
inline constexpr double kNever = std::numeric_limits<double>::infinity();

enum class Family { GenGamma, Gamma, Weibull, LogNormal };

/// Scale on which a parameter is linear in the covariates.
enum class Link { Identity, Log, Logit };

std::string_view family_name(Family family);
Family parse_family(std::string_view name);
std::string_view link_name(Link link);

/// Natural parameter names in storage order, e.g. {"mu", "sigma", "Q"}.
const std::vector<std::string>& parameter_names(Family family);
Link parameter_link(Family family, std::size_t index);

/// Generalized gamma in the Prentice parameterisation.
struct GenGammaParams {
    double mu = 0.0;     // location on log-time scale
    double sigma = 1.0;  // scale, > 0
    double q = 0.0;      // shape
};

struct GammaParams {
    double shape = 1.0;
    double rate = 1.0;
};

struct WeibullParams {
    double shape = 1.0;
    double scale = 1.0;
};

struct LogNormalParams {
    double meanlog = 0.0;
    double sdlog = 1.0;
};

using BaseParams = std::variant<GenGammaParams, GammaParams, WeibullParams, LogNormalParams>;

/// Mixture-cure wrapper: with probability p the event never occurs.
struct CureParams {
    double p = 0.0;
    BaseParams base;
};

/// |Q| below this is evaluated with the log-normal limit.
inline constexpr double kGenGammaLogNormalThreshold = 1e-5;

double gengamma_cdf(double t, const GenGammaParams& params);
double gengamma_survival(double t, const GenGammaParams& params);
double gengamma_logpdf(double t, const GenGammaParams& params);
double cure_cdf(double t, const CureParams& cure);

namespace detail {
// Three-branch formula without the small-|Q| switch. Used to test continuity at Q = 0.
double gengamma_cdf_prentice(double t, const GenGammaParams& params);
double lognormal_cdf(double t, double meanlog, double sdlog);
}  // namespace detail

/// A fully resolved time-to-event distribution, optionally cure-wrapped.
/// Value type; all members are pure.
class Distribution {
public:
    Distribution() = default;
    explicit Distribution(BaseParams base);
    explicit Distribution(const CureParams& cure);

    /// Degenerate distribution whose event never happens (zero hazard).
    static Distribution never();

    Family family() const;
    const BaseParams& base() const { return base_; }
    bool is_cure() const { return cure_; }
    double cure_probability() const { return cure_ ? p_ : 0.0; }

    double cdf(double t) const;
    double survival(double t) const;
    double log_survival(double t) const;
    double pdf(double t) const;
    double logpdf(double t) const;
    double hazard(double t) const;

    /// Inverse CDF. Returns kNever when u >= 1 - p for a cure distribution.
    double quantile(double u) const;

    /// One draw; kNever for the cured fraction.
    double sample(Rng& rng) const;

    /// Mean of the (uncured) distribution; infinite if it does not exist or the
    /// distribution is cure-wrapped with p > 0.
    double mean() const;

private:
    BaseParams base_{GenGammaParams{}};
    bool cure_ = false;
    double p_ = 0.0;
};

/// Parametric family plus covariate links per parameter.
struct DistributionSpec {
    Family family = Family::GenGamma;
    bool cure = false;
    /// parameter name -> covariate names entering its linear predictor
    std::map<std::string, std::vector<std::string>> links;

    bool operator==(const DistributionSpec&) const = default;
};

/// Short label such as "gengamma-cure[mu:age_group,gender; p:age_group]".
std::string describe(const DistributionSpec& spec);

/// Maps a flat coefficient vector plus one design row to a Distribution.
///
/// Layout: for each parameter (family order, then "p" when cure-wrapped) the
/// baseline coefficient followed by one coefficient per linked design term.
/// Coefficients are on the link scale: identity for unrestricted parameters,
/// log for positive ones, logit for the cure probability.
class LinkedDistribution {
public:
    LinkedDistribution() = default;
    LinkedDistribution(DistributionSpec spec, const CovariateCoding& coding);

    const DistributionSpec& spec() const { return spec_; }
    std::size_t size() const { return names_.size(); }
    const std::vector<std::string>& coefficient_names() const { return names_; }
    const std::vector<Link>& coefficient_links() const { return links_; }
    std::size_t parameter_count() const { return param_names_.size(); }
    const std::vector<std::string>& parameter_names() const { return param_names_; }

    /// Natural-scale parameter values for one design row.
    std::vector<double> natural(std::span<const double> coef, std::span<const double> design) const;
    Distribution resolve(std::span<const double> coef, std::span<const double> design) const;

    /// Coefficients with the given natural baseline values and zero covariate effects.
    std::vector<double> baseline_coefficients(std::span<const double> natural_values) const;

private:
    struct Block {
        Link link;
        std::size_t offset;          // index of the baseline coefficient
        std::vector<std::size_t> terms;  // design indices
    };

    DistributionSpec spec_;
    std::vector<Block> blocks_;
    std::vector<std::string> names_;
    std::vector<Link> links_;
    std::vector<std::string> param_names_;
};

/// Resolve a spec for one covariate profile (free-function form of LinkedDistribution::resolve).
Distribution apply_links(const LinkedDistribution& linked, std::span<const double> coef,
                         std::span<const double> design);

double inverse_logit(double x);
double logit(double p);

}  // namespace msm
