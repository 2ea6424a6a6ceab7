#include "msm/dist.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "msm/errors.hpp"

namespace msm {
namespace {

using DoublePolicy = boost::math::policies::policy<boost::math::policies::promote_double<false>>;

constexpr double kLogSqrt2Pi = 0.91893853320467274178;

double gamma_p(double a, double x) { return boost::math::gamma_p(a, x, DoublePolicy()); }
double gamma_q(double a, double x) { return boost::math::gamma_q(a, x, DoublePolicy()); }

double norm_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double norm_quantile(double u) {
    return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * u, DoublePolicy());
}

void check_time(double t) {
    if (!(t > 0.0) || std::isnan(t)) throw std::domain_error("time must be positive");
}

void check_positive(double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) throw std::domain_error(std::string(what) + " must be positive and finite");
}

// a*log(a) - a - lgamma(a), stable for large a.
double gamma_normalizer(double a) {
    if (a < 10.0) return a * std::log(a) - a - std::lgamma(a);
    // Stirling: lgamma(a) = (a - 1/2) log a - a + log sqrt(2 pi) + eps(a)
    const double r = 1.0 / a;
    const double r2 = r * r;
    const double eps =
        r * (1.0 / 12 - r2 * (1.0 / 360 - r2 * (1.0 / 1260 - r2 * (1.0 / 1680 - r2 * (1.0 / 1188 - r2 * 691.0 / 360360)))));
    return 0.5 * std::log(a) - kLogSqrt2Pi - eps;
}

bool near_lognormal(const GenGammaParams& p) { return std::abs(p.q) < kGenGammaLogNormalThreshold; }

void check(const GenGammaParams& p) {
    check_positive(p.sigma, "gengamma sigma");
    if (!std::isfinite(p.mu) || !std::isfinite(p.q)) throw std::domain_error("gengamma mu and Q must be finite");
}

// --- per-family kernels ---------------------------------------------------

double base_cdf(double t, const BaseParams& base);
double base_survival(double t, const BaseParams& base);

struct CdfVisitor {
    double t;
    double operator()(const GenGammaParams& p) const { return gengamma_cdf(t, p); }
    double operator()(const GammaParams& p) const { return gamma_p(p.shape, p.rate * t); }
    double operator()(const WeibullParams& p) const { return -std::expm1(-std::pow(t / p.scale, p.shape)); }
    double operator()(const LogNormalParams& p) const { return detail::lognormal_cdf(t, p.meanlog, p.sdlog); }
};

struct SurvivalVisitor {
    double t;
    double operator()(const GenGammaParams& p) const { return gengamma_survival(t, p); }
    double operator()(const GammaParams& p) const { return gamma_q(p.shape, p.rate * t); }
    double operator()(const WeibullParams& p) const { return std::exp(-std::pow(t / p.scale, p.shape)); }
    double operator()(const LogNormalParams& p) const {
        return norm_cdf(-(std::log(t) - p.meanlog) / p.sdlog);
    }
};

struct LogSurvivalVisitor {
    double t;
    double operator()(const WeibullParams& p) const { return -std::pow(t / p.scale, p.shape); }
    template <class P>
    double operator()(const P& p) const {
        return std::log(SurvivalVisitor{t}(p));
    }
};

struct LogPdfVisitor {
    double t;
    double operator()(const GenGammaParams& p) const { return gengamma_logpdf(t, p); }
    double operator()(const GammaParams& p) const {
        return p.shape * std::log(p.rate) + (p.shape - 1.0) * std::log(t) - p.rate * t - std::lgamma(p.shape);
    }
    double operator()(const WeibullParams& p) const {
        const double z = t / p.scale;
        return std::log(p.shape / p.scale) + (p.shape - 1.0) * std::log(z) - std::pow(z, p.shape);
    }
    double operator()(const LogNormalParams& p) const {
        const double w = (std::log(t) - p.meanlog) / p.sdlog;
        return -0.5 * w * w - kLogSqrt2Pi - std::log(p.sdlog) - std::log(t);
    }
};

struct ValidateVisitor {
    void operator()(const GenGammaParams& p) const { check(p); }
    void operator()(const GammaParams& p) const {
        check_positive(p.shape, "gamma shape");
        check_positive(p.rate, "gamma rate");
    }
    void operator()(const WeibullParams& p) const {
        check_positive(p.shape, "weibull shape");
        check_positive(p.scale, "weibull scale");
    }
    void operator()(const LogNormalParams& p) const {
        check_positive(p.sdlog, "lognormal sdlog");
        if (!std::isfinite(p.meanlog)) throw std::domain_error("lognormal meanlog must be finite");
    }
};

// Median-ish starting point on the log-time scale for quantile bracketing.
struct LogMedianGuess {
    double operator()(const GenGammaParams& p) const { return p.mu; }
    double operator()(const GammaParams& p) const { return std::log(std::max(p.shape - 1.0 / 3.0, 0.1) / p.rate); }
    double operator()(const WeibullParams& p) const { return std::log(p.scale); }
    double operator()(const LogNormalParams& p) const { return p.meanlog; }
};

struct SampleVisitor {
    Rng& rng;
    double operator()(const GenGammaParams& p) const {
        if (near_lognormal(p)) return std::exp(p.mu + p.sigma * std::normal_distribution<double>()(rng));
        // a * exp(Q w) ~ Gamma(1/Q^2, 1) for either sign of Q.
        const double a = 1.0 / (p.q * p.q);
        const double g = std::gamma_distribution<double>(a, 1.0)(rng);
        const double w = std::log(g / a) / p.q;
        return std::exp(p.mu + p.sigma * w);
    }
    double operator()(const GammaParams& p) const { return std::gamma_distribution<double>(p.shape, 1.0 / p.rate)(rng); }
    double operator()(const WeibullParams& p) const {
        return p.scale * std::pow(-std::log(uniform_open(rng)), 1.0 / p.shape);
    }
    double operator()(const LogNormalParams& p) const {
        return std::exp(p.meanlog + p.sdlog * std::normal_distribution<double>()(rng));
    }
};

struct MeanVisitor {
    double operator()(const GenGammaParams& p) const {
        if (near_lognormal(p)) return std::exp(p.mu + 0.5 * p.sigma * p.sigma);
        // T = e^mu (G/a)^(sigma/Q), G ~ Gamma(a, 1)
        const double a = 1.0 / (p.q * p.q);
        const double c = p.sigma / p.q;
        if (a + c <= 0.0) return std::numeric_limits<double>::infinity();
        return std::exp(p.mu - c * std::log(a) + std::lgamma(a + c) - std::lgamma(a));
    }
    double operator()(const GammaParams& p) const { return p.shape / p.rate; }
    double operator()(const WeibullParams& p) const { return p.scale * std::tgamma(1.0 + 1.0 / p.shape); }
    double operator()(const LogNormalParams& p) const { return std::exp(p.meanlog + 0.5 * p.sdlog * p.sdlog); }
};

double base_cdf(double t, const BaseParams& base) { return std::visit(CdfVisitor{t}, base); }
double base_survival(double t, const BaseParams& base) { return std::visit(SurvivalVisitor{t}, base); }

// Safeguarded Newton on y = log t, bracket grown by doubling from the median guess.
double base_quantile(double u, const BaseParams& base) {
    if (const auto* w = std::get_if<WeibullParams>(&base))
        return w->scale * std::pow(-std::log1p(-u), 1.0 / w->shape);
    if (const auto* ln = std::get_if<LogNormalParams>(&base))
        return std::exp(ln->meanlog + ln->sdlog * norm_quantile(u));

    const double y0 = std::visit(LogMedianGuess{}, base);
    auto excess = [&](double y) { return base_cdf(std::exp(y), base) - u; };

    double lo = y0 - 1.0, hi = y0 + 1.0;
    double flo = excess(lo), fhi = excess(hi);
    for (double step = 2.0; flo > 0.0; step *= 2.0) {
        lo = y0 - step;
        flo = excess(lo);
        if (step > 1e4) throw NumericalError("quantile bracket failed (lower)");
    }
    for (double step = 2.0; fhi < 0.0; step *= 2.0) {
        hi = y0 + step;
        fhi = excess(hi);
        if (step > 1e4) throw NumericalError("quantile bracket failed (upper)");
    }

    double y = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        const double fy = excess(y);
        if (fy == 0.0) return std::exp(y);
        if (fy < 0.0) lo = y;
        else hi = y;
        const double t = std::exp(y);
        const double dens = std::exp(std::visit(LogPdfVisitor{t}, base)) * t;  // dF/dy
        double next = (dens > 0.0 && std::isfinite(dens)) ? y - fy / dens : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        const double step = std::abs(next - y);
        y = next;
        if (step < 1e-10 * std::max(1.0, std::abs(y)) || hi - lo < 1e-14) break;
    }
    return std::exp(y);
}

}  // namespace

// --- names ---------------------------------------------------------------

std::string_view family_name(Family family) {
    switch (family) {
        case Family::GenGamma: return "gengamma";
        case Family::Gamma: return "gamma";
        case Family::Weibull: return "weibull";
        case Family::LogNormal: return "lognormal";
    }
    return "?";
}

Family parse_family(std::string_view name) {
    if (name == "gengamma") return Family::GenGamma;
    if (name == "gamma") return Family::Gamma;
    if (name == "weibull") return Family::Weibull;
    if (name == "lognormal") return Family::LogNormal;
    throw ConfigError("unknown distribution family '" + std::string(name) +
                      "' (expected gengamma, gamma, weibull or lognormal)");
}

std::string_view link_name(Link link) {
    switch (link) {
        case Link::Identity: return "identity";
        case Link::Log: return "log";
        case Link::Logit: return "logit";
    }
    return "?";
}

const std::vector<std::string>& parameter_names(Family family) {
    static const std::vector<std::string> gengamma{"mu", "sigma", "Q"};
    static const std::vector<std::string> gamma{"shape", "rate"};
    static const std::vector<std::string> weibull{"shape", "scale"};
    static const std::vector<std::string> lognormal{"meanlog", "sdlog"};
    switch (family) {
        case Family::GenGamma: return gengamma;
        case Family::Gamma: return gamma;
        case Family::Weibull: return weibull;
        case Family::LogNormal: return lognormal;
    }
    return gengamma;
}

Link parameter_link(Family family, std::size_t index) {
    switch (family) {
        case Family::GenGamma: return index == 1 ? Link::Log : Link::Identity;
        case Family::Gamma:
        case Family::Weibull: return Link::Log;
        case Family::LogNormal: return index == 1 ? Link::Log : Link::Identity;
    }
    return Link::Identity;
}

double inverse_logit(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double logit(double p) { return std::log(p) - std::log1p(-p); }

// --- generalized gamma ----------------------------------------------------

double detail::lognormal_cdf(double t, double meanlog, double sdlog) {
    return norm_cdf((std::log(t) - meanlog) / sdlog);
}

double detail::gengamma_cdf_prentice(double t, const GenGammaParams& p) {
    check_time(t);
    check(p);
    if (p.q == 0.0) return lognormal_cdf(t, p.mu, p.sigma);
    const double w = (std::log(t) - p.mu) / p.sigma;
    const double a = 1.0 / (p.q * p.q);
    const double u = a * std::exp(p.q * w);
    return p.q > 0.0 ? gamma_p(a, u) : gamma_q(a, u);
}

double gengamma_cdf(double t, const GenGammaParams& p) {
    check_time(t);
    check(p);
    if (near_lognormal(p)) return detail::lognormal_cdf(t, p.mu, p.sigma);
    return detail::gengamma_cdf_prentice(t, p);
}

double gengamma_survival(double t, const GenGammaParams& p) {
    check_time(t);
    check(p);
    const double w = (std::log(t) - p.mu) / p.sigma;
    if (near_lognormal(p)) return norm_cdf(-w);
    const double a = 1.0 / (p.q * p.q);
    const double u = a * std::exp(p.q * w);
    return p.q > 0.0 ? gamma_q(a, u) : gamma_p(a, u);
}

double gengamma_logpdf(double t, const GenGammaParams& p) {
    check_time(t);
    check(p);
    const double logt = std::log(t);
    const double w = (logt - p.mu) / p.sigma;
    if (near_lognormal(p)) return -0.5 * w * w - kLogSqrt2Pi - std::log(p.sigma) - logt;
    const double a = 1.0 / (p.q * p.q);
    const double qw = p.q * w;
    // a log a + a (Qw - e^{Qw}) - lgamma(a), rearranged to avoid cancellation for large a
    const double kernel = gamma_normalizer(a) - a * (std::expm1(qw) - qw);
    return kernel + std::log(std::abs(p.q)) - std::log(p.sigma) - logt;
}

double cure_cdf(double t, const CureParams& cure) {
    check_time(t);
    if (!(cure.p >= 0.0 && cure.p <= 1.0)) throw std::domain_error("cure probability must lie in [0, 1]");
    std::visit(ValidateVisitor{}, cure.base);
    return (1.0 - cure.p) * base_cdf(t, cure.base);
}

// --- Distribution -----------------------------------------------------------

Distribution::Distribution(BaseParams base) : base_(base) { std::visit(ValidateVisitor{}, base_); }

Distribution::Distribution(const CureParams& cure) : base_(cure.base), cure_(true), p_(cure.p) {
    if (!(cure.p >= 0.0 && cure.p <= 1.0)) throw std::domain_error("cure probability must lie in [0, 1]");
    std::visit(ValidateVisitor{}, base_);
}

Distribution Distribution::never() { return Distribution(CureParams{1.0, WeibullParams{1.0, 1.0}}); }

Family Distribution::family() const {
    switch (base_.index()) {
        case 0: return Family::GenGamma;
        case 1: return Family::Gamma;
        case 2: return Family::Weibull;
        default: return Family::LogNormal;
    }
}

double Distribution::cdf(double t) const {
    check_time(t);
    if (cure_ && p_ == 1.0) return 0.0;
    const double f = base_cdf(t, base_);
    return cure_ ? (1.0 - p_) * f : f;
}

double Distribution::survival(double t) const {
    check_time(t);
    if (cure_ && p_ == 1.0) return 1.0;
    const double s = base_survival(t, base_);
    return cure_ ? p_ + (1.0 - p_) * s : s;
}

double Distribution::log_survival(double t) const {
    check_time(t);
    if (!cure_ || p_ == 0.0) return std::visit(LogSurvivalVisitor{t}, base_);
    if (p_ == 1.0) return 0.0;
    return std::log(p_ + (1.0 - p_) * base_survival(t, base_));
}

double Distribution::logpdf(double t) const {
    check_time(t);
    if (cure_ && p_ == 1.0) return -std::numeric_limits<double>::infinity();
    const double lp = std::visit(LogPdfVisitor{t}, base_);
    return cure_ ? std::log1p(-p_) + lp : lp;
}

double Distribution::pdf(double t) const { return std::exp(logpdf(t)); }

double Distribution::hazard(double t) const {
    check_time(t);
    if (cure_ && p_ == 1.0) return 0.0;
    const double h = std::exp(logpdf(t) - log_survival(t));
    return std::isfinite(h) ? h : std::numeric_limits<double>::max();
}

double Distribution::quantile(double u) const {
    if (!(u > 0.0 && u < 1.0)) throw std::domain_error("quantile probability must lie in (0, 1)");
    if (cure_) {
        if (u >= 1.0 - p_) return kNever;
        return base_quantile(u / (1.0 - p_), base_);
    }
    return base_quantile(u, base_);
}

double Distribution::sample(Rng& rng) const {
    if (cure_) {
        if (p_ >= 1.0) return kNever;
        if (p_ > 0.0 && uniform_open(rng) < p_) return kNever;
    }
    return std::visit(SampleVisitor{rng}, base_);
}

double Distribution::mean() const {
    if (cure_ && p_ > 0.0) return std::numeric_limits<double>::infinity();
    return std::visit(MeanVisitor{}, base_);
}

// --- covariate links --------------------------------------------------------

std::string describe(const DistributionSpec& spec) {
    std::string out(family_name(spec.family));
    if (spec.cure) out += "-cure";
    std::string links;
    for (const auto& [param, covs] : spec.links) {
        if (covs.empty()) continue;
        links += (links.empty() ? "" : "; ") + param + ":";
        for (std::size_t i = 0; i < covs.size(); ++i) links += (i ? "," : "") + covs[i];
    }
    if (!links.empty()) out += "[" + links + "]";
    return out;
}

LinkedDistribution::LinkedDistribution(DistributionSpec spec, const CovariateCoding& coding) : spec_(std::move(spec)) {
    param_names_ = msm::parameter_names(spec_.family);
    if (spec_.cure) param_names_.push_back("p");
    for (const auto& [param, covs] : spec_.links) {
        if (std::find(param_names_.begin(), param_names_.end(), param) == param_names_.end())
            throw ConfigError("link on unknown parameter '" + param + "' for " + describe(spec_));
        (void)covs;
    }
    for (std::size_t j = 0; j < param_names_.size(); ++j) {
        const auto& pname = param_names_[j];
        Block block;
        block.link = (spec_.cure && j + 1 == param_names_.size()) ? Link::Logit : parameter_link(spec_.family, j);
        block.offset = names_.size();
        names_.push_back(pname);
        links_.push_back(block.link);
        if (auto it = spec_.links.find(pname); it != spec_.links.end()) {
            for (const auto& cov : it->second) {
                for (auto term : coding.terms_for(cov)) {
                    block.terms.push_back(term);
                    names_.push_back(pname + ":" + coding.term_names()[term]);
                    links_.push_back(block.link);
                }
            }
        }
        blocks_.push_back(std::move(block));
    }
}

std::vector<double> LinkedDistribution::natural(std::span<const double> coef, std::span<const double> design) const {
    if (coef.size() != names_.size()) throw ConfigError("coefficient vector has wrong length for " + describe(spec_));
    std::vector<double> out;
    out.reserve(blocks_.size());
    for (const auto& b : blocks_) {
        double eta = coef[b.offset];
        for (std::size_t k = 0; k < b.terms.size(); ++k) eta += coef[b.offset + 1 + k] * design[b.terms[k]];
        switch (b.link) {
            case Link::Identity: out.push_back(eta); break;
            case Link::Log: out.push_back(std::exp(eta)); break;
            case Link::Logit: out.push_back(inverse_logit(eta)); break;
        }
    }
    return out;
}

Distribution LinkedDistribution::resolve(std::span<const double> coef, std::span<const double> design) const {
    const auto v = natural(coef, design);
    BaseParams base;
    switch (spec_.family) {
        case Family::GenGamma: base = GenGammaParams{v[0], v[1], v[2]}; break;
        case Family::Gamma: base = GammaParams{v[0], v[1]}; break;
        case Family::Weibull: base = WeibullParams{v[0], v[1]}; break;
        case Family::LogNormal: base = LogNormalParams{v[0], v[1]}; break;
    }
    if (spec_.cure) return Distribution(CureParams{v.back(), base});
    return Distribution(base);
}

std::vector<double> LinkedDistribution::baseline_coefficients(std::span<const double> natural_values) const {
    if (natural_values.size() != blocks_.size()) throw ConfigError("baseline values have wrong length");
    std::vector<double> coef(names_.size(), 0.0);
    for (std::size_t j = 0; j < blocks_.size(); ++j) {
        const double v = natural_values[j];
        switch (blocks_[j].link) {
            case Link::Identity: coef[blocks_[j].offset] = v; break;
            case Link::Log: coef[blocks_[j].offset] = std::log(v); break;
            case Link::Logit: coef[blocks_[j].offset] = logit(v); break;
        }
    }
    return coef;
}

Distribution apply_links(const LinkedDistribution& linked, std::span<const double> coef,
                         std::span<const double> design) {
    return linked.resolve(coef, design);
}

}  // namespace msm
