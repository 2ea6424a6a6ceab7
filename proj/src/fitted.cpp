#include "msm/fitted.hpp"

#include "msm/errors.hpp"

namespace msm {

std::string framework_name(Framework framework) { return framework == Framework::Csh ? "csh" : "mixture"; }

Framework parse_framework(std::string_view name) {
    if (name == "csh") return Framework::Csh;
    if (name == "mixture") return Framework::Mixture;
    throw ConfigError("unknown framework '" + std::string(name) + "' (expected csh or mixture)");
}

Framework framework_of(const FittedModel& model) {
    return std::holds_alternative<CshFit>(model) ? Framework::Csh : Framework::Mixture;
}

const ModelContext& context_of(const FittedModel& model) {
    return std::visit([](const auto& m) -> const ModelContext& { return m.context; }, model);
}

double loglik_of(const FittedModel& model) {
    return std::visit([](const auto& m) { return m.loglik; }, model);
}

int parameter_count(const FittedModel& model) {
    return std::visit([](const auto& m) { return m.k; }, model);
}

double aic_of(const FittedModel& model) {
    return std::visit([](const auto& m) { return m.aic; }, model);
}

Eigen::VectorXd coefficients_of(const FittedModel& model) {
    return std::visit([](const auto& m) { return m.coefficients(); }, model);
}

Eigen::MatrixXd covariance_of(const FittedModel& model) {
    return std::visit([](const auto& m) { return m.covariance(); }, model);
}

FittedModel with_coefficients(const FittedModel& model, const Eigen::VectorXd& coef) {
    return std::visit([&](const auto& m) -> FittedModel { return m.with_coefficients(coef); }, model);
}

std::vector<double> observation_logliks(const FittedModel& model, const Dataset& data) {
    std::vector<double> out(data.rows.size(), 0.0);
    if (const auto* csh = std::get_if<CshFit>(&model)) {
        std::vector<std::vector<Distribution>> dists;
        for (const auto& z : data.profiles) dists.push_back(csh->resolve(z));
        for (std::size_t i = 0; i < data.rows.size(); ++i) {
            const auto& obs = data.rows[i];
            out[i] = csh_obs_loglik(obs, csh->context.structure, dists[obs.profile],
                                    csh->context.options.status3_censors_all);
        }
        return out;
    }
    const auto& mix = std::get<MixtureFit>(model);
    for (const auto& sub : mix.submodels) {
        std::vector<std::vector<double>> pi;
        std::vector<std::vector<Distribution>> dists;
        for (const auto& z : data.profiles) {
            pi.push_back(sub.probs(z));
            dists.push_back(sub.resolve(z));
        }
        for (std::size_t i = 0; i < data.rows.size(); ++i) {
            const auto& obs = data.rows[i];
            if (obs.from != sub.from()) continue;
            out[i] = mix_obs_loglik(obs, mix.context.structure, sub.membership.transitions(), pi[obs.profile],
                                    dists[obs.profile]);
        }
    }
    return out;
}

}  // namespace msm
