#pragma once

#include <string>
#include <variant>

#include "msm/csh.hpp"
#include "msm/mixture.hpp"

namespace msm {

/// Either framework's fitted (or given) model.
using FittedModel = std::variant<CshFit, MixtureFit>;

enum class Framework { Csh, Mixture };

std::string framework_name(Framework framework);
Framework parse_framework(std::string_view name);
Framework framework_of(const FittedModel& model);

const ModelContext& context_of(const FittedModel& model);
double loglik_of(const FittedModel& model);
int parameter_count(const FittedModel& model);
double aic_of(const FittedModel& model);
Eigen::VectorXd coefficients_of(const FittedModel& model);
Eigen::MatrixXd covariance_of(const FittedModel& model);
FittedModel with_coefficients(const FittedModel& model, const Eigen::VectorXd& coef);

/// Log-likelihood contribution of each observation under the model.
std::vector<double> observation_logliks(const FittedModel& model, const Dataset& data);

}  // namespace msm
