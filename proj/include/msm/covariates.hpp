#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace msm {

/// Raw covariate values of one subject, keyed by column name.
using CovariateValues = std::map<std::string, std::string>;

struct Covariate {
    std::string name;
    bool numeric = false;
    std::vector<std::string> levels;  // sorted; levels[0] is the reference

    bool operator==(const Covariate&) const = default;
};

/// Expands raw covariates into a numeric design row. Categorical covariates
/// become indicators for every level except the lexicographically first.
class CovariateCoding {
public:
    CovariateCoding() = default;
    explicit CovariateCoding(std::vector<Covariate> covariates);

    /// Infer the coding from observed rows: a column is numeric when every
    /// value parses completely as a number.
    static CovariateCoding infer(const std::vector<std::string>& names,
                                 const std::vector<CovariateValues>& rows);

    const std::vector<Covariate>& covariates() const { return covariates_; }
    std::size_t term_count() const { return term_names_.size(); }
    const std::vector<std::string>& term_names() const { return term_names_; }
    bool has(std::string_view name) const;
    const Covariate& covariate(std::string_view name) const;

    /// Design indices of the terms generated by one covariate.
    std::vector<std::size_t> terms_for(std::string_view name) const;

    /// Throws ConfigError naming the valid levels when a value is unknown.
    std::vector<double> encode(const CovariateValues& values) const;

    /// Every combination of categorical levels (numeric covariates are skipped).
    std::vector<CovariateValues> all_profiles() const;

    bool operator==(const CovariateCoding&) const = default;

private:
    std::vector<Covariate> covariates_;
    std::vector<std::string> term_names_;
    std::vector<std::size_t> term_owner_;
};

/// "age_group=85+,gender=M"
std::string profile_label(const CovariateValues& values);

/// Parses "a=x,b=y" into values.
CovariateValues parse_profile(std::string_view text);

}  // namespace msm
