#include "msm/covariates.hpp"

#include <algorithm>
#include <charconv>
#include <set>

#include "msm/errors.hpp"

namespace msm {
namespace {

bool parses_as_number(const std::string& s) {
    if (s.empty()) return false;
    double v = 0.0;
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    return ec == std::errc() && ptr == end;
}

std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t");
    auto e = s.find_last_not_of(" \t");
    if (b == std::string_view::npos) return {};
    return std::string(s.substr(b, e - b + 1));
}

}  // namespace

CovariateCoding::CovariateCoding(std::vector<Covariate> covariates) : covariates_(std::move(covariates)) {
    for (std::size_t c = 0; c < covariates_.size(); ++c) {
        auto& cov = covariates_[c];
        if (cov.numeric) {
            term_names_.push_back(cov.name);
            term_owner_.push_back(c);
            continue;
        }
        std::sort(cov.levels.begin(), cov.levels.end());
        cov.levels.erase(std::unique(cov.levels.begin(), cov.levels.end()), cov.levels.end());
        if (cov.levels.empty()) throw ConfigError("categorical covariate '" + cov.name + "' has no levels");
        for (std::size_t l = 1; l < cov.levels.size(); ++l) {
            term_names_.push_back(cov.name + "=" + cov.levels[l]);
            term_owner_.push_back(c);
        }
    }
}

CovariateCoding CovariateCoding::infer(const std::vector<std::string>& names,
                                       const std::vector<CovariateValues>& rows) {
    std::vector<Covariate> out;
    for (const auto& name : names) {
        Covariate cov{name, true, {}};
        std::set<std::string> levels;
        for (const auto& row : rows) {
            auto it = row.find(name);
            if (it == row.end()) throw ConfigError("row is missing covariate '" + name + "'");
            levels.insert(it->second);
            if (!parses_as_number(it->second)) cov.numeric = false;
        }
        if (rows.empty()) cov.numeric = false;
        if (!cov.numeric) cov.levels.assign(levels.begin(), levels.end());
        out.push_back(std::move(cov));
    }
    return CovariateCoding(std::move(out));
}

bool CovariateCoding::has(std::string_view name) const {
    return std::any_of(covariates_.begin(), covariates_.end(), [&](const Covariate& c) { return c.name == name; });
}

const Covariate& CovariateCoding::covariate(std::string_view name) const {
    for (const auto& c : covariates_)
        if (c.name == name) return c;
    throw ConfigError("unknown covariate '" + std::string(name) + "'");
}

std::vector<std::size_t> CovariateCoding::terms_for(std::string_view name) const {
    std::vector<std::size_t> out;
    bool found = false;
    for (std::size_t c = 0; c < covariates_.size(); ++c) {
        if (covariates_[c].name != name) continue;
        found = true;
        for (std::size_t t = 0; t < term_owner_.size(); ++t)
            if (term_owner_[t] == c) out.push_back(t);
    }
    if (!found) throw ConfigError("link references unknown covariate '" + std::string(name) + "'");
    return out;
}

std::vector<double> CovariateCoding::encode(const CovariateValues& values) const {
    std::vector<double> design(term_names_.size(), 0.0);
    std::size_t term = 0;
    for (const auto& cov : covariates_) {
        auto it = values.find(cov.name);
        if (it == values.end()) throw ConfigError("missing value for covariate '" + cov.name + "'");
        if (cov.numeric) {
            if (!parses_as_number(it->second))
                throw ConfigError("covariate '" + cov.name + "' expects a number, got '" + it->second + "'");
            design[term++] = std::stod(it->second);
            continue;
        }
        auto pos = std::find(cov.levels.begin(), cov.levels.end(), it->second);
        if (pos == cov.levels.end()) {
            std::string valid;
            for (const auto& l : cov.levels) valid += (valid.empty() ? "" : ", ") + l;
            throw ConfigError("unknown level '" + it->second + "' for covariate '" + cov.name +
                              "' (valid levels: " + valid + ")");
        }
        const auto level = static_cast<std::size_t>(pos - cov.levels.begin());
        if (level > 0) design[term + level - 1] = 1.0;
        term += cov.levels.size() - 1;
    }
    return design;
}

std::vector<CovariateValues> CovariateCoding::all_profiles() const {
    std::vector<CovariateValues> out{CovariateValues{}};
    for (const auto& cov : covariates_) {
        if (cov.numeric) continue;
        std::vector<CovariateValues> next;
        for (const auto& partial : out)
            for (const auto& level : cov.levels) {
                auto p = partial;
                p[cov.name] = level;
                next.push_back(std::move(p));
            }
        out = std::move(next);
    }
    return out;
}

std::string profile_label(const CovariateValues& values) {
    std::string out;
    for (const auto& [k, v] : values) out += (out.empty() ? "" : ",") + k + "=" + v;
    return out.empty() ? "(all)" : out;
}

CovariateValues parse_profile(std::string_view text) {
    CovariateValues out;
    while (!text.empty()) {
        auto comma = text.find(',');
        auto item = text.substr(0, comma);
        auto eq = item.find('=');
        if (eq == std::string_view::npos) throw ConfigError("profile item '" + std::string(item) + "' is not name=value");
        out[trim(item.substr(0, eq))] = trim(item.substr(eq + 1));
        if (comma == std::string_view::npos) break;
        text.remove_prefix(comma + 1);
    }
    return out;
}

}  // namespace msm
