#include "msm/synthdata.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>

#include "msm/errors.hpp"

namespace msm {
namespace {

const std::vector<std::string> kCovariateNames{"age_group", "gender"};

CovariateCoding default_coding() {
    return CovariateCoding({Covariate{"age_group", false, {"<45", "45-64", "65-74", "75-84", "85+"}},
                            Covariate{"gender", false, {"F", "M"}}});
}

ModelContext default_context() {
    ModelContext ctx;
    ctx.structure = hospital_icu_structure();
    ctx.coding = default_coding();
    ctx.covariate_names = kCovariateNames;
    ctx.max_time = 140.0;
    return ctx;
}

DistributionSpec spec(Family family, bool cure, std::map<std::string, std::vector<std::string>> links = {}) {
    return DistributionSpec{family, cure, std::move(links)};
}

const std::vector<std::string> kAll{"age_group", "gender"};

std::string format_time(double t) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, t);
    (void)ec;
    return std::string(buf, ptr);
}

std::string subject_id(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "S%06zu", i + 1);
    return buf;
}

std::size_t draw_index(const std::vector<double>& probs, double u) {
    double cum = 0.0;
    for (std::size_t j = 0; j + 1 < probs.size(); ++j) {
        cum += probs[j];
        if (u < cum) return j;
    }
    return probs.size() - 1;
}

SynthSubject simulate_subject(const SynthConfig& config, std::size_t i,
                              const std::map<std::string, ProfileModel>& models) {
    Rng rng = make_stream(config.seed, "simulate", i);
    SynthSubject s;
    s.id = subject_id(i);
    for (const auto& c : config.covariates) s.covariates[c.name] = c.levels[draw_index(c.probs, uniform_open(rng))];
    const auto& pm = models.at(profile_label(s.covariates));
    s.pathway = simulate_pathway(pm, pm.structure->initial_state(), rng);
    const double u_extract = uniform_open(rng);
    const double u_unknown = uniform_open(rng);
    s.extraction = config.censoring
                       ? config.extraction_min + (config.extraction_max - config.extraction_min) * u_extract
                       : std::numeric_limits<double>::infinity();
    if (config.censoring) {
        const auto& st = *pm.structure;
        const bool died = s.pathway.absorbed && s.pathway.final_state == st.death_state() &&
                          s.pathway.total_time <= s.extraction;
        s.unknown_outcome = !died && u_unknown < config.status3_fraction;
    }
    return s;
}

void emit_rows(const SynthSubject& s, const ModelStructure& st, std::vector<RawRow>& out) {
    const auto& p = s.pathway;
    int state = st.initial_state();
    double entry = 0.0;
    for (std::size_t k = 0; k < p.stages; ++k) {
        const auto& tr = st.transitions()[static_cast<std::size_t>(p.transitions[k])];
        const double exit = entry + p.times[k];
        const bool observed = exit <= s.extraction;
        const bool dropped = s.unknown_outcome && tr.to == st.discharge_state();
        if (!observed || dropped) break;
        out.push_back({s.id, st.state_name(tr.from), st.state_name(tr.to), format_time(p.times[k]), "1", s.covariates});
        state = tr.to;
        entry = exit;
    }
    if (st.is_absorbing(state)) return;
    const double horizon = std::isfinite(s.extraction) ? s.extraction : entry + 1000.0;
    out.push_back({s.id, st.state_name(state), "", format_time(horizon - entry), s.unknown_outcome ? "3" : "2",
                   s.covariates});
}

std::map<std::string, ProfileModel> profile_models(const SynthConfig& config) {
    const auto& ctx = context_of(config.truth);
    std::map<std::string, ProfileModel> out;
    std::vector<std::size_t> idx(config.covariates.size(), 0);
    while (true) {
        CovariateValues v;
        for (std::size_t k = 0; k < idx.size(); ++k) v[config.covariates[k].name] = config.covariates[k].levels[idx[k]];
        out.emplace(profile_label(v), profile_model(config.truth, ctx.coding.encode(v)));
        std::size_t k = idx.size();
        while (k > 0 && ++idx[k - 1] == config.covariates[k - 1].levels.size()) idx[--k] = 0;
        if (k == 0) break;
    }
    return out;
}

}  // namespace

std::vector<double> coefficients_from_names(const std::vector<std::string>& names,
                                            const std::map<std::string, double>& values, const std::string& what) {
    std::vector<double> out(names.size(), 0.0);
    std::size_t used = 0;
    for (std::size_t i = 0; i < names.size(); ++i) {
        const auto it = values.find(names[i]);
        if (it != values.end()) {
            out[i] = it->second;
            ++used;
        } else if (names[i].find(':') == std::string::npos) {
            throw ConfigError(what + ": missing baseline coefficient '" + names[i] + "'");
        }
    }
    if (used != values.size()) {
        for (const auto& [name, v] : values)
            if (std::find(names.begin(), names.end(), name) == names.end())
                throw ConfigError(what + ": unknown coefficient '" + name + "'");
    }
    return out;
}

void validate_synth_config(const SynthConfig& config) {
    if (config.n == 0) throw ConfigError("synthetic dataset needs at least one subject");
    if (!(config.status3_fraction >= 0.0 && config.status3_fraction <= 1.0))
        throw ConfigError("status3_fraction must lie in [0, 1]");
    if (!(config.extraction_min >= 0.0 && config.extraction_max >= config.extraction_min))
        throw ConfigError("extraction window must satisfy 0 <= min <= max");
    const auto& coding = context_of(config.truth).coding;
    for (const auto& c : config.covariates) {
        if (c.levels.empty() || c.levels.size() != c.probs.size())
            throw ConfigError("covariate '" + c.name + "' needs one probability per level");
        double total = 0.0;
        for (double p : c.probs) {
            if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("covariate '" + c.name + "' has a probability outside [0, 1]");
            total += p;
        }
        if (std::abs(total - 1.0) > 1e-9) throw ConfigError("probabilities of covariate '" + c.name + "' must sum to 1");
        if (!coding.has(c.name)) throw ConfigError("covariate '" + c.name + "' unknown to the truth model");
        CovariateValues v;
        for (const auto& l : c.levels) {
            v[c.name] = l;
            (void)coding.covariate(c.name);
            const auto& levels = coding.covariate(c.name).levels;
            if (!coding.covariate(c.name).numeric && std::find(levels.begin(), levels.end(), l) == levels.end())
                throw ConfigError("level '" + l + "' of covariate '" + c.name + "' unknown to the truth model");
        }
    }
    for (const auto& name : context_of(config.truth).covariate_names) {
        bool found = false;
        for (const auto& c : config.covariates) found |= c.name == name;
        if (!found) throw ConfigError("no distribution given for covariate '" + name + "'");
    }
}

SynthResult generate(const SynthConfig& config, Exec exec) {
    validate_synth_config(config);
    const auto models = profile_models(config);
    SynthResult out;
    out.subjects.resize(config.n);
    for_each_index(exec, config.n, [&](std::size_t i) { out.subjects[i] = simulate_subject(config, i, models); });
    const auto& st = context_of(config.truth).structure;
    for (const auto& s : out.subjects) emit_rows(s, st, out.rows);
    return out;
}

SynthSubject replay_subject(const SynthConfig& config, std::size_t index) {
    validate_synth_config(config);
    return simulate_subject(config, index, profile_models(config));
}

std::vector<CovariateDistribution> default_covariates() {
    return {CovariateDistribution{"age_group", {"<45", "45-64", "65-74", "75-84", "85+"}, {0.12, 0.28, 0.2, 0.22, 0.18}},
            CovariateDistribution{"gender", {"F", "M"}, {0.43, 0.57}}};
}

CshModelSpec default_csh_truth_spec() {
    return CshModelSpec{{
        spec(Family::LogNormal, true, {{"p", kAll}}),                     // Hospital->ICU
        spec(Family::GenGamma, true, {{"mu", kAll}, {"p", kAll}}),        // Hospital->Death
        spec(Family::GenGamma, false, {{"mu", kAll}, {"sigma", kAll}}),   // Hospital->Discharge
        spec(Family::GenGamma, true, {{"mu", kAll}, {"p", kAll}}),        // ICU->Death
        spec(Family::GenGamma, false, {{"mu", kAll}}),                    // ICU->Discharge
    }};
}

CshFit default_csh_truth() {
    const auto ctx = default_context();
    const auto s = default_csh_truth_spec();
    const std::vector<std::map<std::string, double>> values{
        {{"meanlog", 0.6}, {"sdlog", std::log(0.7)}, {"p", 0.75},
         {"p:age_group=<45", 0.2}, {"p:age_group=65-74", 0.4}, {"p:age_group=75-84", 1.2},
         {"p:age_group=85+", 2.2}, {"p:gender=M", -0.3}},
        {{"mu", 2.0}, {"sigma", std::log(0.35)}, {"Q", 0.3}, {"p", 1.3},
         {"mu:age_group=<45", 0.1}, {"mu:age_group=85+", -0.2}, {"mu:gender=M", -0.05},
         {"p:age_group=<45", 1.0}, {"p:age_group=65-74", -0.8}, {"p:age_group=75-84", -1.5},
         {"p:age_group=85+", -2.0}, {"p:gender=M", -0.35}},
        {{"mu", 2.0}, {"sigma", std::log(0.9)}, {"Q", 0.2},
         {"mu:age_group=<45", -0.3}, {"mu:age_group=65-74", 0.15}, {"mu:age_group=75-84", 0.3},
         {"mu:age_group=85+", 0.35}, {"mu:gender=M", 0.05},
         {"sigma:age_group=<45", -0.1}, {"sigma:age_group=85+", 0.1}},
        {{"mu", 2.3}, {"sigma", std::log(0.4)}, {"Q", 0.5}, {"p", -0.6},
         {"mu:age_group=<45", 0.1}, {"mu:age_group=85+", -0.2},
         {"p:age_group=<45", 0.8}, {"p:age_group=65-74", -0.7}, {"p:age_group=75-84", -1.2},
         {"p:age_group=85+", -1.5}, {"p:gender=M", -0.2}},
        {{"mu", 2.6}, {"sigma", std::log(0.8)}, {"Q", 0.3},
         {"mu:age_group=<45", -0.2}, {"mu:age_group=65-74", 0.1}, {"mu:age_group=75-84", 0.1}, {"mu:gender=M", 0.05}},
    };
    std::vector<std::vector<double>> coef;
    for (std::size_t k = 0; k < s.transitions.size(); ++k) {
        const LinkedDistribution ld(s.transitions[k], ctx.coding);
        coef.push_back(coefficients_from_names(ld.coefficient_names(), values[k], ctx.structure.transition_label(static_cast<int>(k))));
    }
    return make_csh_model(ctx, s, coef);
}

MixtureFit default_mixture_truth() {
    const auto ctx = default_context();
    MixtureModelSpec s;
    s.transitions = {
        spec(Family::LogNormal, false),
        spec(Family::GenGamma, false, {{"mu", {"age_group"}}}),
        spec(Family::GenGamma, false, {{"mu", {"age_group"}}}),
        spec(Family::GenGamma, false),
        spec(Family::GenGamma, false),
    };
    const std::map<std::string, std::map<std::string, double>> values{
        {"Hospital",
         {{"pi:ICU", std::log(0.35 / 0.5)}, {"pi:Death", std::log(0.15 / 0.5)},
          {"0:meanlog", 0.5}, {"0:sdlog", std::log(0.6)},
          {"1:mu", 2.0}, {"1:sigma", std::log(0.8)}, {"1:Q", 0.4}, {"1:mu:age_group=<45", 0.2}, {"1:mu:age_group=85+", -0.2},
          {"2:mu", 2.1}, {"2:sigma", std::log(0.85)}, {"2:Q", 0.2}, {"2:mu:age_group=<45", -0.3},
          {"2:mu:age_group=75-84", 0.2}, {"2:mu:age_group=85+", 0.3}}},
        {"ICU",
         {{"pi:Death", std::log(0.4 / 0.6)},
          {"0:mu", 2.0}, {"0:sigma", std::log(0.8)}, {"0:Q", 0.5},
          {"1:mu", 2.6}, {"1:sigma", std::log(0.7)}, {"1:Q", 0.3}}},
    };
    std::map<std::string, std::vector<double>> coef;
    for (int r : ctx.structure.transient_states()) {
        const auto sub = mixture_submodel(ctx.structure, r, s, ctx.coding);
        const auto& name = ctx.structure.state_name(r);
        coef[name] = coefficients_from_names(sub.coefficient_names(), values.at(name), "mixture " + name);
    }
    return make_mixture_model(ctx, s, coef);
}

SynthConfig default_synth_config(std::size_t n, std::uint64_t seed) {
    SynthConfig c;
    c.n = n;
    c.seed = seed;
    c.truth = default_csh_truth();
    c.covariates = default_covariates();
    return c;
}

SynthConfig mixture_synth_config(std::size_t n, std::uint64_t seed) {
    SynthConfig c = default_synth_config(n, seed);
    c.truth = default_mixture_truth();
    return c;
}

}  // namespace msm
