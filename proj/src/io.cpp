#include "msm/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "msm/errors.hpp"

namespace msm {

namespace fs = std::filesystem;

void write_file_atomic(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ConfigError("cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) throw ConfigError("write failed for " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp);
        throw ConfigError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
    }
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Json read_json(const fs::path& path) {
    try {
        return Json::parse(read_file(path));
    } catch (const Json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

std::string dump_json(const Json& j) { return j.dump(2) + "\n"; }

std::string format_double(double v) {
    if (std::isnan(v)) return "";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

namespace {

// --- CSV helpers ---

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_csv_line(const std::string& line, std::size_t lineno) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false, was_quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = was_quoted = true;
        } else if (c == ',') {
            out.push_back(was_quoted ? cur : trim(cur));
            cur.clear();
            was_quoted = false;
        } else {
            cur += c;
        }
    }
    if (quoted) throw DataError("line " + std::to_string(lineno) + ": unterminated quote");
    out.push_back(was_quoted ? cur : trim(cur));
    return out;
}

// --- JSON helpers ---

Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

double number_from(const Json& j) {
    if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
    return j.get<double>();
}

template <class T>
T get_or(const Json& j, const char* key, T fallback) {
    const auto it = j.find(key);
    return it == j.end() || it->is_null() ? fallback : it->get<T>();
}

const Json& require(const Json& j, const char* key, const std::string& where) {
    const auto it = j.find(key);
    if (it == j.end()) throw ConfigError(where + ": missing \"" + key + "\"");
    return *it;
}

Json matrix_to_json(const Eigen::MatrixXd& m) {
    Json out = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(number_or_null(m(i, k)));
        out.push_back(std::move(row));
    }
    return out;
}

Eigen::MatrixXd matrix_from_json(const Json& j, std::size_t n, const std::string& where) {
    const auto N = static_cast<Eigen::Index>(n);
    if (j.is_null()) return Eigen::MatrixXd::Zero(N, N);
    if (!j.is_array() || j.size() != n) throw ConfigError(where + ": covariance must be " + std::to_string(n) + "x" + std::to_string(n));
    Eigen::MatrixXd m(N, N);
    for (std::size_t i = 0; i < n; ++i) {
        if (!j[i].is_array() || j[i].size() != n) throw ConfigError(where + ": covariance row has wrong length");
        for (std::size_t k = 0; k < n; ++k) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = number_from(j[i][k]);
    }
    return m;
}

Json parameter_table(const std::vector<std::string>& names, const std::vector<Link>& links,
                     std::span<const double> coef, const Eigen::MatrixXd& cov) {
    Json out = Json::array();
    for (std::size_t i = 0; i < names.size(); ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        const double var = cov.rows() > ii ? cov(ii, ii) : std::numeric_limits<double>::quiet_NaN();
        out.push_back({{"name", names[i]},
                       {"estimate", number_or_null(coef[i])},
                       {"std_error", number_or_null(var >= 0.0 ? std::sqrt(var) : var)},
                       {"transform", link_name(links[i])}});
    }
    return out;
}

/// Reads either a parameter table or a {"name": value} object.
std::map<std::string, double> named_values(const Json& j, const std::string& where) {
    std::map<std::string, double> out;
    if (j.is_object()) {
        for (const auto& [k, v] : j.items()) out[k] = v.get<double>();
    } else if (j.is_array()) {
        for (const auto& row : j) out[require(row, "name", where).get<std::string>()] = number_from(require(row, "estimate", where));
    } else {
        throw ConfigError(where + ": parameters must be an array or an object");
    }
    return out;
}

const Json& parameters_of(const Json& j, const std::string& where) {
    if (j.contains("parameters")) return j["parameters"];
    if (j.contains("coefficients")) return j["coefficients"];
    throw ConfigError(where + ": missing \"parameters\"");
}

Json coding_to_json(const CovariateCoding& coding) {
    Json out = Json::array();
    for (const auto& c : coding.covariates()) out.push_back({{"name", c.name}, {"numeric", c.numeric}, {"levels", c.levels}});
    return out;
}

CovariateCoding coding_from_json(const Json& j) {
    std::vector<Covariate> covs;
    for (const auto& c : j) {
        Covariate cov;
        cov.name = require(c, "name", "covariate").get<std::string>();
        cov.numeric = get_or(c, "numeric", false);
        cov.levels = get_or(c, "levels", std::vector<std::string>{});
        covs.push_back(std::move(cov));
    }
    return CovariateCoding(std::move(covs));
}

Json context_to_json(const ModelContext& ctx) {
    return {{"structure", structure_to_json(ctx.structure)},
            {"covariates", coding_to_json(ctx.coding)},
            {"data_options", {{"zero_time", ctx.options.zero_time}, {"status3_censors_all", ctx.options.status3_censors_all}}},
            {"max_time", ctx.max_time}};
}

ModelContext context_from_json(const Json& j) {
    ModelContext ctx;
    ctx.structure = j.contains("structure") ? structure_from_json(j["structure"]) : hospital_icu_structure();
    ctx.coding = coding_from_json(get_or(j, "covariates", Json::array()));
    for (const auto& c : ctx.coding.covariates()) ctx.covariate_names.push_back(c.name);
    if (j.contains("data_options")) {
        const auto& o = j["data_options"];
        ctx.options.zero_time = get_or(o, "zero_time", ctx.options.zero_time);
        ctx.options.status3_censors_all = get_or(o, "status3_censors_all", false);
    }
    ctx.max_time = get_or(j, "max_time", 0.0);
    return ctx;
}

std::string mixture_time_name(const ModelStructure& s, const MixtureSubmodelFit& sub, std::size_t j,
                              const std::string& name) {
    const int k = sub.membership.transitions()[j];
    return s.state_name(s.transitions()[static_cast<std::size_t>(k)].to) + ":" + name;
}

std::vector<std::string> mixture_names(const ModelStructure& s, const MixtureSubmodelFit& sub) {
    std::vector<std::string> out;
    for (const auto& n : sub.membership.coefficient_names()) out.push_back("pi:" + n);
    for (std::size_t j = 0; j < sub.times.size(); ++j)
        for (const auto& n : sub.times[j].coefficient_names()) out.push_back(mixture_time_name(s, sub, j, n));
    return out;
}

std::vector<Link> mixture_links(const MixtureSubmodelFit& sub) {
    std::vector<Link> out(sub.membership.size(), Link::Identity);
    for (const auto& t : sub.times) out.insert(out.end(), t.coefficient_links().begin(), t.coefficient_links().end());
    return out;
}

Json csh_to_json(const CshFit& fit) {
    const auto& s = fit.context.structure;
    Json out = context_to_json(fit.context);
    out["framework"] = "csh";
    out["loglik"] = number_or_null(fit.loglik);
    out["k"] = fit.k;
    out["aic"] = number_or_null(fit.aic);
    Json ts = Json::array();
    for (std::size_t k = 0; k < fit.transitions.size(); ++k) {
        const auto& t = fit.transitions[k];
        ts.push_back({{"transition", s.transition_label(static_cast<int>(k))},
                      {"spec", spec_to_json(t.model.spec())},
                      {"events", t.events},
                      {"zero_events", t.zero_events},
                      {"loglik", number_or_null(t.loglik)},
                      {"iterations", t.iterations},
                      {"covariance_repaired", t.covariance_repaired},
                      {"parameters", parameter_table(t.model.coefficient_names(), t.model.coefficient_links(), t.coef, t.covariance)},
                      {"covariance", matrix_to_json(t.covariance)}});
    }
    out["transitions"] = std::move(ts);
    return out;
}

CshFit csh_from_json(const Json& j) {
    const auto ctx = context_from_json(j);
    const auto& s = ctx.structure;
    const auto& ts = require(j, "transitions", "CSH model");
    CshModelSpec spec;
    spec.transitions.resize(s.transition_count());
    std::vector<const Json*> by_k(s.transition_count(), nullptr);
    for (const auto& t : ts) {
        const int k = s.transition_by_label(require(t, "transition", "CSH model").get<std::string>());
        by_k[static_cast<std::size_t>(k)] = &t;
        spec.transitions[static_cast<std::size_t>(k)] = spec_from_json(require(t, "spec", s.transition_label(k)));
    }
    std::vector<std::vector<double>> coefs;
    for (std::size_t k = 0; k < by_k.size(); ++k) {
        const auto label = s.transition_label(static_cast<int>(k));
        if (!by_k[k]) throw ConfigError("CSH model: no entry for transition " + label);
        const LinkedDistribution model(spec.transitions[k], ctx.coding);
        coefs.push_back(get_or(*by_k[k], "zero_events", false)
                            ? std::vector<double>(model.size(), 0.0)
                            : coefficients_from_names(model.coefficient_names(), named_values(parameters_of(*by_k[k], label), label), label));
    }
    CshFit fit = make_csh_model(ctx, spec, coefs);
    fit.loglik = 0.0;
    fit.k = 0;
    for (std::size_t k = 0; k < by_k.size(); ++k) {
        auto& t = fit.transitions[k];
        const auto& jt = *by_k[k];
        t.zero_events = get_or(jt, "zero_events", false);
        t.events = get_or<std::size_t>(jt, "events", 0);
        t.loglik = get_or(jt, "loglik", 0.0);
        t.iterations = get_or(jt, "iterations", 0);
        t.covariance_repaired = get_or(jt, "covariance_repaired", false);
        if (jt.contains("covariance")) t.covariance = matrix_from_json(jt["covariance"], t.coef.size(), s.transition_label(static_cast<int>(k)));
        fit.loglik += t.loglik;
        fit.k += static_cast<int>(t.parameter_count());
    }
    fit.aic = aic(fit.loglik, fit.k);
    return fit;
}

Json mixture_to_json(const MixtureFit& fit) {
    const auto& s = fit.context.structure;
    Json out = context_to_json(fit.context);
    out["framework"] = "mixture";
    out["loglik"] = number_or_null(fit.loglik);
    out["k"] = fit.k;
    out["aic"] = number_or_null(fit.aic);
    out["spec"] = mixture_spec_to_json(fit.spec, s);
    Json subs = Json::array();
    for (const auto& sub : fit.submodels) {
        Json dests = Json::array();
        for (int k : sub.membership.transitions()) dests.push_back(s.state_name(s.transitions()[static_cast<std::size_t>(k)].to));
        subs.push_back({{"from", s.state_name(sub.from())},
                        {"destinations", dests},
                        {"reference", dests[sub.membership.reference()]},
                        {"loglik", number_or_null(sub.loglik)},
                        {"em_iterations", sub.em_iterations},
                        {"em_trace", sub.em_trace},
                        {"capped", sub.capped},
                        {"covariance_repaired", sub.covariance_repaired},
                        {"parameters", parameter_table(mixture_names(s, sub), mixture_links(sub), sub.coef, sub.covariance)},
                        {"covariance", matrix_to_json(sub.covariance)}});
    }
    out["submodels"] = std::move(subs);
    return out;
}

MixtureFit mixture_from_json(const Json& j) {
    const auto ctx = context_from_json(j);
    const auto& s = ctx.structure;
    const auto spec = mixture_spec_from_json(require(j, "spec", "mixture model"), s);
    std::map<std::string, const Json*> by_from;
    for (const auto& sub : require(j, "submodels", "mixture model")) by_from[require(sub, "from", "mixture submodel").get<std::string>()] = &sub;
    std::map<std::string, std::vector<double>> coefs;
    for (int r : s.transient_states()) {
        const auto& name = s.state_name(r);
        const auto it = by_from.find(name);
        if (it == by_from.end()) throw ConfigError("mixture model: no submodel for state " + name);
        const auto sub = mixture_submodel(s, r, spec, ctx.coding);
        coefs[name] = coefficients_from_names(mixture_names(s, sub), named_values(parameters_of(*it->second, name), name), name);
    }
    MixtureFit fit = make_mixture_model(ctx, spec, coefs);
    fit.loglik = 0.0;
    for (auto& sub : fit.submodels) {
        const auto& name = s.state_name(sub.from());
        const auto& js = *by_from[name];
        sub.loglik = get_or(js, "loglik", 0.0);
        sub.em_iterations = get_or(js, "em_iterations", 0);
        sub.em_trace = get_or(js, "em_trace", std::vector<double>{});
        sub.capped = get_or(js, "capped", false);
        sub.covariance_repaired = get_or(js, "covariance_repaired", false);
        if (js.contains("covariance")) sub.covariance = matrix_from_json(js["covariance"], sub.coef.size(), name);
        fit.loglik += sub.loglik;
    }
    fit.aic = aic(fit.loglik, fit.k);
    return fit;
}

}  // namespace

// --- observations ---

ObservationTable parse_observations_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    std::vector<std::string> header;
    while (header.empty() && std::getline(in, line)) {
        ++lineno;
        if (!trim(line).empty()) header = split_csv_line(line, lineno);
    }
    if (header.empty()) throw DataError("observation file is empty");
    std::vector<int> fixed(kObservationColumns.size(), -1);
    std::vector<std::size_t> cov_cols;
    ObservationTable table;
    for (std::size_t c = 0; c < header.size(); ++c) {
        const auto it = std::find(kObservationColumns.begin(), kObservationColumns.end(), header[c]);
        if (it != kObservationColumns.end()) {
            fixed[static_cast<std::size_t>(it - kObservationColumns.begin())] = static_cast<int>(c);
        } else {
            cov_cols.push_back(c);
            table.covariate_names.push_back(header[c]);
        }
    }
    for (std::size_t i = 0; i < fixed.size(); ++i)
        if (fixed[i] < 0) throw DataError("observation file lacks column '" + kObservationColumns[i] + "'");
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const auto f = split_csv_line(line, lineno);
        if (f.size() != header.size())
            throw DataError("line " + std::to_string(lineno) + ": expected " + std::to_string(header.size()) + " fields, found " +
                            std::to_string(f.size()));
        RawRow row;
        row.subject = f[static_cast<std::size_t>(fixed[0])];
        row.from = f[static_cast<std::size_t>(fixed[1])];
        row.to = f[static_cast<std::size_t>(fixed[2])];
        row.time = f[static_cast<std::size_t>(fixed[3])];
        row.status = f[static_cast<std::size_t>(fixed[4])];
        for (std::size_t i = 0; i < cov_cols.size(); ++i) row.covariates[table.covariate_names[i]] = f[cov_cols[i]];
        table.rows.push_back(std::move(row));
    }
    return table;
}

ObservationTable read_observations_csv(const fs::path& path) { return parse_observations_csv(read_file(path)); }

std::string observations_csv(const std::vector<std::string>& covariate_names, const std::vector<RawRow>& rows) {
    std::string out;
    for (std::size_t i = 0; i < kObservationColumns.size(); ++i) out += (i ? "," : "") + kObservationColumns[i];
    for (const auto& c : covariate_names) out += "," + csv_field(c);
    out += "\n";
    for (const auto& r : rows) {
        out += csv_field(r.subject) + "," + csv_field(r.from) + "," + csv_field(r.to) + "," + r.time + "," + r.status;
        for (const auto& c : covariate_names) {
            const auto it = r.covariates.find(c);
            out += "," + (it == r.covariates.end() ? std::string() : csv_field(it->second));
        }
        out += "\n";
    }
    return out;
}

// --- structure and specs ---

Json structure_to_json(const ModelStructure& structure) {
    Json ts = Json::array();
    for (std::size_t k = 0; k < structure.transition_count(); ++k) ts.push_back(structure.transition_label(static_cast<int>(k)));
    return {{"states", structure.states()},
            {"transitions", ts},
            {"death", structure.death_name()},
            {"discharge", structure.discharge_name()}};
}

ModelStructure structure_from_json(const Json& j) {
    try {
        std::vector<std::pair<std::string, std::string>> ts;
        for (const auto& t : require(j, "transitions", "structure")) {
            if (t.is_array()) {
                if (t.size() != 2) throw ConfigError("structure: transition pairs need two states");
                ts.emplace_back(t[0].get<std::string>(), t[1].get<std::string>());
            } else {
                const auto label = t.get<std::string>();
                const auto arrow = label.find("->");
                if (arrow == std::string::npos) throw ConfigError("structure: transition '" + label + "' is not of the form A->B");
                ts.emplace_back(trim(label.substr(0, arrow)), trim(label.substr(arrow + 2)));
            }
        }
        ModelStructure s(require(j, "states", "structure").get<std::vector<std::string>>(), std::move(ts),
                         get_or<std::string>(j, "death", "Death"), get_or<std::string>(j, "discharge", "Discharge"));
        require_valid(s);
        return s;
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("structure: ") + e.what());
    }
}

Json spec_to_json(const DistributionSpec& spec) {
    Json links = Json::object();
    for (const auto& [p, covs] : spec.links)
        if (!covs.empty()) links[p] = covs;
    return {{"family", family_name(spec.family)}, {"cure", spec.cure}, {"covariates", links}};
}

DistributionSpec spec_from_json(const Json& j) {
    DistributionSpec spec;
    if (j.is_string()) {
        auto name = j.get<std::string>();
        if (name.size() > 5 && name.ends_with("-cure")) {
            spec.cure = true;
            name.resize(name.size() - 5);
        }
        spec.family = parse_family(name);
        return spec;
    }
    try {
        auto name = require(j, "family", "distribution spec").get<std::string>();
        if (name.size() > 5 && name.ends_with("-cure")) {
            spec.cure = true;
            name.resize(name.size() - 5);
        }
        spec.family = parse_family(name);
        spec.cure = get_or(j, "cure", spec.cure);
        if (j.contains("covariates"))
            for (const auto& [p, covs] : j["covariates"].items()) spec.links[p] = covs.get<std::vector<std::string>>();
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("distribution spec: ") + e.what());
    }
    return spec;
}

Json membership_to_json(const MembershipSpec& spec) {
    return {{"reference", spec.reference}, {"covariates", spec.covariates}};
}

MembershipSpec membership_from_json(const Json& j) {
    MembershipSpec spec;
    spec.reference = get_or<std::string>(j, "reference", "");
    spec.covariates = get_or(j, "covariates", std::vector<std::string>{});
    return spec;
}

Json transition_specs_to_json(const std::vector<DistributionSpec>& specs, const ModelStructure& structure) {
    Json out = Json::object();
    for (std::size_t k = 0; k < specs.size(); ++k) out[structure.transition_label(static_cast<int>(k))] = spec_to_json(specs[k]);
    return out;
}

std::vector<DistributionSpec> transition_specs_from_json(const Json& j, const ModelStructure& structure) {
    if (!j.is_object()) throw ConfigError("transition specs must be an object keyed by \"From->To\"");
    std::vector<DistributionSpec> out(structure.transition_count());
    std::vector<bool> seen(out.size(), false);
    for (const auto& [label, spec] : j.items()) {
        const auto k = static_cast<std::size_t>(structure.transition_by_label(label));
        out[k] = spec_from_json(spec);
        seen[k] = true;
    }
    for (std::size_t k = 0; k < seen.size(); ++k)
        if (!seen[k]) throw ConfigError("no spec for transition " + structure.transition_label(static_cast<int>(k)));
    return out;
}

Json mixture_spec_to_json(const MixtureModelSpec& spec, const ModelStructure& structure) {
    Json mem = Json::object();
    for (const auto& [from, m] : spec.membership) mem[from] = membership_to_json(m);
    return {{"membership", mem}, {"transitions", transition_specs_to_json(spec.transitions, structure)}};
}

MixtureModelSpec mixture_spec_from_json(const Json& j, const ModelStructure& structure) {
    MixtureModelSpec spec;
    if (j.contains("membership"))
        for (const auto& [from, m] : j["membership"].items()) {
            structure.state_index(from);
            spec.membership[from] = membership_from_json(m);
        }
    spec.transitions = transition_specs_from_json(require(j, "transitions", "mixture spec"), structure);
    return spec;
}

// --- fitted models ---

Json model_to_json(const FittedModel& model) {
    return std::visit(
        [](const auto& m) -> Json {
            if constexpr (std::is_same_v<std::decay_t<decltype(m)>, CshFit>)
                return csh_to_json(m);
            else
                return mixture_to_json(m);
        },
        model);
}

FittedModel model_from_json(const Json& j) {
    try {
        const auto fw = parse_framework(require(j, "framework", "model").get<std::string>());
        if (fw == Framework::Csh) return csh_from_json(j);
        return mixture_from_json(j);
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("model: ") + e.what());
    }
}

// --- synthetic data ---

Json synth_config_to_json(const SynthConfig& config) {
    Json covs = Json::array();
    for (const auto& c : config.covariates) covs.push_back({{"name", c.name}, {"levels", c.levels}, {"probs", c.probs}});
    return {{"n", config.n},
            {"seed", config.seed},
            {"extraction", {config.extraction_min, config.extraction_max}},
            {"censoring", config.censoring},
            {"status3_fraction", config.status3_fraction},
            {"covariates", covs},
            {"truth", model_to_json(config.truth)}};
}

SynthConfig synth_config_from_json(const Json& j) {
    try {
        SynthConfig config;
        if (j.contains("truth") && j["truth"].is_string()) {
            const auto name = j["truth"].get<std::string>();
            if (name == "default")
                config = default_synth_config();
            else if (name == "mixture-default")
                config = mixture_synth_config();
            else
                throw ConfigError("unknown truth '" + name + "' (expected default, mixture-default or a model object)");
        } else {
            config = default_synth_config();
            if (j.contains("truth")) config.truth = model_from_json(j["truth"]);
        }
        config.n = get_or<std::size_t>(j, "n", config.n);
        config.seed = get_or<std::uint64_t>(j, "seed", config.seed);
        if (j.contains("extraction")) {
            const auto& e = j["extraction"];
            if (!e.is_array() || e.size() != 2) throw ConfigError("extraction must be [min, max]");
            config.extraction_min = e[0].get<double>();
            config.extraction_max = e[1].get<double>();
        }
        config.censoring = get_or(j, "censoring", config.censoring);
        config.status3_fraction = get_or(j, "status3_fraction", config.status3_fraction);
        if (j.contains("covariates")) {
            config.covariates.clear();
            for (const auto& c : j["covariates"])
                config.covariates.push_back({require(c, "name", "covariate").get<std::string>(),
                                             require(c, "levels", "covariate").get<std::vector<std::string>>(),
                                             require(c, "probs", "covariate").get<std::vector<double>>()});
        }
        validate_synth_config(config);
        return config;
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("simulation config: ") + e.what());
    }
}

// --- tables ---

std::string quantities_csv(const std::vector<QuantitySummary>& summaries) {
    std::string out = "profile,quantity,target,type,value,mc_se\n";
    for (const auto& s : summaries) {
        const auto label = csv_field(profile_label(s.profile));
        for (const auto& r : s.rows) {
            const auto prefix = label + "," + r.quantity + "," + csv_field(r.target) + ",";
            out += prefix + "estimate," + format_double(r.estimate) + "," + format_double(r.mc_se) + "\n";
            out += prefix + "lower," + format_double(r.lower) + ",\n";
            out += prefix + "upper," + format_double(r.upper) + ",\n";
        }
    }
    return out;
}

Json quantities_to_json(const std::vector<QuantitySummary>& summaries) {
    Json out = Json::array();
    for (const auto& s : summaries) {
        Json rows = Json::array();
        for (const auto& r : s.rows)
            rows.push_back({{"quantity", r.quantity},
                            {"target", r.target},
                            {"estimate", number_or_null(r.estimate)},
                            {"lower", number_or_null(r.lower)},
                            {"upper", number_or_null(r.upper)},
                            {"mc_se", number_or_null(r.mc_se)}});
        out.push_back({{"profile", profile_label(s.profile)},
                       {"draws_used", s.draws_used},
                       {"draws_failed", s.draws_failed},
                       {"rows", rows}});
    }
    return out;
}

std::string gof_csv(const std::vector<GofRow>& rows) {
    std::string out = "group,from,to,t,parametric,nonparametric\n";
    for (const auto& r : rows)
        out += csv_field(r.group) + "," + csv_field(r.from) + "," + csv_field(r.to) + "," + format_double(r.t) + "," +
               format_double(r.parametric) + "," + format_double(r.nonparametric) + "\n";
    return out;
}

std::string histogram_csv(const std::vector<HistogramRow>& rows) {
    std::string out = "group,from,to,lower,upper,count,density,expected\n";
    for (const auto& r : rows)
        out += csv_field(r.group) + "," + csv_field(r.from) + "," + csv_field(r.to) + "," + format_double(r.lower) + "," +
               format_double(r.upper) + "," + std::to_string(r.count) + "," + format_double(r.density) + "," +
               format_double(r.expected) + "\n";
    return out;
}

}  // namespace msm
