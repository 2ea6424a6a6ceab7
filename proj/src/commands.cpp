#include "msm/commands.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

#include "msm/errors.hpp"
#include "msm/nonparam.hpp"
#include "msm/quantities.hpp"
#include "msm/random.hpp"
#include "msm/synthdata.hpp"

namespace msm {

namespace fs = std::filesystem;

std::string tool_version() {
#ifdef MSM_VERSION
    return MSM_VERSION;
#else
    return "0.0.0";
#endif
}

namespace {

template <class T>
T get_or(const Json& j, const char* key, T fallback) {
    const auto it = j.find(key);
    return it == j.end() || it->is_null() ? fallback : it->get<T>();
}

std::vector<std::string> frameworks_from(const std::string& name) {
    if (name == "both") return {"csh", "mixture"};
    parse_framework(name);
    return {name};
}

FitControls controls_from_json(const Json& j) {
    FitControls c;
    c.optim.max_iter = get_or(j, "max_iter", c.optim.max_iter);
    c.optim.grad_tol = get_or(j, "grad_tol", c.optim.grad_tol);
    c.optim.step_tol = get_or(j, "step_tol", c.optim.step_tol);
    c.optim.hessian_step = get_or(j, "hessian_step", c.optim.hessian_step);
    c.staged = get_or(j, "staged", c.staged);
    c.em_max_iter = get_or(j, "em_max_iter", c.em_max_iter);
    c.em_tol = get_or(j, "em_tol", c.em_tol);
    c.inner_grad_tol = get_or(j, "inner_grad_tol", c.inner_grad_tol);
    c.membership_cap = get_or(j, "membership_cap", c.membership_cap);
    return c;
}

Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json candidate_table_json(const std::vector<CandidateResult>& table) {
    Json out = Json::array();
    for (std::size_t i = 0; i < table.size(); ++i) {
        const auto& c = table[i];
        Json row{{"rank", i + 1}, {"label", c.label}, {"ok", c.ok}, {"loglik", number_or_null(c.loglik)},
                 {"k", c.k}, {"aic", number_or_null(c.aic)}};
        if (!c.ok) row["error"] = c.error;
        out.push_back(std::move(row));
    }
    return out;
}

std::string csv_quote(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

void append_candidates_csv(std::string& out, const std::string& framework, const std::string& block,
                           const std::vector<CandidateResult>& table) {
    for (std::size_t i = 0; i < table.size(); ++i) {
        const auto& c = table[i];
        out += framework + "," + csv_quote(block) + "," + std::to_string(i + 1) + "," + csv_quote(c.label) + "," +
               format_double(c.loglik) + "," + std::to_string(c.k) + "," + format_double(c.aic) + "," +
               (i == 0 && c.ok ? "1" : "0") + "," + csv_quote(c.error) + "\n";
    }
}

std::vector<std::vector<std::string>> comparison_groupings(const RunConfig& config, const Dataset& data) {
    if (!config.grouping.empty()) return {config.grouping};
    std::vector<std::vector<std::string>> out{{}};
    for (const auto& c : data.covariate_names) out.push_back({c});
    return out;
}

Json comparison_json(const CshFit& csh, const MixtureFit& mix, const Dataset& data,
                     const std::vector<std::vector<std::string>>& groupings) {
    Json rows = Json::array();
    for (const auto& g : groupings) {
        const auto a = subgroup_loglik(csh, data, g);
        const auto b = subgroup_loglik(mix, data, g);
        std::string gname;
        for (std::size_t i = 0; i < g.size(); ++i) gname += (i ? "," : "") + g[i];
        for (std::size_t i = 0; i < a.size(); ++i)
            rows.push_back({{"grouping", g.empty() ? std::string("all") : gname},
                            {"group", a[i].group},
                            {"count", a[i].count},
                            {"loglik_csh", number_or_null(a[i].loglik)},
                            {"loglik_mixture", number_or_null(b[i].loglik)},
                            {"difference", number_or_null(a[i].loglik - b[i].loglik)}});
    }
    return {{"aic_csh", csh.aic},
            {"aic_mixture", mix.aic},
            {"aic_difference", mix.aic - csh.aic},
            {"k_csh", csh.k},
            {"k_mixture", mix.k},
            {"subgroup_loglik", rows}};
}

fs::path out_dir(const CommandOptions& options, const fs::path& fallback) {
    return options.out ? *options.out : fallback;
}

}  // namespace

RunConfig run_config_from_json(const Json& j, const fs::path& base_dir) {
    try {
        RunConfig c;
        if (j.contains("structure")) c.structure = structure_from_json(j["structure"]);
        if (j.contains("data")) {
            fs::path p = j["data"].get<std::string>();
            c.data = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
        }
        if (j.contains("framework")) c.frameworks = frameworks_from(j["framework"].get<std::string>());
        c.covariates = get_or(j, "covariates", c.covariates);
        c.paper_procedure = get_or(j, "paper_procedure", false);
        if (j.contains("csh")) {
            const auto& s = j["csh"];
            CshCandidateSet set;
            if (s.contains("candidates")) {
                set.per_transition.resize(c.structure.transition_count());
                for (const auto& [label, list] : s["candidates"].items()) {
                    const auto k = static_cast<std::size_t>(c.structure.transition_by_label(label));
                    for (const auto& spec : list) set.per_transition[k].push_back(spec_from_json(spec));
                }
            } else {
                for (auto& spec : transition_specs_from_json(s.at("transitions"), c.structure)) set.per_transition.push_back({spec});
            }
            c.csh = std::move(set);
        }
        if (j.contains("mixture")) {
            const auto& s = j["mixture"];
            MixtureCandidateSet set;
            if (s.contains("candidates")) {
                for (const auto& m : s["candidates"]) set.candidates.push_back(mixture_spec_from_json(m, c.structure));
            } else {
                set.candidates.push_back(mixture_spec_from_json(s, c.structure));
            }
            c.mixture = std::move(set);
        }
        if (j.contains("controls")) c.controls = controls_from_json(j["controls"]);
        if (j.contains("data_options")) {
            c.data_options.zero_time = get_or(j["data_options"], "zero_time", c.data_options.zero_time);
            c.data_options.status3_censors_all = get_or(j["data_options"], "status3_censors_all", false);
        }
        c.grouping = get_or(j, "grouping", c.grouping);
        c.B = get_or(j, "B", c.B);
        c.S = get_or(j, "S", c.S);
        c.seed = get_or(j, "seed", c.seed);
        if (j.contains("out")) c.out = j["out"].get<std::string>();
        return c;
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("run config: ") + e.what());
    }
}

void apply_overrides(RunConfig& config, const CommandOptions& o) {
    if (o.data) config.data = *o.data;
    if (o.framework) config.frameworks = frameworks_from(*o.framework);
    if (o.seed) config.seed = *o.seed;
    if (o.B) config.B = *o.B;
    if (o.S) config.S = *o.S;
    if (o.grouping) config.grouping = *o.grouping;
    if (o.out) config.out = *o.out;
    if (o.paper_procedure) config.paper_procedure = true;
}

Dataset load_observations(const fs::path& path, const ModelStructure& structure, const std::vector<std::string>& covariates,
                          const DataOptions& options, const CovariateCoding* coding) {
    const auto table = read_observations_csv(path);
    const auto& names = covariates.empty() ? table.covariate_names : covariates;
    for (const auto& n : names)
        if (std::find(table.covariate_names.begin(), table.covariate_names.end(), n) == table.covariate_names.end())
            throw DataError("covariate '" + n + "' is not a column of " + path.string());
    return load_dataset(table.rows, names, structure, options, coding);
}

FitOutput run_fit(const RunConfig& config, const Dataset& data, Exec exec) {
    FitOutput out;
    Json fits = Json::object();
    for (const auto& fw : config.frameworks) {
        if (fw == "csh") {
            const auto set = config.csh && !config.paper_procedure ? *config.csh
                                                                   : preset_csh_candidates(config.structure, data.covariate_names);
            out.csh = select_csh(data, config.structure, set, config.data_options, config.controls, exec);
            Json j = model_to_json(out.csh->fit);
            Json sel = Json::array();
            for (const auto& t : out.csh->transitions)
                sel.push_back({{"transition", config.structure.transition_label(t.transition)},
                               {"aic", t.aic},
                               {"candidates", candidate_table_json(t.table)}});
            j["selection"] = std::move(sel);
            fits["csh"] = std::move(j);
        } else {
            const auto set = config.mixture && !config.paper_procedure
                                 ? *config.mixture
                                 : preset_mixture_candidates(config.structure, data.covariate_names);
            out.mixture = select_mixture(data, config.structure, set, config.data_options, config.controls, exec);
            Json j = model_to_json(out.mixture->fit);
            Json sel = Json::array();
            for (const auto& s : out.mixture->submodels)
                sel.push_back({{"from", config.structure.state_name(s.from)},
                               {"aic", s.aic},
                               {"candidates", candidate_table_json(s.table)}});
            j["selection"] = std::move(sel);
            fits["mixture"] = std::move(j);
        }
    }
    out.results = {{"tool", kToolName},
                   {"version", tool_version()},
                   {"seed", config.seed},
                   {"observations", data.rows.size()},
                   {"frameworks", config.frameworks},
                   {"fits", std::move(fits)}};
    if (out.csh && out.mixture)
        out.results["comparison"] = comparison_json(out.csh->fit, out.mixture->fit, data, comparison_groupings(config, data));
    return out;
}

std::map<std::string, FittedModel> load_results(const Json& results) {
    if (!results.contains("fits") || !results["fits"].is_object()) throw ConfigError("results file has no \"fits\"");
    std::map<std::string, FittedModel> out;
    for (const auto& [name, j] : results["fits"].items()) out.emplace(name, model_from_json(j));
    return out;
}

std::vector<CovariateValues> resolve_profiles(const std::vector<std::string>& specs, const CovariateCoding& coding) {
    if (specs.empty() || (specs.size() == 1 && specs[0] == "all")) return coding.all_profiles();
    std::vector<CovariateValues> out;
    for (const auto& s : specs) {
        auto p = parse_profile(s);
        for (const auto& [name, value] : p)
            if (!coding.has(name)) throw ConfigError("profile names unknown covariate '" + name + "'");
        coding.encode(p);
        out.push_back(std::move(p));
    }
    return out;
}

void cmd_simulate(const CommandOptions& options) {
    if (!options.config) throw ConfigError("simulate requires --config");
    auto config = synth_config_from_json(read_json(*options.config));
    if (options.seed) config.seed = *options.seed;
    const auto dir = out_dir(options, "data");
    const auto result = generate(config, options.exec);
    std::vector<std::string> names;
    for (const auto& c : context_of(config.truth).coding.covariates()) names.push_back(c.name);
    write_file_atomic(dir / "observations.csv", observations_csv(names, result.rows));
    Json truth = synth_config_to_json(config);
    truth["tool"] = kToolName;
    truth["version"] = tool_version();
    write_file_atomic(dir / "truth.json", dump_json(truth));
    std::cout << "wrote " << result.rows.size() << " rows for " << config.n << " subjects to " << dir.string() << "\n";
}

void cmd_fit(const CommandOptions& options) {
    RunConfig config;
    if (options.config) config = run_config_from_json(read_json(*options.config), options.config->parent_path());
    apply_overrides(config, options);
    if (config.data.empty()) throw ConfigError("fit requires a dataset (--data or \"data\" in the config)");
    const auto data = load_observations(config.data, config.structure, config.covariates, config.data_options);
    const auto fit = run_fit(config, data, options.exec);

    std::string csv = "framework,block,rank,label,loglik,k,aic,selected,error\n";
    if (fit.csh)
        for (const auto& t : fit.csh->transitions)
            append_candidates_csv(csv, "csh", config.structure.transition_label(t.transition), t.table);
    if (fit.mixture)
        for (const auto& s : fit.mixture->submodels)
            append_candidates_csv(csv, "mixture", config.structure.state_name(s.from), s.table);
    write_file_atomic(config.out / "results.json", dump_json(fit.results));
    write_file_atomic(config.out / "candidates.csv", csv);

    if (fit.csh) std::cout << "csh: loglik " << fit.csh->fit.loglik << ", k " << fit.csh->fit.k << ", AIC " << fit.csh->fit.aic << "\n";
    if (fit.mixture)
        std::cout << "mixture: loglik " << fit.mixture->fit.loglik << ", k " << fit.mixture->fit.k << ", AIC "
                  << fit.mixture->fit.aic << "\n";
}

void cmd_predict(const CommandOptions& options) {
    if (!options.fit) throw ConfigError("predict requires a results file");
    const auto results = read_json(*options.fit);
    const auto models = load_results(results);
    const std::uint64_t seed = options.seed ? *options.seed : get_or<std::uint64_t>(results, "seed", 1);
    const int B = options.B ? *options.B : 100;
    if (B < 1) throw ConfigError("--B must be at least 1");
    const std::size_t S = options.S ? *options.S : 100000;
    if (S < 1) throw ConfigError("--S must be at least 1");
    const auto dir = out_dir(options, options.fit->parent_path());

    std::vector<std::string> wanted;
    if (options.framework) wanted = frameworks_from(*options.framework);
    else for (const auto& [name, m] : models) wanted.push_back(name);

    for (const auto& name : wanted) {
        const auto it = models.find(name);
        if (it == models.end()) throw ConfigError("results file has no " + name + " fit");
        const auto& model = it->second;
        const auto profiles = resolve_profiles(options.profiles, context_of(model).coding);
        const auto draws = draw_params(coefficients_of(model), covariance_of(model), B, derive_seed(seed, "draws"));
        QuantityOptions q;
        q.simulations = S;
        q.seed = seed;
        q.exec = options.exec;
        const auto summaries = quantities_with_intervals(model, draws, profiles, q);
        write_file_atomic(dir / ("quantities_" + name + ".csv"), quantities_csv(summaries));
        Json j{{"tool", kToolName}, {"version", tool_version()}, {"framework", name}, {"seed", seed},
               {"B", B}, {"S", S}, {"profiles", quantities_to_json(summaries)}};
        write_file_atomic(dir / ("quantities_" + name + ".json"), dump_json(j));
        std::cout << name << ": " << summaries.size() << " profiles written\n";
    }
}

void cmd_gof(const CommandOptions& options) {
    if (!options.fit) throw ConfigError("gof requires a results file");
    if (!options.data) throw ConfigError("gof requires --data");
    const auto models = load_results(read_json(*options.fit));
    const auto grouping = options.grouping ? *options.grouping : std::vector<std::string>{};
    const auto dir = out_dir(options, options.fit->parent_path());
    Json summary = Json::object();
    for (const auto& [name, model] : models) {
        if (options.framework && *options.framework != "both" && *options.framework != name) continue;
        const auto& ctx = context_of(model);
        const auto data = load_observations(*options.data, ctx.structure, ctx.covariate_names, ctx.options, &ctx.coding);
        for (const auto& g : grouping)
            if (!ctx.coding.has(g)) throw ConfigError("grouping covariate '" + g + "' is not in the model");
        // Grid extends past the last follow-up so extrapolation is visible.
        const double upper = std::ceil(1.2 * data.max_time());
        const double step = std::max(1.0, std::ceil(upper / 200.0));
        std::vector<double> grid;
        for (double t = 0.0; t <= upper; t += step) grid.push_back(t);

        const auto aj = gof_table(model, data, grid, grouping);
        write_file_atomic(dir / ("gof_aj_" + name + ".csv"), gof_csv(aj));
        Json s{{"max_gap_aalen_johansen", number_or_null(max_gap(aj))}};
        if (const auto* csh = std::get_if<CshFit>(&model)) {
            const auto km = km_comparison(*csh, data, grid, grouping);
            write_file_atomic(dir / "gof_km_csh.csv", gof_csv(km));
            s["max_gap_kaplan_meier"] = number_or_null(max_gap(km));
        } else {
            const auto hist = histogram_table(std::get<MixtureFit>(model), data, grouping);
            write_file_atomic(dir / "gof_hist_mixture.csv", histogram_csv(hist));
        }
        summary[name] = std::move(s);
    }
    if (summary.empty()) throw ConfigError("no fits selected");
    write_file_atomic(dir / "gof_summary.json", dump_json(summary));
    std::cout << summary.dump() << "\n";
}

}  // namespace msm
