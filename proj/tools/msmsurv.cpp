#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "msm/commands.hpp"
#include "msm/errors.hpp"

namespace {

std::vector<std::string> split_commas(const std::string& s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const auto comma = s.find(',', start);
        const auto item = s.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        if (!item.empty()) out.push_back(item);
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Parametric multi-state survival models: cause-specific hazards and mixture frameworks"};
    app.require_subcommand(1);
    app.set_version_flag("--version", msm::tool_version());

    msm::CommandOptions opt;
    std::string config, data, fit, out, framework, grouping;
    std::uint64_t seed = 0;
    int B = 0;
    std::size_t S = 0;
    bool serial = false;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--out", out, "Output directory");
        sub->add_option("--seed", seed, "Root seed");
        sub->add_flag("--serial", serial, "Run the serial reference kernels");
    };

    auto* simulate = app.add_subcommand("simulate", "Generate a synthetic dataset from a truth model");
    simulate->add_option("--config", config, "Simulation config JSON")->required()->check(CLI::ExistingFile);
    add_common(simulate);

    auto* fitcmd = app.add_subcommand("fit", "Fit candidate models and select by AIC");
    fitcmd->add_option("--config", config, "Run config JSON")->check(CLI::ExistingFile);
    fitcmd->add_option("--data", data, "Observation CSV")->check(CLI::ExistingFile);
    fitcmd->add_option("--framework", framework, "csh, mixture or both")->check(CLI::IsMember({"csh", "mixture", "both"}));
    fitcmd->add_option("--grouping", grouping, "Comma-separated covariates for the subgroup comparison");
    fitcmd->add_flag("--paper-procedure", opt.paper_procedure, "Use the preset candidate sequence");
    add_common(fitcmd);

    auto* predict = app.add_subcommand("predict", "Derived quantities with simulation intervals");
    predict->add_option("fit", fit, "Results JSON from fit")->required()->check(CLI::ExistingFile);
    predict->add_option("--framework", framework, "csh, mixture or both")->check(CLI::IsMember({"csh", "mixture", "both"}));
    predict->add_option("--profiles", opt.profiles, "Covariate profiles such as age_group=85+,gender=M, or all");
    predict->add_option("--B", B, "Parameter draws")->check(CLI::PositiveNumber);
    predict->add_option("--S", S, "Simulated histories per draw")->check(CLI::PositiveNumber);
    add_common(predict);

    auto* gof = app.add_subcommand("gof", "Goodness-of-fit tables against nonparametric estimates");
    gof->add_option("fit", fit, "Results JSON from fit")->required()->check(CLI::ExistingFile);
    gof->add_option("--data", data, "Observation CSV")->required()->check(CLI::ExistingFile);
    gof->add_option("--framework", framework, "csh, mixture or both")->check(CLI::IsMember({"csh", "mixture", "both"}));
    gof->add_option("--grouping", grouping, "Comma-separated grouping covariates");
    add_common(gof);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    auto* used = app.get_subcommands().front();
    auto given = [&](const char* name) {
        const auto* o = used->get_option_no_throw(name);
        return o != nullptr && o->count() > 0;
    };
    if (given("--config")) opt.config = config;
    if (given("--data")) opt.data = data;
    if (!fit.empty()) opt.fit = fit;
    if (given("--out")) opt.out = out;
    if (given("--framework")) opt.framework = framework;
    if (given("--seed")) opt.seed = seed;
    if (given("--B")) opt.B = B;
    if (given("--S")) opt.S = S;
    if (given("--grouping")) opt.grouping = split_commas(grouping);
    opt.exec = serial ? msm::Exec::Serial : msm::Exec::Parallel;

    try {
        if (used == simulate) msm::cmd_simulate(opt);
        else if (used == fitcmd) msm::cmd_fit(opt);
        else if (used == predict) msm::cmd_predict(opt);
        else msm::cmd_gof(opt);
    } catch (const msm::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n" << used->help();
        return 2;
    } catch (const msm::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
