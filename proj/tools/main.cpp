#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "admissions/errors.hpp"
#include "admissions/io.hpp"
#include "admissions/run.hpp"
#include "admissions/version.hpp"

namespace {

struct FlagValues {
    std::string config_path;
    std::string attribute;
    double lambda = 0.0;
    std::string strategy;
    double grid_max = 0.0;
    double grid_step = 0.0;
    std::uint64_t seed = 0;
    std::string filter;
    std::string out_dir;
    std::vector<std::string> inputs;
};

void add_common_flags(CLI::App* sub, FlagValues& v) {
    sub->add_option("--config", v.config_path, "load the run configuration from a JSON file");
    sub->add_option("--attribute", v.attribute, "group attribute under study");
    sub->add_option("--lambda", v.lambda,
                    "objective weight on |SPD| (default 23 for gender, 28 otherwise)");
    sub->add_option("--strategy", v.strategy,
                    "ideal | historical-<k> | predictive-<n>");
    sub->add_option("--grid-max", v.grid_max, "largest bonus on the search grid");
    sub->add_option("--grid-step", v.grid_step, "grid step, in points");
    sub->add_option("--seed", v.seed, "run seed");
    sub->add_option("--filter", v.filter, "target programs: all | consistent");
    sub->add_option("--out", v.out_dir, "output directory");
}

// --config first, explicit flags override, environment supplies the
// output directory when nothing else does.
admissions::RunConfig merge_config(const CLI::App* sub, const FlagValues& v) {
    admissions::RunConfig cfg;
    bool out_configured = false;
    if (sub->count("--config") > 0) {
        const nlohmann::json j = admissions::io::load_json_file(v.config_path);
        cfg = admissions::config_from_json(j);
        out_configured = j.contains("out");
    }
    if (sub->count("--attribute") > 0) cfg.attribute = v.attribute;
    if (sub->count("--lambda") > 0) cfg.lambda = v.lambda;
    if (sub->count("--strategy") > 0)
        cfg.strategy = admissions::StrategySpec::parse(v.strategy);
    if (sub->count("--grid-max") > 0) cfg.grid_max = v.grid_max;
    if (sub->count("--grid-step") > 0) cfg.grid_step = v.grid_step;
    if (sub->count("--seed") > 0) cfg.seed = v.seed;
    if (sub->count("--filter") > 0) cfg.filter = admissions::filter_from_string(v.filter);
    if (sub->count("--out") > 0) {
        cfg.out_dir = v.out_dir;
    } else if (!out_configured) {
        if (const char* env = std::getenv("ADMISSIONS_OUT_DIR"); env != nullptr && *env != '\0')
            cfg.out_dir = env;
    }
    return cfg;
}

// Positional inputs: a directory is the data source, a file is the
// subcommand's JSON input (suggestions for evaluate, policy for report).
std::string classify_inputs(admissions::RunConfig& cfg, const std::vector<std::string>& inputs) {
    std::string file_input;
    for (const std::string& input : inputs) {
        if (std::filesystem::is_directory(input)) {
            if (!cfg.data_dir.empty() && cfg.data_dir != input)
                throw admissions::ConfigError("more than one data directory given");
            cfg.data_dir = input;
            cfg.synthetic.reset();   // explicit data beats a configured synthetic source
        } else {
            if (!file_input.empty())
                throw admissions::ConfigError("more than one input file given");
            file_input = input;
        }
    }
    return file_input;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"bonus-policy design for centralized score-based admissions"};
    app.set_version_flag("--version", admissions::kVersion);
    app.require_subcommand(1);

    FlagValues v;
    CLI::App* generate = app.add_subcommand(
        "generate", "produce a synthetic multi-year history as CSV files");
    add_common_flags(generate, v);

    CLI::App* suggest = app.add_subcommand(
        "suggest", "design per-program bonuses with the configured strategy");
    add_common_flags(suggest, v);
    suggest->add_option("inputs", v.inputs, "data directory (programs.csv + students_*.csv)");

    CLI::App* evaluate = app.add_subcommand(
        "evaluate", "score a suggestion file against hindsight optima on the final year");
    add_common_flags(evaluate, v);
    evaluate->add_option("inputs", v.inputs, "suggestions JSON and/or data directory");

    CLI::App* report = app.add_subcommand(
        "report", "match the final year and emit outcome and fairness tables");
    add_common_flags(report, v);
    report->add_option("inputs", v.inputs, "data directory and/or policy JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;   // usage problems are config errors
    }

    try {
        CLI::App* sub = app.get_subcommands().front();
        admissions::RunConfig cfg = merge_config(sub, v);
        const std::string file_input = classify_inputs(cfg, v.inputs);

        std::string summary;
        if (sub == generate) {
            if (!file_input.empty())
                throw admissions::ConfigError("generate takes no input files");
            summary = admissions::run_generate(cfg);
        } else if (sub == suggest) {
            if (!file_input.empty())
                throw admissions::ConfigError("suggest takes no input files, only a data "
                                              "directory");
            summary = admissions::run_suggest(cfg);
        } else if (sub == evaluate) {
            if (file_input.empty())
                throw admissions::ConfigError("evaluate needs a suggestions JSON file");
            summary = admissions::run_evaluate(cfg, file_input);
        } else {
            summary = admissions::run_report(cfg, file_input);
        }
        std::cout << summary;
        return 0;
    } catch (const admissions::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const admissions::InfeasibleError& e) {
        std::cerr << "infeasible run: " << e.what() << "\n";
        return 3;
    } catch (const admissions::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
