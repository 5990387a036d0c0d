#pragma once

// Pipeline orchestration behind the CLI subcommands. A RunConfig names
// one data source (a directory of CSVs or an in-memory synthetic
// config), the attribute under study, the objective weight, the grid,
// a strategy, a seed, and an output directory. Every command writes a
// manifest (resolved config + seed + version) alongside its outputs so
// a run can be reproduced byte-for-byte.
//
// Year convention: histories are ordered oldest first and the final
// year is always the held-out evaluation year. Strategies only see the
// years before it (the ideal strategy, by definition, peeks).

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "admissions/applicant_model.hpp"
#include "admissions/policy.hpp"

namespace admissions {

struct RunConfig {
    enum class Filter { all, consistent };

    std::string data_dir;                      // directory with programs.csv + students_*.csv
    std::optional<SyntheticConfig> synthetic;  // alternative in-memory source
    std::string attribute = "income";
    std::optional<double> lambda;              // default: 23 for gender, 28 otherwise
    double grid_max = 50.0;
    double grid_step = 1.0;
    StrategySpec strategy;                     // default ideal
    std::uint64_t seed = 1;
    std::string out_dir = "out";
    Filter filter = Filter::consistent;
    int sample_cohort_size = 0;                // 0: match the training cohort size

    double resolved_lambda() const;
    BonusGrid grid() const;
    void validate() const;                     // throws ConfigError
};

const char* to_string(RunConfig::Filter f);
RunConfig::Filter filter_from_string(const std::string& s);

// Strict parsing: unknown keys are rejected so typos fail loudly.
RunConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const RunConfig& cfg);

struct History {
    ProgramRegistry registry;
    std::vector<ApplicationSet> years;   // oldest first; back() is the evaluation year
};

// Loads the configured data source. Directory sources expect
// programs.csv plus students_<label>.csv files, used in ascending
// filename order. Synthetic sources generate in memory with the run
// seed. Throws ConfigError when no source is configured.
History load_history(const RunConfig& cfg);

// SPD of the unbonused match per (program, year).
struct SpdByYear {
    std::vector<ProgramId> programs;                        // ascending
    std::vector<std::string> year_labels;
    std::vector<std::vector<std::optional<double>>> spd;    // [program][year]
};

SpdByYear baseline_spd_table(const History& history, const std::string& attribute,
                             std::size_t n_years_back = 0);   // 0: all years

// Design-time target selection. `all` keeps every program;
// `consistent` keeps programs consistently unequal over the last three
// training years (the evaluation year stays hidden). Throws
// InfeasibleError when the filter needs more history than exists or
// when nothing passes.
std::vector<ProgramId> select_targets(const History& history, const RunConfig& cfg);

// Subcommand bodies. Each writes its files under cfg.out_dir and
// returns a human-readable summary for stdout.
std::string run_generate(const RunConfig& cfg);
std::string run_suggest(const RunConfig& cfg);
std::string run_evaluate(const RunConfig& cfg, const std::string& suggestions_path);
std::string run_report(const RunConfig& cfg, const std::string& policy_path);  // "" = no policy

} // namespace admissions
