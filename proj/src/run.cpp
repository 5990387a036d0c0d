#include "admissions/run.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <set>

#include "admissions/errors.hpp"
#include "admissions/io.hpp"
#include "admissions/rng.hpp"
#include "admissions/version.hpp"

namespace fs = std::filesystem;

namespace admissions {

namespace {

std::string fmt(const char* format, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), format, v);
    return buf;
}

void check_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                const char* what) {
    for (const auto& [key, value] : j.items()) {
        if (std::find_if(allowed.begin(), allowed.end(),
                         [&](const char* a) { return key == a; }) == allowed.end())
            throw ConfigError(std::string("unknown key '") + key + "' in " + what);
    }
}

nlohmann::json synthetic_to_json(const SyntheticConfig& syn) {
    nlohmann::json groups = nlohmann::json::array();
    for (const GroupSpec& g : syn.groups)
        groups.push_back({{"attribute", g.attribute},
                          {"test_gap", g.test_gap},
                          {"grade_gap", g.grade_gap},
                          {"protected_share", g.protected_share}});
    return {{"n_students", syn.n_students},
            {"n_programs", syn.n_programs},
            {"n_years", syn.n_years},
            {"groups", groups},
            {"tests", syn.tests},
            {"prestige_preference_strength", syn.prestige_preference_strength},
            {"capacity_min", syn.capacity_min},
            {"capacity_max", syn.capacity_max},
            {"ability_sd", syn.ability_sd},
            {"grade_noise_sd", syn.grade_noise_sd},
            {"test_noise_sd", syn.test_noise_sd},
            {"year_gap_jitter", syn.year_gap_jitter},
            {"share_jitter", syn.share_jitter},
            {"popularity_sd", syn.popularity_sd},
            {"popularity_year_sd", syn.popularity_year_sd},
            {"pref_len_min", syn.pref_len_min},
            {"pref_len_max", syn.pref_len_max}};
}

SyntheticConfig synthetic_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("'synthetic' must be an object");
    check_keys(j,
               {"n_students", "n_programs", "n_years", "groups", "tests",
                "prestige_preference_strength", "capacity_min", "capacity_max", "ability_sd",
                "grade_noise_sd", "test_noise_sd", "year_gap_jitter", "share_jitter",
                "popularity_sd", "popularity_year_sd", "pref_len_min", "pref_len_max"},
               "synthetic config (the run seed drives generation; do not set one here)");
    SyntheticConfig syn;
    try {
        syn.n_students = j.value("n_students", syn.n_students);
        syn.n_programs = j.value("n_programs", syn.n_programs);
        syn.n_years = j.value("n_years", syn.n_years);
        if (j.contains("groups")) {
            syn.groups.clear();
            for (const nlohmann::json& g : j.at("groups")) {
                check_keys(g, {"attribute", "test_gap", "grade_gap", "protected_share"},
                           "synthetic group spec");
                GroupSpec spec;
                spec.attribute = g.at("attribute").get<std::string>();
                spec.test_gap = g.value("test_gap", spec.test_gap);
                spec.grade_gap = g.value("grade_gap", spec.grade_gap);
                spec.protected_share = g.value("protected_share", spec.protected_share);
                syn.groups.push_back(std::move(spec));
            }
        }
        if (j.contains("tests")) syn.tests = j.at("tests").get<std::vector<std::string>>();
        syn.prestige_preference_strength =
            j.value("prestige_preference_strength", syn.prestige_preference_strength);
        syn.capacity_min = j.value("capacity_min", syn.capacity_min);
        syn.capacity_max = j.value("capacity_max", syn.capacity_max);
        syn.ability_sd = j.value("ability_sd", syn.ability_sd);
        syn.grade_noise_sd = j.value("grade_noise_sd", syn.grade_noise_sd);
        syn.test_noise_sd = j.value("test_noise_sd", syn.test_noise_sd);
        syn.year_gap_jitter = j.value("year_gap_jitter", syn.year_gap_jitter);
        syn.share_jitter = j.value("share_jitter", syn.share_jitter);
        syn.popularity_sd = j.value("popularity_sd", syn.popularity_sd);
        syn.popularity_year_sd = j.value("popularity_year_sd", syn.popularity_year_sd);
        syn.pref_len_min = j.value("pref_len_min", syn.pref_len_min);
        syn.pref_len_max = j.value("pref_len_max", syn.pref_len_max);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed synthetic config: ") + e.what());
    }
    return syn;
}

void ensure_out_dir(const std::string& dir) {
    if (dir.empty()) throw ConfigError("output directory must not be empty");
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw DataError("cannot create output directory " + dir + ": " + ec.message());
}

std::string join(const std::string& dir, const std::string& name) {
    return (fs::path(dir) / name).string();
}

void write_manifest(const RunConfig& cfg, const std::string& command) {
    io::write_json_file(join(cfg.out_dir, "manifest.json"),
                        {{"command", command},
                         {"version", kVersion},
                         {"config", config_to_json(cfg)}});
}

// SPD of the unbonused match for every program, for years
// [first, first + count) of the history.
std::vector<std::vector<std::optional<double>>> spd_over_years(const History& history,
                                                               const std::string& attribute,
                                                               std::size_t first,
                                                               std::size_t count) {
    std::vector<ProgramId> programs;
    for (const auto& [id, prog] : history.registry.programs) programs.push_back(id);
    std::vector<std::vector<std::optional<double>>> table(
        programs.size(), std::vector<std::optional<double>>(count));
    const BonusPolicy no_policy;
    for (std::size_t y = 0; y < count; ++y) {
        const MatchOutcome outcome =
            match(history.years[first + y], history.registry, no_policy);
        for (std::size_t p = 0; p < programs.size(); ++p)
            table[p][y] = spd(outcome, programs[p], attribute);
    }
    return table;
}

std::string spd_cell(const std::optional<double>& v) {
    return v ? io::format_double(*v) : std::string();
}

} // namespace

double RunConfig::resolved_lambda() const {
    if (lambda) return *lambda;
    return attribute == "gender" ? 23.0 : 28.0;
}

BonusGrid RunConfig::grid() const { return BonusGrid::uniform(grid_max, grid_step); }

void RunConfig::validate() const {
    if (attribute.empty()) throw ConfigError("an attribute under study is required");
    if (lambda && !(*lambda >= 0.0)) throw ConfigError("lambda must be non-negative");
    grid().validate();
    if (strategy.kind != StrategySpec::Kind::ideal && strategy.param < 1)
        throw ConfigError("strategy parameter must be at least 1");
    if (sample_cohort_size < 0) throw ConfigError("sample_cohort_size must be non-negative");
    if (!data_dir.empty() && synthetic)
        throw ConfigError("configure exactly one data source: either data_dir or synthetic");
}

const char* to_string(RunConfig::Filter f) {
    return f == RunConfig::Filter::all ? "all" : "consistent";
}

RunConfig::Filter filter_from_string(const std::string& s) {
    if (s == "all") return RunConfig::Filter::all;
    if (s == "consistent") return RunConfig::Filter::consistent;
    throw ConfigError("filter must be 'all' or 'consistent', got '" + s + "'");
}

RunConfig config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config JSON must be an object");
    check_keys(j,
               {"data_dir", "synthetic", "attribute", "lambda", "grid_max", "grid_step",
                "strategy", "seed", "filter", "out", "sample_cohort_size"},
               "config");
    RunConfig cfg;
    try {
        cfg.data_dir = j.value("data_dir", cfg.data_dir);
        if (j.contains("synthetic")) cfg.synthetic = synthetic_from_json(j.at("synthetic"));
        cfg.attribute = j.value("attribute", cfg.attribute);
        if (j.contains("lambda")) cfg.lambda = j.at("lambda").get<double>();
        cfg.grid_max = j.value("grid_max", cfg.grid_max);
        cfg.grid_step = j.value("grid_step", cfg.grid_step);
        if (j.contains("strategy"))
            cfg.strategy = StrategySpec::parse(j.at("strategy").get<std::string>());
        cfg.seed = j.value("seed", cfg.seed);
        if (j.contains("filter")) cfg.filter = filter_from_string(j.at("filter").get<std::string>());
        cfg.out_dir = j.value("out", cfg.out_dir);
        cfg.sample_cohort_size = j.value("sample_cohort_size", cfg.sample_cohort_size);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed config JSON: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

nlohmann::json config_to_json(const RunConfig& cfg) {
    // The output directory is deliberately omitted: it has no effect on
    // the produced bytes, and manifests from runs into different
    // directories should compare equal.
    nlohmann::json j = {{"attribute", cfg.attribute},
                        {"lambda", cfg.resolved_lambda()},
                        {"grid_max", cfg.grid_max},
                        {"grid_step", cfg.grid_step},
                        {"strategy", cfg.strategy.name()},
                        {"seed", cfg.seed},
                        {"filter", to_string(cfg.filter)},
                        {"sample_cohort_size", cfg.sample_cohort_size}};
    if (!cfg.data_dir.empty()) j["data_dir"] = cfg.data_dir;
    if (cfg.synthetic) j["synthetic"] = synthetic_to_json(*cfg.synthetic);
    return j;
}

History load_history(const RunConfig& cfg) {
    History history;
    if (!cfg.data_dir.empty()) {
        if (!fs::is_directory(cfg.data_dir))
            throw DataError("data directory not found: " + cfg.data_dir);
        history.registry = io::load_programs_csv(join(cfg.data_dir, "programs.csv"));
        std::vector<std::string> names;
        for (const auto& entry : fs::directory_iterator(cfg.data_dir)) {
            const std::string name = entry.path().filename().string();
            if (name.rfind("students_", 0) == 0 && name.size() > 13 &&
                name.substr(name.size() - 4) == ".csv")
                names.push_back(name);
        }
        if (names.empty())
            throw DataError("no students_<year>.csv files found in " + cfg.data_dir);
        std::sort(names.begin(), names.end());   // oldest first by label
        for (const std::string& name : names) {
            const std::string label = name.substr(9, name.size() - 13);
            ApplicationSet year = io::load_students_csv(join(cfg.data_dir, name), label,
                                                        Provenance::historical);
            validate_application_set(year, history.registry);
            history.years.push_back(std::move(year));
        }
        return history;
    }
    if (cfg.synthetic) {
        SyntheticConfig syn = *cfg.synthetic;
        syn.seed = cfg.seed;   // the run seed drives generation
        SyntheticHistory synthetic = generate_synthetic_history(syn);
        history.registry = std::move(synthetic.registry);
        history.years = std::move(synthetic.years);
        return history;
    }
    throw ConfigError("no data source configured: set data_dir or synthetic");
}

SpdByYear baseline_spd_table(const History& history, const std::string& attribute,
                             std::size_t n_years_back) {
    SpdByYear table;
    for (const auto& [id, prog] : history.registry.programs) table.programs.push_back(id);
    const std::size_t count = n_years_back == 0
                                  ? history.years.size()
                                  : std::min(n_years_back, history.years.size());
    const std::size_t first = history.years.size() - count;
    for (std::size_t y = 0; y < count; ++y)
        table.year_labels.push_back(history.years[first + y].year_label);
    table.spd = spd_over_years(history, attribute, first, count);
    return table;
}

std::vector<ProgramId> select_targets(const History& history, const RunConfig& cfg) {
    std::vector<ProgramId> all;
    for (const auto& [id, prog] : history.registry.programs) all.push_back(id);
    if (cfg.filter == RunConfig::Filter::all) return all;

    const std::size_t training = history.years.size() - 1;
    if (training < 3)
        throw InfeasibleError(
            "the consistent-inequality filter needs three years of history before the "
            "evaluation year; have " +
            std::to_string(training));
    const auto window = spd_over_years(history, cfg.attribute, training - 3, 3);
    std::vector<ProgramId> targets;
    for (std::size_t p = 0; p < all.size(); ++p)
        if (consistently_unequal(window[p]) == std::optional<bool>(true))
            targets.push_back(all[p]);
    if (targets.empty())
        throw InfeasibleError("no program is consistently unequal on attribute '" +
                              cfg.attribute + "' over the filter window");
    return targets;
}

std::string run_generate(const RunConfig& cfg) {
    cfg.validate();
    if (!cfg.data_dir.empty())
        throw ConfigError("generate produces data from a synthetic config, not from data_dir");
    SyntheticConfig syn = cfg.synthetic.value_or(SyntheticConfig{});
    syn.seed = cfg.seed;

    SyntheticHistory produced = generate_synthetic_history(syn);
    History history;
    history.registry = std::move(produced.registry);
    history.years = std::move(produced.years);

    ensure_out_dir(cfg.out_dir);
    io::write_programs_csv(join(cfg.out_dir, "programs.csv"), history.registry);
    std::vector<std::string> attributes;
    for (const GroupSpec& g : syn.groups) attributes.push_back(g.attribute);
    std::vector<std::string> files = {"programs.csv"};
    for (const ApplicationSet& year : history.years) {
        const std::string name = "students_" + year.year_label + ".csv";
        io::write_students_csv(join(cfg.out_dir, name), year, syn.tests, attributes);
        files.push_back(name);
    }

    // Per-program SPD of the unbonused match, every year and attribute.
    std::string spd_csv = "program,attribute";
    for (const ApplicationSet& year : history.years) spd_csv += "," + year.year_label;
    spd_csv += "\n";
    std::string summary = "generated " + std::to_string(syn.n_years) + " years x " +
                          std::to_string(syn.n_students) + " students, " +
                          std::to_string(syn.n_programs) + " programs (seed " +
                          std::to_string(cfg.seed) + ")\n";

    for (const std::string& attribute : attributes) {
        const auto table = spd_over_years(history, attribute, 0, history.years.size());
        std::size_t p = 0;
        for (const auto& [pid, prog] : history.registry.programs) {
            spd_csv += pid + "," + attribute;
            for (const auto& cell : table[p]) spd_csv += "," + spd_cell(cell);
            spd_csv += "\n";
            ++p;
        }
    }
    io::write_text_file(join(cfg.out_dir, "spd_by_year.csv"), spd_csv);
    files.push_back("spd_by_year.csv");

    // Measured per-group score means, recomputed from the written data.
    for (const ApplicationSet& year : history.years) {
        summary += year.year_label + ":";
        for (const std::string& attribute : attributes) {
            double sum[2] = {0.0, 0.0};
            int count[2] = {0, 0};
            int protected_students = 0;
            for (const Student& s : year.students) {
                const int g = s.is_protected(attribute) ? 1 : 0;
                protected_students += g;
                for (const auto& [test, v] : s.tests) {
                    sum[g] += v;
                    ++count[g];
                }
            }
            const double mean_other = count[0] > 0 ? sum[0] / count[0] : 0.0;
            const double mean_prot = count[1] > 0 ? sum[1] / count[1] : 0.0;
            summary += " " + attribute + ": protected " +
                       fmt("%.1f%%", 100.0 * protected_students / year.students.size()) +
                       ", mean test " + fmt("%.1f", mean_prot) + " vs " +
                       fmt("%.1f", mean_other) + " (gap " + fmt("%.1f", mean_other - mean_prot) +
                       ");";
        }
        summary += "\n";
    }
    summary += "per-program SPD by year written to spd_by_year.csv\n";

    write_manifest(cfg, "generate");
    files.push_back("manifest.json");
    summary += "files:";
    for (const std::string& f : files) summary += " " + f;
    summary += "\n";
    return summary;
}

std::string run_suggest(const RunConfig& cfg) {
    cfg.validate();
    const History history = load_history(cfg);
    const std::size_t training = history.years.size() - 1;
    if (cfg.strategy.kind != StrategySpec::Kind::ideal && training < 1)
        throw InfeasibleError("strategy " + cfg.strategy.name() +
                              " needs at least one year of history before the evaluation year");

    const std::vector<ProgramId> targets = select_targets(history, cfg);
    const BonusGrid grid = cfg.grid();
    const double lambda = cfg.resolved_lambda();

    std::vector<PreparedSet> sets;
    int total_dropped = 0;
    int sampled_sets = 0;
    int cohort_size = 0;
    switch (cfg.strategy.kind) {
    case StrategySpec::Kind::ideal:
        sets.emplace_back(history.years.back(), history.registry);
        break;
    case StrategySpec::Kind::historical: {
        const std::size_t k = std::min<std::size_t>(cfg.strategy.param, training);
        for (std::size_t y = training - k; y < training; ++y)
            sets.emplace_back(history.years[y], history.registry);
        break;
    }
    case StrategySpec::Kind::predictive: {
        const ApplicationSet& train_year = history.years[training - 1];
        const ApplicantModel model = train(train_year, history.registry, cfg.attribute);
        cohort_size = cfg.sample_cohort_size > 0
                          ? cfg.sample_cohort_size
                          : static_cast<int>(train_year.students.size());
        sampled_sets = cfg.strategy.param;
        std::vector<ApplicationSet> sampled;
        sampled.reserve(sampled_sets);
        for (int i = 0; i < sampled_sets; ++i) {
            SampleStats stats;
            sampled.push_back(
                sample_application_set(model, cohort_size, derive_seed(cfg.seed, i), &stats));
            total_dropped += stats.dropped;
        }
        for (const ApplicationSet& set : sampled) sets.emplace_back(set, history.registry);
        break;
    }
    }

    SuggestionTable table =
        suggest_over_sets(cfg.strategy, sets, targets, cfg.attribute, grid, lambda);
    if (table.suggestions.empty())
        throw InfeasibleError("every target program was skipped; nothing to suggest");

    ensure_out_dir(cfg.out_dir);
    nlohmann::json j = io::suggestions_to_json(table);
    if (cfg.strategy.kind == StrategySpec::Kind::predictive)
        j["sampling"] = {{"sets", sampled_sets},
                         {"cohort_size", cohort_size},
                         {"dropped_students", total_dropped}};
    io::write_json_file(join(cfg.out_dir, "suggestions.json"), j);
    write_manifest(cfg, "suggest");

    std::string summary = cfg.strategy.name() + " suggested bonuses for " +
                          std::to_string(table.suggestions.size()) + " of " +
                          std::to_string(targets.size()) + " target programs (attribute " +
                          cfg.attribute + ", lambda " + io::format_double(lambda) + ")\n";
    for (const auto& [program, reason] : table.skipped)
        summary += "skipped " + program + ": " + reason + "\n";
    if (cfg.strategy.kind == StrategySpec::Kind::predictive && total_dropped > 0)
        summary += "dropped " + std::to_string(total_dropped) +
                   " sampled students with all-zero propensities\n";
    summary += "files: suggestions.json manifest.json\n";
    return summary;
}

std::string run_evaluate(const RunConfig& cfg, const std::string& suggestions_path) {
    cfg.validate();
    const History history = load_history(cfg);
    const SuggestionTable table =
        io::suggestions_from_json(io::load_json_file(suggestions_path));
    for (const PolicySuggestion& s : table.suggestions)
        if (!history.registry.contains(s.program))
            throw DataError("suggested program " + s.program +
                            " is not in the program registry");

    const PreparedSet realized(history.years.back(), history.registry);
    const StrategyEvaluation eval =
        evaluate_strategy(table.suggestions, realized, cfg.grid(), table.lambda);

    ensure_out_dir(cfg.out_dir);
    io::write_json_file(join(cfg.out_dir, "evaluation.json"), io::evaluation_to_json(eval));
    io::write_text_file(join(cfg.out_dir, "evaluation_summary.csv"),
                        io::evaluation_summary_to_csv(eval));
    io::write_text_file(join(cfg.out_dir, "evaluation_detail.csv"),
                        io::evaluation_detail_to_csv(eval));
    write_manifest(cfg, "evaluate");

    std::string summary =
        "evaluated " + eval.strategy.name() + " on year " + history.years.back().year_label +
        " (attribute " + eval.attribute + ", lambda " + io::format_double(eval.lambda) + ", " +
        std::to_string(eval.summary.n_programs) + " programs)\n";
    summary += "objective error vs ideal: mean " + fmt("%.4f", eval.summary.mean_objective_error) +
               ", sd " + fmt("%.4f", eval.summary.sd_objective_error) + "\n";
    summary += "|SPD_b| - |SPD_0|: mean " + fmt("%.4f", eval.summary.mean_spd_delta) + ", sd " +
               fmt("%.4f", eval.summary.sd_spd_delta) + "\n";
    summary += "suggested bonus: mean " + fmt("%.2f", eval.summary.mean_bonus) + ", sd " +
               fmt("%.2f", eval.summary.sd_bonus) + "\n";
    for (const auto& [program, reason] : eval.excluded)
        summary += "excluded " + program + ": " + reason + "\n";
    summary += "files: evaluation.json evaluation_summary.csv evaluation_detail.csv "
               "manifest.json\n";
    return summary;
}

std::string run_report(const RunConfig& cfg, const std::string& policy_path) {
    cfg.validate();
    const History history = load_history(cfg);
    BonusPolicy policy;
    if (!policy_path.empty()) {
        policy = io::policy_from_json(io::load_json_file(policy_path));
        for (const auto& [key, bonus] : policy.entries)
            if (!history.registry.contains(key.first))
                throw DataError("policy references unknown program " + key.first);
    }

    const ApplicationSet& realized = history.years.back();
    const MatchOutcome outcome = match(realized, history.registry, policy);
    std::vector<ProgramMetrics> rows;
    for (const auto& [pid, prog] : history.registry.programs)
        rows.push_back(program_metrics(outcome, pid, cfg.attribute));

    ensure_out_dir(cfg.out_dir);
    io::write_json_file(join(cfg.out_dir, "outcome.json"), io::outcome_to_json(outcome));
    io::write_text_file(join(cfg.out_dir, "metrics.csv"), io::metrics_to_csv(rows));
    io::write_json_file(join(cfg.out_dir, "metrics.json"), io::metrics_to_json(rows));

    // Retrospective SPD history of the unbonused match, with the
    // consistent-inequality flag over the last three years if present.
    const SpdByYear spd_table = baseline_spd_table(history, cfg.attribute);
    std::string spd_csv = "program";
    for (const std::string& label : spd_table.year_labels) spd_csv += "," + label;
    spd_csv += ",consistently_unequal\n";
    const std::size_t n_years = spd_table.year_labels.size();
    for (std::size_t p = 0; p < spd_table.programs.size(); ++p) {
        spd_csv += spd_table.programs[p];
        for (const auto& cell : spd_table.spd[p]) spd_csv += "," + spd_cell(cell);
        spd_csv += ",";
        if (n_years >= 3) {
            const std::span<const std::optional<double>> last3(
                spd_table.spd[p].data() + (n_years - 3), 3);
            if (const auto flag = consistently_unequal(last3))
                spd_csv += *flag ? "true" : "false";
        }
        spd_csv += "\n";
    }
    io::write_text_file(join(cfg.out_dir, "spd_by_year.csv"), spd_csv);
    write_manifest(cfg, "report");

    int admitted = 0;
    for (const auto& [student, program] : outcome.assignment)
        if (program) ++admitted;
    int defined = 0;
    int strongly = 0;
    double abs_sum = 0.0;
    for (const ProgramMetrics& m : rows)
        if (m.spd) {
            ++defined;
            abs_sum += std::abs(*m.spd);
            if (classify_spd(*m.spd) == SpdClass::strongly_unequal) ++strongly;
        }
    std::string summary = "report on year " + realized.year_label + " (attribute " +
                          cfg.attribute + ", " +
                          (policy.entries.empty()
                               ? std::string("no policy")
                               : std::to_string(policy.entries.size()) + " policy entries") +
                          ")\n";
    summary += "admitted " + std::to_string(admitted) + " of " +
               std::to_string(realized.students.size()) + " students across " +
               std::to_string(history.registry.programs.size()) + " programs\n";
    if (defined > 0)
        summary += "mean |SPD| " + fmt("%.4f", abs_sum / defined) + " over " +
                   std::to_string(defined) + " programs; " + std::to_string(strongly) +
                   " strongly unequal\n";
    summary += "files: outcome.json metrics.csv metrics.json spd_by_year.csv manifest.json\n";
    return summary;
}

} // namespace admissions
