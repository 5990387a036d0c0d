#pragma once

// Bonus-policy search and the design strategies built on it. The
// optimal bonus for one application set is the grid value minimizing
// the objective. The ideal strategy takes the hindsight optimum on
// the realized set; historical averaging averages per-year hindsight
// optima; the predictive strategy treats its sampled application sets
// as an evaluation environment and suggests the grid value minimizing
// the mean objective across them. Evaluation compares a suggestion
// table against the per-program ideal on the realized set.

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "admissions/matching.hpp"
#include "admissions/metrics.hpp"

namespace admissions {

struct BonusGrid {
    std::vector<Points> values;   // starts at 0, strictly increasing

    static BonusGrid uniform(Points max_bonus = 50.0, Points step = 1.0);
    void validate() const;        // throws ConfigError
    Points min_value() const { return values.front(); }
    Points max_value() const { return values.back(); }
    // Nearest grid value; exact midpoints resolve to the smaller bonus.
    Points snap(Points x) const;
};

struct StrategySpec {
    enum class Kind { ideal, historical, predictive };
    Kind kind = Kind::ideal;
    int param = 0;                // years of history or sampled sets

    std::string name() const;
    static StrategySpec parse(const std::string& text);
    bool operator==(const StrategySpec&) const = default;
};

struct PolicySuggestion {
    ProgramId program;
    std::string attribute;
    Points bonus = 0.0;           // raw; historical means may be fractional
    StrategySpec strategy;
    int support = 0;              // application sets / years averaged
};

// Grid search workspace bound to one prepared application set.
class SetOptimizer {
public:
    explicit SetOptimizer(const PreparedSet& prep);

    // Grid value minimizing the objective, ties toward the smallest
    // bonus. nullopt when the program is not applicable on this set
    // (a group with no applicants, or no defined objective anywhere).
    std::optional<Points> optimal_bonus(const ProgramId& program, const std::string& attribute,
                                        const BonusGrid& grid, double lambda);

    // Objective at every grid point (nullopt where undefined).
    std::vector<std::optional<ObjectiveValue>> grid_objectives(const ProgramId& program,
                                                               const std::string& attribute,
                                                               const BonusGrid& grid,
                                                               double lambda);

    // Objective of a single bonus value against the b=0 baseline.
    std::optional<ObjectiveValue> objective_at(const ProgramId& program,
                                               const std::string& attribute, Points bonus,
                                               double lambda);

    // Signed SPD at a single bonus value.
    std::optional<double> spd_at(const ProgramId& program, const std::string& attribute,
                                 Points bonus);

    const PreparedSet& prepared() const { return *prep_; }

private:
    struct PointStats {
        bool has_admitted = false;
        double mu = 0.0;
        std::optional<double> spd;
    };
    PointStats evaluate_point(int program_idx, const std::vector<char>& flags, Points bonus,
                              int applicants_protected, int applicants_other);

    const PreparedSet* prep_;
    Matcher matcher_;
};

// Spec operations (thin wrappers; each prepares the sets it is given).
std::optional<Points> optimal_bonus(const ApplicationSet& apps, const ProgramRegistry& registry,
                                    const ProgramId& program, const std::string& attribute,
                                    const BonusGrid& grid, double lambda);

std::optional<PolicySuggestion> suggest_predictive(std::span<const ApplicationSet> sampled,
                                                   const ProgramRegistry& registry,
                                                   const ProgramId& program,
                                                   const std::string& attribute,
                                                   const BonusGrid& grid, double lambda);

// history ordered oldest first; uses the last k years, truncating when
// fewer exist.
std::optional<PolicySuggestion> suggest_historical(std::span<const ApplicationSet> history,
                                                   const ProgramRegistry& registry, int k,
                                                   const ProgramId& program,
                                                   const std::string& attribute,
                                                   const BonusGrid& grid, double lambda);

std::optional<PolicySuggestion> ideal_policy(const ApplicationSet& realized,
                                             const ProgramRegistry& registry,
                                             const ProgramId& program,
                                             const std::string& attribute,
                                             const BonusGrid& grid, double lambda);

// Bulk path used by the pipeline: mean per-set optimum for every target
// program over the given prepared sets. Programs with no applicable set
// are reported in `skipped` with a reason.
struct SuggestionTable {
    StrategySpec strategy;
    std::string attribute;
    double lambda = 0.0;
    std::vector<PolicySuggestion> suggestions;                 // sorted by program id
    std::vector<std::pair<ProgramId, std::string>> skipped;    // (program, reason)
};

SuggestionTable suggest_over_sets(const StrategySpec& strategy,
                                  std::span<const PreparedSet> sets,
                                  std::span<const ProgramId> targets,
                                  const std::string& attribute, const BonusGrid& grid,
                                  double lambda);

// Across-set mean of the objective at every grid point, accumulated
// one set at a time so large collections of sampled sets can be
// streamed and discarded. The predictive and ideal strategies suggest
// the grid value minimizing this mean (ties toward the smallest
// bonus); historical averaging instead averages per-year optima.
class MeanObjectiveAccumulator {
public:
    MeanObjectiveAccumulator(std::vector<ProgramId> targets, std::string attribute,
                             BonusGrid grid, double lambda);

    void add_set(const PreparedSet& prep);
    int sets_seen() const { return sets_seen_; }

    // Current suggestions; may be snapshotted repeatedly while more
    // sets are added. Programs with no applicable set are skipped.
    SuggestionTable table(const StrategySpec& strategy) const;

private:
    std::vector<ProgramId> targets_;
    std::string attribute_;
    BonusGrid grid_;
    double lambda_ = 0.0;
    int sets_seen_ = 0;
    std::vector<std::vector<double>> sum_;    // [target][grid point]
    std::vector<std::vector<int>> count_;     // sets where the point was defined
};

// Evaluation of one strategy's suggestions on the realized set.
struct ProgramEvaluation {
    ProgramId program;
    Points suggested_bonus = 0.0;   // raw strategy output
    Points evaluated_bonus = 0.0;   // snapped to the grid for outcome computation
    Points ideal_bonus = 0.0;
    double objective_suggested = 0.0;
    double objective_ideal = 0.0;
    double objective_error = 0.0;   // objective_suggested - objective_ideal
    double abs_spd_bonus = 0.0;
    double abs_spd_baseline = 0.0;
    double spd_delta = 0.0;         // |SPD_b| - |SPD_0|
    double utility_loss = 0.0;
    int support = 0;
};

struct EvaluationSummary {
    int n_programs = 0;
    int n_excluded = 0;
    double mean_objective_error = 0.0;
    double sd_objective_error = 0.0;
    double mean_spd_delta = 0.0;
    double sd_spd_delta = 0.0;
    double mean_bonus = 0.0;        // raw suggested bonuses
    double sd_bonus = 0.0;
};

struct StrategyEvaluation {
    StrategySpec strategy;
    std::string attribute;
    double lambda = 0.0;
    std::vector<ProgramEvaluation> rows;                      // sorted by program id
    std::vector<std::pair<ProgramId, std::string>> excluded;  // undefined metrics
    EvaluationSummary summary;
};

// `ideal_bonuses` may carry precomputed hindsight optima on the realized
// set to avoid re-running the ideal grid search per strategy.
StrategyEvaluation evaluate_strategy(const std::vector<PolicySuggestion>& suggestions,
                                     const PreparedSet& realized, const BonusGrid& grid,
                                     double lambda,
                                     const std::map<ProgramId, Points>* ideal_bonuses = nullptr);

} // namespace admissions
