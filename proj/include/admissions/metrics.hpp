#pragma once

// Fairness and utility measurement on match outcomes: statistical
// parity difference (SPD) of admission rates, utility (mean raw
// admitted score), the bonus-design objective, program prestige, and
// the consistent-inequality filter. Metrics that cannot be computed
// are reported as empty optionals, never coerced to zero.

#include <optional>
#include <span>
#include <string>

#include "admissions/matching.hpp"

namespace admissions {

// |SPD| <= 0.1 is acceptable; outside that band is strongly unequal.
enum class SpdClass { acceptable, strongly_unequal };

inline SpdClass classify_spd(double spd_value) {
    return (spd_value > 0.1 || spd_value < -0.1) ? SpdClass::strongly_unequal
                                                 : SpdClass::acceptable;
}

const char* to_string(SpdClass c);

// Admission-rate gap between the protected group and everyone else,
// over all students listing the program. nullopt when either group has
// no applicants. Throws DataError for unknown programs/attributes.
std::optional<double> spd(const MatchOutcome& outcome, const ProgramId& program,
                          const std::string& attribute);

// Mean raw admission score of admitted students; nullopt when none.
std::optional<Points> utility(const MatchOutcome& outcome, const ProgramId& program);

struct ObjectiveValue {
    double value = 0.0;         // utility_loss + lambda * abs_spd
    double utility_loss = 0.0;  // mu_0 - mu_b, points
    double abs_spd = 0.0;
    double lambda = 0.0;
};

// Objective of a bonus outcome against the no-intervention baseline for
// one program. Both outcomes must come from the same application set.
std::optional<ObjectiveValue> objective(const MatchOutcome& with_bonus,
                                        const MatchOutcome& baseline,
                                        const ProgramId& program,
                                        const std::string& attribute, double lambda);

// Mean raw admission score pooled over all students admitted to the
// program in the last (up to) three outcomes of `history`, oldest
// first. nullopt when nobody was admitted in the window.
std::optional<Points> prestige(const ProgramId& program, std::span<const MatchOutcome> history);

inline constexpr double kDefaultInequalityFloor = 0.05;
inline constexpr double kStrongSpdBound = 0.1;

// Three-condition filter over exactly three consecutive years of SPD:
// (i) |SPD| above the floor every year, (ii) the same group behind every
// year, (iii) |SPD| > 0.1 in at least two years. nullopt when any year
// is undefined.
std::optional<bool> consistently_unequal(std::span<const std::optional<double>> spd_history,
                                         double inequality_floor = kDefaultInequalityFloor);

// Per-program metric row for report tables.
struct ProgramMetrics {
    ProgramId program;
    std::optional<double> spd;
    std::optional<Points> utility;
    int admitted_count = 0;
    int applicants_protected = 0;
    int applicants_other = 0;
};

ProgramMetrics program_metrics(const MatchOutcome& outcome, const ProgramId& program,
                               const std::string& attribute);

} // namespace admissions
