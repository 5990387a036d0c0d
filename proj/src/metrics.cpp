#include "admissions/metrics.hpp"

#include <cmath>

namespace admissions {

namespace {

const ProgramResult& program_result(const MatchOutcome& outcome, const ProgramId& program) {
    auto it = outcome.per_program.find(program);
    if (it == outcome.per_program.end()) {
        throw DataError("program " + program + " not present in match outcome");
    }
    return it->second;
}

const GroupCounts& group_counts(const ProgramResult& res, const ProgramId& program,
                                const std::string& attribute) {
    auto it = res.groups.find(attribute);
    if (it == res.groups.end()) {
        throw DataError("attribute '" + attribute + "' not tracked for program " + program);
    }
    return it->second;
}

} // namespace

const char* to_string(SpdClass c) {
    return c == SpdClass::strongly_unequal ? "strongly_unequal" : "acceptable";
}

std::optional<double> spd(const MatchOutcome& outcome, const ProgramId& program,
                          const std::string& attribute) {
    const auto& gc = group_counts(program_result(outcome, program), program, attribute);
    if (gc.applicants_protected == 0 || gc.applicants_other == 0) return std::nullopt;
    const double rate_protected =
        static_cast<double>(gc.admitted_protected) / static_cast<double>(gc.applicants_protected);
    const double rate_other =
        static_cast<double>(gc.admitted_other) / static_cast<double>(gc.applicants_other);
    return rate_protected - rate_other;
}

std::optional<Points> utility(const MatchOutcome& outcome, const ProgramId& program) {
    const auto& res = program_result(outcome, program);
    if (res.admitted.empty()) return std::nullopt;
    double sum = 0.0;
    for (const auto& a : res.admitted) sum += a.score;
    return sum / static_cast<double>(res.admitted.size());
}

std::optional<ObjectiveValue> objective(const MatchOutcome& with_bonus,
                                        const MatchOutcome& baseline,
                                        const ProgramId& program,
                                        const std::string& attribute, double lambda) {
    if (lambda < 0.0) throw ConfigError("lambda must be >= 0");
    auto mu_b = utility(with_bonus, program);
    auto mu_0 = utility(baseline, program);
    auto spd_b = spd(with_bonus, program, attribute);
    if (!mu_b || !mu_0 || !spd_b) return std::nullopt;
    ObjectiveValue v;
    v.lambda = lambda;
    v.utility_loss = *mu_0 - *mu_b;
    v.abs_spd = std::abs(*spd_b);
    v.value = v.utility_loss + lambda * v.abs_spd;
    return v;
}

std::optional<Points> prestige(const ProgramId& program, std::span<const MatchOutcome> history) {
    const std::size_t window = history.size() > 3 ? 3 : history.size();
    double sum = 0.0;
    int count = 0;
    for (std::size_t i = history.size() - window; i < history.size(); ++i) {
        auto it = history[i].per_program.find(program);
        if (it == history[i].per_program.end()) continue;
        for (const auto& a : it->second.admitted) {
            sum += a.score;
            ++count;
        }
    }
    if (count == 0) return std::nullopt;
    return sum / static_cast<double>(count);
}

std::optional<bool> consistently_unequal(std::span<const std::optional<double>> spd_history,
                                         double inequality_floor) {
    if (spd_history.size() != 3) {
        throw ConfigError("consistently_unequal expects exactly 3 years of SPD history, got " +
                          std::to_string(spd_history.size()));
    }
    for (const auto& s : spd_history) {
        if (!s) return std::nullopt;
    }
    int strong = 0;
    bool all_negative = true, all_positive = true;
    for (const auto& s : spd_history) {
        const double v = *s;
        if (std::abs(v) <= inequality_floor) return false;   // (i) unequal every year
        if (v < 0.0) all_positive = false;
        if (v > 0.0) all_negative = false;
        if (std::abs(v) > kStrongSpdBound) ++strong;
    }
    if (!all_negative && !all_positive) return false;       // (ii) same group behind
    return strong >= 2;                                      // (iii) strong in 2 of 3
}

ProgramMetrics program_metrics(const MatchOutcome& outcome, const ProgramId& program,
                               const std::string& attribute) {
    const auto& res = program_result(outcome, program);
    const auto& gc = group_counts(res, program, attribute);
    ProgramMetrics m;
    m.program = program;
    m.spd = spd(outcome, program, attribute);
    m.utility = utility(outcome, program);
    m.admitted_count = static_cast<int>(res.admitted.size());
    m.applicants_protected = gc.applicants_protected;
    m.applicants_other = gc.applicants_other;
    return m;
}

} // namespace admissions
