#pragma once

// Domain types for a centralized, score-based admission market:
// students with ranked program preferences, programs with weighted
// score formulas, yearly application sets, and per-(program, group)
// bonus-point policies. All types are immutable value types once
// built; the score operations are pure.

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "admissions/errors.hpp"

namespace admissions {

using StudentId = std::string;
using ProgramId = std::string;
using Points = double;

inline constexpr int kMaxPreferences = 10;

// Admission points scale. Effective scores (bonus included) may exceed
// max: they act as priorities, not reported scores.
struct ScoreScale {
    Points min = 150.0;
    Points max = 850.0;
};

// Component name used for high school grades in program weight maps.
inline constexpr const char* kGradesComponent = "grades";

struct Student {
    StudentId id;
    Points grades = 0.0;
    std::map<std::string, Points> tests;     // test name -> points
    std::map<std::string, bool> groups;      // attribute -> protected?
    std::vector<ProgramId> preferences;      // ranked, 1..10, no duplicates

    bool is_protected(const std::string& attribute) const {
        auto it = groups.find(attribute);
        return it != groups.end() && it->second;
    }

    // grades + test score, by component name; nullopt when absent.
    std::optional<Points> component_score(const std::string& component) const {
        if (component == kGradesComponent) return grades;
        auto it = tests.find(component);
        if (it == tests.end()) return std::nullopt;
        return it->second;
    }
};

struct Program {
    ProgramId id;
    int capacity = 1;
    std::map<std::string, Points> weights;   // component -> weight, sums to 1
    std::optional<Points> prestige;          // mean admitted score, last 3 years
};

struct ProgramRegistry {
    ScoreScale scale;
    std::map<ProgramId, Program> programs;

    const Program& at(const ProgramId& id) const {
        auto it = programs.find(id);
        if (it == programs.end()) throw DataError("unknown program id: " + id);
        return it->second;
    }
    bool contains(const ProgramId& id) const { return programs.count(id) > 0; }
};

enum class Provenance { historical, sampled, synthetic };

const char* to_string(Provenance p);
Provenance provenance_from_string(const std::string& s);

// One cohort of students; the unit over which a matching runs.
struct ApplicationSet {
    std::string year_label;
    Provenance provenance = Provenance::historical;
    std::vector<Student> students;
};

// Per-(program, attribute) bonus points added to protected applicants'
// scores at that program. Never reorders students within a group.
struct BonusPolicy {
    Points max_bonus = 50.0;
    std::map<std::pair<ProgramId, std::string>, Points> entries;

    void set_bonus(const ProgramId& program, const std::string& attribute, Points bonus);
    std::optional<Points> bonus(const ProgramId& program, const std::string& attribute) const;

    // Sum of bonuses the student qualifies for at this program.
    Points bonus_for(const Student& s, const ProgramId& program) const;

    bool empty() const { return entries.empty(); }
};

void validate_student(const Student& s, const ScoreScale& scale);
void validate_program(const Program& p);
void validate_application_set(const ApplicationSet& apps, const ProgramRegistry& registry);

// Weighted average of grade and test scores per the program's weights.
// Throws DataError naming the component when the student lacks a score
// for a positively weighted component.
Points admission_score(const Student& s, const Program& p);

// admission_score plus all applicable bonus entries; >= admission_score.
Points effective_score(const Student& s, const Program& p, const BonusPolicy& policy);

} // namespace admissions
