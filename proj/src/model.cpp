#include "admissions/model.hpp"

#include <cmath>
#include <set>

namespace admissions {

const char* to_string(Provenance p) {
    switch (p) {
        case Provenance::historical: return "historical";
        case Provenance::sampled: return "sampled";
        case Provenance::synthetic: return "synthetic";
    }
    return "historical";
}

Provenance provenance_from_string(const std::string& s) {
    if (s == "historical") return Provenance::historical;
    if (s == "sampled") return Provenance::sampled;
    if (s == "synthetic") return Provenance::synthetic;
    throw DataError("unknown provenance: " + s);
}

void BonusPolicy::set_bonus(const ProgramId& program, const std::string& attribute, Points bonus) {
    if (!(bonus >= 0.0)) {
        throw ConfigError("bonus must be non-negative, got " + std::to_string(bonus) +
                          " for (" + program + ", " + attribute + ")");
    }
    if (bonus > max_bonus) {
        throw ConfigError("bonus " + std::to_string(bonus) + " exceeds maximum " +
                          std::to_string(max_bonus) + " for (" + program + ", " + attribute + ")");
    }
    entries[{program, attribute}] = bonus;
}

std::optional<Points> BonusPolicy::bonus(const ProgramId& program, const std::string& attribute) const {
    auto it = entries.find({program, attribute});
    if (it == entries.end()) return std::nullopt;
    return it->second;
}

Points BonusPolicy::bonus_for(const Student& s, const ProgramId& program) const {
    Points total = 0.0;
    auto it = entries.lower_bound({program, std::string()});
    for (; it != entries.end() && it->first.first == program; ++it) {
        if (s.is_protected(it->first.second)) total += it->second;
    }
    return total;
}

void validate_student(const Student& s, const ScoreScale& scale) {
    if (s.id.empty()) throw DataError("student with empty id");
    if (s.preferences.empty() || static_cast<int>(s.preferences.size()) > kMaxPreferences) {
        throw DataError("student " + s.id + ": preference list length must be 1.." +
                        std::to_string(kMaxPreferences) + ", got " +
                        std::to_string(s.preferences.size()));
    }
    std::set<ProgramId> seen;
    for (const auto& p : s.preferences) {
        if (!seen.insert(p).second) {
            throw DataError("student " + s.id + ": duplicate preference " + p);
        }
    }
    auto in_scale = [&](Points v) { return v >= scale.min && v <= scale.max; };
    if (!in_scale(s.grades)) {
        throw DataError("student " + s.id + ": grade score " + std::to_string(s.grades) +
                        " outside scale");
    }
    for (const auto& [name, v] : s.tests) {
        if (!in_scale(v)) {
            throw DataError("student " + s.id + ": test " + name + " score " +
                            std::to_string(v) + " outside scale");
        }
    }
}

void validate_program(const Program& p) {
    if (p.id.empty()) throw DataError("program with empty id");
    if (p.capacity < 1) {
        throw DataError("program " + p.id + ": capacity must be >= 1, got " +
                        std::to_string(p.capacity));
    }
    if (p.weights.empty()) throw DataError("program " + p.id + ": no score weights");
    Points sum = 0.0;
    for (const auto& [name, w] : p.weights) {
        if (w < 0.0) {
            throw DataError("program " + p.id + ": negative weight for " + name);
        }
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw DataError("program " + p.id + ": weights sum to " + std::to_string(sum) +
                        ", expected 1");
    }
}

void validate_application_set(const ApplicationSet& apps, const ProgramRegistry& registry) {
    std::set<StudentId> ids;
    for (const auto& s : apps.students) {
        validate_student(s, registry.scale);
        if (!ids.insert(s.id).second) {
            throw DataError("application set " + apps.year_label + ": duplicate student id " + s.id);
        }
        for (const auto& pid : s.preferences) {
            if (!registry.contains(pid)) {
                throw DataError("application set " + apps.year_label + ": student " + s.id +
                                " lists unregistered program " + pid);
            }
        }
    }
}

Points admission_score(const Student& s, const Program& p) {
    Points total = 0.0;
    for (const auto& [component, weight] : p.weights) {
        if (weight <= 0.0) continue;
        auto v = s.component_score(component);
        if (!v) {
            throw DataError("student " + s.id + " has no score for component '" + component +
                            "' required by program " + p.id);
        }
        total += weight * *v;
    }
    return total;
}

Points effective_score(const Student& s, const Program& p, const BonusPolicy& policy) {
    return admission_score(s, p) + policy.bonus_for(s, p.id);
}

} // namespace admissions
