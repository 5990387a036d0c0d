#include "admissions/matching.hpp"

#include <algorithm>

namespace admissions {

PreparedSet::PreparedSet(const ApplicationSet& apps, const ProgramRegistry& registry)
    : apps_(&apps), registry_(&registry) {
    validate_application_set(apps, registry);

    students_.reserve(apps.students.size());
    for (const auto& s : apps.students) students_.push_back(&s);
    std::sort(students_.begin(), students_.end(),
              [](const Student* a, const Student* b) { return a->id < b->id; });

    for (const auto& [pid, prog] : registry.programs) {
        validate_program(prog);
        program_index_[pid] = static_cast<int>(program_ids_.size());
        program_ids_.push_back(pid);
        capacity_.push_back(prog.capacity);
    }

    const int n = n_students();
    pref_offset_.assign(n + 1, 0);
    for (int s = 0; s < n; ++s) {
        pref_offset_[s + 1] = pref_offset_[s] + static_cast<std::int32_t>(students_[s]->preferences.size());
    }
    pref_program_.resize(pref_offset_[n]);
    pref_base_.resize(pref_offset_[n]);
    std::vector<std::vector<std::int32_t>> applicants(program_ids_.size());
    for (int s = 0; s < n; ++s) {
        const Student& stu = *students_[s];
        std::int32_t off = pref_offset_[s];
        for (const auto& pid : stu.preferences) {
            const int p = program_index_.at(pid);
            pref_program_[off] = p;
            pref_base_[off] = admission_score(stu, registry.at(pid));
            ++off;
            applicants[p].push_back(s);
        }
    }
    applicant_offset_.assign(program_ids_.size() + 1, 0);
    for (std::size_t p = 0; p < applicants.size(); ++p) {
        applicant_offset_[p + 1] = applicant_offset_[p] + static_cast<std::int32_t>(applicants[p].size());
    }
    applicant_ids_.resize(applicant_offset_.back());
    for (std::size_t p = 0; p < applicants.size(); ++p) {
        // Student indices were appended in ascending order already.
        std::copy(applicants[p].begin(), applicants[p].end(),
                  applicant_ids_.begin() + applicant_offset_[p]);
    }

    // Collect every attribute any student carries.
    for (const auto& s : apps.students) {
        for (const auto& [attr, flag] : s.groups) {
            (void)flag;
            if (!protected_.count(attr)) protected_[attr] = {};
        }
    }
    for (auto& [attr, flags] : protected_) {
        flags.resize(n, 0);
        for (int s = 0; s < n; ++s) {
            flags[s] = students_[s]->is_protected(attr) ? 1 : 0;
        }
        attributes_.push_back(attr);
    }
}

std::optional<int> PreparedSet::program_index(const ProgramId& id) const {
    auto it = program_index_.find(id);
    if (it == program_index_.end()) return std::nullopt;
    return it->second;
}

const std::vector<char>& PreparedSet::protected_flags(const std::string& attribute) const {
    auto it = protected_.find(attribute);
    if (it == protected_.end()) {
        throw DataError("attribute '" + attribute + "' not present in application set " +
                        apps_->year_label);
    }
    return it->second;
}

std::pair<int, int> PreparedSet::applicant_group_counts(int p, const std::string& attribute) const {
    const auto& flags = protected_flags(attribute);
    int prot = 0, other = 0;
    for (std::int32_t s : applicants_of(p)) {
        if (flags[s]) ++prot; else ++other;
    }
    return {prot, other};
}

Matcher::Matcher(const PreparedSet& prep) : prep_(&prep) {
    held_.resize(prep.n_programs());
    for (int p = 0; p < prep.n_programs(); ++p) held_[p].reserve(prep.capacity(p));
    next_slot_.resize(prep.n_students());
    free_.reserve(prep.n_students());
    outcome_.assigned_slot.resize(prep.n_students());
    outcome_.admitted.resize(prep.n_programs());
}

void Matcher::reset() {
    for (auto& h : held_) h.clear();
    free_.clear();
    std::fill(next_slot_.begin(), next_slot_.end(), 0);
    std::fill(outcome_.assigned_slot.begin(), outcome_.assigned_slot.end(), -1);
}

void Matcher::finish() {
    for (int p = 0; p < prep_->n_programs(); ++p) {
        auto& adm = outcome_.admitted[p];
        adm.clear();
        for (const Seat& seat : held_[p]) adm.push_back(seat.student);
        std::sort(adm.begin(), adm.end());
    }
}

MatchOutcome match(const ApplicationSet& apps, const ProgramRegistry& registry,
                   const BonusPolicy& policy) {
    PreparedSet prep(apps, registry);
    Matcher matcher(prep);
    if (policy.empty()) {
        const auto& idx = matcher.run([](int, int, int) { return 0.0; });
        return assemble_outcome(prep, idx, policy);
    }
    // Precompute per-slot additive bonuses for the general policy.
    std::vector<std::vector<double>> add(prep.n_students());
    for (int s = 0; s < prep.n_students(); ++s) {
        const auto prefs = prep.prefs(s);
        add[s].resize(prefs.size());
        for (std::size_t i = 0; i < prefs.size(); ++i) {
            add[s][i] = policy.bonus_for(prep.student(s), prep.program_id(prefs[i]));
        }
    }
    const auto& idx = matcher.run([&](int s, int slot, int) { return add[s][slot]; });
    return assemble_outcome(prep, idx, policy);
}

MatchOutcome assemble_outcome(const PreparedSet& prep, const IndexedOutcome& idx,
                              const BonusPolicy& policy) {
    MatchOutcome out;
    const auto& registry = prep.registry();
    for (int s = 0; s < prep.n_students(); ++s) {
        const int p = idx.assigned_program(prep, s);
        out.assignment[prep.student(s).id] =
            p < 0 ? std::nullopt : std::optional<ProgramId>(prep.program_id(p));
    }
    for (int p = 0; p < prep.n_programs(); ++p) {
        const ProgramId& pid = prep.program_id(p);
        ProgramResult res;
        for (std::int32_t s : idx.admitted[p]) {
            const Student& stu = prep.student(s);
            const double base = prep.base_scores(s)[idx.assigned_slot[s]];
            res.admitted.push_back({stu.id, base, base + policy.bonus_for(stu, pid)});
        }
        for (std::int32_t s : prep.applicants_of(p)) {
            res.applicants.push_back(prep.student(s).id);
        }
        if (static_cast<int>(res.admitted.size()) < prep.capacity(p)) {
            res.cutoff = registry.scale.min;
        } else {
            double lo = res.admitted.front().effective;
            for (const auto& a : res.admitted) lo = std::min(lo, a.effective);
            res.cutoff = lo;
        }
        for (const auto& attr : prep.attributes()) {
            const auto& flags = prep.protected_flags(attr);
            GroupCounts gc;
            for (std::int32_t s : prep.applicants_of(p)) {
                if (flags[s]) ++gc.applicants_protected; else ++gc.applicants_other;
            }
            for (std::int32_t s : idx.admitted[p]) {
                if (flags[s]) ++gc.admitted_protected; else ++gc.admitted_other;
            }
            res.groups[attr] = gc;
        }
        out.per_program[pid] = std::move(res);
    }
    return out;
}

Points cutoff(const MatchOutcome& outcome, const ProgramId& program) {
    auto it = outcome.per_program.find(program);
    if (it == outcome.per_program.end()) {
        throw DataError("program " + program + " not present in match outcome");
    }
    return it->second.cutoff;
}

} // namespace admissions
