#pragma once

// Capacity-constrained stable matching of one application set to the
// program registry: student-proposing deferred acceptance with
// priorities given by effective score (admission score plus bonus),
// ties broken by ascending student id. The outcome is the unique
// student-optimal stable matching and is deterministic for fixed
// inputs.
//
// PreparedSet is an index-based view of an application set with base
// admission scores precomputed per preference slot. Grid searches run
// thousands of matchings per set, so Matcher keeps reusable workspace
// and takes the bonus as an inlined callable.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "admissions/model.hpp"

namespace admissions {

struct AdmittedStudent {
    StudentId id;
    Points score;       // raw admission score, no bonus
    Points effective;   // priority the seat was held at
};

struct GroupCounts {
    int applicants_protected = 0;
    int applicants_other = 0;
    int admitted_protected = 0;
    int admitted_other = 0;
};

struct ProgramResult {
    std::vector<AdmittedStudent> admitted;    // ascending student id
    std::vector<StudentId> applicants;        // everyone listing the program, ascending
    Points cutoff = 0.0;                      // min admitted effective; scale min if seats free
    std::map<std::string, GroupCounts> groups;
};

struct MatchOutcome {
    std::map<StudentId, std::optional<ProgramId>> assignment;
    std::map<ProgramId, ProgramResult> per_program;
};

class PreparedSet {
public:
    // Validates the set against the registry and precomputes base
    // scores for every (student, listed program) pair. Throws DataError
    // on missing score components or unregistered programs.
    PreparedSet(const ApplicationSet& apps, const ProgramRegistry& registry);

    int n_students() const { return static_cast<int>(students_.size()); }
    int n_programs() const { return static_cast<int>(program_ids_.size()); }

    const Student& student(int s) const { return *students_[s]; }
    const ProgramId& program_id(int p) const { return program_ids_[p]; }
    int capacity(int p) const { return capacity_[p]; }
    std::optional<int> program_index(const ProgramId& id) const;

    std::span<const std::int32_t> prefs(int s) const {
        return {pref_program_.data() + pref_offset_[s],
                static_cast<std::size_t>(pref_offset_[s + 1] - pref_offset_[s])};
    }
    std::span<const double> base_scores(int s) const {
        return {pref_base_.data() + pref_offset_[s],
                static_cast<std::size_t>(pref_offset_[s + 1] - pref_offset_[s])};
    }

    std::span<const std::int32_t> applicants_of(int p) const {
        return {applicant_ids_.data() + applicant_offset_[p],
                static_cast<std::size_t>(applicant_offset_[p + 1] - applicant_offset_[p])};
    }

    const std::vector<std::string>& attributes() const { return attributes_; }
    // Per-student protected flags for one attribute; throws DataError if unseen.
    const std::vector<char>& protected_flags(const std::string& attribute) const;
    // (protected, other) applicant counts for one program and attribute.
    std::pair<int, int> applicant_group_counts(int p, const std::string& attribute) const;

    const ApplicationSet& applications() const { return *apps_; }
    const ProgramRegistry& registry() const { return *registry_; }

private:
    const ApplicationSet* apps_;
    const ProgramRegistry* registry_;
    std::vector<const Student*> students_;        // ascending id; index order = tie-break order
    std::vector<ProgramId> program_ids_;          // ascending
    std::map<ProgramId, int> program_index_;
    std::vector<int> capacity_;
    std::vector<std::int32_t> pref_offset_;       // n_students + 1
    std::vector<std::int32_t> pref_program_;
    std::vector<double> pref_base_;
    std::vector<std::int32_t> applicant_offset_;  // n_programs + 1
    std::vector<std::int32_t> applicant_ids_;
    std::vector<std::string> attributes_;
    std::map<std::string, std::vector<char>> protected_;
};

struct IndexedOutcome {
    std::vector<std::int32_t> assigned_slot;            // per student; -1 unassigned
    std::vector<std::vector<std::int32_t>> admitted;    // per program, ascending student index

    int assigned_program(const PreparedSet& prep, int s) const {
        return assigned_slot[s] < 0 ? -1 : prep.prefs(s)[assigned_slot[s]];
    }
};

// Reusable deferred-acceptance workspace bound to one PreparedSet.
class Matcher {
public:
    explicit Matcher(const PreparedSet& prep);

    // bonus(student_index, slot, program_index) -> Points added on top of
    // the base score. Must be >= 0.
    template <typename BonusFn>
    const IndexedOutcome& run(BonusFn&& bonus) {
        reset();
        const auto& prep = *prep_;
        const int n = prep.n_students();
        // Stack of free students, seeded in reverse so lower ids propose first.
        for (int s = n - 1; s >= 0; --s) free_.push_back(s);
        while (!free_.empty()) {
            const int s = free_.back();
            free_.pop_back();
            const auto prefs = prep.prefs(s);
            const auto base = prep.base_scores(s);
            int slot = next_slot_[s];
            for (; slot < static_cast<int>(prefs.size()); ++slot) {
                const int p = prefs[slot];
                const double eff = base[slot] + bonus(s, slot, p);
                auto& held = held_[p];
                if (static_cast<int>(held.size()) < prep.capacity(p)) {
                    held.push_back({eff, s});
                    std::push_heap(held.begin(), held.end(), Better{});
                    break;
                }
                // Full: heap top is the current worst seat-holder.
                const Seat worst = held.front();
                if (worst.eff < eff || (worst.eff == eff && worst.student > s)) {
                    std::pop_heap(held.begin(), held.end(), Better{});
                    held.back() = {eff, s};
                    std::push_heap(held.begin(), held.end(), Better{});
                    free_.push_back(worst.student);
                    break;
                }
            }
            if (slot < static_cast<int>(prefs.size())) {
                outcome_.assigned_slot[s] = slot;
                next_slot_[s] = slot + 1;
            } else {
                outcome_.assigned_slot[s] = -1;
            }
        }
        finish();
        return outcome_;
    }

    const IndexedOutcome& outcome() const { return outcome_; }

private:
    struct Seat {
        double eff;
        std::int32_t student;
    };
    // Heap comparator: "better" seats sink, so the top is the worst held seat.
    struct Better {
        bool operator()(const Seat& a, const Seat& b) const {
            return a.eff > b.eff || (a.eff == b.eff && a.student < b.student);
        }
    };

    void reset();
    void finish();

    const PreparedSet* prep_;
    std::vector<std::vector<Seat>> held_;
    std::vector<std::int32_t> free_;
    std::vector<std::int32_t> next_slot_;
    IndexedOutcome outcome_;
};

// Full matching with a general bonus policy. Validates inputs; an empty
// application set yields an empty outcome.
MatchOutcome match(const ApplicationSet& apps, const ProgramRegistry& registry,
                   const BonusPolicy& policy);

// Expand an indexed outcome into the id-keyed form, recomputing
// effective scores with the same policy the run used.
MatchOutcome assemble_outcome(const PreparedSet& prep, const IndexedOutcome& idx,
                              const BonusPolicy& policy);

// Minimum admitted effective score; scale minimum while seats remain.
// Throws DataError for programs absent from the outcome.
Points cutoff(const MatchOutcome& outcome, const ProgramId& program);

} // namespace admissions
