#pragma once

// Application-behavior model and synthetic cohort generator. The model
// estimates, per program, the empirical probability that a student in a
// (score bucket, group) cell lists the program, and resamples students
// by bootstrap from the training cohort. The generator produces multi-
// year synthetic histories with configurable group score gaps and
// prestige-assorted preferences, standing in for real admission data.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "admissions/model.hpp"

namespace admissions {

// Unweighted mean of grades and all test scores; the bucketing score.
double composite_score(const Student& s);

// Pseudo-count weight pulling cell propensities toward the bucket
// marginal. Small cells are regularized hard (an empty cell IS the
// marginal); large cells keep their empirical rates. This is what keeps
// sampled cohorts from exaggerating group differences the training year
// only showed by chance.
inline constexpr double kDefaultShrinkage = 25.0;

struct ApplicantModel {
    std::string attribute;           // group label the cells condition on
    std::string trained_on;          // year label of the training cohort
    ScoreScale scale;
    double bucket_width = 50.0;
    double shrinkage = kDefaultShrinkage;
    std::vector<ProgramId> programs; // ascending; column order of propensity rows

    // propensity[bucket][group][program], group index 1 = protected;
    // (listed + shrinkage * marginal) / (cell size + shrinkage).
    std::vector<std::array<std::vector<double>, 2>> propensity;
    std::vector<std::array<int, 2>> cell_students;   // training counts per cell
    std::vector<double> length_dist;                 // P(list length = k), k = 1..10
    std::vector<Student> pool;                       // bootstrap pool

    int n_buckets() const { return static_cast<int>(propensity.size()); }
    int bucket_of(double composite) const;
};

// Estimates cell propensities and the preference-length distribution
// from one cohort. Deterministic. Throws DataError on an empty cohort.
ApplicantModel train(const ApplicationSet& cohort, const ProgramRegistry& registry,
                     const std::string& attribute, double bucket_width = 50.0,
                     double shrinkage = kDefaultShrinkage);

struct SampleStats {
    int dropped = 0;   // students whose every propensity was zero
};

// Bootstrap-resamples n_students from the pool (with replacement, fresh
// ids) and samples each a preference list: programs drawn without
// replacement proportionally to cell propensity, ordered by noisy
// propensity, truncated at 10. Deterministic per seed.
ApplicationSet sample_application_set(const ApplicantModel& model, int n_students,
                                      std::uint64_t seed, SampleStats* stats = nullptr);

struct GroupSpec {
    std::string attribute;
    double test_gap = 28.0;        // protected-group test score deficit, points
    double grade_gap = 8.0;        // smaller deficit on grades
    double protected_share = 0.5;
};

struct SyntheticConfig {
    int n_students = 1000;
    int n_programs = 40;
    int n_years = 5;
    std::vector<GroupSpec> groups = {{"income", 28.0, 8.0, 0.5}, {"gender", 23.0, 6.0, 0.5}};
    std::vector<std::string> tests = {"math", "lang"};
    double prestige_preference_strength = 8.0;  // pull toward quality-matched programs
    int capacity_min = 8;
    int capacity_max = 20;
    double ability_sd = 80.0;
    double grade_noise_sd = 45.0;
    double test_noise_sd = 40.0;
    double year_gap_jitter = 4.0;    // per-year drift of the group gaps
    double share_jitter = 0.05;      // per-year drift of group composition
    double popularity_sd = 0.5;      // persistent per-program appeal spread
    double popularity_year_sd = 0.25; // per-(year, program) preference shock
    int pref_len_min = 2;
    int pref_len_max = 8;
    std::uint64_t seed = 1;
};

void validate(const SyntheticConfig& cfg);   // throws ConfigError

struct SyntheticHistory {
    ProgramRegistry registry;
    std::vector<ApplicationSet> years;       // oldest first, labels y01, y02, ...
};

// Seeded, byte-reproducible multi-year history. Higher-scoring students
// prefer higher-quality programs; protected-group score distributions
// sit below the rest by the configured gaps, with year-to-year drift.
SyntheticHistory generate_synthetic_history(const SyntheticConfig& cfg);

} // namespace admissions
