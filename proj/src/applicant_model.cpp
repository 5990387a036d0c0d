#include "admissions/applicant_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "admissions/errors.hpp"
#include "admissions/rng.hpp"

namespace admissions {

namespace {

// Jitter added to propensities when ordering a sampled preference list,
// so near-equal programs do not always appear in the same order.
constexpr double kRankNoise = 0.05;

std::string zero_padded(int value, int width) {
    std::string digits = std::to_string(value);
    if (static_cast<int>(digits.size()) < width)
        digits.insert(digits.begin(), width - digits.size(), '0');
    return digits;
}

int digits_of(int n) {
    int d = 1;
    while (n >= 10) {
        n /= 10;
        ++d;
    }
    return d;
}

} // namespace

double composite_score(const Student& s) {
    double sum = s.grades;
    for (const auto& [name, value] : s.tests) sum += value;
    return sum / static_cast<double>(1 + s.tests.size());
}

int ApplicantModel::bucket_of(double composite) const {
    const int b = static_cast<int>((composite - scale.min) / bucket_width);
    return std::clamp(b, 0, n_buckets() - 1);
}

ApplicantModel train(const ApplicationSet& cohort, const ProgramRegistry& registry,
                     const std::string& attribute, double bucket_width, double shrinkage) {
    if (cohort.students.empty())
        throw DataError("cannot train an applicant model on an empty cohort");
    if (!(bucket_width > 0.0))
        throw ConfigError("bucket width must be positive");
    if (shrinkage < 0.0)
        throw ConfigError("propensity shrinkage must be non-negative");
    validate_application_set(cohort, registry);

    ApplicantModel model;
    model.attribute = attribute;
    model.trained_on = cohort.year_label;
    model.scale = registry.scale;
    model.bucket_width = bucket_width;
    model.shrinkage = shrinkage;
    for (const auto& [id, program] : registry.programs) model.programs.push_back(id);

    const int n_buckets = std::max(
        1, static_cast<int>(std::ceil((registry.scale.max - registry.scale.min) / bucket_width)));
    const int n_programs = static_cast<int>(model.programs.size());
    // listed[bucket][group][program]: students in the cell whose list contains the program
    std::vector<std::array<std::vector<int>, 2>> listed(
        n_buckets, {std::vector<int>(n_programs, 0), std::vector<int>(n_programs, 0)});
    model.cell_students.assign(n_buckets, {0, 0});
    model.length_dist.assign(kMaxPreferences, 0.0);
    model.propensity.assign(
        n_buckets, {std::vector<double>(n_programs, 0.0), std::vector<double>(n_programs, 0.0)});

    for (const Student& s : cohort.students) {
        const int b = model.bucket_of(composite_score(s));
        const int g = s.is_protected(attribute) ? 1 : 0;
        ++model.cell_students[b][g];
        model.length_dist[s.preferences.size() - 1] += 1.0;
        for (const ProgramId& pid : s.preferences) {
            const auto it = std::lower_bound(model.programs.begin(), model.programs.end(), pid);
            ++listed[b][g][it - model.programs.begin()];
        }
    }
    for (double& p : model.length_dist) p /= static_cast<double>(cohort.students.size());

    for (int b = 0; b < n_buckets; ++b) {
        const int pooled = model.cell_students[b][0] + model.cell_students[b][1];
        if (pooled == 0) continue;   // nobody scored here; propensities stay zero
        for (int p = 0; p < n_programs; ++p) {
            const double marginal =
                (listed[b][0][p] + listed[b][1][p]) / static_cast<double>(pooled);
            for (int g = 0; g < 2; ++g) {
                const int own = model.cell_students[b][g];
                // Pseudo-count shrink toward the bucket marginal; an
                // empty cell (own = 0) degenerates to the marginal.
                model.propensity[b][g][p] =
                    own + shrinkage > 0.0
                        ? (listed[b][g][p] + shrinkage * marginal) / (own + shrinkage)
                        : marginal;
            }
        }
    }

    model.pool = cohort.students;
    return model;
}

ApplicationSet sample_application_set(const ApplicantModel& model, int n_students,
                                      std::uint64_t seed, SampleStats* stats) {
    if (n_students < 1) throw ConfigError("sampled cohort size must be at least 1");
    if (model.pool.empty()) throw DataError("applicant model has an empty bootstrap pool");

    Rng rng(seed);
    ApplicationSet out;
    out.year_label = "sampled";
    out.provenance = Provenance::sampled;
    out.students.reserve(n_students);
    const int id_width = std::max(4, digits_of(n_students));
    const int n_programs = static_cast<int>(model.programs.size());

    std::vector<double> weights(n_programs);
    std::vector<int> drawn;
    std::vector<double> keys;
    std::vector<int> order;
    int dropped = 0;

    for (int i = 0; i < n_students; ++i) {
        const Student& base =
            model.pool[rng.uniform_int(0, static_cast<int>(model.pool.size()) - 1)];
        const int b = model.bucket_of(composite_score(base));
        const auto& row = model.propensity[b][base.is_protected(model.attribute) ? 1 : 0];

        // Preference length from the empirical distribution.
        int length = 1;
        {
            double u = rng.uniform01();
            for (int k = 0; k < kMaxPreferences; ++k) {
                u -= model.length_dist[k];
                if (u < 0.0) {
                    length = k + 1;
                    break;
                }
            }
        }

        // Draw programs without replacement, proportionally to propensity.
        weights.assign(row.begin(), row.end());
        drawn.clear();
        for (int k = 0; k < length; ++k) {
            const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
            if (!(total > 0.0)) break;
            double u = rng.uniform01() * total;
            int pick = n_programs - 1;
            for (int p = 0; p < n_programs; ++p) {
                u -= weights[p];
                if (u < 0.0) {
                    pick = p;
                    break;
                }
            }
            drawn.push_back(pick);
            weights[pick] = 0.0;
        }
        if (drawn.empty()) {
            ++dropped;   // every propensity in the cell was zero
            continue;
        }

        // Order by propensity with a little noise; strongest draw first.
        keys.clear();
        for (int p : drawn) keys.push_back(row[p] + rng.uniform(-kRankNoise, kRankNoise));
        order.resize(drawn.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int a, int c) {
            if (keys[a] != keys[c]) return keys[a] > keys[c];
            return drawn[a] < drawn[c];
        });

        Student s = base;
        s.id = "m" + zero_padded(i + 1, id_width);
        s.preferences.clear();
        for (int k : order) s.preferences.push_back(model.programs[drawn[k]]);
        out.students.push_back(std::move(s));
    }

    if (stats != nullptr) stats->dropped = dropped;
    return out;
}

void validate(const SyntheticConfig& cfg) {
    if (cfg.n_students < 1) throw ConfigError("n_students must be at least 1");
    if (cfg.n_programs < 1) throw ConfigError("n_programs must be at least 1");
    if (cfg.n_years < 1) throw ConfigError("n_years must be at least 1");
    if (cfg.groups.empty()) throw ConfigError("at least one group attribute is required");
    for (const GroupSpec& g : cfg.groups) {
        if (g.attribute.empty()) throw ConfigError("group attribute name must be non-empty");
        if (!(g.protected_share > 0.0) || !(g.protected_share < 1.0))
            throw ConfigError("protected share must lie strictly between 0 and 1");
    }
    for (std::size_t i = 0; i < cfg.groups.size(); ++i)
        for (std::size_t j = i + 1; j < cfg.groups.size(); ++j)
            if (cfg.groups[i].attribute == cfg.groups[j].attribute)
                throw ConfigError("duplicate group attribute: " + cfg.groups[i].attribute);
    if (cfg.tests.empty()) throw ConfigError("at least one test is required");
    if (cfg.capacity_min < 1 || cfg.capacity_max < cfg.capacity_min)
        throw ConfigError("capacity range is invalid");
    if (cfg.pref_len_min < 1 || cfg.pref_len_max < cfg.pref_len_min)
        throw ConfigError("preference length range is invalid");
    if (cfg.pref_len_max > kMaxPreferences)
        throw ConfigError("preference lists are capped at " + std::to_string(kMaxPreferences) +
                          " entries");
    if (cfg.pref_len_max > cfg.n_programs)
        throw ConfigError("preference lists cannot be longer than the number of programs");
    if (cfg.ability_sd < 0.0 || cfg.grade_noise_sd < 0.0 || cfg.test_noise_sd < 0.0 ||
        cfg.year_gap_jitter < 0.0 || cfg.share_jitter < 0.0 || cfg.popularity_sd < 0.0 ||
        cfg.popularity_year_sd < 0.0)
        throw ConfigError("noise magnitudes must be non-negative");
    if (cfg.prestige_preference_strength < 0.0)
        throw ConfigError("prestige preference strength must be non-negative");
}

SyntheticHistory generate_synthetic_history(const SyntheticConfig& cfg) {
    validate(cfg);
    Rng rng(cfg.seed);
    SyntheticHistory history;

    const int program_width = std::max(2, digits_of(cfg.n_programs));
    const int student_width = std::max(4, digits_of(cfg.n_students));
    std::vector<ProgramId> program_ids(cfg.n_programs);
    std::vector<double> quality(cfg.n_programs);
    // Persistent appeal: program brands outlast any single cohort, so
    // the bulk of the popularity spread is drawn once and only a small
    // shock is redrawn per year.
    std::vector<double> base_popularity(cfg.n_programs);
    for (int j = 0; j < cfg.n_programs; ++j) {
        Program prog;
        prog.id = "p" + zero_padded(j + 1, program_width);
        prog.capacity = rng.uniform_int(cfg.capacity_min, cfg.capacity_max);
        base_popularity[j] = rng.normal(0.0, cfg.popularity_sd);
        // Programs differ in how much weight the school record carries
        // against the entrance tests; most lean on the tests.
        const double grades_w = rng.uniform(0.15, 0.6);
        std::vector<double> raw(cfg.tests.size());
        double raw_sum = 0.0;
        for (double& r : raw) {
            r = rng.uniform(0.5, 1.5);
            raw_sum += r;
        }
        prog.weights[kGradesComponent] = grades_w;
        for (std::size_t k = 0; k < cfg.tests.size(); ++k)
            prog.weights[cfg.tests[k]] = (1.0 - grades_w) * raw[k] / raw_sum;
        quality[j] = cfg.n_programs > 1
                         ? static_cast<double>(j) / static_cast<double>(cfg.n_programs - 1)
                         : 0.5;
        program_ids[j] = prog.id;
        history.registry.programs.emplace(prog.id, std::move(prog));
    }

    const double lo = history.registry.scale.min;
    const double hi = history.registry.scale.max;
    const auto clamp_score = [&](double v) { return std::clamp(v, lo, hi); };
    const int year_width = std::max(2, digits_of(cfg.n_years));

    for (int t = 0; t < cfg.n_years; ++t) {
        ApplicationSet year;
        year.year_label = "y" + zero_padded(t + 1, year_width);
        year.provenance = Provenance::historical;

        // Per-year drift of the group gaps and composition.
        std::vector<double> test_gap(cfg.groups.size());
        std::vector<double> grade_gap(cfg.groups.size());
        std::vector<double> share(cfg.groups.size());
        for (std::size_t a = 0; a < cfg.groups.size(); ++a) {
            const GroupSpec& g = cfg.groups[a];
            test_gap[a] =
                std::max(0.0, g.test_gap + rng.uniform(-cfg.year_gap_jitter, cfg.year_gap_jitter));
            grade_gap[a] = std::max(
                0.0, g.grade_gap + 0.3 * rng.uniform(-cfg.year_gap_jitter, cfg.year_gap_jitter));
            share[a] = std::clamp(
                g.protected_share + rng.uniform(-cfg.share_jitter, cfg.share_jitter), 0.05, 0.95);
        }
        std::vector<double> popularity(cfg.n_programs);
        for (int j = 0; j < cfg.n_programs; ++j)
            popularity[j] = base_popularity[j] + rng.normal(0.0, cfg.popularity_year_sd);

        year.students.resize(cfg.n_students);
        for (int i = 0; i < cfg.n_students; ++i) {
            Student& s = year.students[i];
            s.id = "s" + zero_padded(i + 1, student_width);
            double deficit_tests = 0.0;
            double deficit_grades = 0.0;
            for (std::size_t a = 0; a < cfg.groups.size(); ++a) {
                const bool prot = rng.uniform01() < share[a];
                s.groups[cfg.groups[a].attribute] = prot;
                if (prot) {
                    deficit_tests += test_gap[a];
                    deficit_grades += grade_gap[a];
                }
            }
            const double ability = 500.0 + rng.normal(0.0, cfg.ability_sd);
            s.grades =
                clamp_score(ability + rng.normal(0.0, cfg.grade_noise_sd) - deficit_grades);
            for (const std::string& test : cfg.tests)
                s.tests[test] =
                    clamp_score(ability + rng.normal(0.0, cfg.test_noise_sd) - deficit_tests);
        }

        // Percentile rank of each student's grades within the year, used
        // to aim preferences at quality-matched programs. Grades stand in
        // for self-assessment: applications are due before test results,
        // so students sort themselves by the school record they know.
        std::vector<int> by_grades(cfg.n_students);
        std::iota(by_grades.begin(), by_grades.end(), 0);
        std::sort(by_grades.begin(), by_grades.end(), [&](int a, int b) {
            if (year.students[a].grades != year.students[b].grades)
                return year.students[a].grades < year.students[b].grades;
            return a < b;
        });
        std::vector<double> percentile(cfg.n_students, 0.5);
        if (cfg.n_students > 1)
            for (int pos = 0; pos < cfg.n_students; ++pos)
                percentile[by_grades[pos]] =
                    static_cast<double>(pos) / static_cast<double>(cfg.n_students - 1);

        std::vector<double> utility(cfg.n_programs);
        std::vector<int> order(cfg.n_programs);
        for (int i = 0; i < cfg.n_students; ++i) {
            const int length = rng.uniform_int(cfg.pref_len_min, cfg.pref_len_max);
            for (int j = 0; j < cfg.n_programs; ++j)
                utility[j] = -cfg.prestige_preference_strength *
                                 std::abs(quality[j] - percentile[i]) +
                             popularity[j] + rng.gumbel();
            std::iota(order.begin(), order.end(), 0);
            std::partial_sort(order.begin(), order.begin() + length, order.end(),
                              [&](int a, int b) {
                                  if (utility[a] != utility[b]) return utility[a] > utility[b];
                                  return a < b;
                              });
            Student& s = year.students[i];
            s.preferences.reserve(length);
            for (int k = 0; k < length; ++k) s.preferences.push_back(program_ids[order[k]]);
        }

        validate_application_set(year, history.registry);
        history.years.push_back(std::move(year));
    }
    return history;
}

} // namespace admissions
