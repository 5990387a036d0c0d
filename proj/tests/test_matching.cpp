#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>

#include "admissions/matching.hpp"
#include "admissions/rng.hpp"
#include "oracles.hpp"

using namespace admissions;

namespace {

Program grades_only(const ProgramId& id, int capacity) {
    Program p;
    p.id = id;
    p.capacity = capacity;
    p.weights[kGradesComponent] = 1.0;
    return p;
}

Student applicant(const StudentId& id, double grades, std::vector<ProgramId> prefs,
                  bool protected_income = false) {
    Student s;
    s.id = id;
    s.grades = grades;
    s.groups["income"] = protected_income;
    s.preferences = std::move(prefs);
    return s;
}

} // namespace

TEST_CASE("higher score wins the last seat") {
    ProgramRegistry registry;
    registry.programs.emplace("p", grades_only("p", 1));
    ApplicationSet apps;
    apps.year_label = "y";
    apps.students = {applicant("s1", 700, {"p"}), applicant("s2", 600, {"p"})};

    const MatchOutcome out = match(apps, registry, BonusPolicy{});
    CHECK(out.assignment.at("s1") == ProgramId("p"));
    CHECK_FALSE(out.assignment.at("s2").has_value());
    const ProgramResult& res = out.per_program.at("p");
    REQUIRE(res.admitted.size() == 1);
    CHECK(res.admitted[0].id == "s1");
    CHECK(res.admitted[0].score == 700.0);
    CHECK(res.admitted[0].effective == 700.0);
    CHECK(res.cutoff == 700.0);
    CHECK(res.applicants == std::vector<StudentId>{"s1", "s2"});
    CHECK(cutoff(out, "p") == 700.0);
    CHECK_THROWS_AS(cutoff(out, "zz"), DataError);
}

TEST_CASE("equal effective scores break toward the smaller id") {
    ProgramRegistry registry;
    registry.programs.emplace("p", grades_only("p", 1));
    ApplicationSet apps;
    apps.year_label = "y";
    apps.students = {applicant("s_b", 600, {"p"}), applicant("s_a", 600, {"p"})};

    const MatchOutcome out = match(apps, registry, BonusPolicy{});
    CHECK(out.assignment.at("s_a") == ProgramId("p"));
    CHECK_FALSE(out.assignment.at("s_b").has_value());
}

TEST_CASE("a bonus can flip the admitted student") {
    ProgramRegistry registry;
    registry.programs.emplace("p", grades_only("p", 1));
    ApplicationSet apps;
    apps.year_label = "y";
    apps.students = {applicant("s1", 700, {"p"}),
                     applicant("s2", 660, {"p"}, true)};

    BonusPolicy policy;
    policy.set_bonus("p", "income", 50.0);
    const MatchOutcome out = match(apps, registry, policy);
    CHECK(out.assignment.at("s2") == ProgramId("p"));
    CHECK_FALSE(out.assignment.at("s1").has_value());
    const ProgramResult& res = out.per_program.at("p");
    REQUIRE(res.admitted.size() == 1);
    CHECK(res.admitted[0].score == 660.0);      // raw, no bonus
    CHECK(res.admitted[0].effective == 710.0);  // priority actually held
    CHECK(res.cutoff == 710.0);
}

TEST_CASE("displacement chains resolve") {
    ProgramRegistry registry;
    registry.programs.emplace("X", grades_only("X", 1));
    registry.programs.emplace("Y", grades_only("Y", 1));
    ApplicationSet apps;
    apps.year_label = "y";
    apps.students = {applicant("A", 700, {"X", "Y"}),
                     applicant("B", 650, {"X", "Y"}),
                     applicant("C", 640, {"Y"})};

    const MatchOutcome out = match(apps, registry, BonusPolicy{});
    CHECK(out.assignment.at("A") == ProgramId("X"));
    CHECK(out.assignment.at("B") == ProgramId("Y"));
    CHECK_FALSE(out.assignment.at("C").has_value());
    CHECK(out.per_program.at("X").cutoff == 700.0);
    CHECK(out.per_program.at("Y").cutoff == 650.0);
}

TEST_CASE("cutoff is the scale minimum while seats remain") {
    ProgramRegistry registry;
    registry.programs.emplace("p", grades_only("p", 3));
    ApplicationSet apps;
    apps.year_label = "y";
    apps.students = {applicant("s1", 700, {"p"})};

    const MatchOutcome out = match(apps, registry, BonusPolicy{});
    CHECK(out.per_program.at("p").cutoff == 150.0);
}

TEST_CASE("cutoff may exceed the raw scale when a bonus is active") {
    ProgramRegistry registry;
    registry.programs.emplace("p", grades_only("p", 1));
    ApplicationSet apps;
    apps.year_label = "y";
    apps.students = {applicant("s1", 840, {"p"}, true),
                     applicant("s2", 845, {"p"})};
    BonusPolicy policy;
    policy.set_bonus("p", "income", 50.0);

    const MatchOutcome out = match(apps, registry, policy);
    CHECK(out.assignment.at("s1") == ProgramId("p"));
    CHECK(out.per_program.at("p").cutoff == 890.0);
}

TEST_CASE("group counts per attribute") {
    ProgramRegistry registry;
    registry.programs.emplace("p", grades_only("p", 2));
    ApplicationSet apps;
    apps.year_label = "y";
    apps.students = {applicant("pa", 800, {"p"}, true), applicant("pb", 600, {"p"}, true),
                     applicant("oa", 700, {"p"}), applicant("ob", 500, {"p"})};

    const MatchOutcome out = match(apps, registry, BonusPolicy{});
    const GroupCounts& gc = out.per_program.at("p").groups.at("income");
    CHECK(gc.applicants_protected == 2);
    CHECK(gc.applicants_other == 2);
    CHECK(gc.admitted_protected == 1);
    CHECK(gc.admitted_other == 1);
}

TEST_CASE("empty application set still reports every registry program") {
    ProgramRegistry registry;
    registry.programs.emplace("p", grades_only("p", 2));
    ApplicationSet apps;
    apps.year_label = "y";

    const MatchOutcome out = match(apps, registry, BonusPolicy{});
    CHECK(out.assignment.empty());
    REQUIRE(out.per_program.count("p") == 1);
    CHECK(out.per_program.at("p").admitted.empty());
    CHECK(out.per_program.at("p").cutoff == 150.0);
}

TEST_CASE("matching validates its inputs") {
    ProgramRegistry registry;
    registry.programs.emplace("p", grades_only("p", 2));
    ApplicationSet apps;
    apps.year_label = "y";
    apps.students = {applicant("s1", 700, {"p", "zz"})};
    CHECK_THROWS_AS(match(apps, registry, BonusPolicy{}), DataError);
}

TEST_CASE("prepared set exposes listed-order slots and ascending programs") {
    ProgramRegistry registry;
    registry.programs.emplace("p", grades_only("p", 1));
    registry.programs.emplace("q", grades_only("q", 1));
    ApplicationSet apps;
    apps.year_label = "y";
    apps.students = {applicant("s1", 700, {"q", "p"}, true)};

    const PreparedSet prep(apps, registry);
    CHECK(prep.n_students() == 1);
    CHECK(prep.n_programs() == 2);
    CHECK(prep.program_id(0) == "p");
    CHECK(prep.program_id(1) == "q");
    CHECK(prep.program_index("q") == 1);
    CHECK_FALSE(prep.program_index("zz").has_value());
    REQUIRE(prep.prefs(0).size() == 2);
    CHECK(prep.prefs(0)[0] == 1);   // "q" listed first
    CHECK(prep.prefs(0)[1] == 0);
    CHECK(prep.base_scores(0)[0] == 700.0);
    CHECK(prep.attributes() == std::vector<std::string>{"income"});
    CHECK(prep.protected_flags("income") == std::vector<char>{1});
    CHECK_THROWS_AS(prep.protected_flags("rural"), DataError);
    CHECK(prep.applicant_group_counts(0, "income") == std::pair<int, int>{1, 0});
}

TEST_CASE("matcher workspace is reusable and resets cleanly") {
    ProgramRegistry registry;
    registry.programs.emplace("p", grades_only("p", 1));
    ApplicationSet apps;
    apps.year_label = "y";
    apps.students = {applicant("a", 700, {"p"}), applicant("b", 660, {"p"}, true)};

    PreparedSet prep(apps, registry);
    Matcher matcher(prep);
    const auto& flags = prep.protected_flags("income");

    const auto first = matcher.run([](int, int, int) { return 0.0; }).assigned_slot;
    CHECK(first == std::vector<std::int32_t>{0, -1});   // "a" holds the seat

    const auto boosted =
        matcher.run([&](int s, int, int) { return flags[s] ? 50.0 : 0.0; }).assigned_slot;
    CHECK(boosted == std::vector<std::int32_t>{-1, 0}); // "b" displaces "a"

    const auto again = matcher.run([](int, int, int) { return 0.0; }).assigned_slot;
    CHECK(again == first);
}

TEST_CASE("matching is deterministic and independent of input order") {
    Rng rng(99);
    for (int trial = 0; trial < 20; ++trial) {
        oracles::Instance inst = oracles::random_instance(rng, 12, 3);
        const MatchOutcome a = match(inst.apps, inst.registry, inst.policy);
        const MatchOutcome b = match(inst.apps, inst.registry, inst.policy);
        CHECK(a.assignment == b.assignment);

        ApplicationSet reversed = inst.apps;
        std::reverse(reversed.students.begin(), reversed.students.end());
        const MatchOutcome c = match(reversed, inst.registry, inst.policy);
        CHECK(a.assignment == c.assignment);
        for (const auto& [pid, res] : a.per_program) {
            CHECK(res.cutoff == c.per_program.at(pid).cutoff);
        }
    }
}

TEST_CASE("random outcomes respect lists, capacities, and stability") {
    Rng rng(4242);
    for (int trial = 0; trial < 60; ++trial) {
        oracles::Instance inst = oracles::random_instance(rng, 12, 3);
        const MatchOutcome out = match(inst.apps, inst.registry, inst.policy);
        const auto violation = oracles::stability_violation(inst, out);
        if (violation) {
            CAPTURE(trial);
            CAPTURE(*violation);
            FAIL_CHECK("unstable outcome");
        }
    }
}

TEST_CASE("outcome equals the enumerated student-optimal stable matching") {
    Rng rng(777);
    for (int trial = 0; trial < 40; ++trial) {
        oracles::Instance inst = oracles::random_instance(rng, 10, 3);
        const MatchOutcome out = match(inst.apps, inst.registry, inst.policy);
        const std::vector<int> ours = oracles::outcome_assignment(inst, out);
        const auto all = oracles::all_stable_assignments(inst);
        CAPTURE(trial);
        CHECK(std::find(all.begin(), all.end(), ours) != all.end());

        const std::vector<int> our_ranks = oracles::assignment_ranks(inst, ours);
        for (const auto& other : all) {
            const std::vector<int> other_ranks = oracles::assignment_ranks(inst, other);
            for (std::size_t s = 0; s < our_ranks.size(); ++s) {
                CHECK(our_ranks[s] <= other_ranks[s]);
            }
        }
    }
}
