#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <map>
#include <vector>

#include "admissions/policy.hpp"
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

Student applicant(const StudentId& id, double grades, bool prot,
                  std::vector<ProgramId> prefs = {"p"}) {
    Student s;
    s.id = id;
    s.grades = grades;
    s.groups["g"] = prot;
    s.preferences = std::move(prefs);
    return s;
}

// One program "p" with two seats. Protected applicants a=660 and c=650,
// others b=700 and d=680. Until the bonus reaches 20 the seats go to b
// and d (SPD -1); at exactly 20, a ties d and wins on id, so the seats
// go to b and a (SPD 0) at a utility loss of 10 points.
struct FlipFixture {
    ProgramRegistry registry;
    ApplicationSet apps;

    FlipFixture() {
        registry.programs.emplace("p", grades_only("p", 2));
        apps.year_label = "y";
        apps.students = {applicant("a", 660, true), applicant("b", 700, false),
                         applicant("c", 650, true), applicant("d", 680, false)};
    }
};

// One program "p" with two seats, protected a=660/c=650, others b=700
// and d=660+t: the hindsight-optimal bonus on this set is exactly t.
ApplicationSet year_with_optimum(int t, const std::string& label) {
    ApplicationSet apps;
    apps.year_label = label;
    apps.students = {applicant("a", 660, true), applicant("b", 700, false),
                     applicant("c", 650, true), applicant("d", 660.0 + t, false)};
    return apps;
}

} // namespace

TEST_CASE("uniform grid construction") {
    const BonusGrid g = BonusGrid::uniform();
    CHECK(g.values.size() == 51);
    CHECK(g.min_value() == 0.0);
    CHECK(g.max_value() == 50.0);

    const BonusGrid coarse = BonusGrid::uniform(10.0, 3.0);
    CHECK(coarse.values == std::vector<Points>{0.0, 3.0, 6.0, 9.0});

    const BonusGrid uneven = BonusGrid::uniform(50.0, 7.0);
    CHECK(uneven.values.back() == 49.0);

    CHECK_THROWS_AS(BonusGrid::uniform(50.0, 0.0), ConfigError);
    CHECK_THROWS_AS(BonusGrid::uniform(-1.0, 1.0), ConfigError);
}

TEST_CASE("grid validation") {
    BonusGrid g;
    CHECK_THROWS_AS(g.validate(), ConfigError);           // empty
    g.values = {1.0, 2.0};
    CHECK_THROWS_AS(g.validate(), ConfigError);           // must start at 0
    g.values = {0.0, 2.0, 2.0};
    CHECK_THROWS_AS(g.validate(), ConfigError);           // strictly increasing
    g.values = {0.0, 2.0, 5.0};
    CHECK_NOTHROW(g.validate());
}

TEST_CASE("snapping rounds to the nearest grid value, midpoints down") {
    const BonusGrid g = BonusGrid::uniform();
    CHECK(g.snap(0.0) == 0.0);
    CHECK(g.snap(23.0) == 23.0);
    CHECK(g.snap(0.4) == 0.0);
    CHECK(g.snap(0.5) == 0.0);
    CHECK(g.snap(0.51) == 1.0);
    CHECK(g.snap(7.5) == 7.0);
    CHECK(g.snap(7.51) == 8.0);
    CHECK(g.snap(-3.0) == 0.0);
    CHECK(g.snap(77.0) == 50.0);

    const BonusGrid uneven = BonusGrid::uniform(50.0, 7.0);
    CHECK(uneven.snap(52.0) == 49.0);
}

TEST_CASE("strategy names parse and print") {
    CHECK(StrategySpec::parse("ideal") == StrategySpec{StrategySpec::Kind::ideal, 0});
    CHECK(StrategySpec::parse("historical-3") ==
          StrategySpec{StrategySpec::Kind::historical, 3});
    CHECK(StrategySpec::parse("predictive-200") ==
          StrategySpec{StrategySpec::Kind::predictive, 200});
    CHECK(StrategySpec{StrategySpec::Kind::historical, 3}.name() == "historical-3");
    CHECK(StrategySpec{StrategySpec::Kind::predictive, 50}.name() == "predictive-50");
    CHECK(StrategySpec{StrategySpec::Kind::ideal, 0}.name() == "ideal");

    CHECK_THROWS_AS(StrategySpec::parse("hindsight"), ConfigError);
    CHECK_THROWS_AS(StrategySpec::parse("historical-"), ConfigError);
    CHECK_THROWS_AS(StrategySpec::parse("historical-x"), ConfigError);
    CHECK_THROWS_AS(StrategySpec::parse("historical-0"), ConfigError);
    CHECK_THROWS_AS(StrategySpec::parse("predictive-0"), ConfigError);
}

TEST_CASE("grid objectives trace the flip") {
    const FlipFixture fx;
    const PreparedSet prep(fx.apps, fx.registry);
    SetOptimizer opt(prep);
    const BonusGrid grid = BonusGrid::uniform();

    const auto values = opt.grid_objectives("p", "g", grid, 28.0);
    REQUIRE(values.size() == 51);
    for (int b = 0; b <= 50; ++b) {
        REQUIRE(values[b].has_value());
        if (b < 20) {
            CHECK(values[b]->value == 28.0);         // no flip: loss 0, |SPD| 1
            CHECK(values[b]->utility_loss == 0.0);
            CHECK(values[b]->abs_spd == 1.0);
        } else {
            CHECK(values[b]->value == 10.0);         // flip: loss 10, SPD 0
            CHECK(values[b]->utility_loss == 10.0);
            CHECK(values[b]->abs_spd == 0.0);
        }
    }
}

TEST_CASE("optimal bonus minimizes the objective, ties to the smallest") {
    const FlipFixture fx;
    const PreparedSet prep(fx.apps, fx.registry);
    SetOptimizer opt(prep);
    const BonusGrid grid = BonusGrid::uniform();

    CHECK(opt.optimal_bonus("p", "g", grid, 28.0) == 20.0);   // 10 < 28
    CHECK(opt.optimal_bonus("p", "g", grid, 5.0) == 0.0);     // 5 < 10
    CHECK(opt.optimal_bonus("p", "g", grid, 10.0) == 0.0);    // exact tie: smaller bonus

    CHECK(optimal_bonus(fx.apps, fx.registry, "p", "g", grid, 28.0) == 20.0);
}

TEST_CASE("objective and spd at single points") {
    const FlipFixture fx;
    const PreparedSet prep(fx.apps, fx.registry);
    SetOptimizer opt(prep);

    const auto at0 = opt.objective_at("p", "g", 0.0, 28.0);
    REQUIRE(at0.has_value());
    CHECK(at0->utility_loss == 0.0);
    CHECK(at0->value == 28.0);

    const auto at20 = opt.objective_at("p", "g", 20.0, 28.0);
    REQUIRE(at20.has_value());
    CHECK(at20->value == 10.0);

    CHECK(opt.spd_at("p", "g", 0.0) == -1.0);
    CHECK(opt.spd_at("p", "g", 20.0) == 0.0);

    // Cross-check against the public match() + metrics path.
    BonusPolicy pol;
    pol.set_bonus("p", "g", 20.0);
    const MatchOutcome base = match(fx.apps, fx.registry, BonusPolicy{});
    const MatchOutcome with = match(fx.apps, fx.registry, pol);
    const auto via_match = objective(with, base, "p", "g", 28.0);
    REQUIRE(via_match.has_value());
    CHECK(via_match->value == at20->value);
    CHECK(spd(with, "p", "g") == opt.spd_at("p", "g", 20.0));
}

TEST_CASE("one-group sets are not applicable") {
    ProgramRegistry registry;
    registry.programs.emplace("p", grades_only("p", 2));
    ApplicationSet apps;
    apps.year_label = "y";
    apps.students = {applicant("a", 700, true), applicant("b", 650, true)};
    const PreparedSet prep(apps, registry);
    SetOptimizer opt(prep);
    const BonusGrid grid = BonusGrid::uniform();

    CHECK_FALSE(opt.optimal_bonus("p", "g", grid, 28.0).has_value());
    for (const auto& v : opt.grid_objectives("p", "g", grid, 28.0)) {
        CHECK_FALSE(v.has_value());
    }
}

TEST_CASE("optimizer validates program, attribute, grid, lambda") {
    const FlipFixture fx;
    const PreparedSet prep(fx.apps, fx.registry);
    SetOptimizer opt(prep);
    const BonusGrid grid = BonusGrid::uniform();
    CHECK_THROWS_AS(opt.optimal_bonus("zz", "g", grid, 28.0), DataError);
    CHECK_THROWS_AS(opt.optimal_bonus("p", "rural", grid, 28.0), DataError);
    CHECK_THROWS_AS(opt.optimal_bonus("p", "g", grid, -1.0), ConfigError);
    BonusGrid bad;
    bad.values = {1.0};
    CHECK_THROWS_AS(opt.optimal_bonus("p", "g", bad, 28.0), ConfigError);
}

TEST_CASE("historical suggestion averages per-year optima over the last k years") {
    ProgramRegistry registry;
    registry.programs.emplace("p", grades_only("p", 2));
    const BonusGrid grid = BonusGrid::uniform();
    // Oldest first; per-year hindsight optima are 10, 0, 5.
    std::vector<ApplicationSet> years = {year_with_optimum(10, "y1"),
                                         year_with_optimum(0, "y2"),
                                         year_with_optimum(5, "y3")};

    const auto k1 = suggest_historical(years, registry, 1, "p", "g", grid, 28.0);
    REQUIRE(k1.has_value());
    CHECK(k1->bonus == 5.0);
    CHECK(k1->support == 1);
    CHECK(k1->strategy.name() == "historical-1");

    const auto k2 = suggest_historical(years, registry, 2, "p", "g", grid, 28.0);
    REQUIRE(k2.has_value());
    CHECK(k2->bonus == 2.5);
    CHECK(k2->support == 2);

    const auto k3 = suggest_historical(years, registry, 3, "p", "g", grid, 28.0);
    REQUIRE(k3.has_value());
    CHECK(k3->bonus == 5.0);   // (10 + 0 + 5) / 3
    CHECK(k3->support == 3);

    // More years requested than exist: truncate, keep the requested name.
    const auto k5 = suggest_historical(years, registry, 5, "p", "g", grid, 28.0);
    REQUIRE(k5.has_value());
    CHECK(k5->bonus == 5.0);
    CHECK(k5->support == 3);
    CHECK(k5->strategy.name() == "historical-5");

    std::vector<ApplicationSet> flat = {year_with_optimum(0, "y1"),
                                        year_with_optimum(0, "y2"),
                                        year_with_optimum(3, "y3")};
    const auto f3 = suggest_historical(flat, registry, 3, "p", "g", grid, 28.0);
    REQUIRE(f3.has_value());
    CHECK(f3->bonus == 1.0);

    CHECK_THROWS_AS(suggest_historical(years, registry, 0, "p", "g", grid, 28.0),
                    ConfigError);
}

TEST_CASE("predictive suggestion minimizes the mean objective over samples") {
    ProgramRegistry registry;
    registry.programs.emplace("p", grades_only("p", 2));
    const BonusGrid grid = BonusGrid::uniform();
    // Each set's objective is 28 below its flip point and t/2 at or
    // above it, so the across-set mean is 28 on [0,10), (5+28)/2 on
    // [10,20) and (5+10)/2 on [20,50]: the minimum sits at 20, not at
    // the mean of the per-set optima (15).
    std::vector<ApplicationSet> sampled = {year_with_optimum(10, "m1"),
                                           year_with_optimum(20, "m2")};
    const auto sug = suggest_predictive(sampled, registry, "p", "g", grid, 28.0);
    REQUIRE(sug.has_value());
    CHECK(sug->bonus == 20.0);
    CHECK(sug->support == 2);
    CHECK(sug->strategy.name() == "predictive-2");
}

TEST_CASE("mean-objective accumulator streams sets and snapshots tables") {
    ProgramRegistry registry;
    registry.programs.emplace("p", grades_only("p", 2));
    const BonusGrid grid = BonusGrid::uniform();
    // Duplicate and unknown targets: deduplicated, unknown reported.
    MeanObjectiveAccumulator acc({"p", "p", "zz"}, "g", grid, 28.0);
    CHECK(acc.sets_seen() == 0);

    const ApplicationSet m1 = year_with_optimum(10, "m1");
    acc.add_set(PreparedSet(m1, registry));
    const SuggestionTable after1 = acc.table({StrategySpec::Kind::predictive, 1});
    REQUIRE(after1.suggestions.size() == 1);
    CHECK(after1.suggestions[0].bonus == 10.0);   // single set: its own optimum
    CHECK(after1.suggestions[0].support == 1);
    REQUIRE(after1.skipped.size() == 1);
    CHECK(after1.skipped[0].first == "zz");

    const ApplicationSet m2 = year_with_optimum(20, "m2");
    acc.add_set(PreparedSet(m2, registry));
    CHECK(acc.sets_seen() == 2);
    const SuggestionTable after2 = acc.table({StrategySpec::Kind::predictive, 2});
    REQUIRE(after2.suggestions.size() == 1);
    CHECK(after2.suggestions[0].bonus == 20.0);   // argmin of the mean curve
    CHECK(after2.suggestions[0].support == 2);

    CHECK_THROWS_AS(MeanObjectiveAccumulator({"p"}, "g", grid, -1.0), ConfigError);
}

TEST_CASE("ideal policy is the hindsight optimum on the realized set") {
    ProgramRegistry registry;
    registry.programs.emplace("p", grades_only("p", 2));
    const BonusGrid grid = BonusGrid::uniform();
    const ApplicationSet realized = year_with_optimum(7, "y");
    const auto sug = ideal_policy(realized, registry, "p", "g", grid, 28.0);
    REQUIRE(sug.has_value());
    CHECK(sug->bonus == 7.0);
    CHECK(sug->support == 1);
    CHECK(sug->strategy.name() == "ideal");

    ApplicationSet lopsided = realized;
    for (auto& s : lopsided.students) s.groups["g"] = false;
    CHECK_FALSE(ideal_policy(lopsided, registry, "p", "g", grid, 28.0).has_value());
}

TEST_CASE("bulk suggestion covers targets and reports skipped programs") {
    ProgramRegistry registry;
    registry.programs.emplace("p", grades_only("p", 2));
    registry.programs.emplace("q", grades_only("q", 1));
    ApplicationSet apps = year_with_optimum(6, "y");
    // q sees protected applicants only, so it is never applicable.
    apps.students.push_back(applicant("e", 640, true, {"q"}));
    apps.students.push_back(applicant("f", 630, true, {"q"}));

    std::vector<PreparedSet> preps;
    preps.emplace_back(apps, registry);
    const std::vector<ProgramId> targets = {"p", "q"};
    const SuggestionTable table =
        suggest_over_sets(StrategySpec{StrategySpec::Kind::historical, 1}, preps, targets,
                          "g", BonusGrid::uniform(), 28.0);

    CHECK(table.attribute == "g");
    CHECK(table.lambda == 28.0);
    REQUIRE(table.suggestions.size() == 1);
    CHECK(table.suggestions[0].program == "p");
    CHECK(table.suggestions[0].bonus == 6.0);
    REQUIRE(table.skipped.size() == 1);
    CHECK(table.skipped[0].first == "q");
    CHECK(table.skipped[0].second == "no application set with applicants from both groups");
}

TEST_CASE("bulk suggestion skips sets that never saw the attribute") {
    ProgramRegistry registry;
    registry.programs.emplace("p", grades_only("p", 2));
    ApplicationSet no_attr;
    no_attr.year_label = "m1";
    Student s;
    s.id = "x1";
    s.grades = 600;
    s.preferences = {"p"};
    no_attr.students.push_back(s);   // carries no group flags at all

    std::vector<PreparedSet> preps;
    preps.emplace_back(no_attr, registry);
    preps.emplace_back(year_with_optimum(4, "m2"), registry);
    const std::vector<ProgramId> targets = {"p"};
    const SuggestionTable table =
        suggest_over_sets(StrategySpec{StrategySpec::Kind::predictive, 2}, preps, targets,
                          "g", BonusGrid::uniform(), 28.0);
    REQUIRE(table.suggestions.size() == 1);
    CHECK(table.suggestions[0].bonus == 4.0);   // only the second set counts
    CHECK(table.suggestions[0].support == 1);
}

TEST_CASE("evaluation compares suggestions against the hindsight ideal") {
    ProgramRegistry registry;
    registry.programs.emplace("p", grades_only("p", 2));
    const ApplicationSet realized = year_with_optimum(8, "y");
    const PreparedSet prep(realized, registry);
    const BonusGrid grid = BonusGrid::uniform();
    const StrategySpec spec{StrategySpec::Kind::historical, 1};

    auto suggestion = [&](double bonus) {
        return PolicySuggestion{"p", "g", bonus, spec, 1};
    };

    SUBCASE("the ideal suggestion has zero error") {
        const auto eval = evaluate_strategy({suggestion(8.0)}, prep, grid, 28.0);
        REQUIRE(eval.rows.size() == 1);
        const auto& row = eval.rows[0];
        CHECK(row.evaluated_bonus == 8.0);
        CHECK(row.ideal_bonus == 8.0);
        CHECK(row.objective_suggested == 4.0);   // loss 4 = (d's 668 - a's 660)/2
        CHECK(row.objective_ideal == 4.0);
        CHECK(row.objective_error == 0.0);
        CHECK(row.abs_spd_bonus == 0.0);
        CHECK(row.abs_spd_baseline == 1.0);
        CHECK(row.spd_delta == -1.0);
        CHECK(row.utility_loss == 4.0);
        CHECK(eval.summary.n_programs == 1);
        CHECK(eval.summary.mean_objective_error == 0.0);
        CHECK(eval.summary.mean_spd_delta == -1.0);
    }

    SUBCASE("a do-nothing suggestion pays the full spd penalty") {
        const auto eval = evaluate_strategy({suggestion(0.0)}, prep, grid, 28.0);
        REQUIRE(eval.rows.size() == 1);
        CHECK(eval.rows[0].objective_suggested == 28.0);
        CHECK(eval.rows[0].objective_error == 24.0);
        CHECK(eval.rows[0].spd_delta == 0.0);
        CHECK(eval.rows[0].utility_loss == 0.0);
    }

    SUBCASE("fractional suggestions snap to the grid for evaluation") {
        auto eval = evaluate_strategy({suggestion(7.25)}, prep, grid, 28.0);
        REQUIRE(eval.rows.size() == 1);
        CHECK(eval.rows[0].suggested_bonus == 7.25);
        CHECK(eval.rows[0].evaluated_bonus == 7.0);   // below 8: flip missed
        CHECK(eval.rows[0].objective_error == 24.0);

        eval = evaluate_strategy({suggestion(7.51)}, prep, grid, 28.0);
        CHECK(eval.rows[0].evaluated_bonus == 8.0);
        CHECK(eval.rows[0].objective_error == 0.0);
    }

    SUBCASE("summary aggregates over rows") {
        const auto eval = evaluate_strategy(
            {suggestion(8.0), suggestion(0.0), suggestion(7.25)}, prep, grid, 28.0);
        REQUIRE(eval.rows.size() == 3);
        CHECK(eval.summary.n_programs == 3);
        CHECK(eval.summary.mean_objective_error == 16.0);         // (0+24+24)/3
        CHECK(eval.summary.sd_objective_error == std::sqrt(192.0));
        CHECK(eval.summary.mean_bonus == 15.25 / 3.0);
        CHECK(eval.summary.sd_bonus ==
              doctest::Approx(std::sqrt((8.0 - 15.25 / 3.0) * (8.0 - 15.25 / 3.0) +
                                        (0.0 - 15.25 / 3.0) * (0.0 - 15.25 / 3.0) +
                                        (7.25 - 15.25 / 3.0) * (7.25 - 15.25 / 3.0)) /
                              std::sqrt(2.0)));
    }

    SUBCASE("unknown programs are excluded with a reason") {
        const auto eval = evaluate_strategy(
            {PolicySuggestion{"zz", "g", 3.0, spec, 1}, suggestion(8.0)}, prep, grid, 28.0);
        CHECK(eval.rows.size() == 1);
        REQUIRE(eval.excluded.size() == 1);
        CHECK(eval.excluded[0].first == "zz");
        CHECK(eval.excluded[0].second == "program not in realized set registry");
        CHECK(eval.summary.n_excluded == 1);
    }

    SUBCASE("programs without a defined objective are excluded") {
        ProgramRegistry reg2;
        reg2.programs.emplace("p", grades_only("p", 2));
        reg2.programs.emplace("q", grades_only("q", 1));
        ApplicationSet apps2 = year_with_optimum(8, "y");
        apps2.students.push_back(applicant("e", 640, true, {"q"}));
        const PreparedSet prep2(apps2, reg2);
        const auto eval = evaluate_strategy({PolicySuggestion{"q", "g", 3.0, spec, 1}},
                                            prep2, grid, 28.0);
        CHECK(eval.rows.empty());
        REQUIRE(eval.excluded.size() == 1);
        CHECK(eval.excluded[0].second == "objective undefined on realized set");
    }

    SUBCASE("precomputed ideal bonuses shortcut matches the internal search") {
        const std::map<ProgramId, Points> ideals = {{"p", 8.0}};
        const auto fast = evaluate_strategy({suggestion(6.0)}, prep, grid, 28.0, &ideals);
        const auto slow = evaluate_strategy({suggestion(6.0)}, prep, grid, 28.0);
        REQUIRE(fast.rows.size() == 1);
        REQUIRE(slow.rows.size() == 1);
        CHECK(fast.rows[0].objective_error == slow.rows[0].objective_error);
        CHECK(fast.rows[0].ideal_bonus == slow.rows[0].ideal_bonus);
    }
}

TEST_CASE("optimizer agrees exactly with the match-and-measure oracle") {
    Rng rng(20240817);
    const double lambdas[] = {0.0, 23.0, 28.0};
    for (int trial = 0; trial < 25; ++trial) {
        oracles::Instance inst = oracles::random_instance(rng, 10, 3, false);
        const BonusGrid grid = BonusGrid::uniform(50.0, 10.0);   // keep it quick
        const PreparedSet prep(inst.apps, inst.registry);
        SetOptimizer opt(prep);
        const double lambda = lambdas[trial % 3];
        for (int p = 0; p < prep.n_programs(); ++p) {
            const ProgramId pid = prep.program_id(p);
            const auto oracle = oracles::oracle_grid_values(inst, pid, grid, lambda);
            const auto ours = opt.grid_objectives(pid, inst.attribute, grid, lambda);
            REQUIRE(oracle.size() == ours.size());
            for (std::size_t i = 0; i < oracle.size(); ++i) {
                CAPTURE(trial);
                CAPTURE(pid);
                CAPTURE(i);
                REQUIRE(oracle[i].has_value() == ours[i].has_value());
                if (oracle[i]) CHECK(*oracle[i] == ours[i]->value);
            }
            CHECK(opt.optimal_bonus(pid, inst.attribute, grid, lambda) ==
                  oracles::oracle_optimal_bonus(inst, pid, grid, lambda));
        }
    }
}
