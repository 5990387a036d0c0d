#include "admissions/policy.hpp"

#include <algorithm>
#include <cmath>

#include "admissions/stats.hpp"

namespace admissions {

BonusGrid BonusGrid::uniform(Points max_bonus, Points step) {
    if (step <= 0.0 || max_bonus < 0.0) {
        throw ConfigError("grid requires max >= 0 and step > 0");
    }
    BonusGrid g;
    for (int i = 0;; ++i) {
        const Points v = step * i;
        if (v > max_bonus + 1e-12) break;
        g.values.push_back(v);
    }
    g.validate();
    return g;
}

void BonusGrid::validate() const {
    if (values.empty() || values.front() != 0.0) {
        throw ConfigError("bonus grid must start at 0");
    }
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] <= values[i - 1]) {
            throw ConfigError("bonus grid values must be strictly increasing");
        }
    }
}

Points BonusGrid::snap(Points x) const {
    auto it = std::lower_bound(values.begin(), values.end(), x);
    if (it == values.end()) return values.back();
    if (it == values.begin()) return values.front();
    const Points above = *it;
    const Points below = *(it - 1);
    // Midpoint ties resolve to the smaller bonus.
    return (x - below < above - x) ? below : (above - x < x - below) ? above : below;
}

std::string StrategySpec::name() const {
    switch (kind) {
        case Kind::ideal: return "ideal";
        case Kind::historical: return "historical-" + std::to_string(param);
        case Kind::predictive: return "predictive-" + std::to_string(param);
    }
    return "ideal";
}

StrategySpec StrategySpec::parse(const std::string& text) {
    if (text == "ideal") return {Kind::ideal, 0};
    auto parse_param = [&](const std::string& prefix) -> std::optional<int> {
        if (text.size() <= prefix.size() || text.compare(0, prefix.size(), prefix) != 0) {
            return std::nullopt;
        }
        const std::string tail = text.substr(prefix.size());
        if (tail.empty() || tail.find_first_not_of("0123456789") != std::string::npos) {
            return std::nullopt;
        }
        return std::stoi(tail);
    };
    if (auto k = parse_param("historical-")) {
        if (*k < 1) throw ConfigError("historical strategy needs k >= 1");
        return {Kind::historical, *k};
    }
    if (auto n = parse_param("predictive-")) {
        if (*n < 1) throw ConfigError("predictive strategy needs n >= 1");
        return {Kind::predictive, *n};
    }
    throw ConfigError("unknown strategy '" + text +
                      "' (expected ideal, historical-<k> or predictive-<n>)");
}

SetOptimizer::SetOptimizer(const PreparedSet& prep) : prep_(&prep), matcher_(prep) {}

SetOptimizer::PointStats SetOptimizer::evaluate_point(int program_idx,
                                                      const std::vector<char>& flags,
                                                      Points bonus, int applicants_protected,
                                                      int applicants_other) {
    const auto& idx = matcher_.run([&](int s, int, int p) {
        return (p == program_idx && flags[s]) ? bonus : 0.0;
    });
    PointStats st;
    const auto& admitted = idx.admitted[program_idx];
    if (!admitted.empty()) {
        st.has_admitted = true;
        // Same summation order as metrics::utility: ascending student id.
        double sum = 0.0;
        int adm_prot = 0, adm_other = 0;
        for (std::int32_t s : admitted) {
            sum += prep_->base_scores(s)[idx.assigned_slot[s]];
            if (flags[s]) ++adm_prot; else ++adm_other;
        }
        st.mu = sum / static_cast<double>(admitted.size());
        if (applicants_protected > 0 && applicants_other > 0) {
            const double rate_protected =
                static_cast<double>(adm_prot) / static_cast<double>(applicants_protected);
            const double rate_other =
                static_cast<double>(adm_other) / static_cast<double>(applicants_other);
            st.spd = rate_protected - rate_other;
        }
    }
    return st;
}

std::vector<std::optional<ObjectiveValue>> SetOptimizer::grid_objectives(
    const ProgramId& program, const std::string& attribute, const BonusGrid& grid,
    double lambda) {
    grid.validate();
    if (lambda < 0.0) throw ConfigError("lambda must be >= 0");
    std::vector<std::optional<ObjectiveValue>> out(grid.values.size());
    const auto pidx = prep_->program_index(program);
    if (!pidx) throw DataError("unknown program id: " + program);
    const auto& flags = prep_->protected_flags(attribute);
    const auto [app_prot, app_other] = prep_->applicant_group_counts(*pidx, attribute);
    if (app_prot == 0 || app_other == 0) return out;   // SPD undefined at every point

    // b = 0 is the first grid point and doubles as the baseline.
    const PointStats base = evaluate_point(*pidx, flags, 0.0, app_prot, app_other);
    if (!base.has_admitted) return out;                // mu_0 undefined everywhere
    const double mu0 = base.mu;
    for (std::size_t i = 0; i < grid.values.size(); ++i) {
        const PointStats st =
            i == 0 ? base : evaluate_point(*pidx, flags, grid.values[i], app_prot, app_other);
        if (!st.has_admitted || !st.spd) continue;
        ObjectiveValue v;
        v.lambda = lambda;
        v.utility_loss = mu0 - st.mu;
        v.abs_spd = std::abs(*st.spd);
        v.value = v.utility_loss + lambda * v.abs_spd;
        out[i] = v;
    }
    return out;
}

std::optional<Points> SetOptimizer::optimal_bonus(const ProgramId& program,
                                                  const std::string& attribute,
                                                  const BonusGrid& grid, double lambda) {
    const auto objectives = grid_objectives(program, attribute, grid, lambda);
    std::optional<Points> best_bonus;
    double best_value = 0.0;
    for (std::size_t i = 0; i < objectives.size(); ++i) {
        if (!objectives[i]) continue;
        if (!best_bonus || objectives[i]->value < best_value) {
            best_bonus = grid.values[i];
            best_value = objectives[i]->value;
        }
    }
    return best_bonus;
}

std::optional<ObjectiveValue> SetOptimizer::objective_at(const ProgramId& program,
                                                         const std::string& attribute,
                                                         Points bonus, double lambda) {
    if (lambda < 0.0) throw ConfigError("lambda must be >= 0");
    const auto pidx = prep_->program_index(program);
    if (!pidx) throw DataError("unknown program id: " + program);
    const auto& flags = prep_->protected_flags(attribute);
    const auto [app_prot, app_other] = prep_->applicant_group_counts(*pidx, attribute);
    if (app_prot == 0 || app_other == 0) return std::nullopt;
    const PointStats base = evaluate_point(*pidx, flags, 0.0, app_prot, app_other);
    if (!base.has_admitted) return std::nullopt;
    const PointStats st = bonus == 0.0
                              ? base
                              : evaluate_point(*pidx, flags, bonus, app_prot, app_other);
    if (!st.has_admitted || !st.spd) return std::nullopt;
    ObjectiveValue v;
    v.lambda = lambda;
    v.utility_loss = base.mu - st.mu;
    v.abs_spd = std::abs(*st.spd);
    v.value = v.utility_loss + lambda * v.abs_spd;
    return v;
}

std::optional<double> SetOptimizer::spd_at(const ProgramId& program, const std::string& attribute,
                                           Points bonus) {
    const auto pidx = prep_->program_index(program);
    if (!pidx) throw DataError("unknown program id: " + program);
    const auto& flags = prep_->protected_flags(attribute);
    const auto [app_prot, app_other] = prep_->applicant_group_counts(*pidx, attribute);
    if (app_prot == 0 || app_other == 0) return std::nullopt;
    const PointStats st = evaluate_point(*pidx, flags, bonus, app_prot, app_other);
    return st.spd;
}

std::optional<Points> optimal_bonus(const ApplicationSet& apps, const ProgramRegistry& registry,
                                    const ProgramId& program, const std::string& attribute,
                                    const BonusGrid& grid, double lambda) {
    PreparedSet prep(apps, registry);
    SetOptimizer opt(prep);
    return opt.optimal_bonus(program, attribute, grid, lambda);
}

namespace {

std::optional<PolicySuggestion> average_over_sets(std::span<const PreparedSet> sets,
                                                  const StrategySpec& strategy,
                                                  const ProgramId& program,
                                                  const std::string& attribute,
                                                  const BonusGrid& grid, double lambda) {
    double sum = 0.0;
    int support = 0;
    for (const auto& prep : sets) {
        const auto& attrs = prep.attributes();
        if (std::find(attrs.begin(), attrs.end(), attribute) == attrs.end()) continue;
        SetOptimizer opt(prep);
        if (auto b = opt.optimal_bonus(program, attribute, grid, lambda)) {
            sum += *b;
            ++support;
        }
    }
    if (support == 0) return std::nullopt;
    return PolicySuggestion{program, attribute, sum / static_cast<double>(support), strategy,
                            support};
}

} // namespace

std::optional<PolicySuggestion> suggest_predictive(std::span<const ApplicationSet> sampled,
                                                   const ProgramRegistry& registry,
                                                   const ProgramId& program,
                                                   const std::string& attribute,
                                                   const BonusGrid& grid, double lambda) {
    MeanObjectiveAccumulator acc({program}, attribute, grid, lambda);
    for (const auto& apps : sampled) acc.add_set(PreparedSet(apps, registry));
    const SuggestionTable table = acc.table(
        {StrategySpec::Kind::predictive, static_cast<int>(sampled.size())});
    if (table.suggestions.empty()) return std::nullopt;
    return table.suggestions.front();
}

std::optional<PolicySuggestion> suggest_historical(std::span<const ApplicationSet> history,
                                                   const ProgramRegistry& registry, int k,
                                                   const ProgramId& program,
                                                   const std::string& attribute,
                                                   const BonusGrid& grid, double lambda) {
    if (k < 1) throw ConfigError("historical strategy needs k >= 1");
    const std::size_t take = std::min<std::size_t>(k, history.size());
    std::vector<PreparedSet> preps;
    preps.reserve(take);
    for (std::size_t i = history.size() - take; i < history.size(); ++i) {
        preps.emplace_back(history[i], registry);
    }
    return average_over_sets(preps, {StrategySpec::Kind::historical, k}, program, attribute,
                             grid, lambda);
}

std::optional<PolicySuggestion> ideal_policy(const ApplicationSet& realized,
                                             const ProgramRegistry& registry,
                                             const ProgramId& program,
                                             const std::string& attribute,
                                             const BonusGrid& grid, double lambda) {
    auto b = optimal_bonus(realized, registry, program, attribute, grid, lambda);
    if (!b) return std::nullopt;
    return PolicySuggestion{program, attribute, *b, {StrategySpec::Kind::ideal, 0}, 1};
}

SuggestionTable suggest_over_sets(const StrategySpec& strategy,
                                  std::span<const PreparedSet> sets,
                                  std::span<const ProgramId> targets,
                                  const std::string& attribute, const BonusGrid& grid,
                                  double lambda) {
    if (strategy.kind != StrategySpec::Kind::historical) {
        MeanObjectiveAccumulator acc({targets.begin(), targets.end()}, attribute, grid,
                                     lambda);
        for (const auto& prep : sets) acc.add_set(prep);
        return acc.table(strategy);
    }

    grid.validate();
    SuggestionTable table;
    table.strategy = strategy;
    table.attribute = attribute;
    table.lambda = lambda;
    std::map<ProgramId, std::pair<double, int>> acc;   // program -> (sum, count)
    for (const auto& t : targets) acc[t] = {0.0, 0};
    for (const auto& prep : sets) {
        // A set where no student carries the attribute contributes nothing.
        const auto& attrs = prep.attributes();
        if (std::find(attrs.begin(), attrs.end(), attribute) == attrs.end()) continue;
        SetOptimizer opt(prep);
        for (const auto& t : targets) {
            if (!prep.program_index(t)) continue;
            if (auto b = opt.optimal_bonus(t, attribute, grid, lambda)) {
                acc[t].first += *b;
                acc[t].second += 1;
            }
        }
    }
    for (const auto& [program, sc] : acc) {
        if (sc.second == 0) {
            table.skipped.emplace_back(program,
                                       "no application set with applicants from both groups");
        } else {
            table.suggestions.push_back(PolicySuggestion{
                program, attribute, sc.first / static_cast<double>(sc.second), strategy,
                sc.second});
        }
    }
    return table;
}

MeanObjectiveAccumulator::MeanObjectiveAccumulator(std::vector<ProgramId> targets,
                                                   std::string attribute, BonusGrid grid,
                                                   double lambda)
    : targets_(std::move(targets)), attribute_(std::move(attribute)),
      grid_(std::move(grid)), lambda_(lambda) {
    grid_.validate();
    if (lambda_ < 0.0) throw ConfigError("lambda must be >= 0");
    std::sort(targets_.begin(), targets_.end());
    targets_.erase(std::unique(targets_.begin(), targets_.end()), targets_.end());
    sum_.assign(targets_.size(), std::vector<double>(grid_.values.size(), 0.0));
    count_.assign(targets_.size(), std::vector<int>(grid_.values.size(), 0));
}

void MeanObjectiveAccumulator::add_set(const PreparedSet& prep) {
    ++sets_seen_;
    // A set where no student carries the attribute contributes nothing.
    const auto& attrs = prep.attributes();
    if (std::find(attrs.begin(), attrs.end(), attribute_) == attrs.end()) return;
    SetOptimizer opt(prep);
    for (std::size_t t = 0; t < targets_.size(); ++t) {
        if (!prep.program_index(targets_[t])) continue;
        const auto objectives = opt.grid_objectives(targets_[t], attribute_, grid_, lambda_);
        for (std::size_t i = 0; i < objectives.size(); ++i) {
            if (!objectives[i]) continue;
            sum_[t][i] += objectives[i]->value;
            count_[t][i] += 1;
        }
    }
}

SuggestionTable MeanObjectiveAccumulator::table(const StrategySpec& strategy) const {
    SuggestionTable out;
    out.strategy = strategy;
    out.attribute = attribute_;
    out.lambda = lambda_;
    for (std::size_t t = 0; t < targets_.size(); ++t) {
        const auto& counts = count_[t];
        const int support = *std::max_element(counts.begin(), counts.end());
        if (support == 0) {
            out.skipped.emplace_back(targets_[t],
                                     "no application set with applicants from both groups");
            continue;
        }
        // Only points defined on every contributing set have comparable
        // means; the ascending scan keeps ties at the smallest bonus.
        std::optional<std::size_t> best;
        double best_mean = 0.0;
        for (std::size_t i = 0; i < counts.size(); ++i) {
            if (counts[i] != support) continue;
            const double mean = sum_[t][i] / static_cast<double>(support);
            if (!best || mean < best_mean) {
                best = i;
                best_mean = mean;
            }
        }
        out.suggestions.push_back(PolicySuggestion{targets_[t], attribute_,
                                                   grid_.values[*best], strategy, support});
    }
    return out;
}

StrategyEvaluation evaluate_strategy(const std::vector<PolicySuggestion>& suggestions,
                                     const PreparedSet& realized, const BonusGrid& grid,
                                     double lambda,
                                     const std::map<ProgramId, Points>* ideal_bonuses) {
    grid.validate();
    StrategyEvaluation eval;
    eval.lambda = lambda;
    SetOptimizer opt(realized);

    std::vector<const PolicySuggestion*> ordered;
    ordered.reserve(suggestions.size());
    for (const auto& s : suggestions) ordered.push_back(&s);
    std::sort(ordered.begin(), ordered.end(),
              [](const PolicySuggestion* a, const PolicySuggestion* b) {
                  return a->program < b->program;
              });

    if (!ordered.empty()) {
        eval.strategy = ordered.front()->strategy;
        eval.attribute = ordered.front()->attribute;
    }
    for (const PolicySuggestion* sug : ordered) {
        if (!realized.program_index(sug->program)) {
            eval.excluded.emplace_back(sug->program, "program not in realized set registry");
            continue;
        }

        std::optional<Points> ideal;
        if (ideal_bonuses) {
            auto it = ideal_bonuses->find(sug->program);
            if (it != ideal_bonuses->end()) ideal = it->second;
        } else {
            ideal = opt.optimal_bonus(sug->program, sug->attribute, grid, lambda);
        }
        if (!ideal) {
            eval.excluded.emplace_back(sug->program, "objective undefined on realized set");
            continue;
        }

        const Points snapped = grid.snap(sug->bonus);
        const auto o_sugg = opt.objective_at(sug->program, sug->attribute, snapped, lambda);
        const auto o_ideal = opt.objective_at(sug->program, sug->attribute, *ideal, lambda);
        const auto spd_0 = opt.spd_at(sug->program, sug->attribute, 0.0);
        if (!o_sugg || !o_ideal || !spd_0) {
            eval.excluded.emplace_back(sug->program, "objective undefined on realized set");
            continue;
        }

        ProgramEvaluation row;
        row.program = sug->program;
        row.suggested_bonus = sug->bonus;
        row.evaluated_bonus = snapped;
        row.ideal_bonus = *ideal;
        row.objective_suggested = o_sugg->value;
        row.objective_ideal = o_ideal->value;
        row.objective_error = o_sugg->value - o_ideal->value;
        row.abs_spd_bonus = o_sugg->abs_spd;
        row.abs_spd_baseline = std::abs(*spd_0);
        row.spd_delta = row.abs_spd_bonus - row.abs_spd_baseline;
        row.utility_loss = o_sugg->utility_loss;
        row.support = sug->support;
        eval.rows.push_back(row);
    }

    std::vector<double> errors, deltas, bonuses;
    for (const auto& r : eval.rows) {
        errors.push_back(r.objective_error);
        deltas.push_back(r.spd_delta);
        bonuses.push_back(r.suggested_bonus);
    }
    eval.summary.n_programs = static_cast<int>(eval.rows.size());
    eval.summary.n_excluded = static_cast<int>(eval.excluded.size());
    eval.summary.mean_objective_error = mean_of(errors);
    eval.summary.sd_objective_error = sample_sd(errors);
    eval.summary.mean_spd_delta = mean_of(deltas);
    eval.summary.sd_spd_delta = sample_sd(deltas);
    eval.summary.mean_bonus = mean_of(bonuses);
    eval.summary.sd_bonus = sample_sd(bonuses);
    return eval;
}

} // namespace admissions
