#pragma once

// On-disk formats. Cohorts and programs travel as CSV, everything else
// (policies, suggestions, match outcomes, trained models, manifests) as
// JSON. Numbers are written with the shortest representation that
// round-trips, so re-loading a file reproduces the exact doubles and
// repeated runs produce byte-identical output.

#include <string>
#include <vector>

#include "json.hpp"

#include "admissions/applicant_model.hpp"
#include "admissions/matching.hpp"
#include "admissions/metrics.hpp"
#include "admissions/model.hpp"
#include "admissions/policy.hpp"

namespace admissions::io {

// Shortest round-trip decimal form of v ("680", "0.25", "1.76").
std::string format_double(double v);

std::string read_text_file(const std::string& path);              // DataError if unreadable
void write_text_file(const std::string& path, const std::string& content);

nlohmann::json load_json_file(const std::string& path);
void write_json_file(const std::string& path, const nlohmann::json& j);

// students.csv: id,grade_score,<one column per test>,attr_<name>...,preferences
// with preferences a |-separated ordered list of program ids.
std::string students_to_csv(const ApplicationSet& set, const std::vector<std::string>& tests,
                            const std::vector<std::string>& attributes);
ApplicationSet students_from_csv(const std::string& text, const std::string& year_label,
                                 Provenance provenance);
void write_students_csv(const std::string& path, const ApplicationSet& set,
                        const std::vector<std::string>& tests,
                        const std::vector<std::string>& attributes);
ApplicationSet load_students_csv(const std::string& path, const std::string& year_label,
                                 Provenance provenance);

// programs.csv: id,capacity,weight_grades,weight_<test>...
std::string programs_to_csv(const ProgramRegistry& registry);
ProgramRegistry programs_from_csv(const std::string& text);
void write_programs_csv(const std::string& path, const ProgramRegistry& registry);
ProgramRegistry load_programs_csv(const std::string& path);

// {"entries":[{"program":..., "attribute":..., "bonus":...}]}
nlohmann::json policy_to_json(const BonusPolicy& policy);
BonusPolicy policy_from_json(const nlohmann::json& j);

nlohmann::json suggestions_to_json(const SuggestionTable& table);
SuggestionTable suggestions_from_json(const nlohmann::json& j);

// Assignment map, per-program admitted/applicant lists, and cutoffs.
nlohmann::json outcome_to_json(const MatchOutcome& outcome);

nlohmann::json model_to_json(const ApplicantModel& model);
ApplicantModel model_from_json(const nlohmann::json& j);

// Per-program metric table: program id, spd, utility, admitted count,
// classification.
std::string metrics_to_csv(const std::vector<ProgramMetrics>& rows);
nlohmann::json metrics_to_json(const std::vector<ProgramMetrics>& rows);

// Evaluation report. The summary table mirrors the comparison tables:
// strategy, attribute, metric, mean, sd. The detail table carries one
// row per evaluated program.
std::string evaluation_summary_to_csv(const StrategyEvaluation& eval);
std::string evaluation_detail_to_csv(const StrategyEvaluation& eval);
nlohmann::json evaluation_to_json(const StrategyEvaluation& eval);

} // namespace admissions::io
