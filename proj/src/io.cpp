#include "admissions/io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <system_error>

#include "admissions/errors.hpp"

namespace admissions::io {

namespace {

// Field charset that keeps CSV trivially parseable: no separators, no
// quotes, no whitespace. Ids and component names must satisfy it.
bool plain_field(const std::string& s) {
    if (s.empty()) return false;
    for (char c : s) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                        (c >= '0' && c <= '9') || c == '_' || c == '-' || c == '.';
        if (!ok) return false;
    }
    return true;
}

void require_plain(const std::string& s, const char* what) {
    if (!plain_field(s))
        throw DataError(std::string(what) + " '" + s +
                        "' contains characters unsuitable for CSV fields");
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(sep, start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t pos = text.find('\n', start);
        if (pos == std::string::npos) pos = text.size();
        std::string line = text.substr(start, pos - start);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(std::move(line));
        start = pos + 1;
    }
    return lines;
}

double parse_double(const std::string& field, int line_no, const char* what) {
    double value = 0.0;
    const char* first = field.data();
    const char* last = first + field.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last)
        throw DataError("line " + std::to_string(line_no) + ": bad " + what + " value '" +
                        field + "'");
    return value;
}

int parse_int(const std::string& field, int line_no, const char* what) {
    int value = 0;
    const char* first = field.data();
    const char* last = first + field.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last)
        throw DataError("line " + std::to_string(line_no) + ": bad " + what + " value '" +
                        field + "'");
    return value;
}

bool parse_flag(const std::string& field, int line_no, const std::string& what) {
    if (field == "0") return false;
    if (field == "1") return true;
    throw DataError("line " + std::to_string(line_no) + ": attribute column " + what +
                    " must be 0 or 1, got '" + field + "'");
}

constexpr const char* kAttrPrefix = "attr_";

bool has_attr_prefix(const std::string& column) {
    return column.rfind(kAttrPrefix, 0) == 0 && column.size() > 5;
}

} // namespace

std::string format_double(double v) {
    if (v == 0.0) return "0";   // fold away negative zero
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) throw DataError("failed to format a number");
    return std::string(buf, ptr);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open for reading: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw DataError("read failed: " + path);
    return buf.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open for writing: " + path);
    out << content;
    out.flush();
    if (!out) throw DataError("write failed: " + path);
}

nlohmann::json load_json_file(const std::string& path) {
    const std::string text = read_text_file(path);
    nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded()) throw DataError("invalid JSON in " + path);
    return j;
}

void write_json_file(const std::string& path, const nlohmann::json& j) {
    write_text_file(path, j.dump(2) + "\n");
}

std::string students_to_csv(const ApplicationSet& set, const std::vector<std::string>& tests,
                            const std::vector<std::string>& attributes) {
    std::string out = "id,grade_score";
    for (const std::string& t : tests) {
        require_plain(t, "test name");
        out += "," + t;
    }
    for (const std::string& a : attributes) {
        require_plain(a, "attribute name");
        out += ",";
        out += kAttrPrefix;
        out += a;
    }
    out += ",preferences\n";

    for (const Student& s : set.students) {
        require_plain(s.id, "student id");
        out += s.id;
        out += ",";
        out += format_double(s.grades);
        for (const std::string& t : tests) {
            const auto it = s.tests.find(t);
            if (it == s.tests.end())
                throw DataError("student " + s.id + " is missing test '" + t + "'");
            out += ",";
            out += format_double(it->second);
        }
        for (const std::string& a : attributes) {
            const auto it = s.groups.find(a);
            if (it == s.groups.end())
                throw DataError("student " + s.id + " is missing attribute '" + a + "'");
            out += it->second ? ",1" : ",0";
        }
        out += ",";
        for (std::size_t i = 0; i < s.preferences.size(); ++i) {
            require_plain(s.preferences[i], "program id");
            if (i > 0) out += "|";
            out += s.preferences[i];
        }
        out += "\n";
    }
    return out;
}

ApplicationSet students_from_csv(const std::string& text, const std::string& year_label,
                                 Provenance provenance) {
    const std::vector<std::string> lines = split_lines(text);
    if (lines.empty()) throw DataError("students CSV is empty");
    const std::vector<std::string> header = split(lines[0], ',');
    if (header.size() < 3 || header[0] != "id" || header[1] != "grade_score" ||
        header.back() != "preferences")
        throw DataError("students CSV header must be "
                        "id,grade_score,<tests>,attr_<name>...,preferences");

    std::vector<std::string> tests;
    std::vector<std::string> attributes;
    for (std::size_t c = 2; c + 1 < header.size(); ++c) {
        if (has_attr_prefix(header[c])) {
            attributes.push_back(header[c].substr(5));
        } else {
            if (!attributes.empty())
                throw DataError("students CSV: test column '" + header[c] +
                                "' appears after attribute columns");
            tests.push_back(header[c]);
        }
    }

    ApplicationSet set;
    set.year_label = year_label;
    set.provenance = provenance;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const int line_no = static_cast<int>(i) + 1;
        const std::vector<std::string> fields = split(lines[i], ',');
        if (fields.size() != header.size())
            throw DataError("line " + std::to_string(line_no) + ": expected " +
                            std::to_string(header.size()) + " fields, got " +
                            std::to_string(fields.size()));
        Student s;
        s.id = fields[0];
        if (!plain_field(s.id))
            throw DataError("line " + std::to_string(line_no) + ": bad student id '" + s.id +
                            "'");
        s.grades = parse_double(fields[1], line_no, "grade_score");
        std::size_t c = 2;
        for (const std::string& t : tests) s.tests[t] = parse_double(fields[c++], line_no, "test");
        for (const std::string& a : attributes)
            s.groups[a] = parse_flag(fields[c++], line_no, kAttrPrefix + a);
        for (const std::string& pid : split(fields[c], '|')) {
            if (pid.empty())
                throw DataError("line " + std::to_string(line_no) + ": empty program id in "
                                "preferences");
            s.preferences.push_back(pid);
        }
        set.students.push_back(std::move(s));
    }
    return set;
}

void write_students_csv(const std::string& path, const ApplicationSet& set,
                        const std::vector<std::string>& tests,
                        const std::vector<std::string>& attributes) {
    write_text_file(path, students_to_csv(set, tests, attributes));
}

ApplicationSet load_students_csv(const std::string& path, const std::string& year_label,
                                 Provenance provenance) {
    return students_from_csv(read_text_file(path), year_label, provenance);
}

std::string programs_to_csv(const ProgramRegistry& registry) {
    // Column order: grades first, then the remaining components sorted.
    std::set<std::string> extra;
    for (const auto& [id, prog] : registry.programs)
        for (const auto& [component, w] : prog.weights)
            if (component != kGradesComponent) extra.insert(component);

    std::string out = "id,capacity,weight_";
    out += kGradesComponent;
    for (const std::string& component : extra) {
        require_plain(component, "component name");
        out += ",weight_" + component;
    }
    out += "\n";
    for (const auto& [id, prog] : registry.programs) {
        require_plain(id, "program id");
        out += id + "," + std::to_string(prog.capacity);
        const auto weight_of = [&](const std::string& component) {
            const auto it = prog.weights.find(component);
            return it == prog.weights.end() ? 0.0 : it->second;
        };
        out += "," + format_double(weight_of(kGradesComponent));
        for (const std::string& component : extra)
            out += "," + format_double(weight_of(component));
        out += "\n";
    }
    return out;
}

ProgramRegistry programs_from_csv(const std::string& text) {
    const std::vector<std::string> lines = split_lines(text);
    if (lines.empty()) throw DataError("programs CSV is empty");
    const std::vector<std::string> header = split(lines[0], ',');
    if (header.size() < 3 || header[0] != "id" || header[1] != "capacity")
        throw DataError("programs CSV header must be id,capacity,weight_<component>...");
    std::vector<std::string> components;
    for (std::size_t c = 2; c < header.size(); ++c) {
        if (header[c].rfind("weight_", 0) != 0 || header[c].size() <= 7)
            throw DataError("programs CSV: bad weight column '" + header[c] + "'");
        components.push_back(header[c].substr(7));
    }

    ProgramRegistry registry;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const int line_no = static_cast<int>(i) + 1;
        const std::vector<std::string> fields = split(lines[i], ',');
        if (fields.size() != header.size())
            throw DataError("line " + std::to_string(line_no) + ": expected " +
                            std::to_string(header.size()) + " fields, got " +
                            std::to_string(fields.size()));
        Program prog;
        prog.id = fields[0];
        if (!plain_field(prog.id))
            throw DataError("line " + std::to_string(line_no) + ": bad program id '" + prog.id +
                            "'");
        prog.capacity = parse_int(fields[1], line_no, "capacity");
        for (std::size_t c = 0; c < components.size(); ++c) {
            const double w = parse_double(fields[c + 2], line_no, "weight");
            if (w != 0.0) prog.weights[components[c]] = w;   // zeros mean "not used"
        }
        validate_program(prog);
        if (!registry.programs.emplace(prog.id, std::move(prog)).second)
            throw DataError("line " + std::to_string(line_no) + ": duplicate program id");
    }
    if (registry.programs.empty()) throw DataError("programs CSV contains no programs");
    return registry;
}

void write_programs_csv(const std::string& path, const ProgramRegistry& registry) {
    write_text_file(path, programs_to_csv(registry));
}

ProgramRegistry load_programs_csv(const std::string& path) {
    return programs_from_csv(read_text_file(path));
}

nlohmann::json policy_to_json(const BonusPolicy& policy) {
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& [key, bonus] : policy.entries)
        entries.push_back(
            {{"program", key.first}, {"attribute", key.second}, {"bonus", bonus}});
    return {{"entries", entries}};
}

BonusPolicy policy_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("entries") || !j["entries"].is_array())
        throw DataError("policy JSON must be an object with an 'entries' array");
    BonusPolicy policy;
    for (const nlohmann::json& entry : j["entries"]) {
        if (!entry.is_object() || !entry.contains("program") || !entry.contains("attribute") ||
            !entry.contains("bonus") || !entry["program"].is_string() ||
            !entry["attribute"].is_string() || !entry["bonus"].is_number())
            throw DataError("policy entry must carry program, attribute, and numeric bonus");
        policy.set_bonus(entry["program"].get<std::string>(),
                         entry["attribute"].get<std::string>(), entry["bonus"].get<double>());
    }
    return policy;
}

nlohmann::json suggestions_to_json(const SuggestionTable& table) {
    nlohmann::json suggestions = nlohmann::json::array();
    for (const PolicySuggestion& s : table.suggestions)
        suggestions.push_back({{"program", s.program},
                               {"attribute", s.attribute},
                               {"bonus", s.bonus},
                               {"support", s.support}});
    nlohmann::json skipped = nlohmann::json::array();
    for (const auto& [program, reason] : table.skipped)
        skipped.push_back({{"program", program}, {"reason", reason}});
    return {{"strategy", table.strategy.name()},
            {"attribute", table.attribute},
            {"lambda", table.lambda},
            {"suggestions", suggestions},
            {"skipped", skipped}};
}

SuggestionTable suggestions_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("strategy") || !j.contains("attribute") ||
        !j.contains("lambda") || !j.contains("suggestions"))
        throw DataError("suggestions JSON must carry strategy, attribute, lambda, suggestions");
    SuggestionTable table;
    table.strategy = StrategySpec::parse(j["strategy"].get<std::string>());
    table.attribute = j["attribute"].get<std::string>();
    table.lambda = j["lambda"].get<double>();
    for (const nlohmann::json& s : j["suggestions"]) {
        if (!s.is_object() || !s.contains("program") || !s.contains("attribute") ||
            !s.contains("bonus"))
            throw DataError("suggestion entry must carry program, attribute, bonus");
        PolicySuggestion sug;
        sug.program = s["program"].get<std::string>();
        sug.attribute = s["attribute"].get<std::string>();
        sug.bonus = s["bonus"].get<double>();
        sug.support = s.value("support", 0);
        sug.strategy = table.strategy;
        table.suggestions.push_back(std::move(sug));
    }
    if (j.contains("skipped"))
        for (const nlohmann::json& s : j["skipped"])
            table.skipped.emplace_back(s["program"].get<std::string>(),
                                       s["reason"].get<std::string>());
    return table;
}

nlohmann::json outcome_to_json(const MatchOutcome& outcome) {
    nlohmann::json assignment = nlohmann::json::object();
    for (const auto& [student, program] : outcome.assignment)
        assignment[student] = program ? nlohmann::json(*program) : nlohmann::json(nullptr);

    nlohmann::json programs = nlohmann::json::object();
    for (const auto& [pid, result] : outcome.per_program) {
        nlohmann::json admitted = nlohmann::json::array();
        for (const AdmittedStudent& a : result.admitted)
            admitted.push_back({{"id", a.id}, {"score", a.score}, {"effective", a.effective}});
        nlohmann::json groups = nlohmann::json::object();
        for (const auto& [attribute, counts] : result.groups)
            groups[attribute] = {{"applicants_protected", counts.applicants_protected},
                                 {"applicants_other", counts.applicants_other},
                                 {"admitted_protected", counts.admitted_protected},
                                 {"admitted_other", counts.admitted_other}};
        programs[pid] = {{"admitted", admitted},
                         {"applicants", result.applicants},
                         {"cutoff", result.cutoff},
                         {"groups", groups}};
    }
    return {{"assignment", assignment}, {"programs", programs}};
}

nlohmann::json model_to_json(const ApplicantModel& model) {
    nlohmann::json buckets = nlohmann::json::array();
    for (int b = 0; b < model.n_buckets(); ++b)
        buckets.push_back({{"students", model.cell_students[b]},
                           {"propensity_other", model.propensity[b][0]},
                           {"propensity_protected", model.propensity[b][1]}});

    nlohmann::json pool = nlohmann::json::array();
    for (const Student& s : model.pool) {
        nlohmann::json tests = nlohmann::json::object();
        for (const auto& [name, v] : s.tests) tests[name] = v;
        nlohmann::json groups = nlohmann::json::object();
        for (const auto& [name, flag] : s.groups) groups[name] = flag;
        pool.push_back({{"id", s.id},
                        {"grade_score", s.grades},
                        {"tests", tests},
                        {"groups", groups},
                        {"preferences", s.preferences}});
    }
    return {{"attribute", model.attribute},
            {"trained_on", model.trained_on},
            {"scale", {{"min", model.scale.min}, {"max", model.scale.max}}},
            {"bucket_width", model.bucket_width},
            {"shrinkage", model.shrinkage},
            {"programs", model.programs},
            {"buckets", buckets},
            {"length_dist", model.length_dist},
            {"pool", pool}};
}

ApplicantModel model_from_json(const nlohmann::json& j) {
    try {
        ApplicantModel model;
        model.attribute = j.at("attribute").get<std::string>();
        model.trained_on = j.at("trained_on").get<std::string>();
        model.scale.min = j.at("scale").at("min").get<double>();
        model.scale.max = j.at("scale").at("max").get<double>();
        model.bucket_width = j.at("bucket_width").get<double>();
        model.shrinkage = j.at("shrinkage").get<double>();
        model.programs = j.at("programs").get<std::vector<ProgramId>>();
        for (const nlohmann::json& b : j.at("buckets")) {
            model.cell_students.push_back(b.at("students").get<std::array<int, 2>>());
            model.propensity.push_back(
                {b.at("propensity_other").get<std::vector<double>>(),
                 b.at("propensity_protected").get<std::vector<double>>()});
        }
        model.length_dist = j.at("length_dist").get<std::vector<double>>();
        for (const nlohmann::json& s : j.at("pool")) {
            Student student;
            student.id = s.at("id").get<std::string>();
            student.grades = s.at("grade_score").get<double>();
            for (const auto& [name, v] : s.at("tests").items())
                student.tests[name] = v.get<double>();
            for (const auto& [name, v] : s.at("groups").items())
                student.groups[name] = v.get<bool>();
            student.preferences = s.at("preferences").get<std::vector<ProgramId>>();
            model.pool.push_back(std::move(student));
        }
        if (model.pool.empty()) throw DataError("applicant model JSON has an empty pool");
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed applicant model JSON: ") + e.what());
    }
}

std::string metrics_to_csv(const std::vector<ProgramMetrics>& rows) {
    std::string out = "program,spd,utility,admitted_count,classification\n";
    for (const ProgramMetrics& m : rows) {
        out += m.program;
        out += ",";
        out += m.spd ? format_double(*m.spd) : "";
        out += ",";
        out += m.utility ? format_double(*m.utility) : "";
        out += "," + std::to_string(m.admitted_count) + ",";
        out += m.spd ? to_string(classify_spd(*m.spd)) : "undefined";
        out += "\n";
    }
    return out;
}

nlohmann::json metrics_to_json(const std::vector<ProgramMetrics>& rows) {
    nlohmann::json out = nlohmann::json::array();
    for (const ProgramMetrics& m : rows) {
        nlohmann::json row = {{"program", m.program},
                              {"admitted_count", m.admitted_count},
                              {"applicants_protected", m.applicants_protected},
                              {"applicants_other", m.applicants_other}};
        row["spd"] = m.spd ? nlohmann::json(*m.spd) : nlohmann::json(nullptr);
        row["utility"] = m.utility ? nlohmann::json(*m.utility) : nlohmann::json(nullptr);
        row["classification"] = m.spd ? to_string(classify_spd(*m.spd)) : "undefined";
        out.push_back(std::move(row));
    }
    return out;
}

std::string evaluation_summary_to_csv(const StrategyEvaluation& eval) {
    const std::string prefix = eval.strategy.name() + "," + eval.attribute + ",";
    std::string out = "strategy,attribute,metric,mean,sd\n";
    out += prefix + "objective_error," + format_double(eval.summary.mean_objective_error) + "," +
           format_double(eval.summary.sd_objective_error) + "\n";
    out += prefix + "spd_delta," + format_double(eval.summary.mean_spd_delta) + "," +
           format_double(eval.summary.sd_spd_delta) + "\n";
    out += prefix + "suggested_bonus," + format_double(eval.summary.mean_bonus) + "," +
           format_double(eval.summary.sd_bonus) + "\n";
    return out;
}

std::string evaluation_detail_to_csv(const StrategyEvaluation& eval) {
    std::string out =
        "program,suggested_bonus,evaluated_bonus,ideal_bonus,objective_suggested,"
        "objective_ideal,objective_error,abs_spd_bonus,abs_spd_baseline,spd_delta,"
        "utility_loss,support\n";
    for (const ProgramEvaluation& r : eval.rows) {
        out += r.program + "," + format_double(r.suggested_bonus) + "," +
               format_double(r.evaluated_bonus) + "," + format_double(r.ideal_bonus) + "," +
               format_double(r.objective_suggested) + "," + format_double(r.objective_ideal) +
               "," + format_double(r.objective_error) + "," + format_double(r.abs_spd_bonus) +
               "," + format_double(r.abs_spd_baseline) + "," + format_double(r.spd_delta) + "," +
               format_double(r.utility_loss) + "," + std::to_string(r.support) + "\n";
    }
    return out;
}

nlohmann::json evaluation_to_json(const StrategyEvaluation& eval) {
    nlohmann::json rows = nlohmann::json::array();
    for (const ProgramEvaluation& r : eval.rows)
        rows.push_back({{"program", r.program},
                        {"suggested_bonus", r.suggested_bonus},
                        {"evaluated_bonus", r.evaluated_bonus},
                        {"ideal_bonus", r.ideal_bonus},
                        {"objective_suggested", r.objective_suggested},
                        {"objective_ideal", r.objective_ideal},
                        {"objective_error", r.objective_error},
                        {"abs_spd_bonus", r.abs_spd_bonus},
                        {"abs_spd_baseline", r.abs_spd_baseline},
                        {"spd_delta", r.spd_delta},
                        {"utility_loss", r.utility_loss},
                        {"support", r.support}});
    nlohmann::json excluded = nlohmann::json::array();
    for (const auto& [program, reason] : eval.excluded)
        excluded.push_back({{"program", program}, {"reason", reason}});
    return {{"strategy", eval.strategy.name()},
            {"attribute", eval.attribute},
            {"lambda", eval.lambda},
            {"summary",
             {{"n_programs", eval.summary.n_programs},
              {"n_excluded", eval.summary.n_excluded},
              {"mean_objective_error", eval.summary.mean_objective_error},
              {"sd_objective_error", eval.summary.sd_objective_error},
              {"mean_spd_delta", eval.summary.mean_spd_delta},
              {"sd_spd_delta", eval.summary.sd_spd_delta},
              {"mean_bonus", eval.summary.mean_bonus},
              {"sd_bonus", eval.summary.sd_bonus}}},
            {"programs", rows},
            {"excluded", excluded}};
}

} // namespace admissions::io
