#include "contagion/table_check.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "contagion/error.hpp"
#include "json.hpp"

namespace contagion {

namespace {

using nlohmann::json;

void reject_unknown(const json& j, std::initializer_list<const char*> known,
                    const std::string& where) {
    for (const auto& [key, value] : j.items()) {
        (void)value;
        bool found = false;
        for (const char* k : known)
            if (key == k) found = true;
        if (!found)
            throw Error(Errc::parse_failure, "unknown key '" + key + "' in " + where);
    }
}

ReferenceRow row_from(const json& j) {
    if (!j.is_object()) throw Error(Errc::parse_failure, "reference row must be an object");
    reject_unknown(j, {"model", "scenario", "o", "c_inf", "s_stealth", "j_reported"},
                   "reference row");
    ReferenceRow row;
    row.model = j.at("model").get<std::string>();
    row.scenario = j.at("scenario").get<std::string>();
    row.o = j.at("o").get<double>();
    row.c_inf = j.at("c_inf").get<double>();
    row.s_stealth = j.at("s_stealth").get<double>();
    row.j_reported = j.at("j_reported").get<double>();
    return row;
}

long tenths_from(const json& j, const char* key) {
    const double pct = j.at(key).get<double>();
    return std::llround(pct * 10.0);
}

}  // namespace

ReferenceTables reference_tables_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(Errc::parse_failure, std::string("reference tables: ") + e.what());
    }
    if (!j.is_object()) throw Error(Errc::parse_failure, "reference tables must be an object");
    reject_unknown(j,
                   {"objective_weights", "scenario_summary", "deployment_comparison",
                    "event_counts", "published_percents"},
                   "reference tables");

    ReferenceTables tables;
    try {
        const json& w = j.at("objective_weights");
        reject_unknown(w, {"lambda_o", "lambda_c", "lambda_s", "lambda_0", "s_0"},
                       "objective_weights");
        tables.weights.lambda_o = w.at("lambda_o").get<double>();
        tables.weights.lambda_c = w.at("lambda_c").get<double>();
        tables.weights.lambda_s = w.at("lambda_s").get<double>();
        tables.weights.lambda_0 = w.at("lambda_0").get<double>();
        tables.weights.s_0 = w.at("s_0").get<double>();
        tables.weights.validate();

        for (const json& row : j.at("scenario_summary"))
            tables.scenario_summary.push_back(row_from(row));
        for (const json& row : j.at("deployment_comparison"))
            tables.deployment_comparison.push_back(row_from(row));

        const json& counts = j.at("event_counts");
        reject_unknown(counts, {"e_tot", "e_r0", "e_fwd", "e_ge3", "e_ge4", "e_ge5"},
                       "event_counts");
        tables.e_tot = counts.at("e_tot").get<long>();
        tables.e_r0 = counts.at("e_r0").get<long>();
        tables.e_fwd = counts.at("e_fwd").get<long>();
        tables.e_ge3 = counts.at("e_ge3").get<long>();
        tables.e_ge4 = counts.at("e_ge4").get<long>();
        tables.e_ge5 = counts.at("e_ge5").get<long>();

        const json& pct = j.at("published_percents");
        reject_unknown(pct, {"r0", "fwd", "ge3", "ge4", "ge5"}, "published_percents");
        tables.pct_tenths_r0 = tenths_from(pct, "r0");
        tables.pct_tenths_fwd = tenths_from(pct, "fwd");
        tables.pct_tenths_ge3 = tenths_from(pct, "ge3");
        tables.pct_tenths_ge4 = tenths_from(pct, "ge4");
        tables.pct_tenths_ge5 = tenths_from(pct, "ge5");
    } catch (const json::exception& e) {
        throw Error(Errc::parse_failure, std::string("reference tables: ") + e.what());
    }
    if (tables.scenario_summary.empty() || tables.deployment_comparison.empty())
        throw Error(Errc::parse_failure, "reference tables need at least one row per table");
    return tables;
}

ReferenceTables load_reference_tables(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::io_error, "cannot open reference tables: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return reference_tables_from_json_text(buf.str());
}

std::string default_reference_tables_path() {
    namespace fs = std::filesystem;
    std::error_code ec;
    const fs::path exe = fs::read_symlink("/proc/self/exe", ec);
    if (!ec) {
        const fs::path beside = exe.parent_path() / "data" / "reference_tables.json";
        if (fs::exists(beside, ec)) return beside.string();
    }
    return "data/reference_tables.json";
}

TableCheck verify_reference_tables(const ReferenceTables& tables, double tolerance) {
    TableCheck check;
    check.tolerance = tolerance;

    auto check_row = [&](const ReferenceRow& row) {
        RowCheck rc;
        rc.row = row;
        rc.j_computed = objective(row.o, row.c_inf, row.s_stealth, tables.weights).j;
        rc.deviation = std::fabs(rc.j_computed - row.j_reported);
        rc.within = rc.deviation <= tolerance + 1e-12;
        if (rc.within) ++check.within_count;
        check.rows.push_back(rc);
    };
    for (const ReferenceRow& row : tables.scenario_summary) check_row(row);
    for (const ReferenceRow& row : tables.deployment_comparison) check_row(row);

    auto check_pct = [&](const char* label, long count, long expected_tenths) {
        PercentCheck pc;
        pc.label = label;
        pc.expected_tenths = expected_tenths;
        pc.computed_tenths = percent_tenths(count, tables.e_tot);
        pc.exact = pc.computed_tenths == pc.expected_tenths;
        check.percents.push_back(pc);
    };
    check_pct("e_r0", tables.e_r0, tables.pct_tenths_r0);
    check_pct("e_fwd", tables.e_fwd, tables.pct_tenths_fwd);
    check_pct("e_ge3", tables.e_ge3, tables.pct_tenths_ge3);
    check_pct("e_ge4", tables.e_ge4, tables.pct_tenths_ge4);
    check_pct("e_ge5", tables.e_ge5, tables.pct_tenths_ge5);
    check.percents_exact = true;
    for (const PercentCheck& pc : check.percents)
        if (!pc.exact) check.percents_exact = false;

    return check;
}

std::string format_table_check(const TableCheck& check) {
    std::ostringstream out;
    out << std::fixed;
    out << std::left << std::setw(18) << "model" << std::setw(18) << "scenario" << std::right
        << std::setw(6) << "O" << std::setw(6) << "C" << std::setw(6) << "S" << std::setw(9)
        << "J(rep)" << std::setw(9) << "J(calc)" << std::setw(7) << "dev"
        << "\n";
    for (const RowCheck& rc : check.rows) {
        out << std::left << std::setw(18) << rc.row.model << std::setw(18) << rc.row.scenario
            << std::right << std::setprecision(2) << std::setw(6) << rc.row.o << std::setw(6)
            << rc.row.c_inf << std::setw(6) << rc.row.s_stealth << std::setw(9)
            << rc.row.j_reported << std::setw(9) << rc.j_computed << std::setw(7) << rc.deviation
            << (rc.within ? "" : "  FLAGGED") << "\n";
    }
    out << check.within_count << "/" << check.rows.size() << " rows within |dJ| <= "
        << std::setprecision(2) << check.tolerance << "\n";
    for (const PercentCheck& pc : check.percents) {
        out << std::left << std::setw(8) << pc.label << std::right << "expected "
            << std::setprecision(1) << static_cast<double>(pc.expected_tenths) / 10.0
            << "%  computed " << static_cast<double>(pc.computed_tenths) / 10.0 << "%  "
            << (pc.exact ? "exact" : "MISMATCH") << "\n";
    }
    out << "breakdown percentages " << (check.percents_exact ? "all exact" : "MISMATCHED")
        << " at one decimal\n";
    return out.str();
}

}  // namespace contagion
