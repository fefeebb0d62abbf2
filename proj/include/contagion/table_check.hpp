#pragma once

#include <string>
#include <vector>

#include "contagion/metrics.hpp"

namespace contagion {

// One published evaluation row: indicator triple plus the objective value the
// source reports for it.
struct ReferenceRow {
    std::string model;
    std::string scenario;
    double o = 0.0;
    double c_inf = 0.0;
    double s_stealth = 0.0;
    double j_reported = 0.0;
};

struct ReferenceTables {
    ObjectiveWeights weights;
    std::vector<ReferenceRow> scenario_summary;        // per-model, per-scenario rows
    std::vector<ReferenceRow> deployment_comparison;   // cross-deployment reference rows
    long e_tot = 0;
    long e_r0 = 0;
    long e_fwd = 0;
    long e_ge3 = 0;
    long e_ge4 = 0;
    long e_ge5 = 0;
    // Published one-decimal percentages, stored as integer tenths.
    long pct_tenths_r0 = 0;
    long pct_tenths_fwd = 0;
    long pct_tenths_ge3 = 0;
    long pct_tenths_ge4 = 0;
    long pct_tenths_ge5 = 0;
};

ReferenceTables load_reference_tables(const std::string& path);
ReferenceTables reference_tables_from_json_text(const std::string& text);

// data/reference_tables.json next to the running executable, falling back to
// the working directory.
std::string default_reference_tables_path();

struct RowCheck {
    ReferenceRow row;
    double j_computed = 0.0;
    double deviation = 0.0;
    bool within = false;  // deviation <= tolerance
};

struct PercentCheck {
    std::string label;
    long expected_tenths = 0;
    long computed_tenths = 0;
    bool exact = false;
};

struct TableCheck {
    double tolerance = 0.02;
    std::vector<RowCheck> rows;  // scenario_summary then deployment_comparison
    int within_count = 0;
    std::vector<PercentCheck> percents;
    bool percents_exact = false;
};

// Pure arithmetic: recompute J per row from its indicator triple and all
// breakdown percentages from the raw counts; flag rows exceeding tolerance.
TableCheck verify_reference_tables(const ReferenceTables& tables, double tolerance = 0.02);

std::string format_table_check(const TableCheck& check);

}  // namespace contagion
