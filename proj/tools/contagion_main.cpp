#include <algorithm>
#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "contagion/error.hpp"
#include "contagion/runner.hpp"
#include "contagion/table_check.hpp"

namespace {

using namespace contagion;

ScenarioConfig resolve_scenario(const std::string& value, int n_robots) {
    const auto ids = builtin_scenario_ids();
    if (std::find(ids.begin(), ids.end(), value) != ids.end())
        return builtin_scenario(value, n_robots);
    if (n_robots != 0)
        throw Error(Errc::config_invalid,
                    "--n-robots applies to builtin scenarios only; file configs fix their roster");
    return load_scenario(value);
}

ComplianceParams resolve_params(const std::string& value) {
    if (value == "default") return ComplianceParams{};
    if (value == "susceptible") return susceptible_params();
    if (value == "immune") return immune_params();
    return load_params(value);
}

std::pair<std::uint64_t, std::uint64_t> parse_seed_range(const std::string& text) {
    const auto pos = text.find("..");
    try {
        if (pos == std::string::npos) {
            const std::uint64_t s = std::stoull(text);
            return {s, s};
        }
        const std::uint64_t a = std::stoull(text.substr(0, pos));
        const std::uint64_t b = std::stoull(text.substr(pos + 2));
        return {a, b};
    } catch (const std::exception&) {
        throw Error(Errc::config_invalid, "--seeds expects N or A..B, got '" + text + "'");
    }
}

std::vector<double> parse_doubles(const std::string& text, std::size_t n, const char* flag) {
    std::vector<double> out;
    std::string::size_type start = 0;
    while (start <= text.size()) {
        const auto comma = text.find(',', start);
        const std::string piece =
            comma == std::string::npos ? text.substr(start) : text.substr(start, comma - start);
        try {
            out.push_back(std::stod(piece));
        } catch (const std::exception&) {
            throw Error(Errc::config_invalid,
                        std::string(flag) + " expects " + std::to_string(n) + " comma-separated numbers");
        }
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    if (out.size() != n)
        throw Error(Errc::config_invalid,
                    std::string(flag) + " expects " + std::to_string(n) + " comma-separated numbers");
    return out;
}

struct CommonOpts {
    std::string scenario = "warehouse_patrol";
    int n_robots = 0;
    std::string weights;
    double stealth_floor = -1.0;
    std::string source_weights;

    void apply(ObjectiveWeights& ow, SourceWeights& sw) const {
        if (!weights.empty()) {
            const auto v = parse_doubles(weights, 4, "--weights");
            ow.lambda_o = v[0];
            ow.lambda_c = v[1];
            ow.lambda_s = v[2];
            ow.lambda_0 = v[3];
        }
        if (stealth_floor >= 0.0) ow.s_0 = stealth_floor;
        if (!source_weights.empty()) {
            const auto v = parse_doubles(source_weights, 2, "--source-weights");
            sw.w_entry_direct = v[0];
            sw.w_multi_hop = v[1];
        }
        ow.validate();
        sw.validate();
    }
};

int cmd_run(const CommonOpts& common, const std::string& backend, const std::string& params,
            int rp, int rs, int retries, double drop_prob, const std::string& seeds,
            const std::string& target_selection, bool entry_activation_logged, int jobs,
            const std::string& out_dir, const std::string& endpoint_url,
            const std::string& endpoint_model, int endpoint_timeout_ms) {
    RunSpec spec;
    spec.scenario = resolve_scenario(common.scenario, common.n_robots);
    spec.params = resolve_params(params);
    spec.budget.dissemination_rounds = rp;
    spec.budget.stage_rounds = rs;
    spec.budget.retry_cap = retries;
    spec.budget.drop_prob = drop_prob;
    spec.budget.log_entry_activation_as_attack_input = entry_activation_logged;
    if (target_selection == "lowest")
        spec.budget.target_selection = TargetSelection::lowest_index;
    else if (target_selection == "uniform")
        spec.budget.target_selection = TargetSelection::seeded_uniform;
    else
        throw Error(Errc::config_invalid, "--target-selection must be lowest or uniform");
    common.apply(spec.objective_weights, spec.source_weights);
    const auto [a, b] = parse_seed_range(seeds);
    spec.seed_begin = a;
    spec.seed_end = b;
    spec.jobs = jobs;
    spec.out_dir = out_dir;
    if (backend == "scripted") {
        spec.backend = BackendKind::scripted;
    } else if (backend == "remote") {
        spec.backend = BackendKind::remote;
        EndpointDescriptor ep;
        ep.base_url = endpoint_url;
        ep.model = endpoint_model;
        ep.timeout_ms = endpoint_timeout_ms;
        if (ep.base_url.empty())
            throw Error(Errc::config_invalid, "remote backend requires --endpoint-url");
        spec.endpoint = ep;
    } else {
        throw Error(Errc::config_invalid, "--backend must be scripted or remote");
    }

    const BatchResult batch = run_batch(spec);
    std::cout << "episodes: " << batch.episodes.size() << "\n"
              << "batch csv: " << batch.csv_path << "\n"
              << "summary: " << batch.summary_path << "\n";
    return 0;
}

int cmd_report(const CommonOpts& common, const std::vector<std::string>& traces) {
    ObjectiveWeights ow;
    SourceWeights sw;
    common.apply(ow, sw);
    const ScenarioConfig config = resolve_scenario(common.scenario, common.n_robots);
    for (const std::string& path : traces) {
        const MetricsReport report = report_from_trace_file(path, config, sw, ow);
        std::cout << report_to_json(report) << "\n";
    }
    return 0;
}

int cmd_verify_tables(const std::string& fixture, double tolerance) {
    const std::string path = fixture.empty() ? default_reference_tables_path() : fixture;
    const ReferenceTables tables = load_reference_tables(path);
    const TableCheck check = verify_reference_tables(tables, tolerance);
    std::cout << format_table_check(check);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-robot payload-propagation simulator and trace metrics"};
    app.require_subcommand(1);

    CommonOpts common;

    // run
    auto* run = app.add_subcommand("run", "Run a seeded batch of episodes");
    std::string backend = "scripted";
    std::string params = "default";
    int rp = 8, rs = 8, retries = 2;
    double drop_prob = 0.1;
    std::string seeds = "42";
    std::string target_selection = "lowest";
    bool entry_activation_logged = true;
    int jobs = 1;
    std::string out_dir = "out";
    std::string endpoint_url;
    std::string endpoint_model = "default-model";
    int endpoint_timeout_ms = 30000;
    run->add_option("--scenario", common.scenario,
                    "Builtin id (warehouse_patrol, hospital_privacy, formation_escort) or JSON path");
    run->add_option("--n-robots", common.n_robots, "Roster override for builtin scenarios");
    run->add_option("--backend", backend, "scripted | remote");
    run->add_option("--params", params, "default | susceptible | immune | JSON path");
    run->add_option("--rp", rp, "Dissemination rounds R_p");
    run->add_option("--rs", rs, "Per-stage propagation rounds R_s");
    run->add_option("--retries", retries, "Retry cap K");
    run->add_option("--drop-prob", drop_prob, "Relay drop probability");
    run->add_option("--weights", common.weights, "Objective weights lO,lC,lS,l0");
    run->add_option("--stealth-floor", common.stealth_floor, "Stealth constraint s_0");
    run->add_option("--source-weights", common.source_weights, "w_entry_direct,w_multi_hop");
    run->add_option("--seeds", seeds, "Seed N or inclusive range A..B");
    run->add_option("--target-selection", target_selection, "lowest | uniform");
    run->add_flag("--entry-activation-logged,!--entry-activation-unlogged",
                  entry_activation_logged,
                  "Log per-stage entry activations as attacker inputs");
    run->add_option("--jobs", jobs, "Parallel episodes");
    run->add_option("--out", out_dir, "Output directory");
    run->add_option("--endpoint-url", endpoint_url, "Chat endpoint base URL (remote backend)");
    run->add_option("--endpoint-model", endpoint_model, "Model name sent to the endpoint");
    run->add_option("--endpoint-timeout-ms", endpoint_timeout_ms, "HTTP timeout");

    // report
    auto* report = app.add_subcommand("report", "Recompute reports from persisted traces");
    std::vector<std::string> trace_paths;
    report->add_option("--scenario", common.scenario, "Scenario the traces were produced with");
    report->add_option("--n-robots", common.n_robots, "Roster override for builtin scenarios");
    report->add_option("--weights", common.weights, "Objective weights lO,lC,lS,l0");
    report->add_option("--stealth-floor", common.stealth_floor, "Stealth constraint s_0");
    report->add_option("--source-weights", common.source_weights, "w_entry_direct,w_multi_hop");
    report->add_option("--trace", trace_paths, "Trace file (repeatable)")->required();

    // verify-tables
    auto* verify = app.add_subcommand("verify-tables",
                                      "Recompute the reference-table arithmetic and flag deviations");
    std::string fixture;
    double tolerance = 0.02;
    verify->add_option("--fixture", fixture, "Reference tables JSON (default: bundled fixture)");
    verify->add_option("--tolerance", tolerance, "Max |dJ| before a row is flagged");

    try {
        app.parse(argc, argv);
        if (run->parsed())
            return cmd_run(common, backend, params, rp, rs, retries, drop_prob, seeds,
                           target_selection, entry_activation_logged, jobs, out_dir, endpoint_url,
                           endpoint_model, endpoint_timeout_ms);
        if (report->parsed()) return cmd_report(common, trace_paths);
        if (verify->parsed()) return cmd_verify_tables(fixture, tolerance);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const contagion::Error& e) {
        std::cerr << "error [" << errc_name(e.code()) << "]: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
