#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <filesystem>
#include <fstream>

#include "contagion/runner.hpp"
#include "doctest.h"
#include "json.hpp"

using namespace contagion;
namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "contagion_runner_test" / name;
    fs::remove_all(dir);
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

RunSpec base_spec(const std::string& out_name) {
    RunSpec spec;
    spec.scenario = builtin_scenario("warehouse_patrol");
    spec.params = susceptible_params();
    spec.budget.drop_prob = 0.0;
    spec.out_dir = fresh_dir(out_name).string();
    return spec;
}

}  // namespace

TEST_CASE("run spec validation") {
    RunSpec spec = base_spec("validate");
    CHECK_NOTHROW(spec.validate());

    spec.seed_begin = 10;
    spec.seed_end = 9;
    CHECK_THROWS_AS(spec.validate(), Error);

    spec = base_spec("validate");
    spec.jobs = 0;
    CHECK_THROWS_AS(spec.validate(), Error);

    spec = base_spec("validate");
    spec.backend = BackendKind::remote;  // remote needs an endpoint
    CHECK_THROWS_AS(spec.validate(), Error);

    spec = base_spec("validate");
    spec.out_dir.clear();
    CHECK_THROWS_AS(spec.validate(), Error);

    spec = base_spec("validate");
    spec.seed_begin = 0;
    spec.seed_end = 2'000'000;
    CHECK_THROWS_AS(spec.validate(), Error);
}

TEST_CASE("single-seed batch writes the full artifact set") {
    RunSpec spec = base_spec("single");
    const BatchResult batch = run_batch(spec);

    REQUIRE(batch.episodes.size() == 1);
    const EpisodeArtifacts& ep = batch.episodes[0];
    CHECK(ep.seed == 42);
    CHECK(fs::path(ep.trace_path).filename() == "trace_42.jsonl");
    CHECK(fs::path(ep.report_path).filename() == "report_42.json");
    CHECK(fs::exists(ep.trace_path));
    CHECK(fs::exists(ep.report_path));
    CHECK(fs::exists(batch.csv_path));
    CHECK(fs::exists(batch.summary_path));

    // The persisted report is byte-for-byte the computed one.
    CHECK(slurp(ep.report_path) == report_to_json(ep.report) + "\n");

    // The CSV is a header plus one row with matching arity.
    std::istringstream csv(slurp(batch.csv_path));
    std::string header, row, extra;
    REQUIRE(std::getline(csv, header));
    REQUIRE(std::getline(csv, row));
    CHECK_FALSE(std::getline(csv, extra));
    CHECK(header == report_csv_header());
    CHECK(row == report_csv_row(ep.report));

    // Full compromise for the susceptible fleet.
    CHECK(ep.report.c_inf == doctest::Approx(1.0));
    REQUIRE(ep.report.r_compromise.has_value());
    CHECK(*ep.report.r_compromise == 3);
}

TEST_CASE("offline recomputation from the persisted trace matches exactly") {
    RunSpec spec = base_spec("recompute");
    spec.params = ComplianceParams{};
    spec.budget.drop_prob = 0.2;
    const BatchResult batch = run_batch(spec);
    const EpisodeArtifacts& ep = batch.episodes[0];

    const MetricsReport again = report_from_trace_file(ep.trace_path, spec.scenario,
                                                       spec.source_weights, spec.objective_weights);
    CHECK(report_to_json(again) == report_to_json(ep.report));
}

TEST_CASE("multi-seed parallel batch is ordered, complete, and aggregated") {
    RunSpec spec = base_spec("parallel");
    spec.params = ComplianceParams{};
    spec.budget.drop_prob = 0.15;
    spec.seed_begin = 100;
    spec.seed_end = 119;
    spec.jobs = 4;
    const BatchResult batch = run_batch(spec);

    REQUIRE(batch.episodes.size() == 20);
    for (std::size_t i = 0; i < batch.episodes.size(); ++i) {
        CHECK(batch.episodes[i].seed == 100 + i);
        CHECK(fs::exists(batch.episodes[i].trace_path));
    }

    // Sequential execution produces identical artifacts (jobs only adds
    // parallelism, never different outcomes).
    RunSpec seq = spec;
    seq.jobs = 1;
    seq.out_dir = fresh_dir("sequential").string();
    const BatchResult sbatch = run_batch(seq);
    REQUIRE(sbatch.episodes.size() == 20);
    for (std::size_t i = 0; i < 20; ++i) {
        CHECK(slurp(batch.episodes[i].trace_path) == slurp(sbatch.episodes[i].trace_path));
        CHECK(slurp(batch.episodes[i].report_path) == slurp(sbatch.episodes[i].report_path));
    }
    CHECK(slurp(batch.csv_path) == slurp(sbatch.csv_path));
    CHECK(slurp(batch.summary_path) == slurp(sbatch.summary_path));

    // Summary means sit inside the per-episode extremes.
    const auto summary = ordered_json::parse(slurp(batch.summary_path));
    CHECK(summary["episodes"] == 20);
    CHECK(summary["scenario_id"] == "warehouse_patrol");
    double lo = 1e9, hi = -1e9;
    for (const auto& ep : batch.episodes) {
        lo = std::min(lo, ep.report.c_inf);
        hi = std::max(hi, ep.report.c_inf);
    }
    const double mean_c = summary["mean"]["c_inf"].get<double>();
    CHECK(mean_c >= lo);
    CHECK(mean_c <= hi);

    long inputs = 0;
    for (const auto& ep : batch.episodes) inputs += ep.report.footprint.attack_inputs;
    CHECK(summary["totals"]["attack_inputs"].get<long>() == inputs);
}

TEST_CASE("repeated batches are byte-identical") {
    RunSpec spec = base_spec("repeat_a");
    spec.params = ComplianceParams{};
    spec.budget.drop_prob = 0.3;
    spec.seed_begin = 7;
    spec.seed_end = 11;
    const BatchResult a = run_batch(spec);

    RunSpec again = spec;
    again.out_dir = fresh_dir("repeat_b").string();
    const BatchResult b = run_batch(again);

    REQUIRE(a.episodes.size() == b.episodes.size());
    for (std::size_t i = 0; i < a.episodes.size(); ++i) {
        CHECK(slurp(a.episodes[i].trace_path) == slurp(b.episodes[i].trace_path));
        CHECK(slurp(a.episodes[i].report_path) == slurp(b.episodes[i].report_path));
    }
    CHECK(slurp(a.csv_path) == slurp(b.csv_path));
}

TEST_CASE("summary records undefined means as null") {
    RunSpec spec = base_spec("immune");
    spec.params = immune_params();
    spec.budget.drop_prob = 1.0;
    spec.seed_begin = 1;
    spec.seed_end = 3;
    const BatchResult batch = run_batch(spec);

    const auto summary = ordered_json::parse(slurp(batch.summary_path));
    CHECK(summary["mean"]["o_cond"].is_null());  // undefined in every episode
    CHECK(summary["mean"]["j"].is_null());
    CHECK(summary["mean"]["r_compromise"].is_null());
    CHECK(summary["full_compromise_episodes"] == 0);
    CHECK(summary["mean"]["c_inf"].get<double>() == doctest::Approx(0.0));
}
