#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "contagion/metrics.hpp"
#include "contagion/propagation.hpp"
#include "contagion/remote.hpp"

namespace contagion {

enum class BackendKind { scripted, remote };

struct RunSpec {
    ScenarioConfig scenario;
    BackendKind backend = BackendKind::scripted;
    ComplianceParams params;
    AttackBudget budget;
    SourceWeights source_weights;
    ObjectiveWeights objective_weights;
    std::uint64_t seed_begin = 42;
    std::uint64_t seed_end = 42;  // inclusive
    std::string out_dir = "out";
    int jobs = 1;
    std::optional<EndpointDescriptor> endpoint;  // required for the remote backend

    void validate() const;
};

struct EpisodeArtifacts {
    std::uint64_t seed = 0;
    std::string trace_path;
    std::string report_path;
    MetricsReport report;
};

struct BatchResult {
    std::vector<EpisodeArtifacts> episodes;  // sorted by seed
    std::string csv_path;
    std::string summary_path;
};

// Runs every seed in the range (episodes are independent; up to `jobs` in
// parallel), writes trace_<seed>.jsonl and report_<seed>.json atomically per
// episode, then batch.csv and summary.json once all episodes finished.
BatchResult run_batch(const RunSpec& spec);

// Offline recomputation from a persisted trace; must equal the report emitted
// during the run.
MetricsReport report_from_trace_file(const std::string& trace_path, const ScenarioConfig& config,
                                     const SourceWeights& source_weights,
                                     const ObjectiveWeights& objective_weights);

std::string summary_to_json(const BatchResult& batch);

}  // namespace contagion
