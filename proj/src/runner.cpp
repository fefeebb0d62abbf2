#include "contagion/runner.hpp"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "contagion/error.hpp"
#include "json.hpp"

namespace contagion {

namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

void write_text_atomic(const std::string& path, const std::string& text) {
    const fs::path target(path);
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(Errc::io_error, "cannot open for write: " + tmp.string());
        out << text;
        if (!out) throw Error(Errc::io_error, "short write: " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) throw Error(Errc::io_error, "rename failed: " + target.string());
}

// Mean over episodes where the per-episode value is defined; nullopt when it
// is defined nowhere.
template <typename Get>
std::optional<double> mean_defined(const std::vector<EpisodeArtifacts>& eps, Get get) {
    double sum = 0.0;
    long count = 0;
    for (const EpisodeArtifacts& e : eps) {
        const std::optional<double> v = get(e.report);
        if (!v) continue;
        sum += *v;
        ++count;
    }
    if (count == 0) return std::nullopt;
    return sum / static_cast<double>(count);
}

}  // namespace

void RunSpec::validate() const {
    scenario.validate();
    params.validate();
    budget.validate();
    source_weights.validate();
    objective_weights.validate();
    if (seed_end < seed_begin) throw Error(Errc::config_invalid, "seed range is empty");
    if (seed_end - seed_begin >= 1000000)
        throw Error(Errc::config_invalid, "seed range exceeds 1,000,000 episodes");
    if (jobs < 1) throw Error(Errc::config_invalid, "jobs must be at least 1");
    if (backend == BackendKind::remote && !endpoint)
        throw Error(Errc::config_invalid, "remote backend requires an endpoint descriptor");
    if (out_dir.empty()) throw Error(Errc::config_invalid, "output directory must be set");
}

BatchResult run_batch(const RunSpec& spec) {
    spec.validate();
    fs::create_directories(spec.out_dir);

    const std::size_t count = static_cast<std::size_t>(spec.seed_end - spec.seed_begin) + 1;
    std::vector<EpisodeArtifacts> episodes(count);

    std::atomic<std::size_t> cursor{0};
    std::mutex error_mutex;
    std::exception_ptr first_error;

    auto worker = [&]() {
        for (;;) {
            {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (first_error) return;
            }
            const std::size_t idx = cursor.fetch_add(1);
            if (idx >= count) return;
            const std::uint64_t seed = spec.seed_begin + idx;
            try {
                AttackEngine engine(spec.scenario, spec.params, spec.budget, seed);
                if (spec.backend == BackendKind::remote) {
                    auto backend = std::make_shared<HttpChatBackend>(*spec.endpoint);
                    for (int i = 0; i < spec.scenario.n_robots; ++i)
                        engine.set_controller(RobotId{i},
                                              std::make_shared<RemoteController>(backend));
                }
                AttackResult result = engine.run();

                EpisodeArtifacts art;
                art.seed = seed;
                art.trace_path =
                    (fs::path(spec.out_dir) / ("trace_" + std::to_string(seed) + ".jsonl"))
                        .string();
                art.report_path =
                    (fs::path(spec.out_dir) / ("report_" + std::to_string(seed) + ".json"))
                        .string();
                write_trace(result.trace, art.trace_path);
                art.report = compute_report(result.trace, spec.scenario, spec.source_weights,
                                            spec.objective_weights);
                write_text_atomic(art.report_path, report_to_json(art.report) + "\n");
                episodes[idx] = std::move(art);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };

    const std::size_t n_threads =
        std::min<std::size_t>(static_cast<std::size_t>(spec.jobs), count);
    std::vector<std::thread> threads;
    for (std::size_t t = 0; t < n_threads; ++t) threads.emplace_back(worker);
    for (std::thread& t : threads) t.join();
    if (first_error) std::rethrow_exception(first_error);

    BatchResult batch;
    batch.episodes = std::move(episodes);

    std::ostringstream csv;
    csv << report_csv_header() << "\n";
    for (const EpisodeArtifacts& e : batch.episodes) csv << report_csv_row(e.report) << "\n";
    batch.csv_path = (fs::path(spec.out_dir) / "batch.csv").string();
    write_text_atomic(batch.csv_path, csv.str());

    batch.summary_path = (fs::path(spec.out_dir) / "summary.json").string();
    write_text_atomic(batch.summary_path, summary_to_json(batch) + "\n");
    return batch;
}

MetricsReport report_from_trace_file(const std::string& trace_path, const ScenarioConfig& config,
                                     const SourceWeights& source_weights,
                                     const ObjectiveWeights& objective_weights) {
    const EpisodeTrace trace = read_trace(trace_path);
    return compute_report(trace, config, source_weights, objective_weights);
}

std::string summary_to_json(const BatchResult& batch) {
    const auto& eps = batch.episodes;
    ordered_json j;
    j["episodes"] = eps.size();
    j["scenario_id"] = eps.empty() ? "" : eps.front().report.scenario_id;

    ordered_json mean;
    auto always = [&](auto get) -> ordered_json {
        if (eps.empty()) return nullptr;
        double sum = 0.0;
        for (const EpisodeArtifacts& e : eps) sum += get(e.report);
        return sum / static_cast<double>(eps.size());
    };
    auto opt = [&](auto get) -> ordered_json {
        const std::optional<double> v = mean_defined(eps, get);
        if (!v) return nullptr;
        return *v;
    };
    mean["o_ar"] = always([](const MetricsReport& r) { return r.obed.o_ar; });
    mean["o_esr"] = always([](const MetricsReport& r) { return r.obed.o_esr; });
    mean["o_cond"] = opt([](const MetricsReport& r) { return r.obed.o_cond; });
    mean["c_inf"] = always([](const MetricsReport& r) { return r.c_inf; });
    mean["s_stealth"] = always([](const MetricsReport& r) { return r.s_stealth; });
    mean["depth"] = always([](const MetricsReport& r) { return static_cast<double>(r.depth); });
    mean["r_compromise"] = opt([](const MetricsReport& r) -> std::optional<double> {
        if (!r.r_compromise) return std::nullopt;
        return static_cast<double>(*r.r_compromise);
    });
    mean["j"] = opt([](const MetricsReport& r) { return r.j; });
    j["mean"] = mean;

    long feasible = 0;
    long full_compromise = 0;
    EventBreakdown totals;
    long attack_inputs = 0;
    long coord_messages = 0;
    for (const EpisodeArtifacts& e : eps) {
        if (e.report.stealth_feasible) ++feasible;
        if (e.report.r_compromise) ++full_compromise;
        totals.e_tot += e.report.breakdown.e_tot;
        totals.e_r0 += e.report.breakdown.e_r0;
        totals.e_fwd += e.report.breakdown.e_fwd;
        totals.e_ge3 += e.report.breakdown.e_ge3;
        totals.e_ge4 += e.report.breakdown.e_ge4;
        totals.e_ge5 += e.report.breakdown.e_ge5;
        attack_inputs += e.report.footprint.attack_inputs;
        coord_messages += e.report.footprint.coord_messages;
    }
    j["stealth_feasible_episodes"] = feasible;
    j["full_compromise_episodes"] = full_compromise;

    ordered_json tot;
    tot["attack_inputs"] = attack_inputs;
    tot["coord_messages"] = coord_messages;
    tot["e_tot"] = totals.e_tot;
    tot["e_r0"] = totals.e_r0;
    tot["e_fwd"] = totals.e_fwd;
    tot["e_ge3"] = totals.e_ge3;
    tot["e_ge4"] = totals.e_ge4;
    tot["e_ge5"] = totals.e_ge5;
    tot["pct_r0"] = static_cast<double>(percent_tenths(totals.e_r0, totals.e_tot)) / 10.0;
    tot["pct_fwd"] = static_cast<double>(percent_tenths(totals.e_fwd, totals.e_tot)) / 10.0;
    tot["pct_ge3"] = static_cast<double>(percent_tenths(totals.e_ge3, totals.e_tot)) / 10.0;
    tot["pct_ge4"] = static_cast<double>(percent_tenths(totals.e_ge4, totals.e_tot)) / 10.0;
    tot["pct_ge5"] = static_cast<double>(percent_tenths(totals.e_ge5, totals.e_tot)) / 10.0;
    j["totals"] = tot;

    return j.dump(2);
}

}  // namespace contagion
