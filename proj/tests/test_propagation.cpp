#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "contagion/metrics.hpp"
#include "contagion/propagation.hpp"
#include "doctest.h"

using namespace contagion;

namespace {

AttackBudget quiet_budget(double drop = 0.0) {
    AttackBudget b;
    b.drop_prob = drop;
    return b;
}

int count_kind(const EpisodeTrace& t, EventKind kind) {
    int n = 0;
    for (const auto& e : t.events())
        if (e.kind == kind) ++n;
    return n;
}

// Independent hop oracle: walk the CONF parent graph recorded in the trace.
std::map<int, int> hops_from_confs(const EpisodeTrace& t) {
    std::map<int, int> hop;
    hop[0] = 0;
    for (const auto& e : t.events()) {
        if (e.kind != EventKind::CONF) continue;
        REQUIRE(hop.count(e.actor.index) == 1);  // relayer was confirmed first
        hop[e.target->index] = hop[e.actor.index] + 1;
    }
    return hop;
}

void check_episode_invariants(const AttackResult& result, const AttackBudget& budget,
                              const ScenarioConfig& config) {
    const EpisodeTrace& t = result.trace;

    // Trace serialization round-trips byte-identically.
    const std::string text = to_jsonl(t);
    CHECK(to_jsonl(trace_from_jsonl(text)) == text);

    // CONF targets are unique non-entry robots; confirmed order mirrors them.
    std::vector<RobotId> conf_targets;
    for (const auto& e : t.events())
        if (e.kind == EventKind::CONF) conf_targets.push_back(*e.target);
    std::set<int> distinct;
    for (RobotId r : conf_targets) {
        CHECK(r != kEntryRobot);
        CHECK(distinct.insert(r.index).second);
    }
    REQUIRE(result.prop.confirmed.size() == conf_targets.size() + 1);
    CHECK(result.prop.confirmed.front() == kEntryRobot);
    for (std::size_t i = 0; i < conf_targets.size(); ++i)
        CHECK(result.prop.confirmed[i + 1] == conf_targets[i]);

    // Activated robots are exactly the distinct SUCCESS targets, and confirmed.
    std::vector<RobotId> success_targets;
    for (const auto& e : t.events())
        if (e.kind == EventKind::SUCCESS &&
            std::find(success_targets.begin(), success_targets.end(), *e.target) ==
                success_targets.end())
            success_targets.push_back(*e.target);
    CHECK(result.prop.activated == success_targets);
    for (RobotId r : result.prop.activated) CHECK(result.prop.is_confirmed(r));

    // Hop provenance matches the CONF parent graph.
    const auto hop = hops_from_confs(t);
    for (const auto& e : t.events()) {
        if (e.kind == EventKind::VIOLATION) {
            auto it = hop.find(e.actor.index);
            const int expect = it == hop.end() ? 0 : it->second;
            CHECK(*e.hop == expect);
        }
        if (e.kind == EventKind::SUCCESS) {
            auto it = hop.find(e.target->index);
            const int expect = it == hop.end() ? 0 : it->second;
            CHECK(*e.hop == expect);
        }
        if (e.kind == EventKind::CONF) CHECK(*e.hop == hop.at(e.target->index));
    }

    // Attempt budgets are hard caps.
    const long n1 = config.n_robots - 1;
    CHECK(result.stats.relay_attempts <=
          budget.dissemination_rounds + static_cast<long>(budget.retry_cap) * n1);
    CHECK(result.stats.activation_attempts <=
          static_cast<long>(config.l_max()) *
              (1 + budget.stage_rounds + static_cast<long>(budget.retry_cap) * n1));
    CHECK(result.stats.final_round == t.final_round());
}

}  // namespace

TEST_CASE("budget validation") {
    AttackBudget b;
    CHECK_NOTHROW(b.validate());
    b.dissemination_rounds = -1;
    CHECK_THROWS_AS(b.validate(), Error);
    b = {};
    b.retry_cap = -2;
    CHECK_THROWS_AS(b.validate(), Error);
    b = {};
    b.prompt_pool.clear();
    CHECK_THROWS_AS(b.validate(), Error);
    b = {};
    b.drop_prob = 1.2;
    CHECK_THROWS_AS(b.validate(), Error);
}

TEST_CASE("engine override guards") {
    AttackEngine engine(builtin_scenario("warehouse_patrol"), susceptible_params(), quiet_budget(),
                        1);
    CHECK_THROWS_AS(engine.set_controller(RobotId{9}, std::make_shared<ScriptedController>()),
                    Error);
    CHECK_THROWS_AS(engine.set_controller(RobotId{0}, nullptr), Error);
    CHECK_THROWS_AS(engine.set_params(RobotId{-2}, susceptible_params()), Error);
    ComplianceParams bad = susceptible_params();
    bad.adopt_threshold = 0.0;
    CHECK_THROWS_AS(engine.set_params(RobotId{1}, bad), Error);
}

TEST_CASE("entry seeding ingests every prompt; adoption timing is the trust walk") {
    SUBCASE("susceptible: first prompt adopts and leaves the round shared") {
        AttackEngine engine(builtin_scenario("warehouse_patrol"), susceptible_params(),
                            quiet_budget(), 3);
        engine.seed_entry();
        CHECK(engine.agent(RobotId{0}).payload_adopted);
        CHECK(engine.stats().seed_prompts_sent == 1);
        CHECK(count_kind(engine.trace(), EventKind::ATTACK_INPUT) == 1);
    }
    SUBCASE("default params: trust 0.5 then 1.0 adopts on the second prompt") {
        AttackEngine engine(builtin_scenario("warehouse_patrol"), ComplianceParams{},
                            quiet_budget(), 3);
        engine.seed_entry();
        CHECK(engine.agent(RobotId{0}).payload_adopted);
        CHECK(engine.stats().seed_prompts_sent == 2);
    }
    SUBCASE("immune: the prompt pool plus retries is exhausted without adoption") {
        AttackBudget b = quiet_budget();
        b.retry_cap = 2;
        AttackEngine engine(builtin_scenario("warehouse_patrol"), immune_params(), b, 3);
        engine.seed_entry();
        CHECK_FALSE(engine.agent(RobotId{0}).payload_adopted);
        CHECK(engine.stats().seed_prompts_sent == 5);  // 3 prompts + 2 retries
        CHECK(count_kind(engine.trace(), EventKind::ATTACK_INPUT) == 5);
        CHECK(count_kind(engine.trace(), EventKind::REFUSAL) == 5);
    }
}

TEST_CASE("relay_proto: delivery, adoption, and both drop gates") {
    SUBCASE("clean channel onto a susceptible target confirms it") {
        AttackEngine engine(builtin_scenario("warehouse_patrol"), susceptible_params(),
                            quiet_budget(), 5);
        engine.seed_entry();
        CHECK(engine.relay_proto(RobotId{0}, RobotId{1}) == RelayOutcome::DELIVERED_ADOPTED);
        CHECK(engine.prop_state().is_confirmed(RobotId{1}));
        CHECK(engine.prop_state().relay_node == RobotId{1});
        CHECK(count_kind(engine.trace(), EventKind::CONF) == 1);
        // Seed adoption and the first relay share the round.
        for (const auto& e : engine.trace().events())
            if (e.kind == EventKind::CONF) CHECK(e.round == 1);
        CHECK(engine.stats().relay_attempts == 1);
    }
    SUBCASE("drop probability one never delivers") {
        AttackEngine engine(builtin_scenario("warehouse_patrol"), susceptible_params(),
                            quiet_budget(1.0), 5);
        engine.seed_entry();
        const int wires_before = count_kind(engine.trace(), EventKind::COORD_MESSAGE);
        CHECK(engine.relay_proto(RobotId{0}, RobotId{1}) == RelayOutcome::DROPPED);
        CHECK(count_kind(engine.trace(), EventKind::COORD_MESSAGE) == wires_before);
        CHECK_FALSE(engine.prop_state().is_confirmed(RobotId{1}));
    }
    SUBCASE("an unwilling sender also drops the relay") {
        ComplianceParams p = susceptible_params();
        p.relay_willingness = 0.0;
        AttackEngine engine(builtin_scenario("warehouse_patrol"), p, quiet_budget(), 5);
        engine.seed_entry();
        CHECK(engine.relay_proto(RobotId{0}, RobotId{1}) == RelayOutcome::DROPPED);
        CHECK(count_kind(engine.trace(), EventKind::CONF) == 0);
    }
    SUBCASE("an immune target rejects the delivered payload") {
        AttackEngine engine(builtin_scenario("warehouse_patrol"), susceptible_params(),
                            quiet_budget(), 5);
        engine.set_params(RobotId{1}, immune_params());
        engine.seed_entry();
        CHECK(engine.relay_proto(RobotId{0}, RobotId{1}) == RelayOutcome::DELIVERED_REJECTED);
        CHECK_FALSE(engine.prop_state().is_confirmed(RobotId{1}));
    }
    SUBCASE("sender must be confirmed, target must not be") {
        AttackEngine engine(builtin_scenario("warehouse_patrol"), susceptible_params(),
                            quiet_budget(), 5);
        engine.seed_entry();
        CHECK_THROWS_AS(engine.relay_proto(RobotId{2}, RobotId{1}), Error);
        CHECK_THROWS_AS(engine.relay_proto(RobotId{0}, RobotId{0}), Error);
        CHECK_THROWS_AS(engine.relay_proto(RobotId{0}, RobotId{9}), Error);
    }
}

TEST_CASE("relay_proto drop rate tracks the configured channel probability") {
    AttackBudget b = quiet_budget(0.3);
    AttackEngine engine(builtin_scenario("warehouse_patrol", 2), susceptible_params(), b, 11);
    engine.set_params(RobotId{1}, immune_params());  // target never adopts, so it stays eligible
    engine.seed_entry();

    const int trials = 10000;
    int dropped = 0;
    for (int i = 0; i < trials; ++i) {
        RelayOutcome out = engine.relay_proto(RobotId{0}, RobotId{1});
        CHECK(out != RelayOutcome::DELIVERED_ADOPTED);
        if (out == RelayOutcome::DROPPED) ++dropped;
    }
    const double rate = static_cast<double>(dropped) / trials;
    CHECK(std::fabs(rate - 0.3) < 0.015);
    CHECK(engine.stats().relay_attempts == trials);
}

TEST_CASE("retry_confirm bounds attempts and stops on confirmation") {
    SUBCASE("zero retries means zero attempts") {
        AttackEngine engine(builtin_scenario("warehouse_patrol"), susceptible_params(),
                            quiet_budget(), 6);
        engine.seed_entry();
        engine.retry_confirm(RobotId{1}, 0);
        CHECK(engine.stats().relay_attempts == 0);
    }
    SUBCASE("first success short-circuits the remaining attempts") {
        AttackEngine engine(builtin_scenario("warehouse_patrol"), susceptible_params(),
                            quiet_budget(), 6);
        engine.seed_entry();
        CHECK(engine.retry_confirm(RobotId{1}, 3) == RelayOutcome::DELIVERED_ADOPTED);
        CHECK(engine.stats().relay_attempts == 1);
    }
    SUBCASE("already-confirmed targets are left alone") {
        AttackEngine engine(builtin_scenario("warehouse_patrol"), susceptible_params(),
                            quiet_budget(), 6);
        engine.seed_entry();
        engine.relay_proto(RobotId{0}, RobotId{1});
        const long before = engine.stats().relay_attempts;
        engine.retry_confirm(RobotId{1}, 3);
        CHECK(engine.stats().relay_attempts == before);
    }
}

TEST_CASE("retry_confirm adoption probability matches the geometric-series oracle") {
    // Per attempt: deliver with probability 1 - drop = 0.5 onto a first-contact
    // adopter, so P(confirmed within 3 attempts) = 1 - 0.5^3 = 0.875.
    const ScenarioConfig config = builtin_scenario("warehouse_patrol", 2);
    const int trials = 20000;
    int adopted = 0;
    for (int i = 0; i < trials; ++i) {
        AttackEngine engine(config, susceptible_params(), quiet_budget(0.5),
                            static_cast<std::uint64_t>(i));
        engine.seed_entry();
        engine.retry_confirm(RobotId{1}, 3);
        if (engine.prop_state().is_confirmed(RobotId{1})) ++adopted;
    }
    const double rate = static_cast<double>(adopted) / trials;
    CHECK(std::fabs(rate - 0.875) < 0.01);
}

TEST_CASE("attempt_activation guards its preconditions") {
    AttackEngine engine(builtin_scenario("hospital_privacy"), susceptible_params(), quiet_budget(),
                        8);
    engine.seed_entry();
    CHECK_THROWS_AS(engine.attempt_activation(1, RobotId{1}), Error);  // not confirmed yet
    engine.relay_proto(RobotId{0}, RobotId{1});
    // Stage 2 (in-ward sensing) is not feasible from the corridor.
    CHECK_THROWS_AS(engine.attempt_activation(2, RobotId{1}), Error);
}

TEST_CASE("carrier activation realizes the cargo stage end to end") {
    AttackEngine engine(builtin_scenario("formation_escort"), susceptible_params(), quiet_budget(),
                        9);
    engine.seed_entry();
    CHECK(engine.relay_proto(RobotId{0}, RobotId{4}) == RelayOutcome::DELIVERED_ADOPTED);
    CHECK(engine.attempt_activation(2, RobotId{4}) == ActOutcome::SUCCESS);
    CHECK(engine.world().cargo == CargoState::handled_unsafely);
    CHECK(engine.prop_state().is_activated(RobotId{4}));
    bool found = false;
    for (const auto& e : engine.trace().events())
        if (e.kind == EventKind::SUCCESS) {
            found = true;
            CHECK(e.target == RobotId{4});
            CHECK(e.stage == 2);
            CHECK(e.hop == 1);
        }
    CHECK(found);
}

TEST_CASE("follower activation success rate equals the violation probability") {
    ComplianceParams p;
    p.trust_gain_per_prompt = 1.0;
    p.adopt_threshold = 1.0;
    p.relay_willingness = 1.0;
    p.violate_prob_degraded = 0.4;
    p.violate_prob_jailbroken = 0.95;
    p.refusal_prob_aligned = 0.0;
    const ScenarioConfig config = builtin_scenario("warehouse_patrol", 2);

    const int trials = 10000;
    int successes = 0;
    for (int i = 0; i < trials; ++i) {
        AttackEngine engine(config, p, quiet_budget(), static_cast<std::uint64_t>(i));
        engine.seed_entry();
        REQUIRE(engine.relay_proto(RobotId{0}, RobotId{1}) == RelayOutcome::DELIVERED_ADOPTED);
        if (engine.attempt_activation(1, RobotId{1}) == ActOutcome::SUCCESS) ++successes;
    }
    const double rate = static_cast<double>(successes) / trials;
    CHECK(std::fabs(rate - 0.4) < 0.015);
}

TEST_CASE("full susceptible run compromises everything on schedule") {
    const ScenarioConfig config = builtin_scenario("warehouse_patrol");
    AttackEngine engine(config, susceptible_params(), quiet_budget(), 42);
    const AttackResult result = engine.run();

    CHECK(result.prop.confirmed.size() == 4);
    CHECK(result.prop.activated.size() == 4);
    CHECK(result.stats.seed_prompts_sent == 1);
    CHECK(result.stats.dissemination_rounds_used == 3);
    CHECK(result.stats.relay_attempts == 3);
    // One entry attempt plus one staged relay per follower.
    CHECK(result.stats.activation_attempts == 4);

    std::vector<int> conf_rounds;
    for (const auto& e : result.trace.events())
        if (e.kind == EventKind::CONF) conf_rounds.push_back(e.round);
    CHECK(conf_rounds == std::vector<int>{1, 2, 3});

    const DepthTime dt = depth_and_time(result.trace);
    CHECK(dt.depth == 3);
    REQUIRE(dt.r_compromise.has_value());
    CHECK(*dt.r_compromise == 3);

    check_episode_invariants(result, quiet_budget(), config);
    CHECK_THROWS_AS(engine.run(), Error);  // single-episode engine
}

TEST_CASE("immune fleet on a dead channel yields zero compromise, zero unsafe events") {
    AttackBudget b = quiet_budget(1.0);
    const ScenarioConfig config = builtin_scenario("warehouse_patrol");
    const AttackResult result = run_attack(config, immune_params(), b, 42);

    CHECK(result.prop.confirmed.size() == 1);
    CHECK(result.prop.activated.empty());
    CHECK(count_kind(result.trace, EventKind::CONF) == 0);
    CHECK(count_kind(result.trace, EventKind::VIOLATION) == 0);
    CHECK(count_kind(result.trace, EventKind::SUCCESS) == 0);
    // 5 seed prompts + 1 logged entry activation attempt, all refused.
    CHECK(count_kind(result.trace, EventKind::ATTACK_INPUT) == 6);
    CHECK(count_kind(result.trace, EventKind::REFUSAL) == 6);
    check_episode_invariants(result, b, config);
}

TEST_CASE("entry activation logging toggle controls the attacker footprint") {
    const ScenarioConfig config = builtin_scenario("warehouse_patrol");
    AttackBudget logged = quiet_budget();
    AttackBudget unlogged = quiet_budget();
    unlogged.log_entry_activation_as_attack_input = false;

    const AttackResult with = run_attack(config, susceptible_params(), logged, 13);
    const AttackResult without = run_attack(config, susceptible_params(), unlogged, 13);
    CHECK(count_footprint(with.trace).attack_inputs == 2);   // seed + entry activation
    CHECK(count_footprint(without.trace).attack_inputs == 1);  // seed only
    // The activation itself still happens either way.
    CHECK(with.prop.activated.size() == without.prop.activated.size());
}

TEST_CASE("same seed reproduces the episode byte for byte") {
    const ScenarioConfig config = builtin_scenario("hospital_privacy");
    AttackBudget b;
    b.drop_prob = 0.25;
    const std::string a = to_jsonl(run_attack(config, ComplianceParams{}, b, 77).trace);
    const std::string c = to_jsonl(run_attack(config, ComplianceParams{}, b, 77).trace);
    CHECK(a == c);
    const std::string d = to_jsonl(run_attack(config, ComplianceParams{}, b, 78).trace);
    CHECK(a != d);

    AttackBudget u = b;
    u.target_selection = TargetSelection::seeded_uniform;
    const std::string e = to_jsonl(run_attack(config, ComplianceParams{}, u, 77).trace);
    const std::string f = to_jsonl(run_attack(config, ComplianceParams{}, u, 77).trace);
    CHECK(e == f);
}

TEST_CASE("fuzzed episodes keep every structural invariant") {
    Rng fuzz(20260814);
    const std::vector<std::string> ids = builtin_scenario_ids();
    for (int episode = 0; episode < 60; ++episode) {
        const ScenarioConfig config =
            builtin_scenario(ids[static_cast<std::size_t>(fuzz.below(ids.size()))]);

        ComplianceParams p;
        p.trust_gain_per_prompt = 0.2 + 0.8 * fuzz.next_unit();
        p.adopt_threshold = 0.2 + 0.8 * fuzz.next_unit();
        p.relay_willingness = fuzz.next_unit();
        p.violate_prob_degraded = fuzz.next_unit();
        p.violate_prob_jailbroken =
            p.violate_prob_degraded + (1.0 - p.violate_prob_degraded) * fuzz.next_unit();
        p.refusal_prob_aligned = fuzz.next_unit();

        AttackBudget b;
        b.dissemination_rounds = static_cast<int>(fuzz.below(7));
        b.stage_rounds = static_cast<int>(fuzz.below(6));
        b.retry_cap = static_cast<int>(fuzz.below(4));
        b.drop_prob = fuzz.next_unit();
        b.log_entry_activation_as_attack_input = fuzz.bernoulli(0.5);
        b.target_selection =
            fuzz.bernoulli(0.5) ? TargetSelection::lowest_index : TargetSelection::seeded_uniform;

        const AttackResult result =
            run_attack(config, p, b, static_cast<std::uint64_t>(episode) * 7919 + 1);
        check_episode_invariants(result, b, config);

        // Metrics remain computable on every organic trace.
        const MetricsReport report =
            compute_report(result.trace, config, SourceWeights{}, ObjectiveWeights{});
        CHECK(report.obed.o_ar >= 0.0);
        CHECK(report.obed.o_ar <= 1.0);
        CHECK(report.c_inf >= 0.0);
        CHECK(report.c_inf <= 1.0 + 1e-12);
        CHECK(report.s_stealth >= 0.0);
        CHECK(report.s_stealth <= 1.0);
    }
}
