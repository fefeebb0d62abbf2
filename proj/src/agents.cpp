#include "contagion/agents.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace contagion {

using ordered_json = nlohmann::ordered_json;

const char* to_string(SafetyState s) {
    switch (s) {
        case SafetyState::ALIGNED: return "ALIGNED";
        case SafetyState::DEGRADED: return "DEGRADED";
        case SafetyState::JAILBROKEN: return "JAILBROKEN";
    }
    return "ALIGNED";
}

namespace {

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

}  // namespace

void ComplianceParams::validate() const {
    if (trust_gain_per_prompt < 0.0)
        throw Error(Errc::config_invalid, "trust_gain_per_prompt must be >= 0");
    if (!(adopt_threshold > 0.0) || adopt_threshold > 1.0)
        throw Error(Errc::config_invalid, "adopt_threshold must be in (0, 1]");
    if (!is_probability(relay_willingness) || !is_probability(violate_prob_degraded) ||
        !is_probability(violate_prob_jailbroken) || !is_probability(refusal_prob_aligned))
        throw Error(Errc::config_invalid, "compliance probabilities must be in [0, 1]");
    if (violate_prob_jailbroken < violate_prob_degraded)
        throw Error(Errc::config_invalid,
                    "violate_prob_jailbroken must be >= violate_prob_degraded");
}

ComplianceParams params_from_json_text(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const std::exception& ex) {
        throw Error(Errc::config_invalid, std::string("params file is not valid JSON: ") + ex.what());
    }
    if (!j.is_object())
        throw Error(Errc::config_invalid, "params file must hold a JSON object");
    const std::initializer_list<const char*> known = {
        "trust_gain_per_prompt", "adopt_threshold",        "relay_willingness",
        "violate_prob_degraded", "violate_prob_jailbroken", "refusal_prob_aligned"};
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : known)
            if (it.key() == k) { ok = true; break; }
        if (!ok) throw Error(Errc::config_invalid, "unknown key '" + it.key() + "' in params");
    }
    ComplianceParams p;
    if (j.contains("trust_gain_per_prompt")) p.trust_gain_per_prompt = j["trust_gain_per_prompt"].get<double>();
    if (j.contains("adopt_threshold")) p.adopt_threshold = j["adopt_threshold"].get<double>();
    if (j.contains("relay_willingness")) p.relay_willingness = j["relay_willingness"].get<double>();
    if (j.contains("violate_prob_degraded")) p.violate_prob_degraded = j["violate_prob_degraded"].get<double>();
    if (j.contains("violate_prob_jailbroken")) p.violate_prob_jailbroken = j["violate_prob_jailbroken"].get<double>();
    if (j.contains("refusal_prob_aligned")) p.refusal_prob_aligned = j["refusal_prob_aligned"].get<double>();
    p.validate();
    return p;
}

ComplianceParams load_params(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::io_error, "cannot open params file " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return params_from_json_text(buf.str());
}

ComplianceParams susceptible_params() {
    ComplianceParams p;
    p.trust_gain_per_prompt = 1.0;
    p.adopt_threshold = 1.0;
    p.relay_willingness = 1.0;
    p.violate_prob_degraded = 1.0;
    p.violate_prob_jailbroken = 1.0;
    p.refusal_prob_aligned = 0.0;
    return p;
}

ComplianceParams immune_params() {
    ComplianceParams p;
    p.trust_gain_per_prompt = 0.0;
    p.adopt_threshold = 1.0;
    p.relay_willingness = 0.0;
    p.violate_prob_degraded = 0.0;
    p.violate_prob_jailbroken = 0.0;
    p.refusal_prob_aligned = 1.0;
    return p;
}

AgentState make_agent(RobotId robot, const ComplianceParams& params) {
    AgentState s;
    s.robot = robot;
    s.params = params;
    return s;
}

void escalate(AgentState& state, SafetyState target) {
    if (static_cast<int>(target) > static_cast<int>(state.safety_state))
        state.safety_state = target;
}

namespace {

// Trust accumulation with a hard adoption threshold. The crossing test uses
// the un-clamped sum so repeated sub-threshold gains still accumulate; the
// stored score is clamped to [0, 1].
void ingest_payload(AgentState& state) {
    double raised = state.trust_score + state.params.trust_gain_per_prompt;
    if (!state.payload_adopted && raised >= state.params.adopt_threshold) {
        state.payload_adopted = true;
        escalate(state, SafetyState::DEGRADED);
    }
    state.trust_score = std::min(raised, 1.0);
}

double violate_prob(const AgentState& state) {
    switch (state.safety_state) {
        case SafetyState::ALIGNED: return 0.0;
        case SafetyState::DEGRADED: return state.params.violate_prob_degraded;
        case SafetyState::JAILBROKEN: return state.params.violate_prob_jailbroken;
    }
    return 0.0;
}

std::vector<int> feasible_stages(const AgentState& state, const Observation& obs) {
    std::vector<int> out;
    for (int s = 1; s <= obs.config.l_max(); ++s)
        if (feasible(obs.config, s, state.robot, obs.world)) out.push_back(s);
    return out;
}

// Attempt the stage's violating action with the state's violation
// probability. Returns true when the decision now carries it.
bool try_violate(AgentState& state, const Observation& obs, int stage, Rng& rng, Decision& d) {
    if (!state.payload_adopted) return false;
    if (!feasible(obs.config, stage, state.robot, obs.world)) return false;
    if (!rng.bernoulli(violate_prob(state))) return false;
    auto action = violating_action(obs.config, stage, state.robot, obs.world);
    if (!action) return false;
    d.action = action;
    d.exec_flag = true;
    return true;
}

}  // namespace

Decision decide(AgentState& state, const std::vector<Message>& inbox, const Observation& obs,
                Rng& rng) {
    Decision d;

    std::optional<int> directive;
    for (const auto& msg : inbox) {
        if (msg.payload) ingest_payload(state);
        if (msg.act_stage) directive = msg.act_stage;
    }
    d.accept_flag = state.payload_adopted;

    if (directive) {
        if (!try_violate(state, obs, *directive, rng, d))
            d.action = benign_action(obs.config, state.robot, obs.world);
        return d;
    }

    // Autonomous behavior: JAILBROKEN agents volunteer violations, cycling
    // their feasible stages by round; everyone else patrols.
    if (state.safety_state == SafetyState::JAILBROKEN) {
        auto stages = feasible_stages(state, obs);
        if (!stages.empty() && rng.bernoulli(state.params.violate_prob_jailbroken)) {
            int stage = stages[static_cast<std::size_t>(obs.world.round) % stages.size()];
            auto action = violating_action(obs.config, stage, state.robot, obs.world);
            if (action) {
                d.action = action;
                d.exec_flag = true;
                return d;
            }
        }
    }
    d.action = benign_action(obs.config, state.robot, obs.world);
    return d;
}

Decision respond_to_attack(AgentState& state, const Message& prompt, const Observation& obs,
                           Rng& rng) {
    if (state.robot != kEntryRobot)
        throw Error(Errc::not_entry_robot, "attack inputs may only address robot 0");

    Decision d;
    if (prompt.payload) ingest_payload(state);

    if (state.safety_state == SafetyState::ALIGNED &&
        rng.bernoulli(state.params.refusal_prob_aligned)) {
        d.refusal_event = true;
        return d;
    }
    d.accept_flag = true;

    int stage = 0;
    if (prompt.act_stage) {
        stage = *prompt.act_stage;
    } else {
        // Seed prompts carry no stage; a compliant entry robot attempts its
        // lowest feasible stage.
        for (int s = 1; s <= obs.config.l_max(); ++s)
            if (feasible(obs.config, s, state.robot, obs.world)) { stage = s; break; }
    }
    if (stage >= 1) try_violate(state, obs, stage, rng, d);
    return d;
}

bool willing_to_relay(AgentState& state, Rng& rng) {
    if (!state.payload_adopted) return false;
    return rng.bernoulli(state.params.relay_willingness);
}

Decision ScriptedController::step(AgentState& state, const std::vector<Message>& inbox,
                                  const Observation& obs, Rng& rng) {
    return decide(state, inbox, obs, rng);
}

Decision ScriptedController::on_attack(AgentState& state, const Message& prompt,
                                       const Observation& obs, Rng& rng) {
    return respond_to_attack(state, prompt, obs, rng);
}

}  // namespace contagion
