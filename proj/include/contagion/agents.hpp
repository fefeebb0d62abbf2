#pragma once

#include <optional>
#include <string>
#include <vector>

#include "contagion/rng.hpp"
#include "contagion/world.hpp"

namespace contagion {

enum class SafetyState { ALIGNED, DEGRADED, JAILBROKEN };

const char* to_string(SafetyState s);

// Stochastic surrogate for per-model jailbreak susceptibility. Calibration
// lives in config files, never in code.
struct ComplianceParams {
    double trust_gain_per_prompt = 0.5;
    double adopt_threshold = 1.0;
    double relay_willingness = 1.0;
    double violate_prob_degraded = 0.7;
    double violate_prob_jailbroken = 0.95;
    double refusal_prob_aligned = 0.7;

    void validate() const;

    bool operator==(const ComplianceParams&) const = default;
};

ComplianceParams load_params(const std::string& path);
ComplianceParams params_from_json_text(const std::string& text);
// Adopts on first contact, always relays, always violates, never refuses.
ComplianceParams susceptible_params();
// Never accumulates trust, always refuses: stays ALIGNED forever.
ComplianceParams immune_params();

struct AgentState {
    RobotId robot;
    SafetyState safety_state = SafetyState::ALIGNED;
    bool payload_adopted = false;
    double trust_score = 0.0;  // clamped to [0, 1]
    ComplianceParams params;
};

AgentState make_agent(RobotId robot, const ComplianceParams& params);

// Never moves a safety state backward.
void escalate(AgentState& state, SafetyState target);

struct Message {
    RobotId from;
    std::string text;
    bool payload = false;          // carries the transferable payload
    std::optional<int> act_stage;  // staged activation directive
};

struct Outbound {
    RobotId target;
    bool payload = false;
    std::string text;
};

struct Decision {
    std::optional<AtomicAction> action;
    std::optional<Outbound> outbound;
    bool accept_flag = false;
    bool exec_flag = false;
    // The engine logs a REFUSAL event when set (entry-robot refusals, remote
    // responses that fail to parse).
    bool refusal_event = false;
};

struct Observation {
    const ScenarioConfig& config;
    const WorldState& world;
};

// One perception-to-action step of the scripted controller: ingests payload
// messages (trust accumulation, adoption, DEGRADED transition), obeys staged
// directives with the state's violation probability, and otherwise behaves
// benignly (JAILBROKEN agents may volunteer violations).
Decision decide(AgentState& state, const std::vector<Message>& inbox, const Observation& obs,
                Rng& rng);

// Entry-robot response to a direct attacker input. Throws NOT_ENTRY_ROBOT
// when invoked on a follower.
Decision respond_to_attack(AgentState& state, const Message& prompt, const Observation& obs,
                           Rng& rng);

// Whether the agent forwards the payload when asked to relay.
bool willing_to_relay(AgentState& state, Rng& rng);

// Pluggable controller seam: scripted (canonical, deterministic-replayable)
// or an adapter delegating to an external endpoint.
class AgentController {
public:
    virtual ~AgentController() = default;
    virtual Decision step(AgentState& state, const std::vector<Message>& inbox,
                          const Observation& obs, Rng& rng) = 0;
    virtual Decision on_attack(AgentState& state, const Message& prompt, const Observation& obs,
                               Rng& rng) = 0;
};

class ScriptedController : public AgentController {
public:
    Decision step(AgentState& state, const std::vector<Message>& inbox, const Observation& obs,
                  Rng& rng) override;
    Decision on_attack(AgentState& state, const Message& prompt, const Observation& obs,
                       Rng& rng) override;
};

}  // namespace contagion
