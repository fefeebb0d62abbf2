#pragma once

#include <memory>
#include <string>
#include <vector>

#include "contagion/agents.hpp"

namespace contagion {

struct EndpointDescriptor {
    std::string base_url;  // e.g. http://127.0.0.1:8080
    std::string model;
    std::string api_key_env = "CONTAGION_API_KEY";  // auth token read from env, never a flag
    int timeout_ms = 30000;
};

// Chat-completion seam. The HTTP client and the in-process canned fake are
// interchangeable; the engine only sees assistant text.
class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    // Returns assistant text; throws ENDPOINT_UNREACHABLE on transport failure.
    virtual std::string complete(const std::string& system_prompt, const std::string& user_prompt) = 0;
};

class HttpChatBackend : public ChatBackend {
public:
    explicit HttpChatBackend(EndpointDescriptor endpoint);
    std::string complete(const std::string& system_prompt, const std::string& user_prompt) override;

private:
    EndpointDescriptor endpoint_;
};

// Replays a recorded transcript in order; returns empty text when exhausted.
class CannedChatBackend : public ChatBackend {
public:
    explicit CannedChatBackend(std::vector<std::string> replies);
    std::string complete(const std::string& system_prompt, const std::string& user_prompt) override;

    std::size_t consumed() const { return next_; }

private:
    std::vector<std::string> replies_;
    std::size_t next_ = 0;
};

// Reply grammar, one line:
//   MOVE <x> <y> | MESSAGE <robot> <text...> | CAMERA ON|OFF |
//   HANDLECARGO SECURE|UNSAFE | REFUSE | NOOP
// Throws PARSE_FAILURE on anything else.
Decision parse_decision(const std::string& text);

// Serializes the observation + inbox for the endpoint and maps the reply onto
// the atomic-action schema. Unparsable replies become a no-op decision that
// carries a REFUSAL marker (logged, non-fatal).
Decision remote_decide(ChatBackend& backend, AgentState& state, const std::vector<Message>& inbox,
                       const Observation& obs);

std::string build_system_prompt(const ScenarioConfig& config, RobotId robot);
std::string build_user_prompt(const AgentState& state, const std::vector<Message>& inbox,
                              const Observation& obs);

class RemoteController : public AgentController {
public:
    explicit RemoteController(std::shared_ptr<ChatBackend> backend);

    Decision step(AgentState& state, const std::vector<Message>& inbox, const Observation& obs,
                  Rng& rng) override;
    Decision on_attack(AgentState& state, const Message& prompt, const Observation& obs,
                       Rng& rng) override;

private:
    std::shared_ptr<ChatBackend> backend_;
};

}  // namespace contagion
