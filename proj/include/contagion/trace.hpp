#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "contagion/error.hpp"

namespace contagion {

struct RobotId {
    int index = 0;
    auto operator<=>(const RobotId&) const = default;
};

inline constexpr RobotId kEntryRobot{0};
// External attacker sentinel. Never part of the roster; only valid as the
// actor of ATTACK_INPUT events.
inline constexpr RobotId kAttacker{-1};

enum class EventKind {
    ATTACK_INPUT,
    COORD_MESSAGE,
    CONF,
    SUCCESS,
    VIOLATION,
    ACTION,
    REFUSAL,
};

const char* to_string(EventKind k);
EventKind event_kind_from(const std::string& name);

enum class Origin { ENTRY_DIRECT, MULTI_HOP };

const char* to_string(Origin o);
Origin origin_from(const std::string& name);

struct PropagationSource {
    Origin origin = Origin::ENTRY_DIRECT;
    // Immediate relayer for multi-hop events. Omitted when the relayer is the
    // entry robot itself, so MULTI_HOP never names robot 0.
    std::optional<RobotId> relay_robot;

    bool operator==(const PropagationSource&) const = default;
};

// Origin implied by a hop count alone (relayer unknown).
PropagationSource source_from_hop(int hop);

struct TraceEvent {
    int round = 1;
    EventKind kind = EventKind::ACTION;
    RobotId actor;
    std::optional<RobotId> target;
    std::optional<int> stage;
    std::optional<PropagationSource> source;
    std::optional<int> hop;
    std::string payload_text;

    bool operator==(const TraceEvent&) const = default;
};

// Append-only episode log. Events are validated on append and never mutated
// afterwards; all metrics read traces through the const interface.
class EpisodeTrace {
public:
    EpisodeTrace(int n_robots, std::uint64_t seed, std::string scenario_id);

    void append(const TraceEvent& event);

    const std::vector<TraceEvent>& events() const { return events_; }
    std::size_t size() const { return events_.size(); }
    bool empty() const { return events_.empty(); }

    int n_robots() const { return n_robots_; }
    std::uint64_t seed() const { return seed_; }
    const std::string& scenario_id() const { return scenario_id_; }

    int final_round() const { return final_round_; }
    void set_final_round(int round);

    int last_round() const { return events_.empty() ? 0 : events_.back().round; }

private:
    void validate(const TraceEvent& event) const;

    std::vector<TraceEvent> events_;
    int n_robots_ = 2;
    std::uint64_t seed_ = 0;
    std::string scenario_id_;
    int final_round_ = 0;
};

struct Footprint {
    long attack_inputs = 0;   // A
    long coord_messages = 0;  // M
};

Footprint count_footprint(const EpisodeTrace& trace);

struct Trigger {
    int round = 0;
    PropagationSource source;
    int hop = 0;
};

// Earliest VIOLATION by `robot` for `stage`, or nullopt. The entry robot is
// scored by obedience, not infectiousness, so querying it is an error.
std::optional<Trigger> first_trigger(const EpisodeTrace& trace, RobotId robot, int stage);

// Max hop over VIOLATION and SUCCESS events; 0 when none exist.
int max_hop(const EpisodeTrace& trace);

// JSON Lines persistence. First line is the header (n_robots, seed,
// scenario_id, final_round); each following line is one event with a fixed
// key order, so files are byte-stable for a fixed seed.
std::string to_jsonl(const EpisodeTrace& trace);
EpisodeTrace trace_from_jsonl(const std::string& text);

// Atomic write: temp file in the target directory, then rename.
void write_trace(const EpisodeTrace& trace, const std::string& path);
EpisodeTrace read_trace(const std::string& path);

}  // namespace contagion
