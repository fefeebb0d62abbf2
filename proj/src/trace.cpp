#include "contagion/trace.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace contagion {

using ordered_json = nlohmann::ordered_json;

const char* to_string(EventKind k) {
    switch (k) {
        case EventKind::ATTACK_INPUT: return "ATTACK_INPUT";
        case EventKind::COORD_MESSAGE: return "COORD_MESSAGE";
        case EventKind::CONF: return "CONF";
        case EventKind::SUCCESS: return "SUCCESS";
        case EventKind::VIOLATION: return "VIOLATION";
        case EventKind::ACTION: return "ACTION";
        case EventKind::REFUSAL: return "REFUSAL";
    }
    return "ACTION";
}

EventKind event_kind_from(const std::string& name) {
    if (name == "ATTACK_INPUT") return EventKind::ATTACK_INPUT;
    if (name == "COORD_MESSAGE") return EventKind::COORD_MESSAGE;
    if (name == "CONF") return EventKind::CONF;
    if (name == "SUCCESS") return EventKind::SUCCESS;
    if (name == "VIOLATION") return EventKind::VIOLATION;
    if (name == "ACTION") return EventKind::ACTION;
    if (name == "REFUSAL") return EventKind::REFUSAL;
    throw Error(Errc::bad_event, "unknown event kind '" + name + "'");
}

const char* to_string(Origin o) {
    return o == Origin::ENTRY_DIRECT ? "ENTRY_DIRECT" : "MULTI_HOP";
}

Origin origin_from(const std::string& name) {
    if (name == "ENTRY_DIRECT") return Origin::ENTRY_DIRECT;
    if (name == "MULTI_HOP") return Origin::MULTI_HOP;
    throw Error(Errc::bad_event, "unknown source origin '" + name + "'");
}

PropagationSource source_from_hop(int hop) {
    PropagationSource s;
    s.origin = hop >= 1 ? Origin::MULTI_HOP : Origin::ENTRY_DIRECT;
    return s;
}

EpisodeTrace::EpisodeTrace(int n_robots, std::uint64_t seed, std::string scenario_id)
    : n_robots_(n_robots), seed_(seed), scenario_id_(std::move(scenario_id)) {
    if (n_robots_ < 2)
        throw Error(Errc::bad_event, "trace requires at least 2 robots, got " + std::to_string(n_robots_));
}

void EpisodeTrace::validate(const TraceEvent& e) const {
    if (e.round < 1)
        throw Error(Errc::bad_event, "event round must be >= 1");
    if (!events_.empty() && e.round < events_.back().round)
        throw Error(Errc::out_of_order, "round " + std::to_string(e.round) + " after round " +
                                            std::to_string(events_.back().round));

    auto roster = [&](RobotId r) { return r.index >= 0 && r.index < n_robots_; };

    if (e.kind == EventKind::ATTACK_INPUT) {
        if (e.actor != kAttacker)
            throw Error(Errc::bad_event, "ATTACK_INPUT actor must be the attacker sentinel");
        if (!e.target || *e.target != kEntryRobot)
            throw Error(Errc::bad_target, "ATTACK_INPUT may only target robot 0");
    } else {
        if (!roster(e.actor))
            throw Error(Errc::bad_event, "actor index out of roster");
        if (e.target && !roster(*e.target))
            throw Error(Errc::bad_target, "target index out of roster");
    }

    if (e.kind == EventKind::CONF && !e.target)
        throw Error(Errc::bad_event, "CONF requires a target (the newly confirmed robot)");
    if (e.kind == EventKind::SUCCESS || e.kind == EventKind::VIOLATION) {
        if (!e.stage)
            throw Error(Errc::bad_event, std::string(to_string(e.kind)) + " requires a stage");
        if (!e.hop)
            throw Error(Errc::bad_event, std::string(to_string(e.kind)) + " requires a hop");
    }
    if (e.stage && *e.stage < 1)
        throw Error(Errc::bad_event, "stage indices start at 1");
    if (e.hop && *e.hop < 0)
        throw Error(Errc::bad_event, "hop must be >= 0");
    if (e.hop && e.source) {
        const bool direct = e.source->origin == Origin::ENTRY_DIRECT;
        if (direct != (*e.hop == 0))
            throw Error(Errc::bad_event, "source origin inconsistent with hop");
    }
    if (e.source && e.source->relay_robot) {
        if (e.source->origin == Origin::ENTRY_DIRECT)
            throw Error(Errc::bad_event, "ENTRY_DIRECT source cannot name a relayer");
        if (*e.source->relay_robot == kEntryRobot)
            throw Error(Errc::bad_event, "MULTI_HOP relayer must not be robot 0");
        if (!roster(*e.source->relay_robot))
            throw Error(Errc::bad_event, "relay robot index out of roster");
    }
}

void EpisodeTrace::append(const TraceEvent& e) {
    validate(e);
    events_.push_back(e);
    if (e.round > final_round_) final_round_ = e.round;
}

void EpisodeTrace::set_final_round(int round) {
    if (round < last_round())
        throw Error(Errc::out_of_order, "final_round precedes the last logged event");
    final_round_ = round;
}

Footprint count_footprint(const EpisodeTrace& trace) {
    Footprint f;
    for (const auto& e : trace.events()) {
        if (e.kind == EventKind::ATTACK_INPUT) ++f.attack_inputs;
        if (e.kind == EventKind::COORD_MESSAGE) ++f.coord_messages;
    }
    return f;
}

std::optional<Trigger> first_trigger(const EpisodeTrace& trace, RobotId robot, int stage) {
    if (robot == kEntryRobot)
        throw Error(Errc::entry_robot_queried, "first_trigger is defined for followers only");
    for (const auto& e : trace.events()) {
        if (e.kind != EventKind::VIOLATION) continue;
        if (e.actor != robot || !e.stage || *e.stage != stage) continue;
        Trigger t;
        t.round = e.round;
        t.hop = e.hop.value_or(0);
        t.source = e.source ? *e.source : source_from_hop(t.hop);
        return t;
    }
    return std::nullopt;
}

int max_hop(const EpisodeTrace& trace) {
    int best = 0;
    for (const auto& e : trace.events()) {
        if (e.kind != EventKind::VIOLATION && e.kind != EventKind::SUCCESS) continue;
        if (e.hop && *e.hop > best) best = *e.hop;
    }
    return best;
}

namespace {

ordered_json event_to_json(const TraceEvent& e) {
    ordered_json j;
    j["round"] = e.round;
    j["kind"] = to_string(e.kind);
    j["actor"] = e.actor.index;
    if (e.target) j["target"] = e.target->index;
    if (e.stage) j["stage"] = *e.stage;
    if (e.source) {
        ordered_json s;
        s["origin"] = to_string(e.source->origin);
        if (e.source->relay_robot) s["relay_robot"] = e.source->relay_robot->index;
        j["source"] = s;
    }
    if (e.hop) j["hop"] = *e.hop;
    j["payload_text"] = e.payload_text;
    return j;
}

void reject_unknown_keys(const ordered_json& j, std::initializer_list<const char*> known,
                         const char* what) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : known)
            if (it.key() == k) { ok = true; break; }
        if (!ok) throw Error(Errc::bad_event, std::string("unknown ") + what + " key '" + it.key() + "'");
    }
}

TraceEvent event_from_json(const ordered_json& j) {
    if (!j.is_object()) throw Error(Errc::bad_event, "event line must be a JSON object");
    reject_unknown_keys(j, {"round", "kind", "actor", "target", "stage", "source", "hop", "payload_text"},
                        "event");
    TraceEvent e;
    e.round = j.at("round").get<int>();
    e.kind = event_kind_from(j.at("kind").get<std::string>());
    e.actor = RobotId{j.at("actor").get<int>()};
    if (j.contains("target")) e.target = RobotId{j.at("target").get<int>()};
    if (j.contains("stage")) e.stage = j.at("stage").get<int>();
    if (j.contains("source")) {
        const auto& s = j.at("source");
        reject_unknown_keys(s, {"origin", "relay_robot"}, "source");
        PropagationSource src;
        src.origin = origin_from(s.at("origin").get<std::string>());
        if (s.contains("relay_robot")) src.relay_robot = RobotId{s.at("relay_robot").get<int>()};
        e.source = src;
    }
    if (j.contains("hop")) e.hop = j.at("hop").get<int>();
    e.payload_text = j.at("payload_text").get<std::string>();
    return e;
}

}  // namespace

std::string to_jsonl(const EpisodeTrace& trace) {
    ordered_json header;
    header["n_robots"] = trace.n_robots();
    header["seed"] = trace.seed();
    header["scenario_id"] = trace.scenario_id();
    header["final_round"] = trace.final_round();

    std::string out = header.dump();
    out.push_back('\n');
    for (const auto& e : trace.events()) {
        out += event_to_json(e).dump();
        out.push_back('\n');
    }
    return out;
}

EpisodeTrace trace_from_jsonl(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line.empty())
        throw Error(Errc::bad_event, "trace text is missing its header line");

    ordered_json header;
    try {
        header = ordered_json::parse(line);
    } catch (const std::exception& ex) {
        throw Error(Errc::bad_event, std::string("bad trace header: ") + ex.what());
    }
    if (!header.is_object()) throw Error(Errc::bad_event, "trace header must be a JSON object");
    reject_unknown_keys(header, {"n_robots", "seed", "scenario_id", "final_round"}, "header");

    int n_robots = 0;
    std::uint64_t seed = 0;
    std::string scenario_id;
    int final_round = 0;
    try {
        n_robots = header.at("n_robots").get<int>();
        seed = header.at("seed").get<std::uint64_t>();
        scenario_id = header.at("scenario_id").get<std::string>();
        final_round = header.at("final_round").get<int>();
    } catch (const ordered_json::exception& ex) {
        throw Error(Errc::bad_event, std::string("bad trace header: ") + ex.what());
    }
    EpisodeTrace trace(n_robots, seed, std::move(scenario_id));

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        ordered_json j;
        try {
            j = ordered_json::parse(line);
        } catch (const std::exception& ex) {
            throw Error(Errc::bad_event,
                        "bad event at line " + std::to_string(line_no) + ": " + ex.what());
        }
        try {
            trace.append(event_from_json(j));
        } catch (const ordered_json::exception& ex) {
            throw Error(Errc::bad_event,
                        "bad event at line " + std::to_string(line_no) + ": " + ex.what());
        }
    }
    trace.set_final_round(final_round);
    return trace;
}

void write_trace(const EpisodeTrace& trace, const std::string& path) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(Errc::io_error, "cannot open " + tmp.string() + " for writing");
        out << to_jsonl(trace);
        if (!out) throw Error(Errc::io_error, "short write to " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp);
        throw Error(Errc::io_error, "rename to " + target.string() + " failed: " + ec.message());
    }
}

EpisodeTrace read_trace(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::io_error, "cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return trace_from_jsonl(buf.str());
}

}  // namespace contagion
