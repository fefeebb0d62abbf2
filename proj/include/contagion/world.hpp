#pragma once

#include <optional>
#include <string>
#include <vector>

#include "contagion/trace.hpp"

namespace contagion {

struct Cell {
    int x = 0;
    int y = 0;
    auto operator<=>(const Cell&) const = default;
};

int chebyshev(Cell a, Cell b);

enum class ZoneKind { assigned, privacy, corridor };

const char* to_string(ZoneKind k);
ZoneKind zone_kind_from(const std::string& name);

struct Zone {
    std::string name;
    ZoneKind kind = ZoneKind::assigned;
    std::vector<Cell> cells;

    bool contains(Cell c) const;
    Cell min_corner() const;
    Cell max_corner() const;

    bool operator==(const Zone&) const = default;
};

// Row-major cell list for an inclusive rectangle; the config loader and the
// builtin builders share this so zone equality is exact.
std::vector<Cell> rect_cells(int x0, int y0, int x1, int y1);

struct Grid {
    int width = 32;
    int height = 32;

    bool contains(Cell c) const { return c.x >= 0 && c.x < width && c.y >= 0 && c.y < height; }
    Cell clamp(Cell c) const;

    bool operator==(const Grid&) const = default;
};

enum class ActionKind { MOVE, MESSAGE, INIT, CAMERA, HANDLECARGO };

const char* to_string(ActionKind k);
ActionKind action_kind_from(const std::string& name);

struct AtomicAction {
    ActionKind kind = ActionKind::INIT;
    Cell move_target;           // MOVE
    RobotId message_target;     // MESSAGE
    std::string message_text;   // MESSAGE
    bool camera_on = false;     // CAMERA
    bool cargo_unsafe = false;  // HANDLECARGO

    bool operator==(const AtomicAction&) const = default;
};

AtomicAction make_move(Cell target);
AtomicAction make_message(RobotId to, std::string text);
AtomicAction make_camera(bool on);
AtomicAction make_handlecargo(bool unsafe);

struct StageSpec {
    int stage_index = 1;
    std::string predicate;  // named rule, dispatched by apply_action
    double weight = 1.0;    // q > 0
    std::string description;

    bool operator==(const StageSpec&) const = default;
};

struct ScenarioConfig {
    std::string scenario_id;
    int n_robots = 2;
    Grid grid;
    std::vector<Zone> zones;
    std::vector<StageSpec> stages;                // L_max in {1, 2}
    std::vector<std::vector<int>> reachability;   // N x L_max, entries 0/1
    std::vector<ActionKind> action_subset;
    std::vector<Cell> start_poses;
    std::vector<int> assigned_zone;               // zone index per robot, -1 = none
    std::optional<RobotId> carrier_robot;         // formation_escort only
    int formation_radius = 0;

    int l_max() const { return static_cast<int>(stages.size()); }
    bool reachable(RobotId robot, int stage) const;
    double stage_weight(int stage) const;
    double reachable_mass(RobotId robot) const;   // Z_i
    bool permits(ActionKind kind) const;
    const Zone* zone_of(RobotId robot) const;     // assigned zone or nullptr
    const Zone* first_zone_of_kind(ZoneKind kind) const;

    void validate() const;

    bool operator==(const ScenarioConfig&) const = default;
};

enum class CargoState { secured, handled_unsafely, n_a };

struct WorldState {
    std::vector<Cell> poses;
    std::vector<bool> camera_on;
    CargoState cargo = CargoState::n_a;
    int round = 0;
};

WorldState reset(const ScenarioConfig& config);

struct ActionOutcome {
    WorldState world;
    std::vector<TraceEvent> events;
};

// Pure transition: applies one atomic action, emits an ACTION event, a
// VIOLATION for every reachable stage whose predicate the action satisfies,
// and a COORD_MESSAGE for MESSAGE actions. Events carry world.round;
// hop/source provenance is stamped by the attack engine before appending.
ActionOutcome apply_action(const WorldState& world, const ScenarioConfig& config, RobotId robot,
                           const AtomicAction& action);

// Reachability mask AND the world currently permits an attempt (a concrete
// violating action for the stage exists right now).
bool feasible(const ScenarioConfig& config, int stage, RobotId robot, const WorldState& world);

// Synthesizes an action realizing the stage violation this tick, or nullopt
// when none exists from the robot's current pose.
std::optional<AtomicAction> violating_action(const ScenarioConfig& config, int stage, RobotId robot,
                                             const WorldState& world);

// Scenario-appropriate benign step (patrol / formation hold), dry-run checked
// so it never emits a VIOLATION. nullopt = hold position.
std::optional<AtomicAction> benign_action(const ScenarioConfig& config, RobotId robot,
                                          const WorldState& world);

ScenarioConfig load_scenario(const std::string& path);
ScenarioConfig scenario_from_json_text(const std::string& text);
ScenarioConfig builtin_scenario(const std::string& scenario_id, int n_robots = 0);
std::vector<std::string> builtin_scenario_ids();

}  // namespace contagion
