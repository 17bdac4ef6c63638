#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fmdp/mission_model.hpp"
#include "fmdp/solver.hpp"
#include "fmdp/util.hpp"

namespace fmdp {

struct Event {
    enum class Kind { set_goal_priority, set_threat, set_fault, set_range };
    Kind kind = Kind::set_threat;
    int goal = 0;   // 0-based; goal events only
    int value = 0;  // priority level, threat level, 1-based fault mode, or range flag

    friend bool operator==(const Event&, const Event&) = default;
};

std::string to_string(const Event& e);

struct ScheduledEvent {
    int epoch = 0;
    Event event;
};

struct Scenario {
    MissionState initial;
    int horizon = 0;
    std::vector<ScheduledEvent> events;
    std::uint64_t seed = 0;
};

struct TrajectoryRecord {
    int epoch = 0;
    MissionState state;  // after this epoch's event, before the decision
    int action = 0;
    double cost = 0.0;
    std::optional<Event> event_applied;

    friend bool operator==(const TrajectoryRecord&, const TrajectoryRecord&) = default;
};

/// Every problem with the scenario (bounds, epochs, initial state).
std::vector<std::string> validate_scenario(const Scenario& sc, const StateLayout& layout);

/// Overrides the digit an event targets.
MissionState apply_event(MissionState s, const Event& e);

struct StepResult {
    MissionState next;
    TrajectoryRecord record;
};

/// One epoch: apply the pending event, act per policy, sample the successor.
StepResult step(const MissionState& state, const Policy& policy, const MissionModel& model, Rng& rng,
                const std::optional<Event>& pending_event, int epoch = 0);

/// horizon + 1 records; deterministic in the scenario seed. Throws
/// ValidationError for an invalid scenario.
std::vector<TrajectoryRecord> run_mission(const Scenario& scenario, const Policy& policy, const MissionModel& model);

using Milestone = std::function<bool(const TrajectoryRecord&)>;

/// True iff the predicates hold at strictly increasing epochs, in order.
bool event_order_check(const std::vector<TrajectoryRecord>& trajectory, const std::vector<Milestone>& predicates);
/// Epochs at which each predicate was matched by the greedy scan (shorter
/// than `predicates` when the check fails).
std::vector<int> milestone_epochs(const std::vector<TrajectoryRecord>& trajectory,
                                  const std::vector<Milestone>& predicates);

struct TrajectoryHeader {
    std::uint64_t seed = 0;
    std::string config_hash;
    std::string policy_hash;
};

/// CSV: '#' header lines (seed, generator, hashes), then
/// epoch,f,r1..rk,g1..gk,l,c,t,m,action,cost,event.
void write_trajectory_csv(std::ostream& os, const std::vector<TrajectoryRecord>& trajectory, int goal_count,
                          const TrajectoryHeader& header);

/// Scripted scenario used for the duty-cycle rollout on duty_cycle_config():
/// priority of goal 1 raised to 2 at epoch 3, threat 2 at epoch 6, threat 0
/// at epoch 8, starting healthy and in range at the base cell.
Scenario duty_cycle_scenario(const ModelConfig& cfg, int horizon = 12, std::uint64_t seed = 0);

/// {"initial": {"fault", "range", "priority", "location", "commitment",
/// "threat", "mode"}, "horizon", "seed", "events": [{"epoch", "kind",
/// "goal" (1-based), "value"}]}. Kinds are the Event::Kind names. Throws
/// ValidationError with document paths; bounds are checked separately by
/// validate_scenario.
Scenario scenario_from_json(const nlohmann::json& doc, const StateLayout& layout);
nlohmann::json scenario_to_json(const Scenario& sc);

}  // namespace fmdp
