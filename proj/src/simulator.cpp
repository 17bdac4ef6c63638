#include "fmdp/simulator.hpp"

#include <ostream>

#include "fmdp/errors.hpp"

namespace fmdp {

std::string to_string(const Event& e) {
    switch (e.kind) {
        case Event::Kind::set_goal_priority:
            return "set_goal_priority(" + std::to_string(e.goal + 1) + "," + std::to_string(e.value) + ")";
        case Event::Kind::set_threat:
            return "set_threat(" + std::to_string(e.value) + ")";
        case Event::Kind::set_fault:
            return "set_fault(" + std::to_string(e.value) + ")";
        case Event::Kind::set_range:
            return "set_range(" + std::to_string(e.goal + 1) + "," + std::to_string(e.value) + ")";
    }
    return "?";
}

std::vector<std::string> validate_scenario(const Scenario& sc, const StateLayout& layout) {
    std::vector<std::string> errors;
    for (const auto& e : validate_state(sc.initial, layout)) errors.push_back("initial_state." + e);
    if (sc.horizon < 0) errors.push_back("horizon: must be >= 0");
    for (std::size_t i = 0; i < sc.events.size(); ++i) {
        const auto& ev = sc.events[i];
        const std::string path = "events[" + std::to_string(i) + "]";
        if (ev.epoch < 0 || ev.epoch > sc.horizon) errors.push_back(path + ".epoch: outside [0, horizon]");
        const Event& e = ev.event;
        auto check = [&](int v, int lo, int hi, const char* what) {
            if (v < lo || v > hi) errors.push_back(path + "." + what + ": " + std::to_string(v) + " out of range");
        };
        switch (e.kind) {
            case Event::Kind::set_goal_priority:
                check(e.goal, 0, layout.goal_count() - 1, "goal");
                check(e.value, 0, 2, "value");
                break;
            case Event::Kind::set_range:
                check(e.goal, 0, layout.goal_count() - 1, "goal");
                check(e.value, 0, 1, "value");
                break;
            case Event::Kind::set_threat:
                check(e.value, 0, layout.threat_count() - 1, "value");
                break;
            case Event::Kind::set_fault:
                check(e.value, 1, layout.fault_count(), "value");
                break;
        }
    }
    return errors;
}

MissionState apply_event(MissionState s, const Event& e) {
    switch (e.kind) {
        case Event::Kind::set_goal_priority:
            s.goal_priorities.at(static_cast<std::size_t>(e.goal)) = static_cast<std::uint8_t>(e.value);
            break;
        case Event::Kind::set_range:
            s.range_flags.at(static_cast<std::size_t>(e.goal)) = static_cast<std::uint8_t>(e.value);
            break;
        case Event::Kind::set_threat:
            s.threat = e.value;
            break;
        case Event::Kind::set_fault:
            s.fault = e.value;
            break;
    }
    return s;
}

StepResult step(const MissionState& state, const Policy& policy, const MissionModel& model, Rng& rng,
                const std::optional<Event>& pending_event, int epoch) {
    StepResult out;
    MissionState s = pending_event ? apply_event(state, *pending_event) : state;
    auto errors = validate_state(s, model.layout());
    if (!errors.empty()) throw ValidationError(std::move(errors));
    const std::uint64_t idx = encode_state(s, model.layout()).value;
    if (policy.actions.size() != model.state_count()) throw ContractError("policy does not match the model");
    const int action = policy.actions[idx];

    out.record.epoch = epoch;
    out.record.state = s;
    out.record.action = action;
    out.record.cost = model.cost(s, action);
    out.record.event_applied = pending_event;

    const auto dist = model.transition_distribution(s, action);
    const double u = uniform01(rng);
    double acc = 0.0;
    out.next = dist.back().first;
    for (const auto& [next, p] : dist) {
        acc += p;
        if (u < acc) {
            out.next = next;
            break;
        }
    }
    return out;
}

std::vector<TrajectoryRecord> run_mission(const Scenario& scenario, const Policy& policy, const MissionModel& model) {
    auto errors = validate_scenario(scenario, model.layout());
    if (!errors.empty()) throw ValidationError(std::move(errors));
    Rng rng(scenario.seed);
    std::vector<TrajectoryRecord> out;
    MissionState s = scenario.initial;
    for (int epoch = 0; epoch <= scenario.horizon; ++epoch) {
        std::optional<Event> pending;
        // Several events in one epoch apply in listed order; the record keeps the last.
        for (const auto& ev : scenario.events) {
            if (ev.epoch != epoch) continue;
            if (pending) s = apply_event(s, *pending);
            pending = ev.event;
        }
        StepResult r = step(s, policy, model, rng, pending, epoch);
        out.push_back(r.record);
        s = r.next;
    }
    return out;
}

std::vector<int> milestone_epochs(const std::vector<TrajectoryRecord>& trajectory,
                                  const std::vector<Milestone>& predicates) {
    std::vector<int> hits;
    std::size_t i = 0;
    for (const auto& pred : predicates) {
        while (i < trajectory.size() && !pred(trajectory[i])) ++i;
        if (i == trajectory.size()) break;
        hits.push_back(trajectory[i].epoch);
        ++i;
    }
    return hits;
}

bool event_order_check(const std::vector<TrajectoryRecord>& trajectory, const std::vector<Milestone>& predicates) {
    return milestone_epochs(trajectory, predicates).size() == predicates.size();
}

void write_trajectory_csv(std::ostream& os, const std::vector<TrajectoryRecord>& trajectory, int goal_count,
                          const TrajectoryHeader& header) {
    os << "# seed=" << header.seed << "\n# rng=" << kRngName << "\n# config_hash=" << header.config_hash
       << "\n# policy_hash=" << header.policy_hash << '\n';
    os << "epoch,f";
    for (int j = 1; j <= goal_count; ++j) os << ",r" << j;
    for (int j = 1; j <= goal_count; ++j) os << ",g" << j;
    os << ",l,c,t,m,action,cost,event\n";
    for (const auto& r : trajectory) {
        os << r.epoch << ',' << r.state.fault;
        for (auto v : r.state.range_flags) os << ',' << int(v);
        for (auto v : r.state.goal_priorities) os << ',' << int(v);
        os << ',' << r.state.location << ',' << r.state.commitment << ',' << r.state.threat << ','
           << r.state.nav_mode << ',' << r.action << ',' << r.cost << ',';
        if (r.event_applied) os << '"' << to_string(*r.event_applied) << '"';
        os << '\n';
    }
}

Scenario duty_cycle_scenario(const ModelConfig& cfg, int horizon, std::uint64_t seed) {
    Scenario sc;
    sc.initial = minimal_state(cfg.layout);
    sc.initial.fault = 1;
    sc.initial.range_flags.assign(static_cast<std::size_t>(cfg.layout.goal_count()), 1);
    sc.initial.location = cfg.base_cell;
    sc.horizon = horizon;
    sc.seed = seed;
    sc.events = {{3, {Event::Kind::set_goal_priority, 0, 2}},
                 {6, {Event::Kind::set_threat, 0, 2}},
                 {8, {Event::Kind::set_threat, 0, 0}}};
    return sc;
}

namespace {

const char* kind_name(Event::Kind k) {
    switch (k) {
        case Event::Kind::set_goal_priority:
            return "set_goal_priority";
        case Event::Kind::set_threat:
            return "set_threat";
        case Event::Kind::set_fault:
            return "set_fault";
        case Event::Kind::set_range:
            return "set_range";
    }
    return "?";
}

int json_int(const nlohmann::json& doc, const char* key, const std::string& path, int fallback) {
    if (!doc.contains(key)) return fallback;
    const auto& v = doc.at(key);
    if (!v.is_number_integer()) throw ValidationError(path + "." + key, "expected an integer");
    return v.get<int>();
}

std::vector<std::uint8_t> json_flags(const nlohmann::json& doc, const char* key, const std::string& path,
                                     std::size_t n) {
    std::vector<std::uint8_t> out(n, 0);
    if (!doc.contains(key)) return out;
    const auto& v = doc.at(key);
    const std::string at = path + "." + key;
    if (!v.is_array() || v.size() != n) {
        throw ValidationError(at, "expected an array of " + std::to_string(n) + " integers");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!v[i].is_number_integer() || v[i].get<int>() < 0 || v[i].get<int>() > 255) {
            throw ValidationError(at + "[" + std::to_string(i) + "]", "expected a small non-negative integer");
        }
        out[i] = static_cast<std::uint8_t>(v[i].get<int>());
    }
    return out;
}

}  // namespace

Scenario scenario_from_json(const nlohmann::json& doc, const StateLayout& layout) {
    if (!doc.is_object()) throw ValidationError("$", "expected an object");
    Scenario sc;
    const auto k = static_cast<std::size_t>(layout.goal_count());
    sc.initial = minimal_state(layout);
    if (doc.contains("initial")) {
        const auto& in = doc.at("initial");
        if (!in.is_object()) throw ValidationError("initial", "expected an object");
        sc.initial.fault = json_int(in, "fault", "initial", 1);
        sc.initial.range_flags = json_flags(in, "range", "initial", k);
        sc.initial.goal_priorities = json_flags(in, "priority", "initial", k);
        sc.initial.location = json_int(in, "location", "initial", 0);
        sc.initial.commitment = json_int(in, "commitment", "initial", 0);
        sc.initial.threat = json_int(in, "threat", "initial", 0);
        sc.initial.nav_mode = json_int(in, "mode", "initial", 0);
    }
    sc.horizon = json_int(doc, "horizon", "$", 0);
    if (doc.contains("seed")) {
        if (!doc.at("seed").is_number_unsigned() && !doc.at("seed").is_number_integer()) {
            throw ValidationError("seed", "expected a non-negative integer");
        }
        sc.seed = doc.at("seed").get<std::uint64_t>();
    }
    if (doc.contains("events")) {
        const auto& evs = doc.at("events");
        if (!evs.is_array()) throw ValidationError("events", "expected an array");
        for (std::size_t i = 0; i < evs.size(); ++i) {
            const std::string at = "events[" + std::to_string(i) + "]";
            const auto& e = evs[i];
            if (!e.is_object()) throw ValidationError(at, "expected an object");
            if (!e.contains("kind") || !e.at("kind").is_string()) throw ValidationError(at + ".kind", "missing");
            ScheduledEvent se;
            se.epoch = json_int(e, "epoch", at, 0);
            const std::string kind = e.at("kind").get<std::string>();
            if (kind == "set_goal_priority") {
                se.event.kind = Event::Kind::set_goal_priority;
            } else if (kind == "set_threat") {
                se.event.kind = Event::Kind::set_threat;
            } else if (kind == "set_fault") {
                se.event.kind = Event::Kind::set_fault;
            } else if (kind == "set_range") {
                se.event.kind = Event::Kind::set_range;
            } else {
                throw ValidationError(at + ".kind", "unknown event kind '" + kind + "'");
            }
            se.event.goal = json_int(e, "goal", at, 1) - 1;
            se.event.value = json_int(e, "value", at, 0);
            sc.events.push_back(se);
        }
    }
    return sc;
}

nlohmann::json scenario_to_json(const Scenario& sc) {
    nlohmann::json events = nlohmann::json::array();
    for (const auto& se : sc.events) {
        nlohmann::json e{{"epoch", se.epoch}, {"kind", kind_name(se.event.kind)}, {"value", se.event.value}};
        if (se.event.kind == Event::Kind::set_goal_priority || se.event.kind == Event::Kind::set_range) {
            e["goal"] = se.event.goal + 1;
        }
        events.push_back(e);
    }
    return {{"initial",
             {{"fault", sc.initial.fault},
              {"range", sc.initial.range_flags},
              {"priority", sc.initial.goal_priorities},
              {"location", sc.initial.location},
              {"commitment", sc.initial.commitment},
              {"threat", sc.initial.threat},
              {"mode", sc.initial.nav_mode}}},
            {"horizon", sc.horizon},
            {"seed", sc.seed},
            {"events", events}};
}

}  // namespace fmdp
