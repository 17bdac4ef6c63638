#include "fmdp/config_io.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <initializer_list>

#include "fmdp/errors.hpp"
#include "fmdp/util.hpp"

namespace fmdp {

using nlohmann::json;

namespace {

json matrix(const Kernel& k) {
    json rows = json::array();
    for (std::size_t r = 0; r < k.rows; ++r) rows.push_back(std::vector<double>(k.row(r).begin(), k.row(r).end()));
    return rows;
}

Kernel kernel_from(const json& j) {
    if (!j.is_array() || j.empty()) throw std::invalid_argument("expected a non-empty matrix");
    Kernel k(j.size(), j.front().size());
    for (std::size_t r = 0; r < j.size(); ++r) {
        if (!j[r].is_array() || j[r].size() != k.cols) throw std::invalid_argument("ragged matrix");
        for (std::size_t c = 0; c < k.cols; ++c) k.at(r, c) = j[r][c].get<double>();
    }
    return k;
}

const char* metric_name(DistanceMetric m) { return m == DistanceMetric::manhattan ? "manhattan" : "euclidean"; }

}  // namespace

std::vector<std::string> preset_names() { return {"mission3", "mission1", "dutycycle"}; }

ModelConfig duty_cycle_config() {
    ModelConfig cfg = default_config(1);
    cfg.goal_cells = {5};
    cfg.base_cell = 1;
    const auto F = static_cast<std::size_t>(cfg.layout.fault_count());
    cfg.fault_kernels.normal = Kernel::identity(F);
    cfg.fault_kernels.agile = Kernel::identity(F);
    cfg.fault_kernels.recharge = Kernel::identity(F);
    return cfg;
}

ModelConfig preset_config(const std::string& name) {
    if (name == "mission3") return default_config(3);
    if (name == "mission1") return default_config(1);
    if (name == "dutycycle") return duty_cycle_config();
    throw ValidationError("config", "unknown preset '" + name + "'");
}

json config_to_json(const ModelConfig& cfg) {
    json j;
    j["layout"] = {{"fault_count", cfg.layout.fault_count()},
                   {"goal_count", cfg.layout.goal_count()},
                   {"location_count", cfg.layout.location_count()},
                   {"threat_count", cfg.layout.threat_count()},
                   {"mode_count", cfg.layout.mode_count()}};
    j["grid"] = {{"rows", cfg.grid_rows}, {"cols", cfg.grid_cols}};
    j["goal_cells"] = cfg.goal_cells;
    j["base_cell"] = cfg.base_cell;
    j["discount"] = cfg.discount;
    j["goal_weights"] = cfg.goal_weights;
    j["range_penalties"] = cfg.range_penalties;
    json fp = json::array();
    for (const auto& row : cfg.fault_penalties) fp.push_back({row[0], row[1]});
    j["fault_penalties"] = fp;
    j["threat_penalties"] = cfg.threat_penalties;
    j["distance"] = {{"metric", metric_name(cfg.distance_metric)}, {"scale", cfg.distance_scale}};
    j["fault_kernels"] = {{"normal", matrix(cfg.fault_kernels.normal)},
                          {"agile", matrix(cfg.fault_kernels.agile)},
                          {"recharge", matrix(cfg.fault_kernels.recharge)},
                          {"repair", matrix(cfg.fault_kernels.repair)}};
    json pk = json::array();
    for (const auto& k : cfg.priority_kernels) pk.push_back(matrix(k));
    j["priority_kernels"] = pk;
    j["threat_kernel"] = matrix(cfg.threat_kernel);
    j["range_dynamics"] = {
        {"mode", cfg.range_dynamics == RangeDynamics::decay ? "decay" : "static_until_recharge"},
        {"decay_probability", cfg.range_decay_probability}};
    j["idle_behavior"] = cfg.idle_behavior == IdleBehavior::hold ? "hold" : "return_to_base";
    return j;
}

ModelConfig config_from_json(const json& doc) {
    std::vector<std::string> errors;
    if (!doc.is_object()) throw ValidationError("$", "config document must be an object");

    // Field readers record the path of anything that fails to convert.
    auto field = [&](const std::string& path, const json* node, const std::function<void(const json&)>& apply) {
        if (node == nullptr) return;
        try {
            apply(*node);
        } catch (const std::exception& e) {
            errors.push_back(path + ": " + e.what());
        }
    };
    auto child = [](const json& parent, const char* key) -> const json* {
        auto it = parent.find(key);
        return it == parent.end() ? nullptr : &*it;
    };

    // Unknown keys are reported rather than ignored, so typos cannot fall back to defaults silently.
    auto known = [&](const std::string& path, const json& node, std::initializer_list<const char*> keys) {
        if (!node.is_object()) return;
        for (const auto& [key, _] : node.items()) {
            if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return key == k; })) {
                errors.push_back((path.empty() ? key : path + "." + key) + ": unknown field");
            }
        }
    };
    known("", doc,
          {"layout", "grid", "goal_cells", "base_cell", "discount", "goal_weights", "range_penalties", "fault_penalties",
           "threat_penalties", "distance", "fault_kernels", "priority_kernels", "threat_kernel", "range_dynamics",
           "idle_behavior"});
    if (const json* n = child(doc, "layout")) {
        known("layout", *n, {"fault_count", "goal_count", "location_count", "threat_count", "mode_count"});
    }
    if (const json* n = child(doc, "grid")) known("grid", *n, {"rows", "cols"});
    if (const json* n = child(doc, "distance")) known("distance", *n, {"metric", "scale"});
    if (const json* n = child(doc, "fault_kernels")) known("fault_kernels", *n, {"normal", "agile", "recharge", "repair"});
    if (const json* n = child(doc, "range_dynamics")) known("range_dynamics", *n, {"mode", "decay_probability"});

    int f = 8, g = 3, l = 8, t = 3, m = 2;
    if (const json* lay = child(doc, "layout")) {
        if (!lay->is_object()) {
            errors.push_back("layout: expected an object");
        } else {
            field("layout.fault_count", child(*lay, "fault_count"), [&](const json& v) { f = v.get<int>(); });
            field("layout.goal_count", child(*lay, "goal_count"), [&](const json& v) { g = v.get<int>(); });
            field("layout.location_count", child(*lay, "location_count"), [&](const json& v) { l = v.get<int>(); });
            field("layout.threat_count", child(*lay, "threat_count"), [&](const json& v) { t = v.get<int>(); });
            field("layout.mode_count", child(*lay, "mode_count"), [&](const json& v) { m = v.get<int>(); });
        }
    }
    ModelConfig cfg = default_config(g >= 1 ? g : 1);
    try {
        cfg.layout = StateLayout::make(f, g, l, t, m);
    } catch (const ValidationError& e) {
        for (const auto& v : e.violations()) errors.push_back(v);
    }

    if (const json* grid = child(doc, "grid")) {
        field("grid.rows", child(*grid, "rows"), [&](const json& v) { cfg.grid_rows = v.get<int>(); });
        field("grid.cols", child(*grid, "cols"), [&](const json& v) { cfg.grid_cols = v.get<int>(); });
    }
    field("goal_cells", child(doc, "goal_cells"), [&](const json& v) { cfg.goal_cells = v.get<std::vector<int>>(); });
    field("base_cell", child(doc, "base_cell"), [&](const json& v) { cfg.base_cell = v.get<int>(); });
    field("discount", child(doc, "discount"), [&](const json& v) { cfg.discount = v.get<double>(); });
    field("goal_weights", child(doc, "goal_weights"),
          [&](const json& v) { cfg.goal_weights = v.get<std::vector<double>>(); });
    field("range_penalties", child(doc, "range_penalties"),
          [&](const json& v) { cfg.range_penalties = v.get<std::vector<double>>(); });
    field("fault_penalties", child(doc, "fault_penalties"), [&](const json& v) {
        cfg.fault_penalties.clear();
        for (const auto& row : v) {
            const auto r = row.get<std::vector<double>>();
            if (r.size() != 2) throw std::invalid_argument("each row needs [out_of_range, in_range]");
            cfg.fault_penalties.push_back({r[0], r[1]});
        }
    });
    field("threat_penalties", child(doc, "threat_penalties"),
          [&](const json& v) { cfg.threat_penalties = v.get<std::vector<std::vector<double>>>(); });
    if (const json* d = child(doc, "distance")) {
        field("distance.metric", child(*d, "metric"), [&](const json& v) {
            const auto s = v.get<std::string>();
            if (s == "manhattan") {
                cfg.distance_metric = DistanceMetric::manhattan;
            } else if (s == "euclidean") {
                cfg.distance_metric = DistanceMetric::euclidean;
            } else {
                throw std::invalid_argument("unknown metric '" + s + "'");
            }
        });
        field("distance.scale", child(*d, "scale"), [&](const json& v) { cfg.distance_scale = v.get<double>(); });
    }
    if (const json* fk = child(doc, "fault_kernels")) {
        field("fault_kernels.normal", child(*fk, "normal"),
              [&](const json& v) { cfg.fault_kernels.normal = kernel_from(v); });
        field("fault_kernels.agile", child(*fk, "agile"),
              [&](const json& v) { cfg.fault_kernels.agile = kernel_from(v); });
        field("fault_kernels.recharge", child(*fk, "recharge"),
              [&](const json& v) { cfg.fault_kernels.recharge = kernel_from(v); });
        field("fault_kernels.repair", child(*fk, "repair"),
              [&](const json& v) { cfg.fault_kernels.repair = kernel_from(v); });
    }
    field("priority_kernels", child(doc, "priority_kernels"), [&](const json& v) {
        cfg.priority_kernels.clear();
        for (const auto& k : v) cfg.priority_kernels.push_back(kernel_from(k));
    });
    field("threat_kernel", child(doc, "threat_kernel"), [&](const json& v) { cfg.threat_kernel = kernel_from(v); });
    if (const json* rd = child(doc, "range_dynamics")) {
        field("range_dynamics.mode", child(*rd, "mode"), [&](const json& v) {
            const auto s = v.get<std::string>();
            if (s == "static_until_recharge") {
                cfg.range_dynamics = RangeDynamics::static_until_recharge;
            } else if (s == "decay") {
                cfg.range_dynamics = RangeDynamics::decay;
            } else {
                throw std::invalid_argument("unknown mode '" + s + "'");
            }
        });
        field("range_dynamics.decay_probability", child(*rd, "decay_probability"),
              [&](const json& v) { cfg.range_decay_probability = v.get<double>(); });
    }
    field("idle_behavior", child(doc, "idle_behavior"), [&](const json& v) {
        const auto s = v.get<std::string>();
        if (s == "return_to_base") {
            cfg.idle_behavior = IdleBehavior::return_to_base;
        } else if (s == "hold") {
            cfg.idle_behavior = IdleBehavior::hold;
        } else {
            throw std::invalid_argument("unknown behavior '" + s + "'");
        }
    });

    if (errors.empty()) errors = validate_config(cfg);
    if (!errors.empty()) throw ValidationError(std::move(errors));
    return cfg;
}

ModelConfig load_config(const std::string& name_or_path) {
    for (const auto& n : preset_names()) {
        if (n == name_or_path) return preset_config(n);
    }
    std::ifstream in(name_or_path);
    if (!in) throw ValidationError("config", "'" + name_or_path + "' is neither a preset nor a readable file");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError("$", std::string("malformed JSON: ") + e.what());
    }
    return config_from_json(doc);
}

std::uint64_t config_hash(const ModelConfig& cfg) { return fnv1a64(config_to_json(cfg).dump()); }

}  // namespace fmdp
