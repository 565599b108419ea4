#pragma once

// Scenario bundles: the two worked examples shipped as built-ins, plus a JSON
// scenario file format. Vector fields are referenced by model name from a
// fixed library; arbitrary fields are built in code with PartitionedSystem.
//
// Schema (single-system):
//   {
//     "name": "rolling-disc",
//     "kind": "single-system",
//     "system": {"model": "rolling-disc", "n1": 2},
//     "selection": {"s1": [1], "s2": [[1, 2]], "kappa": [1]},
//     "gains": {"epsilon": 1.0, "gamma": 5.0, "y_star": [0, 0], "cond_cap": 1e6},
//     "x0": [2, 1, 0, 3.141592653589793],
//     "sim": {"t_final": 50, "substeps_per_period": 0, "record_stride": 1},
//     "probe_box": {"lo": [...], "hi": [...], "count": 100},
//     "expect": {"rho": 0.1, "settle_by": 20}
//   }
// Formation scenarios replace system/selection/x0 with
//   "leader": {"model": "figure-eight", "x0": [...]},
//   "agents": [{"model": "unicycle", "selection": {...}, "gamma": 10,
//               "offset": [...], "x0": [...]}]
// and "gains" carries only epsilon and cond_cap. "kappa" is optional (defaults
// to 1, 2, 3, ...), as are "cond_cap", "sim.substeps_per_period",
// "sim.record_stride", "probe_box.count" and "expect".

#include <cmath>
#include <fstream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "bracket_steer/error.hpp"
#include "bracket_steer/multiagent.hpp"
#include "bracket_steer/simulation.hpp"
#include "bracket_steer/synthesis.hpp"
#include "bracket_steer/system.hpp"

namespace bracket_steer {

// ---------------------------------------------------------------------------
// Field library
// ---------------------------------------------------------------------------

namespace models {

/// Rolling disc: f1 = (cos x3, sin x3, 0, 1), f2 = (0, 0, 1, 0).
[[nodiscard]] inline PartitionedSystem rolling_disc(int n1 = 2) {
    std::vector<ControlField> fields{
        [](const Vector& x) { return Vector{{std::cos(x[2]), std::sin(x[2]), 0.0, 1.0}}; },
        [](const Vector&) { return Vector{{0.0, 0.0, 1.0, 0.0}}; },
    };
    std::vector<FieldJacobian> jacobians{
        [](const Vector& x) {
            Matrix j = Matrix::Zero(4, 4);
            j(0, 2) = -std::sin(x[2]);
            j(1, 2) = std::cos(x[2]);
            return j;
        },
        [](const Vector&) { return Matrix::Zero(4, 4); },
    };
    return PartitionedSystem(n1, 4 - n1, {}, std::move(fields), std::move(jacobians), {}, "rolling-disc");
}

/// Kinematic unicycle: f1 = (cos x3, sin x3, 0), f2 = (0, 0, 1).
[[nodiscard]] inline PartitionedSystem unicycle(int n1 = 3) {
    std::vector<ControlField> fields{
        [](const Vector& x) { return Vector{{std::cos(x[2]), std::sin(x[2]), 0.0}}; },
        [](const Vector&) { return Vector{{0.0, 0.0, 1.0}}; },
    };
    std::vector<FieldJacobian> jacobians{
        [](const Vector& x) {
            Matrix j = Matrix::Zero(3, 3);
            j(0, 2) = -std::sin(x[2]);
            j(1, 2) = std::cos(x[2]);
            return j;
        },
        [](const Vector&) { return Matrix::Zero(3, 3); },
    };
    return PartitionedSystem(n1, 3 - n1, {}, std::move(fields), std::move(jacobians), {}, "unicycle");
}

/// Nonholonomic integrator: f1 = (1, 0, -x2), f2 = (0, 1, x1); [f1, f2] = (0, 0, 2).
[[nodiscard]] inline PartitionedSystem brockett(int n1 = 3) {
    std::vector<ControlField> fields{
        [](const Vector& x) { return Vector{{1.0, 0.0, -x[1]}}; },
        [](const Vector& x) { return Vector{{0.0, 1.0, x[0]}}; },
    };
    std::vector<FieldJacobian> jacobians{
        [](const Vector&) {
            Matrix j = Matrix::Zero(3, 3);
            j(2, 1) = -1.0;
            return j;
        },
        [](const Vector&) {
            Matrix j = Matrix::Zero(3, 3);
            j(2, 0) = 1.0;
            return j;
        },
    };
    return PartitionedSystem(n1, 3 - n1, {}, std::move(fields), std::move(jacobians), {}, "brockett");
}

/// Figure-eight leader:
///   x1' = 0.2 cos(0.1 t),  x2' = -0.2,
///   x3' = -0.2 sin(0.1 t) (cos^2(0.1 t) + 0.5) / (4 cos^4(0.1 t) - 3 cos^2(0.1 t) + 1).
/// The denominator is bounded below by 7/16.
[[nodiscard]] inline Vector figure_eight(double t, const Vector&) {
    const double c = std::cos(0.1 * t);
    const double s = std::sin(0.1 * t);
    const double c2 = c * c;
    return Vector{{0.2 * c, -0.2, -0.2 * s * (c2 + 0.5) / (4.0 * c2 * c2 - 3.0 * c2 + 1.0)}};
}

[[nodiscard]] inline Vector stationary(double, const Vector& x) { return Vector::Zero(x.size()); }

struct ModelInfo {
    std::string name;
    int state_dim;
    std::string description;
};

[[nodiscard]] inline std::vector<ModelInfo> system_models() {
    return {{"rolling-disc", 4, "unit disc rolling on a plane"},
            {"unicycle", 3, "kinematic unicycle"},
            {"brockett", 3, "nonholonomic integrator"}};
}

[[nodiscard]] inline std::vector<ModelInfo> leader_models() {
    return {{"figure-eight", 3, "leader path with x2' = -0.2 and periodic heading"},
            {"stationary", 0, "leader at rest (any dimension)"}};
}

[[nodiscard]] inline PartitionedSystem make_system(const std::string& name, int n1) {
    for (const auto& info : system_models()) {
        if (info.name == name && (n1 < 1 || n1 > info.state_dim)) {
            throw Error(ErrorClass::InvalidInput, "n1 = " + std::to_string(n1) + " out of range for model " + name);
        }
    }
    if (name == "rolling-disc") return rolling_disc(n1);
    if (name == "unicycle") return unicycle(n1);
    if (name == "brockett") return brockett(n1);
    throw Error(ErrorClass::Lookup, "unknown system model '" + name + "'");
}

[[nodiscard]] inline LeaderField make_leader(const std::string& name) {
    if (name == "figure-eight") return figure_eight;
    if (name == "stationary") return stationary;
    throw Error(ErrorClass::Lookup, "unknown leader model '" + name + "'");
}

}  // namespace models

// ---------------------------------------------------------------------------
// Bundles
// ---------------------------------------------------------------------------

enum class ScenarioKind { SingleSystem, Formation };

struct AgentSpec {
    std::string model;
    BracketSelection selection;
    double gamma = 1.0;
    Vector offset;
    Vector x0;
};

struct Expectations {
    double rho = 0.1;
    std::optional<double> settle_by;  // floor reached no later than this time
};

struct ScenarioBundle {
    std::string name;
    ScenarioKind kind = ScenarioKind::SingleSystem;

    // single-system
    std::string model;
    int n1 = 0;
    BracketSelection selection;
    Vector x0;

    // formation
    std::string leader_model;
    Vector leader_x0;
    std::vector<AgentSpec> agents;

    ControllerGains gains;  // formation: epsilon and cond_cap only
    SimConfig sim;
    Vector probe_lo;
    Vector probe_hi;
    int probe_count = 100;
    Expectations expect;

    [[nodiscard]] PartitionedSystem system() const { return models::make_system(model, n1); }

    [[nodiscard]] std::vector<FollowerAgent> followers() const {
        std::vector<FollowerAgent> out;
        for (const auto& a : agents) {
            const int p = static_cast<int>(a.x0.size());
            out.push_back(FollowerAgent{models::make_system(a.model, p), a.selection, a.gamma, a.offset});
        }
        return out;
    }

    [[nodiscard]] std::vector<Vector> follower_x0s() const {
        std::vector<Vector> out;
        for (const auto& a : agents) out.push_back(a.x0);
        return out;
    }

    [[nodiscard]] LeaderModel leader() const { return LeaderModel{models::make_leader(leader_model), leader_x0}; }
};

namespace detail {
inline bool same_vector(const Vector& a, const Vector& b) {
    return a.size() == b.size() && (a.size() == 0 || a == b);
}
}  // namespace detail

[[nodiscard]] inline bool operator==(const AgentSpec& a, const AgentSpec& b) {
    return a.model == b.model && a.selection == b.selection && a.gamma == b.gamma &&
           detail::same_vector(a.offset, b.offset) && detail::same_vector(a.x0, b.x0);
}

[[nodiscard]] inline bool operator==(const ScenarioBundle& a, const ScenarioBundle& b) {
    return a.name == b.name && a.kind == b.kind && a.model == b.model && a.n1 == b.n1 &&
           a.selection == b.selection && detail::same_vector(a.x0, b.x0) && a.leader_model == b.leader_model &&
           detail::same_vector(a.leader_x0, b.leader_x0) && a.agents == b.agents &&
           a.gains.epsilon == b.gains.epsilon && a.gains.gamma == b.gains.gamma &&
           detail::same_vector(a.gains.y_star, b.gains.y_star) && a.gains.cond_cap == b.gains.cond_cap &&
           a.sim.t_final == b.sim.t_final && a.sim.substeps_per_period == b.sim.substeps_per_period &&
           a.sim.record_stride == b.sim.record_stride && detail::same_vector(a.probe_lo, b.probe_lo) &&
           detail::same_vector(a.probe_hi, b.probe_hi) && a.probe_count == b.probe_count &&
           a.expect.rho == b.expect.rho && a.expect.settle_by == b.expect.settle_by;
}

/// Rank certificates over the bundle's probe box (one per agent for formations).
[[nodiscard]] inline std::vector<RankCertificate> certify(const ScenarioBundle& b) {
    const auto probes = sample_box(b.probe_lo, b.probe_hi, b.probe_count);
    std::vector<RankCertificate> out;
    if (b.kind == ScenarioKind::SingleSystem) {
        out.push_back(validate_selection(b.system(), b.selection, probes, b.gains));
    } else {
        for (const auto& agent : b.followers()) {
            ControllerGains g{b.gains.epsilon, agent.gamma, Vector::Zero(agent.dim()), b.gains.cond_cap};
            out.push_back(validate_selection(agent.system, agent.selection, probes, g));
        }
    }
    return out;
}

/// Invariant checks shared by the built-ins and the file loader. Messages name the field path.
inline void validate_bundle(const ScenarioBundle& b) {
    auto fail = [](const std::string& path, const std::string& what) {
        throw Error(ErrorClass::Schema, "schema violation at " + path + ": " + what);
    };
    auto check = [&](const std::string& path, auto&& fn) {
        try {
            fn();
        } catch (const Error& e) {
            if (e.error_class() == ErrorClass::Lookup) throw;
            fail(path, e.what());
        }
    };
    if (!(b.gains.epsilon > 0.0)) fail("gains.epsilon", "invariant epsilon > 0 violated");
    if (!(b.gains.cond_cap > 1.0)) fail("gains.cond_cap", "invariant cond_cap > 1 violated");
    check("sim", [&] { b.sim.validate(); });
    if (!(b.expect.rho > 0.0)) fail("expect.rho", "invariant rho > 0 violated");
    if (b.probe_count < 1) fail("probe_box.count", "at least one probe required");
    if (b.probe_lo.size() != b.probe_hi.size()) fail("probe_box", "lo and hi differ in dimension");
    for (Eigen::Index i = 0; i < b.probe_lo.size(); ++i) {
        if (!(b.probe_lo[i] <= b.probe_hi[i])) fail("probe_box", "lo must not exceed hi");
    }

    if (b.kind == ScenarioKind::SingleSystem) {
        const PartitionedSystem sys = [&] {
            try {
                return b.system();
            } catch (const Error& e) {
                if (e.error_class() == ErrorClass::Lookup) throw;
                fail("system", e.what());
            }
            throw std::logic_error("unreachable");
        }();
        if (!(b.gains.gamma > 0.0)) fail("gains.gamma", "invariant gamma > 0 violated");
        check("gains", [&] { b.gains.validate(sys.stabilized_dim()); });
        check("selection", [&] { validate_selection_shape(b.selection, sys.stabilized_dim(), sys.control_count()); });
        if (b.x0.size() != sys.state_dim()) fail("x0", "expected " + std::to_string(sys.state_dim()) + " entries");
        if (b.probe_lo.size() != sys.state_dim()) fail("probe_box", "dimension differs from the state");
    } else {
        if (b.agents.empty()) fail("agents", "at least one follower required");
        check("leader.model", [&] { (void)models::make_leader(b.leader_model); });
        const auto p = b.leader_x0.size();
        for (const auto& info : models::leader_models()) {
            if (info.name == b.leader_model && info.state_dim != 0 && info.state_dim != p) {
                fail("leader.x0", "model " + info.name + " has state dimension " + std::to_string(info.state_dim));
            }
        }
        for (std::size_t i = 0; i < b.agents.size(); ++i) {
            const auto& a = b.agents[i];
            const std::string path = "agents[" + std::to_string(i) + "]";
            if (a.x0.size() != p) fail(path + ".x0", "dimension differs from leader.x0");
            if (a.offset.size() != p) fail(path + ".offset", "dimension differs from leader.x0");
            if (!(a.gamma > 0.0)) fail(path + ".gamma", "invariant gamma > 0 violated");
            const PartitionedSystem sys = [&] {
                try {
                    return models::make_system(a.model, static_cast<int>(p));
                } catch (const Error& e) {
                    if (e.error_class() == ErrorClass::Lookup) throw;
                    fail(path + ".model", e.what());
                }
                throw std::logic_error("unreachable");
            }();
            if (sys.state_dim() != p) fail(path + ".model", "model state dimension differs from leader.x0");
            check(path + ".selection",
                  [&] { validate_selection_shape(a.selection, sys.stabilized_dim(), sys.control_count()); });
        }
        if (b.probe_lo.size() != p) fail("probe_box", "dimension differs from the agent state");
    }
}

[[nodiscard]] inline std::vector<std::string> builtin_names() { return {"rolling-disc", "unicycle-leader"}; }

[[nodiscard]] inline ScenarioBundle builtin_scenario(const std::string& name) {
    ScenarioBundle b;
    b.name = name;
    if (name == "rolling-disc") {
        b.kind = ScenarioKind::SingleSystem;
        b.model = "rolling-disc";
        b.n1 = 2;
        b.selection = BracketSelection{{1}, {{1, 2}}, {1}};
        b.gains = ControllerGains{1.0, 5.0, Vector::Zero(2), kDefaultConditionCap};
        b.x0 = Vector{{2.0, 1.0, 0.0, std::numbers::pi}};
        b.sim = SimConfig{50.0, 0, 1};
        b.probe_lo = Vector::Constant(4, -3.0);
        b.probe_hi = Vector::Constant(4, 3.0);
        b.expect = Expectations{0.1, 20.0};
    } else if (name == "unicycle-leader") {
        b.kind = ScenarioKind::Formation;
        b.leader_model = "figure-eight";
        b.leader_x0 = Vector{{0.0, 0.0, std::numbers::pi / 4.0}};
        b.agents.push_back(AgentSpec{"unicycle", BracketSelection{{1, 2}, {{1, 2}}, {1}}, 10.0,
                                     Vector{{0.1, 0.1, 0.0}}, Vector{{1.0, 0.5, 0.0}}});
        b.gains = ControllerGains{0.1, 10.0, Vector(), kDefaultConditionCap};
        b.sim = SimConfig{60.0, 0, 1};
        b.probe_lo = Vector::Constant(3, -3.0);
        b.probe_hi = Vector::Constant(3, 3.0);
        b.expect = Expectations{0.3, 30.0};
    } else {
        throw Error(ErrorClass::Lookup, "unknown built-in scenario '" + name + "'");
    }
    return b;
}

// ---------------------------------------------------------------------------
// JSON format
// ---------------------------------------------------------------------------

namespace detail {

using nlohmann::json;

inline json vector_json(const Vector& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

inline json selection_json(const BracketSelection& s) {
    json pairs = json::array();
    for (const auto& p : s.s2) pairs.push_back(json::array({p.first, p.second}));
    return json{{"s1", s.s1}, {"s2", pairs}, {"kappa", s.kappa}};
}

[[noreturn]] inline void schema_fail(const std::string& path, const std::string& what) {
    throw Error(ErrorClass::Schema, "schema violation at " + path + ": " + what);
}

inline const json& field(const json& obj, const std::string& key, const std::string& path) {
    if (!obj.is_object()) schema_fail(path, "expected an object");
    const auto it = obj.find(key);
    if (it == obj.end()) schema_fail(path.empty() ? key : path + "." + key, "missing required field");
    return *it;
}

inline std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
}

inline double number(const json& j, const std::string& path) {
    if (!j.is_number()) schema_fail(path, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) schema_fail(path, "expected a finite number");
    return v;
}

inline int integer(const json& j, const std::string& path) {
    if (!j.is_number_integer()) schema_fail(path, "expected an integer");
    return j.get<int>();
}

inline std::string string(const json& j, const std::string& path) {
    if (!j.is_string()) schema_fail(path, "expected a string");
    return j.get<std::string>();
}

inline Vector vector(const json& j, const std::string& path) {
    if (!j.is_array()) schema_fail(path, "expected an array of numbers");
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = number(j[i], path + "[" + std::to_string(i) + "]");
    return v;
}

inline std::vector<int> int_list(const json& j, const std::string& path) {
    if (!j.is_array()) schema_fail(path, "expected an array of integers");
    std::vector<int> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(integer(j[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

inline BracketSelection selection(const json& j, const std::string& path) {
    BracketSelection s;
    s.s1 = int_list(field(j, "s1", path), join(path, "s1"));
    const json& pairs = field(j, "s2", path);
    if (!pairs.is_array()) schema_fail(join(path, "s2"), "expected an array of index pairs");
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const std::string p = join(path, "s2") + "[" + std::to_string(i) + "]";
        const auto ids = int_list(pairs[i], p);
        if (ids.size() != 2) schema_fail(p, "expected a pair [i1, i2]");
        s.s2.push_back({ids[0], ids[1]});
    }
    if (j.contains("kappa")) {
        s.kappa = int_list(j["kappa"], join(path, "kappa"));
    } else {
        s = BracketSelection::with_default_kappa(s.s1, s.s2);
    }
    return s;
}

}  // namespace detail

[[nodiscard]] inline nlohmann::json scenario_to_json(const ScenarioBundle& b) {
    using detail::json;
    using detail::vector_json;
    json j;
    j["name"] = b.name;
    j["kind"] = b.kind == ScenarioKind::SingleSystem ? "single-system" : "formation";
    if (b.kind == ScenarioKind::SingleSystem) {
        j["system"] = json{{"model", b.model}, {"n1", b.n1}};
        j["selection"] = detail::selection_json(b.selection);
        j["gains"] = json{{"epsilon", b.gains.epsilon},
                          {"gamma", b.gains.gamma},
                          {"y_star", vector_json(b.gains.y_star)},
                          {"cond_cap", b.gains.cond_cap}};
        j["x0"] = vector_json(b.x0);
    } else {
        j["gains"] = json{{"epsilon", b.gains.epsilon}, {"cond_cap", b.gains.cond_cap}};
        j["leader"] = json{{"model", b.leader_model}, {"x0", vector_json(b.leader_x0)}};
        json agents = json::array();
        for (const auto& a : b.agents) {
            agents.push_back(json{{"model", a.model},
                                  {"selection", detail::selection_json(a.selection)},
                                  {"gamma", a.gamma},
                                  {"offset", vector_json(a.offset)},
                                  {"x0", vector_json(a.x0)}});
        }
        j["agents"] = agents;
    }
    j["sim"] = json{{"t_final", b.sim.t_final},
                    {"substeps_per_period", b.sim.substeps_per_period},
                    {"record_stride", b.sim.record_stride}};
    j["probe_box"] = json{{"lo", vector_json(b.probe_lo)}, {"hi", vector_json(b.probe_hi)}, {"count", b.probe_count}};
    json expect{{"rho", b.expect.rho}};
    if (b.expect.settle_by) expect["settle_by"] = *b.expect.settle_by;
    j["expect"] = expect;
    return j;
}

[[nodiscard]] inline std::string serialize_scenario(const ScenarioBundle& b) {
    return scenario_to_json(b).dump(2) + "\n";
}

[[nodiscard]] inline ScenarioBundle scenario_from_json(const nlohmann::json& j) {
    using namespace detail;
    if (!j.is_object()) schema_fail("<root>", "expected an object");
    ScenarioBundle b;
    b.name = j.contains("name") ? string(j["name"], "name") : std::string("unnamed");
    const std::string kind = string(field(j, "kind", ""), "kind");
    if (kind == "single-system") {
        b.kind = ScenarioKind::SingleSystem;
    } else if (kind == "formation") {
        b.kind = ScenarioKind::Formation;
    } else {
        schema_fail("kind", "expected \"single-system\" or \"formation\"");
    }

    const json& gains = field(j, "gains", "");
    b.gains.epsilon = number(field(gains, "epsilon", "gains"), "gains.epsilon");
    if (gains.contains("cond_cap")) b.gains.cond_cap = number(gains["cond_cap"], "gains.cond_cap");

    if (b.kind == ScenarioKind::SingleSystem) {
        const json& sys = field(j, "system", "");
        b.model = string(field(sys, "model", "system"), "system.model");
        b.n1 = integer(field(sys, "n1", "system"), "system.n1");
        b.selection = selection(field(j, "selection", ""), "selection");
        b.gains.gamma = number(field(gains, "gamma", "gains"), "gains.gamma");
        b.gains.y_star = gains.contains("y_star") ? vector(gains["y_star"], "gains.y_star")
                                                  : Vector::Zero(std::max(b.n1, 0));
        b.x0 = vector(field(j, "x0", ""), "x0");
    } else {
        const json& leader = field(j, "leader", "");
        b.leader_model = string(field(leader, "model", "leader"), "leader.model");
        b.leader_x0 = vector(field(leader, "x0", "leader"), "leader.x0");
        const json& agents = field(j, "agents", "");
        if (!agents.is_array()) schema_fail("agents", "expected an array");
        for (std::size_t i = 0; i < agents.size(); ++i) {
            const std::string path = "agents[" + std::to_string(i) + "]";
            const json& a = agents[i];
            AgentSpec spec;
            spec.model = string(field(a, "model", path), path + ".model");
            spec.selection = selection(field(a, "selection", path), path + ".selection");
            spec.gamma = number(field(a, "gamma", path), path + ".gamma");
            spec.offset = vector(field(a, "offset", path), path + ".offset");
            spec.x0 = vector(field(a, "x0", path), path + ".x0");
            b.agents.push_back(std::move(spec));
        }
        b.gains.gamma = b.agents.empty() ? 1.0 : b.agents.front().gamma;
    }

    const json& sim = field(j, "sim", "");
    b.sim.t_final = number(field(sim, "t_final", "sim"), "sim.t_final");
    if (sim.contains("substeps_per_period")) {
        b.sim.substeps_per_period = integer(sim["substeps_per_period"], "sim.substeps_per_period");
    }
    if (sim.contains("record_stride")) b.sim.record_stride = integer(sim["record_stride"], "sim.record_stride");

    const json& box = field(j, "probe_box", "");
    b.probe_lo = vector(field(box, "lo", "probe_box"), "probe_box.lo");
    b.probe_hi = vector(field(box, "hi", "probe_box"), "probe_box.hi");
    if (box.contains("count")) b.probe_count = integer(box["count"], "probe_box.count");

    if (j.contains("expect")) {
        const json& e = j["expect"];
        b.expect.rho = number(field(e, "rho", "expect"), "expect.rho");
        b.expect.settle_by.reset();
        if (e.contains("settle_by")) b.expect.settle_by = number(e["settle_by"], "expect.settle_by");
    }

    validate_bundle(b);
    return b;
}

/// Parses scenario text; parse errors report line and column.
[[nodiscard]] inline ScenarioBundle parse_scenario(const std::string& text, const std::string& origin = "<string>") {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw Error(ErrorClass::Parse, origin + ":" + std::to_string(line) + ":" + std::to_string(col) +
                                           ": parse error: " + e.what());
    }
    return scenario_from_json(j);
}

[[nodiscard]] inline ScenarioBundle load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorClass::Io, "cannot open scenario file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str(), path);
}

}  // namespace bracket_steer
