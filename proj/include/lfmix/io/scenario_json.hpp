#ifndef LFMIX_IO_SCENARIO_JSON_HPP
#define LFMIX_IO_SCENARIO_JSON_HPP

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "lfmix/scenario.hpp"

// Scenario file format (JSON):
//
// {
//   "dimension": 1,
//   "epsilon": 1.0,
//   "groups": [
//     {"name": "F", "kind": "follower", "members": 1, "subsystem": "L"},
//     {"name": "L", "kind": "leader", "target": [0.0], "members": [1]}
//   ],
//   "initial_opinions": {"explicit": [[0.3], [0.1]]}
//     or {"random": {"distribution": "uniform_box", "low": 0, "high": 1, "seed": 7}},
//   "schedules": [
//     {"group": "L", "kind": "constant", "parameters": {"value": 0.5}},
//     {"group": "F", "leader_group": "L", "kind": "table", "parameters": {"values": [0.5, 0.2]}},
//     {"agent": 3, "kind": "geometric_decay", "parameters": {"value": 1, "rate": 0.5}},
//     {"group": "F", "leader_group": "L", "kind": "seeded_random",
//      "parameters": {"seed": 1, "low": 0.1, "high": 0.4}}
//   ],
//   "engine": {"neighbor_strategy": "auto", "horizon": 60, "stop": {"tol": 1e-12, "window": 1},
//              "record_every": 1, "grid_dim_cap": 6, "threads": 1}
// }
//
// Unspecified leader degrees default to alpha = 1 and follower degrees to beta = 0.

namespace lfmix::io {

using nlohmann::json;

struct ParseResult {
    std::optional<RawConfig> config;
    std::vector<ValidationError> errors;
};

namespace detail {

class Reader {
public:
    explicit Reader(std::vector<ValidationError>& errors) : errors_(errors) {}

    void error(const std::string& where, const std::string& what) {
        errors_.push_back({ErrorCode::malformed, where + ": " + what});
    }

    const json* field(const json& obj, const char* key, const std::string& where, bool required) {
        if (!obj.is_object()) {
            error(where, "expected an object");
            return nullptr;
        }
        auto it = obj.find(key);
        if (it == obj.end()) {
            if (required) error(where, std::string("missing key '") + key + "'");
            return nullptr;
        }
        return &*it;
    }

    std::optional<double> number(const json& obj, const char* key, const std::string& where, bool required = true) {
        const json* v = field(obj, key, where, required);
        if (!v) return std::nullopt;
        if (!v->is_number()) {
            error(where + "." + key, "expected a number");
            return std::nullopt;
        }
        return v->get<double>();
    }

    std::optional<std::int64_t> integer(const json& obj, const char* key, const std::string& where,
                                        bool required = true) {
        const json* v = field(obj, key, where, required);
        if (!v) return std::nullopt;
        if (!v->is_number_integer()) {
            error(where + "." + key, "expected an integer");
            return std::nullopt;
        }
        if (v->is_number_unsigned() && v->get<std::uint64_t>() > static_cast<std::uint64_t>(INT64_MAX)) {
            error(where + "." + key, "integer out of range");
            return std::nullopt;
        }
        return v->get<std::int64_t>();
    }

    std::optional<std::size_t> count(const json& obj, const char* key, const std::string& where,
                                     bool required = true) {
        auto v = integer(obj, key, where, required);
        if (!v) return std::nullopt;
        if (*v < 0) {
            error(where + "." + key, "must be >= 0");
            return std::nullopt;
        }
        return static_cast<std::size_t>(*v);
    }

    std::optional<std::uint64_t> seed(const json& obj, const char* key, const std::string& where) {
        const json* v = field(obj, key, where, false);
        if (!v) return std::uint64_t{0};
        if (v->is_number_unsigned()) return v->get<std::uint64_t>();
        if (v->is_number_integer() && v->get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v->get<std::int64_t>());
        error(where + "." + key, "expected a nonnegative integer seed");
        return std::nullopt;
    }

    std::optional<std::string> string(const json& obj, const char* key, const std::string& where,
                                      bool required = true) {
        const json* v = field(obj, key, where, required);
        if (!v) return std::nullopt;
        if (!v->is_string()) {
            error(where + "." + key, "expected a string");
            return std::nullopt;
        }
        return v->get<std::string>();
    }

    std::optional<std::vector<double>> vector(const json& v, const std::string& where) {
        if (!v.is_array()) {
            error(where, "expected an array of numbers");
            return std::nullopt;
        }
        std::vector<double> out;
        out.reserve(v.size());
        for (const auto& e : v) {
            if (!e.is_number()) {
                error(where, "expected an array of numbers");
                return std::nullopt;
            }
            out.push_back(e.get<double>());
        }
        return out;
    }

private:
    std::vector<ValidationError>& errors_;
};

inline std::optional<DegreeSpec> read_spec(Reader& rd, const json& entry, const std::string& where) {
    auto kind = rd.string(entry, "kind", where);
    if (!kind) return std::nullopt;
    static const json kEmpty = json::object();
    const json* params = rd.field(entry, "parameters", where, false);
    if (!params) params = &kEmpty;
    const std::string pw = where + ".parameters";
    if (*kind == "constant") {
        auto v = rd.number(*params, "value", pw);
        if (!v) return std::nullopt;
        return ConstantDegree{*v};
    }
    if (*kind == "table") {
        const json* vals = rd.field(*params, "values", pw, true);
        if (!vals) return std::nullopt;
        auto v = rd.vector(*vals, pw + ".values");
        if (!v) return std::nullopt;
        return TableDegree{std::move(*v)};
    }
    if (*kind == "geometric_decay") {
        auto v = rd.number(*params, "value", pw);
        auto r = rd.number(*params, "rate", pw);
        if (!v || !r) return std::nullopt;
        return GeometricDecayDegree{*v, *r};
    }
    if (*kind == "seeded_random") {
        auto s = rd.seed(*params, "seed", pw);
        auto lo = rd.number(*params, "low", pw);
        auto hi = rd.number(*params, "high", pw);
        if (!s || !lo || !hi) return std::nullopt;
        return SeededRandomDegree{*s, *lo, *hi};
    }
    rd.error(where + ".kind", "unknown schedule kind '" + *kind + "'");
    return std::nullopt;
}

inline std::optional<NeighborStrategy> strategy_from(const std::string& s) {
    if (s == "naive") return NeighborStrategy::naive;
    if (s == "grid") return NeighborStrategy::grid;
    if (s == "auto") return NeighborStrategy::automatic;
    return std::nullopt;
}

}  // namespace detail

inline const char* to_string(NeighborStrategy s) {
    switch (s) {
        case NeighborStrategy::naive: return "naive";
        case NeighborStrategy::grid: return "grid";
        case NeighborStrategy::automatic: return "auto";
    }
    return "auto";
}

/// Reads the document into a RawConfig. Structural problems become errors;
/// semantic checks are left to build_scenario.
inline ParseResult parse_scenario_json(const json& doc) {
    ParseResult result;
    detail::Reader rd(result.errors);
    if (!doc.is_object()) {
        rd.error("$", "scenario must be a JSON object");
        return result;
    }
    RawConfig cfg;
    if (auto v = rd.integer(doc, "dimension", "$")) cfg.dimension = *v;
    if (auto v = rd.number(doc, "epsilon", "$")) cfg.epsilon = *v;

    if (const json* groups = rd.field(doc, "groups", "$", true)) {
        if (!groups->is_array()) rd.error("$.groups", "expected an array");
        else {
            for (std::size_t gi = 0; gi < groups->size(); ++gi) {
                const json& g = (*groups)[gi];
                const std::string where = "$.groups[" + std::to_string(gi) + "]";
                RawGroup raw;
                if (auto name = rd.string(g, "name", where)) raw.name = *name;
                if (auto kind = rd.string(g, "kind", where)) {
                    if (*kind == "leader") raw.kind = GroupKind::leader;
                    else if (*kind == "follower") raw.kind = GroupKind::follower;
                    else rd.error(where + ".kind", "expected \"follower\" or \"leader\"");
                }
                if (const json* target = rd.field(g, "target", where, raw.kind == GroupKind::leader)) {
                    if (auto t = rd.vector(*target, where + ".target")) raw.target = std::move(*t);
                }
                if (const json* members = rd.field(g, "members", where, true)) {
                    if (members->is_number_integer()) {
                        if (auto c = rd.count(g, "members", where)) raw.count = *c;
                    } else if (members->is_array()) {
                        for (const auto& id : *members) {
                            if (!id.is_number_integer()) {
                                rd.error(where + ".members", "explicit members must be integer ids");
                                break;
                            }
                            raw.ids.push_back(id.get<std::int64_t>());
                        }
                    } else {
                        rd.error(where + ".members", "expected a count or a list of ids");
                    }
                }
                if (auto sub = rd.string(g, "subsystem", where, false)) raw.subsystem = *sub;
                cfg.groups.push_back(std::move(raw));
            }
        }
    }

    if (const json* init = rd.field(doc, "initial_opinions", "$", true)) {
        if (const json* ex = rd.field(*init, "explicit", "$.initial_opinions", false)) {
            std::vector<std::vector<double>> rows;
            if (!ex->is_array()) rd.error("$.initial_opinions.explicit", "expected a matrix");
            else {
                for (std::size_t i = 0; i < ex->size(); ++i) {
                    auto row = rd.vector((*ex)[i], "$.initial_opinions.explicit[" + std::to_string(i) + "]");
                    if (!row) break;
                    rows.push_back(std::move(*row));
                }
            }
            cfg.initial = std::move(rows);
        } else if (const json* rnd = rd.field(*init, "random", "$.initial_opinions", false)) {
            const std::string where = "$.initial_opinions.random";
            RandomBoxInit box;
            if (auto dist = rd.string(*rnd, "distribution", where, false); dist && *dist != "uniform_box") {
                rd.error(where + ".distribution", "only \"uniform_box\" is supported");
            }
            if (auto v = rd.number(*rnd, "low", where)) box.low = *v;
            if (auto v = rd.number(*rnd, "high", where)) box.high = *v;
            if (auto v = rd.seed(*rnd, "seed", where)) box.seed = *v;
            cfg.initial = box;
        } else {
            rd.error("$.initial_opinions", "expected \"explicit\" or \"random\"");
        }
    }

    if (const json* sch = rd.field(doc, "schedules", "$", false)) {
        if (!sch->is_array()) rd.error("$.schedules", "expected an array");
        else {
            for (std::size_t si = 0; si < sch->size(); ++si) {
                const json& e = (*sch)[si];
                const std::string where = "$.schedules[" + std::to_string(si) + "]";
                RawScheduleEntry entry;
                if (auto g = rd.string(e, "group", where, false)) entry.group = *g;
                if (auto a = rd.integer(e, "agent", where, false)) entry.agent = *a;
                if (auto lg = rd.string(e, "leader_group", where, false)) entry.leader_group = *lg;
                if (auto spec = detail::read_spec(rd, e, where)) {
                    entry.spec = std::move(*spec);
                    cfg.schedules.push_back(std::move(entry));
                }
            }
        }
    }

    if (const json* eng = rd.field(doc, "engine", "$", false)) {
        const std::string where = "$.engine";
        if (auto s = rd.string(*eng, "neighbor_strategy", where, false)) {
            if (auto st = detail::strategy_from(*s)) cfg.engine.neighbor_strategy = *st;
            else rd.error(where + ".neighbor_strategy", "expected naive, grid or auto");
        }
        if (auto v = rd.count(*eng, "horizon", where, false)) cfg.engine.horizon = *v;
        if (auto v = rd.count(*eng, "record_every", where, false)) cfg.engine.record_every = *v;
        if (auto v = rd.count(*eng, "grid_dim_cap", where, false)) cfg.engine.grid_dim_cap = *v;
        if (auto v = rd.count(*eng, "threads", where, false)) cfg.engine.threads = *v;
        if (const json* stop = rd.field(*eng, "stop", where, false)) {
            if (auto v = rd.number(*stop, "tol", where + ".stop", false)) cfg.engine.stop.tol = *v;
            if (auto v = rd.count(*stop, "window", where + ".stop", false)) cfg.engine.stop.window = *v;
        }
    }

    if (result.errors.empty()) result.config = std::move(cfg);
    return result;
}

inline ParseResult parse_scenario_text(const std::string& text) {
    json doc = json::parse(text, nullptr, false);
    if (doc.is_discarded()) {
        ParseResult r;
        r.errors.push_back({ErrorCode::malformed, "scenario is not valid JSON"});
        return r;
    }
    return parse_scenario_json(doc);
}

/// Reads and validates a scenario file in one go.
inline BuildResult load_scenario(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        BuildResult r;
        r.errors.push_back({ErrorCode::malformed, "cannot open scenario file '" + path + "' (path not found)"});
        return r;
    }
    std::stringstream buf;
    buf << in.rdbuf();
    ParseResult parsed = parse_scenario_text(buf.str());
    if (!parsed.config) {
        BuildResult r;
        r.errors = std::move(parsed.errors);
        return r;
    }
    return build_scenario(*parsed.config);
}

namespace detail {

inline json spec_to_json(const DegreeSpec& spec) {
    return std::visit(
        [](const auto& s) -> json {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, ConstantDegree>) {
                return {{"kind", "constant"}, {"parameters", {{"value", s.value}}}};
            } else if constexpr (std::is_same_v<T, TableDegree>) {
                return {{"kind", "table"}, {"parameters", {{"values", s.values}}}};
            } else if constexpr (std::is_same_v<T, GeometricDecayDegree>) {
                return {{"kind", "geometric_decay"}, {"parameters", {{"value", s.value}, {"rate", s.rate}}}};
            } else {
                return {{"kind", "seeded_random"}, {"parameters", {{"seed", s.seed}, {"low", s.low}, {"high", s.high}}}};
            }
        },
        spec);
}

inline void require_serializable(const DegreeSchedule& s) {
    if (s.is_custom()) throw std::invalid_argument("custom schedules cannot be serialized");
}

}  // namespace detail

/// Canonical form: follower blocks then leader groups, explicit member ids,
/// explicit initial matrix, one schedule entry per group where all members
/// agree and per agent otherwise, and every engine option spelled out.
inline json scenario_to_json(const Scenario& sc) {
    const auto& part = sc.partition;
    json doc;
    doc["dimension"] = sc.dimension;
    doc["epsilon"] = sc.epsilon;

    json groups = json::array();
    json schedules = json::array();
    std::vector<std::vector<AgentId>> blocks(part.follower_block_names.size());
    for (AgentId i : part.followers) blocks[part.follower_block[i]].push_back(i);
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        json g = {{"name", part.follower_block_names[b]}, {"kind", "follower"}, {"members", blocks[b]}};
        if (!blocks[b].empty()) {
            const std::size_t sub = part.follower_subsystem[blocks[b].front()];
            bool same = true;
            for (AgentId i : blocks[b]) same = same && part.follower_subsystem[i] == sub;
            if (!same) throw std::invalid_argument("follower block spans several subsystems");
            if (sub != kNoSubsystem) g["subsystem"] = part.leader_names[sub];
        }
        groups.push_back(std::move(g));
        for (std::size_t k = 0; k < sc.group_count(); ++k) {
            if (blocks[b].empty()) continue;
            const DegreeSchedule& first = sc.follower_schedule[blocks[b].front()][k];
            bool uniform = true;
            for (AgentId i : blocks[b]) {
                detail::require_serializable(sc.follower_schedule[i][k]);
                uniform = uniform && sc.follower_schedule[i][k] == first;
            }
            if (uniform) {
                json e = detail::spec_to_json(first.spec());
                e["group"] = part.follower_block_names[b];
                e["leader_group"] = part.leader_names[k];
                schedules.push_back(std::move(e));
            } else {
                for (AgentId i : blocks[b]) {
                    json e = detail::spec_to_json(sc.follower_schedule[i][k].spec());
                    e["agent"] = i;
                    e["leader_group"] = part.leader_names[k];
                    schedules.push_back(std::move(e));
                }
            }
        }
    }
    for (std::size_t k = 0; k < sc.group_count(); ++k) {
        const auto target = sc.targets[k].coords();
        groups.push_back({{"name", part.leader_names[k]},
                          {"kind", "leader"},
                          {"target", std::vector<double>(target.begin(), target.end())},
                          {"members", part.leaders[k]}});
        const DegreeSchedule& first = sc.leader_schedule[part.leaders[k].front()];
        bool uniform = true;
        for (AgentId i : part.leaders[k]) {
            detail::require_serializable(sc.leader_schedule[i]);
            uniform = uniform && sc.leader_schedule[i] == first;
        }
        if (uniform) {
            json e = detail::spec_to_json(first.spec());
            e["group"] = part.leader_names[k];
            schedules.push_back(std::move(e));
        } else {
            for (AgentId i : part.leaders[k]) {
                json e = detail::spec_to_json(sc.leader_schedule[i].spec());
                e["agent"] = i;
                schedules.push_back(std::move(e));
            }
        }
    }
    doc["groups"] = std::move(groups);

    json matrix = json::array();
    for (AgentId i = 0; i < sc.agent_count(); ++i) {
        const auto row = sc.initial_state.row(i);
        matrix.push_back(std::vector<double>(row.begin(), row.end()));
    }
    doc["initial_opinions"] = {{"explicit", std::move(matrix)}};
    doc["schedules"] = std::move(schedules);
    const auto& e = sc.engine;
    doc["engine"] = {{"neighbor_strategy", to_string(e.neighbor_strategy)},
                     {"horizon", e.horizon},
                     {"stop", {{"tol", e.stop.tol}, {"window", e.stop.window}}},
                     {"record_every", e.record_every},
                     {"grid_dim_cap", e.grid_dim_cap},
                     {"threads", e.threads}};
    return doc;
}

inline std::string canonical_scenario_text(const Scenario& sc) { return scenario_to_json(sc).dump(2) + "\n"; }

}  // namespace lfmix::io

#endif
