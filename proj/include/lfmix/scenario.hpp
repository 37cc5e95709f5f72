#ifndef LFMIX_SCENARIO_HPP
#define LFMIX_SCENARIO_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "lfmix/core.hpp"
#include "lfmix/schedule.hpp"

namespace lfmix {

enum class NeighborStrategy { naive, grid, automatic };

/// Deliberate engine corruptions used to show the theorem checks can fail.
enum class Fault { none, mean_shift, degree_overflow };

struct StopOptions {
    double tol = 0.0;         // <= 0 disables the convergence stop
    std::size_t window = 1;

    bool enabled() const noexcept { return tol > 0.0; }
    friend bool operator==(const StopOptions&, const StopOptions&) = default;
};

struct EngineOptions {
    NeighborStrategy neighbor_strategy = NeighborStrategy::automatic;
    std::size_t horizon = 100;
    StopOptions stop;
    std::size_t record_every = 1;
    std::size_t grid_dim_cap = 6;
    std::size_t threads = 1;
    Fault fault = Fault::none;
    friend bool operator==(const EngineOptions&, const EngineOptions&) = default;
};

// ---------------------------------------------------------------------------
// Raw (unvalidated) configuration, as read from a scenario file.

struct RawGroup {
    std::string name;
    GroupKind kind = GroupKind::follower;
    std::vector<double> target;                 // leaders only
    std::optional<std::size_t> count;           // either a count ...
    std::vector<std::int64_t> ids;              // ... or explicit ids
    std::string subsystem;                      // followers only: name of a leader group
};

struct RandomBoxInit {
    double low = 0.0;
    double high = 1.0;
    std::uint64_t seed = 0;
};

using RawInitial = std::variant<std::vector<std::vector<double>>, RandomBoxInit>;

/// Either targets a whole group or one agent. For followers, `leader_group`
/// names which beta component is being set.
struct RawScheduleEntry {
    std::optional<std::string> group;
    std::optional<std::int64_t> agent;
    std::optional<std::string> leader_group;
    DegreeSpec spec;
};

struct RawConfig {
    std::int64_t dimension = 0;
    double epsilon = 0.0;
    std::vector<RawGroup> groups;
    RawInitial initial;
    std::vector<RawScheduleEntry> schedules;
    EngineOptions engine;
};

enum class ErrorCode {
    dimension_mismatch,
    epsilon_nonpositive,
    partition_incomplete,
    degree_out_of_range,
    beta_sum_exceeds_one,
    non_finite,
    unknown_reference,
    malformed,
};

inline const char* to_string(ErrorCode c) {
    switch (c) {
        case ErrorCode::dimension_mismatch: return "DimensionMismatch";
        case ErrorCode::epsilon_nonpositive: return "EpsilonNonpositive";
        case ErrorCode::partition_incomplete: return "PartitionIncomplete";
        case ErrorCode::degree_out_of_range: return "DegreeOutOfRange";
        case ErrorCode::beta_sum_exceeds_one: return "BetaSumExceedsOne";
        case ErrorCode::non_finite: return "NonFinite";
        case ErrorCode::unknown_reference: return "UnknownReference";
        case ErrorCode::malformed: return "Malformed";
    }
    return "Unknown";
}

struct ValidationError {
    ErrorCode code;
    std::string message;
};

// ---------------------------------------------------------------------------

/// Tolerance on sum_k beta_i^k <= 1, both at validation and at step time.
inline constexpr double kBetaSumSlack = 1e-12;

struct Scenario {
    std::size_t dimension = 0;
    double epsilon = 0.0;
    Partition partition;
    std::vector<OpinionVec> targets;                          // one per leader group
    SystemState initial_state;
    std::vector<DegreeSchedule> leader_schedule;              // alpha, indexed by agent
    std::vector<std::vector<DegreeSchedule>> follower_schedule;  // beta, [agent][k]
    EngineOptions engine;

    std::size_t agent_count() const noexcept { return partition.agent_count(); }
    std::size_t group_count() const noexcept { return partition.leader_group_count(); }

    double alpha(AgentId i, std::uint64_t t) const { return leader_schedule[i](i, t); }

    void betas(AgentId i, std::uint64_t t, std::span<double> out) const {
        const auto& row = follower_schedule[i];
        for (std::size_t k = 0; k < row.size(); ++k) out[k] = row[k](i, t);
    }

    bool time_invariant() const {
        for (AgentId i = 0; i < agent_count(); ++i) {
            if (partition.assignment[i].is_leader()) {
                if (!leader_schedule[i].time_invariant()) return false;
            } else {
                for (const auto& s : follower_schedule[i]) {
                    if (!s.time_invariant()) return false;
                }
            }
        }
        return true;
    }
};

/// Either a validated Scenario or every validation error found.
struct BuildResult {
    std::optional<Scenario> scenario;
    std::vector<ValidationError> errors;

    bool ok() const noexcept { return scenario.has_value(); }
};

/// Deterministic uniform initial opinion, keyed by (seed, agent, coordinate).
inline double random_box_coordinate(const RandomBoxInit& box, AgentId agent, std::size_t coord) {
    const double u = unit_uniform(hash_key({box.seed, 0x1217, agent, coord}));
    return box.low + (box.high - box.low) * u;
}

namespace detail {

inline void check_beta_row(const std::vector<DegreeSchedule>& row, AgentId agent,
                           std::vector<ValidationError>& errors) {
    if (row.empty()) return;
    for (const auto& s : row) {
        if (s.is_custom()) return;  // opaque; enforced at step time
    }
    std::uint64_t transient = 0;
    for (const auto& s : row) transient = std::max(transient, s.transient_length());
    auto over = [](double sum) { return !(sum <= 1.0 + kBetaSumSlack); };
    for (std::uint64_t t = 0; t < transient; ++t) {
        double sum = 0.0;
        for (const auto& s : row) sum += s.upper_at(t);
        if (over(sum)) {
            errors.push_back({ErrorCode::beta_sum_exceeds_one,
                              "follower " + std::to_string(agent) + ": beta degrees can sum to " +
                                  std::to_string(sum) + " > 1 at t = " + std::to_string(t)});
            return;
        }
    }
    double sum = 0.0;
    for (const auto& s : row) sum += s.tail_sup(transient);
    if (over(sum)) {
        errors.push_back({ErrorCode::beta_sum_exceeds_one, "follower " + std::to_string(agent) +
                                                               ": beta degrees can sum to " +
                                                               std::to_string(sum) + " > 1"});
    }
}

}  // namespace detail

/// Validates a raw configuration. Never throws on bad input; all problems
/// are reported as errors.
inline BuildResult build_scenario(const RawConfig& raw) {
    BuildResult result;
    auto& errors = result.errors;
    auto fail = [&](ErrorCode c, std::string msg) { errors.push_back({c, std::move(msg)}); };

    if (raw.dimension < 1) fail(ErrorCode::dimension_mismatch, "dimension must be >= 1");
    if (!std::isfinite(raw.epsilon)) fail(ErrorCode::non_finite, "epsilon is not finite");
    else if (raw.epsilon <= 0.0) fail(ErrorCode::epsilon_nonpositive, "epsilon must be > 0");
    const std::size_t d = raw.dimension >= 1 ? static_cast<std::size_t>(raw.dimension) : 0;

    // Group names and leader indices.
    std::map<std::string, std::size_t> leader_index;
    std::map<std::string, std::size_t> follower_index;
    std::vector<const RawGroup*> leader_groups, follower_groups;
    for (const auto& g : raw.groups) {
        if (g.name.empty()) fail(ErrorCode::malformed, "group without a name");
        if (leader_index.count(g.name) || follower_index.count(g.name)) {
            fail(ErrorCode::malformed, "duplicate group name '" + g.name + "'");
            continue;
        }
        if (g.kind == GroupKind::leader) {
            leader_index[g.name] = leader_groups.size();
            leader_groups.push_back(&g);
        } else {
            follower_index[g.name] = follower_groups.size();
            follower_groups.push_back(&g);
        }
    }

    // Membership: explicit ids are claimed first, counts fill the lowest free ids in listing order.
    std::int64_t total = 0;
    bool membership_ok = true;
    for (const auto& g : raw.groups) {
        if (g.count && !g.ids.empty()) {
            fail(ErrorCode::malformed, "group '" + g.name + "' has both a count and explicit ids");
            membership_ok = false;
        }
        total += g.count ? static_cast<std::int64_t>(*g.count) : static_cast<std::int64_t>(g.ids.size());
    }
    if (total == 0) {
        fail(ErrorCode::partition_incomplete, "scenario has no agents");
        membership_ok = false;
    }
    constexpr std::int64_t kMaxAgents = 50'000'000;
    if (total > kMaxAgents) {
        fail(ErrorCode::malformed, "too many agents");
        membership_ok = false;
    }

    Partition part;
    std::vector<std::vector<AgentId>> group_members(raw.groups.size());
    if (membership_ok) {
        const auto n = static_cast<std::size_t>(total);
        std::vector<int> owner(n, -1);
        for (std::size_t gi = 0; gi < raw.groups.size(); ++gi) {
            for (std::int64_t id : raw.groups[gi].ids) {
                if (id < 0 || id >= total) {
                    fail(ErrorCode::partition_incomplete,
                         "agent id " + std::to_string(id) + " outside 0.." + std::to_string(total - 1));
                    membership_ok = false;
                } else if (owner[static_cast<std::size_t>(id)] != -1) {
                    fail(ErrorCode::partition_incomplete,
                         "agent " + std::to_string(id) + " assigned to more than one group");
                    membership_ok = false;
                } else {
                    owner[static_cast<std::size_t>(id)] = static_cast<int>(gi);
                }
            }
        }
        std::size_t cursor = 0;
        for (std::size_t gi = 0; gi < raw.groups.size() && membership_ok; ++gi) {
            if (!raw.groups[gi].count) continue;
            for (std::size_t c = 0; c < *raw.groups[gi].count; ++c) {
                while (cursor < n && owner[cursor] != -1) ++cursor;
                if (cursor == n) {
                    membership_ok = false;
                    break;
                }
                owner[cursor] = static_cast<int>(gi);
            }
        }
        for (std::size_t i = 0; i < n && membership_ok; ++i) {
            if (owner[i] == -1) {
                fail(ErrorCode::partition_incomplete, "agent " + std::to_string(i) + " belongs to no group");
                membership_ok = false;
            } else {
                group_members[static_cast<std::size_t>(owner[i])].push_back(i);
            }
        }

        if (membership_ok) {
            part.assignment.resize(n);
            part.follower_block.assign(n, 0);
            part.follower_subsystem.assign(n, kNoSubsystem);
            part.leaders.resize(leader_groups.size());
            for (const auto* g : follower_groups) part.follower_block_names.push_back(g->name);
            for (const auto* g : leader_groups) part.leader_names.push_back(g->name);
            for (std::size_t gi = 0; gi < raw.groups.size(); ++gi) {
                const auto& g = raw.groups[gi];
                if (leader_index.count(g.name) == 0 && follower_index.count(g.name) == 0) continue;
                if (g.kind == GroupKind::leader) {
                    const std::size_t k = leader_index.at(g.name);
                    if (&g != leader_groups[k]) continue;
                    if (group_members[gi].empty()) {
                        fail(ErrorCode::partition_incomplete, "leader group '" + g.name + "' is empty");
                    }
                    for (AgentId i : group_members[gi]) {
                        part.assignment[i] = GroupId::leader_group(k);
                        part.leaders[k].push_back(i);
                    }
                } else {
                    const std::size_t b = follower_index.at(g.name);
                    if (&g != follower_groups[b]) continue;
                    std::size_t sub = kNoSubsystem;
                    if (!g.subsystem.empty()) {
                        auto it = leader_index.find(g.subsystem);
                        if (it == leader_index.end()) {
                            fail(ErrorCode::unknown_reference,
                                 "follower group '" + g.name + "' names unknown subsystem '" + g.subsystem + "'");
                        } else {
                            sub = it->second;
                        }
                    }
                    for (AgentId i : group_members[gi]) {
                        part.assignment[i] = GroupId::follower();
                        part.follower_block[i] = b;
                        part.follower_subsystem[i] = sub;
                    }
                }
            }
            for (AgentId i = 0; i < n; ++i) {
                if (!part.assignment[i].is_leader()) part.followers.push_back(i);
            }
        } else if (errors.empty() || errors.back().code != ErrorCode::partition_incomplete) {
            fail(ErrorCode::partition_incomplete, "group member counts do not cover 0..N-1");
        }
    }

    // Targets.
    std::vector<OpinionVec> targets;
    for (const auto* g : leader_groups) {
        if (d != 0 && g->target.size() != d) {
            fail(ErrorCode::dimension_mismatch, "target of leader group '" + g->name + "' has dimension " +
                                                    std::to_string(g->target.size()) + ", expected " +
                                                    std::to_string(d));
            continue;
        }
        if (!std::all_of(g->target.begin(), g->target.end(), [](double v) { return std::isfinite(v); })) {
            fail(ErrorCode::non_finite, "target of leader group '" + g->name + "' is not finite");
            continue;
        }
        targets.emplace_back(g->target);
    }
    for (const auto* g : follower_groups) {
        if (!g->target.empty()) fail(ErrorCode::malformed, "follower group '" + g->name + "' declares a target");
    }

    // Initial opinions.
    SystemState initial;
    if (membership_ok && d != 0) {
        const std::size_t n = part.agent_count();
        std::vector<double> values(n * d, 0.0);
        bool init_ok = true;
        if (const auto* m = std::get_if<std::vector<std::vector<double>>>(&raw.initial)) {
            if (m->size() != n) {
                fail(ErrorCode::dimension_mismatch, "initial_opinions has " + std::to_string(m->size()) +
                                                        " rows, expected " + std::to_string(n));
                init_ok = false;
            }
            for (std::size_t i = 0; i < m->size() && init_ok; ++i) {
                if ((*m)[i].size() != d) {
                    fail(ErrorCode::dimension_mismatch, "initial opinion of agent " + std::to_string(i) +
                                                            " has dimension " + std::to_string((*m)[i].size()));
                    init_ok = false;
                    break;
                }
                for (std::size_t c = 0; c < d; ++c) {
                    if (!std::isfinite((*m)[i][c])) {
                        fail(ErrorCode::non_finite, "initial opinion of agent " + std::to_string(i) + " is not finite");
                        init_ok = false;
                        break;
                    }
                    values[i * d + c] = (*m)[i][c];
                }
            }
        } else {
            const auto& box = std::get<RandomBoxInit>(raw.initial);
            if (!std::isfinite(box.low) || !std::isfinite(box.high) || box.low > box.high) {
                fail(ErrorCode::malformed, "uniform_box needs finite low <= high");
                init_ok = false;
            } else {
                for (std::size_t i = 0; i < n; ++i) {
                    for (std::size_t c = 0; c < d; ++c) values[i * d + c] = random_box_coordinate(box, i, c);
                }
            }
        }
        if (init_ok) initial = SystemState(0, d, std::move(values));
    }

    // Schedules: group-level entries first, then per-agent overrides.
    const std::size_t m = leader_groups.size();
    std::vector<DegreeSchedule> alpha;
    std::vector<std::vector<DegreeSchedule>> beta;
    if (membership_ok) {
        const std::size_t n = part.agent_count();
        alpha.assign(n, DegreeSchedule::constant(1.0));
        beta.assign(n, {});
        for (AgentId i = 0; i < n; ++i) {
            if (!part.assignment[i].is_leader()) {
                beta[i].reserve(m);
                for (std::size_t k = 0; k < m; ++k) beta[i].emplace_back(ConstantDegree{0.0}, k + 1);
            }
        }
        auto apply = [&](const RawScheduleEntry& e, AgentId i) {
            const GroupId gid = part.assignment[i];
            if (gid.is_leader()) {
                if (e.leader_group) {
                    fail(ErrorCode::malformed, "leader schedule for agent " + std::to_string(i) +
                                                   " must not name a leader_group");
                    return;
                }
                alpha[i] = DegreeSchedule(e.spec, 0);
            } else {
                if (m == 0) {
                    fail(ErrorCode::unknown_reference, "follower schedule given but there are no leader groups");
                    return;
                }
                std::size_t k = 0;
                if (e.leader_group) {
                    auto it = leader_index.find(*e.leader_group);
                    if (it == leader_index.end()) {
                        fail(ErrorCode::unknown_reference, "unknown leader_group '" + *e.leader_group + "'");
                        return;
                    }
                    k = it->second;
                } else if (m != 1) {
                    fail(ErrorCode::malformed, "follower schedule must name its leader_group when m > 1");
                    return;
                }
                beta[i][k] = DegreeSchedule(e.spec, k + 1);
            }
        };
        for (int pass = 0; pass < 2; ++pass) {
            for (const auto& e : raw.schedules) {
                if (e.group.has_value() == e.agent.has_value()) {
                    if (pass == 0) fail(ErrorCode::malformed, "schedule entry needs exactly one of group/agent");
                    continue;
                }
                if (pass == 0 && e.group) {
                    std::vector<AgentId> members;
                    if (auto it = leader_index.find(*e.group); it != leader_index.end()) {
                        members = part.leaders[it->second];
                    } else if (auto fit = follower_index.find(*e.group); fit != follower_index.end()) {
                        for (AgentId i : part.followers) {
                            if (part.follower_block[i] == fit->second) members.push_back(i);
                        }
                    } else {
                        fail(ErrorCode::unknown_reference, "schedule names unknown group '" + *e.group + "'");
                        continue;
                    }
                    for (AgentId i : members) apply(e, i);
                } else if (pass == 1 && e.agent) {
                    if (*e.agent < 0 || static_cast<std::size_t>(*e.agent) >= n) {
                        fail(ErrorCode::unknown_reference, "schedule names unknown agent " + std::to_string(*e.agent));
                        continue;
                    }
                    apply(e, static_cast<AgentId>(*e.agent));
                }
            }
        }
        for (const auto& e : raw.schedules) {
            DegreeSchedule probe(e.spec);
            for (const auto& msg : probe.range_errors()) fail(ErrorCode::degree_out_of_range, msg);
        }
        const bool ranges_ok = std::none_of(errors.begin(), errors.end(), [](const ValidationError& e) {
            return e.code == ErrorCode::degree_out_of_range;
        });
        if (ranges_ok) {
            for (AgentId i : part.followers) detail::check_beta_row(beta[i], i, errors);
        }
    }

    if (raw.engine.stop.window == 0) fail(ErrorCode::malformed, "stop window must be >= 1");
    if (raw.engine.record_every == 0) fail(ErrorCode::malformed, "record_every must be >= 1");
    if (!std::isfinite(raw.engine.stop.tol)) fail(ErrorCode::non_finite, "stop tolerance is not finite");

    if (!errors.empty()) return result;

    Scenario s;
    s.dimension = d;
    s.epsilon = raw.epsilon;
    s.partition = std::move(part);
    s.targets = std::move(targets);
    s.initial_state = std::move(initial);
    s.leader_schedule = std::move(alpha);
    s.follower_schedule = std::move(beta);
    s.engine = raw.engine;
    result.scenario = std::move(s);
    return result;
}

}  // namespace lfmix

#endif
