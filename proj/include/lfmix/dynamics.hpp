#ifndef LFMIX_DYNAMICS_HPP
#define LFMIX_DYNAMICS_HPP

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "lfmix/core.hpp"
#include "lfmix/neighborhood.hpp"
#include "lfmix/parallel.hpp"
#include "lfmix/scenario.hpp"

namespace lfmix {

/// A schedule produced a degree outside [0, 1] (or betas summing past 1) at run time.
class ScheduleViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class TermKind { follower_mean, leader_mean, target };

/// One block of a convex combination: `degree` is spread evenly over
/// `members` generators (neighbors), or put on target g_group.
struct WeightTerm {
    TermKind kind = TermKind::follower_mean;
    std::size_t group = 0;
    double degree = 0.0;
    std::size_t members = 1;

    double member_weight() const noexcept {
        return kind == TermKind::target ? degree : degree / static_cast<double>(members);
    }
};

struct AgentWeights {
    std::vector<WeightTerm> terms;

    double total() const noexcept {
        double sum = 0.0;
        for (const auto& t : terms) sum += t.degree;
        return sum;
    }
};

/// Realized convex-combination weights of one step.
struct StepWeights {
    std::vector<AgentWeights> agents;
};

/// Degrees drawn from the schedules for one step (raw, before masking).
struct RealizedDegrees {
    std::vector<double> alpha;  // per agent; 0 for followers
    std::vector<double> beta;   // N x m, row-major; 0 for leaders
    std::size_t groups = 0;

    std::span<const double> betas(AgentId i) const { return {beta.data() + i * groups, groups}; }
};

namespace detail {

/// Mean over `ids` accumulated in ascending id order, then divided once.
inline void neighbor_mean(const SystemState& state, std::span<const AgentId> ids, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
    for (AgentId j : ids) {
        const auto xj = state.row(j);
        for (std::size_t c = 0; c < out.size(); ++c) out[c] += xj[c];
    }
    const double count = static_cast<double>(ids.size());
    for (double& v : out) v /= count;
}

inline void leader_update_into(const SystemState& state, std::span<const AgentId> neighbors, double alpha,
                               std::span<const double> target, double shift, std::span<double> out) {
    neighbor_mean(state, neighbors, out);
    for (std::size_t c = 0; c < out.size(); ++c) out[c] = alpha * (out[c] + shift) + (1.0 - alpha) * target[c];
}

/// Returns the masked betas through `masked`.
inline void follower_update_into(const SystemState& state, const NeighborSets& nb, AgentId i,
                                 std::span<const double> betas, double shift, std::span<double> masked,
                                 std::span<double> scratch, std::span<double> out) {
    double beta_sum = 0.0;
    for (std::size_t k = 0; k < betas.size(); ++k) {
        masked[k] = nb.leader_neighbors(i, k).empty() ? 0.0 : betas[k];
        beta_sum += masked[k];
    }
    const double own = std::max(0.0, 1.0 - beta_sum);
    neighbor_mean(state, nb.follower_neighbors(i), out);
    for (std::size_t c = 0; c < out.size(); ++c) out[c] = own * (out[c] + shift);
    for (std::size_t k = 0; k < betas.size(); ++k) {
        if (masked[k] == 0.0) continue;
        neighbor_mean(state, nb.leader_neighbors(i, k), scratch);
        for (std::size_t c = 0; c < out.size(); ++c) out[c] += masked[k] * (scratch[c] + shift);
    }
}

inline bool unit_degree(double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; }

}  // namespace detail

/// alpha * mean{x_j : j in N_i^{L_k}} + (1 - alpha) * g_k.
inline OpinionVec leader_update(const SystemState& state, std::span<const AgentId> neighbors, double alpha,
                                const OpinionVec& target) {
    if (target.dim() != state.dim()) throw DimensionMismatch("target dimension differs from state");
    if (neighbors.empty()) throw std::invalid_argument("leader neighborhood is empty");
    std::vector<double> out(state.dim());
    detail::leader_update_into(state, neighbors, alpha, target.coords(), 0.0, out);
    return OpinionVec(std::move(out));
}

/// (1 - sum_k b_k) * mean over N_i^F + sum_k b_k * mean over N_i^{L_k}, where
/// b_k = beta_k unless N_i^{L_k} is empty, in which case b_k = 0.
inline OpinionVec follower_update(const SystemState& state, const NeighborSets& neighbors, AgentId i,
                                  std::span<const double> betas) {
    if (neighbors.follower_neighbors(i).empty()) throw std::invalid_argument("follower neighborhood is empty");
    std::vector<double> masked(betas.size()), scratch(state.dim()), out(state.dim());
    detail::follower_update_into(state, neighbors, i, betas, 0.0, masked, scratch, out);
    return OpinionVec(std::move(out));
}

struct StepOptions {
    NeighborStrategy strategy = NeighborStrategy::automatic;
    std::size_t threads = 1;
    Fault fault = Fault::none;
    bool keep_weights = true;

    static StepOptions from(const Scenario& sc) {
        return {sc.engine.neighbor_strategy, sc.engine.threads, sc.engine.fault, true};
    }
};

struct StepResult {
    SystemState next;
    StepWeights weights;
    NeighborSets neighbors;
    RealizedDegrees degrees;
};

/// Offset added to every neighbor mean under Fault::mean_shift.
inline double mean_shift_amount(const Scenario& sc) { return 0.05 * sc.epsilon; }

/// Draws every degree for step t and validates it.
inline RealizedDegrees draw_degrees(const Scenario& sc, std::uint64_t t, Fault fault = Fault::none) {
    const std::size_t n = sc.agent_count();
    const std::size_t m = sc.group_count();
    RealizedDegrees deg;
    deg.groups = m;
    deg.alpha.assign(n, 0.0);
    deg.beta.assign(n * m, 0.0);
    const double bump = fault == Fault::degree_overflow ? 0.75 : 0.0;
    for (AgentId i = 0; i < n; ++i) {
        if (sc.partition.assignment[i].is_leader()) {
            const double a = sc.alpha(i, t) + bump;
            if (!detail::unit_degree(a)) {
                throw ScheduleViolation("alpha of agent " + std::to_string(i) + " at t = " + std::to_string(t) +
                                        " is " + std::to_string(a));
            }
            deg.alpha[i] = a;
        } else if (m > 0) {
            std::span<double> row(deg.beta.data() + i * m, m);
            sc.betas(i, t, row);
            row[0] += bump;
            double sum = 0.0;
            for (std::size_t k = 0; k < m; ++k) {
                if (!detail::unit_degree(row[k])) {
                    throw ScheduleViolation("beta of agent " + std::to_string(i) + " toward group " +
                                            std::to_string(k) + " at t = " + std::to_string(t) + " is " +
                                            std::to_string(row[k]));
                }
                sum += row[k];
            }
            if (!(sum <= 1.0 + kBetaSumSlack)) {
                throw ScheduleViolation("betas of agent " + std::to_string(i) + " at t = " + std::to_string(t) +
                                        " sum to " + std::to_string(sum));
            }
        }
    }
    return deg;
}

/// One synchronous update of every agent from state t.
inline StepResult step(const SystemState& state, const Scenario& sc, const StepOptions& opts) {
    detail::check_state(state, sc);
    const std::size_t n = sc.agent_count();
    const std::size_t m = sc.group_count();
    const std::size_t d = sc.dimension;

    StepResult r;
    r.degrees = draw_degrees(sc, state.t(), opts.fault);
    r.neighbors = compute_neighbors(state, sc, opts.strategy, opts.threads);
    r.next = SystemState(state.t() + 1, n, d);
    if (opts.keep_weights) r.weights.agents.resize(n);
    const double shift = opts.fault == Fault::mean_shift ? mean_shift_amount(sc) : 0.0;

    parallel_for(n, opts.threads, [&](std::size_t begin, std::size_t end) {
        std::vector<double> masked(m), scratch(d);
        for (AgentId i = begin; i < end; ++i) {
            auto out = r.next.row(i);
            const GroupId g = sc.partition.assignment[i];
            if (g.is_leader()) {
                const auto& nb = r.neighbors.leader_neighbors(i, g.leader);
                const double a = r.degrees.alpha[i];
                detail::leader_update_into(state, nb, a, sc.targets[g.leader].coords(), shift, out);
                if (opts.keep_weights) {
                    auto& terms = r.weights.agents[i].terms;
                    terms.push_back({TermKind::leader_mean, g.leader, a, nb.size()});
                    terms.push_back({TermKind::target, g.leader, 1.0 - a, 1});
                }
            } else {
                detail::follower_update_into(state, r.neighbors, i, r.degrees.betas(i), shift, masked, scratch, out);
                if (opts.keep_weights) {
                    double beta_sum = 0.0;
                    for (std::size_t k = 0; k < m; ++k) beta_sum += masked[k];
                    auto& terms = r.weights.agents[i].terms;
                    terms.push_back({TermKind::follower_mean, 0, std::max(0.0, 1.0 - beta_sum),
                                     r.neighbors.follower_neighbors(i).size()});
                    for (std::size_t k = 0; k < m; ++k) {
                        if (masked[k] == 0.0) continue;
                        terms.push_back({TermKind::leader_mean, k, masked[k], r.neighbors.leader_neighbors(i, k).size()});
                    }
                }
            }
        }
    });
    return r;
}

inline StepResult step(const SystemState& state, const Scenario& sc) { return step(state, sc, StepOptions::from(sc)); }

/// Largest per-agent Euclidean displacement between two states.
inline double max_displacement(const SystemState& a, const SystemState& b) {
    double worst = 0.0;
    for (AgentId i = 0; i < a.agent_count(); ++i) worst = std::max(worst, distance(a.row(i), b.row(i)));
    return worst;
}

enum class StopReason { horizon, converged, stagnated };

inline const char* to_string(StopReason r) {
    switch (r) {
        case StopReason::horizon: return "horizon";
        case StopReason::converged: return "converged";
        case StopReason::stagnated: return "stagnated";
    }
    return "unknown";
}

/// 64-bit digests of what a step used, for cheap cross-run comparison.
inline std::uint64_t digest(const NeighborSets& nb) {
    std::uint64_t h = 0x6e62;
    for (AgentId i = 0; i < nb.agent_count(); ++i) {
        for (std::size_t s = 0; s < nb.slot_count(); ++s) {
            h = splitmix64(h ^ (0x100000000ULL + s));
            for (AgentId j : nb.at(i, s)) h = splitmix64(h ^ j);
        }
    }
    return h;
}

inline std::uint64_t digest(const StepWeights& w) {
    std::uint64_t h = 0x7777;
    for (const auto& a : w.agents) {
        for (const auto& t : a.terms) {
            h = splitmix64(h ^ static_cast<std::uint64_t>(t.kind) ^ (t.group << 4) ^ (t.members << 20));
            h = splitmix64(h ^ std::bit_cast<std::uint64_t>(t.degree));
        }
    }
    return h;
}

struct Trajectory {
    std::vector<SystemState> states;   // recorded states, ascending t; always includes t = 0 and the final state
    std::size_t final_t = 0;
    StopReason stop_reason = StopReason::horizon;
    std::size_t record_every = 1;
    std::vector<std::uint64_t> neighbor_digests;  // per step, when retained
    std::vector<std::uint64_t> weight_digests;

    bool dense() const noexcept { return states.size() == final_t + 1; }
    const SystemState& final_state() const { return states.back(); }
};

struct RunOptions {
    std::size_t horizon = 100;
    StopOptions stop;
    std::size_t record_every = 1;
    StepOptions step;
    bool retain_digests = false;
    /// Called once per step with (state t, result of stepping it).
    std::function<void(const SystemState&, const StepResult&)> observer;

    static RunOptions from(const Scenario& sc) {
        RunOptions o;
        o.horizon = sc.engine.horizon;
        o.stop = sc.engine.stop;
        o.record_every = std::max<std::size_t>(1, sc.engine.record_every);
        o.step = StepOptions::from(sc);
        return o;
    }
};

/// Iterates step from the initial state until the horizon or a stop criterion.
///
/// converged: the last `stop.window` displacements are all <= stop.tol.
/// stagnated: a step left the state bit-identical and no schedule depends on
/// t, so the state is a fixed point of every later step.
inline Trajectory run(const Scenario& sc, const RunOptions& opts) {
    Trajectory traj;
    traj.record_every = std::max<std::size_t>(1, opts.record_every);
    traj.states.push_back(sc.initial_state);
    const bool invariant = sc.time_invariant();
    StepOptions step_opts = opts.step;
    step_opts.keep_weights = step_opts.keep_weights && (opts.retain_digests || opts.observer);

    SystemState current = sc.initial_state;
    std::deque<double> recent;
    for (std::size_t t = 0; t < opts.horizon; ++t) {
        StepResult r = step(current, sc, step_opts);
        if (opts.observer) opts.observer(current, r);
        if (opts.retain_digests) {
            traj.neighbor_digests.push_back(digest(r.neighbors));
            traj.weight_digests.push_back(digest(r.weights));
        }
        const double moved = max_displacement(current, r.next);
        const bool unchanged = current.same_opinions(r.next);
        current = std::move(r.next);
        traj.final_t = current.t();

        bool stop = false;
        if (opts.stop.enabled()) {
            recent.push_back(moved);
            if (recent.size() > opts.stop.window) recent.pop_front();
            if (recent.size() == opts.stop.window &&
                std::all_of(recent.begin(), recent.end(), [&](double v) { return v <= opts.stop.tol; })) {
                traj.stop_reason = StopReason::converged;
                stop = true;
            }
        }
        if (!stop && unchanged && invariant) {
            traj.stop_reason = StopReason::stagnated;
            stop = true;
        }
        if (stop || current.t() % traj.record_every == 0 || current.t() == opts.horizon) {
            traj.states.push_back(current);
        }
        if (stop) break;
    }
    return traj;
}

inline Trajectory run(const Scenario& sc) { return run(sc, RunOptions::from(sc)); }

}  // namespace lfmix

#endif
