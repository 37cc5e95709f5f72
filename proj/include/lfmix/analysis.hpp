#ifndef LFMIX_ANALYSIS_HPP
#define LFMIX_ANALYSIS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "lfmix/core.hpp"
#include "lfmix/dynamics.hpp"
#include "lfmix/neighborhood.hpp"
#include "lfmix/scenario.hpp"

// Runtime certification of the convergence results for the mixed model.
//
// Every check recomputes distances and neighbor sets from the raw states
// (using the naive neighbor search and fresh schedule queries) instead of
// reusing anything the engine computed, so a pass is independent evidence.

namespace lfmix {

inline constexpr double kInequalityTol = 1e-9;
inline constexpr double kConsensusTol = 1e-6;
inline constexpr double kStabilizationTol = 1e-12;
inline constexpr std::size_t kNoAgent = static_cast<std::size_t>(-1);

enum class CheckStatus { passed, failed, inapplicable };

enum class CheckError { none, inapplicable_hypothesis, undefined_limit, cross_talk };

inline const char* to_string(CheckStatus s) {
    switch (s) {
        case CheckStatus::passed: return "pass";
        case CheckStatus::failed: return "fail";
        case CheckStatus::inapplicable: return "skipped";
    }
    return "unknown";
}

inline const char* to_string(CheckError e) {
    switch (e) {
        case CheckError::none: return "none";
        case CheckError::inapplicable_hypothesis: return "InapplicableHypothesis";
        case CheckError::undefined_limit: return "UndefinedLimit";
        case CheckError::cross_talk: return "CrossTalk";
    }
    return "unknown";
}

/// One checked inequality lhs <= rhs.
struct SlackRecord {
    std::size_t t = 0;
    std::size_t agent = kNoAgent;  // kNoAgent for group-level clauses
    std::string_view clause;
    double lhs = 0.0;
    double rhs = 0.0;
    double slack = 0.0;
    double tolerance = 0.0;
    bool pass = true;
};

struct TheoremReport {
    std::string name;
    CheckStatus status = CheckStatus::passed;
    CheckError error = CheckError::none;
    std::string note;
    std::vector<SlackRecord> records;
    std::map<std::string, double> parameters;

    void add(std::size_t t, std::size_t agent, std::string_view clause, double lhs, double rhs, double tol) {
        const double slack = rhs - lhs;
        records.push_back({t, agent, clause, lhs, rhs, slack, tol, slack >= -tol});
    }

    void mark_inapplicable(CheckError e, std::string why) {
        status = CheckStatus::inapplicable;
        error = e;
        note = std::move(why);
    }

    /// Sets passed/failed from the records unless the check was already skipped.
    TheoremReport& finalize() {
        if (status == CheckStatus::inapplicable) return *this;
        status = std::all_of(records.begin(), records.end(), [](const SlackRecord& r) { return r.pass; })
                     ? CheckStatus::passed
                     : CheckStatus::failed;
        return *this;
    }

    bool passed() const noexcept { return status == CheckStatus::passed; }
    bool applicable() const noexcept { return status != CheckStatus::inapplicable; }

    std::size_t failure_count() const {
        return static_cast<std::size_t>(
            std::count_if(records.begin(), records.end(), [](const SlackRecord& r) { return !r.pass; }));
    }

    double worst_slack() const {
        double w = std::numeric_limits<double>::infinity();
        for (const auto& r : records) w = std::min(w, r.slack);
        return w;
    }

    /// Appends another report's records (and failure state) to this one.
    void merge(const TheoremReport& other, const std::string& prefix = {}) {
        records.insert(records.end(), other.records.begin(), other.records.end());
        for (const auto& [k, v] : other.parameters) parameters[prefix + k] = v;
        if (other.status == CheckStatus::inapplicable && status != CheckStatus::inapplicable) {
            mark_inapplicable(other.error, prefix + other.note);
        }
    }
};

namespace detail {

inline void require_dense(const Trajectory& traj) {
    if (traj.states.empty() || !traj.dense()) {
        throw std::invalid_argument("theorem checks need every step recorded (record_every = 1)");
    }
}

inline double max_distance_to(const SystemState& s, std::span<const AgentId> ids, std::span<const double> point) {
    double worst = 0.0;
    for (AgentId i : ids) worst = std::max(worst, distance(s.row(i), point));
    return worst;
}

inline double max_distance_all(const SystemState& s, std::span<const double> point) {
    double worst = 0.0;
    for (AgentId i = 0; i < s.agent_count(); ++i) worst = std::max(worst, distance(s.row(i), point));
    return worst;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Metrics

/// C_t^k: max over i in L_k of ||x_i - g_k||.
inline double max_target_distance(const SystemState& state, const Scenario& sc, std::size_t k) {
    return detail::max_distance_to(state, sc.partition.leaders.at(k), sc.targets.at(k).coords());
}

/// Point followers are measured against: g_1 when there is a leader group, else the origin.
inline OpinionVec metrics_reference(const Scenario& sc) {
    if (sc.group_count() > 0) return sc.targets.front();
    return OpinionVec(std::vector<double>(sc.dimension, 0.0));
}

inline double opinion_diameter(const SystemState& s, std::size_t threads = 1) {
    const std::size_t n = s.agent_count();
    if (s.dim() == 1) {
        if (n == 0) return 0.0;
        double lo = s.row(0)[0], hi = lo;
        for (AgentId i = 1; i < n; ++i) {
            lo = std::min(lo, s.row(i)[0]);
            hi = std::max(hi, s.row(i)[0]);
        }
        return hi - lo;
    }
    std::vector<double> best(n, 0.0);
    parallel_for(n, threads, [&](std::size_t begin, std::size_t end) {
        for (AgentId i = begin; i < end; ++i) {
            double w = 0.0;
            for (AgentId j = i + 1; j < n; ++j) w = std::max(w, squared_distance(s.row(i), s.row(j)));
            best[i] = w;
        }
    });
    double w = 0.0;
    for (double v : best) w = std::max(w, v);
    return std::sqrt(w);
}

struct MetricsRow {
    std::size_t t = 0;
    std::vector<double> target_distance;          // C_t^k per leader group
    std::optional<double> follower_distance;      // A_t, when F is nonempty
    double diameter = 0.0;
    std::optional<double> max_alpha;              // over leaders, at step t
    std::optional<double> max_one_minus_beta_sum; // over followers, at step t
};

inline MetricsRow compute_metrics(const SystemState& state, const Scenario& sc, std::size_t threads = 1) {
    MetricsRow row;
    row.t = state.t();
    for (std::size_t k = 0; k < sc.group_count(); ++k) row.target_distance.push_back(max_target_distance(state, sc, k));
    const OpinionVec ref = metrics_reference(sc);
    if (!sc.partition.followers.empty()) {
        row.follower_distance = detail::max_distance_to(state, sc.partition.followers, ref.coords());
    }
    row.diameter = opinion_diameter(state, threads);
    const std::size_t m = sc.group_count();
    std::vector<double> betas(m);
    for (AgentId i = 0; i < sc.agent_count(); ++i) {
        if (sc.partition.assignment[i].is_leader()) {
            const double a = sc.alpha(i, state.t());
            row.max_alpha = row.max_alpha ? std::max(*row.max_alpha, a) : a;
        } else {
            sc.betas(i, state.t(), betas);
            double sum = 0.0;
            for (double b : betas) sum += b;
            const double own = 1.0 - sum;
            row.max_one_minus_beta_sum = row.max_one_minus_beta_sum ? std::max(*row.max_one_minus_beta_sum, own) : own;
        }
    }
    return row;
}

struct DegreeBounds {
    double max_alpha = 0.0;            // sup of alpha over leaders
    double max_one_minus_beta = 0.0;   // sup of 1 - sum_k beta over followers
    double gamma() const noexcept { return std::max(max_alpha, max_one_minus_beta); }
};

/// Degree extremes over steps [from, to] (inclusive), queried from the schedules.
inline DegreeBounds measure_degree_bounds(const Scenario& sc, std::size_t from, std::size_t to,
                                          std::span<const AgentId> agents) {
    DegreeBounds b;
    const std::size_t m = sc.group_count();
    std::vector<double> betas(m);
    for (std::size_t t = from; t <= to; ++t) {
        for (AgentId i : agents) {
            if (sc.partition.assignment[i].is_leader()) {
                b.max_alpha = std::max(b.max_alpha, sc.alpha(i, t));
            } else {
                sc.betas(i, t, betas);
                double sum = 0.0;
                for (double v : betas) sum += v;
                b.max_one_minus_beta = std::max(b.max_one_minus_beta, 1.0 - sum);
            }
        }
    }
    return b;
}

inline std::vector<AgentId> all_agents(const Scenario& sc) {
    std::vector<AgentId> ids(sc.agent_count());
    for (AgentId i = 0; i < ids.size(); ++i) ids[i] = i;
    return ids;
}

// ---------------------------------------------------------------------------
// Convex-combination certificate

/// Checks one step's weights are a stochastic vector and that every new
/// opinion lies in the bounding box of its generators.
inline TheoremReport check_convex_combination(const SystemState& before, const SystemState& after,
                                              const StepResult& step_result, const Scenario& sc,
                                              double tol = 1e-12) {
    TheoremReport rep;
    rep.name = "convex";
    const auto& weights = step_result.weights.agents;
    if (weights.size() != sc.agent_count()) throw std::invalid_argument("step result carries no weights");
    const std::size_t d = sc.dimension;
    for (AgentId i = 0; i < sc.agent_count(); ++i) {
        double total = 0.0;
        double min_weight = 0.0;
        std::vector<double> lo(d, std::numeric_limits<double>::infinity());
        std::vector<double> hi(d, -std::numeric_limits<double>::infinity());
        auto widen = [&](std::span<const double> p) {
            for (std::size_t c = 0; c < d; ++c) {
                lo[c] = std::min(lo[c], p[c]);
                hi[c] = std::max(hi[c], p[c]);
            }
        };
        for (const auto& term : weights[i].terms) {
            total += term.degree;
            min_weight = std::min(min_weight, term.member_weight());
            if (term.degree == 0.0) continue;
            if (term.kind == TermKind::target) {
                widen(sc.targets[term.group].coords());
            } else {
                const std::size_t slot = term.kind == TermKind::follower_mean ? 0 : term.group + 1;
                for (AgentId j : step_result.neighbors.at(i, slot)) widen(before.row(j));
            }
        }
        rep.add(before.t(), i, "weights_nonnegative", -min_weight, 0.0, 0.0);
        rep.add(before.t(), i, "weights_sum_to_one", std::fabs(total - 1.0), 0.0, tol);
        double excess = 0.0;
        const auto x = after.row(i);
        for (std::size_t c = 0; c < d; ++c) excess = std::max({excess, lo[c] - x[c], x[c] - hi[c]});
        rep.add(before.t(), i, "inside_generator_box", excess, 0.0, tol);
    }
    return rep.finalize();
}

// ---------------------------------------------------------------------------
// Contraction of leader distances to their target

/// For every leader i in L_k:
///   ||x_i(t+1) - g_k|| <= alpha_i(t) * max_{j in N_i(t)} ||x_j(t) - g_k||
/// and per group C_{t+1}^k <= max_i alpha_i(t) * C_t^k.
inline TheoremReport check_lemma_contraction(const SystemState& state_t, const SystemState& state_t1,
                                             const NeighborSets& neighbors_t, std::span<const double> alphas_t,
                                             const Scenario& sc, double tol = kInequalityTol) {
    TheoremReport rep;
    rep.name = "lemma1";
    for (std::size_t k = 0; k < sc.group_count(); ++k) {
        const auto g = sc.targets[k].coords();
        const auto& members = sc.partition.leaders[k];
        double max_alpha = 0.0;
        for (AgentId i : members) {
            const double lhs = distance(state_t1.row(i), g);
            const double reach = detail::max_distance_to(state_t, neighbors_t.leader_neighbors(i, k), g);
            rep.add(state_t.t(), i, "agent", lhs, alphas_t[i] * reach, tol);
            max_alpha = std::max(max_alpha, alphas_t[i]);
        }
        const double c_next = detail::max_distance_to(state_t1, members, g);
        const double c_now = detail::max_distance_to(state_t, members, g);
        rep.add(state_t.t(), kNoAgent, "group", c_next, max_alpha * c_now, tol);
    }
    return rep.finalize();
}

/// The contraction check over every step of a trajectory.
inline TheoremReport check_lemma_contraction(const Trajectory& traj, const Scenario& sc, double tol = kInequalityTol) {
    detail::require_dense(traj);
    TheoremReport rep;
    rep.name = "lemma1";
    for (std::size_t s = 0; s + 1 < traj.states.size(); ++s) {
        const auto& now = traj.states[s];
        const NeighborSets nb = neighbors_naive(now, sc);
        const RealizedDegrees deg = draw_degrees(sc, now.t());
        rep.merge(check_lemma_contraction(now, traj.states[s + 1], nb, deg.alpha, sc, tol));
    }
    rep.parameters["steps"] = static_cast<double>(traj.final_t);
    return rep.finalize();
}

/// C_{t+1}^k <= C_t^k whenever every alpha is at most 1.
inline TheoremReport check_target_distance_monotone(const Trajectory& traj, const Scenario& sc,
                                                    double tol = kInequalityTol) {
    detail::require_dense(traj);
    TheoremReport rep;
    rep.name = "monotone";
    for (std::size_t k = 0; k < sc.group_count(); ++k) {
        for (std::size_t s = 0; s + 1 < traj.states.size(); ++s) {
            rep.add(s, kNoAgent, "group", max_target_distance(traj.states[s + 1], sc, k),
                    max_target_distance(traj.states[s], sc, k), tol);
        }
    }
    return rep.finalize();
}

// ---------------------------------------------------------------------------
// Leader groups reach their target

enum class EnvelopeMode {
    uniform,      // delta must bound alpha at every step
    subsequence,  // envelope shrinks only on steps where max alpha <= delta
};

struct TargetCheckOptions {
    double envelope_tol = kInequalityTol;
    double target_tol = 1e-9;
    EnvelopeMode mode = EnvelopeMode::uniform;
};

/// Smallest step count s with delta^s * c0 <= target_tol.
inline std::size_t steps_to_reach(double c0, double delta, double target_tol) {
    if (c0 <= target_tol) return 0;
    if (delta <= 0.0) return 1;
    return static_cast<std::size_t>(std::ceil(std::log(target_tol / c0) / std::log(delta)));
}

/// C_t^k <= delta^{s(t)} * C_0^k where s(t) counts contracting steps before t,
/// plus C_T^k <= target_tol once enough contracting steps have happened.
inline TheoremReport check_theorem_target(const Trajectory& traj, const Scenario& sc, std::size_t k, double delta,
                                          const TargetCheckOptions& opts = {}) {
    detail::require_dense(traj);
    TheoremReport rep;
    rep.name = "thm2";
    rep.parameters["group"] = static_cast<double>(k);
    rep.parameters["delta"] = delta;
    if (k >= sc.group_count()) throw std::out_of_range("no such leader group");
    if (!(delta >= 0.0 && delta < 1.0)) {
        rep.mark_inapplicable(CheckError::inapplicable_hypothesis, "delta must lie in [0, 1)");
        return rep;
    }
    const auto& members = sc.partition.leaders[k];
    const std::size_t T = traj.final_t;

    std::vector<bool> contracting(T, true);
    double observed = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
        double step_max = 0.0;
        for (AgentId i : members) step_max = std::max(step_max, sc.alpha(i, t));
        observed = std::max(observed, step_max);
        contracting[t] = step_max <= delta;
    }
    rep.parameters["max_alpha_observed"] = observed;
    if (opts.mode == EnvelopeMode::uniform && observed > delta) {
        rep.mark_inapplicable(CheckError::inapplicable_hypothesis,
                              "alpha exceeds delta on some step (max observed " + std::to_string(observed) + ")");
        return rep;
    }

    const double c0 = max_target_distance(traj.states.front(), sc, k);
    std::size_t s = 0;
    for (std::size_t t = 0; t <= T; ++t) {
        const double bound = std::pow(delta, static_cast<double>(s)) * c0;
        rep.add(t, kNoAgent, "envelope", max_target_distance(traj.states[t], sc, k), bound, opts.envelope_tol);
        if (t < T && contracting[t]) ++s;
    }
    const std::size_t required = steps_to_reach(c0, delta, opts.target_tol);
    rep.parameters["C0"] = c0;
    rep.parameters["contracting_steps"] = static_cast<double>(s);
    rep.parameters["required_steps"] = static_cast<double>(required);
    rep.parameters["certified"] = s >= required ? 1.0 : 0.0;
    if (s >= required) {
        rep.add(T, kNoAgent, "final", max_target_distance(traj.final_state(), sc, k), opts.target_tol, 0.0);
    }
    return rep.finalize();
}

/// Per-agent clause: ||x_i(t) - g|| <= alpha_i(t-1) * C_{t-1}, so a leader whose
/// alpha tends to 0 reaches its target regardless of the rest of its group.
inline TheoremReport check_leader_agent_target(const Trajectory& traj, const Scenario& sc, AgentId agent,
                                               double final_tol = kConsensusTol, double tol = kInequalityTol) {
    detail::require_dense(traj);
    const GroupId g = sc.partition.assignment.at(agent);
    if (!g.is_leader()) throw std::invalid_argument("agent is not a leader");
    TheoremReport rep;
    rep.name = "thm2_agent";
    rep.parameters["agent"] = static_cast<double>(agent);
    const auto target = sc.targets[g.leader].coords();
    for (std::size_t t = 1; t < traj.states.size(); ++t) {
        const double c_prev = max_target_distance(traj.states[t - 1], sc, g.leader);
        rep.add(t, agent, "agent_envelope", distance(traj.states[t].row(agent), target),
                sc.alpha(agent, t - 1) * c_prev, tol);
    }
    rep.add(traj.final_t, agent, "final", distance(traj.final_state().row(agent), target), final_tol, 0.0);
    return rep.finalize();
}

// ---------------------------------------------------------------------------
// Ball invariance

/// Finds the first t0 with every opinion in B(center, radius) and asserts
/// containment at every later step. Never entering the ball passes vacuously.
inline TheoremReport check_ball_invariance(const Trajectory& traj, const OpinionVec& center, double radius,
                                           double tol = 1e-12) {
    TheoremReport rep;
    rep.name = "lemma3";
    rep.parameters["radius"] = radius;
    std::optional<std::size_t> entry;
    for (std::size_t s = 0; s < traj.states.size(); ++s) {
        const double r = detail::max_distance_all(traj.states[s], center.coords());
        if (!entry) {
            if (r <= radius) {
                entry = s;
                rep.parameters["t0"] = static_cast<double>(traj.states[s].t());
            }
            continue;
        }
        rep.add(traj.states[s].t(), kNoAgent, "contained", r, radius, tol);
    }
    if (!entry) {
        rep.parameters["t0"] = -1.0;
        rep.note = "never entered the ball";
    }
    return rep.finalize();
}

// ---------------------------------------------------------------------------
// Consensus for a single leader group

struct ConsensusOptions {
    double tol = kInequalityTol;
    double consensus_tol = kConsensusTol;
    std::size_t stabilization_window = 10;
    double stabilization_tol = kStabilizationTol;
};

/// Hypothesis gate and bound for one leader group plus followers:
///  - t*: first step with every opinion in B(g, delta), delta < eps;
///  - gamma: sup over s >= t* of max(max_F (1 - beta), max_L alpha) < 1;
///  - p: first step >= t* after which C_s < eps - delta holds to the end;
/// then A_{t+1} <= gamma^{t-p+1} A_p + (t-p+1) gamma^{t-p} C_p for t >= p and
/// the final max distance to g is within consensus_tol. The sup is measured
/// over the simulated horizon only.
inline TheoremReport check_theorem_consensus(const Trajectory& traj, const Scenario& sc,
                                             const ConsensusOptions& opts = {}) {
    detail::require_dense(traj);
    TheoremReport rep;
    rep.name = "thm4";
    if (sc.group_count() != 1) {
        rep.mark_inapplicable(CheckError::inapplicable_hypothesis, "needs exactly one leader group");
        return rep;
    }
    const auto g = sc.targets[0].coords();
    const auto& leaders = sc.partition.leaders[0];
    const auto& followers = sc.partition.followers;
    const std::size_t T = traj.final_t;

    std::optional<std::size_t> t_star;
    double delta = 0.0;
    for (std::size_t t = 0; t <= T; ++t) {
        const double r = detail::max_distance_all(traj.states[t], g);
        if (r < sc.epsilon) {
            t_star = t;
            delta = r;
            break;
        }
    }
    if (!t_star) {
        rep.mark_inapplicable(CheckError::inapplicable_hypothesis, "opinions never inside B(g, delta) with delta < eps");
        return rep;
    }
    const std::size_t last_step = T > *t_star ? T - 1 : *t_star;
    const DegreeBounds bounds = measure_degree_bounds(sc, *t_star, last_step, all_agents(sc));
    const double gamma = bounds.gamma();
    rep.parameters["t_star"] = static_cast<double>(*t_star);
    rep.parameters["delta"] = delta;
    rep.parameters["gamma"] = gamma;
    rep.note = "hypothesis measured over horizon";
    if (!(gamma < 1.0)) {
        rep.mark_inapplicable(CheckError::inapplicable_hypothesis, "gamma >= 1 (measured over horizon)");
        return rep;
    }

    std::vector<double> c(T + 1), a(T + 1, 0.0);
    for (std::size_t t = 0; t <= T; ++t) {
        c[t] = detail::max_distance_to(traj.states[t], leaders, g);
        if (!followers.empty()) a[t] = detail::max_distance_to(traj.states[t], followers, g);
    }
    std::optional<std::size_t> p;
    const double margin = sc.epsilon - delta;
    for (std::size_t t = T + 1; t-- > *t_star;) {
        if (!(c[t] < margin)) break;
        p = t;
    }
    if (!p) {
        rep.add(T, kNoAgent, "onset", c[T], margin, 0.0);
        rep.records.back().pass = false;
        rep.note = "leaders never settled within eps - delta of the target";
        return rep.finalize();
    }
    rep.parameters["p"] = static_cast<double>(*p);
    if (!followers.empty()) {
        for (std::size_t t = *p; t < T; ++t) {
            const double n = static_cast<double>(t - *p);
            const double bound = std::pow(gamma, n + 1.0) * a[*p] + (n + 1.0) * std::pow(gamma, n) * c[*p];
            rep.add(t + 1, kNoAgent, "follower_bound", a[t + 1], bound, opts.tol);
        }
    }
    rep.add(T, kNoAgent, "final", detail::max_distance_all(traj.final_state(), g), opts.consensus_tol, 0.0);
    return rep.finalize();
}

// ---------------------------------------------------------------------------
// Several leader groups: followers settle on a beta-weighted mix of targets

/// sum_k (beta_i^k / sum_j beta_i^j) g_k using the betas at step t; nullopt if all are 0.
inline std::optional<OpinionVec> predicted_mixture_limit(const Scenario& sc, AgentId i, std::size_t t) {
    const std::size_t m = sc.group_count();
    std::vector<double> betas(m);
    sc.betas(i, t, betas);
    double total = 0.0;
    for (double b : betas) total += b;
    if (total == 0.0) return std::nullopt;
    std::vector<double> out(sc.dimension, 0.0);
    for (std::size_t k = 0; k < m; ++k) {
        const double w = betas[k] / total;
        for (std::size_t c = 0; c < sc.dimension; ++c) out[c] += w * sc.targets[k][c];
    }
    return OpinionVec(std::move(out));
}

inline TheoremReport check_corollary_mixture(const Trajectory& traj, const Scenario& sc,
                                             const ConsensusOptions& opts = {}) {
    detail::require_dense(traj);
    TheoremReport rep;
    rep.name = "cor1";
    const std::size_t m = sc.group_count();
    if (m == 0) {
        rep.mark_inapplicable(CheckError::inapplicable_hypothesis, "needs at least one leader group");
        return rep;
    }
    const std::size_t T = traj.final_t;
    const std::size_t window = std::min(opts.stabilization_window, T);
    std::vector<double> now(m), then(m);
    for (AgentId i : sc.partition.followers) {
        sc.betas(i, T, now);
        for (std::size_t s = T - window; s < T; ++s) {
            sc.betas(i, s, then);
            for (std::size_t k = 0; k < m; ++k) {
                if (std::fabs(then[k] - now[k]) > opts.stabilization_tol) {
                    rep.mark_inapplicable(CheckError::inapplicable_hypothesis,
                                          "beta of agent " + std::to_string(i) + " has not stabilized");
                    return rep;
                }
            }
        }
        if (!predicted_mixture_limit(sc, i, T)) {
            rep.mark_inapplicable(CheckError::undefined_limit,
                                  "agent " + std::to_string(i) + " has all beta equal to 0");
            rep.parameters["undefined_agent"] = static_cast<double>(i);
            return rep;
        }
    }

    std::optional<std::size_t> t_star;
    double delta = 0.0;
    std::size_t anchor = 0;
    for (std::size_t t = 0; t <= T && !t_star; ++t) {
        for (std::size_t j = 0; j < m; ++j) {
            double r = detail::max_distance_all(traj.states[t], sc.targets[j].coords());
            for (std::size_t k = 0; k < m; ++k) r = std::max(r, distance(sc.targets[k], sc.targets[j]));
            if (r < sc.epsilon && (!t_star || r < delta)) {
                t_star = t;
                delta = r;
                anchor = j;
            }
        }
    }
    if (!t_star) {
        rep.mark_inapplicable(CheckError::inapplicable_hypothesis,
                              "opinions and targets never inside one B(g_j, delta) with delta < eps");
        return rep;
    }
    const std::size_t last_step = T > *t_star ? T - 1 : *t_star;
    const double gamma = measure_degree_bounds(sc, *t_star, last_step, all_agents(sc)).gamma();
    rep.parameters["t_star"] = static_cast<double>(*t_star);
    rep.parameters["delta"] = delta;
    rep.parameters["anchor_group"] = static_cast<double>(anchor);
    rep.parameters["gamma"] = gamma;
    rep.note = "hypothesis measured over horizon";
    if (!(gamma < 1.0)) {
        rep.mark_inapplicable(CheckError::inapplicable_hypothesis, "gamma >= 1 (measured over horizon)");
        return rep;
    }
    const auto& last = traj.final_state();
    for (AgentId i = 0; i < sc.agent_count(); ++i) {
        const GroupId gid = sc.partition.assignment[i];
        if (gid.is_leader()) {
            rep.add(T, i, "leader_final", distance(last.row(i), sc.targets[gid.leader].coords()), opts.consensus_tol,
                    0.0);
        } else {
            const OpinionVec limit = *predicted_mixture_limit(sc, i, T);
            rep.add(T, i, "follower_final", distance(last.row(i), limit.coords()), opts.consensus_tol, 0.0);
        }
    }
    return rep.finalize();
}

// ---------------------------------------------------------------------------
// Independent subsystems

/// The leader group k together with the followers assigned to it, reindexed
/// in ascending original id order. Schedules keep their original agent keys.
struct Subsystem {
    Scenario scenario;
    std::vector<AgentId> original_ids;
};

inline Subsystem extract_subsystem(const Scenario& sc, std::size_t k) {
    Subsystem sub;
    for (AgentId i = 0; i < sc.agent_count(); ++i) {
        const GroupId g = sc.partition.assignment[i];
        if ((g.is_leader() && g.leader == k) || (!g.is_leader() && sc.partition.follower_subsystem[i] == k)) {
            sub.original_ids.push_back(i);
        }
    }
    Scenario& s = sub.scenario;
    s.dimension = sc.dimension;
    s.epsilon = sc.epsilon;
    s.engine = sc.engine;
    s.targets = {sc.targets[k]};
    const std::size_t n = sub.original_ids.size();
    auto& p = s.partition;
    p.assignment.resize(n);
    p.leaders.resize(1);
    p.leader_names = {sc.partition.leader_names[k]};
    p.follower_block_names = sc.partition.follower_block_names;
    p.follower_block.assign(n, 0);
    p.follower_subsystem.assign(n, 0);
    std::vector<double> values;
    values.reserve(n * sc.dimension);
    s.leader_schedule.resize(n);
    s.follower_schedule.resize(n);
    for (AgentId local = 0; local < n; ++local) {
        const AgentId orig = sub.original_ids[local];
        const GroupId g = sc.partition.assignment[orig];
        const auto row = sc.initial_state.row(orig);
        values.insert(values.end(), row.begin(), row.end());
        if (g.is_leader()) {
            p.assignment[local] = GroupId::leader_group(0);
            p.leaders[0].push_back(local);
            s.leader_schedule[local] = sc.leader_schedule[orig].pinned_to(orig);
        } else {
            p.assignment[local] = GroupId::follower();
            p.followers.push_back(local);
            p.follower_block[local] = sc.partition.follower_block[orig];
            s.follower_schedule[local] = {sc.follower_schedule[orig][k].pinned_to(orig)};
        }
    }
    s.initial_state = SystemState(0, sc.dimension, std::move(values));
    return sub;
}

/// Counts follower neighbors that belong to another subsystem.
inline std::size_t count_cross_neighbors(const NeighborSets& nb, const Scenario& sc) {
    std::size_t cross = 0;
    for (AgentId i : sc.partition.followers) {
        const std::size_t own = sc.partition.follower_subsystem[i];
        for (AgentId j : nb.follower_neighbors(i)) {
            if (sc.partition.follower_subsystem[j] != own) ++cross;
        }
        for (std::size_t k = 0; k < sc.group_count(); ++k) {
            if (k != own) cross += nb.leader_neighbors(i, k).size();
        }
    }
    return cross;
}

/// Runs every subsystem on its own and checks each reaches its target, and
/// checks the joint run never linked two subsystems.
inline TheoremReport check_corollary_subsystems(const Trajectory& joint, const Scenario& sc,
                                                const ConsensusOptions& opts = {}) {
    detail::require_dense(joint);
    TheoremReport rep;
    rep.name = "cor2";
    const std::size_t m = sc.group_count();
    if (m == 0) {
        rep.mark_inapplicable(CheckError::inapplicable_hypothesis, "needs at least one leader group");
        return rep;
    }
    Scenario assigned = sc;
    for (AgentId i : assigned.partition.followers) {
        auto& sub = assigned.partition.follower_subsystem[i];
        if (sub == kNoSubsystem) {
            if (m != 1) {
                rep.mark_inapplicable(CheckError::inapplicable_hypothesis,
                                      "follower " + std::to_string(i) + " is not assigned to a subsystem");
                return rep;
            }
            sub = 0;
        }
    }

    std::size_t cross_total = 0;
    std::size_t cross_steps = 0;
    for (const auto& state : joint.states) {
        const std::size_t cross = count_cross_neighbors(neighbors_naive(state, assigned), assigned);
        cross_total += cross;
        if (cross > 0) ++cross_steps;
    }
    rep.parameters["cross_neighbors"] = static_cast<double>(cross_total);
    rep.parameters["cross_steps"] = static_cast<double>(cross_steps);
    if (cross_total > 0) {
        rep.mark_inapplicable(CheckError::cross_talk, "subsystems interacted in the joint run");
        return rep;
    }

    RunOptions run_opts = RunOptions::from(sc);
    run_opts.horizon = joint.final_t;
    run_opts.stop = {};
    run_opts.record_every = 1;
    const auto& joint_last = joint.final_state();
    for (std::size_t k = 0; k < m; ++k) {
        const Subsystem sub = extract_subsystem(assigned, k);
        const Trajectory traj = run(sub.scenario, run_opts);
        const std::string prefix = "sub" + std::to_string(k) + ".";
        TheoremReport part = check_theorem_consensus(traj, sub.scenario, opts);
        for (auto& r : part.records) {
            if (r.agent != kNoAgent) r.agent = sub.original_ids[r.agent];
        }
        rep.merge(part, prefix);
        if (!rep.applicable()) return rep;
        const auto g = sc.targets[k].coords();
        for (AgentId local = 0; local < sub.original_ids.size(); ++local) {
            const AgentId orig = sub.original_ids[local];
            rep.add(joint.final_t, orig, "joint_final", distance(joint_last.row(orig), g), opts.consensus_tol, 0.0);
        }
    }
    return rep.finalize();
}

// ---------------------------------------------------------------------------

struct ConvergenceReport {
    bool converged = false;
    std::optional<std::size_t> first_step;
    SystemState limit;
};

/// Converged at t when the displacements of the `window` steps ending at t
/// are all <= tol. States must be consecutive in time.
inline ConvergenceReport detect_convergence(std::span<const SystemState> states, double tol, std::size_t window) {
    if (window == 0) throw std::invalid_argument("window must be >= 1");
    ConvergenceReport rep;
    if (states.empty()) return rep;
    rep.limit = states.back();
    std::size_t run_length = 0;
    for (std::size_t s = 1; s < states.size(); ++s) {
        run_length = max_displacement(states[s - 1], states[s]) <= tol ? run_length + 1 : 0;
        if (run_length >= window) {
            rep.converged = true;
            rep.first_step = states[s].t();
            break;
        }
    }
    return rep;
}

}  // namespace lfmix

#endif
