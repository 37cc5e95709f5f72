#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "test_support.hpp"

using namespace lfmix;
using namespace lfmix::testing;

namespace {

Trajectory dense_run(const Scenario& sc, std::size_t horizon, Fault fault = Fault::none) {
    RunOptions o = RunOptions::from(sc);
    o.horizon = horizon;
    o.record_every = 1;
    o.stop = {};
    o.step.fault = fault;
    return run(sc, o);
}

Scenario consensus_demo() {
    ScalarSetup s;
    s.opinions = {0.3, 0.1};
    s.followers = {0};
    s.leaders = {{0.0, {1}}};
    s.alpha = 0.5;
    s.beta = {0.5};
    s.epsilon = 1.0;
    return s.build();
}

Scenario mixture_scenario(double eps) {
    ScalarSetup s;
    s.opinions = {0.2, 0.5, 0.9, 0.1, 0.3, 0.8, 0.95};
    s.followers = {0, 1, 2};
    s.leaders = {{0.0, {3, 4}}, {1.0, {5, 6}}};
    s.alpha = 0.5;
    s.beta = {0.2, 0.2};
    s.epsilon = eps;
    return s.build();
}

Scenario two_subsystems(double low_target, double high_target, double eps) {
    RawConfig c;
    c.dimension = 1;
    c.epsilon = eps;
    c.groups = {follower_group("Fa", {0, 1}, "La"), follower_group("Fb", {2, 3}, "Lb"),
                leader_group("La", {low_target}, {4}), leader_group("Lb", {high_target}, {5})};
    c.initial = std::vector<std::vector<double>>{{low_target + 0.08}, {low_target - 0.05}, {high_target + 0.1},
                                                 {high_target - 0.07}, {low_target + 0.02}, {high_target - 0.04}};
    c.schedules = {group_degree("La", ConstantDegree{0.5}), group_degree("Lb", ConstantDegree{0.5}),
                   group_degree("Fa", ConstantDegree{0.5}, "La"), group_degree("Fb", ConstantDegree{0.5}, "Lb")};
    return must_build(c);
}

}  // namespace

// ---------------------------------------------------------------------------
// Metrics

TEST(MaxTargetDistance, LeadersAtTarget) {
    ScalarSetup s;
    s.opinions = {0.7, 0.7};
    s.leaders = {{0.7, {0, 1}}};
    const Scenario sc = s.build();
    EXPECT_EQ(max_target_distance(sc.initial_state, sc, 0), 0.0);
}

TEST(MaxTargetDistance, LargestOfTwo) {
    ScalarSetup s;
    s.opinions = {0.2, 0.4};
    s.leaders = {{0.0, {0, 1}}};
    const Scenario sc = s.build();
    EXPECT_EQ(max_target_distance(sc.initial_state, sc, 0), std::max(std::fabs(0.2), std::fabs(0.4)));
}

TEST(MaxTargetDistance, OffsetAlongFirstAxis) {
    RawConfig c;
    c.dimension = 3;
    c.epsilon = 1.0;
    c.groups = {leader_group("L", {1.0, -2.0, 0.5}, {0})};
    c.initial = std::vector<std::vector<double>>{{1.25, -2.0, 0.5}};
    const Scenario sc = must_build(c);
    EXPECT_EQ(max_target_distance(sc.initial_state, sc, 0), 0.25);
}

TEST(Metrics, RowContents) {
    const Scenario sc = consensus_demo();
    const MetricsRow row = compute_metrics(sc.initial_state, sc);
    ASSERT_EQ(row.target_distance.size(), 1u);
    EXPECT_EQ(row.target_distance[0], 0.1);
    EXPECT_EQ(*row.follower_distance, 0.3);
    EXPECT_EQ(row.diameter, 0.3 - 0.1);
    EXPECT_EQ(*row.max_alpha, 0.5);
    EXPECT_EQ(*row.max_one_minus_beta_sum, 0.5);
}

TEST(Metrics, DiameterMatchesPairwiseOracle) {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 30; ++trial) {
        const Scenario sc = random_scenario(rng);
        const auto& s = sc.initial_state;
        double oracle = 0.0;
        for (AgentId i = 0; i < s.agent_count(); ++i) {
            for (AgentId j = 0; j < s.agent_count(); ++j) {
                double acc = 0.0;
                for (std::size_t c = 0; c < s.dim(); ++c) acc += (s.row(i)[c] - s.row(j)[c]) * (s.row(i)[c] - s.row(j)[c]);
                oracle = std::max(oracle, std::sqrt(acc));
            }
        }
        EXPECT_NEAR(opinion_diameter(s), oracle, 1e-12);
        EXPECT_NEAR(opinion_diameter(s, 3), oracle, 1e-12);
    }
}

// ---------------------------------------------------------------------------
// Contraction

TEST(LemmaContraction, PairExampleSlack) {
    ScalarSetup s;
    s.opinions = {0.2, 0.4};
    s.leaders = {{0.0, {0, 1}}};
    s.alpha = 0.5;
    const Scenario sc = s.build();
    const StepResult r = step(sc.initial_state, sc);
    const TheoremReport rep = check_lemma_contraction(sc.initial_state, r.next, r.neighbors, r.degrees.alpha, sc);
    EXPECT_TRUE(rep.passed());
    // both agents: lhs = 0.15, rhs = 0.5 * 0.4
    for (const auto& rec : rep.records) {
        EXPECT_NEAR(rec.lhs, 0.15, 1e-15);
        EXPECT_NEAR(rec.rhs, 0.2, 1e-15);
        EXPECT_NEAR(rec.slack, 0.05, 1e-15);
    }
}

TEST(LemmaContraction, ZeroAlphaGivesZeroBothSides) {
    ScalarSetup s;
    s.opinions = {0.2, 0.4};
    s.leaders = {{0.0, {0, 1}}};
    s.alpha = 0.0;
    const Scenario sc = s.build();
    const StepResult r = step(sc.initial_state, sc);
    const TheoremReport rep = check_lemma_contraction(sc.initial_state, r.next, r.neighbors, r.degrees.alpha, sc);
    EXPECT_TRUE(rep.passed());
    for (const auto& rec : rep.records) {
        EXPECT_EQ(rec.lhs, 0.0);
        EXPECT_EQ(rec.rhs, 0.0);
    }
}

TEST(LemmaContraction, RandomSweepAndMonotoneDistance) {
    std::mt19937_64 rng(32);
    for (int trial = 0; trial < 60; ++trial) {
        const Scenario sc = random_scenario(rng);
        const Trajectory traj = dense_run(sc, 40);
        const TheoremReport rep = check_lemma_contraction(traj, sc);
        EXPECT_TRUE(rep.passed()) << "trial " << trial << " worst " << rep.worst_slack();
        EXPECT_TRUE(check_target_distance_monotone(traj, sc).passed());
    }
}

TEST(LemmaContraction, MeanShiftFaultIsCaught) {
    ScalarSetup s;
    s.opinions = {0.2, 0.4};
    s.leaders = {{0.0, {0, 1}}};
    s.alpha = 0.5;
    const Scenario sc = s.build();
    const Trajectory traj = dense_run(sc, 30, Fault::mean_shift);
    EXPECT_EQ(check_lemma_contraction(traj, sc).status, CheckStatus::failed);
}

// ---------------------------------------------------------------------------
// Target convergence

TEST(TheoremTarget, HalvingEnvelopeIsTight) {
    ScalarSetup s;
    s.opinions = {1.0};
    s.leaders = {{0.0, {0}}};
    s.alpha = 0.5;
    const Scenario sc = s.build();
    const Trajectory traj = dense_run(sc, 40);
    TargetCheckOptions o;
    o.envelope_tol = 0.0;
    const TheoremReport rep = check_theorem_target(traj, sc, 0, 0.5, o);
    EXPECT_TRUE(rep.passed());
    for (const auto& rec : rep.records) {
        if (rec.clause == "envelope") {
            EXPECT_EQ(rec.slack, 0.0);
        }
    }
}

TEST(TheoremTarget, RequiredStepsForNinetyPercent) {
    // oracle: smallest T with 0.9^T <= 1e-9, by repeated multiplication
    std::size_t oracle = 0;
    for (double c = 1.0; c > 1e-9; c *= 0.9) ++oracle;
    EXPECT_EQ(oracle, 197u);
    EXPECT_EQ(steps_to_reach(1.0, 0.9, 1e-9), oracle);

    ScalarSetup s;
    s.opinions = {1.0};
    s.leaders = {{0.0, {0}}};
    s.alpha = 0.9;
    const Scenario sc = s.build();
    const TheoremReport rep = check_theorem_target(dense_run(sc, 197), sc, 0, 0.9);
    EXPECT_TRUE(rep.passed());
    EXPECT_EQ(rep.parameters.at("certified"), 1.0);
}

TEST(TheoremTarget, StartingAtTargetStaysAtZero) {
    ScalarSetup s;
    s.opinions = {0.3, 0.3};
    s.leaders = {{0.3, {0, 1}}};
    s.alpha = 0.7;
    const Scenario sc = s.build();
    const Trajectory traj = dense_run(sc, 10);
    for (const auto& st : traj.states) EXPECT_EQ(max_target_distance(st, sc, 0), 0.0);
    EXPECT_TRUE(check_theorem_target(traj, sc, 0, 0.7).passed());
}

TEST(TheoremTarget, DeltaBelowAlphaIsInapplicable) {
    ScalarSetup s;
    s.opinions = {1.0};
    s.leaders = {{0.0, {0}}};
    s.alpha = 0.8;
    const Scenario sc = s.build();
    const TheoremReport rep = check_theorem_target(dense_run(sc, 10), sc, 0, 0.5);
    EXPECT_EQ(rep.status, CheckStatus::inapplicable);
    EXPECT_EQ(rep.error, CheckError::inapplicable_hypothesis);
}

TEST(TheoremTarget, SubsequenceEnvelopeWithAlternatingTable) {
    RawConfig c = ScalarSetup{{1.0, 0.6}, {}, {{0.0, {0, 1}}}}.raw();
    std::vector<double> table;
    for (int i = 0; i < 60; ++i) table.push_back(i % 2 == 0 ? 1.0 : 0.6);
    c.schedules = {group_degree("L0", TableDegree{table})};
    const Scenario sc = must_build(c);
    const Trajectory traj = dense_run(sc, 60);
    EXPECT_EQ(check_theorem_target(traj, sc, 0, 0.6).status, CheckStatus::inapplicable);
    TargetCheckOptions o;
    o.mode = EnvelopeMode::subsequence;
    const TheoremReport rep = check_theorem_target(traj, sc, 0, 0.6, o);
    EXPECT_TRUE(rep.passed());
    EXPECT_EQ(rep.parameters.at("contracting_steps"), 30.0);
}

TEST(TheoremTarget, DecayingAgentReachesTargetAmongStubbornPeers) {
    RawConfig c = ScalarSetup{{0.8, 0.5, 0.9}, {}, {{0.0, {0, 1, 2}}}}.raw();
    c.epsilon = 1.0;
    c.schedules = {group_degree("L0", ConstantDegree{1.0}), agent_degree(1, GeometricDecayDegree{1.0, 0.5})};
    const Scenario sc = must_build(c);
    // oracle horizon: ||x_i(T)|| <= prod_{s<T} alpha_i(s) * C_0 once the product is tiny
    double c0 = 0.9, prod = 1.0;
    std::size_t horizon = 0;
    while (prod * c0 > 1e-6) prod *= std::pow(0.5, static_cast<double>(horizon++));
    EXPECT_LE(horizon, 60u);
    const TheoremReport rep = check_leader_agent_target(dense_run(sc, 60), sc, 1);
    EXPECT_TRUE(rep.passed()) << rep.worst_slack();
}

// ---------------------------------------------------------------------------
// Ball invariance

TEST(BallInvariance, StartInsideStaysInside) {
    const Scenario sc = consensus_demo();
    const TheoremReport rep = check_ball_invariance(dense_run(sc, 50), sc.targets[0], 0.5);
    EXPECT_TRUE(rep.passed());
    EXPECT_EQ(rep.parameters.at("t0"), 0.0);
}

TEST(BallInvariance, NeverEnteredIsVacuous) {
    ScalarSetup s;
    s.opinions = {5.0, 0.0};
    s.followers = {0};
    s.leaders = {{0.0, {1}}};
    const Scenario sc = s.build();
    const TheoremReport rep = check_ball_invariance(dense_run(sc, 20), sc.targets[0], 1.0);
    EXPECT_TRUE(rep.passed());
    EXPECT_TRUE(rep.records.empty());
    EXPECT_EQ(rep.parameters.at("t0"), -1.0);
}

TEST(BallInvariance, DetectsEscape) {
    std::vector<SystemState> states{SystemState(0, 1, std::vector<double>{0.1}), SystemState(1, 1, std::vector<double>{0.3}), SystemState(2, 1, std::vector<double>{0.9})};
    Trajectory traj;
    traj.states = states;
    traj.final_t = 2;
    const TheoremReport rep = check_ball_invariance(traj, OpinionVec{0.0}, 0.5);
    EXPECT_EQ(rep.status, CheckStatus::failed);
    EXPECT_EQ(rep.failure_count(), 1u);
}

TEST(BallInvariance, RandomSingleGroupDraws) {
    std::mt19937_64 rng(33);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 25; ++trial) {
        const std::size_t d = 1 + trial % 3;
        const double eps = 0.5;
        const double delta = 0.9 * eps;
        RawConfig c;
        c.dimension = static_cast<std::int64_t>(d);
        c.epsilon = eps;
        c.groups = {follower_group("F", {0, 1, 2, 3, 4, 5}), leader_group("L", std::vector<double>(d, 0.0), {6, 7, 8})};
        std::vector<std::vector<double>> init;
        while (init.size() < 9) {
            std::vector<double> x(d);
            for (double& v : x) v = u(rng) * delta;
            if (distance(x, std::vector<double>(d, 0.0)) <= delta) init.push_back(x);
        }
        c.initial = init;
        c.schedules = {group_degree("L", SeededRandomDegree{rng(), 0.0, 1.0}),
                       group_degree("F", SeededRandomDegree{rng(), 0.0, 1.0}, "L")};
        const Scenario sc = must_build(c);
        const TheoremReport rep = check_ball_invariance(dense_run(sc, 100), sc.targets[0], delta);
        EXPECT_TRUE(rep.passed());
        EXPECT_EQ(rep.parameters.at("t0"), 0.0);
    }
}

// ---------------------------------------------------------------------------
// Consensus

TEST(TheoremConsensus, DemoMatchesHandRecurrence) {
    const Scenario sc = consensus_demo();
    const Trajectory traj = dense_run(sc, 60);
    double xf = 0.3, xl = 0.1;
    for (std::size_t t = 0; t <= 60; ++t) {
        EXPECT_NEAR(traj.states[t].row(0)[0], xf, 1e-15);
        EXPECT_NEAR(traj.states[t].row(1)[0], xl, 1e-15);
        const double nf = 0.5 * xf + 0.5 * xl;
        xl = 0.5 * xl;
        xf = nf;
    }
    const TheoremReport rep = check_theorem_consensus(traj, sc);
    EXPECT_TRUE(rep.passed()) << rep.worst_slack();
    EXPECT_EQ(rep.parameters.at("gamma"), 0.5);
    EXPECT_EQ(rep.parameters.at("p"), 0.0);
}

TEST(TheoremConsensus, FixedPointAtTarget) {
    ScalarSetup s;
    s.opinions = {0.0, 0.0};
    s.followers = {0};
    s.leaders = {{0.0, {1}}};
    s.alpha = 0.5;
    s.beta = {0.5};
    const Scenario sc = s.build();
    const TheoremReport rep = check_theorem_consensus(dense_run(sc, 5), sc);
    EXPECT_TRUE(rep.passed());
    for (const auto& rec : rep.records) EXPECT_EQ(rec.lhs, 0.0);
}

TEST(TheoremConsensus, ZeroBetaIsInapplicable) {
    ScalarSetup s;
    s.opinions = {0.3, 0.1};
    s.followers = {0};
    s.leaders = {{0.0, {1}}};
    s.alpha = 0.5;
    s.beta = {0.0};
    const Scenario sc = s.build();
    const TheoremReport rep = check_theorem_consensus(dense_run(sc, 20), sc);
    EXPECT_EQ(rep.status, CheckStatus::inapplicable);
    EXPECT_EQ(rep.error, CheckError::inapplicable_hypothesis);
}

TEST(TheoremConsensus, MeanShiftFaultIsCaught) {
    const Scenario sc = consensus_demo();
    EXPECT_EQ(check_theorem_consensus(dense_run(sc, 60, Fault::mean_shift), sc).status, CheckStatus::failed);
}

// ---------------------------------------------------------------------------
// Mixture limit

TEST(CorollaryMixture, TwoTargetsEqualWeights) {
    const Scenario sc = mixture_scenario(1.5);
    const auto limit = predicted_mixture_limit(sc, 0, 0);
    ASSERT_TRUE(limit.has_value());
    // 0.2 / 0.4 * 0 + 0.2 / 0.4 * 1
    EXPECT_EQ((*limit)[0], 0.5);
    const TheoremReport rep = check_corollary_mixture(dense_run(sc, 200), sc);
    EXPECT_TRUE(rep.passed()) << rep.note << " " << rep.worst_slack();
    for (const auto& rec : rep.records) EXPECT_LE(rec.lhs, 1e-6);
}

TEST(CorollaryMixture, SingleGroupCollapsesToTarget) {
    const Scenario sc = consensus_demo();
    const auto limit = predicted_mixture_limit(sc, 0, 0);
    ASSERT_TRUE(limit.has_value());
    EXPECT_EQ(*limit, sc.targets[0]);
    EXPECT_TRUE(check_corollary_mixture(dense_run(sc, 60), sc).passed());
}

TEST(CorollaryMixture, AllZeroBetaIsUndefined) {
    ScalarSetup s;
    s.opinions = {0.2, 0.1, 0.9};
    s.followers = {0};
    s.leaders = {{0.0, {1}}, {1.0, {2}}};
    s.alpha = 0.5;
    s.beta = {0.0, 0.0};
    s.epsilon = 1.5;
    const Scenario sc = s.build();
    EXPECT_FALSE(predicted_mixture_limit(sc, 0, 0).has_value());
    const TheoremReport rep = check_corollary_mixture(dense_run(sc, 20), sc);
    EXPECT_EQ(rep.error, CheckError::undefined_limit);
    EXPECT_FALSE(rep.applicable());
}

TEST(CorollaryMixture, SmallEpsilonFailsHypothesisGate) {
    const Scenario sc = mixture_scenario(0.9);
    const TheoremReport rep = check_corollary_mixture(dense_run(sc, 50), sc);
    EXPECT_EQ(rep.status, CheckStatus::inapplicable);
}

TEST(CorollaryMixture, UnsettledBetaIsInapplicable) {
    RawConfig c = ScalarSetup{{0.2, 0.1}, {0}, {{0.0, {1}}}}.raw();
    c.schedules = {group_degree("F", SeededRandomDegree{5, 0.2, 0.8}, "L0")};
    const Scenario sc = must_build(c);
    const TheoremReport rep = check_corollary_mixture(dense_run(sc, 30), sc);
    EXPECT_EQ(rep.status, CheckStatus::inapplicable);
    EXPECT_NE(rep.note.find("stabilized"), std::string::npos);
}

// ---------------------------------------------------------------------------
// Subsystems

TEST(CorollarySubsystems, SeparatedTargetsConverge) {
    const Scenario sc = two_subsystems(0.0, 10.0, 1.0);
    const Trajectory joint = dense_run(sc, 80);
    const TheoremReport rep = check_corollary_subsystems(joint, sc);
    EXPECT_TRUE(rep.passed()) << rep.note;
    EXPECT_EQ(rep.parameters.at("cross_neighbors"), 0.0);
    for (AgentId i : {0, 1, 4}) EXPECT_LE(std::fabs(joint.final_state().row(i)[0] - 0.0), 1e-6);
    for (AgentId i : {2, 3, 5}) EXPECT_LE(std::fabs(joint.final_state().row(i)[0] - 10.0), 1e-6);
}

TEST(CorollarySubsystems, ExtractedSubsystemMatchesJointRows) {
    const Scenario sc = two_subsystems(0.0, 10.0, 1.0);
    const Trajectory joint = dense_run(sc, 30);
    for (std::size_t k = 0; k < 2; ++k) {
        const Subsystem sub = extract_subsystem(sc, k);
        const Trajectory part = dense_run(sub.scenario, 30);
        for (std::size_t local = 0; local < sub.original_ids.size(); ++local) {
            EXPECT_EQ(part.final_state().row(local)[0], joint.final_state().row(sub.original_ids[local])[0]);
        }
    }
}

TEST(CorollarySubsystems, SingleSubsystemReducesToConsensus) {
    const Scenario sc = consensus_demo();
    const Trajectory traj = dense_run(sc, 60);
    const TheoremReport cor = check_corollary_subsystems(traj, sc);
    const TheoremReport thm = check_theorem_consensus(traj, sc);
    EXPECT_TRUE(cor.passed());
    EXPECT_TRUE(thm.passed());
    EXPECT_EQ(cor.parameters.at("sub0.gamma"), thm.parameters.at("gamma"));
}

TEST(CorollarySubsystems, OverlappingSubsystemsReportCrossTalk) {
    const Scenario sc = two_subsystems(0.0, 1.0, 5.0);
    const TheoremReport rep = check_corollary_subsystems(dense_run(sc, 10), sc);
    EXPECT_EQ(rep.error, CheckError::cross_talk);
    EXPECT_GT(rep.parameters.at("cross_neighbors"), 0.0);
}

// ---------------------------------------------------------------------------
// Convergence detection

TEST(DetectConvergence, ConstantTrajectory) {
    std::vector<SystemState> states;
    for (std::size_t t = 0; t < 10; ++t) states.emplace_back(t, 1, std::vector<double>{0.4});
    for (std::size_t w : {1u, 3u, 5u}) {
        const auto rep = detect_convergence(states, 1e-12, w);
        EXPECT_TRUE(rep.converged);
        EXPECT_EQ(*rep.first_step, w);
    }
}

TEST(DetectConvergence, HalvingSequence) {
    std::vector<SystemState> states;
    for (std::size_t t = 0; t <= 60; ++t) states.emplace_back(t, 1, std::vector<double>{std::ldexp(1.0, -static_cast<int>(t))});
    // oracle: first t whose step |x_t - x_{t-1}| = 0.5^t is <= 1e-9
    std::size_t oracle = 1;
    while (std::ldexp(1.0, -static_cast<int>(oracle)) > 1e-9) ++oracle;
    const auto rep = detect_convergence(states, 1e-9, 1);
    ASSERT_TRUE(rep.converged);
    EXPECT_EQ(*rep.first_step, oracle);
    EXPECT_EQ(*rep.first_step, 30u);
}

TEST(DetectConvergence, TwoCycleNeverConverges) {
    std::vector<SystemState> states;
    for (std::size_t t = 0; t < 50; ++t) states.emplace_back(t, 1, std::vector<double>{t % 2 == 0 ? 0.0 : 0.01});
    const auto rep = detect_convergence(states, 1e-6, 1);
    EXPECT_FALSE(rep.converged);
    EXPECT_FALSE(rep.first_step.has_value());
}

TEST(TheoremReport, StatusFollowsSlack) {
    TheoremReport rep;
    rep.add(0, kNoAgent, "x", 1.0, 1.0 - 1e-10, 1e-9);
    EXPECT_TRUE(rep.finalize().passed());
    rep.add(1, kNoAgent, "x", 1.0, 0.9, 1e-9);
    EXPECT_EQ(rep.finalize().status, CheckStatus::failed);
    EXPECT_EQ(rep.failure_count(), 1u);
    EXPECT_NEAR(rep.worst_slack(), -0.1, 1e-15);
}
