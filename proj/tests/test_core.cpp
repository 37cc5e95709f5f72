#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "test_support.hpp"

using namespace lfmix;
using namespace lfmix::testing;

namespace {

bool has_code(const BuildResult& r, ErrorCode c) {
    return std::any_of(r.errors.begin(), r.errors.end(), [&](const ValidationError& e) { return e.code == c; });
}

RawConfig two_agent_config() {
    ScalarSetup s;
    s.opinions = {0.3, 0.1};
    s.followers = {0};
    s.leaders = {{0.0, {1}}};
    s.alpha = 0.5;
    s.beta = {0.5};
    return s.raw();
}

}  // namespace

TEST(OpinionVec, RejectsNonFiniteCoordinates) {
    EXPECT_THROW(OpinionVec({1.0, std::nan("")}), std::invalid_argument);
    EXPECT_THROW(OpinionVec({std::numeric_limits<double>::infinity()}), std::invalid_argument);
    EXPECT_NO_THROW(OpinionVec({0.0, -3.5}));
}

TEST(Distance, ThreeFourFive) { EXPECT_EQ(distance(OpinionVec{0, 0}, OpinionVec{3, 4}), 5.0); }

TEST(Distance, SelfIsZero) {
    const OpinionVec x{0.25, -1.5, 7.0};
    EXPECT_EQ(distance(x, x), 0.0);
}

TEST(Distance, ScalarDifference) {
    // |0.4 - 0.2| computed directly
    const double expected = std::fabs(0.4 - 0.2);
    EXPECT_DOUBLE_EQ(distance(OpinionVec{0.2}, OpinionVec{0.4}), expected);
    EXPECT_NEAR(distance(OpinionVec{0.2}, OpinionVec{0.4}), 0.2, 1e-15);
}

TEST(Distance, DimensionMismatchThrows) {
    EXPECT_THROW(distance(OpinionVec{0.0}, OpinionVec{0.0, 1.0}), DimensionMismatch);
}

TEST(Distance, SymmetricAndTriangleInequality) {
    std::mt19937_64 rng(42);
    std::normal_distribution<double> n(0.0, 10.0);
    for (int trial = 0; trial < 2000; ++trial) {
        const std::size_t d = 1 + trial % 6;
        std::vector<double> a(d), b(d), c(d);
        for (std::size_t i = 0; i < d; ++i) a[i] = n(rng), b[i] = n(rng), c[i] = n(rng);
        const double ab = distance(a, b), bc = distance(b, c), ac = distance(a, c);
        EXPECT_EQ(ab, distance(b, a));
        EXPECT_GE(ab, 0.0);
        EXPECT_LE(ac, (ab + bc) * (1.0 + 1e-12));
    }
}

TEST(SystemState, RowsAndFiniteness) {
    SystemState s(3, 2, {1, 2, 3, 4});
    EXPECT_EQ(s.t(), 3u);
    EXPECT_EQ(s.agent_count(), 2u);
    EXPECT_EQ(s.opinion(1), (OpinionVec{3, 4}));
    EXPECT_TRUE(s.all_finite());
    s.row(0)[1] = std::nan("");
    EXPECT_FALSE(s.all_finite());
}

// ---------------------------------------------------------------------------
// Degree schedules

TEST(DegreeSchedule, ConstantIsPure) {
    const auto s = DegreeSchedule::constant(0.3);
    EXPECT_EQ(s(0, 0), 0.3);
    EXPECT_EQ(s(17, 1000), 0.3);
    EXPECT_TRUE(s.time_invariant());
}

TEST(DegreeSchedule, TableHoldsFinalValue) {
    const DegreeSchedule s(TableDegree{{1.0, 0.5, 0.25}});
    EXPECT_EQ(s(0, 0), 1.0);
    EXPECT_EQ(s(0, 1), 0.5);
    EXPECT_EQ(s(0, 2), 0.25);
    EXPECT_EQ(s(0, 3), 0.25);
    EXPECT_EQ(s(0, 99), 0.25);
    EXPECT_FALSE(s.time_invariant());
}

TEST(DegreeSchedule, GeometricDecayClampsToUnitInterval) {
    const DegreeSchedule s(GeometricDecayDegree{1.0, 0.5});
    for (std::uint64_t t = 0; t < 20; ++t) EXPECT_DOUBLE_EQ(s(0, t), std::pow(0.5, static_cast<double>(t)));
    const DegreeSchedule grow(GeometricDecayDegree{0.5, 2.0});
    EXPECT_EQ(grow(0, 0), 0.5);
    EXPECT_EQ(grow(0, 1), 1.0);
    EXPECT_EQ(grow(0, 5), 1.0);
}

TEST(DegreeSchedule, SeededRandomIsDeterministicAndInRange) {
    const DegreeSchedule s(SeededRandomDegree{99, 0.2, 0.4});
    const DegreeSchedule same(SeededRandomDegree{99, 0.2, 0.4});
    const DegreeSchedule other(SeededRandomDegree{100, 0.2, 0.4});
    int differ = 0;
    for (AgentId i = 0; i < 20; ++i) {
        for (std::uint64_t t = 0; t < 50; ++t) {
            const double v = s(i, t);
            EXPECT_GE(v, 0.2);
            EXPECT_LE(v, 0.4);
            EXPECT_EQ(v, same(i, t));
            if (v != other(i, t)) ++differ;
        }
    }
    EXPECT_GT(differ, 900);
}

TEST(DegreeSchedule, RangeErrors) {
    EXPECT_FALSE(DegreeSchedule(ConstantDegree{1.5}).range_errors().empty());
    EXPECT_FALSE(DegreeSchedule(ConstantDegree{-0.1}).range_errors().empty());
    EXPECT_FALSE(DegreeSchedule(TableDegree{{0.5, 2.0}}).range_errors().empty());
    EXPECT_FALSE(DegreeSchedule(SeededRandomDegree{1, 0.5, 0.2}).range_errors().empty());
    EXPECT_FALSE(DegreeSchedule(GeometricDecayDegree{0.5, -1.0}).range_errors().empty());
    EXPECT_TRUE(DegreeSchedule(ConstantDegree{1.0}).range_errors().empty());
    EXPECT_TRUE(DegreeSchedule(TableDegree{{0.0, 1.0}}).range_errors().empty());
}

// ---------------------------------------------------------------------------
// Scenario validation

TEST(BuildScenario, WellFormedTwoAgentConfig) {
    const auto r = build_scenario(two_agent_config());
    ASSERT_TRUE(r.ok());
    EXPECT_EQ(r.scenario->agent_count(), 2u);
    EXPECT_EQ(r.scenario->group_count(), 1u);
    EXPECT_EQ(r.scenario->partition.followers, std::vector<AgentId>{0});
    EXPECT_EQ(r.scenario->partition.leaders[0], std::vector<AgentId>{1});
    EXPECT_EQ(r.scenario->alpha(1, 0), 0.5);
}

TEST(BuildScenario, ZeroEpsilonRejected) {
    auto raw = two_agent_config();
    raw.epsilon = 0.0;
    const auto r = build_scenario(raw);
    EXPECT_FALSE(r.ok());
    EXPECT_TRUE(has_code(r, ErrorCode::epsilon_nonpositive));
}

TEST(BuildScenario, BetaSumAboveOneRejected) {
    ScalarSetup s;
    s.opinions = {0.0, 0.1, 0.2};
    s.followers = {0};
    s.leaders = {{0.0, {1}}, {1.0, {2}}};
    s.beta = {0.6, 0.6};
    const auto r = build_scenario(s.raw());
    EXPECT_FALSE(r.ok());
    EXPECT_TRUE(has_code(r, ErrorCode::beta_sum_exceeds_one));
}

TEST(BuildScenario, BetaSumCheckedOverTableTransient) {
    auto raw = ScalarSetup{{0.0, 0.1, 0.2}, {0}, {{0.0, {1}}, {1.0, {2}}}}.raw();
    raw.schedules.push_back(group_degree("F", TableDegree{{0.1, 0.9, 0.1}}, "L0"));
    raw.schedules.push_back(group_degree("F", TableDegree{{0.5, 0.5, 0.1}}, "L1"));
    EXPECT_TRUE(has_code(build_scenario(raw), ErrorCode::beta_sum_exceeds_one));
    raw.schedules[1].spec = TableDegree{{0.5, 0.1, 0.9}};
    EXPECT_TRUE(build_scenario(raw).ok());
}

TEST(BuildScenario, SeededRandomBetaUsesUpperBound) {
    auto raw = ScalarSetup{{0.0, 0.1, 0.2}, {0}, {{0.0, {1}}, {1.0, {2}}}}.raw();
    raw.schedules.push_back(group_degree("F", SeededRandomDegree{1, 0.1, 0.6}, "L0"));
    raw.schedules.push_back(group_degree("F", SeededRandomDegree{2, 0.1, 0.6}, "L1"));
    EXPECT_TRUE(has_code(build_scenario(raw), ErrorCode::beta_sum_exceeds_one));
}

TEST(BuildScenario, DegreeOutOfRange) {
    auto raw = two_agent_config();
    raw.schedules.push_back(agent_degree(1, ConstantDegree{1.2}));
    EXPECT_TRUE(has_code(build_scenario(raw), ErrorCode::degree_out_of_range));
}

TEST(BuildScenario, TargetDimensionMismatch) {
    auto raw = two_agent_config();
    raw.groups[1].target = {0.0, 0.0};
    EXPECT_TRUE(has_code(build_scenario(raw), ErrorCode::dimension_mismatch));
}

TEST(BuildScenario, InitialRowDimensionMismatch) {
    auto raw = two_agent_config();
    raw.initial = std::vector<std::vector<double>>{{0.3}, {0.1, 0.2}};
    EXPECT_TRUE(has_code(build_scenario(raw), ErrorCode::dimension_mismatch));
}

TEST(BuildScenario, PartitionGapsAndOverlaps) {
    auto raw = two_agent_config();
    raw.groups[1].ids = {0};  // both groups claim agent 0, agent 1 unclaimed
    EXPECT_TRUE(has_code(build_scenario(raw), ErrorCode::partition_incomplete));

    raw = two_agent_config();
    raw.groups[1].ids = {5};
    EXPECT_TRUE(has_code(build_scenario(raw), ErrorCode::partition_incomplete));
}

TEST(BuildScenario, EmptyLeaderGroupRejected) {
    auto raw = two_agent_config();
    raw.groups.push_back(leader_group("Lx", {1.0}, {}));
    EXPECT_TRUE(has_code(build_scenario(raw), ErrorCode::partition_incomplete));
}

TEST(BuildScenario, CountsFillLowestFreeIds) {
    RawConfig raw;
    raw.dimension = 1;
    raw.epsilon = 1.0;
    RawGroup f;
    f.name = "F";
    f.count = 3;
    raw.groups.push_back(f);
    raw.groups.push_back(leader_group("L", {0.0}, {1}));
    raw.initial = RandomBoxInit{0.0, 1.0, 5};
    const Scenario sc = must_build(raw);
    EXPECT_EQ(sc.partition.followers, (std::vector<AgentId>{0, 2, 3}));
    EXPECT_EQ(sc.partition.leaders[0], std::vector<AgentId>{1});
}

TEST(BuildScenario, RandomInitialIsKeyedPerAgent) {
    RawConfig small;
    small.dimension = 2;
    small.epsilon = 1.0;
    RawGroup f;
    f.name = "F";
    f.count = 5;
    small.groups.push_back(f);
    small.initial = RandomBoxInit{-1.0, 1.0, 77};
    RawConfig big = small;
    big.groups[0].count = 50;
    const Scenario a = must_build(small), b = must_build(big);
    for (AgentId i = 0; i < 5; ++i) EXPECT_EQ(a.initial_state.opinion(i), b.initial_state.opinion(i));
    for (AgentId i = 0; i < 50; ++i) {
        for (double v : b.initial_state.row(i)) {
            EXPECT_GE(v, -1.0);
            EXPECT_LE(v, 1.0);
        }
    }
}

TEST(BuildScenario, DefaultsAreFullSelfWeight) {
    auto raw = two_agent_config();
    raw.schedules.clear();
    const Scenario sc = must_build(raw);
    EXPECT_EQ(sc.alpha(1, 0), 1.0);
    std::vector<double> b(1);
    sc.betas(0, 0, b);
    EXPECT_EQ(b[0], 0.0);
}

TEST(BuildScenario, AgentOverrideBeatsGroupEntry) {
    auto raw = two_agent_config();
    raw.schedules.push_back(agent_degree(1, GeometricDecayDegree{1.0, 0.5}));
    const Scenario sc = must_build(raw);
    EXPECT_EQ(sc.alpha(1, 1), 0.5);
    EXPECT_EQ(sc.alpha(1, 3), 0.125);
}

TEST(BuildScenario, UnknownReferences) {
    auto raw = two_agent_config();
    raw.schedules.push_back(group_degree("nope", ConstantDegree{0.5}));
    EXPECT_TRUE(has_code(build_scenario(raw), ErrorCode::unknown_reference));
    raw = two_agent_config();
    raw.schedules.push_back(group_degree("F", ConstantDegree{0.5}, "nope"));
    EXPECT_TRUE(has_code(build_scenario(raw), ErrorCode::unknown_reference));
    raw = two_agent_config();
    raw.schedules.push_back(agent_degree(9, ConstantDegree{0.5}));
    EXPECT_TRUE(has_code(build_scenario(raw), ErrorCode::unknown_reference));
}

TEST(BuildScenario, NonFiniteValuesRejected) {
    auto raw = two_agent_config();
    raw.initial = std::vector<std::vector<double>>{{std::nan("")}, {0.1}};
    EXPECT_TRUE(has_code(build_scenario(raw), ErrorCode::non_finite));
    raw = two_agent_config();
    raw.epsilon = std::numeric_limits<double>::infinity();
    EXPECT_FALSE(build_scenario(raw).ok());
}

// Random mutation of a valid config never throws; every result is either a
// scenario satisfying the invariants or a non-empty error list.
TEST(BuildScenario, ValidationIsTotalOnAdversarialInput) {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double weird[] = {-1.0, 0.0, 1.0, 2.0, 1e308, -1e-300, std::nan(""),
                            std::numeric_limits<double>::infinity(), 0.5};
    auto pick = [&] { return weird[rng() % std::size(weird)]; };
    for (int trial = 0; trial < 3000; ++trial) {
        RawConfig raw = two_agent_config();
        const int mutations = 1 + static_cast<int>(rng() % 4);
        for (int k = 0; k < mutations; ++k) {
            switch (rng() % 12) {
                case 0: raw.dimension = static_cast<std::int64_t>(rng() % 5) - 2; break;
                case 1: raw.epsilon = pick(); break;
                case 2: raw.groups[rng() % raw.groups.size()].ids.push_back(static_cast<std::int64_t>(rng() % 6) - 2); break;
                case 3: raw.groups[1].target = {pick(), pick()}; break;
                case 4: raw.groups.push_back(leader_group("L", {pick()}, {})); break;
                case 5: raw.initial = std::vector<std::vector<double>>{{pick()}}; break;
                case 6: raw.schedules.push_back(agent_degree(static_cast<std::int64_t>(rng() % 4) - 1, ConstantDegree{pick()})); break;
                case 7: raw.schedules.push_back(group_degree("F", TableDegree{{pick(), pick()}}, "L")); break;
                case 8: raw.schedules.push_back(group_degree("L", SeededRandomDegree{rng(), pick(), pick()})); break;
                case 9: raw.groups[0].count = rng() % 3; break;
                case 10: raw.engine.stop.window = rng() % 2; break;
                case 11: raw.initial = RandomBoxInit{pick(), pick(), rng()}; break;
            }
        }
        BuildResult r;
        ASSERT_NO_THROW(r = build_scenario(raw));
        if (!r.ok()) {
            EXPECT_FALSE(r.errors.empty());
            continue;
        }
        const Scenario& sc = *r.scenario;
        EXPECT_TRUE(r.errors.empty());
        EXPECT_GT(sc.epsilon, 0.0);
        EXPECT_GE(sc.dimension, 1u);
        EXPECT_EQ(sc.initial_state.agent_count(), sc.agent_count());
        EXPECT_TRUE(sc.initial_state.all_finite());
        EXPECT_EQ(sc.targets.size(), sc.group_count());
        for (const auto& g : sc.targets) EXPECT_EQ(g.dim(), sc.dimension);
        for (const auto& members : sc.partition.leaders) EXPECT_FALSE(members.empty());
        for (AgentId i = 0; i < sc.agent_count(); ++i) {
            for (std::uint64_t t = 0; t < 5; ++t) {
                if (sc.partition.assignment[i].is_leader()) {
                    const double a = sc.alpha(i, t);
                    EXPECT_TRUE(a >= 0.0 && a <= 1.0);
                } else {
                    std::vector<double> b(sc.group_count());
                    sc.betas(i, t, b);
                    double sum = 0.0;
                    for (double v : b) {
                        EXPECT_TRUE(v >= 0.0 && v <= 1.0);
                        sum += v;
                    }
                    EXPECT_LE(sum, 1.0 + kBetaSumSlack);
                }
            }
        }
    }
}
