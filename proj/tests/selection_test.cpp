#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "itd/selection.hpp"
#include "selection_oracles.hpp"
#include "test_util.hpp"

using namespace itd;
using itd::testing::enumerate_optimum;
using itd::testing::random_points;
using itd::testing::random_selection_problem;

namespace {

SelectionProblem line_problem(std::vector<double> particles, std::vector<double> candidates, std::size_t budget, double p = 1.0) {
    const std::size_t n = particles.size();
    ParticleCloud cloud(PointSet(1, std::move(particles)), {0, n}, {1.0});
    return SelectionProblem{cloud, PointSet(1, std::move(candidates)), budget, GroundCost(p)};
}

} // namespace

TEST(NearestAssignment, Basics) {
    GroundCost c(1.0);
    auto a = nearest_assignment(PointSet(1, {0.0, 1.0}), PointSet(1, {0.0, 1.0}), c);
    EXPECT_EQ(a.site, (std::vector<std::size_t>{0, 1}));
    EXPECT_EQ(a.cost, (std::vector<double>{0.0, 0.0}));
    a = nearest_assignment(PointSet(1, {0.4}), PointSet(1, {0.0, 1.0}), c);
    EXPECT_EQ(a.site[0], 0u);
    EXPECT_DOUBLE_EQ(a.cost[0], 0.4);
    a = nearest_assignment(PointSet(1, {0.5}), PointSet(1, {0.0, 1.0}), c);
    EXPECT_EQ(a.site[0], 0u);
    EXPECT_THROW(nearest_assignment(PointSet(1, {0.5}), PointSet(1), c), InvalidArgument);
}

TEST(SelectExact, BudgetEqualsCandidates) {
    auto pr = line_problem({0.0, 0.3, 1.1, 2.0}, {0.0, 1.0, 2.0}, 3);
    auto r = select_exact_mip(pr);
    EXPECT_EQ(r.gamma, (std::vector<char>{1, 1, 1}));
    EXPECT_NEAR(r.objective, 0.25 * (0.3 + 0.1), 1e-15);
}

TEST(SelectExact, FourPointsTwoSites) {
    auto pr = line_problem({0, 1, 2, 3}, {0, 1, 2, 3}, 2);
    auto r = select_exact_mip(pr);
    EXPECT_DOUBLE_EQ(r.objective, enumerate_optimum(pr));
    EXPECT_DOUBLE_EQ(r.objective, 0.5);
}

TEST(SelectExact, SymmetricPairSingleSite) {
    // every candidate costs 1 at p=1; the tie goes to index 0
    auto pr = line_problem({-1, 1}, {-1, 0, 1}, 1);
    for (std::size_t k = 0; k < 3; ++k) EXPECT_DOUBLE_EQ(evaluate_sites(pr, {k}, SelectionMethod::exact_mip).objective, 1.0);
    auto r = select_exact_mip(pr);
    EXPECT_EQ(r.sites(), (std::vector<std::size_t>{0}));
    EXPECT_DOUBLE_EQ(r.objective, 1.0);
    auto g = select_greedy(pr);
    EXPECT_EQ(g.sites(), (std::vector<std::size_t>{0}));
    EXPECT_DOUBLE_EQ(g.objective, 1.0);
    // at p=2 the middle is strictly best
    pr.cost = GroundCost(2.0);
    EXPECT_EQ(select_exact_mip(pr).sites(), (std::vector<std::size_t>{1}));
    EXPECT_EQ(select_greedy(pr).sites(), (std::vector<std::size_t>{1}));
}

TEST(SelectExact, RejectsLargeInstances) {
    std::vector<double> xs(300), cs(10);
    for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = static_cast<double>(i);
    auto pr = line_problem(xs, cs, 2);
    EXPECT_THROW(select_exact_mip(pr), InvalidArgument);
}

TEST(SelectGreedy, BudgetEqualsCandidatesAndAlwaysFills) {
    auto pr = line_problem({0.0, 0.0, 0.0}, {0.0, 5.0, 6.0, 7.0}, 4);
    auto r = select_greedy(pr);
    EXPECT_EQ(r.gamma, (std::vector<char>{1, 1, 1, 1}));
    EXPECT_EQ(r.objective, 0.0);
    // zero-gain steps still open sites, lowest index first
    pr.budget = 3;
    r = select_greedy(pr);
    EXPECT_EQ(r.sites(), (std::vector<std::size_t>{0, 1, 2}));
}

TEST(SelectGreedy, MatchesPlainGreedyOnClusteredClouds) {
    // plain greedy: 1-median, then the largest full-sum gain each round
    std::mt19937_64 rng(91);
    for (int rep = 0; rep < 6; ++rep) {
        const double p = rep % 2 ? 2.0 : 1.0;
        std::vector<PointSet> groups;
        std::vector<double> w;
        for (int s = 0; s < 5; ++s) {
            groups.push_back(random_points(rng, 300, 2, s * 0.7, s * 0.7 + 1.0));
            w.push_back(0.1 + 0.2 * s);
        }
        double sum = 0.0;
        for (double x : w) sum += x;
        for (double& x : w) x /= sum;
        SelectionProblem prob{ParticleCloud::from_groups(groups, w), random_points(rng, 60, 2, -0.2, 4.0), 12, GroundCost(p)};
        const std::size_t n = prob.cloud.size(), K = prob.candidates.size();
        std::vector<double> cur(n, std::numeric_limits<double>::infinity());
        std::vector<std::size_t> open;
        for (std::size_t round = 0; round < prob.budget; ++round) {
            double best = -1.0;
            std::size_t arg = 0;
            for (std::size_t k = 0; k < K; ++k) {
                if (std::find(open.begin(), open.end(), k) != open.end()) continue;
                double g = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    const double d = prob.particle_cost(i, k);
                    g += prob.cloud.weight(i) * (round == 0 ? -d : std::max(cur[i] - d, 0.0));
                }
                if (round == 0) g += 1e6;
                if (g > best) {
                    best = g;
                    arg = k;
                }
            }
            open.push_back(arg);
            for (std::size_t i = 0; i < n; ++i) cur[i] = std::min(cur[i], prob.particle_cost(i, arg));
        }
        double expected = 0.0;
        for (std::size_t i = 0; i < n; ++i) expected += prob.cloud.weight(i) * cur[i];
        std::sort(open.begin(), open.end());
        const auto r = select_greedy(prob);
        EXPECT_EQ(r.sites(), open) << rep;
        EXPECT_NEAR(r.objective, expected, 1e-12) << rep;
    }
}

TEST(SelectLpRound, BudgetEqualsCandidates) {
    auto pr = line_problem({0.0, 0.3, 1.1}, {0.0, 1.0}, 2);
    auto r = select_lp_round(pr, 1);
    EXPECT_EQ(r.gamma, (std::vector<char>{1, 1}));
    EXPECT_DOUBLE_EQ(r.objective, select_exact_mip(pr).objective);
}

TEST(SelectLpRound, SeparatedClustersRoundTrivially) {
    // two tight clusters, two sites: the relaxation is integral
    auto pr = line_problem({0.0, 0.01, 0.02, 10.0, 10.01, 10.02}, {0.01, 5.0, 10.01, 20.0}, 2);
    auto relax = solve_relaxation(pr);
    ASSERT_TRUE(relax.exact);
    for (double g : relax.gamma) EXPECT_TRUE(std::abs(g) < 1e-9 || std::abs(g - 1.0) < 1e-9);
    auto r = select_lp_round(pr, 7);
    EXPECT_NEAR(r.objective, select_exact_mip(pr).objective, 1e-15);
    EXPECT_NEAR(r.lower_bound, r.objective, 1e-12);
}

TEST(Selection, OrderingAndEnumerationOnRandomInstances) {
    std::mt19937_64 rng(42);
    for (int rep = 0; rep < 100; ++rep) {
        auto pr = random_selection_problem(rng);
        auto exact = select_exact_mip(pr);
        auto lp = select_lp_round(pr, rep);
        auto greedy = select_greedy(pr);
        for (const auto* r : {&exact, &lp, &greedy}) EXPECT_NO_THROW(check_selection(pr, *r));
        EXPECT_NEAR(exact.objective, enumerate_optimum(pr), 1e-12);
        EXPECT_LE(lp.lower_bound, exact.objective + 1e-9);
        EXPECT_LE(exact.objective, lp.objective + 1e-12);
        EXPECT_LE(exact.objective, greedy.objective + 1e-12);
    }
}

TEST(Selection, ExactIsMonotoneInBudget) {
    std::mt19937_64 rng(43);
    for (int rep = 0; rep < 30; ++rep) {
        auto pr = random_selection_problem(rng);
        double prev = std::numeric_limits<double>::infinity();
        for (std::size_t m = 1; m <= pr.candidates.size(); ++m) {
            pr.budget = m;
            const double v = select_exact_mip(pr).objective;
            EXPECT_LE(v, prev + 1e-15);
            prev = v;
        }
    }
}

TEST(Selection, LagrangianBoundOnLargerInstance) {
    std::mt19937_64 rng(44);
    std::vector<PointSet> groups{random_points(rng, 150, 2), random_points(rng, 150, 2)};
    SelectionProblem pr{ParticleCloud::from_groups(groups, {0.3, 0.7}), random_points(rng, 30, 2), 6, GroundCost(1.0)};
    ASSERT_GT(pr.beta_count(), 2000u);
    auto relax = solve_relaxation(pr);
    EXPECT_FALSE(relax.exact);
    auto greedy = select_greedy(pr);
    EXPECT_LE(relax.value, greedy.objective);
    EXPECT_GT(relax.value, 0.5 * greedy.objective);
    auto r = select_lp_round(pr, 3);
    EXPECT_NO_THROW(check_selection(pr, r));
    EXPECT_LE(r.lower_bound, r.objective);
}

TEST(Selection, MinimaxReducesWorstSource) {
    std::mt19937_64 rng(45);
    std::vector<PointSet> groups{random_points(rng, 40, 2, 0.0, 1.0), random_points(rng, 10, 2, 5.0, 6.0)};
    SelectionProblem pr{ParticleCloud::from_groups(groups, {0.9, 0.1}), PointSet{}, 3, GroundCost(1.0)};
    for (std::size_t i = 0; i < pr.cloud.size(); ++i) pr.candidates.push_back(pr.cloud.points()[i]);
    auto sum = select_greedy(pr);
    auto mm = select_greedy_minimax(pr);
    auto worst = [&](const SelectionResult& r) {
        auto c = per_source_cost(pr, r);
        return *std::max_element(c.begin(), c.end());
    };
    EXPECT_LE(worst(mm), worst(sum) + 1e-12);
    EXPECT_LE(sum.objective, mm.objective + 1e-12);
}
