#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "itd/risk.hpp"
#include "risk_oracles.hpp"
#include "synthetic_chain.hpp"
#include "test_util.hpp"

using namespace itd;
using itd::testing::avar_by_atoms;
using itd::testing::avar_by_grid;
using itd::testing::Dist;
using itd::testing::random_dist;
using itd::testing::random_row;
using itd::testing::translation_mappings;

TEST(SigmaExpectation, Examples) {
    const std::vector<double> p{0.5, 0.5};
    EXPECT_EQ(sigma_expectation(p, std::vector<double>{0.0, 0.0}), 0.0);
    EXPECT_EQ(sigma_expectation(p, std::vector<double>{2.0, 4.0}), 3.0);
    EXPECT_EQ(sigma_expectation(std::vector<double>{1.0}, std::vector<double>{7.5}), 7.5);
    EXPECT_THROW(sigma_expectation(p, std::vector<double>{1.0}), InvalidArgument);
}

TEST(SigmaStopping, Examples) {
    const std::vector<double> p{1.0}, v{3.0};
    EXPECT_EQ(sigma_stopping(p, v, 5.0), 5.0);
    EXPECT_EQ(sigma_stopping(p, v, 0.0), 3.0);
    EXPECT_EQ(sigma_stopping(p, v, 3.0), 3.0);
}

TEST(SigmaAvar, Examples) {
    const std::vector<double> p(4, 0.25), v{1, 2, 3, 4};
    EXPECT_NEAR(sigma_avar(p, v, 0.5), 3.5, 1e-12);
    EXPECT_NEAR(avar_by_grid({p, v}, 0.5), 3.5, 1e-6);
    EXPECT_NEAR(sigma_avar(p, v, 1.0), 2.5, 1e-12);
    for (double a : {0.01, 0.3, 0.77, 1.0}) EXPECT_NEAR(sigma_avar(p, std::vector<double>(4, -1.25), a), -1.25, 1e-12);
    EXPECT_THROW(sigma_avar(p, v, 0.0), InvalidArgument);
    EXPECT_THROW(sigma_avar(p, v, 1.5), InvalidArgument);
    EXPECT_THROW(sigma_avar(std::vector<double>{}, std::vector<double>{}, 0.5), InvalidArgument);
}

TEST(SigmaAvar, MatchesEtaMinimisation) {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> ua(0.01, 1.0);
    for (int rep = 0; rep < 500; ++rep) {
        const Dist d = random_dist(rng);
        const double alpha = rep % 10 == 0 ? 1.0 : ua(rng);
        const double got = sigma_avar(d.p, d.v, alpha);
        EXPECT_NEAR(got, avar_by_atoms(d, alpha), 1e-10) << rep;
        if (rep < 100) {
            EXPECT_NEAR(got, avar_by_grid(d, alpha), 1e-3) << rep;
        }
    }
}

TEST(SigmaMsd, Examples) {
    const std::vector<double> p{0.5, 0.5}, v{0.0, 2.0};
    EXPECT_NEAR(sigma_msd(p, v, 1.0, 0.0), 1.0, 1e-15);
    EXPECT_NEAR(sigma_msd(p, v, 1.0, 1.0), 1.5, 1e-15);
    EXPECT_NEAR(sigma_msd(p, std::vector<double>{4.0, 4.0}, 2.0, 1.0), 4.0, 1e-15);
    EXPECT_THROW(sigma_msd(p, v, 1.0, 1.5), InvalidArgument);
    EXPECT_THROW(sigma_msd(p, v, 0.5, 0.5), InvalidArgument);
}

TEST(SigmaMsd, MatchesEnumeration) {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int rep = 0; rep < 500; ++rep) {
        const Dist d = random_dist(rng);
        const double p = 1.0 + 3.0 * u(rng), kappa = u(rng);
        double m = 0.0;
        for (std::size_t i = 0; i < d.v.size(); ++i) m += d.p[i] * d.v[i];
        double s = 0.0;
        for (std::size_t i = 0; i < d.v.size(); ++i)
            if (d.v[i] > m) s += d.p[i] * std::pow(d.v[i] - m, p);
        EXPECT_NEAR(sigma_msd(d.p, d.v, p, kappa), m + kappa * std::pow(s, 1.0 / p), 1e-10);
    }
}

TEST(SigmaSpectral, Examples) {
    const std::vector<double> p(4, 0.25), v{1, 2, 3, 4};
    EXPECT_NEAR(sigma_spectral(p, v, {{1.0, 1.0}}), 2.5, 1e-12);
    EXPECT_NEAR(sigma_spectral(p, v, {{0.5, 1.0}}), 3.5, 1e-12);
    EXPECT_NEAR(sigma_spectral(p, v, {{0.5, 0.5}, {1.0, 0.5}}), 3.0, 1e-12);
    EXPECT_THROW(sigma_spectral(p, v, {{0.5, 0.6}}), InvalidArgument);
    EXPECT_THROW(sigma_spectral(p, v, {{0.0, 1.0}}), InvalidArgument);
    EXPECT_THROW(sigma_spectral(p, v, {}), InvalidArgument);
}

TEST(SigmaSpectral, MatchesEnumeration) {
    std::mt19937_64 rng(14);
    std::uniform_real_distribution<double> u(0.01, 1.0);
    for (int rep = 0; rep < 500; ++rep) {
        const Dist d = random_dist(rng);
        const std::size_t J = 1 + rng() % 4;
        const auto w = random_row(rng, J);
        SpectralWeights theta;
        double expected = 0.0;
        for (std::size_t j = 0; j < J; ++j) {
            theta.push_back({u(rng), w[j]});
            expected += w[j] * avar_by_atoms(d, theta.back().first);
        }
        double sum = 0.0;
        for (const auto& t : theta) sum += t.second;
        if (std::abs(sum - 1.0) > 1e-12) continue;
        EXPECT_NEAR(sigma_spectral(d.p, d.v, theta), expected, 1e-10);
    }
}

TEST(RiskMappings, NormalizationMonotonicityTranslation) {
    std::mt19937_64 rng(15);
    std::uniform_real_distribution<double> u(0.0, 2.0), c(-5.0, 5.0);
    auto all = translation_mappings();
    all.push_back(risk::Stopping{});
    for (int rep = 0; rep < 300; ++rep) {
        const Dist d = random_dist(rng);
        std::vector<double> w = d.v, zero(d.v.size(), 0.0), shifted = d.v;
        for (double& x : w) x += u(rng);
        const double shift = c(rng);
        for (double& x : shifted) x += shift;
        for (const auto& m : all) {
            EXPECT_EQ(evaluate(m, d.p, zero, 0.0), 0.0) << mapping_name(m);
            EXPECT_LE(evaluate(m, d.p, d.v, 0.1), evaluate(m, d.p, w, 0.1) + 1e-12) << mapping_name(m);
        }
        for (const auto& m : translation_mappings())
            EXPECT_NEAR(evaluate(m, d.p, shifted), evaluate(m, d.p, d.v) + shift, 1e-9) << mapping_name(m);
    }
    // stopping is not translation equivariant: the reward does not move
    const std::vector<double> p{1.0};
    EXPECT_EQ(sigma_stopping(p, std::vector<double>{0.0}, 1.0), 1.0);
    EXPECT_EQ(sigma_stopping(p, std::vector<double>{2.0}, 1.0), 2.0);
}

TEST(RiskMappings, LipschitzInTheMeasure) {
    // |sigma(mu, v) - sigma(nu, v)| <= L W1(mu, nu) for 1-Lipschitz v on the line
    std::mt19937_64 rng(16);
    std::uniform_real_distribution<double> u(0.05, 1.0), ph(0.0, 6.0);
    for (int rep = 0; rep < 300; ++rep) {
        const auto mu = itd::testing::random_measure(rng, 1 + rng() % 8, 1);
        const auto nu = itd::testing::random_measure(rng, 1 + rng() % 8, 1);
        const double phase = ph(rng);
        auto f = [&](const DiscreteMeasure& m) {
            std::vector<double> v;
            for (std::size_t i = 0; i < m.size(); ++i) v.push_back(rep % 2 ? std::sin(m.point(i)[0] + phase) : std::abs(m.point(i)[0] - 0.2));
            return v;
        };
        const auto vm = f(mu), vn = f(nu);
        const double w1 = itd::testing::cdf_w1(mu, nu);
        const double alpha = u(rng), kappa = u(rng);
        const std::vector<RiskMapping> maps{risk::Expectation{}, risk::Avar{alpha}, risk::MeanSemideviation{1.0, kappa}};
        for (const auto& m : maps) {
            const double L = mapping_constants(m, 1.0).L;
            EXPECT_LE(std::abs(evaluate(m, mu.weights(), vm) - evaluate(m, nu.weights(), vn)), L * w1 + 1e-12) << mapping_name(m);
        }
    }
}

TEST(MappingConstants, Values) {
    EXPECT_EQ(mapping_constants(risk::Expectation{}, 2.0).L, 2.0);
    EXPECT_EQ(mapping_constants(risk::Expectation{}, 2.0).K, 1.0);
    EXPECT_EQ(mapping_constants(risk::Avar{0.25}, 2.0).L, 8.0);
    EXPECT_EQ(mapping_constants(risk::Avar{0.25}, 2.0).K, 4.0);
    EXPECT_EQ(mapping_constants(risk::MeanSemideviation{1.0, 0.5}, 1.0).L, 3.0);
    EXPECT_EQ(mapping_constants(risk::MeanSemideviation{1.0, 0.5}, 1.0).K, 2.0);
    EXPECT_THROW(mapping_constants(risk::MeanSemideviation{2.0, 0.5}, 1.0), InvalidArgument);
    EXPECT_NEAR(lipschitz_on(PointSet(1, {0.0, 1.0, 3.0}), std::vector<double>{0.0, 2.0, 3.0}), 2.0, 1e-15);
}

TEST(BackwardEvaluate, OneStepExpectation) {
    LatticeStage s0 = initial_stage({0.0});
    LatticeStage s1;
    s1.points = PointSet(1, {1.0, 2.0});
    s1.marginal = {0.25, 0.75};
    s1.transitions = {{{0, 0.25}, {1, 0.75}}};
    CostSpec c;
    c.running = [](std::size_t, std::span<const double>) { return 0.5; };
    c.terminal = [](std::size_t, std::span<const double> x) { return x[0] * x[0]; };
    const auto v = backward_evaluate({s0, s1}, c, risk::Expectation{});
    EXPECT_NEAR(v[0][0], 0.5 + 0.25 * 1.0 + 0.75 * 4.0, 1e-15);
    EXPECT_EQ(v[1], (std::vector<double>{1.0, 4.0}));
    const auto disc = backward_evaluate({s0, s1}, c, risk::Expectation{}, 0.5);
    EXPECT_NEAR(disc[0][0], 0.5 + 0.5 * 3.25, 1e-15);
}

TEST(BackwardEvaluate, HugeRewardMeansImmediateStop) {
    std::mt19937_64 rng(20);
    const auto ch = itd::testing::random_chain(rng);
    auto c = itd::testing::chain_costs(ch);
    c.running = nullptr;
    c.reward = [](std::size_t t, std::span<const double> x) { return 1e9 - 10.0 * static_cast<double>(t) + x[0]; };
    const auto lat = itd::testing::chain_lattice(ch, ch.qa);
    const auto v = backward_evaluate(lat, c, risk::Stopping{});
    for (std::size_t t = 0; t < ch.horizon(); ++t)
        for (std::size_t j = 0; j < ch.size(); ++j) EXPECT_EQ(v[t][j], c.reward(t, ch.states[j]));
}

TEST(BackwardEvaluate, MatchesPlainDynamicProgram) {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const std::vector<RiskMapping> maps{risk::Expectation{}, risk::Avar{0.4}, risk::MeanSemideviation{1.0, 0.5},
                                        risk::Spectral{{{0.3, 0.25}, {1.0, 0.75}}}, risk::Stopping{}};
    for (int rep = 0; rep < 60; ++rep) {
        const auto ch = itd::testing::random_chain(rng);
        const double disc = 0.5 + 0.5 * u(rng);
        for (const auto& m : maps) {
            auto c = itd::testing::chain_costs(ch);
            c.reward = [](std::size_t t, std::span<const double> x) { return std::cos(x[0]) - 0.1 * static_cast<double>(t); };
            const auto v = backward_evaluate(itd::testing::chain_lattice(ch, ch.qa), c, m, disc);
            const std::size_t T = ch.horizon(), n = ch.size();
            std::vector<double> next = ch.cost[T];
            for (std::size_t t = T; t-- > 0;) {
                std::vector<double> cur(n), scaled(n);
                for (std::size_t j = 0; j < n; ++j) scaled[j] = disc * next[j];
                for (std::size_t i = 0; i < n; ++i) {
                    double r = 0.0;
                    if (std::holds_alternative<risk::Stopping>(m)) r = c.reward(t, ch.states[i]);
                    cur[i] = ch.cost[t][i] + evaluate(m, ch.qa[t][i], scaled, r);
                }
                next = cur;
            }
            for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(v[0][i], next[i], 1e-12) << mapping_name(m);
        }
    }
}

TEST(BackwardEvaluate, ExpectationEqualsPathSum) {
    // with no running costs, v_0(x0) = lambda_T . c_T
    std::mt19937_64 rng(22);
    for (int rep = 0; rep < 50; ++rep) {
        const auto ch = itd::testing::random_chain(rng);
        auto c = itd::testing::chain_costs(ch);
        c.running = nullptr;
        const auto lat = itd::testing::chain_lattice(ch, ch.q);
        const auto v = backward_evaluate(lat, c, risk::Expectation{});
        double expected = 0.0;
        for (std::size_t j = 0; j < ch.size(); ++j) expected += lat.back().marginal[j] * ch.cost[ch.horizon()][j];
        EXPECT_NEAR(v[0][ch.x0], expected, 1e-10);
    }
}

TEST(BackwardEvaluate, RejectsBrokenChain) {
    LatticeStage s0 = initial_stage({0.0});
    LatticeStage s1;
    s1.points = PointSet(1, {1.0});
    s1.marginal = {1.0};
    CostSpec c;
    c.terminal = [](std::size_t, std::span<const double>) { return 0.0; };
    EXPECT_THROW(backward_evaluate({s0, s1}, c, risk::Expectation{}), InvalidArgument);
    s1.transitions = {{{3, 1.0}}};
    EXPECT_THROW(backward_evaluate({s0, s1}, c, risk::Expectation{}), InvalidArgument);
    s1.transitions = {{{0, 1.0}}};
    EXPECT_THROW(backward_evaluate({s0, s1}, c, risk::Stopping{}), InvalidArgument);
}

TEST(ErrorBounds, ValueBoundFormula) {
    EXPECT_NEAR(value_error_bound({{1, 1}, {1, 1}, {0.1, 0.2}, {}}), 0.3, 1e-15);
    EXPECT_EQ(value_error_bound({{3, 4, 5}, {2, 2, 2}, {0, 0, 0}, {}}), 0.0);
    EXPECT_NEAR(value_error_bound({{1, 2}, {3}, {0.1, 0.1}, {}}), 0.7, 1e-15);
    EXPECT_THROW(value_error_bound({{1}, {}, {0.1, 0.1}, {}}), InvalidArgument);
}

TEST(ErrorBounds, MarginalBoundRecursion) {
    // entry t bounds W(lambda~_t, lambda_t); the first step contributes Delta_0 directly
    EXPECT_EQ(marginal_error_bound({{}, {}, {0, 0, 0}, {1, 1, 1}}), (std::vector<double>{0, 0, 0, 0}));
    const auto flat = marginal_error_bound({{}, {}, {0.1, 0.1, 0.1}, {1, 1, 1}});
    for (std::size_t t = 0; t < flat.size(); ++t) EXPECT_NEAR(flat[t], 0.1 * static_cast<double>(t), 1e-15);
    const auto grow = marginal_error_bound({{}, {}, {0.0, 0.1, 0.1}, {1, 1, 2}});
    EXPECT_NEAR(grow[3], 0.1 * 2 + 0.1, 1e-15);
    EXPECT_THROW(marginal_error_bound({{}, {}, {0.1, 0.1, 0.1}, {1}}), InvalidArgument);
}

TEST(ErrorBounds, MarginalBoundHoldsOnSyntheticChains) {
    std::mt19937_64 rng(23);
    for (int rep = 0; rep < 50; ++rep) {
        const auto ch = itd::testing::random_chain(rng);
        const auto approx = itd::testing::chain_lattice(ch, ch.qa);
        const auto exact = itd::testing::chain_lattice(ch, ch.q);
        LipschitzLedger led;
        for (std::size_t t = 0; t < ch.horizon(); ++t) {
            led.delta.push_back(itd::itd(Marginal(ch.states, approx[t].marginal), itd::testing::chain_kernel(ch, ch.q[t]),
                                         itd::testing::chain_kernel(ch, ch.qa[t])));
            led.LQ.push_back(kernel_lipschitz(itd::testing::chain_kernel(ch, ch.q[t])));
        }
        const auto bound = marginal_error_bound(led);
        for (std::size_t t = 0; t <= ch.horizon(); ++t) {
            const double w = wasserstein_exact(Marginal(ch.states, approx[t].marginal), Marginal(ch.states, exact[t].marginal)).distance;
            EXPECT_LE(w, bound[t] + 1e-12) << rep << " t=" << t;
        }
    }
}

TEST(ErrorBounds, ValueBoundHoldsOnSyntheticChains) {
    std::mt19937_64 rng(24);
    std::uniform_real_distribution<double> u(0.1, 1.0);
    for (int rep = 0; rep < 100; ++rep) {
        const auto ch = itd::testing::random_chain(rng);
        for (const RiskMapping& m : {RiskMapping{risk::Expectation{}}, RiskMapping{risk::Avar{u(rng)}}}) {
            const auto r = itd::testing::check_value_bound(ch, m);
            EXPECT_LE(r.error, r.bound + 1e-12) << rep << " " << mapping_name(m);
        }
    }
}
