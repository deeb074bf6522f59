#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "itd/kernel_metric.hpp"
#include "itd/lattice.hpp"
#include "itd/risk.hpp"

namespace itd::testing {

using Matrix = std::vector<std::vector<double>>;

// Finite-state chain on points of the line with a true kernel Q_t and an
// approximation Qa_t, both on the same states.
struct SyntheticChain {
    PointSet states;
    std::vector<Matrix> q, qa; // T matrices each
    std::vector<std::vector<double>> cost; // cost[t][x], t = 0..T
    std::size_t x0 = 0;

    std::size_t horizon() const { return q.size(); }
    std::size_t size() const { return states.size(); }
};

inline std::vector<double> random_row(std::mt19937_64& rng, std::size_t n) {
    std::exponential_distribution<double> e(1.0);
    std::vector<double> r(n);
    double s = 0.0;
    for (double& x : r) s += (x = e(rng));
    for (double& x : r) x /= s;
    return r;
}

inline SyntheticChain random_chain(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    SyntheticChain c;
    const std::size_t n = 2 + rng() % 5, T = 1 + rng() % 4;
    std::vector<double> xs;
    for (std::size_t i = 0; i < n; ++i) xs.push_back(5.0 * u(rng) + static_cast<double>(i) * 1e-3);
    std::sort(xs.begin(), xs.end());
    c.states = PointSet(1, xs);
    for (std::size_t t = 0; t < T; ++t) {
        Matrix q(n), qa(n);
        const double eps = 0.5 * u(rng);
        for (std::size_t i = 0; i < n; ++i) {
            q[i] = random_row(rng, n);
            const auto noise = random_row(rng, n);
            qa[i].resize(n);
            for (std::size_t j = 0; j < n; ++j) qa[i][j] = (1.0 - eps) * q[i][j] + eps * noise[j];
        }
        c.q.push_back(q);
        c.qa.push_back(qa);
    }
    for (std::size_t t = 0; t <= T; ++t) {
        const double a = 2.0 * u(rng) - 1.0, b = 2.0 * u(rng) - 1.0, ph = 6.0 * u(rng);
        std::vector<double> row(n);
        for (std::size_t i = 0; i < n; ++i) row[i] = a * std::sin(xs[i] + ph) + b * xs[i];
        c.cost.push_back(row);
    }
    c.x0 = rng() % n;
    return c;
}

// lattice over all states at every stage with the given transition matrices
inline std::vector<LatticeStage> chain_lattice(const SyntheticChain& c, const std::vector<Matrix>& mats) {
    std::vector<LatticeStage> out;
    const std::size_t n = c.size();
    LatticeStage s0;
    s0.points = c.states;
    s0.marginal.assign(n, 0.0);
    s0.marginal[c.x0] = 1.0;
    out.push_back(s0);
    for (const auto& m : mats) {
        LatticeStage s;
        s.points = c.states;
        s.marginal.assign(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            TransitionRow row;
            for (std::size_t j = 0; j < n; ++j) {
                row.push_back({j, m[i][j]});
                s.marginal[j] += out.back().marginal[i] * m[i][j];
            }
            s.transitions.push_back(row);
        }
        out.push_back(s);
    }
    return out;
}

inline CostSpec chain_costs(const SyntheticChain& c) {
    CostSpec spec;
    auto lookup = [&c](std::size_t t, std::span<const double> x) {
        for (std::size_t i = 0; i < c.size(); ++i)
            if (c.states[i][0] == x[0]) return c.cost[t][i];
        throw InvalidArgument("unknown state");
    };
    spec.running = lookup;
    spec.terminal = lookup;
    return spec;
}

inline DiscreteKernel chain_kernel(const SyntheticChain& c, const Matrix& m) {
    std::vector<DiscreteMeasure> rows;
    for (const auto& r : m) rows.emplace_back(c.states, r);
    return DiscreteKernel(c.states, std::move(rows));
}

struct BoundCheck {
    double error = 0.0; // |v~_0(x0) - v_0(x0)|
    double bound = 0.0;
};

// Exact values on the true chain by plain recursion, approximate values by
// backward_evaluate, and the bound from measured stage errors.
inline BoundCheck check_value_bound(const SyntheticChain& c, const RiskMapping& mapping) {
    const std::size_t n = c.size(), T = c.horizon();
    std::vector<std::vector<double>> v(T + 1);
    v[T] = c.cost[T];
    for (std::size_t t = T; t-- > 0;) {
        v[t].resize(n);
        for (std::size_t i = 0; i < n; ++i) v[t][i] = c.cost[t][i] + evaluate(mapping, c.q[t][i], v[t + 1]);
    }
    const auto lat = chain_lattice(c, c.qa);
    const auto va = backward_evaluate(lat, chain_costs(c), mapping);

    LipschitzLedger ledger;
    for (std::size_t t = 0; t < T; ++t) {
        const auto k = mapping_constants(mapping, lipschitz_on(c.states, v[t + 1]));
        ledger.L.push_back(k.L);
        ledger.K.push_back(k.K);
        ledger.delta.push_back(itd::itd(Marginal(c.states, lat[t].marginal), chain_kernel(c, c.q[t]), chain_kernel(c, c.qa[t])));
    }
    return {std::abs(va[0][c.x0] - v[0][c.x0]), value_error_bound(ledger)};
}

} // namespace itd::testing
