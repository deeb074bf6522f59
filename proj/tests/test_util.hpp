#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "itd/lp.hpp"
#include "itd/transport.hpp"

namespace itd::testing {

inline PointSet random_points(std::mt19937_64& rng, std::size_t n, std::size_t dim, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> c(n * dim);
    for (double& x : c) x = u(rng);
    return PointSet(dim, std::move(c));
}

inline DiscreteMeasure random_measure(std::mt19937_64& rng, std::size_t n, std::size_t dim) {
    std::uniform_real_distribution<double> u(0.05, 1.0);
    std::vector<double> w(n);
    for (double& x : w) x = u(rng);
    return DiscreteMeasure::normalized(random_points(rng, n, dim), std::move(w));
}

// integral of |F_mu - F_nu| over the line
inline double cdf_w1(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
    struct Event {
        double x, dw;
    };
    std::vector<Event> ev;
    for (std::size_t i = 0; i < mu.size(); ++i) ev.push_back({mu.point(i)[0], mu.weight(i)});
    for (std::size_t j = 0; j < nu.size(); ++j) ev.push_back({nu.point(j)[0], -nu.weight(j)});
    std::sort(ev.begin(), ev.end(), [](const Event& a, const Event& b) { return a.x < b.x; });
    double f = 0.0, total = 0.0;
    for (std::size_t k = 0; k + 1 < ev.size(); ++k) {
        f += ev[k].dw;
        total += std::abs(f) * (ev[k + 1].x - ev[k].x);
    }
    return total;
}

// primal transportation LP through the generic simplex
inline double lp_transport_cost(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const GroundCost& cost) {
    const std::size_t m = mu.size(), n = nu.size();
    lp::Problem prob;
    prob.num_vars = m * n;
    prob.cost = cost_matrix(mu.points(), nu.points(), cost);
    for (std::size_t i = 0; i < m; ++i) {
        std::vector<std::pair<std::size_t, double>> t;
        for (std::size_t j = 0; j < n; ++j) t.push_back({i * n + j, 1.0});
        prob.add_row(t, lp::Sense::equal, mu.weight(i));
    }
    for (std::size_t j = 0; j < n; ++j) {
        std::vector<std::pair<std::size_t, double>> t;
        for (std::size_t i = 0; i < m; ++i) t.push_back({i * n + j, 1.0});
        prob.add_row(t, lp::Sense::equal, nu.weight(j));
    }
    auto sol = lp::solve(prob);
    if (sol.status != lp::Status::optimal) throw SolverFailure("oracle LP failed");
    return sol.objective;
}

} // namespace itd::testing
