#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "itd/core.hpp"
#include "itd/lattice.hpp"
#include "itd/parallel.hpp"
#include "itd/transport.hpp"

namespace itd {

namespace detail {

inline void check_values(std::span<const double> probs, std::span<const double> values) {
    require(!probs.empty(), "risk mapping: empty support");
    require(probs.size() == values.size(), "risk mapping: values do not match the measure support");
}

inline double mean(std::span<const double> probs, std::span<const double> values) {
    double m = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) m += probs[i] * values[i];
    return m;
}

// eta + (1/alpha) E[(v - eta)_+] at the smallest eta with P(v > eta) <= alpha
inline double avar(std::span<const double> probs, std::span<const double> values, double alpha) {
    std::vector<std::size_t> idx(values.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
    double tail = 0.0;
    double eta = values[idx.back()];
    for (std::size_t j = 0; j < idx.size(); ++j) {
        tail += probs[idx[j]];
        // mass at or above values[idx[j]] reaches alpha; ties are summed before testing
        if (j + 1 < idx.size() && values[idx[j + 1]] == values[idx[j]]) continue;
        if (tail >= alpha) {
            eta = values[idx[j]];
            break;
        }
    }
    double excess = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i)
        if (values[i] > eta) excess += probs[i] * (values[i] - eta);
    return eta + excess / alpha;
}

} // namespace detail

/// E_mu[v]
inline double sigma_expectation(std::span<const double> probs, std::span<const double> values) {
    detail::check_values(probs, values);
    return detail::mean(probs, values);
}

/// max(r, E_mu[v])
inline double sigma_stopping(std::span<const double> probs, std::span<const double> values, double reward) {
    detail::check_values(probs, values);
    return std::max(reward, detail::mean(probs, values));
}

/// Average Value at Risk of the upper alpha-tail: min_eta eta + E[(v-eta)_+]/alpha.
inline double sigma_avar(std::span<const double> probs, std::span<const double> values, double alpha) {
    detail::check_values(probs, values);
    require(alpha > 0.0 && alpha <= 1.0, "sigma_avar: alpha must lie in (0, 1]");
    if (alpha == 1.0) return detail::mean(probs, values);
    return detail::avar(probs, values, alpha);
}

/// mean + kappa * (E[(v - mean)_+^p])^(1/p)
inline double sigma_msd(std::span<const double> probs, std::span<const double> values, double p, double kappa) {
    detail::check_values(probs, values);
    require(p >= 1.0, "sigma_msd: p must be >= 1");
    require(kappa >= 0.0 && kappa <= 1.0, "sigma_msd: kappa must lie in [0, 1]");
    const double m = detail::mean(probs, values);
    double dev = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double up = values[i] - m;
        if (up > 0.0) dev += probs[i] * (p == 1.0 ? up : std::pow(up, p));
    }
    return m + kappa * (p == 1.0 ? dev : std::pow(dev, 1.0 / p));
}

/// A finite spectral mixture: (alpha_j, theta_j) pairs with weights summing to one.
using SpectralWeights = std::vector<std::pair<double, double>>;

inline void check_spectral(const SpectralWeights& theta) {
    require(!theta.empty(), "spectral mapping: theta is empty");
    double total = 0.0;
    for (const auto& [a, w] : theta) {
        require(a > 0.0 && a <= 1.0, "spectral mapping: every alpha must lie in (0, 1]");
        require(w >= 0.0, "spectral mapping: negative weight");
        total += w;
    }
    require(std::abs(total - 1.0) <= 1e-12, "spectral mapping: weights must sum to 1");
}

/// sum_j theta_j AVaR_{alpha_j}
inline double sigma_spectral(std::span<const double> probs, std::span<const double> values, const SpectralWeights& theta) {
    detail::check_values(probs, values);
    check_spectral(theta);
    double out = 0.0;
    for (const auto& [a, w] : theta) out += w * sigma_avar(probs, values, a);
    return out;
}

// overloads on DiscreteMeasure
inline double sigma_expectation(const DiscreteMeasure& mu, std::span<const double> v) { return sigma_expectation(mu.weights(), v); }
inline double sigma_stopping(const DiscreteMeasure& mu, std::span<const double> v, double r) { return sigma_stopping(mu.weights(), v, r); }
inline double sigma_avar(const DiscreteMeasure& mu, std::span<const double> v, double alpha) { return sigma_avar(mu.weights(), v, alpha); }
inline double sigma_msd(const DiscreteMeasure& mu, std::span<const double> v, double p, double kappa) {
    return sigma_msd(mu.weights(), v, p, kappa);
}
inline double sigma_spectral(const DiscreteMeasure& mu, std::span<const double> v, const SpectralWeights& theta) {
    return sigma_spectral(mu.weights(), v, theta);
}

namespace risk {
struct Expectation {};
struct Stopping {};
struct Avar {
    double alpha = 0.05;
};
struct MeanSemideviation {
    double p = 1.0;
    double kappa = 1.0;
};
struct Spectral {
    SpectralWeights theta;
};
} // namespace risk

/// One of the implemented transition risk mappings.
using RiskMapping = std::variant<risk::Expectation, risk::Stopping, risk::Avar, risk::MeanSemideviation, risk::Spectral>;

inline std::string mapping_name(const RiskMapping& m) {
    static const char* names[] = {"expectation", "stopping", "avar", "msd", "spectral"};
    return names[m.index()];
}

inline void validate(const RiskMapping& m) {
    if (const auto* a = std::get_if<risk::Avar>(&m)) require(a->alpha > 0.0 && a->alpha <= 1.0, "avar: alpha must lie in (0, 1]");
    if (const auto* s = std::get_if<risk::MeanSemideviation>(&m)) {
        require(s->p >= 1.0, "msd: p must be >= 1");
        require(s->kappa >= 0.0 && s->kappa <= 1.0, "msd: kappa must lie in [0, 1]");
    }
    if (const auto* s = std::get_if<risk::Spectral>(&m)) check_spectral(s->theta);
}

/// Applies a mapping. `reward` is used only by the stopping mapping.
inline double evaluate(const RiskMapping& m, std::span<const double> probs, std::span<const double> values, double reward = 0.0) {
    struct Visitor {
        std::span<const double> probs, values;
        double reward;
        double operator()(const risk::Expectation&) const { return sigma_expectation(probs, values); }
        double operator()(const risk::Stopping&) const { return sigma_stopping(probs, values, reward); }
        double operator()(const risk::Avar& a) const { return sigma_avar(probs, values, a.alpha); }
        double operator()(const risk::MeanSemideviation& s) const { return sigma_msd(probs, values, s.p, s.kappa); }
        double operator()(const risk::Spectral& s) const { return sigma_spectral(probs, values, s.theta); }
    };
    return std::visit(Visitor{probs, values, reward}, m);
}

/// Functions of (stage, state). Missing running costs and rewards are zero.
struct CostSpec {
    using Fn = std::function<double(std::size_t, std::span<const double>)>;
    Fn running;  // c_t for t < T
    Fn terminal; // c_T
    Fn reward;   // r_t for the stopping mapping
};

/// values[t][j] at point j of stage t.
using ValueFunction = std::vector<std::vector<double>>;

/**
Backward recursion over a lattice:
  v_T = c_T,  v_t(z) = c_t(z) + sigma(z, Q~_t(z), discount * v_{t+1}).
Stage t+1 must carry the transitions out of stage t.
*/
inline ValueFunction backward_evaluate(const std::vector<LatticeStage>& lattice, const CostSpec& costs, const RiskMapping& mapping,
                                       double discount = 1.0) {
    require(!lattice.empty(), "backward_evaluate: empty lattice");
    require(static_cast<bool>(costs.terminal), "backward_evaluate: terminal cost is required");
    require(discount > 0.0 && discount <= 1.0, "backward_evaluate: discount must lie in (0, 1]");
    validate(mapping);
    const bool stopping = std::holds_alternative<risk::Stopping>(mapping);
    require(!stopping || static_cast<bool>(costs.reward), "backward_evaluate: the stopping mapping needs a reward");
    const std::size_t T = lattice.size() - 1;
    for (std::size_t t = 1; t <= T; ++t) {
        require(lattice[t].transitions.size() == lattice[t - 1].size(), "backward_evaluate: broken chain at stage " + std::to_string(t));
        for (const auto& row : lattice[t].transitions)
            for (const auto& [j, pr] : row) require(j < lattice[t].size(), "backward_evaluate: transition to a missing point");
    }

    ValueFunction v(T + 1);
    v[T].resize(lattice[T].size());
    for (std::size_t j = 0; j < lattice[T].size(); ++j) v[T][j] = costs.terminal(T, lattice[T].points[j]);
    for (std::size_t t = T; t-- > 0;) {
        const auto& next = lattice[t + 1];
        v[t].assign(lattice[t].size(), 0.0);
        parallel_for(lattice[t].size(), [&](std::size_t s) {
            const auto& row = next.transitions[s];
            require(!row.empty(), "backward_evaluate: empty transition row");
            std::vector<double> probs(row.size()), vals(row.size());
            for (std::size_t k = 0; k < row.size(); ++k) {
                probs[k] = row[k].second;
                vals[k] = discount * v[t + 1][row[k].first];
            }
            const auto z = lattice[t].points[s];
            const double c = costs.running ? costs.running(t, z) : 0.0;
            const double r = stopping ? costs.reward(t, z) : 0.0;
            v[t][s] = c + evaluate(mapping, probs, vals, r);
        }, 64);
    }
    return v;
}

/**
@brief Lipschitz constants and stage errors entering the error bounds.

L[t]: constant of sigma_t in the measure argument; K[t]: constant in the
value argument; delta[t]: ITD error of the step t -> t+1; LQ[t]: Lipschitz
constant of the true kernel Q_t.
*/
struct LipschitzLedger {
    std::vector<double> L, K, delta, LQ;
};

/// sum_{tau<T} L_tau (prod_{j<tau} K_j) Delta_tau, a bound on |v~_0(x0) - v_0(x0)|.
inline double value_error_bound(const LipschitzLedger& ledger) {
    const std::size_t T = ledger.delta.size();
    require(ledger.L.size() >= T, "value_error_bound: missing L constants");
    require(T == 0 || ledger.K.size() + 1 >= T, "value_error_bound: missing K constants");
    double total = 0.0, prod = 1.0;
    for (std::size_t tau = 0; tau < T; ++tau) {
        require(ledger.L[tau] >= 0.0 && ledger.delta[tau] >= 0.0, "value_error_bound: constants must be nonnegative");
        total += ledger.L[tau] * prod * ledger.delta[tau];
        if (tau + 1 < T) {
            require(ledger.K[tau] >= 0.0, "value_error_bound: constants must be nonnegative");
            prod *= ledger.K[tau];
        }
    }
    return total;
}

/**
Bounds on W_p(lambda~_t, lambda_t) for t = 0..T:
  sum_{tau=0}^{t-1} Delta_tau prod_{i=tau+1}^{t-1} LQ_i.
Entry 0 is zero since both chains start from the same law.
*/
inline std::vector<double> marginal_error_bound(const LipschitzLedger& ledger) {
    const std::size_t T = ledger.delta.size();
    require(T == 0 || ledger.LQ.size() + 1 >= T, "marginal_error_bound: missing kernel constants");
    std::vector<double> out(T + 1, 0.0);
    for (std::size_t t = 1; t <= T; ++t) out[t] = ledger.delta[t - 1] + (t >= 2 ? ledger.LQ[t - 1] * out[t - 1] : 0.0);
    return out;
}

/// Lipschitz constant of a function sampled on a finite point set.
inline double lipschitz_on(const PointSet& pts, std::span<const double> values) {
    require(pts.size() == values.size(), "lipschitz_on: size mismatch");
    double best = 0.0;
    for (std::size_t a = 0; a < pts.size(); ++a)
        for (std::size_t b = a + 1; b < pts.size(); ++b) {
            const double d = distance(pts[a], pts[b]);
            if (d > 0.0) best = std::max(best, std::abs(values[a] - values[b]) / d);
        }
    return best;
}

/**
Order-1 constants (A1, A2) for the analysed mappings when the next-stage
value function has Lipschitz constant lip: expectation (lip, 1), AVaR
(lip/alpha, 1/alpha), mean-semideviation with p = 1 ((1+kappa) 2 lip, 1+2 kappa).
*/
struct MappingConstants {
    double L = 0.0;
    double K = 0.0;
};

inline MappingConstants mapping_constants(const RiskMapping& m, double lip) {
    struct Visitor {
        double lip;
        MappingConstants operator()(const risk::Expectation&) const { return {lip, 1.0}; }
        MappingConstants operator()(const risk::Stopping&) const { return {lip, 1.0}; }
        MappingConstants operator()(const risk::Avar& a) const { return {lip / a.alpha, 1.0 / a.alpha}; }
        MappingConstants operator()(const risk::MeanSemideviation& s) const {
            require(s.p == 1.0, "mapping_constants: only p = 1 is covered for mean-semideviation");
            return {(1.0 + s.kappa) * 2.0 * lip, 1.0 + 2.0 * s.kappa};
        }
        MappingConstants operator()(const risk::Spectral& s) const {
            double inv = 0.0;
            for (const auto& [a, w] : s.theta) inv += w / a;
            return {lip * inv, inv};
        }
    };
    return std::visit(Visitor{lip}, m);
}

} // namespace itd
