#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <vector>

#include "itd/core.hpp"
#include "itd/random.hpp"

namespace itd {

/**
@brief Correlated geometric Brownian motion under the pricing measure.

Asset i follows dS_i = r S_i dt + S_i sigma[i] . dW with sigma[i] the i-th
row of the volatility matrix.
*/
struct GbmModel {
    std::vector<double> s0;
    double r = 0.0;
    std::vector<std::vector<double>> sigma;
    double T = 1.0;
    std::size_t N = 1;

    std::size_t dim() const { return s0.size(); }
    double dt() const { return T / static_cast<double>(N); }

    void validate() const {
        require(!s0.empty(), "GbmModel: s0 is empty");
        for (double s : s0) require(s > 0.0 && std::isfinite(s), "GbmModel: initial prices must be positive");
        require(sigma.size() == s0.size(), "GbmModel: sigma must have one row per asset");
        for (const auto& row : sigma) {
            require(row.size() == s0.size(), "GbmModel: sigma must be square");
            for (double x : row) require(std::isfinite(x), "GbmModel: non-finite volatility");
        }
        require(N >= 1, "GbmModel: N must be >= 1");
        require(T > 0.0 && std::isfinite(T), "GbmModel: T must be positive");
        require(std::isfinite(r), "GbmModel: r must be finite");
    }

    /// r - |sigma[i]|^2 / 2
    double drift(std::size_t i) const {
        double s2 = 0.0;
        for (double x : sigma[i]) s2 += x * x;
        return r - 0.5 * s2;
    }
};

struct BasketPut {
    double strike = 10.0;
    std::vector<double> weights;

    void validate(std::size_t dim) const {
        require(strike > 0.0, "BasketPut: strike must be positive");
        require(weights.size() == dim, "BasketPut: one weight per asset is required");
        double total = 0.0;
        for (double w : weights) {
            require(w >= 0.0, "BasketPut: weights must be nonnegative");
            total += w;
        }
        require(std::abs(total - 1.0) <= 1e-12, "BasketPut: weights must sum to 1");
    }
};

/// max(0, K - w.s)
inline double basket_put_payoff(const BasketPut& opt, std::span<const double> s) {
    require(s.size() == opt.weights.size(), "basket_put_payoff: dimension mismatch");
    double basket = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) basket += opt.weights[i] * s[i];
    return std::max(0.0, opt.strike - basket);
}

namespace detail {
inline void gbm_step_into(const GbmModel& m, std::span<const double> state, double dt, Rng& rng, std::span<double> out,
                          std::vector<double>& z) {
    std::normal_distribution<double> normal(0.0, 1.0);
    const std::size_t n = m.dim();
    z.resize(n);
    for (double& x : z) x = normal(rng);
    const double sq = std::sqrt(dt);
    for (std::size_t i = 0; i < n; ++i) {
        double shock = 0.0;
        for (std::size_t j = 0; j < n; ++j) shock += m.sigma[i][j] * z[j];
        out[i] = state[i] * std::exp(m.drift(i) * dt + shock * sq);
    }
}
} // namespace detail

/// Exact lognormal step S'_i = S_i exp((r - |sigma_i|^2/2) dt + sigma_i . Z sqrt(dt)).
inline std::vector<double> gbm_sample_step(const GbmModel& m, std::span<const double> state, double dt, Rng& rng) {
    require(dt > 0.0, "gbm_sample_step: dt must be positive");
    require(state.size() == m.dim(), "gbm_sample_step: state dimension mismatch");
    std::vector<double> out(m.dim()), z;
    detail::gbm_step_into(m, state, dt, rng, out, z);
    return out;
}

/// One-step GBM successors of any state; usable as a KernelSampler.
class GbmSampler {
public:
    GbmSampler(GbmModel model, double dt) : model_(std::move(model)), dt_(dt) {
        model_.validate();
        require(dt_ > 0.0, "GbmSampler: dt must be positive");
    }
    explicit GbmSampler(const GbmModel& model) : GbmSampler(model, model.dt()) {}

    std::size_t dim() const { return model_.dim(); }
    double dt() const { return dt_; }

    void sample(std::span<const double> z, std::size_t count, Rng& rng, PointSet& out) const {
        std::vector<double> buf(dim()), shocks;
        for (std::size_t k = 0; k < count; ++k) {
            detail::gbm_step_into(model_, z, dt_, rng, buf, shocks);
            out.push_back(buf);
        }
    }

private:
    GbmModel model_;
    double dt_;
};

inline GbmSampler gbm_kernel_sampler(const GbmModel& model) { return GbmSampler(model); }

/// Nodes in the n-dimensional recombining tree over steps 0..N: sum_{i=0}^{N} (i+1)^n.
inline std::uint64_t binomial_node_count(std::size_t n, std::size_t N) {
    require(n >= 1, "binomial_node_count: n must be >= 1");
    std::uint64_t total = 0;
    for (std::size_t i = 0; i <= N; ++i) {
        std::uint64_t term = 1;
        for (std::size_t d = 0; d < n; ++d) {
            if (term > std::numeric_limits<std::uint64_t>::max() / (i + 1)) throw InvalidArgument("binomial_node_count: overflow");
            term *= i + 1;
        }
        if (total > std::numeric_limits<std::uint64_t>::max() - term) throw InvalidArgument("binomial_node_count: overflow");
        total += term;
    }
    return total;
}

struct BinomialOptions {
    bool american = true;
    std::uint64_t node_cap = 50'000'000; // nodes in the final layer
};

/**
Put price on the recombining tree of symmetric +-sqrt(dt) Brownian steps per
coordinate, 2^n equiprobable branches. Node (i, j) carries
  S_d = s0_d exp((r - |sigma_d|^2/2) i dt + sum_e sigma_de (2 j_e - i) sqrt(dt)).
Backward step: V = max(payoff, e^{-r dt} * average over children).
*/
inline double binomial_price(const GbmModel& m, const BasketPut& opt, const BinomialOptions& bo = {}) {
    m.validate();
    opt.validate(m.dim());
    const std::size_t n = m.dim(), N = m.N;
    std::uint64_t last = 1;
    for (std::size_t d = 0; d < n; ++d) {
        if (last > bo.node_cap / (N + 1)) throw InvalidArgument("binomial_price: tree exceeds the node cap");
        last *= N + 1;
    }
    const double dt = m.dt(), sq = std::sqrt(dt), disc = std::exp(-m.r * dt);
    std::vector<double> drift(n);
    for (std::size_t d = 0; d < n; ++d) drift[d] = m.drift(d);

    // layer i has (i+1)^n nodes, index = sum_d j_d (i+1)^d
    auto payoff_at = [&](std::size_t i, const std::vector<std::size_t>& j, std::vector<double>& s) {
        for (std::size_t d = 0; d < n; ++d) {
            double shock = 0.0;
            for (std::size_t e = 0; e < n; ++e)
                shock += m.sigma[d][e] * (2.0 * static_cast<double>(j[e]) - static_cast<double>(i));
            s[d] = m.s0[d] * std::exp(drift[d] * static_cast<double>(i) * dt + shock * sq);
        }
        return basket_put_payoff(opt, s);
    };
    auto layer_size = [&](std::size_t i) {
        std::size_t sz = 1;
        for (std::size_t d = 0; d < n; ++d) sz *= i + 1;
        return sz;
    };
    auto for_each_node = [&](std::size_t i, auto&& fn) {
        std::vector<std::size_t> j(n, 0);
        const std::size_t sz = layer_size(i);
        for (std::size_t idx = 0; idx < sz; ++idx) {
            fn(idx, j);
            for (std::size_t d = 0; d < n; ++d) {
                if (++j[d] <= i) break;
                j[d] = 0;
            }
        }
    };

    std::vector<double> v(layer_size(N)), s(n);
    for_each_node(N, [&](std::size_t idx, const std::vector<std::size_t>& j) { v[idx] = payoff_at(N, j, s); });

    std::vector<double> work;
    for (std::size_t i = N; i-- > 0;) {
        // average over the two children along each axis in turn: (i+2)^n -> (i+1)^n
        work = v;
        std::vector<std::size_t> extent(n, i + 2);
        for (std::size_t axis = 0; axis < n; ++axis) {
            std::vector<std::size_t> next_extent = extent;
            next_extent[axis] = i + 1;
            std::size_t stride = 1;
            for (std::size_t d = 0; d < axis; ++d) stride *= extent[d];
            const std::size_t len = extent[axis];
            std::size_t outer = 1;
            for (std::size_t d = axis + 1; d < n; ++d) outer *= extent[d];
            std::vector<double> out(stride * (i + 1) * outer);
            for (std::size_t o = 0; o < outer; ++o)
                for (std::size_t a = 0; a < i + 1; ++a)
                    for (std::size_t in = 0; in < stride; ++in) {
                        const std::size_t src = in + stride * (a + len * o);
                        out[in + stride * (a + (i + 1) * o)] = 0.5 * (work[src] + work[src + stride]);
                    }
            work.swap(out);
            extent = next_extent;
        }
        v.assign(layer_size(i), 0.0);
        for_each_node(i, [&](std::size_t idx, const std::vector<std::size_t>& j) {
            const double cont = disc * work[idx];
            v[idx] = bo.american ? std::max(payoff_at(i, j, s), cont) : cont;
        });
    }
    return v[0];
}

inline double binomial_price_american(const GbmModel& m, const BasketPut& opt) { return binomial_price(m, opt, {true}); }
inline double binomial_price_european(const GbmModel& m, const BasketPut& opt) { return binomial_price(m, opt, {false}); }

} // namespace itd
