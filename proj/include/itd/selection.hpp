#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <queue>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "itd/core.hpp"
#include "itd/lp.hpp"
#include "itd/parallel.hpp"
#include "itd/random.hpp"
#include "itd/transport.hpp"

namespace itd {

/**
@brief Particles drawn from each source state, stored grouped by source.

Particles of source s occupy [offsets[s], offsets[s+1]). A source with zero
weight may have no particles.
*/
class ParticleCloud {
public:
    ParticleCloud() = default;
    ParticleCloud(PointSet points, std::vector<std::size_t> offsets, std::vector<double> source_weights)
        : points_(std::move(points)), offsets_(std::move(offsets)), source_weights_(std::move(source_weights)) {
        require(!source_weights_.empty(), "ParticleCloud: no sources");
        require(offsets_.size() == source_weights_.size() + 1, "ParticleCloud: offsets do not match the source count");
        require(offsets_.front() == 0 && offsets_.back() == points_.size(), "ParticleCloud: offsets do not cover the particles");
        for (std::size_t s = 0; s < sources(); ++s) {
            require(offsets_[s] <= offsets_[s + 1], "ParticleCloud: offsets must be non-decreasing");
            require(source_weights_[s] >= 0.0, "ParticleCloud: negative source weight");
            require(source_weights_[s] == 0.0 || count(s) >= 1, "ParticleCloud: a weighted source has no particles");
        }
        require(std::abs(stable_sum(source_weights_) - 1.0) <= 1e-12, "ParticleCloud: source weights must sum to 1");
        weights_.resize(points_.size());
        owner_.resize(points_.size());
        for (std::size_t s = 0; s < sources(); ++s)
            for (std::size_t i = offsets_[s]; i < offsets_[s + 1]; ++i) {
                weights_[i] = source_weights_[s] / static_cast<double>(count(s));
                owner_[i] = s;
            }
    }

    static ParticleCloud from_groups(const std::vector<PointSet>& groups, std::vector<double> source_weights) {
        PointSet all;
        std::vector<std::size_t> offsets{0};
        for (const auto& g : groups) {
            for (std::size_t i = 0; i < g.size(); ++i) all.push_back(g[i]);
            offsets.push_back(all.size());
        }
        return ParticleCloud(std::move(all), std::move(offsets), std::move(source_weights));
    }

    const PointSet& points() const { return points_; }
    std::size_t size() const { return points_.size(); }
    std::size_t dim() const { return points_.dim(); }
    std::size_t sources() const { return source_weights_.size(); }
    std::size_t begin(std::size_t s) const { return offsets_[s]; }
    std::size_t end(std::size_t s) const { return offsets_[s + 1]; }
    std::size_t count(std::size_t s) const { return offsets_[s + 1] - offsets_[s]; }
    double source_weight(std::size_t s) const { return source_weights_[s]; }
    const std::vector<double>& source_weights() const { return source_weights_; }
    /// lambda_s / |I_s| for the particle's source
    double weight(std::size_t i) const { return weights_[i]; }
    std::size_t owner(std::size_t i) const { return owner_[i]; }

private:
    PointSet points_;
    std::vector<std::size_t> offsets_;
    std::vector<double> source_weights_;
    std::vector<double> weights_;
    std::vector<std::size_t> owner_;
};

struct SelectionProblem {
    ParticleCloud cloud;
    PointSet candidates;
    std::size_t budget = 1;
    GroundCost cost{1.0};

    void validate() const {
        require(!candidates.empty(), "SelectionProblem: candidate set is empty");
        require(candidates.dim() == cloud.dim(), "SelectionProblem: candidates and particles differ in dimension");
        require(budget >= 1, "SelectionProblem: budget must be at least 1");
        require(budget <= candidates.size(), "SelectionProblem: budget exceeds the number of candidates");
    }

    std::size_t beta_count() const { return cloud.size() * candidates.size(); }
    double particle_cost(std::size_t i, std::size_t k) const { return cost(cloud.points()[i], candidates[k]); }
};

enum class SelectionMethod { exact_mip, lp_round, greedy };

inline std::string to_string(SelectionMethod m) {
    switch (m) {
    case SelectionMethod::exact_mip: return "exact";
    case SelectionMethod::lp_round: return "lp-round";
    case SelectionMethod::greedy: return "greedy";
    }
    return "?";
}

inline SelectionMethod parse_selection_method(const std::string& name) {
    if (name == "exact" || name == "exact_mip") return SelectionMethod::exact_mip;
    if (name == "lp-round" || name == "lp_round") return SelectionMethod::lp_round;
    if (name == "greedy") return SelectionMethod::greedy;
    throw InvalidArgument("unknown selector '" + name + "' (expected exact, lp-round or greedy)");
}

/**
@brief Chosen sites and the particle-to-site assignment.

Every selector finishes with a nearest-site assignment, so beta is integral:
particle i sends all its mass to candidate assignment[i].
*/
struct SelectionResult {
    std::vector<char> gamma;             // per candidate
    std::vector<std::size_t> assignment; // per particle, a candidate index with gamma = 1
    double objective = 0.0;              // sum_i w_i d(x_i, site)^p
    SelectionMethod method = SelectionMethod::greedy;
    double lower_bound = std::numeric_limits<double>::quiet_NaN(); // relaxation value, lp_round only
    bool relaxation_exact = false;                                  // lower bound from the simplex (else Lagrangian)
    std::size_t rounding_attempts = 0;

    std::vector<std::size_t> sites() const {
        std::vector<std::size_t> out;
        for (std::size_t k = 0; k < gamma.size(); ++k)
            if (gamma[k]) out.push_back(k);
        return out;
    }
    double beta(std::size_t particle, std::size_t k) const { return assignment[particle] == k ? 1.0 : 0.0; }
};

struct Assignment {
    std::vector<std::size_t> site; // index into the site list
    std::vector<double> cost;      // d^p to that site
};

/// Each particle goes to its nearest site; ties go to the lowest site index.
inline Assignment nearest_assignment(const PointSet& particles, const PointSet& sites, const GroundCost& cost) {
    require(!sites.empty(), "nearest_assignment: no sites");
    require(particles.empty() || particles.dim() == sites.dim(), "nearest_assignment: dimension mismatch");
    Assignment a;
    a.site.resize(particles.size());
    a.cost.resize(particles.size());
    parallel_for(
        particles.size(),
        [&](std::size_t i) {
            double best = std::numeric_limits<double>::infinity();
            std::size_t arg = 0;
            for (std::size_t k = 0; k < sites.size(); ++k) {
                const double d = squared_distance(particles[i], sites[k]);
                if (d < best) {
                    best = d;
                    arg = k;
                }
            }
            a.site[i] = arg;
            a.cost[i] = cost.p == 2.0 ? best : std::pow(best, 0.5 * cost.p);
        },
        256);
    return a;
}

/// Weighted cost of a particle cloud sent to its nearest sites.
inline double assignment_objective(const ParticleCloud& cloud, const Assignment& a) {
    double total = 0.0;
    for (std::size_t i = 0; i < cloud.size(); ++i) total += cloud.weight(i) * a.cost[i];
    return total;
}

/// Builds the result for a fixed set of open candidates.
inline SelectionResult evaluate_sites(const SelectionProblem& problem, const std::vector<std::size_t>& open,
                                      SelectionMethod method) {
    require(!open.empty(), "evaluate_sites: no open candidates");
    std::vector<std::size_t> sorted = open;
    std::sort(sorted.begin(), sorted.end());
    PointSet sites(problem.candidates.dim());
    for (std::size_t k : sorted) sites.push_back(problem.candidates[k]);
    const auto a = nearest_assignment(problem.cloud.points(), sites, problem.cost);
    SelectionResult r;
    r.method = method;
    r.gamma.assign(problem.candidates.size(), 0);
    for (std::size_t k : sorted) r.gamma[k] = 1;
    r.assignment.resize(problem.cloud.size());
    for (std::size_t i = 0; i < problem.cloud.size(); ++i) r.assignment[i] = sorted[a.site[i]];
    r.objective = assignment_objective(problem.cloud, a);
    return r;
}

/// Per-source mean transport cost (1/|I_s|) sum_i d^p; zero for empty sources.
inline std::vector<double> per_source_cost(const SelectionProblem& problem, const SelectionResult& result) {
    const auto& cl = problem.cloud;
    std::vector<double> out(cl.sources(), 0.0);
    for (std::size_t s = 0; s < cl.sources(); ++s) {
        if (cl.count(s) == 0) continue;
        double sum = 0.0;
        for (std::size_t i = cl.begin(s); i < cl.end(s); ++i) sum += problem.particle_cost(i, result.assignment[i]);
        out[s] = sum / static_cast<double>(cl.count(s));
    }
    return out;
}

/// Checks the assignment and capacity constraints; throws SolverFailure if any fails.
inline void check_selection(const SelectionProblem& problem, const SelectionResult& r) {
    if (r.gamma.size() != problem.candidates.size() || r.assignment.size() != problem.cloud.size())
        throw SolverFailure("selection result has the wrong shape");
    std::size_t open = 0;
    for (char g : r.gamma) open += g ? 1 : 0;
    if (open == 0 || open > problem.budget) throw SolverFailure("selection result violates the budget");
    for (std::size_t k : r.assignment)
        if (k >= r.gamma.size() || !r.gamma[k]) throw SolverFailure("particle assigned to a closed site");
}

namespace detail {

// Particles in kd order, stored one axis at a time, cut into small blocks
// with bounding boxes so sweeps can skip blocks that cannot improve.
struct Columns {
    static constexpr std::size_t leaf = 64;
    std::size_t n = 0;
    std::vector<std::size_t> order; // position -> particle
    std::vector<std::vector<double>> axis;
    std::vector<std::size_t> block_begin; // blocks().size() + 1 entries
    std::vector<double> lo, hi;           // per block, dim entries each

    explicit Columns(const ParticleCloud& cloud) : n(cloud.size()), order(cloud.size()) {
        const auto& pts = cloud.points();
        const std::size_t dim = cloud.dim();
        std::iota(order.begin(), order.end(), std::size_t{0});
        split(pts, 0, n);
        block_begin.push_back(n);
        axis.assign(dim, std::vector<double>(n));
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t a = 0; a < dim; ++a) axis[a][j] = pts[order[j]][a];
        const std::size_t B = blocks();
        lo.assign(B * dim, std::numeric_limits<double>::infinity());
        hi.assign(B * dim, -std::numeric_limits<double>::infinity());
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t a = 0; a < dim; ++a)
                for (std::size_t j = block_begin[b]; j < block_begin[b + 1]; ++j) {
                    lo[b * dim + a] = std::min(lo[b * dim + a], axis[a][j]);
                    hi[b * dim + a] = std::max(hi[b * dim + a], axis[a][j]);
                }
    }

    std::size_t blocks() const { return block_begin.size() - 1; }

    // |z - box_b|^p, a lower bound on the cost of every particle in block b
    double box_cost(std::size_t b, std::span<const double> z, double p) const {
        const std::size_t dim = axis.size();
        double sq = 0.0;
        for (std::size_t a = 0; a < dim; ++a) {
            const double g = std::max({lo[b * dim + a] - z[a], z[a] - hi[b * dim + a], 0.0});
            sq += g * g;
        }
        return p == 1.0 ? std::sqrt(sq) : (p == 2.0 ? sq : std::pow(sq, 0.5 * p));
    }

    // out[j] = |x_order[j] - z|^p for positions j in [from, to)
    void cost_to(std::span<const double> z, double p, double* out, std::size_t from, std::size_t to) const {
        std::fill(out + from, out + to, 0.0);
        for (std::size_t a = 0; a < axis.size(); ++a) {
            const double* x = axis[a].data();
            const double c = z[a];
            for (std::size_t j = from; j < to; ++j) out[j] += (x[j] - c) * (x[j] - c);
        }
        if (p == 1.0) {
            for (std::size_t j = from; j < to; ++j) out[j] = std::sqrt(out[j]);
        } else if (p != 2.0) {
            for (std::size_t j = from; j < to; ++j) out[j] = std::pow(out[j], 0.5 * p);
        }
    }
    void cost_to(std::span<const double> z, double p, double* out) const { cost_to(z, p, out, 0, n); }

private:
    void split(const PointSet& pts, std::size_t from, std::size_t to) {
        if (to - from <= leaf) {
            if (to > from) block_begin.push_back(from);
            return;
        }
        const std::size_t dim = pts.dim();
        std::size_t best_axis = 0;
        double best_extent = -1.0;
        for (std::size_t a = 0; a < dim; ++a) {
            double l = std::numeric_limits<double>::infinity(), h = -l;
            for (std::size_t j = from; j < to; ++j) {
                l = std::min(l, pts[order[j]][a]);
                h = std::max(h, pts[order[j]][a]);
            }
            if (h - l > best_extent) {
                best_extent = h - l;
                best_axis = a;
            }
        }
        const std::size_t mid = from + (to - from) / 2;
        auto first = order.begin() + static_cast<std::ptrdiff_t>(from);
        std::nth_element(first, order.begin() + static_cast<std::ptrdiff_t>(mid), order.begin() + static_cast<std::ptrdiff_t>(to),
                         [&](std::size_t x, std::size_t y) {
                             const double a = pts[x][best_axis], b = pts[y][best_axis];
                             return a < b || (a == b && x < y);
                         });
        split(pts, from, mid);
        split(pts, mid, to);
    }
};

// cost matrix w_i * d(x_i, z_k)^p, particles by candidates
inline std::vector<double> weighted_costs(const SelectionProblem& problem) {
    const std::size_t n = problem.cloud.size(), K = problem.candidates.size();
    std::vector<double> c(n * K);
    parallel_for(
        n,
        [&](std::size_t i) {
            for (std::size_t k = 0; k < K; ++k) c[i * K + k] = problem.cloud.weight(i) * problem.particle_cost(i, k);
        },
        64);
    return c;
}

} // namespace detail

/**
Greedy facility selection with lazy gain updates.

The first site is the weighted 1-median of the candidates; afterwards each
step opens the candidate with the largest cost reduction. Ties go to the
lowest index, and the loop always opens exactly min(budget, K) sites.
*/
inline SelectionResult select_greedy(const SelectionProblem& problem) {
    problem.validate();
    const std::size_t n = problem.cloud.size(), K = problem.candidates.size();
    const std::size_t M = std::min(problem.budget, K);
    const double p = problem.cost.p;

    std::vector<std::size_t> open;
    if (M == K) {
        open.resize(K);
        std::iota(open.begin(), open.end(), std::size_t{0});
        return evaluate_sites(problem, open, SelectionMethod::greedy);
    }

    // everything below is indexed by kd position, not particle index
    const detail::Columns cols(problem.cloud);
    const std::size_t B = cols.blocks();
    std::vector<double> w(n);
    for (std::size_t j = 0; j < n; ++j) w[j] = problem.cloud.weight(cols.order[j]);

    // 1-median
    std::vector<double> total(K, 0.0);
    parallel_for(K, [&](std::size_t k) {
        std::vector<double> d(n);
        cols.cost_to(problem.candidates[k], p, d.data());
        double t = 0.0;
        for (std::size_t j = 0; j < n; ++j) t += w[j] * d[j];
        total[k] = t;
    });
    const std::size_t first = static_cast<std::size_t>(std::min_element(total.begin(), total.end()) - total.begin());
    open.push_back(first);
    std::vector<double> cur(n), block_max(B, 0.0);
    cols.cost_to(problem.candidates[first], p, cur.data());
    for (std::size_t b = 0; b < B; ++b)
        block_max[b] = *std::max_element(cur.begin() + static_cast<std::ptrdiff_t>(cols.block_begin[b]),
                                         cur.begin() + static_cast<std::ptrdiff_t>(cols.block_begin[b + 1]));

    auto gain = [&](std::size_t k, std::vector<double>& d) {
        const auto z = problem.candidates[k];
        double g = 0.0;
        for (std::size_t b = 0; b < B; ++b) {
            if (cols.box_cost(b, z, p) >= block_max[b]) continue;
            const std::size_t from = cols.block_begin[b], to = cols.block_begin[b + 1];
            cols.cost_to(z, p, d.data(), from, to);
            for (std::size_t j = from; j < to; ++j) g += w[j] * std::max(cur[j] - d[j], 0.0);
        }
        return g;
    };

    struct Entry {
        double bound;
        std::size_t k;
        std::size_t round;
    };
    auto worse = [](const Entry& a, const Entry& b) { return a.bound < b.bound || (a.bound == b.bound && a.k > b.k); };
    std::priority_queue<Entry, std::vector<Entry>, decltype(worse)> heap(worse);
    {
        std::vector<double> g0(K, 0.0);
        parallel_for(K, [&](std::size_t k) {
            std::vector<double> d(n);
            if (k != first) g0[k] = gain(k, d);
        });
        for (std::size_t k = 0; k < K; ++k)
            if (k != first) heap.push({g0[k], k, 1});
    }
    std::vector<double> d(n);
    for (std::size_t round = 1; round < M; ++round) {
        while (true) {
            Entry top = heap.top();
            heap.pop();
            if (top.round == round) {
                open.push_back(top.k);
                const auto z = problem.candidates[top.k];
                for (std::size_t b = 0; b < B; ++b) {
                    if (cols.box_cost(b, z, p) >= block_max[b]) continue;
                    const std::size_t from = cols.block_begin[b], to = cols.block_begin[b + 1];
                    cols.cost_to(z, p, d.data(), from, to);
                    double mx = 0.0;
                    for (std::size_t j = from; j < to; ++j) {
                        cur[j] = std::min(cur[j], d[j]);
                        mx = std::max(mx, cur[j]);
                    }
                    block_max[b] = mx;
                }
                break;
            }
            heap.push({gain(top.k, d), top.k, round});
        }
    }
    return evaluate_sites(problem, open, SelectionMethod::greedy);
}

/**
Greedy selection for the minimax objective max_s (1/|I_s|) sum_i d^p over
sources with positive weight. Each step opens the candidate giving the
smallest worst-source cost; equal maxima are broken by the total weighted
cost, then by index.
*/
inline SelectionResult select_greedy_minimax(const SelectionProblem& problem) {
    problem.validate();
    const auto& cl = problem.cloud;
    const std::size_t n = cl.size(), K = problem.candidates.size(), S = cl.sources();
    const std::size_t M = std::min(problem.budget, K);
    const auto& pts = cl.points();
    const double p = problem.cost.p;

    // distances are reused every round, so cache them when they fit
    const bool cache = n * K <= (std::size_t{1} << 26);
    std::vector<float> dcache;
    if (cache) {
        dcache.resize(n * K);
        parallel_for(K, [&](std::size_t k) {
            for (std::size_t i = 0; i < n; ++i) dcache[k * n + i] = static_cast<float>(distance_pow(pts[i], problem.candidates[k], p));
        });
    }
    auto dpow = [&](std::size_t i, std::size_t k) {
        return cache ? static_cast<double>(dcache[k * n + i]) : distance_pow(pts[i], problem.candidates[k], p);
    };

    std::vector<double> cur(n, std::numeric_limits<double>::infinity());
    std::vector<char> is_open(K, 0);
    std::vector<std::size_t> open;
    std::vector<double> worst(K), sum(K), src(K * S);
    for (std::size_t round = 0; round < M; ++round) {
        parallel_for(K, [&](std::size_t k) {
            if (is_open[k]) return;
            double* acc = &src[k * S];
            std::fill(acc, acc + S, 0.0);
            for (std::size_t i = 0; i < n; ++i) acc[cl.owner(i)] += std::min(cur[i], dpow(i, k));
            double w = 0.0, t = 0.0;
            for (std::size_t s = 0; s < S; ++s) {
                if (cl.source_weight(s) == 0.0 || cl.count(s) == 0) continue;
                const double mean = acc[s] / static_cast<double>(cl.count(s));
                w = std::max(w, mean);
                t += cl.source_weight(s) * mean;
            }
            worst[k] = w;
            sum[k] = t;
        });
        std::size_t best = K;
        for (std::size_t k = 0; k < K; ++k) {
            if (is_open[k]) continue;
            if (best == K || worst[k] < worst[best] || (worst[k] == worst[best] && sum[k] < sum[best])) best = k;
        }
        is_open[best] = 1;
        open.push_back(best);
        for (std::size_t i = 0; i < n; ++i) cur[i] = std::min(cur[i], dpow(i, best));
    }
    return evaluate_sites(problem, open, SelectionMethod::greedy);
}

struct ExactOptions {
    std::size_t max_beta = 2000;
    std::size_t max_nodes = 5'000'000;
};

/**
Globally optimal selection by branch and bound over the open/closed status
of each candidate. The bound at a node is the assignment cost when every
undecided candidate is also open; the greedy solution seeds the incumbent.
Intended for small instances (test oracle).
*/
inline SelectionResult select_exact_mip(const SelectionProblem& problem, const ExactOptions& opt = {}) {
    problem.validate();
    require(problem.beta_count() <= opt.max_beta,
            "select_exact_mip: instance has " + std::to_string(problem.beta_count()) + " assignment variables, cap is " +
                std::to_string(opt.max_beta));
    const std::size_t n = problem.cloud.size(), K = problem.candidates.size(), M = problem.budget;
    const auto c = detail::weighted_costs(problem);

    auto greedy = select_greedy(problem);
    double incumbent = greedy.objective;
    std::vector<std::size_t> best_open = greedy.sites();

    // state: 0 undecided, 1 open, 2 closed
    std::vector<char> state(K, 0);
    std::size_t nodes = 0;
    const double slack = 1e-12 * std::max(1.0, incumbent);

    auto bound = [&](bool include_undecided) {
        double t = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double b = std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < K; ++k)
                if (state[k] == 1 || (include_undecided && state[k] == 0)) b = std::min(b, c[i * K + k]);
            t += b;
        }
        return t;
    };

    // depth-first over candidates in index order
    auto recurse = [&](auto&& self, std::size_t k, std::size_t opened) -> void {
        if (++nodes > opt.max_nodes) throw SolverFailure("select_exact_mip: node limit reached");
        if (opened == M || k == K) {
            if (opened == 0) return;
            for (std::size_t j = k; j < K; ++j) state[j] = 2;
            const double v = bound(false);
            if (v < incumbent - slack) {
                incumbent = v;
                best_open.clear();
                for (std::size_t j = 0; j < K; ++j)
                    if (state[j] == 1) best_open.push_back(j);
            }
            for (std::size_t j = k; j < K; ++j) state[j] = 0;
            return;
        }
        if (bound(true) >= incumbent - slack) return;
        state[k] = 1;
        self(self, k + 1, opened + 1);
        state[k] = 2;
        self(self, k + 1, opened);
        state[k] = 0;
    };
    recurse(recurse, 0, 0);
    return evaluate_sites(problem, best_open, SelectionMethod::exact_mip);
}

struct Relaxation {
    double value = 0.0;        // optimal relaxation value (or a Lagrangian lower bound)
    std::vector<double> gamma; // fractional openings
    bool exact = false;        // true when solved by the simplex
};

struct LpRoundOptions {
    std::size_t simplex_max_beta = 2000;
    std::size_t retries = 32;
    std::size_t lagrange_iters = 200;
};

/**
Relaxation of the selection program with gamma in [0,1].

Small instances go to the dense simplex. Larger ones use the Lagrangian
dual that prices out the assignment rows: for multipliers u_i the inner
problem opens the (at most M) candidates with the most negative
rho_k = sum_i min(0, w_i d_ik - u_i). Multipliers follow subgradient steps
and gamma is the average of the inner solutions.
*/
inline Relaxation solve_relaxation(const SelectionProblem& problem, const LpRoundOptions& opt = {}) {
    problem.validate();
    const std::size_t n = problem.cloud.size(), K = problem.candidates.size(), M = problem.budget;
    Relaxation out;
    if (problem.beta_count() <= opt.simplex_max_beta) {
        const auto c = detail::weighted_costs(problem);
        lp::Problem lp;
        lp.num_vars = n * K + K; // beta then gamma
        lp.cost.assign(lp.num_vars, 0.0);
        for (std::size_t i = 0; i < n * K; ++i) lp.cost[i] = c[i];
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < K; ++k) lp.add_row({{i * K + k, 1.0}, {n * K + k, -1.0}}, lp::Sense::less_equal, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<std::pair<std::size_t, double>> t;
            for (std::size_t k = 0; k < K; ++k) t.push_back({i * K + k, 1.0});
            lp.add_row(std::move(t), lp::Sense::equal, 1.0);
        }
        {
            std::vector<std::pair<std::size_t, double>> t;
            for (std::size_t k = 0; k < K; ++k) t.push_back({n * K + k, 1.0});
            lp.add_row(std::move(t), lp::Sense::less_equal, static_cast<double>(M));
        }
        for (std::size_t k = 0; k < K; ++k) lp.add_row({{n * K + k, 1.0}}, lp::Sense::less_equal, 1.0);
        const auto sol = lp::solve(lp);
        if (sol.status != lp::Status::optimal) throw SolverFailure("selection relaxation: simplex did not converge");
        out.value = sol.objective;
        out.gamma.assign(sol.x.begin() + static_cast<std::ptrdiff_t>(n * K), sol.x.end());
        out.exact = true;
        return out;
    }

    const auto& pts = problem.cloud.points();
    const double p = problem.cost.p;
    auto wd = [&](std::size_t i, std::size_t k) { return problem.cloud.weight(i) * distance_pow(pts[i], problem.candidates[k], p); };

    const double upper = select_greedy(problem).objective;
    // start from the cost of the nearest candidate
    std::vector<double> u(n, std::numeric_limits<double>::infinity());
    parallel_for(n, [&](std::size_t i) {
        for (std::size_t k = 0; k < K; ++k) u[i] = std::min(u[i], wd(i, k));
    }, 64);
    std::vector<double> rho(K), avg(K, 0.0), g(n);
    std::vector<std::size_t> order(K);
    double best = -std::numeric_limits<double>::infinity(), step_scale = 2.0, total_weight = 0.0;
    std::size_t stall = 0;
    for (std::size_t it = 0; it < opt.lagrange_iters; ++it) {
        parallel_for(K, [&](std::size_t k) {
            double r = 0.0;
            for (std::size_t i = 0; i < n; ++i) r += std::min(0.0, wd(i, k) - u[i]);
            rho[k] = r;
        });
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rho[a] < rho[b]; });
        double value = std::accumulate(u.begin(), u.end(), 0.0);
        std::vector<std::size_t> chosen;
        for (std::size_t j = 0; j < M && rho[order[j]] < 0.0; ++j) {
            value += rho[order[j]];
            chosen.push_back(order[j]);
        }
        if (it == 0 || value > best + 1e-12 * std::abs(best)) {
            best = value;
            stall = 0;
        } else if (++stall >= 10) {
            step_scale *= 0.5;
            stall = 0;
        }
        const double wgt = static_cast<double>(it + 1);
        for (std::size_t k : chosen) avg[k] += wgt;
        total_weight += wgt;

        double norm2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double covered = 0.0;
            for (std::size_t k : chosen)
                if (wd(i, k) < u[i]) covered += 1.0;
            g[i] = 1.0 - covered;
            norm2 += g[i] * g[i];
        }
        if (norm2 == 0.0 || step_scale < 1e-6) break;
        const double step = step_scale * std::max(upper - value, 1e-12 * std::abs(upper)) / norm2;
        for (std::size_t i = 0; i < n; ++i) u[i] += step * g[i];
    }
    for (double& v : avg) v /= total_weight;
    out.value = best;
    out.gamma = std::move(avg);
    out.exact = false;
    return out;
}

/**
LP relaxation followed by Bernoulli rounding: each candidate opens
independently with probability gamma_k. Draws with no open site or more
than the budget are redrawn, up to opt.retries times; after that the
budget-many largest gamma are opened. Particles are then assigned to the
nearest open site.
*/
inline SelectionResult select_lp_round(const SelectionProblem& problem, std::uint64_t seed, const LpRoundOptions& opt = {}) {
    problem.validate();
    const std::size_t K = problem.candidates.size(), M = problem.budget;
    if (M == K) {
        std::vector<std::size_t> all(K);
        std::iota(all.begin(), all.end(), std::size_t{0});
        auto r = evaluate_sites(problem, all, SelectionMethod::lp_round);
        r.lower_bound = r.objective;
        r.relaxation_exact = true;
        return r;
    }
    const auto relax = solve_relaxation(problem, opt);
    double mass = 0.0;
    for (double g : relax.gamma) mass += g;
    if (!(mass > 0.0)) throw SolverFailure("select_lp_round: relaxation opened no candidate");

    Rng rng = derive_rng(seed, Stream::rounding);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<std::size_t> open;
    std::size_t attempts = 0;
    for (; attempts < opt.retries && open.empty(); ++attempts) {
        std::vector<std::size_t> draw;
        for (std::size_t k = 0; k < K; ++k)
            if (unif(rng) < std::clamp(relax.gamma[k], 0.0, 1.0)) draw.push_back(k);
        if (!draw.empty() && draw.size() <= M) open = std::move(draw);
    }
    if (open.empty()) {
        std::vector<std::size_t> order(K);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return relax.gamma[a] > relax.gamma[b]; });
        for (std::size_t j = 0; j < M && relax.gamma[order[j]] > 0.0; ++j) open.push_back(order[j]);
    }
    auto r = evaluate_sites(problem, open, SelectionMethod::lp_round);
    r.lower_bound = relax.value;
    r.relaxation_exact = relax.exact;
    r.rounding_attempts = attempts;
    return r;
}

struct SelectorConfig {
    SelectionMethod method = SelectionMethod::greedy;
    LpRoundOptions lp_round{};
    ExactOptions exact{};
};

inline SelectionResult run_selector(const SelectionProblem& problem, const SelectorConfig& cfg, std::uint64_t seed) {
    switch (cfg.method) {
    case SelectionMethod::exact_mip: return select_exact_mip(problem, cfg.exact);
    case SelectionMethod::lp_round: return select_lp_round(problem, seed, cfg.lp_round);
    case SelectionMethod::greedy: return select_greedy(problem);
    }
    throw InvalidArgument("unknown selection method");
}

} // namespace itd
