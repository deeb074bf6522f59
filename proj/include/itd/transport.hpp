#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "itd/core.hpp"
#include "itd/lp.hpp"

namespace itd {

/**
@brief Finitely supported probability measure on R^n.

Weights must be nonnegative and sum to one within 1e-12; nothing is
renormalized behind the caller's back. Use normalized() when the weights
are known only up to a constant.
*/
class DiscreteMeasure {
public:
    static constexpr double weight_tolerance = 1e-12;

    DiscreteMeasure() = default;
    DiscreteMeasure(PointSet points, std::vector<double> weights)
        : points_(std::move(points)), weights_(std::move(weights)) {
        validate();
    }

    /// Builds a measure from nonnegative masses, dividing by their total.
    static DiscreteMeasure normalized(PointSet points, std::vector<double> masses) {
        const double total = stable_sum(masses);
        require(total > 0.0 && std::isfinite(total), "DiscreteMeasure: total mass must be positive");
        for (double& w : masses) w /= total;
        return DiscreteMeasure(std::move(points), std::move(masses));
    }

    static DiscreteMeasure dirac(std::vector<double> point) {
        PointSet ps;
        ps.push_back(point);
        return DiscreteMeasure(std::move(ps), {1.0});
    }

    static DiscreteMeasure uniform(PointSet points) {
        const std::size_t n = points.size();
        require(n > 0, "DiscreteMeasure: points list is empty");
        return DiscreteMeasure(std::move(points), std::vector<double>(n, 1.0 / static_cast<double>(n)));
    }

    const PointSet& points() const { return points_; }
    const std::vector<double>& weights() const { return weights_; }
    std::size_t size() const { return weights_.size(); }
    std::size_t dim() const { return points_.dim(); }
    std::span<const double> point(std::size_t i) const { return points_[i]; }
    double weight(std::size_t i) const { return weights_[i]; }

private:
    void validate() const {
        require(!points_.empty(), "DiscreteMeasure: points list is empty");
        require(points_.size() == weights_.size(), "DiscreteMeasure: points and weights differ in length");
        for (double w : weights_) require(w >= 0.0 && std::isfinite(w), "DiscreteMeasure: negative or non-finite weight");
        for (double c : points_.coords()) require(std::isfinite(c), "DiscreteMeasure: non-finite coordinate");
        const double total = stable_sum(weights_);
        require(std::abs(total - 1.0) <= weight_tolerance,
                "DiscreteMeasure: weights sum to " + std::to_string(total) + ", expected 1");
    }

    PointSet points_;
    std::vector<double> weights_;
};

/// Euclidean ground cost raised to the power p >= 1.
struct GroundCost {
    double p = 1.0;

    explicit GroundCost(double p_ = 1.0) : p(p_) { require(p >= 1.0 && std::isfinite(p), "GroundCost: p must be >= 1"); }

    double operator()(std::span<const double> a, std::span<const double> b) const { return distance_pow(a, b, p); }
    double root(double value) const { return p == 1.0 ? value : std::pow(std::max(0.0, value), 1.0 / p); }
};

/// Coupling matrix, row-major, rows index the source measure.
class TransportPlan {
public:
    TransportPlan() = default;
    TransportPlan(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), mass_(rows * cols, 0.0) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    double& operator()(std::size_t i, std::size_t j) { return mass_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return mass_[i * cols_ + j]; }
    const std::vector<double>& data() const { return mass_; }

    std::vector<double> row_sums() const {
        std::vector<double> out(rows_, 0.0);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) out[i] += (*this)(i, j);
        return out;
    }
    std::vector<double> col_sums() const {
        std::vector<double> out(cols_, 0.0);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) out[j] += (*this)(i, j);
        return out;
    }

    /// Largest absolute deviation of the plan's marginals from the given weights.
    double marginal_violation(const std::vector<double>& a, const std::vector<double>& b) const {
        double worst = 0.0;
        const auto r = row_sums();
        const auto c = col_sums();
        for (std::size_t i = 0; i < rows_; ++i) worst = std::max(worst, std::abs(r[i] - a[i]));
        for (std::size_t j = 0; j < cols_; ++j) worst = std::max(worst, std::abs(c[j] - b[j]));
        return worst;
    }

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<double> mass_;
};

struct TransportResult {
    double distance = 0.0;
    double cost = 0.0; // optimal sum of d^p * pi
    TransportPlan plan;
};

inline void check_compatible(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
    require(mu.dim() == nu.dim(), "transport: measures live in different dimensions");
}

/// Dense matrix of d(x_i, y_j)^p.
inline std::vector<double> cost_matrix(const PointSet& xs, const PointSet& ys, const GroundCost& cost) {
    std::vector<double> c(xs.size() * ys.size());
    for (std::size_t i = 0; i < xs.size(); ++i)
        for (std::size_t j = 0; j < ys.size(); ++j) c[i * ys.size() + j] = cost(xs[i], ys[j]);
    return c;
}

namespace detail {

/**
Transportation simplex on a dense m x n cost matrix. Supplies a and demands b
must be positive and have equal totals. Returns the flow matrix.
*/
class TransportationSimplex {
public:
    TransportationSimplex(const std::vector<double>& cost, std::vector<double> a, std::vector<double> b)
        : c_(cost), a_(std::move(a)), b_(std::move(b)), m_(a_.size()), n_(b_.size()) {}

    std::vector<double> solve(std::size_t max_pivots) {
        initial_basis();
        basic_flag_.assign(m_ * n_, 0);
        for (const auto& cell : basis_) basic_flag_[cell.i * n_ + cell.j] = 1;

        double scale = 0.0;
        for (double v : c_) scale = std::max(scale, std::abs(v));
        const double tol = 1e-13 * std::max(1.0, scale);
        const std::size_t cells = m_ * n_;
        const std::size_t block = std::max<std::size_t>(64, static_cast<std::size_t>(std::sqrt(static_cast<double>(cells))));
        std::size_t cursor = 0, degenerate_run = 0, pivots = 0;

        while (true) {
            compute_potentials();
            const bool bland = degenerate_run > m_ + n_;
            std::size_t enter = cells;
            if (bland) {
                for (std::size_t k = 0; k < cells; ++k) {
                    if (basic_flag_[k]) continue;
                    if (reduced_cost(k) < -tol) {
                        enter = k;
                        break;
                    }
                }
            } else {
                double best = -tol;
                std::size_t scanned = 0;
                while (scanned < cells) {
                    const std::size_t stop = std::min(cells, scanned + block);
                    for (; scanned < stop; ++scanned) {
                        const std::size_t k = cursor;
                        cursor = cursor + 1 == cells ? 0 : cursor + 1;
                        if (basic_flag_[k]) continue;
                        const double rc = reduced_cost(k);
                        if (rc < best) {
                            best = rc;
                            enter = k;
                        }
                    }
                    if (enter != cells) break;
                }
            }
            if (enter == cells) break;
            if (++pivots > max_pivots) throw SolverFailure("wasserstein_exact: pivot limit reached");
            const bool degenerate = pivot(enter / n_, enter % n_, bland);
            degenerate_run = degenerate ? degenerate_run + 1 : 0;
        }

        std::vector<double> flow(m_ * n_, 0.0);
        for (const auto& cell : basis_) flow[cell.i * n_ + cell.j] = cell.x;
        return flow;
    }

private:
    struct Cell {
        std::size_t i, j;
        double x;
    };

    double reduced_cost(std::size_t k) const { return c_[k] - u_[k / n_] - v_[k % n_]; }

    // Least-cost start; every allocation crosses out exactly one line, so the
    // basis is a spanning tree with m+n-1 cells even when flows are zero.
    void initial_basis() {
        std::vector<std::size_t> order(m_ * n_);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return c_[x] < c_[y]; });
        std::vector<double> supply = a_, demand = b_;
        std::vector<char> row_done(m_, 0), col_done(n_, 0);
        std::size_t rows_left = m_, cols_left = n_;
        basis_.clear();
        basis_.reserve(m_ + n_ - 1);
        for (std::size_t k : order) {
            if (basis_.size() == m_ + n_ - 1) break;
            const std::size_t i = k / n_, j = k % n_;
            if (row_done[i] || col_done[j]) continue;
            const double x = std::min(supply[i], demand[j]);
            basis_.push_back({i, j, x});
            supply[i] -= x;
            demand[j] -= x;
            bool cross_row;
            if (cols_left == 1)
                cross_row = true;
            else if (rows_left == 1)
                cross_row = false;
            else
                cross_row = supply[i] <= demand[j];
            if (cross_row) {
                row_done[i] = 1;
                --rows_left;
                if (demand[j] < 0.0) demand[j] = 0.0;
            } else {
                col_done[j] = 1;
                --cols_left;
                if (supply[i] < 0.0) supply[i] = 0.0;
            }
        }
        if (basis_.size() != m_ + n_ - 1) throw SolverFailure("wasserstein_exact: failed to build a starting basis");
    }

    // Tree nodes: rows 0..m-1, columns m..m+n-1. BFS from row 0.
    void compute_potentials() {
        const std::size_t nodes = m_ + n_;
        adj_start_.assign(nodes + 1, 0);
        for (const auto& cell : basis_) {
            ++adj_start_[cell.i + 1];
            ++adj_start_[m_ + cell.j + 1];
        }
        for (std::size_t k = 0; k < nodes; ++k) adj_start_[k + 1] += adj_start_[k];
        adj_.resize(2 * basis_.size());
        std::vector<std::size_t> fill(adj_start_.begin(), adj_start_.end() - 1);
        for (std::size_t e = 0; e < basis_.size(); ++e) {
            adj_[fill[basis_[e].i]++] = e;
            adj_[fill[m_ + basis_[e].j]++] = e;
        }
        u_.assign(m_, 0.0);
        v_.assign(n_, 0.0);
        parent_edge_.assign(nodes, npos);
        depth_.assign(nodes, npos);
        queue_.clear();
        queue_.push_back(0);
        depth_[0] = 0;
        for (std::size_t h = 0; h < queue_.size(); ++h) {
            const std::size_t node = queue_[h];
            for (std::size_t k = adj_start_[node]; k < adj_start_[node + 1]; ++k) {
                const std::size_t e = adj_[k];
                const auto& cell = basis_[e];
                const std::size_t other = node < m_ ? m_ + cell.j : cell.i;
                if (depth_[other] != npos) continue;
                depth_[other] = depth_[node] + 1;
                parent_edge_[other] = e;
                if (other >= m_)
                    v_[cell.j] = c_[cell.i * n_ + cell.j] - u_[cell.i];
                else
                    u_[cell.i] = c_[cell.i * n_ + cell.j] - v_[cell.j];
                queue_.push_back(other);
            }
        }
        if (queue_.size() != nodes) throw SolverFailure("wasserstein_exact: basis is not a spanning tree");
    }

    std::size_t parent_node(std::size_t node) const {
        const auto& cell = basis_[parent_edge_[node]];
        return node < m_ ? m_ + cell.j : cell.i;
    }

    // Returns true when the pivot moved no mass.
    bool pivot(std::size_t ei, std::size_t ej, bool bland) {
        std::size_t a = ei, b = m_ + ej;
        std::vector<std::size_t> up_a, up_b;
        while (a != b) {
            if (depth_[a] >= depth_[b]) {
                up_a.push_back(parent_edge_[a]);
                a = parent_node(a);
            } else {
                up_b.push_back(parent_edge_[b]);
                b = parent_node(b);
            }
        }
        // cycle from column ej back to row ei; signs alternate starting with minus
        cycle_.assign(up_b.begin(), up_b.end());
        cycle_.insert(cycle_.end(), up_a.rbegin(), up_a.rend());
        double theta = std::numeric_limits<double>::infinity();
        std::size_t leave = npos;
        for (std::size_t k = 0; k < cycle_.size(); k += 2) {
            const auto& cell = basis_[cycle_[k]];
            const double x = cell.x;
            const bool better = x < theta ||
                                (x == theta && leave != npos &&
                                 (bland ? cell.i * n_ + cell.j < basis_[leave].i * n_ + basis_[leave].j : false));
            if (better) {
                theta = x;
                leave = cycle_[k];
            }
        }
        for (std::size_t k = 0; k < cycle_.size(); ++k) {
            auto& cell = basis_[cycle_[k]];
            if (k % 2 == 0)
                cell.x = cycle_[k] == leave ? 0.0 : std::max(0.0, cell.x - theta);
            else
                cell.x += theta;
        }
        basic_flag_[basis_[leave].i * n_ + basis_[leave].j] = 0;
        basis_[leave] = {ei, ej, theta};
        basic_flag_[ei * n_ + ej] = 1;
        return theta == 0.0;
    }

    static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

    const std::vector<double>& c_;
    std::vector<double> a_, b_;
    std::size_t m_, n_;
    std::vector<Cell> basis_;
    std::vector<char> basic_flag_;
    std::vector<double> u_, v_;
    std::vector<std::size_t> adj_start_, adj_, parent_edge_, depth_, queue_, cycle_;
};

inline std::vector<std::size_t> positive_support(const std::vector<double>& w) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < w.size(); ++i)
        if (w[i] > 0.0) idx.push_back(i);
    return idx;
}

} // namespace detail

/**
Exact optimal transport between two discrete measures.

Solves the transportation LP min sum d(x_i,y_j)^p pi_ij with a transportation
simplex and returns W_p = (optimal value)^(1/p) together with an optimal plan.
Zero-weight atoms cannot carry mass and are dropped before solving; the plan
is reported on the original indices.
*/
inline TransportResult wasserstein_exact(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                         const GroundCost& cost = GroundCost{1.0}) {
    check_compatible(mu, nu);
    const auto rows = detail::positive_support(mu.weights());
    const auto cols = detail::positive_support(nu.weights());
    const std::size_t m = rows.size(), n = cols.size();

    std::vector<double> c(m * n), a(m), b(n);
    for (std::size_t i = 0; i < m; ++i) {
        a[i] = mu.weight(rows[i]);
        for (std::size_t j = 0; j < n; ++j) c[i * n + j] = cost(mu.point(rows[i]), nu.point(cols[j]));
    }
    for (std::size_t j = 0; j < n; ++j) b[j] = nu.weight(cols[j]);

    std::vector<double> flow;
    if (m == 1 || n == 1) {
        flow.resize(m * n);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) flow[i * n + j] = m == 1 ? b[j] : a[i];
    } else {
        detail::TransportationSimplex simplex(c, a, b);
        flow = simplex.solve(50 * (m + n) * (m + n) + 10000);
    }

    TransportResult out;
    out.plan = TransportPlan(mu.size(), nu.size());
    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double x = flow[i * n + j];
            if (x == 0.0) continue;
            out.plan(rows[i], cols[j]) = x;
            total += x * c[i * n + j];
        }
    out.cost = total;
    out.distance = cost.root(total);
    return out;
}

struct SinkhornOptions {
    double epsilon = 1e-2;
    double tol = 1e-6;
    std::size_t max_iters = 100000;
};

struct SinkhornResult {
    double distance = 0.0; // (sum d^p pi)^(1/p) of the returned plan
    double cost = 0.0;
    TransportPlan plan;
    bool converged = false;
    std::size_t iterations = 0;
    double marginal_violation = 0.0; // L1 row-marginal error of the plan
};

/**
Entropic optimal transport (log-domain Sinkhorn with epsilon scaling).

The regularization epsilon is in the units of the cost d^p. The reported
distance is the unregularized cost of the returned plan; it exceeds the exact
optimum by at most O(epsilon log(mn)) plus the marginal error. A run that hits
max_iters is returned with converged = false rather than thrown.
*/
inline SinkhornResult wasserstein_sinkhorn(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                           const GroundCost& cost = GroundCost{1.0}, const SinkhornOptions& opt = {}) {
    check_compatible(mu, nu);
    require(opt.epsilon > 0.0, "wasserstein_sinkhorn: epsilon must be positive");
    require(opt.tol > 0.0, "wasserstein_sinkhorn: tol must be positive");
    const std::size_t m = mu.size(), n = nu.size();
    const auto c = cost_matrix(mu.points(), nu.points(), cost);
    const double neg_inf = -std::numeric_limits<double>::infinity();
    std::vector<double> loga(m), logb(n);
    for (std::size_t i = 0; i < m; ++i) loga[i] = mu.weight(i) > 0 ? std::log(mu.weight(i)) : neg_inf;
    for (std::size_t j = 0; j < n; ++j) logb[j] = nu.weight(j) > 0 ? std::log(nu.weight(j)) : neg_inf;

    double cmax = 0.0;
    for (double v : c) cmax = std::max(cmax, v);
    std::vector<double> f(m, 0.0), g(n, 0.0), tmp(std::max(m, n));

    auto lse = [](const double* x, std::size_t k) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t t = 0; t < k; ++t) mx = std::max(mx, x[t]);
        if (!std::isfinite(mx)) return mx;
        double s = 0.0;
        for (std::size_t t = 0; t < k; ++t) s += std::exp(x[t] - mx);
        return mx + std::log(s);
    };
    auto update_f = [&](double eps) {
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < n; ++j) tmp[j] = logb[j] + (g[j] - c[i * n + j]) / eps;
            f[i] = -eps * lse(tmp.data(), n);
        }
    };
    auto update_g = [&](double eps) {
        for (std::size_t j = 0; j < n; ++j) {
            for (std::size_t i = 0; i < m; ++i) tmp[i] = loga[i] + (f[i] - c[i * n + j]) / eps;
            g[j] = -eps * lse(tmp.data(), m);
        }
    };
    auto row_violation = [&](double eps) {
        double viol = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            if (mu.weight(i) == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) tmp[j] = logb[j] + (g[j] - c[i * n + j]) / eps;
            const double row = std::exp(loga[i] + f[i] / eps + lse(tmp.data(), n));
            viol += std::abs(row - mu.weight(i));
        }
        return viol;
    };

    SinkhornResult out;
    double eps = std::max(opt.epsilon, cmax);
    std::size_t iters = 0;
    while (true) {
        const bool last = eps <= opt.epsilon;
        const std::size_t phase_cap = last ? opt.max_iters : std::min<std::size_t>(opt.max_iters, iters + 200);
        bool ok = false;
        while (iters < phase_cap) {
            update_f(eps);
            update_g(eps);
            ++iters;
            if (iters % 10 == 0 || iters == phase_cap) {
                const double viol = row_violation(eps);
                if (viol <= (last ? opt.tol : 1e-3)) {
                    ok = true;
                    break;
                }
            }
        }
        if (last) {
            out.converged = ok;
            break;
        }
        if (iters >= opt.max_iters) break;
        eps = std::max(opt.epsilon, eps * 0.5);
    }

    out.plan = TransportPlan(m, n);
    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double x = std::exp(loga[i] + logb[j] + (f[i] + g[j] - c[i * n + j]) / eps);
            out.plan(i, j) = x;
            total += x * c[i * n + j];
        }
    out.iterations = iters;
    double viol = 0.0;
    const auto r = out.plan.row_sums();
    for (std::size_t i = 0; i < m; ++i) viol += std::abs(r[i] - mu.weight(i));
    out.marginal_violation = viol;
    out.cost = total;
    out.distance = cost.root(total);
    return out;
}

/**
Solves the dual of the order-1 transportation LP,
max sum a_i u_i + sum b_j v_j  s.t.  u_i + v_j <= d(x_i, y_j),
with a generic simplex and returns |primal cost of plan - dual optimum|.
For an optimal plan the gap is zero up to rounding.
*/
inline double kr_dual_check(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const TransportPlan& plan,
                            const GroundCost& cost = GroundCost{1.0}) {
    require(cost.p == 1.0, "kr_dual_check: only the order-1 problem is supported");
    check_compatible(mu, nu);
    const std::size_t m = mu.size(), n = nu.size();
    require(plan.rows() == m && plan.cols() == n, "kr_dual_check: plan shape does not match the measures");
    const auto c = cost_matrix(mu.points(), nu.points(), cost);

    double primal = 0.0;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) primal += plan(i, j) * c[i * n + j];

    // u_i = x[2i] - x[2i+1], v_j = x[2m+2j] - x[2m+2j+1]
    lp::Problem prob;
    prob.num_vars = 2 * (m + n);
    prob.cost.assign(prob.num_vars, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        prob.cost[2 * i] = -mu.weight(i);
        prob.cost[2 * i + 1] = mu.weight(i);
    }
    for (std::size_t j = 0; j < n; ++j) {
        prob.cost[2 * m + 2 * j] = -nu.weight(j);
        prob.cost[2 * m + 2 * j + 1] = nu.weight(j);
    }
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j)
            prob.add_row({{2 * i, 1.0}, {2 * i + 1, -1.0}, {2 * m + 2 * j, 1.0}, {2 * m + 2 * j + 1, -1.0}},
                         lp::Sense::less_equal, c[i * n + j]);
    const auto sol = lp::solve(prob);
    if (sol.status != lp::Status::optimal) throw SolverFailure("kr_dual_check: dual LP did not reach optimality");
    return std::abs(primal - (-sol.objective));
}

} // namespace itd
