#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

#include "itd/core.hpp"

/// Dense two-phase simplex for small linear programs: min c'x s.t. rows, x >= 0.
namespace itd::lp {

enum class Sense { less_equal, equal, greater_equal };

struct Row {
    std::vector<std::pair<std::size_t, double>> terms;
    Sense sense = Sense::less_equal;
    double rhs = 0.0;
};

struct Problem {
    std::size_t num_vars = 0;
    std::vector<double> cost;
    std::vector<Row> rows;

    std::size_t add_row(std::vector<std::pair<std::size_t, double>> terms, Sense sense, double rhs) {
        rows.push_back({std::move(terms), sense, rhs});
        return rows.size() - 1;
    }
};

enum class Status { optimal, infeasible, unbounded, iteration_limit };

struct Solution {
    Status status = Status::iteration_limit;
    double objective = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> x;
    std::size_t pivots = 0;
};

struct Options {
    double pivot_tol = 1e-9;
    double cost_tol = 1e-11;
    std::size_t max_pivots = 200000;
    // consecutive degenerate pivots before switching to Bland's rule
    std::size_t degenerate_switch = 50;
};

namespace detail {

class Tableau {
public:
    Tableau(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), a_((rows + 1) * (cols + 1), 0.0) {}

    double& at(std::size_t r, std::size_t c) { return a_[r * (cols_ + 1) + c]; }
    double at(std::size_t r, std::size_t c) const { return a_[r * (cols_ + 1) + c]; }
    double& rhs(std::size_t r) { return at(r, cols_); }
    double rhs(std::size_t r) const { return at(r, cols_); }
    // the objective row is stored at index rows_
    double& obj(std::size_t c) { return at(rows_, c); }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    void pivot(std::size_t pr, std::size_t pc) {
        const double inv = 1.0 / at(pr, pc);
        nz_.clear();
        for (std::size_t c = 0; c <= cols_; ++c) {
            double& v = at(pr, c);
            if (v != 0.0) {
                v *= inv;
                nz_.push_back(c);
            }
        }
        at(pr, pc) = 1.0;
        for (std::size_t r = 0; r <= rows_; ++r) {
            if (r == pr) continue;
            const double f = at(r, pc);
            if (f == 0.0) continue;
            double* row = &a_[r * (cols_ + 1)];
            const double* prow = &a_[pr * (cols_ + 1)];
            for (std::size_t c : nz_) row[c] -= f * prow[c];
            row[pc] = 0.0;
        }
    }

private:
    std::size_t rows_, cols_;
    std::vector<double> a_;
    std::vector<std::size_t> nz_;
};

// Runs simplex iterations on the tableau objective row; allowed[c] marks columns that may enter.
inline Status iterate(Tableau& t, std::vector<std::size_t>& basis, const std::vector<char>& allowed,
                      const Options& opt, std::size_t& pivots) {
    std::size_t degenerate_streak = 0;
    const std::size_t m = t.rows(), n = t.cols();
    while (true) {
        if (pivots >= opt.max_pivots) return Status::iteration_limit;
        const bool bland = degenerate_streak >= opt.degenerate_switch;
        std::size_t enter = n;
        double best = -opt.cost_tol;
        for (std::size_t c = 0; c < n; ++c) {
            if (!allowed[c]) continue;
            const double rc = t.obj(c);
            if (rc < best) {
                enter = c;
                if (bland) break;
                best = rc;
            }
        }
        if (enter == n) return Status::optimal;

        std::size_t leave = m;
        double best_ratio = std::numeric_limits<double>::infinity();
        for (std::size_t r = 0; r < m; ++r) {
            const double a = t.at(r, enter);
            if (a <= opt.pivot_tol) continue;
            const double ratio = std::max(0.0, t.rhs(r)) / a;
            if (ratio < best_ratio - 1e-14 ||
                (ratio <= best_ratio + 1e-14 && leave < m && basis[r] < basis[leave])) {
                best_ratio = ratio;
                leave = r;
            }
        }
        if (leave == m) return Status::unbounded;
        degenerate_streak = best_ratio <= 1e-14 ? degenerate_streak + 1 : 0;
        t.pivot(leave, enter);
        basis[leave] = enter;
        ++pivots;
    }
}

} // namespace detail

/**
Solve min cost'x subject to the rows and x >= 0.

Pricing is Dantzig's rule; after a run of degenerate pivots the entering
column switches to Bland's lowest-index rule, which cannot cycle.
*/
inline Solution solve(const Problem& problem, const Options& opt = {}) {
    const std::size_t n = problem.num_vars;
    const std::size_t m = problem.rows.size();
    require(problem.cost.size() == n, "lp::solve: cost vector size differs from num_vars");

    std::size_t slack_count = 0, art_count = 0;
    for (const auto& row : problem.rows) {
        const bool flip = row.rhs < 0.0;
        Sense s = row.sense;
        if (flip && s != Sense::equal) s = (s == Sense::less_equal) ? Sense::greater_equal : Sense::less_equal;
        if (s != Sense::equal) ++slack_count;
        if (s != Sense::less_equal) ++art_count;
    }
    const std::size_t art_begin = n + slack_count;
    const std::size_t cols = art_begin + art_count;
    detail::Tableau t(m, cols);
    std::vector<std::size_t> basis(m);
    std::vector<char> is_art_row(m, 0);

    std::size_t next_slack = n, next_art = art_begin;
    for (std::size_t r = 0; r < m; ++r) {
        const auto& row = problem.rows[r];
        const double sign = row.rhs < 0.0 ? -1.0 : 1.0;
        Sense s = row.sense;
        if (sign < 0 && s != Sense::equal) s = (s == Sense::less_equal) ? Sense::greater_equal : Sense::less_equal;
        for (const auto& [j, v] : row.terms) {
            require(j < n, "lp::solve: variable index out of range");
            t.at(r, j) += sign * v;
        }
        t.rhs(r) = sign * row.rhs;
        if (s == Sense::less_equal) {
            t.at(r, next_slack) = 1.0;
            basis[r] = next_slack++;
        } else {
            if (s == Sense::greater_equal) t.at(r, next_slack++) = -1.0;
            t.at(r, next_art) = 1.0;
            basis[r] = next_art++;
            is_art_row[r] = 1;
        }
    }

    Solution sol;
    std::vector<char> allowed(cols, 1);
    for (std::size_t c = art_begin; c < cols; ++c) allowed[c] = 0;

    if (art_count > 0) {
        // phase 1: minimize the sum of artificials
        for (std::size_t r = 0; r < m; ++r) {
            if (!is_art_row[r]) continue;
            for (std::size_t c = 0; c < art_begin; ++c) t.obj(c) -= t.at(r, c);
            t.obj(cols) -= t.rhs(r);
        }
        const auto st = detail::iterate(t, basis, allowed, opt, sol.pivots);
        if (st == Status::iteration_limit) {
            sol.status = st;
            return sol;
        }
        double scale = 1.0;
        for (const auto& row : problem.rows) scale = std::max(scale, std::abs(row.rhs));
        if (-t.obj(cols) > 1e-8 * scale) {
            sol.status = Status::infeasible;
            return sol;
        }
        // drive remaining artificials out of the basis
        for (std::size_t r = 0; r < m; ++r) {
            if (basis[r] < art_begin) continue;
            for (std::size_t c = 0; c < art_begin; ++c) {
                if (std::abs(t.at(r, c)) > opt.pivot_tol) {
                    t.pivot(r, c);
                    basis[r] = c;
                    break;
                }
            }
        }
    }

    // phase 2 objective row: reduced costs c_j - c_B B^-1 A_j
    for (std::size_t c = 0; c <= cols; ++c) t.obj(c) = 0.0;
    for (std::size_t j = 0; j < n; ++j) t.obj(j) = problem.cost[j];
    for (std::size_t r = 0; r < m; ++r) {
        const std::size_t b = basis[r];
        const double cb = b < n ? problem.cost[b] : 0.0;
        if (cb == 0.0) continue;
        for (std::size_t c = 0; c <= cols; ++c) t.obj(c) -= cb * t.at(r, c);
    }
    const auto st = detail::iterate(t, basis, allowed, opt, sol.pivots);
    sol.status = st;
    if (st != Status::optimal) return sol;

    sol.x.assign(n, 0.0);
    for (std::size_t r = 0; r < m; ++r)
        if (basis[r] < n) sol.x[basis[r]] = std::max(0.0, t.rhs(r));
    double obj = 0.0;
    for (std::size_t j = 0; j < n; ++j) obj += problem.cost[j] * sol.x[j];
    sol.objective = obj;
    return sol;
}

} // namespace itd::lp
