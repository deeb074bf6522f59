#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "itd/core.hpp"
#include "itd/parallel.hpp"
#include "itd/transport.hpp"

namespace itd {

/**
@brief A transition kernel with finitely many source states.

Row s is the measure Q(.|x_s). Rows have independent supports; nothing
assumes a shared target grid.
*/
class DiscreteKernel {
public:
    DiscreteKernel() = default;
    DiscreteKernel(PointSet sources, std::vector<DiscreteMeasure> rows) : sources_(std::move(sources)), rows_(std::move(rows)) {
        require(!sources_.empty(), "DiscreteKernel: no source states");
        require(sources_.size() == rows_.size(), "DiscreteKernel: one row is required per source state");
        for (const auto& r : rows_) require(r.dim() == rows_.front().dim(), "DiscreteKernel: rows live in different dimensions");
    }

    const PointSet& sources() const { return sources_; }
    const std::vector<DiscreteMeasure>& rows() const { return rows_; }
    const DiscreteMeasure& row(std::size_t s) const { return rows_[s]; }
    std::size_t size() const { return rows_.size(); }
    std::size_t source_dim() const { return sources_.dim(); }
    std::size_t target_dim() const { return rows_.front().dim(); }

private:
    PointSet sources_;
    std::vector<DiscreteMeasure> rows_;
};

/// A marginal is a DiscreteMeasure whose atoms are the kernel's source states, in order.
using Marginal = DiscreteMeasure;

inline void check_aligned(const Marginal& lambda, const DiscreteKernel& q) {
    require(lambda.size() == q.size(), "marginal and kernel have different numbers of source states");
    require(lambda.points() == q.sources(), "marginal support does not match the kernel source states");
}

inline void check_same_sources(const DiscreteKernel& q, const DiscreteKernel& q_tilde) {
    require(q.sources() == q_tilde.sources(), "kernels are defined on different source states");
    require(q.target_dim() == q_tilde.target_dim(), "kernels have different target dimensions");
}

namespace detail {
struct LexLess {
    bool operator()(const std::vector<double>& a, const std::vector<double>& b) const {
        return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
    }
};
} // namespace detail

/// The mixture sum_s lambda_s Q(.|x_s). Atoms at identical coordinates are merged (exact equality).
inline DiscreteMeasure compose_marginal(const Marginal& lambda, const DiscreteKernel& q) {
    check_aligned(lambda, q);
    std::map<std::vector<double>, double, detail::LexLess> atoms;
    for (std::size_t s = 0; s < q.size(); ++s) {
        const double ls = lambda.weight(s);
        if (ls == 0.0) continue;
        const auto& row = q.row(s);
        for (std::size_t k = 0; k < row.size(); ++k) {
            std::vector<double> y(row.point(k).begin(), row.point(k).end());
            atoms[std::move(y)] += ls * row.weight(k);
        }
    }
    PointSet pts(q.target_dim());
    std::vector<double> w;
    for (const auto& [y, mass] : atoms) {
        pts.push_back(y);
        w.push_back(mass);
    }
    return DiscreteMeasure(std::move(pts), std::move(w));
}

/// The joint law lambda (*) Q on X x Y, atoms (x_s, y) with weight lambda_s Q(y|x_s).
inline DiscreteMeasure join_marginal(const Marginal& lambda, const DiscreteKernel& q) {
    check_aligned(lambda, q);
    PointSet pts(q.source_dim() + q.target_dim());
    std::vector<double> w;
    std::vector<double> buf(pts.dim());
    for (std::size_t s = 0; s < q.size(); ++s) {
        const double ls = lambda.weight(s);
        if (ls == 0.0) continue;
        const auto& row = q.row(s);
        std::copy(q.sources()[s].begin(), q.sources()[s].end(), buf.begin());
        for (std::size_t k = 0; k < row.size(); ++k) {
            std::copy(row.point(k).begin(), row.point(k).end(), buf.begin() + static_cast<std::ptrdiff_t>(q.source_dim()));
            pts.push_back(buf);
            w.push_back(ls * row.weight(k));
        }
    }
    return DiscreteMeasure(std::move(pts), std::move(w));
}

/// Per-source W_p(Q(.|x_s), Q~(.|x_s)); sources with skip[s] set are reported as 0.
inline std::vector<double> row_distances(const DiscreteKernel& q, const DiscreteKernel& q_tilde, const GroundCost& cost,
                                         const std::vector<char>* skip = nullptr) {
    check_same_sources(q, q_tilde);
    std::vector<double> out(q.size(), 0.0);
    parallel_for(q.size(), [&](std::size_t s) {
        if (skip && (*skip)[s]) return;
        out[s] = wasserstein_exact(q.row(s), q_tilde.row(s), cost).distance;
    });
    return out;
}

/**
Integrated transportation distance
  ( sum_s lambda_s W_p(Q(.|x_s), Q~(.|x_s))^p )^(1/p).
Sources with lambda_s = 0 do not contribute.
*/
inline double itd(const Marginal& lambda, const DiscreteKernel& q, const DiscreteKernel& q_tilde,
                  const GroundCost& cost = GroundCost{1.0}) {
    check_aligned(lambda, q);
    check_same_sources(q, q_tilde);
    std::vector<char> skip(q.size());
    for (std::size_t s = 0; s < q.size(); ++s) skip[s] = lambda.weight(s) == 0.0;
    const auto d = row_distances(q, q_tilde, cost, &skip);
    double total = 0.0;
    for (std::size_t s = 0; s < q.size(); ++s)
        if (!skip[s]) total += lambda.weight(s) * std::pow(d[s], cost.p);
    return cost.root(total);
}

/// max_s W_p(Q(.|x_s), Q~(.|x_s)) over all source states.
inline double sup_distance(const DiscreteKernel& q, const DiscreteKernel& q_tilde, const GroundCost& cost = GroundCost{1.0}) {
    const auto d = row_distances(q, q_tilde, cost);
    return *std::max_element(d.begin(), d.end());
}

struct HierarchyTriple {
    double itd = 0.0;    // integrated distance of the kernels
    double joined = 0.0; // W_p between the joint laws
    double mixed = 0.0;  // W_p between the mixtures
};

/// Computes the three distances and checks itd >= joined >= mixed (1e-9 slack).
inline HierarchyTriple hierarchy_triple(const Marginal& lambda, const DiscreteKernel& q, const DiscreteKernel& q_tilde,
                                        const GroundCost& cost = GroundCost{1.0}) {
    HierarchyTriple h;
    h.itd = itd(lambda, q, q_tilde, cost);
    h.joined = wasserstein_exact(join_marginal(lambda, q), join_marginal(lambda, q_tilde), cost).distance;
    h.mixed = wasserstein_exact(compose_marginal(lambda, q), compose_marginal(lambda, q_tilde), cost).distance;
    if (!(h.itd >= h.joined - 1e-9 && h.joined >= h.mixed - 1e-9))
        throw SolverFailure("hierarchy_triple: distances are not ordered; itd=" + std::to_string(h.itd) +
                            " joined=" + std::to_string(h.joined) + " mixed=" + std::to_string(h.mixed));
    return h;
}

/**
Largest ratio W_p(Q(.|x_s), Q(.|x_t)) / |x_s - x_t| over distinct source pairs:
the kernel's Lipschitz constant on its finite source set.
*/
inline double kernel_lipschitz(const DiscreteKernel& q, const GroundCost& cost = GroundCost{1.0}) {
    const std::size_t n = q.size();
    std::vector<double> best(n, 0.0);
    parallel_for(n, [&](std::size_t s) {
        for (std::size_t t = s + 1; t < n; ++t) {
            const double dx = distance(q.sources()[s], q.sources()[t]);
            if (dx == 0.0) continue;
            best[s] = std::max(best[s], wasserstein_exact(q.row(s), q.row(t), cost).distance / dx);
        }
    });
    return n == 0 ? 0.0 : *std::max_element(best.begin(), best.end());
}

} // namespace itd
