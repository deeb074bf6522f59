#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "itd/core.hpp"
#include "itd/kernel_metric.hpp"
#include "itd/parallel.hpp"
#include "itd/random.hpp"
#include "itd/selection.hpp"
#include "itd/transport.hpp"

namespace itd {

/// Draws i.i.d. successors of a state z, appending `count` points to `out`.
template <class S>
concept KernelSampler = requires(const S& s, std::span<const double> z, std::size_t count, Rng& rng, PointSet& out) {
    { s.dim() } -> std::convertible_to<std::size_t>;
    s.sample(z, count, rng, out);
};

/// Sparse row of transition probabilities: (index of the next-stage point, probability).
using TransitionRow = std::vector<std::pair<std::size_t, double>>;

/**
@brief One stage of the approximate chain.

At t > 0, transitions[s] holds the implied kernel row from point s of the
previous stage, and delta_prev the ITD error of that step.
*/
struct LatticeStage {
    PointSet points;
    std::vector<double> marginal;
    std::vector<TransitionRow> transitions;
    std::optional<double> delta_prev;

    std::size_t size() const { return points.size(); }
    Marginal marginal_measure() const { return Marginal(points, marginal); }

    /// The transition kernel from `prev` into this stage as a DiscreteKernel.
    DiscreteKernel kernel_from(const LatticeStage& prev) const {
        require(transitions.size() == prev.size(), "LatticeStage: transitions do not match the previous stage");
        std::vector<DiscreteMeasure> rows;
        rows.reserve(transitions.size());
        for (const auto& row : transitions) {
            PointSet pts(points.dim());
            std::vector<double> w;
            for (const auto& [j, pr] : row) {
                pts.push_back(points[j]);
                w.push_back(pr);
            }
            rows.emplace_back(std::move(pts), std::move(w));
        }
        return DiscreteKernel(prev.points, std::move(rows));
    }
};

enum class CandidateStrategy { subsample, fresh };

/// Budget for stage t+1 when advancing from stage t: min(cap, round(base + per_stage * t)).
struct BudgetSchedule {
    std::size_t base = 100;
    double per_stage = 0.0;
    std::size_t cap = std::numeric_limits<std::size_t>::max();

    std::size_t at(std::size_t t) const {
        const double m = std::round(static_cast<double>(base) + per_stage * static_cast<double>(t));
        return std::clamp<std::size_t>(static_cast<std::size_t>(std::max(1.0, m)), 1, cap);
    }
};

struct LatticeConfig {
    std::size_t particles = 1000; // per source state
    BudgetSchedule budget{};
    double candidates_factor = 5.0; // K = ceil(factor * M)
    CandidateStrategy candidates = CandidateStrategy::subsample;
    SelectorConfig selector{};
    GroundCost cost{1.0};
    std::uint64_t seed = 1;

    void validate() const {
        require(particles >= 1, "LatticeConfig: particles must be >= 1");
        require(candidates_factor >= 1.0, "LatticeConfig: candidates_factor must be >= 1");
        require(budget.base >= 1 || budget.per_stage > 0.0, "LatticeConfig: budget must be positive");
    }
};

struct StageReport {
    std::size_t t = 0;           // stage the step starts from
    std::size_t particles = 0;   // total particles drawn
    std::size_t candidates = 0;  // K after removing duplicates
    std::size_t budget = 0;      // M actually used
    std::size_t points = 0;      // points kept at t+1 (sites with mass)
    double objective = 0.0;      // selection objective
    double delta = 0.0;          // objective^(1/p)
    double lower_bound = std::numeric_limits<double>::quiet_NaN();
};

inline LatticeStage initial_stage(std::vector<double> x0) {
    LatticeStage s;
    s.points.push_back(x0);
    s.marginal = {1.0};
    return s;
}

/// Q^(.|z_s): the empirical measure of each source's particles. Sources with no particles get a Dirac at z_s.
inline DiscreteKernel empirical_kernel(const PointSet& sources, const ParticleCloud& cloud) {
    require(sources.size() == cloud.sources(), "empirical_kernel: source count mismatch");
    std::vector<DiscreteMeasure> rows;
    for (std::size_t s = 0; s < cloud.sources(); ++s) {
        if (cloud.count(s) == 0) {
            rows.push_back(DiscreteMeasure::dirac({sources[s].begin(), sources[s].end()}));
            continue;
        }
        PointSet pts(cloud.dim());
        for (std::size_t i = cloud.begin(s); i < cloud.end(s); ++i) pts.push_back(cloud.points()[i]);
        rows.push_back(DiscreteMeasure::uniform(std::move(pts)));
    }
    return DiscreteKernel(sources, std::move(rows));
}

/// Per-source counts of particles sent to each candidate, divided by |I_s|. Row support is {k : count > 0}.
inline std::vector<std::map<std::size_t, double>> implied_rows(const SelectionProblem& problem, const SelectionResult& result) {
    check_selection(problem, result);
    const auto& cl = problem.cloud;
    std::vector<std::map<std::size_t, double>> rows(cl.sources());
    for (std::size_t s = 0; s < cl.sources(); ++s) {
        if (cl.count(s) == 0) continue;
        std::map<std::size_t, std::size_t> counts;
        for (std::size_t i = cl.begin(s); i < cl.end(s); ++i) ++counts[result.assignment[i]];
        const double n = static_cast<double>(cl.count(s));
        for (const auto& [k, c] : counts) rows[s][k] = static_cast<double>(c) / n;
    }
    return rows;
}

/// Q~(zeta_k | z_s) = (1/|I_s|) sum_i beta^{s,i,k}, over the open candidates.
inline DiscreteKernel implied_kernel(const PointSet& sources, const SelectionProblem& problem, const SelectionResult& result) {
    require(sources.size() == problem.cloud.sources(), "implied_kernel: source count mismatch");
    const auto rows = implied_rows(problem, result);
    std::vector<DiscreteMeasure> out;
    for (std::size_t s = 0; s < rows.size(); ++s) {
        if (rows[s].empty()) {
            out.push_back(DiscreteMeasure::dirac({sources[s].begin(), sources[s].end()}));
            continue;
        }
        PointSet pts(problem.candidates.dim());
        std::vector<double> w;
        for (const auto& [k, pr] : rows[s]) {
            pts.push_back(problem.candidates[k]);
            w.push_back(pr);
        }
        out.push_back(DiscreteMeasure::normalized(std::move(pts), std::move(w)));
    }
    return DiscreteKernel(sources, std::move(out));
}

/**
The ITD between the particle kernel and the implied kernel,
(sum_s lambda_s (1/|I_s|) sum_i d(x_i, site(i))^p)^(1/p).
Nearest assignment is an optimal coupling of each particle row with its
implied row, so this equals itd(lambda, empirical, implied).
*/
inline double stage_delta(const SelectionProblem& problem, const SelectionResult& result) {
    check_selection(problem, result);
    const auto& cl = problem.cloud;
    double total = 0.0;
    for (std::size_t i = 0; i < cl.size(); ++i)
        if (cl.weight(i) > 0.0) total += cl.weight(i) * problem.particle_cost(i, result.assignment[i]);
    return problem.cost.root(total);
}

namespace detail {

struct LexLessSpan {
    const PointSet* ps;
    bool operator()(std::size_t a, std::size_t b) const {
        const auto x = (*ps)[a], y = (*ps)[b];
        return std::lexicographical_compare(x.begin(), x.end(), y.begin(), y.end());
    }
};

// Drops exact duplicates, keeping first occurrences in their original order.
inline PointSet unique_points(const PointSet& in) {
    std::vector<std::size_t> idx(in.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), LexLessSpan{&in});
    std::vector<char> keep(in.size(), 0);
    for (std::size_t j = 0; j < idx.size(); ++j)
        if (j == 0 || !same_point(in[idx[j - 1]], in[idx[j]])) keep[idx[j]] = 1;
    PointSet out(in.dim());
    for (std::size_t i = 0; i < in.size(); ++i)
        if (keep[i]) out.push_back(in[i]);
    return out;
}

// `want` distinct rows drawn without replacement, kept in pool order; all of them if pool.size() <= want
inline PointSet subsample_points(const PointSet& pool, std::size_t want, Rng& rng) {
    if (pool.size() <= want) return pool;
    std::vector<std::size_t> idx(pool.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t j = 0; j < want; ++j) {
        std::uniform_int_distribution<std::size_t> pick(j, idx.size() - 1);
        std::swap(idx[j], idx[pick(rng)]);
    }
    std::sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(want));
    PointSet out(pool.dim());
    for (std::size_t j = 0; j < want; ++j) out.push_back(pool[idx[j]]);
    return out;
}

} // namespace detail

/**
One forward step: draw particles from every source of `stage`, choose
candidate sites, run the selector, and build stage t+1 with
lambda_{t+1} = lambda_t o Q~_t. Sites that receive no mass are dropped.
*/
template <KernelSampler Sampler>
LatticeStage advance_stage(const LatticeStage& stage, std::size_t t, const Sampler& sampler, const LatticeConfig& cfg,
                           StageReport* report = nullptr) {
    cfg.validate();
    const std::size_t S = stage.size();
    require(stage.marginal.size() == S && S > 0, "advance_stage: stage marginal does not match its points");
    const std::size_t N = cfg.particles;

    // particles, one derived stream per (stage, source)
    std::vector<PointSet> groups(S, PointSet(sampler.dim()));
    parallel_for(S, [&](std::size_t s) {
        if (stage.marginal[s] == 0.0) return;
        Rng rng = derive_rng(cfg.seed, Stream::particles, {t, s});
        groups[s].reserve(N);
        sampler.sample(stage.points[s], N, rng, groups[s]);
        if (groups[s].size() != N) throw SolverFailure("advance_stage: sampler returned the wrong number of points");
    });
    ParticleCloud cloud = ParticleCloud::from_groups(groups, stage.marginal);

    // candidate sites
    const std::size_t budget = cfg.budget.at(t);
    const std::size_t want = static_cast<std::size_t>(std::ceil(cfg.candidates_factor * static_cast<double>(budget)));
    PointSet cand(sampler.dim());
    Rng crng = derive_rng(cfg.seed, Stream::candidates, {t});
    if (cfg.candidates == CandidateStrategy::subsample) {
        cand = detail::subsample_points(detail::unique_points(cloud.points()), want, crng);
    } else {
        std::discrete_distribution<std::size_t> src(stage.marginal.begin(), stage.marginal.end());
        PointSet fresh(sampler.dim());
        for (std::size_t j = 0; j < want; ++j) sampler.sample(stage.points[src(crng)], 1, crng, fresh);
        cand = detail::unique_points(fresh);
    }

    const std::size_t used_budget = std::min(budget, cand.size());
    SelectionProblem problem{std::move(cloud), std::move(cand), used_budget, cfg.cost};
    const auto result = run_selector(problem, cfg.selector, cfg.seed ^ detail::splitmix64(t + 0x51ed27));
    check_selection(problem, result);

    // keep the sites that carry mass, in candidate order
    const auto rows = implied_rows(problem, result);
    std::vector<std::size_t> remap(problem.candidates.size(), std::numeric_limits<std::size_t>::max());
    std::vector<char> used(problem.candidates.size(), 0);
    for (std::size_t s = 0; s < S; ++s)
        if (stage.marginal[s] > 0.0)
            for (const auto& [k, pr] : rows[s]) used[k] = 1;
    LatticeStage next;
    next.points = PointSet(sampler.dim());
    for (std::size_t k = 0; k < used.size(); ++k)
        if (used[k]) {
            remap[k] = next.points.size();
            next.points.push_back(problem.candidates[k]);
        }

    next.transitions.resize(S);
    for (std::size_t s = 0; s < S; ++s)
        for (const auto& [k, pr] : rows[s]) next.transitions[s].push_back({remap[k], pr});

    // unweighted sources do not enter the selection; give them a row anyway so values exist everywhere
    {
        PointSet kept = next.points;
        for (std::size_t s = 0; s < S; ++s) {
            if (stage.marginal[s] > 0.0) continue;
            Rng rng = derive_rng(cfg.seed, Stream::particles, {t, s});
            PointSet g(sampler.dim());
            sampler.sample(stage.points[s], N, rng, g);
            const auto a = nearest_assignment(g, kept, cfg.cost);
            std::map<std::size_t, std::size_t> counts;
            for (std::size_t j : a.site) ++counts[j];
            for (const auto& [j, c] : counts) next.transitions[s].push_back({j, static_cast<double>(c) / static_cast<double>(N)});
        }
    }

    std::vector<double> mass(next.points.size(), 0.0);
    for (std::size_t s = 0; s < S; ++s)
        for (const auto& [j, pr] : next.transitions[s]) mass[j] += stage.marginal[s] * pr;
    const double total = stable_sum(mass);
    if (std::abs(total - 1.0) > 1e-9) throw SolverFailure("advance_stage: marginal lost mass");
    for (double& m : mass) m /= total;
    next.marginal = std::move(mass);
    const double delta = stage_delta(problem, result);
    next.delta_prev = delta;

    if (report) {
        report->t = t;
        report->particles = problem.cloud.size();
        report->candidates = problem.candidates.size();
        report->budget = problem.budget;
        report->points = next.points.size();
        report->objective = result.objective;
        report->delta = delta;
        report->lower_bound = result.lower_bound;
    }
    return next;
}

struct Lattice {
    std::vector<LatticeStage> stages;
    std::vector<StageReport> reports;

    std::size_t horizon() const { return stages.empty() ? 0 : stages.size() - 1; }
    std::vector<double> deltas() const {
        std::vector<double> d;
        for (const auto& r : reports) d.push_back(r.delta);
        return d;
    }
    std::size_t total_points() const {
        std::size_t n = 0;
        for (const auto& s : stages) n += s.size();
        return n;
    }
};

/// Runs advance_stage T times from a single initial state.
template <KernelSampler Sampler>
Lattice build_lattice(std::vector<double> x0, std::size_t T, const Sampler& sampler, const LatticeConfig& cfg) {
    Lattice lat;
    lat.stages.push_back(initial_stage(std::move(x0)));
    for (std::size_t t = 0; t < T; ++t) {
        StageReport rep;
        lat.stages.push_back(advance_stage(lat.stages.back(), t, sampler, cfg, &rep));
        lat.reports.push_back(rep);
    }
    return lat;
}

/// Rate part of the expected particle error bound E W_p(Q^, Q) <= C m_u^{p/u} * rate(N).
struct SamplingErrorReport {
    std::string branch;     // "p > n/2", "p = n/2" or "p < n/2"
    std::string expression; // the rate with the unknown constant left symbolic
    double moment_factor = 0.0; // m_u^{p/u}
    double rate = 0.0;          // the bracketed rate evaluated at N
    bool excluded_case = false; // u hits the value the bound leaves out for this branch
};

inline SamplingErrorReport sampling_error_report(std::size_t n, double p, double u, double moment, std::size_t N) {
    require(n >= 1, "sampling_error_report: dimension must be >= 1");
    require(p >= 1.0, "sampling_error_report: p must be >= 1");
    require(u > p, "sampling_error_report: the moment order u must exceed p");
    require(moment >= 0.0, "sampling_error_report: moment must be nonnegative");
    require(N >= 1, "sampling_error_report: N must be >= 1");
    const double nn = static_cast<double>(n), NN = static_cast<double>(N);
    const double half = nn / 2.0;
    const double tail_exp = (u - p) / u;
    auto fmt = [](double x) {
        std::ostringstream os;
        os.precision(6);
        os << x;
        return os.str();
    };
    SamplingErrorReport r;
    r.moment_factor = std::pow(moment, p / u);
    const std::string tail = "N^(-" + fmt(tail_exp) + ")";
    if (p > half) {
        r.branch = "p > n/2";
        r.rate = std::pow(NN, -0.5) + std::pow(NN, -tail_exp);
        r.expression = "C * m^(p/u) * (N^(-1/2) + " + tail + ")";
        r.excluded_case = u == 2.0 * p;
    } else if (p == half) {
        r.branch = "p = n/2";
        r.rate = std::pow(NN, -0.5) * std::log(1.0 + NN) + std::pow(NN, -tail_exp);
        r.expression = "C * m^(p/u) * (N^(-1/2) ln(1+N) + " + tail + ")";
        r.excluded_case = u == 2.0 * p;
    } else {
        r.branch = "p < n/2";
        r.rate = std::pow(NN, -p / nn) + std::pow(NN, -tail_exp);
        r.expression = "C * m^(p/u) * (N^(-" + fmt(p / nn) + ") + " + tail + ")";
        r.excluded_case = u == nn / (nn - p);
    }
    return r;
}

} // namespace itd
