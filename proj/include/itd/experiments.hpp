#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "itd/gmm.hpp"
#include "itd/io.hpp"
#include "itd/kernel_metric.hpp"
#include "itd/lattice.hpp"
#include "itd/markets.hpp"
#include "itd/risk.hpp"
#include "itd/selection.hpp"
#include "itd/transport.hpp"

namespace itd {

/// One (config, method, repetition) result. Metrics keep insertion order.
struct ExperimentRow {
    std::string config;
    std::string method;
    std::uint64_t seed = 0;
    std::size_t rep = 0;
    std::vector<std::pair<std::string, double>> metrics;
    double seconds = 0.0;

    double metric(const std::string& name) const {
        for (const auto& [k, v] : metrics)
            if (k == name) return v;
        throw InvalidArgument("row has no metric '" + name + "'");
    }
    bool has(const std::string& name) const {
        return std::any_of(metrics.begin(), metrics.end(), [&](const auto& m) { return m.first == name; });
    }
};

struct ExperimentReport {
    std::string name;
    std::vector<ExperimentRow> rows;

    /// Orders rows by (config, method, rep); emission relies on this.
    void sort() {
        std::stable_sort(rows.begin(), rows.end(), [](const ExperimentRow& a, const ExperimentRow& b) {
            return std::tie(a.config, a.method, a.rep) < std::tie(b.config, b.method, b.rep);
        });
    }
    std::vector<const ExperimentRow*> select(const std::string& config, const std::string& method) const {
        std::vector<const ExperimentRow*> out;
        for (const auto& r : rows)
            if (r.config == config && r.method == method) out.push_back(&r);
        return out;
    }
};

namespace detail {

inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

class Stopwatch {
public:
    double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count(); }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

// sample standard deviation, 0 for fewer than two values
inline double std_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

} // namespace detail

/// Seed for one row: a function of the master seed, the config id and the repetition only.
inline std::uint64_t row_seed(std::uint64_t master, const std::string& config, std::size_t rep) {
    return itd::detail::splitmix64(master ^ itd::detail::splitmix64(detail::fnv1a(config) + rep));
}

// ---------------------------------------------------------------- basket put

struct BasketExperimentConfig {
    std::string id = "basket";
    std::vector<std::size_t> steps{50};
    LatticeConfig lattice = default_lattice();
    std::uint64_t seed = 1;
    std::size_t reps = 5;
    bool grid = true;
    bool binomial = true;

    static LatticeConfig default_lattice() {
        LatticeConfig c;
        c.particles = 1000;
        c.budget = {20, 25.0, 120};
        return c;
    }
};

struct GridPrice {
    double price = 0.0;
    Lattice lattice;
    LipschitzLedger ledger;
    double bound = 0.0;
};

/**
American basket put on a grid lattice with the stopping mapping. The error
bound uses L_t = e^{-r dt} |w|_2 and K_t = e^{-r dt}: the payoff is
|w|_2-Lipschitz and the discounted put value inherits that constant.
*/
inline GridPrice grid_price(const GbmModel& model, const BasketPut& opt, const LatticeConfig& cfg) {
    model.validate();
    opt.validate(model.dim());
    GridPrice out;
    out.lattice = build_lattice(model.s0, model.N, GbmSampler(model), cfg);
    CostSpec costs;
    costs.terminal = [&](std::size_t, std::span<const double> s) { return basket_put_payoff(opt, s); };
    costs.reward = costs.terminal;
    const double disc = std::exp(-model.r * model.dt());
    out.price = backward_evaluate(out.lattice.stages, costs, risk::Stopping{}, disc)[0][0];
    double wn = 0.0;
    for (double w : opt.weights) wn += w * w;
    wn = std::sqrt(wn);
    out.ledger.delta = out.lattice.deltas();
    out.ledger.L.assign(model.N, disc * wn);
    out.ledger.K.assign(model.N, disc);
    out.bound = value_error_bound(out.ledger);
    return out;
}

/**
Rows per N: "binomial" (price, nodes) once, and "grid" (price, lattice
points, per-stage Delta, bound constants, bound) per repetition.
*/
inline ExperimentReport run_basket_experiment(const io::MarketConfig& market, const BasketExperimentConfig& cfg) {
    require(!cfg.steps.empty(), "run_basket_experiment: no step counts");
    require(cfg.reps >= 1 || !cfg.grid, "run_basket_experiment: reps must be >= 1");
    cfg.lattice.validate();
    ExperimentReport rep{"basket", {}};
    for (std::size_t N : cfg.steps) {
        require(N >= 1, "run_basket_experiment: N must be >= 1");
        GbmModel model = market.model;
        model.N = N;
        const std::string config = cfg.id + "/N=" + std::to_string(N);
        if (cfg.binomial) {
            detail::Stopwatch sw;
            ExperimentRow row{config, "binomial", cfg.seed, 0, {}, 0.0};
            row.metrics.push_back({"N", static_cast<double>(N)});
            row.metrics.push_back({"price", binomial_price_american(model, market.option)});
            row.metrics.push_back({"points", static_cast<double>(binomial_node_count(model.dim(), N))});
            row.seconds = sw.seconds();
            rep.rows.push_back(std::move(row));
        }
        if (!cfg.grid) continue;
        for (std::size_t r = 0; r < cfg.reps; ++r) {
            detail::Stopwatch sw;
            LatticeConfig lc = cfg.lattice;
            lc.seed = row_seed(cfg.seed, config, r);
            const auto g = grid_price(model, market.option, lc);
            ExperimentRow row{config, "grid", lc.seed, r, {}, 0.0};
            row.metrics.push_back({"N", static_cast<double>(N)});
            row.metrics.push_back({"price", g.price});
            row.metrics.push_back({"points", static_cast<double>(g.lattice.total_points())});
            row.metrics.push_back({"points_T", static_cast<double>(g.lattice.stages.back().size())});
            row.metrics.push_back({"bound_L", g.ledger.L.front()});
            row.metrics.push_back({"bound_K", g.ledger.K.front()});
            row.metrics.push_back({"bound", g.bound});
            for (std::size_t t = 0; t < g.ledger.delta.size(); ++t) row.metrics.push_back({"delta_" + std::to_string(t), g.ledger.delta[t]});
            row.seconds = sw.seconds();
            rep.rows.push_back(std::move(row));
        }
    }
    rep.sort();
    return rep;
}

/// value_error_bound rebuilt from a grid row's bound_L, bound_K and delta_t metrics.
inline double bound_from_row(const ExperimentRow& row) {
    LipschitzLedger led;
    for (std::size_t t = 0; row.has("delta_" + std::to_string(t)); ++t) {
        led.delta.push_back(row.metric("delta_" + std::to_string(t)));
        led.L.push_back(row.metric("bound_L"));
        led.K.push_back(row.metric("bound_K"));
    }
    return value_error_bound(led);
}

// ---------------------------------------------------------------- GMM selection

struct GmmExperimentConfig {
    std::size_t budget = 0;    // 0: the config's "selected"
    std::size_t particles = 0; // per center; 0: the config's value
    std::uint64_t seed = 1;
    std::size_t reps = 10;
    double candidates_factor = 5.0; // ceil(factor * budget) particles as candidate sites; 0: all of them
};

/// W_1 between the pooled particle law and the law on the selected sites it induces.
inline double selection_w1(const SelectionProblem& problem, const SelectionResult& r) {
    const auto& cl = problem.cloud;
    std::map<std::size_t, double> mass;
    for (std::size_t i = 0; i < cl.size(); ++i) mass[r.assignment[i]] += cl.weight(i);
    PointSet sites(problem.candidates.dim());
    std::vector<double> w;
    for (const auto& [k, m] : mass) {
        if (m <= 0.0) continue;
        sites.push_back(problem.candidates[k]);
        w.push_back(m);
    }
    std::vector<double> pw(cl.size());
    for (std::size_t i = 0; i < cl.size(); ++i) pw[i] = cl.weight(i);
    return wasserstein_exact(DiscreteMeasure::normalized(cl.points(), pw), DiscreteMeasure::normalized(sites, w)).distance;
}

/**
Samples each center, draws the candidate sites from the pooled particles
(without replacement, ceil(candidates_factor * budget) of them), then picks
`budget` sites twice:
"sup" minimises the worst per-center cost, "itd" the weighted sum. Rows
report W_1 to the pooled particles and both objectives.
*/
inline ExperimentReport run_gmm_selection(const GmmConfig& gmm, const GmmExperimentConfig& cfg) {
    GmmConfig g = gmm;
    if (cfg.particles) g.particles_per_center = cfg.particles;
    const std::size_t budget = cfg.budget ? cfg.budget : g.selected;
    g.validate();
    require(cfg.reps >= 1, "run_gmm_selection: reps must be >= 1");
    require(cfg.candidates_factor == 0.0 || cfg.candidates_factor >= 1.0, "run_gmm_selection: candidates_factor must be 0 or >= 1");
    const std::size_t total = g.particles_per_center * g.centers();
    const std::size_t want =
        cfg.candidates_factor == 0.0 ? total : std::min(total, static_cast<std::size_t>(std::ceil(cfg.candidates_factor * static_cast<double>(budget))));
    const std::string config = g.id + "/particles=" + std::to_string(g.particles_per_center) + "/budget=" + std::to_string(budget) +
                               "/candidates=" + std::to_string(want);
    ExperimentReport rep{"gmm", {}};
    for (std::size_t r = 0; r < cfg.reps; ++r) {
        const std::uint64_t seed = row_seed(cfg.seed, config, r);
        ParticleCloud cloud = sample_gmm(g, seed);
        require(budget <= total, "run_gmm_selection: budget exceeds the particle count");
        Rng crng = derive_rng(seed, Stream::candidates);
        PointSet cand = detail::subsample_points(cloud.points(), want, crng);
        SelectionProblem problem{std::move(cloud), std::move(cand), budget, GroundCost{1.0}};
        for (const char* method : {"itd", "sup"}) {
            detail::Stopwatch sw;
            const auto res = std::string(method) == "itd" ? select_greedy(problem) : select_greedy_minimax(problem);
            const double secs = sw.seconds();
            const auto per = per_source_cost(problem, res);
            double sup = 0.0;
            for (double c : per) sup = std::max(sup, c);
            ExperimentRow row{config, method, seed, r, {}, secs};
            row.metrics.push_back({"w1", selection_w1(problem, res)});
            row.metrics.push_back({"itd_objective", res.objective});
            row.metrics.push_back({"sup_objective", sup});
            row.metrics.push_back({"sites", static_cast<double>(res.sites().size())});
            rep.rows.push_back(std::move(row));
        }
    }
    rep.sort();
    return rep;
}

// ---------------------------------------------------------------- risk stability

struct RiskStabilityConfig {
    std::size_t particles = 1000;
    std::size_t budget = 400;
    double kappa = 1.0;
    std::uint64_t seed = 1;
    std::size_t reps = 50;
};

/**
Mean and first-order upper semideviation of the terminal basket value
w . S_T, estimated per repetition from (a) the plug-in Monte Carlo sample and
(b) the sites selected from that sample with their assigned masses. The
summary rows hold the across-repetition standard deviations.
*/
inline ExperimentReport run_risk_stability(const io::MarketConfig& market, const RiskStabilityConfig& cfg) {
    const GbmModel& m = market.model;
    m.validate();
    require(cfg.reps >= 1 && cfg.particles >= 1 && cfg.budget >= 1, "run_risk_stability: counts must be positive");
    const std::string config = "risk/particles=" + std::to_string(cfg.particles) + "/budget=" + std::to_string(cfg.budget);
    ExperimentReport rep{"risk", {}};
    std::map<std::string, std::vector<double>> by_method_mean, by_method_dev;
    auto basket = [&](std::span<const double> s) {
        double b = 0.0;
        for (std::size_t i = 0; i < s.size(); ++i) b += market.option.weights[i] * s[i];
        return b;
    };
    auto add = [&](std::size_t r, std::uint64_t seed, const char* method, const std::vector<double>& p, const std::vector<double>& v,
                   double secs) {
        const double mean = sigma_expectation(p, v);
        const double dev = sigma_msd(p, v, 1.0, 1.0) - mean;
        ExperimentRow row{config, method, seed, r, {}, secs};
        row.metrics.push_back({"mean", mean});
        row.metrics.push_back({"semideviation", dev});
        row.metrics.push_back({"msd", mean + cfg.kappa * dev});
        rep.rows.push_back(std::move(row));
        by_method_mean[method].push_back(mean);
        by_method_dev[method].push_back(dev);
    };
    for (std::size_t r = 0; r < cfg.reps; ++r) {
        const std::uint64_t seed = row_seed(cfg.seed, config, r);
        detail::Stopwatch sw;
        PointSet sample(m.dim());
        Rng rng = derive_rng(seed, Stream::monte_carlo);
        GbmSampler(m, m.T).sample(m.s0, cfg.particles, rng, sample);
        std::vector<double> p(sample.size(), 1.0 / static_cast<double>(sample.size())), v(sample.size());
        for (std::size_t i = 0; i < sample.size(); ++i) v[i] = basket(sample[i]);
        add(r, seed, "monte-carlo", p, v, sw.seconds());

        detail::Stopwatch sw2;
        PointSet cand = detail::unique_points(sample);
        const std::size_t budget = std::min(cfg.budget, cand.size());
        SelectionProblem problem{ParticleCloud(sample, {0, sample.size()}, {1.0}), std::move(cand), budget, GroundCost{1.0}};
        const auto res = select_greedy(problem);
        const auto rows = implied_rows(problem, res);
        std::vector<double> gp, gv;
        for (const auto& [k, pr] : rows[0]) {
            gp.push_back(pr);
            gv.push_back(basket(problem.candidates[k]));
        }
        add(r, seed, "grid", gp, gv, sw2.seconds());
    }
    for (const auto& [method, means] : by_method_mean) {
        ExperimentRow row{config, std::string(method) + "-spread", cfg.seed, 0, {}, 0.0};
        row.metrics.push_back({"std_mean", detail::std_of(means)});
        row.metrics.push_back({"std_semideviation", detail::std_of(by_method_dev[method])});
        rep.rows.push_back(std::move(row));
    }
    rep.sort();
    return rep;
}

// ---------------------------------------------------------------- emission

namespace detail {

inline std::string num(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
    return out + "\"";
}

inline std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error("cannot write " + p.string());
    return out;
}

} // namespace detail

struct EmittedFiles {
    std::filesystem::path results, summary, timings, data;
};

/**
Writes <name>_results.csv (one line per row and metric, no timings),
<name>_summary.csv (mean/std per config, method, metric), <name>_timings.csv
and <name>.dat (whitespace columns for plotting: per method, N or config
index, then mean and std of each metric). Rows are emitted in sorted order.
*/
inline EmittedFiles emit_report(const ExperimentReport& report, const std::filesystem::path& dir) {
    require(!report.rows.empty(), "emit_report: report has no rows");
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (!std::filesystem::is_directory(dir)) throw Error("cannot create " + dir.string());
    ExperimentReport sorted = report;
    sorted.sort();
    const std::string base = report.name.empty() ? "report" : report.name;
    EmittedFiles f{dir / (base + "_results.csv"), dir / (base + "_summary.csv"), dir / (base + "_timings.csv"), dir / (base + ".dat")};

    {
        auto out = detail::open_out(f.results);
        out << "config,method,seed,rep,metric,value\n";
        for (const auto& r : sorted.rows)
            for (const auto& [k, v] : r.metrics)
                out << detail::csv_field(r.config) << ',' << detail::csv_field(r.method) << ',' << r.seed << ',' << r.rep << ','
                    << detail::csv_field(k) << ',' << detail::num(v) << '\n';
    }
    {
        auto out = detail::open_out(f.timings);
        out << "config,method,seed,rep,seconds\n";
        for (const auto& r : sorted.rows)
            out << detail::csv_field(r.config) << ',' << detail::csv_field(r.method) << ',' << r.seed << ',' << r.rep << ','
                << detail::num(r.seconds) << '\n';
    }

    // (config, method) groups in sorted order, metrics in first-seen order
    struct Group {
        std::string config, method;
        std::vector<std::string> names;
        std::map<std::string, std::vector<double>> values;
    };
    std::vector<Group> groups;
    for (const auto& r : sorted.rows) {
        if (groups.empty() || groups.back().config != r.config || groups.back().method != r.method) groups.push_back({r.config, r.method, {}, {}});
        auto& g = groups.back();
        for (const auto& [k, v] : r.metrics) {
            if (!g.values.count(k)) g.names.push_back(k);
            g.values[k].push_back(v);
        }
    }
    {
        auto out = detail::open_out(f.summary);
        out << "config,method,metric,count,mean,std\n";
        for (const auto& g : groups)
            for (const auto& k : g.names) {
                const auto& v = g.values.at(k);
                out << detail::csv_field(g.config) << ',' << detail::csv_field(g.method) << ',' << detail::csv_field(k) << ',' << v.size()
                    << ',' << detail::num(detail::mean_of(v)) << ',' << detail::num(detail::std_of(v)) << '\n';
            }
    }
    {
        auto out = detail::open_out(f.data);
        std::vector<std::string> methods;
        for (const auto& g : groups)
            if (std::find(methods.begin(), methods.end(), g.method) == methods.end()) methods.push_back(g.method);
        std::sort(methods.begin(), methods.end());
        for (const auto& method : methods) {
            std::vector<const Group*> gs;
            for (const auto& g : groups)
                if (g.method == method) gs.push_back(&g);
            // N when present, otherwise the config's position
            auto key = [](const Group* g, std::size_t i) { return g->values.count("N") ? g->values.at("N").front() : static_cast<double>(i); };
            std::vector<std::size_t> order(gs.size());
            for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
            std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return key(gs[a], a) < key(gs[b], b); });
            out << "# method " << method << "\n# x";
            std::vector<std::string> names;
            for (const auto* g : gs)
                for (const auto& k : g->names)
                    if (k != "N" && std::find(names.begin(), names.end(), k) == names.end()) names.push_back(k);
            for (const auto& k : names) out << ' ' << k << "_mean " << k << "_std";
            out << '\n';
            for (std::size_t i : order) {
                out << detail::num(key(gs[i], i));
                for (const auto& k : names) {
                    const auto it = gs[i]->values.find(k);
                    if (it == gs[i]->values.end())
                        out << " nan nan";
                    else
                        out << ' ' << detail::num(detail::mean_of(it->second)) << ' ' << detail::num(detail::std_of(it->second));
                }
                out << '\n';
            }
            out << "\n\n";
        }
    }
    return f;
}

} // namespace itd
