// itd: command line front end for the experiments and ad-hoc kernel distances.
//
// exit codes: 0 ok, 2 bad configuration or arguments, 3 solver failure, 1 anything else

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "itd/itd.hpp"

namespace {

struct LatticeFlags {
    std::string selector = "greedy";
    std::size_t budget = 20;
    double budget_growth = 25.0;
    std::size_t budget_cap = 120;
    std::size_t particles = 1000;
    double candidates_factor = 5.0;
    bool fresh_candidates = false;

    void add(CLI::App* app) {
        app->add_option("--selector", selector, "exact, lp-round or greedy")->check(CLI::IsMember({"exact", "lp-round", "greedy"}));
        app->add_option("--budget", budget, "sites at the first step");
        app->add_option("--budget-growth", budget_growth, "extra sites per later step");
        app->add_option("--budget-cap", budget_cap, "largest per-stage budget");
        app->add_option("--particles", particles, "particles per lattice point");
        app->add_option("--candidates-factor", candidates_factor, "candidate sites per budgeted site");
        app->add_flag("--fresh-candidates", fresh_candidates, "draw candidates afresh instead of subsampling particles");
    }

    itd::LatticeConfig config() const {
        itd::LatticeConfig c;
        c.selector.method = itd::parse_selection_method(selector);
        c.budget = {budget, budget_growth, budget_cap};
        c.particles = particles;
        c.candidates_factor = candidates_factor;
        c.candidates = fresh_candidates ? itd::CandidateStrategy::fresh : itd::CandidateStrategy::subsample;
        c.validate();
        return c;
    }
};

void print_summary(const itd::ExperimentReport& rep, const itd::EmittedFiles& files) {
    std::string last;
    for (const auto& r : rep.rows) {
        const std::string key = r.config + " " + r.method;
        if (key == last) continue;
        last = key;
        std::printf("%-40s %-16s", r.config.c_str(), r.method.c_str());
        const auto rows = rep.select(r.config, r.method);
        for (const auto& [name, v0] : r.metrics) {
            if (name.rfind("delta_", 0) == 0 && name != "delta_0") continue;
            std::vector<double> v;
            for (const auto* x : rows) v.push_back(x->metric(name));
            double m = 0.0;
            for (double x : v) m += x;
            std::printf(" %s=%.6g", name.c_str(), m / static_cast<double>(v.size()));
        }
        std::printf("\n");
    }
    std::printf("wrote %s\n", files.results.string().c_str());
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Integrated transportation distance lattices and experiments"};
    app.require_subcommand(1);

    std::string config, out = "results";
    std::uint64_t seed = 1;
    std::size_t reps = 0;

    auto* price = app.add_subcommand("price-basket", "American basket put: grid lattice against the binomial tree");
    std::vector<std::size_t> steps;
    std::string checkpoint;
    bool no_grid = false, no_binomial = false;
    LatticeFlags lf;
    price->add_option("--config", config, "market JSON")->required();
    price->add_option("--steps", steps, "time step counts (default: the config's N)")->delimiter(',');
    price->add_option("--checkpoint", checkpoint, "write the first lattice of the last N to this JSON file");
    price->add_flag("--no-grid", no_grid);
    price->add_flag("--no-binomial", no_binomial);
    lf.add(price);

    auto* gmm = app.add_subcommand("gmm-select", "Site selection on a Gaussian mixture: sup distance against ITD");
    std::string dataset;
    std::size_t gmm_budget = 0, gmm_particles = 0;
    auto* gcfg = gmm->add_option("--config", config, "mixture JSON");
    gmm->add_option("--dataset", dataset, "bundled mixture id (dim2_c5, dim2_c10, dim2_c16, dim3_c3, dim3_c5, dim5_c3)")->excludes(gcfg);
    gmm->add_option("--budget", gmm_budget, "sites to select (default: the config's 'selected')");
    gmm->add_option("--particles", gmm_particles, "particles per center (default: the config's value)");
    double gmm_factor = 5.0;
    gmm->add_option("--candidates-factor", gmm_factor, "candidate sites per selected site, drawn from the particles (0: all particles)");

    auto* risk = app.add_subcommand("risk-stability", "Spread of mean and semideviation estimates: Monte Carlo against selected sites");
    itd::RiskStabilityConfig rc;
    risk->add_option("--config", config, "market JSON")->required();
    risk->add_option("--particles", rc.particles, "samples per repetition");
    risk->add_option("--budget", rc.budget, "selected sites per repetition");

    auto* dist = app.add_subcommand("kernel-distance", "ITD and sup distance between two kernel JSON files");
    std::string kernel_a, kernel_b;
    double p = 1.0;
    dist->add_option("first", kernel_a, "kernel JSON; its 'lambda' (or uniform) weights the sources")->required();
    dist->add_option("second", kernel_b, "kernel JSON with the same sources")->required();
    dist->add_option("--p", p, "order of the ground cost d^p");

    for (auto* sub : {price, gmm, risk}) {
        sub->add_option("--seed", seed, "master seed");
        sub->add_option("--reps", reps, "repetitions per configuration");
        sub->add_option("--out", out, "output directory");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (price->parsed()) {
            const auto market = itd::io::market_from_json(itd::io::read_file(config));
            itd::BasketExperimentConfig c;
            c.id = market.model.dim() == 1 ? "basket" : "basket_" + std::to_string(market.model.dim()) + "d";
            c.steps = steps.empty() ? std::vector<std::size_t>{market.model.N} : steps;
            c.lattice = lf.config();
            c.seed = seed;
            if (reps) c.reps = reps;
            c.grid = !no_grid;
            c.binomial = !no_binomial;
            const auto rep = itd::run_basket_experiment(market, c);
            print_summary(rep, itd::emit_report(rep, out));
            if (!checkpoint.empty()) {
                auto model = market.model;
                model.N = c.steps.back();
                auto lc = c.lattice;
                lc.seed = itd::row_seed(seed, c.id + "/N=" + std::to_string(model.N), 0);
                itd::io::write_file(checkpoint, itd::io::to_json(itd::build_lattice(model.s0, model.N, itd::GbmSampler(model), lc)));
                std::printf("wrote %s\n", checkpoint.c_str());
            }
        } else if (gmm->parsed()) {
            if (config.empty() && dataset.empty()) throw itd::InvalidArgument("gmm-select needs --config or --dataset");
            const auto g = dataset.empty() ? itd::io::gmm_from_json(itd::io::read_file(config)) : itd::bundled_gmm(dataset);
            itd::GmmExperimentConfig c;
            c.budget = gmm_budget;
            c.particles = gmm_particles;
            c.candidates_factor = gmm_factor;
            c.seed = seed;
            if (reps) c.reps = reps;
            const auto rep = itd::run_gmm_selection(g, c);
            print_summary(rep, itd::emit_report(rep, out));
        } else if (risk->parsed()) {
            const auto market = itd::io::market_from_json(itd::io::read_file(config));
            rc.seed = seed;
            if (reps) rc.reps = reps;
            const auto rep = itd::run_risk_stability(market, rc);
            print_summary(rep, itd::emit_report(rep, out));
        } else if (dist->parsed()) {
            const auto ja = itd::io::read_file(kernel_a), jb = itd::io::read_file(kernel_b);
            const auto qa = itd::io::kernel_from_json(ja), qb = itd::io::kernel_from_json(jb);
            const auto lambda = itd::io::marginal_from_json(ja, qa);
            const itd::GroundCost cost(p);
            const auto h = itd::hierarchy_triple(lambda, qa, qb, cost);
            std::printf("itd %.17g\nsup %.17g\njoined %.17g\nmixed %.17g\n", h.itd, itd::sup_distance(qa, qb, cost), h.joined, h.mixed);
        }
    } catch (const itd::InvalidArgument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const itd::SolverFailure& e) {
        std::cerr << "solver failure: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
