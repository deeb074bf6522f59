#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "itd/core.hpp"
#include "itd/gmm.hpp"
#include "itd/kernel_metric.hpp"
#include "itd/lattice.hpp"
#include "itd/markets.hpp"
#include "itd/risk.hpp"
#include "itd/transport.hpp"

namespace itd::io {

using json = nlohmann::json;

namespace detail {

template <class T>
T get(const json& j, const char* key) {
    if (!j.contains(key)) throw InvalidArgument(std::string("missing field '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw InvalidArgument(std::string("bad field '") + key + "': " + e.what());
    }
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
    return j.contains(key) ? get<T>(j, key) : fallback;
}

} // namespace detail

inline json parse(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw InvalidArgument(std::string("invalid JSON: ") + e.what());
    }
}

inline json read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

inline void write_file(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    out << j.dump(2) << '\n';
}

// points as a list of coordinate lists

inline json to_json(const PointSet& ps) { return ps.rows(); }

inline PointSet points_from_json(const json& j) {
    require(j.is_array(), "points must be a list of coordinate lists");
    PointSet ps;
    try {
        for (const auto& row : j) ps.push_back(row.get<std::vector<double>>());
    } catch (const json::exception& e) {
        throw InvalidArgument(std::string("bad point list: ") + e.what());
    }
    return ps;
}

// {"points": [[...], ...], "weights": [...]}

inline json to_json(const DiscreteMeasure& m) { return {{"points", to_json(m.points())}, {"weights", m.weights()}}; }

inline DiscreteMeasure measure_from_json(const json& j) {
    return DiscreteMeasure(points_from_json(j.at("points")), detail::get<std::vector<double>>(j, "weights"));
}

// {"sources": [[...], ...], "rows": [measure, ...], "lambda": [...] (optional)}

inline json to_json(const DiscreteKernel& q) {
    json rows = json::array();
    for (const auto& r : q.rows()) rows.push_back(to_json(r));
    return {{"sources", to_json(q.sources())}, {"rows", rows}};
}

inline DiscreteKernel kernel_from_json(const json& j) {
    if (!j.contains("sources") || !j.contains("rows")) throw InvalidArgument("kernel needs 'sources' and 'rows'");
    std::vector<DiscreteMeasure> rows;
    for (const auto& r : j.at("rows")) rows.push_back(measure_from_json(r));
    return DiscreteKernel(points_from_json(j.at("sources")), std::move(rows));
}

/// The kernel's "lambda" field, or uniform weights over its sources.
inline Marginal marginal_from_json(const json& j, const DiscreteKernel& q) {
    if (!j.contains("lambda")) return DiscreteMeasure::uniform(q.sources());
    return Marginal(q.sources(), detail::get<std::vector<double>>(j, "lambda"));
}

// {"mapping": "avar", "alpha": 0.05, ...}

inline RiskMapping risk_from_json(const json& j) {
    const auto name = detail::get<std::string>(j, "mapping");
    RiskMapping m;
    if (name == "expectation")
        m = risk::Expectation{};
    else if (name == "stopping")
        m = risk::Stopping{};
    else if (name == "avar")
        m = risk::Avar{detail::get<double>(j, "alpha")};
    else if (name == "msd")
        m = risk::MeanSemideviation{detail::get_or<double>(j, "p", 1.0), detail::get_or<double>(j, "kappa", 1.0)};
    else if (name == "spectral") {
        risk::Spectral s;
        for (const auto& pair : detail::get<std::vector<std::vector<double>>>(j, "theta")) {
            require(pair.size() == 2, "theta entries are [alpha, weight] pairs");
            s.theta.push_back({pair[0], pair[1]});
        }
        m = s;
    } else
        throw InvalidArgument("unknown mapping '" + name + "'");
    validate(m);
    return m;
}

inline json to_json(const RiskMapping& m) {
    json j{{"mapping", mapping_name(m)}};
    if (const auto* a = std::get_if<risk::Avar>(&m)) j["alpha"] = a->alpha;
    if (const auto* s = std::get_if<risk::MeanSemideviation>(&m)) {
        j["p"] = s->p;
        j["kappa"] = s->kappa;
    }
    if (const auto* s = std::get_if<risk::Spectral>(&m)) {
        json theta = json::array();
        for (const auto& [a, w] : s->theta) theta.push_back({a, w});
        j["theta"] = theta;
    }
    return j;
}

/// A basket put on a GBM market.
struct MarketConfig {
    GbmModel model;
    BasketPut option;
};

inline MarketConfig market_from_json(const json& j) {
    MarketConfig c;
    c.model.s0 = detail::get<std::vector<double>>(j, "s0");
    c.model.r = detail::get<double>(j, "r");
    c.model.sigma = detail::get<std::vector<std::vector<double>>>(j, "sigma");
    c.model.T = detail::get<double>(j, "T");
    const long long N = detail::get<long long>(j, "N");
    require(N >= 1, "market config: N must be >= 1");
    c.model.N = static_cast<std::size_t>(N);
    c.option.strike = detail::get<double>(j, "strike");
    c.option.weights = detail::get<std::vector<double>>(j, "weights");
    c.model.validate();
    c.option.validate(c.model.dim());
    return c;
}

inline json to_json(const MarketConfig& c) {
    return {{"s0", c.model.s0},         {"r", c.model.r},       {"sigma", c.model.sigma}, {"T", c.model.T},
            {"N", c.model.N},           {"strike", c.option.strike}, {"weights", c.option.weights}};
}

inline GmmConfig gmm_from_json(const json& j) {
    GmmConfig g;
    g.id = detail::get_or<std::string>(j, "id", "gmm");
    g.dim = detail::get<std::size_t>(j, "dim");
    g.means = detail::get<std::vector<std::vector<double>>>(j, "means");
    g.covariances = detail::get<std::vector<std::vector<std::vector<double>>>>(j, "covariances");
    g.weights = detail::get<std::vector<double>>(j, "weights");
    g.particles_per_center = detail::get_or<std::size_t>(j, "particles_per_center", g.particles_per_center);
    g.selected = detail::get_or<std::size_t>(j, "selected", g.selected);
    require(g.weights.size() == g.means.size() && g.covariances.size() == g.means.size(),
            "GmmConfig: one covariance and weight per center");
    g.normalize();
    g.validate();
    return g;
}

inline json to_json(const GmmConfig& g) {
    return {{"id", g.id},       {"dim", g.dim},         {"particles_per_center", g.particles_per_center}, {"selected", g.selected},
            {"means", g.means}, {"covariances", g.covariances}, {"weights", g.weights}};
}

// lattice checkpoint: one record per stage

inline json to_json(const LatticeStage& s) {
    json tr = json::array();
    for (const auto& row : s.transitions) {
        json r = json::array();
        for (const auto& [k, p] : row) r.push_back({k, p});
        tr.push_back(r);
    }
    json j{{"points", to_json(s.points)}, {"marginal", s.marginal}, {"transitions", tr}};
    j["delta_prev"] = s.delta_prev ? json(*s.delta_prev) : json(nullptr);
    return j;
}

inline LatticeStage stage_from_json(const json& j) {
    LatticeStage s;
    s.points = points_from_json(j.at("points"));
    s.marginal = detail::get<std::vector<double>>(j, "marginal");
    require(s.marginal.size() == s.points.size(), "lattice stage: marginal does not match the points");
    for (const auto& row : detail::get<json>(j, "transitions")) {
        TransitionRow r;
        for (const auto& e : row) r.push_back({e.at(0).get<std::size_t>(), e.at(1).get<double>()});
        s.transitions.push_back(std::move(r));
    }
    if (j.contains("delta_prev") && !j.at("delta_prev").is_null()) s.delta_prev = j.at("delta_prev").get<double>();
    return s;
}

inline json to_json(const Lattice& lat) {
    json stages = json::array();
    for (std::size_t t = 0; t < lat.stages.size(); ++t) {
        json s = to_json(lat.stages[t]);
        s["t"] = t;
        stages.push_back(s);
    }
    return {{"stages", stages}};
}

inline Lattice lattice_from_json(const json& j) {
    Lattice lat;
    for (const auto& s : detail::get<json>(j, "stages")) lat.stages.push_back(stage_from_json(s));
    require(!lat.stages.empty(), "lattice checkpoint has no stages");
    for (std::size_t t = 1; t < lat.stages.size(); ++t)
        require(lat.stages[t].transitions.size() == lat.stages[t - 1].size(), "lattice checkpoint: broken chain");
    return lat;
}

} // namespace itd::io
