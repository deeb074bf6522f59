#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "itd/core.hpp"
#include "itd/random.hpp"
#include "itd/selection.hpp"

namespace itd {

/**
@brief Gaussian mixture: one center per source state.

Source s is the point means[s] with weight weights[s]; its kernel row is
N(means[s], covariances[s]).
*/
struct GmmConfig {
    std::string id;
    std::size_t dim = 0;
    std::vector<std::vector<double>> means;
    std::vector<std::vector<std::vector<double>>> covariances;
    std::vector<double> weights;
    std::size_t particles_per_center = 100;
    std::size_t selected = 10;

    std::size_t centers() const { return means.size(); }

    /// Symmetrizes covariances with |C - C^T| <= 1e-6 and rescales weights summing to 1 within 1e-6.
    void normalize() {
        for (auto& c : covariances)
            for (std::size_t i = 0; i < c.size(); ++i)
                for (std::size_t j = i + 1; j < c[i].size() && j < c.size(); ++j) {
                    require(std::abs(c[i][j] - c[j][i]) <= 1e-6, "GmmConfig: covariance is not symmetric");
                    c[i][j] = c[j][i] = 0.5 * (c[i][j] + c[j][i]);
                }
        double total = 0.0;
        for (double w : weights) total += w;
        require(std::abs(total - 1.0) <= 1e-6, "GmmConfig: weights must sum to 1");
        for (double& w : weights) w /= total;
    }

    /// Throws InvalidArgument unless the config is usable; call normalize() first.
    void validate() const {
        require(dim >= 1, "GmmConfig: dim must be >= 1");
        require(!means.empty(), "GmmConfig: no centers");
        require(covariances.size() == means.size() && weights.size() == means.size(), "GmmConfig: one covariance and weight per center");
        require(particles_per_center >= 1 && selected >= 1, "GmmConfig: particle and selection counts must be positive");
        double total = 0.0;
        for (std::size_t s = 0; s < centers(); ++s) {
            require(means[s].size() == dim, "GmmConfig: mean has the wrong dimension");
            require(weights[s] >= 0.0, "GmmConfig: negative weight");
            total += weights[s];
            const auto m = covariance(s);
            require((m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-12, "GmmConfig: covariance is not symmetric");
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m, Eigen::EigenvaluesOnly);
            require(eig.eigenvalues().minCoeff() >= -1e-8, "GmmConfig: covariance is not positive semidefinite");
        }
        require(std::abs(total - 1.0) <= 1e-12, "GmmConfig: weights must sum to 1");
    }

    Eigen::MatrixXd covariance(std::size_t s) const {
        const auto& c = covariances[s];
        require(c.size() == dim, "GmmConfig: covariance has the wrong shape");
        Eigen::MatrixXd m(dim, dim);
        for (std::size_t i = 0; i < dim; ++i) {
            require(c[i].size() == dim, "GmmConfig: covariance has the wrong shape");
            for (std::size_t j = 0; j < dim; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = c[i][j];
        }
        return m;
    }

    PointSet centers_set() const { return PointSet::from_rows(means); }
};

/// Square root A with A A^T = C, from the eigendecomposition (works for singular C).
inline Eigen::MatrixXd covariance_root(const Eigen::MatrixXd& c) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(c);
    const Eigen::VectorXd ev = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return eig.eigenvectors() * ev.asDiagonal();
}

/// particles_per_center draws from each center on stream (seed, particles, {rep, s}).
inline ParticleCloud sample_gmm(const GmmConfig& g, std::uint64_t seed, std::uint64_t rep = 0) {
    g.validate();
    std::vector<PointSet> groups;
    for (std::size_t s = 0; s < g.centers(); ++s) {
        Rng rng = derive_rng(seed, Stream::particles, {rep, s});
        const Eigen::MatrixXd a = covariance_root(g.covariance(s));
        std::normal_distribution<double> normal;
        PointSet pts(g.dim);
        Eigen::VectorXd z(static_cast<Eigen::Index>(g.dim));
        std::vector<double> x(g.dim);
        for (std::size_t i = 0; i < g.particles_per_center; ++i) {
            for (Eigen::Index d = 0; d < z.size(); ++d) z(d) = normal(rng);
            const Eigen::VectorXd y = a * z;
            for (std::size_t d = 0; d < g.dim; ++d) x[d] = g.means[s][d] + y(static_cast<Eigen::Index>(d));
            pts.push_back(x);
        }
        groups.push_back(std::move(pts));
    }
    return ParticleCloud::from_groups(groups, g.weights);
}

} // namespace itd
