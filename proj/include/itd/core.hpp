#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace itd {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad input: malformed measures, mismatched dimensions, out-of-range parameters.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// A numerical routine could not produce a result (iteration limits, broken invariants).
class SolverFailure : public Error {
public:
    using Error::Error;
};

inline void require(bool condition, const std::string& message) {
    if (!condition) throw InvalidArgument(message);
}

/**
@brief A list of points in R^n stored contiguously.

All points share one dimension. Element access returns a span over the
coordinates of a point.
*/
class PointSet {
public:
    PointSet() = default;
    explicit PointSet(std::size_t dim) : dim_(dim) {}
    PointSet(std::size_t dim, std::vector<double> coords) : dim_(dim), coords_(std::move(coords)) {
        require(dim_ > 0, "PointSet: dimension must be positive");
        require(coords_.size() % dim_ == 0, "PointSet: coordinate count is not a multiple of the dimension");
    }
    PointSet(std::initializer_list<std::initializer_list<double>> pts) {
        for (const auto& p : pts) push_back(std::span<const double>(p.begin(), p.size()));
    }

    static PointSet from_rows(const std::vector<std::vector<double>>& rows) {
        PointSet out;
        for (const auto& r : rows) out.push_back(r);
        return out;
    }

    std::size_t size() const { return dim_ == 0 ? 0 : coords_.size() / dim_; }
    std::size_t dim() const { return dim_; }
    bool empty() const { return size() == 0; }

    std::span<const double> operator[](std::size_t i) const { return {coords_.data() + i * dim_, dim_}; }
    std::span<double> operator[](std::size_t i) { return {coords_.data() + i * dim_, dim_}; }

    void push_back(std::span<const double> p) {
        if (dim_ == 0 && coords_.empty()) dim_ = p.size();
        require(p.size() == dim_ && dim_ > 0, "PointSet: point dimension mismatch");
        coords_.insert(coords_.end(), p.begin(), p.end());
    }
    void push_back(const std::vector<double>& p) { push_back(std::span<const double>(p)); }

    void reserve(std::size_t n) { coords_.reserve(n * dim_); }
    void resize(std::size_t n) { coords_.resize(n * dim_); }

    const std::vector<double>& coords() const { return coords_; }

    std::vector<std::vector<double>> rows() const {
        std::vector<std::vector<double>> out;
        out.reserve(size());
        for (std::size_t i = 0; i < size(); ++i) out.emplace_back((*this)[i].begin(), (*this)[i].end());
        return out;
    }

    friend bool operator==(const PointSet&, const PointSet&) = default;

private:
    std::size_t dim_ = 0;
    std::vector<double> coords_;
};

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

inline double distance(std::span<const double> a, std::span<const double> b) {
    return std::sqrt(squared_distance(a, b));
}

/// d(a,b)^p for the Euclidean metric.
inline double distance_pow(std::span<const double> a, std::span<const double> b, double p) {
    const double sq = squared_distance(a, b);
    if (p == 1.0) return std::sqrt(sq);
    if (p == 2.0) return sq;
    return std::pow(sq, 0.5 * p);
}

/// Neumaier-compensated sum.
inline double stable_sum(std::span<const double> values) {
    double sum = 0.0, comp = 0.0;
    for (double v : values) {
        const double t = sum + v;
        if (std::abs(sum) >= std::abs(v))
            comp += (sum - t) + v;
        else
            comp += (v - t) + sum;
        sum = t;
    }
    return sum + comp;
}

inline bool same_point(std::span<const double> a, std::span<const double> b) {
    return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin());
}

} // namespace itd
