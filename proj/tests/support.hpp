#pragma once

// Test-only helpers: synthetic data generators and oracles that recompute
// quantities straight from their definitions, independent of the library
// code paths they check.

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "treetune/dataset.hpp"
#include "treetune/rng.hpp"
#include "treetune/tree.hpp"

namespace treetune::testing {

inline double normal(Rng& rng) {
    double u1 = rng.uniform_open_closed();
    double u2 = rng.uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

/// Friedman #1: y = 10 sin(pi x1 x2) + 20 (x3 - 0.5)^2 + 10 x4 + 5 x5 + e.
inline Dataset friedman1(std::size_t n, std::size_t p, double noise_sd, std::uint64_t seed,
                         std::string name = "friedman1") {
    Rng rng(seed);
    Matrix x(n, p);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < p; ++j) x(i, j) = rng.uniform();
        y[i] = 10.0 * std::sin(std::numbers::pi * x(i, 0) * x(i, 1)) + 20.0 * (x(i, 2) - 0.5) * (x(i, 2) - 0.5) +
               10.0 * x(i, 3) + 5.0 * x(i, 4) + noise_sd * normal(rng);
    }
    std::vector<std::string> names;
    for (std::size_t j = 0; j < p; ++j) names.push_back("x" + std::to_string(j + 1));
    return Dataset(std::move(name), "y", std::move(names), std::move(y), std::move(x));
}

/// Uniform features; response linear in the first feature plus noise, with
/// a positive offset so means are nonzero.
inline Dataset random_dataset(std::size_t n, std::size_t p, std::uint64_t seed, std::string name = "random") {
    Rng rng(seed);
    Matrix x(n, p);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < p; ++j) x(i, j) = rng.uniform();
        y[i] = 5.0 + 3.0 * x(i, 0) + rng.uniform();
    }
    std::vector<std::string> names;
    for (std::size_t j = 0; j < p; ++j) names.push_back("f" + std::to_string(j));
    return Dataset(std::move(name), "y", std::move(names), std::move(y), std::move(x));
}

namespace oracle {

inline double nse(const std::vector<double>& y, const std::vector<double>& yhat) {
    double ybar = 0.0;
    for (double v : y) ybar += v;
    ybar /= static_cast<double>(y.size());
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        num += (y[i] - yhat[i]) * (y[i] - yhat[i]);
        den += (y[i] - ybar) * (y[i] - ybar);
    }
    return 1.0 - num / den;
}

/// Modified KGE from textbook definitions, computed with long double.
inline double kge(const std::vector<double>& y, const std::vector<double>& yhat) {
    const auto n = static_cast<long double>(y.size());
    long double my = 0, mp = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        my += y[i];
        mp += yhat[i];
    }
    my /= n;
    mp /= n;
    long double cov = 0, vy = 0, vp = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        cov += (y[i] - my) * (yhat[i] - mp);
        vy += (y[i] - my) * (y[i] - my);
        vp += (yhat[i] - mp) * (yhat[i] - mp);
    }
    const long double r = cov / std::sqrt(vy * vp);
    const long double sdy = std::sqrt(vy / (n - 1));
    const long double sdp = std::sqrt(vp / (n - 1));
    const long double alpha = mp / my;
    const long double beta = (sdp / mp) / (sdy / my);
    return static_cast<double>(1.0L - std::sqrt((r - 1) * (r - 1) + (alpha - 1) * (alpha - 1) + (beta - 1) * (beta - 1)));
}

struct BruteSplit {
    std::size_t feature;
    double threshold;
    double reduction;
};

inline double sse(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    long double m = 0;
    for (double x : v) m += x;
    m /= static_cast<long double>(v.size());
    long double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return static_cast<double>(s);
}

/// Every (feature, midpoint of consecutive distinct values) pair, children
/// partitioned directly and scored by their own sums of squares.
inline std::vector<BruteSplit> all_splits(const Matrix& x, const std::vector<double>& y,
                                          const std::vector<std::size_t>& rows, std::size_t min_node) {
    std::vector<double> parent;
    for (auto r : rows) parent.push_back(y[r]);
    const double parent_sse = sse(parent);
    std::vector<BruteSplit> out;
    for (std::size_t f = 0; f < x.cols(); ++f) {
        std::vector<double> values;
        for (auto r : rows) values.push_back(x(r, f));
        std::sort(values.begin(), values.end());
        values.erase(std::unique(values.begin(), values.end()), values.end());
        for (std::size_t i = 0; i + 1 < values.size(); ++i) {
            const double t = split_threshold(values[i], values[i + 1]);
            std::vector<double> left, right;
            for (auto r : rows) (x(r, f) <= t ? left : right).push_back(y[r]);
            if (left.size() < min_node || right.size() < min_node) continue;
            out.push_back({f, t, parent_sse - sse(left) - sse(right)});
        }
    }
    return out;
}

/// Scalar minimization of f on [lo, hi]: dense grid then golden section.
/// Pass an f that evaluates in long double when the minimum is flat.
template <typename F>
double minimize(F f, double lo, double hi) {
    const int grid = 2000;
    double best_x = lo;
    auto best_f = f(lo);
    for (int i = 1; i <= grid; ++i) {
        const double xv = lo + (hi - lo) * i / grid;
        const auto fv = f(xv);
        if (fv < best_f) {
            best_f = fv;
            best_x = xv;
        }
    }
    const double step = (hi - lo) / grid;
    double a = std::max(lo, best_x - step), b = std::min(hi, best_x + step);
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - g * (b - a), d = a + g * (b - a);
    for (int it = 0; it < 200; ++it) {
        if (f(c) < f(d))
            b = d;
        else
            a = c;
        c = b - g * (b - a);
        d = a + g * (b - a);
    }
    return 0.5 * (a + b);
}

}  // namespace oracle

}  // namespace treetune::testing
