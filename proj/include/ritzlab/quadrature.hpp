#pragma once

#include <array>
#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>
#include <vector>

#include "ritzlab/geometry.hpp"

namespace ritzlab {

/// Gauss-Legendre nodes/weights on [0,1], weights summing to 1.
inline void gauss_legendre_unit(int n, std::vector<double>& nodes, std::vector<double>& weights) {
    if (n < 1) throw std::invalid_argument("gauss_legendre_unit: n must be >= 1");
    nodes.resize(n);
    weights.resize(n);
    // Newton iteration on P_n over [-1,1], then map to [0,1].
    for (int i = 0; i < n; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            if (n == 1) p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            const double pn = (n == 1) ? x : p1;
            const double pm = (n == 1) ? 1.0 : p0;
            pp = n * (x * pn - pm) / (x * x - 1.0);
            const double dx = pn / pp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        nodes[i] = 0.5 * (1.0 - x);  // descending roots -> ascending nodes
        weights[i] = 1.0 / ((1.0 - x * x) * pp * pp);
    }
}

struct GaussLegendre1d {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Cached Gauss-Legendre rule on [0,1].
inline const GaussLegendre1d& gauss_legendre_cached(int n) {
    static std::map<int, GaussLegendre1d> cache;
    static std::mutex mtx;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(n);
    if (it == cache.end()) {
        GaussLegendre1d g;
        gauss_legendre_unit(n, g.nodes, g.weights);
        it = cache.emplace(n, std::move(g)).first;
    }
    return it->second;
}

/// Quadrature rule on the reference triangle in barycentric coordinates.
/// Weights sum to 1; a physical integral is area(T) * sum_i w_i f(x_i).
struct QuadratureRule {
    std::vector<std::array<double, 3>> points;  // barycentric triples
    std::vector<double> weights;
    int degree = 0;

    std::size_t size() const { return points.size(); }

    /// Rule exact for polynomials of total degree <= d. Cached, immutable.
    static const QuadratureRule& for_degree(int d);
};

namespace detail {

inline void push_perm3(QuadratureRule& r, double a, double w) {
    // Orbit of (1-2a, a, a) under coordinate permutations.
    const double b = 1.0 - 2.0 * a;
    r.points.push_back({b, a, a});
    r.points.push_back({a, b, a});
    r.points.push_back({a, a, b});
    for (int i = 0; i < 3; ++i) r.weights.push_back(w);
}

inline void push_perm6(QuadratureRule& r, double a, double b, double w) {
    const double c = 1.0 - a - b;
    r.points.push_back({a, b, c});
    r.points.push_back({a, c, b});
    r.points.push_back({b, a, c});
    r.points.push_back({b, c, a});
    r.points.push_back({c, a, b});
    r.points.push_back({c, b, a});
    for (int i = 0; i < 6; ++i) r.weights.push_back(w);
}

inline QuadratureRule make_rule(int d) {
    QuadratureRule r;
    r.degree = d;
    if (d <= 1) {
        r.points.push_back({1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0});
        r.weights.push_back(1.0);
    } else if (d == 2) {
        push_perm3(r, 1.0 / 6.0, 1.0 / 3.0);
    } else if (d <= 4) {
        // Dunavant degree 4, 6 points.
        push_perm3(r, 0.445948490915965, 0.223381589678011);
        push_perm3(r, 0.091576213509771, 0.109951743655322);
    } else if (d == 5) {
        // Dunavant degree 5, 7 points.
        r.points.push_back({1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0});
        r.weights.push_back(0.225);
        push_perm3(r, 0.470142064105115, 0.132394152788506);
        push_perm3(r, 0.101286507323456, 0.125939180544827);
    } else if (d == 6) {
        // Dunavant degree 6, 12 points.
        push_perm3(r, 0.249286745170910, 0.116786275726379);
        push_perm3(r, 0.063089014491502, 0.050844906370207);
        push_perm6(r, 0.310352451033785, 0.053145049844816, 0.082851075618374);
    } else {
        // Collapsed tensor (Duffy) rule: exact for total degree <= d with
        // n >= (d+2)/2 Gauss points per direction. Interior points, positive
        // weights, any degree.
        const int n = (d + 3) / 2;
        std::vector<double> gx, gw;
        gauss_legendre_unit(n, gx, gw);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                const double xi = gx[i];
                const double eta = gx[j];
                const double x = xi;
                const double y = eta * (1.0 - xi);
                r.points.push_back({1.0 - x - y, x, y});
                r.weights.push_back(2.0 * gw[i] * gw[j] * (1.0 - xi));
            }
        }
    }
    return r;
}

}  // namespace detail

inline const QuadratureRule& QuadratureRule::for_degree(int d) {
    if (d < 0) throw std::invalid_argument("QuadratureRule: negative degree");
    static std::map<int, QuadratureRule> cache;
    static std::mutex mtx;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(d);
    if (it == cache.end()) it = cache.emplace(d, detail::make_rule(d)).first;
    return it->second;
}

}  // namespace ritzlab
