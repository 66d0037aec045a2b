#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "ritzlab/fe_space.hpp"

namespace ritzlab {

namespace detail {

// Separable envelope 16 x(1-x) y(1-y), normalized to 1 at the square center:
// the factor (4x(1-x))(4y(1-y)). Vanishes on the boundary of the unit square.
inline double envelope(Vec2 v) {
    return 4.0 * v.x * (1.0 - v.x) * 4.0 * v.y * (1.0 - v.y);
}

inline Vec2 envelope_grad(Vec2 v) {
    return {(4.0 - 8.0 * v.x) * 4.0 * v.y * (1.0 - v.y),
            4.0 * v.x * (1.0 - v.x) * (4.0 - 8.0 * v.y)};
}

/// |x-c|^s times the normalized envelope; gradient blows up like r^{s-1}.
inline AnalyticFunction radial_power_bubble(const std::string& name, Vec2 c, double s) {
    AnalyticFunction f;
    f.name = name;
    f.value = [c, s](Vec2 v) { return std::pow(dist(v, c), s) * envelope(v); };
    f.gradient = [c, s](Vec2 v) {
        const Vec2 d = v - c;
        const double r = norm(d);
        if (r < 1e-300) return Vec2{0, 0};
        const double rs = std::pow(r, s);
        return (s * rs / (r * r) * envelope(v)) * d + rs * envelope_grad(v);
    };
    f.vanishes_on_boundary = true;
    return f;
}

}  // namespace detail

/// Test corpus on the unit square; every entry vanishes on the boundary.
inline std::vector<AnalyticFunction> corpus_registry() {
    std::vector<AnalyticFunction> reg;
    {
        AnalyticFunction f;
        f.name = "bubble";
        f.value = [](Vec2 v) { return v.x * (1.0 - v.x) * v.y * (1.0 - v.y); };
        f.gradient = [](Vec2 v) {
            return Vec2{(1.0 - 2.0 * v.x) * v.y * (1.0 - v.y),
                        v.x * (1.0 - v.x) * (1.0 - 2.0 * v.y)};
        };
        f.vanishes_on_boundary = true;
        reg.push_back(f);
    }
    {
        AnalyticFunction f;
        f.name = "sine";
        f.value = [](Vec2 v) { return std::sin(M_PI * v.x) * std::sin(M_PI * v.y); };
        f.gradient = [](Vec2 v) {
            return Vec2{M_PI * std::cos(M_PI * v.x) * std::sin(M_PI * v.y),
                        M_PI * std::sin(M_PI * v.x) * std::cos(M_PI * v.y)};
        };
        f.vanishes_on_boundary = true;
        reg.push_back(f);
    }
    // grad in L^p iff p < 2/(1-s) in 2D: sing06 up to p < 5, sing02 up to 2.5.
    reg.push_back(detail::radial_power_bubble("sing06", {0.5, 0.5}, 0.6));
    reg.push_back(detail::radial_power_bubble("sing02", {0.3, 0.7}, 0.2));
    {
        AnalyticFunction f;
        f.name = "osc";
        f.value = [](Vec2 v) {
            return std::sin(8.0 * M_PI * v.x) * std::sin(8.0 * M_PI * v.y) * detail::envelope(v);
        };
        f.gradient = [](Vec2 v) {
            const double sx = std::sin(8.0 * M_PI * v.x), cx = std::cos(8.0 * M_PI * v.x);
            const double sy = std::sin(8.0 * M_PI * v.y), cy = std::cos(8.0 * M_PI * v.y);
            const Vec2 ge = detail::envelope_grad(v);
            const double e = detail::envelope(v);
            return Vec2{8.0 * M_PI * cx * sy * e + sx * sy * ge.x,
                        8.0 * M_PI * sx * cy * e + sx * sy * ge.y};
        };
        f.vanishes_on_boundary = true;
        reg.push_back(f);
    }
    return reg;
}

inline AnalyticFunction corpus_function(const std::string& name) {
    const auto reg = corpus_registry();
    for (const auto& f : reg)
        if (f.name == name) return f;
    std::string valid;
    for (const auto& f : reg) valid += (valid.empty() ? "" : ", ") + f.name;
    throw std::invalid_argument("unknown corpus function '" + name + "' (valid: " + valid + ")");
}

}  // namespace ritzlab
