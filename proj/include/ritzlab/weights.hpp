#pragma once

#include <cmath>
#include <cstdio>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ritzlab/geometry.hpp"

namespace ritzlab {

/// Nonnegative locally integrable weight on the plane.
struct Weight {
    std::string name;
    std::function<double(Vec2)> eval;
    std::vector<Vec2> singular_points;          // cube family is densified here
    std::optional<double> claimed_class;        // p for a claimed A_p membership

    static Weight one() {
        return {"one", [](Vec2) { return 1.0; }, {}, std::nullopt};
    }

    /// |x - center|^beta. Classical power-weight criterion: in A_p (p > 1)
    /// exactly when -2 < beta < 2(p-1) in two dimensions.
    static Weight power(double beta, Vec2 center) {
        char buf[80];
        std::snprintf(buf, sizeof buf, "power_beta%g", beta);
        Weight w;
        w.name = buf;
        w.eval = [beta, center](Vec2 x) { return std::pow(dist(x, center), beta); };
        w.singular_points = {center};
        return w;
    }
};

/// Candidate N-function for Orlicz norms.
struct OrliczFunction {
    std::string name;
    std::function<double(double)> eval;
    std::optional<double> claimed_nabla2_constant;

    static OrliczFunction power(double p) {
        char buf[48];
        std::snprintf(buf, sizeof buf, "power_p%g", p);
        return {buf, [p](double t) { return std::pow(t, p); },
                p > 1.0 ? std::optional<double>(2.0) : std::nullopt};
    }

    // e^t - 1 has linear growth at 0 (not an N-function, and the nabla_2
    // display fails for small t); it is still a valid Luxemburg integrand.
    static OrliczFunction exp_minus_one() {
        return {"exp", [](double t) { return std::expm1(t); }, std::nullopt};
    }

    /// e^t - t - 1: the exponential N-function; in nabla_2 with a = 2.
    static OrliczFunction exp_minus_linear() {
        return {"explin", [](double t) { return std::expm1(t) - t; }, 2.0};
    }

    static OrliczFunction t2_log() {
        return {"t2log", [](double t) { return t * t * std::log(M_E + t); }, 2.0};
    }

    static OrliczFunction named(const std::string& n) {
        if (n == "exp") return exp_minus_one();
        if (n == "explin") return exp_minus_linear();
        if (n == "t2log") return t2_log();
        throw std::invalid_argument("OrliczFunction: unknown name " + n +
                                    " (expected exp, explin, t2log, or use power(p))");
    }
};

/// Variable exponent p(x) >= 1 on the domain.
struct VariableExponent {
    std::string name;
    std::function<double(Vec2)> eval;
    double p_minus = 1.0;  // sampled essential infimum

    static VariableExponent constant(double p) {
        char buf[48];
        std::snprintf(buf, sizeof buf, "const_p%g", p);
        return {buf, [p](Vec2) { return p; }, p};
    }

    static VariableExponent two_plus_x() {
        return {"two_plus_x", [](Vec2 v) { return 2.0 + v.x; }, 2.0};
    }

    static VariableExponent named(const std::string& n) {
        if (n == "two_plus_x") return two_plus_x();
        throw std::invalid_argument("VariableExponent: unknown name " + n);
    }
};

}  // namespace ritzlab
