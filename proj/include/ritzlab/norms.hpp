#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ritzlab/field.hpp"
#include "ritzlab/quadrature.hpp"
#include "ritzlab/sampling.hpp"
#include "ritzlab/weights.hpp"

namespace ritzlab {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Field magnitudes at the per-element quadrature points of the field's
/// mesh, with Lebesgue weights. All integral norms reduce to weighted sums
/// over one of these tables.
struct FieldSamples {
    std::vector<Vec2> points;
    std::vector<double> value;       // |f| at the point
    std::vector<double> lebesgue_w;  // quadrature weight * element area
};

inline FieldSamples sample_field(const PiecewiseField& f, int quad_degree = 12) {
    const Triangulation& mesh = f.mesh();
    const QuadratureRule& rule = QuadratureRule::for_degree(quad_degree);
    FieldSamples s;
    const std::size_t n = static_cast<std::size_t>(mesh.n_triangles()) * rule.size();
    s.points.reserve(n);
    s.value.reserve(n);
    s.lebesgue_w.reserve(n);
    for (int t = 0; t < mesh.n_triangles(); ++t) {
        const double area = mesh.tri_area(t);
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const Vec2 x = mesh.bary_to_point(t, rule.points[q]);
            s.points.push_back(x);
            s.value.push_back(f.magnitude(x));
            s.lebesgue_w.push_back(rule.weights[q] * area);
        }
    }
    return s;
}

/// Sorted magnitudes with cumulative measure tails: mu(t) = mu({|f| > t}).
class DistributionTable {
public:
    DistributionTable(const FieldSamples& s, const std::optional<Weight>& omega) {
        const std::size_t n = s.value.size();
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return s.value[a] < s.value[b]; });
        value_.resize(n);
        tail_.resize(n + 1);
        std::vector<double> w(n);
        for (std::size_t i = 0; i < n; ++i) {
            value_[i] = s.value[order[i]];
            w[i] = s.lebesgue_w[order[i]] *
                   (omega ? omega->eval(s.points[order[i]]) : 1.0);
        }
        tail_[n] = 0.0;
        for (std::size_t i = n; i-- > 0;) tail_[i] = tail_[i + 1] + w[i];
    }

    /// Measure of the strict superlevel set {|f| > t}.
    double mu(double t) const {
        const auto it = std::upper_bound(value_.begin(), value_.end(), t);
        return tail_[static_cast<std::size_t>(it - value_.begin())];
    }

    double total_measure() const { return tail_[0]; }
    double max_value() const { return value_.empty() ? 0.0 : value_.back(); }
    const std::vector<double>& values() const { return value_; }

    /// sup_t t mu(t)^{1/p}, exact for this step function: the supremum on
    /// each constancy interval is approached from below at a jump value v,
    /// where the tail is mu({|f| >= v}) — the first index of the value run.
    double weak_lp(double p) const {
        double best = 0.0;
        for (std::size_t i = 0; i < value_.size(); ++i) {
            if (i > 0 && value_[i] == value_[i - 1]) continue;
            best = std::max(best, value_[i] * std::pow(tail_[i], 1.0 / p));
        }
        return best;
    }

private:
    std::vector<double> value_;
    std::vector<double> tail_;  // tail_[i] = measure of {|f| >= value_[i]}
};

// --- Lebesgue ---------------------------------------------------------------

inline double lp_norm_from_samples(const FieldSamples& s, double p,
                                   const std::optional<Weight>& omega = std::nullopt) {
    if (p < 1.0) throw std::invalid_argument("lp_norm: p must be in [1, inf]");
    if (std::isinf(p)) {
        double m = 0.0;
        for (double v : s.value) m = std::max(m, v);
        return m;
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < s.value.size(); ++i) {
        const double w = s.lebesgue_w[i] * (omega ? omega->eval(s.points[i]) : 1.0);
        acc += w * std::pow(s.value[i], p);
    }
    return std::pow(acc, 1.0 / p);
}

/// ||f||_{L^p(omega)} by per-element Gauss quadrature (degree 12 by default);
/// p = inf returns the max of |f| over the quadrature points.
inline double lp_norm(const PiecewiseField& f, double p,
                      const std::optional<Weight>& omega = std::nullopt, int quad_degree = 12) {
    return lp_norm_from_samples(sample_field(f, quad_degree), p, omega);
}

/// mu({ |f| > t }) with mu = omega dx (strict inequality).
inline double distribution_function(const PiecewiseField& f, double t,
                                    const std::optional<Weight>& omega = std::nullopt,
                                    int quad_degree = 12) {
    if (t < 0.0) throw std::invalid_argument("distribution_function: t must be nonnegative");
    return DistributionTable(sample_field(f, quad_degree), omega).mu(t);
}

// --- Lorentz ----------------------------------------------------------------

inline double lorentz_norm_from_table(const DistributionTable& table, double p, double q) {
    const double fmax = table.max_value();
    if (fmax == 0.0) return 0.0;
    if (std::isinf(q)) return table.weak_lp(p);
    // (q int_0^inf t^{q-1} mu(t)^{q/p} dt)^{1/q}, integrated in log t over
    // [1e-6 fmax, fmax] with grid doubling until 0.1% agreement. mu vanishes
    // above fmax and the truncated lower tail is bounded by
    // (t_min)^q mu(0)^{q/p}, which is under the tolerance by construction.
    const double smin = std::log(1e-6 * fmax), smax = std::log(fmax);
    auto integral = [&](int n) {
        double acc = 0.0;
        const double ds = (smax - smin) / n;
        for (int i = 0; i <= n; ++i) {
            const double t = std::exp(smin + i * ds);
            const double g = q * std::pow(t, q) * std::pow(table.mu(t), q / p);
            acc += (i == 0 || i == n) ? 0.5 * g : g;
        }
        return acc * ds;
    };
    int n = 400;
    double prev = integral(n);
    for (int round = 0; round < 5; ++round) {
        n *= 2;
        const double cur = integral(n);
        if (std::abs(cur - prev) <= 1e-3 * cur) return std::pow(cur, 1.0 / q);
        prev = cur;
    }
    return std::pow(prev, 1.0 / q);
}

/// Lorentz L^{p,q}(mu) norm, mu = omega dx. Admissible ranges: p in (1,inf)
/// with q in (1,inf], or p = 1 with q = inf.
inline double lorentz_norm(const PiecewiseField& f, double p, double q,
                           const std::optional<Weight>& omega = std::nullopt,
                           int quad_degree = 12) {
    const bool ok = (p > 1.0 && !std::isinf(p) && q > 1.0) || (p == 1.0 && std::isinf(q));
    if (!ok) throw std::invalid_argument("lorentz_norm: (p,q) outside the admissible range");
    return lorentz_norm_from_table(DistributionTable(sample_field(f, quad_degree), omega), p, q);
}

// --- Orlicz (Luxemburg) -------------------------------------------------------

namespace detail {

/// inf{lambda > 0 : modular(lambda) <= 1} by bracketing and bisection;
/// `modular` must be nonincreasing in lambda.
inline double luxemburg_bisect(const std::function<double(double)>& modular, double lambda0,
                               double rel_tol = 1e-8) {
    double hi = lambda0;
    int guard = 0;
    while (modular(hi) > 1.0) {
        hi *= 2.0;
        if (++guard > 400) throw std::runtime_error("luxemburg_bisect: no upper bracket");
    }
    double lo = hi;
    guard = 0;
    while (modular(lo) <= 1.0) {
        lo *= 0.5;
        if (++guard > 400) return 0.0;  // modular stays <= 1 for all lambda
    }
    while (hi - lo > rel_tol * hi) {
        const double mid = 0.5 * (lo + hi);
        (modular(mid) <= 1.0 ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace detail

inline double orlicz_norm_from_samples(const FieldSamples& s, const OrliczFunction& phi) {
    double norm1 = 0.0, maxv = 0.0;
    for (std::size_t i = 0; i < s.value.size(); ++i) {
        norm1 += s.lebesgue_w[i] * s.value[i];
        maxv = std::max(maxv, s.value[i]);
    }
    if (maxv == 0.0) return 0.0;
    auto modular = [&](double lambda) {
        double acc = 0.0;
        for (std::size_t i = 0; i < s.value.size(); ++i) {
            if (s.value[i] == 0.0) continue;  // N-function: phi(0+) = 0
            acc += s.lebesgue_w[i] * phi.eval(s.value[i] / lambda);
            if (!(acc <= 1.0)) return acc;  // early out also catches overflow
        }
        return acc;
    };
    return detail::luxemburg_bisect(modular, norm1 + maxv);
}

/// Luxemburg norm inf{lambda : int phi(|f|/lambda) <= 1}.
inline double orlicz_norm(const PiecewiseField& f, const OrliczFunction& phi,
                          int quad_degree = 12) {
    return orlicz_norm_from_samples(sample_field(f, quad_degree), phi);
}

// --- Weighted variable exponent ----------------------------------------------

inline double varexp_norm_from_samples(const FieldSamples& s, const VariableExponent& p,
                                       const Weight& omega) {
    std::vector<double> fw(s.value.size()), pe(s.value.size());
    double maxfw = 0.0, sum1 = 0.0;
    for (std::size_t i = 0; i < s.value.size(); ++i) {
        fw[i] = s.value[i] * omega.eval(s.points[i]);
        pe[i] = p.eval(s.points[i]);
        if (pe[i] < 1.0) throw std::invalid_argument("varexp_norm: exponent below 1");
        maxfw = std::max(maxfw, fw[i]);
        sum1 += s.lebesgue_w[i] * fw[i];
    }
    if (maxfw == 0.0) return 0.0;
    auto modular = [&](double lambda) {
        double acc = 0.0;
        for (std::size_t i = 0; i < fw.size(); ++i) {
            if (fw[i] == 0.0) continue;
            acc += s.lebesgue_w[i] * std::pow(fw[i] / lambda, pe[i]);
            if (!(acc <= 1.0)) return acc;
        }
        return acc;
    };
    return detail::luxemburg_bisect(modular, sum1 + maxfw);
}

/// Weighted variable exponent Luxemburg norm:
/// inf{lambda : int |f(x) omega(x) / lambda|^{p(x)} dx <= 1}.
inline double varexp_norm(const PiecewiseField& f, const VariableExponent& p, const Weight& omega,
                          int quad_degree = 12) {
    return varexp_norm_from_samples(sample_field(f, quad_degree), p, omega);
}

// --- BMO ----------------------------------------------------------------------

/// Sampled sup of the normalized mean oscillation over balls intersected
/// with the domain: centers from a low-discrepancy sequence in Omega, radii
/// geometric. Integrals use polar quadrature clipped to Omega with the
/// measure renormalized (no zero extension here). A lower-bound estimator.
inline double bmo_seminorm(const PiecewiseField& f, int n_centers = 128, int n_radii = 12,
                           int n_theta = 64, int n_rho = 16) {
    if (n_centers < 1 || n_radii < 1) throw std::invalid_argument("bmo_seminorm: counts >= 1");
    const ConvexPolygon& poly = f.mesh().polygon();
    const Bbox bb = poly.bounding_box();
    const double diam = poly.diameter();
    std::vector<Vec2> centers;
    for (std::uint64_t i = 0; static_cast<int>(centers.size()) < n_centers && i < 1000000; ++i) {
        const Vec2 u = halton2(i);
        const Vec2 x{bb.lo.x + u.x * bb.width(), bb.lo.y + u.y * bb.height()};
        if (poly.contains(x)) centers.push_back(x);
    }
    const GaussLegendre1d& g = gauss_legendre_cached(n_rho);
    double best = 0.0;
    std::vector<double> vals, ws;
    vals.reserve(static_cast<std::size_t>(n_theta) * n_rho);
    ws.reserve(static_cast<std::size_t>(n_theta) * n_rho);
    for (const Vec2& c : centers) {
        for (int j = 0; j < n_radii; ++j) {
            const double r = diam * std::pow(2.0, -j);
            vals.clear();
            ws.clear();
            for (int a = 0; a < n_theta; ++a) {
                const double th = 2.0 * M_PI * (a + 0.5) / n_theta;
                const Vec2 d{std::cos(th), std::sin(th)};
                for (int i = 0; i < n_rho; ++i) {
                    const Vec2 x = c + (r * g.nodes[i]) * d;
                    if (!poly.contains(x)) continue;
                    vals.push_back(f.magnitude(x));
                    ws.push_back(g.weights[i] * g.nodes[i]);
                }
            }
            const double wsum = std::accumulate(ws.begin(), ws.end(), 0.0);
            if (wsum <= 0.0) continue;
            double mean = 0.0;
            for (std::size_t i = 0; i < vals.size(); ++i) mean += ws[i] * vals[i];
            mean /= wsum;
            double osc = 0.0;
            for (std::size_t i = 0; i < vals.size(); ++i) osc += ws[i] * std::abs(vals[i] - mean);
            best = std::max(best, osc / wsum);
        }
    }
    return best;
}

// --- Muckenhoupt -----------------------------------------------------------------

namespace detail {

struct CubeStats {
    double int_w = 0.0;     // integral of omega
    double int_dual = 0.0;  // integral of omega^{-1/(p-1)} (p > 1)
    double max_inv = 0.0;   // sup of 1/omega over sample points (p = 1)
};

/// Integrates over the square [c - half, c + half]^2, refining dyadically to
/// `depth` and applying a 4x4 tensor Gauss rule on each leaf. The refinement
/// depth is what lets non-integrable singularities show up as growth in the
/// estimate as max_level increases.
inline CubeStats cube_stats(const Weight& omega, double p, Vec2 c, double half, int depth) {
    if (depth > 0) {
        CubeStats s;
        const double q = half / 2.0;
        for (int sx = -1; sx <= 1; sx += 2)
            for (int sy = -1; sy <= 1; sy += 2) {
                const CubeStats cs =
                    cube_stats(omega, p, {c.x + sx * q, c.y + sy * q}, q, depth - 1);
                s.int_w += cs.int_w;
                s.int_dual += cs.int_dual;
                s.max_inv = std::max(s.max_inv, cs.max_inv);
            }
        return s;
    }
    const GaussLegendre1d& g = gauss_legendre_cached(4);
    CubeStats s;
    const double area = 4.0 * half * half;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            const Vec2 x{c.x - half + 2.0 * half * g.nodes[i],
                         c.y - half + 2.0 * half * g.nodes[j]};
            const double w = omega.eval(x);
            const double gw = g.weights[i] * g.weights[j] * area;
            s.int_w += gw * w;
            if (p > 1.0)
                s.int_dual += gw * std::pow(w, -1.0 / (p - 1.0));
            else
                s.max_inv = std::max(s.max_inv, 1.0 / w);
        }
    return s;
}

}  // namespace detail

/// Muckenhoupt A_p constant estimate: max over a dyadic hierarchy of squares
/// covering the domain's bounding box, plus squares recentered at the
/// weight's singular points (power weights attain their worst constants
/// there). Non-integrable weights show up as growth in max_level.
inline double muckenhoupt_estimate(const Weight& omega, const ConvexPolygon& domain, double p,
                                   int max_level) {
    if (p < 1.0) throw std::invalid_argument("muckenhoupt_estimate: p must be >= 1");
    if (max_level < 0) throw std::invalid_argument("muckenhoupt_estimate: max_level >= 0");
    const Bbox bb = domain.bounding_box();
    const double side = std::max(bb.width(), bb.height());
    const Vec2 center{0.5 * (bb.lo.x + bb.hi.x), 0.5 * (bb.lo.y + bb.hi.y)};
    double worst = 0.0;
    auto consider = [&](Vec2 c, double half, int depth) {
        const detail::CubeStats s = detail::cube_stats(omega, p, c, half, depth);
        const double area = 4.0 * half * half;
        const double avg_w = s.int_w / area;
        const double val = (p > 1.0)
                               ? avg_w * std::pow(s.int_dual / area, p - 1.0)
                               : avg_w * s.max_inv;
        if (!std::isfinite(val)) {
            worst = kInf;
            return;
        }
        worst = std::max(worst, val);
    };
    for (int level = 0; level <= max_level; ++level) {
        const int n = 1 << level;
        const double half = 0.5 * side / n;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const Vec2 c{center.x - 0.5 * side + (2 * i + 1) * half,
                             center.y - 0.5 * side + (2 * j + 1) * half};
                consider(c, half, max_level - level);
            }
        for (const Vec2& sp : omega.singular_points)
            consider(sp, half, max_level - level);
    }
    return worst;
}

// --- Orlicz growth checks ----------------------------------------------------

struct Nabla2Result {
    bool holds = false;
    double worst_ratio = 0.0;  // max of 2a phi(t) / phi(a t) over the grid
};

/// Checks phi(t) <= phi(a t)/(2a) on a log-spaced grid. Points where both
/// sides overflow are skipped; an overflowing phi(at) with finite phi(t)
/// counts as satisfied.
inline Nabla2Result nabla2_check(const OrliczFunction& phi, double a, double t_min = 1e-6,
                                 double t_max = 1e6, int n = 601) {
    if (a <= 1.0) throw std::invalid_argument("nabla2_check: a must be > 1");
    Nabla2Result res;
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
        const double t = t_min * std::pow(t_max / t_min, double(i) / (n - 1));
        const double lhs = 2.0 * a * phi.eval(t);
        const double rhs = phi.eval(a * t);
        if (!std::isfinite(rhs)) continue;  // rhs overflow: inequality holds there
        if (!std::isfinite(lhs)) return {false, kInf};
        worst = std::max(worst, lhs / rhs);
    }
    res.worst_ratio = worst;
    res.holds = worst <= 1.0 + 1e-12;
    return res;
}

struct SimonenkoResult {
    double lower = 0.0;  // p^- estimate (lambda = 1e-4)
    double upper = 0.0;  // p^+ estimate (lambda = 1e+4)
    bool grid_shrunk = false;
};

namespace detail {

inline double h_phi(const OrliczFunction& phi, double lambda, bool& shrunk) {
    double t_min = 1e-6, t_max = 1e6;
    for (int attempt = 0; attempt < 12; ++attempt) {
        double sup = 0.0;
        bool any_finite = false, any_overflow = false;
        const int n = 600;
        for (int i = 0; i <= n; ++i) {
            const double t = t_min * std::pow(t_max / t_min, double(i) / n);
            const double num = phi.eval(lambda * t), den = phi.eval(t);
            if (!std::isfinite(num) || !std::isfinite(den) || den == 0.0) {
                any_overflow = true;
                continue;
            }
            any_finite = true;
            sup = std::max(sup, num / den);
        }
        if (any_finite && !any_overflow) return sup;
        if (any_finite) {
            shrunk = true;
            return sup;  // partial grid; flagged
        }
        t_max /= 10.0;  // everything overflowed: shrink toward the origin
        shrunk = true;
    }
    return kInf;
}

}  // namespace detail

/// Simonenko index estimates log h(lambda)/log lambda at lambda = 1e-4, 1e4.
inline SimonenkoResult simonenko_indices(const OrliczFunction& phi) {
    SimonenkoResult r;
    bool shrunk = false;
    const double h_lo = detail::h_phi(phi, 1e-4, shrunk);
    const double h_hi = detail::h_phi(phi, 1e4, shrunk);
    r.lower = std::log(h_lo) / std::log(1e-4);
    r.upper = std::log(h_hi) / std::log(1e4);
    r.grid_shrunk = shrunk;
    return r;
}

// --- Space descriptor ----------------------------------------------------------

/// Descriptor of a target function-space norm for the stability experiments.
struct SpaceSpec {
    enum class Kind { Lp, WeightedLp, Lorentz, Orlicz, Bmo, VarExp };
    Kind kind = Kind::Lp;
    double p = 2.0;
    double q = 2.0;
    std::optional<Weight> weight;
    std::optional<OrliczFunction> phi;
    std::optional<VariableExponent> exponent;
    int bmo_centers = 128;
    int bmo_radii = 12;

    void validate() const {
        switch (kind) {
            case Kind::Lp:
                if (p < 1.0) throw std::invalid_argument("SpaceSpec: Lp needs p >= 1");
                break;
            case Kind::WeightedLp:
                if (!(p > 1.0) || std::isinf(p))
                    throw std::invalid_argument("SpaceSpec: weighted Lp needs p in (1,inf)");
                if (!weight) throw std::invalid_argument("SpaceSpec: weighted Lp needs a weight");
                break;
            case Kind::Lorentz: {
                const bool ok = (p > 1.0 && !std::isinf(p) && q > 1.0) || (p == 1.0 && std::isinf(q));
                if (!ok) throw std::invalid_argument("SpaceSpec: Lorentz (p,q) out of range");
                break;
            }
            case Kind::Orlicz:
                if (!phi) throw std::invalid_argument("SpaceSpec: Orlicz needs phi");
                break;
            case Kind::Bmo:
                if (bmo_centers < 1 || bmo_radii < 1)
                    throw std::invalid_argument("SpaceSpec: BMO sampling counts >= 1");
                break;
            case Kind::VarExp:
                if (!exponent || !weight)
                    throw std::invalid_argument("SpaceSpec: VarExp needs exponent and weight");
                break;
        }
    }

    std::string label() const {
        char buf[128];
        switch (kind) {
            case Kind::Lp:
                std::snprintf(buf, sizeof buf, "lp_p%g", p);
                return buf;
            case Kind::WeightedLp:
                std::snprintf(buf, sizeof buf, "wlp_p%g_%s", p, weight->name.c_str());
                return buf;
            case Kind::Lorentz:
                if (weight)
                    std::snprintf(buf, sizeof buf, "wlorentz_p%g_q%g_%s", p, q,
                                  weight->name.c_str());
                else
                    std::snprintf(buf, sizeof buf, "lorentz_p%g_q%g", p, q);
                return buf;
            case Kind::Orlicz:
                std::snprintf(buf, sizeof buf, "orlicz_%s", phi->name.c_str());
                return buf;
            case Kind::Bmo:
                return "bmo";
            case Kind::VarExp:
                std::snprintf(buf, sizeof buf, "varexp_%s_%s", exponent->name.c_str(),
                              weight->name.c_str());
                return buf;
        }
        return "unknown";
    }
};

/// Norm dispatcher. For integral norms the samples can be precomputed once
/// and shared across space descriptors.
inline double space_norm_from_samples(const PiecewiseField& f, const FieldSamples& s,
                                      const SpaceSpec& spec) {
    spec.validate();
    switch (spec.kind) {
        case SpaceSpec::Kind::Lp:
            return lp_norm_from_samples(s, spec.p);
        case SpaceSpec::Kind::WeightedLp:
            return lp_norm_from_samples(s, spec.p, spec.weight);
        case SpaceSpec::Kind::Lorentz:
            return lorentz_norm_from_table(DistributionTable(s, spec.weight), spec.p, spec.q);
        case SpaceSpec::Kind::Orlicz:
            return orlicz_norm_from_samples(s, *spec.phi);
        case SpaceSpec::Kind::Bmo:
            return bmo_seminorm(f, spec.bmo_centers, spec.bmo_radii);
        case SpaceSpec::Kind::VarExp:
            return varexp_norm_from_samples(s, *spec.exponent, *spec.weight);
    }
    throw std::logic_error("space_norm: unreachable");
}

inline double space_norm(const PiecewiseField& f, const SpaceSpec& spec, int quad_degree = 12) {
    return space_norm_from_samples(f, sample_field(f, quad_degree), spec);
}

}  // namespace ritzlab
