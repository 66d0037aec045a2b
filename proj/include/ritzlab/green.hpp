#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "ritzlab/field.hpp"
#include "ritzlab/maximal.hpp"
#include "ritzlab/parallel.hpp"
#include "ritzlab/ritz.hpp"
#include "ritzlab/sampling.hpp"

namespace ritzlab {

namespace detail {

/// Cholesky solve for the tiny Gram systems (n <= 6).
template <int N>
std::array<double, N> solve_small_spd(std::array<double, N * N> a, std::array<double, N> b,
                                      int n) {
    for (int j = 0; j < n; ++j) {
        double d = a[j * N + j];
        for (int k = 0; k < j; ++k) d -= a[j * N + k] * a[j * N + k];
        if (d <= 0.0) throw std::runtime_error("solve_small_spd: not positive definite");
        a[j * N + j] = std::sqrt(d);
        for (int i = j + 1; i < n; ++i) {
            double s = a[i * N + j];
            for (int k = 0; k < j; ++k) s -= a[i * N + k] * a[j * N + k];
            a[i * N + j] = s / a[j * N + j];
        }
    }
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < i; ++k) b[i] -= a[i * N + k] * b[k];
        b[i] /= a[i * N + i];
    }
    for (int i = n - 1; i >= 0; --i) {
        for (int k = i + 1; k < n; ++k) b[i] -= a[k * N + i] * b[k];
        b[i] /= a[i * N + i];
    }
    return b;
}

/// Monomial basis for P_k scaled to the element: 1, X, Y, X^2, XY, Y^2.
inline int monomial_count(int k) { return k == 1 ? 3 : 6; }

inline void eval_monomials(Vec2 xs, int n, std::array<double, 6>& m) {
    m[0] = 1.0;
    m[1] = xs.x;
    m[2] = xs.y;
    if (n > 3) {
        m[3] = xs.x * xs.x;
        m[4] = xs.x * xs.y;
        m[5] = xs.y * xs.y;
    }
}

}  // namespace detail

/// Smooth point-evaluation kernel supported in one element: the squared
/// barycentric bubble (l0 l1 l2)^2 times a P_k polynomial chosen so that
/// int_T delta_z P = P(z) for all P in P_k. The bubble vanishes with its
/// first derivatives on the element boundary.
class RegularizedDelta {
public:
    RegularizedDelta(std::shared_ptr<const Triangulation> mesh, int host, Vec2 z, int degree,
                     std::array<double, 6> coeff, int n_poly, Vec2 center, double scale)
        : mesh_(std::move(mesh)),
          host_(host),
          z_(z),
          degree_(degree),
          coeff_(coeff),
          n_poly_(n_poly),
          center_(center),
          scale_(scale) {}

    int host_element() const { return host_; }
    Vec2 point() const { return z_; }
    int degree() const { return degree_; }
    const Triangulation& mesh() const { return *mesh_; }
    const std::shared_ptr<const Triangulation>& mesh_ptr() const { return mesh_; }

    /// Zero outside the host element.
    double eval(Vec2 x) const {
        const auto b = mesh_->point_to_bary(host_, x);
        if (b[0] < 0.0 || b[1] < 0.0 || b[2] < 0.0) return 0.0;
        return eval_inside(x, b);
    }

    double eval_inside(Vec2 x, const std::array<double, 3>& bary) const {
        const double bub = bary[0] * bary[1] * bary[2];
        std::array<double, 6> m;
        detail::eval_monomials((x - center_) / scale_, n_poly_, m);
        double q = 0.0;
        for (int i = 0; i < n_poly_; ++i) q += coeff_[i] * m[i];
        return bub * bub * q;
    }

    /// Sampled sup of |delta_z| over the host element.
    double sup_estimate() const {
        const QuadratureRule& rule = QuadratureRule::for_degree(12);
        double m = 0.0;
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const Vec2 x = mesh_->bary_to_point(host_, rule.points[q]);
            m = std::max(m, std::abs(eval_inside(x, rule.points[q])));
        }
        return m;
    }

private:
    std::shared_ptr<const Triangulation> mesh_;
    int host_;
    Vec2 z_;
    int degree_;
    std::array<double, 6> coeff_;
    int n_poly_;
    Vec2 center_;
    double scale_;
};

/// Builds delta_z for a point strictly inside one element. Rejects points on
/// element boundaries; callers nudge z to an interior quadrature point.
inline RegularizedDelta build_delta(std::shared_ptr<const Triangulation> mesh, int degree,
                                    Vec2 z) {
    if (degree != 1 && degree != 2) throw std::invalid_argument("build_delta: degree in {1,2}");
    const auto loc = mesh->locate(z);
    if (!loc) throw std::invalid_argument("build_delta: z outside the domain");
    const double min_bary = std::min({loc->bary[0], loc->bary[1], loc->bary[2]});
    if (min_bary < 1e-9)
        throw std::invalid_argument("build_delta: z on an element boundary; nudge it inside");
    const int t = loc->triangle;
    const Vec2 center = mesh->tri_centroid(t);
    const double scale = mesh->tri_diameter(t);
    const int n = detail::monomial_count(degree);

    // Gram matrix int_T bubble^2 m_i m_j, exact quadrature (degree 6 + 2k).
    const QuadratureRule& rule = QuadratureRule::for_degree(6 + 2 * degree);
    const double area = mesh->tri_area(t);
    std::array<double, 36> gram{};
    std::array<double, 6> rhs{};
    for (std::size_t q = 0; q < rule.size(); ++q) {
        const auto& b = rule.points[q];
        const double bub = b[0] * b[1] * b[2];
        const Vec2 x = mesh->bary_to_point(t, b);
        std::array<double, 6> m;
        detail::eval_monomials((x - center) / scale, n, m);
        const double w = rule.weights[q] * area * bub * bub;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) gram[i * 6 + j] += w * m[i] * m[j];
    }
    detail::eval_monomials((z - center) / scale, n, rhs);
    const auto coeff = detail::solve_small_spd<6>(gram, rhs, n);
    return RegularizedDelta(std::move(mesh), t, z, degree, coeff, n, center, scale);
}

/// Largest moment defect max_{P in monomial basis} |int_T delta_z P - P(z)|,
/// computed with an independent higher-degree rule.
inline double delta_moment_residual(const RegularizedDelta& delta) {
    const int n = detail::monomial_count(delta.degree());
    const int t = delta.host_element();
    const Triangulation& mesh = delta.mesh();
    const Vec2 center = mesh.tri_centroid(t);
    const double scale = mesh.tri_diameter(t);
    const QuadratureRule& rule = QuadratureRule::for_degree(8 + 2 * delta.degree());
    const double area = mesh.tri_area(t);
    std::array<double, 6> moments{};
    for (std::size_t q = 0; q < rule.size(); ++q) {
        const Vec2 x = mesh.bary_to_point(t, rule.points[q]);
        const double dv = delta.eval_inside(x, rule.points[q]);
        std::array<double, 6> m;
        detail::eval_monomials((x - center) / scale, n, m);
        for (int i = 0; i < n; ++i) moments[i] += rule.weights[q] * area * dv * m[i];
    }
    std::array<double, 6> target;
    detail::eval_monomials((delta.point() - center) / scale, n, target);
    double worst = 0.0;
    for (int i = 0; i < n; ++i) worst = std::max(worst, std::abs(moments[i] - target[i]));
    return worst;
}

namespace detail {

/// RHS (delta_z, d_l phi_i) over the interior DOFs of a space whose mesh is a
/// nested refinement of the delta's mesh (offset levels; children of t are
/// 4t..4t+3, so descendants are contiguous blocks).
inline std::vector<double> green_rhs(const FeSpace& space, const RegularizedDelta& delta,
                                     int component) {
    const int offset = space.mesh().level() - delta.mesh().level();
    if (offset < 0 || space.mesh().n_triangles() != (delta.mesh().n_triangles() << (2 * offset)))
        throw std::invalid_argument("green_rhs: space mesh is not a nested refinement");
    if (component != 1 && component != 2)
        throw std::invalid_argument("green_rhs: component must be 1 or 2");
    const int k = space.degree();
    const QuadratureRule& rule = QuadratureRule::for_degree(2 * k + 5 + 1);
    const int nloc = local_dof_count(k);
    std::vector<double> rhs(space.n_interior(), 0.0);
    const int first = delta.host_element() << (2 * offset);
    const int count = 1 << (2 * offset);
    for (int e = first; e < first + count; ++e) {
        const double area = space.mesh().tri_area(e);
        const auto& dofs = space.element_dofs(e);
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const Vec2 x = space.mesh().bary_to_point(e, rule.points[q]);
            const double dv = delta.eval(x);
            if (dv == 0.0) continue;
            const BasisEval b = eval_basis(k, rule.points[q]);
            for (int i = 0; i < nloc; ++i) {
                const int gi = space.interior_index(dofs[i]);
                if (gi < 0) continue;
                const Vec2 gphi = space.physical_gradient(e, b.ref_grad[i]);
                rhs[gi] += rule.weights[q] * area * dv * (component == 1 ? gphi.x : gphi.y);
            }
        }
    }
    return rhs;
}

}  // namespace detail

/// Regularized Green's function: Galerkin solution of
/// (grad g_z, grad v) = (delta_z, d_l v) on the fine space.
inline FeFunction solve_regularized_green(std::shared_ptr<const FeSpace> fine_space,
                                          const RegularizedDelta& delta, int component,
                                          double rel_tol = 1e-10) {
    const SparseSpdMatrix A = assemble_stiffness(*fine_space);
    const std::vector<double> b = detail::green_rhs(*fine_space, delta, component);
    const CgResult sol = solve_spd(A, b, rel_tol);
    return fe_from_interior(std::move(fine_space), sol.x);
}

// --- The weight family phi ----------------------------------------------------

/// Radially decreasing weight c1 eps^gamma (|x-z|^2 + K^2 eps^2)^{-(2+gamma)/2},
/// normalized to unit mass over the domain (the normalization the proof
/// actually consumes). alpha is carried along as the configured Hoelder
/// exponent of the domain.
struct PhiWeight {
    double epsilon = 0.0;
    Vec2 z{0, 0};
    double K = 4.0;
    double gamma = 0.25;
    double alpha = 0.5;
    double c1 = 1.0;

    double unnormalized(Vec2 x) const {
        const double r2 = norm_sq(x - z);
        return std::pow(epsilon, gamma) *
               std::pow(r2 + K * K * epsilon * epsilon, -(2.0 + gamma) / 2.0);
    }
};

inline double phi_eval(const PhiWeight& w, Vec2 x) { return w.c1 * w.unnormalized(x); }

namespace detail {

/// Integrates fn over the mesh with recursive triangle subdivision near z so
/// peaks of width `scale` around z are resolved regardless of the mesh size.
inline double integrate_refined_near(const Triangulation& mesh,
                                     const std::function<double(Vec2)>& fn, Vec2 z, double scale,
                                     int base_degree = 8) {
    const QuadratureRule& rule = QuadratureRule::for_degree(base_degree);
    std::function<double(const std::array<Vec2, 3>&, int)> go =
        [&](const std::array<Vec2, 3>& tri, int depth) -> double {
        const double diam =
            std::max({dist(tri[0], tri[1]), dist(tri[1], tri[2]), dist(tri[2], tri[0])});
        double dmin = std::numeric_limits<double>::infinity();
        // distance from z to the triangle (0 if inside)
        const double a2 = cross(tri[1] - tri[0], tri[2] - tri[0]);
        const double l0 = cross(tri[1] - z, tri[2] - z) / a2;
        const double l1 = cross(tri[2] - z, tri[0] - z) / a2;
        const double l2 = cross(tri[0] - z, tri[1] - z) / a2;
        if (l0 >= 0 && l1 >= 0 && l2 >= 0) {
            dmin = 0.0;
        } else {
            for (int i = 0; i < 3; ++i) {
                const Vec2 a = tri[i], b = tri[(i + 1) % 3];
                const Vec2 e = b - a;
                const double s = std::clamp(dot(z - a, e) / norm_sq(e), 0.0, 1.0);
                dmin = std::min(dmin, dist(z, a + s * e));
            }
        }
        const bool refine = depth < 14 && diam > 0.5 * scale && dmin < 4.0 * scale + diam;
        if (refine) {
            const Vec2 m01 = 0.5 * (tri[0] + tri[1]);
            const Vec2 m12 = 0.5 * (tri[1] + tri[2]);
            const Vec2 m20 = 0.5 * (tri[2] + tri[0]);
            return go({tri[0], m01, m20}, depth + 1) + go({m01, tri[1], m12}, depth + 1) +
                   go({m20, m12, tri[2]}, depth + 1) + go({m01, m12, m20}, depth + 1);
        }
        const double area = 0.5 * std::abs(a2);
        double s = 0.0;
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const auto& b = rule.points[q];
            s += rule.weights[q] * fn(b[0] * tri[0] + b[1] * tri[1] + b[2] * tri[2]);
        }
        return s * area;
    };
    double total = 0.0;
    for (int t = 0; t < mesh.n_triangles(); ++t) total += go(mesh.tri_vertices(t), 0);
    return total;
}

}  // namespace detail

inline PhiWeight make_phi_weight(const Triangulation& mesh, Vec2 z, double epsilon, double K,
                                 double gamma, double alpha = 0.5) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("make_phi_weight: epsilon > 0");
    if (!(K > 2.0)) throw std::invalid_argument("make_phi_weight: K > 2 required");
    if (!(gamma > 0.0 && gamma < alpha))
        throw std::invalid_argument("make_phi_weight: gamma in (0, alpha) required");
    PhiWeight w;
    w.epsilon = epsilon;
    w.z = z;
    w.K = K;
    w.gamma = gamma;
    w.alpha = alpha;
    const double mass = detail::integrate_refined_near(
        mesh, [&](Vec2 x) { return w.unnormalized(x); }, z, K * epsilon);
    w.c1 = 1.0 / mass;
    return w;
}

// --- Dyadic annuli --------------------------------------------------------------

/// Shells A_j between radii d_{j-1} and d_j = 2^j K h around z, with the
/// enlarged variants used by the distance estimates.
struct AnnulusDecomposition {
    Vec2 z{0, 0};
    double h = 0.0;
    double K = 4.0;
    int j_max = 0;  // annuli with j > j_max have empty intersection with Omega

    AnnulusDecomposition(Vec2 z_, double h_, double K_, const ConvexPolygon& domain)
        : z(z_), h(h_), K(K_) {
        double far = 0.0;
        for (const Vec2& v : domain.vertices()) far = std::max(far, dist(v, z));
        j_max = 0;
        while (d(j_max) < far) ++j_max;
    }

    double d(int j) const { return j < 0 ? 0.0 : std::ldexp(K * h, j); }

    bool in_ball(int j, Vec2 x) const { return j >= 0 && dist(x, z) < d(j); }
    bool in_annulus(int j, Vec2 x) const { return in_ball(j, x) && !in_ball(j - 1, x); }
    bool in_annulus_plus(int j, Vec2 x) const { return in_ball(j + 1, x) && !in_ball(j - 2, x); }
    bool in_annulus_pp(int j, Vec2 x) const { return in_ball(j + 2, x) && !in_ball(j - 3, x); }
};

// --- Hoelder seminorm estimate ----------------------------------------------------

/// Sampled lower bound of sup |f(x)-f(y)| / |x-y|^alpha over a region
/// (component-wise for vector fields). Base points come from a Halton sweep
/// over the domain box; candidate pairs mix random pairs with extreme-value
/// pairings per component, which picks up quotients anchored at sharp
/// features.
inline double holder_estimate(const PiecewiseField& f, const std::function<bool(Vec2)>& region,
                              double alpha, int n_pairs, std::uint64_t seed = 12345) {
    if (!(alpha > 0.0 && alpha <= 1.0))
        throw std::invalid_argument("holder_estimate: alpha in (0,1]");
    const Bbox bb = f.mesh().polygon().bounding_box();
    const std::size_t m_target = std::min<std::size_t>(4u * std::max(n_pairs, 1), 20000);
    std::vector<Vec2> pts;
    pts.reserve(m_target);
    for (std::uint64_t i = 0; pts.size() < m_target && i < 2000000; ++i) {
        const Vec2 u = halton2(i);
        const Vec2 x{bb.lo.x + u.x * bb.width(), bb.lo.y + u.y * bb.height()};
        if (region(x)) pts.push_back(x);
    }
    if (pts.size() < 2) throw std::runtime_error("holder_estimate: region has fewer than 2 points");
    const std::size_t m = pts.size();
    const int nc = f.components();
    std::vector<double> fx(m), fy(m);
    for (std::size_t i = 0; i < m; ++i) {
        const Vec2 v = f.vec(pts[i]);
        fx[i] = v.x;
        fy[i] = v.y;
    }
    auto quotient = [&](std::size_t a, std::size_t b) {
        const double d = dist(pts[a], pts[b]);
        if (d == 0.0) return 0.0;
        double num = std::abs(fx[a] - fx[b]);
        if (nc == 2) num = std::max(num, std::abs(fy[a] - fy[b]));
        return num / std::pow(d, alpha);
    };
    double best = 0.0;
    Rng rng(seed);
    for (int i = 0; i < n_pairs; ++i)
        best = std::max(best, quotient(rng.uniform_int(static_cast<int>(m)),
                                       rng.uniform_int(static_cast<int>(m))));
    auto extreme_pairs = [&](const std::vector<double>& vals) {
        std::vector<std::size_t> order(m);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
        const std::size_t n_ext = std::min<std::size_t>(64, m / 2);
        for (std::size_t i = 0; i < n_ext; ++i)
            best = std::max(best, quotient(order[i], order[m - 1 - i]));
    };
    extreme_pairs(fx);
    if (nc == 2) extreme_pairs(fy);
    return best;
}

/// Per-annulus table of normalized Hoelder estimates of a (gradient) field:
/// the sampled seminorm on A_j^{++} times d_j^{2+alpha}. Rows with j >= 3 are
/// the ones the distance lemma covers. Empty annuli are omitted.
struct AnnulusRow {
    int j = 0;
    double d_j = 0.0;
    double holder = 0.0;
    double normalized = 0.0;
    bool lemma_applies = false;
};

inline std::vector<AnnulusRow> annuli_diagnostics(const AnnulusDecomposition& decomp,
                                                  const PiecewiseField& grad_field, double alpha,
                                                  int n_pairs = 2000) {
    const ConvexPolygon& poly = grad_field.mesh().polygon();
    std::vector<AnnulusRow> rows;
    for (int j = 0; j <= decomp.j_max; ++j) {
        auto region = [&, j](Vec2 x) { return poly.contains(x) && decomp.in_annulus_pp(j, x); };
        double est = 0.0;
        try {
            est = holder_estimate(grad_field, region, alpha, n_pairs);
        } catch (const std::runtime_error&) {
            continue;  // empty annulus
        }
        AnnulusRow r;
        r.j = j;
        r.d_j = decomp.d(j);
        r.holder = est;
        r.normalized = est * std::pow(r.d_j, 2.0 + alpha);
        r.lemma_applies = j >= 3;
        rows.push_back(r);
    }
    return rows;
}

// --- Convolution estimate probe ----------------------------------------------------

struct ConvolutionCheck {
    double weighted_l1 = 0.0;  // int_Omega phi_{eps,z} |f|
    double maximal = 0.0;      // M[f](z)
    double ratio = 0.0;
};

inline ConvolutionCheck convolution_check(const PiecewiseField& f, const PhiWeight& w, Vec2 z) {
    ConvolutionCheck out;
    out.weighted_l1 = detail::integrate_refined_near(
        f.mesh(), [&](Vec2 x) { return phi_eval(w, x) * f.magnitude(x); }, z,
        w.K * w.epsilon, 12);
    out.maximal = maximal_value(f, z);
    if (out.maximal == 0.0) {
        if (out.weighted_l1 > 1e-14)
            throw std::runtime_error("convolution_check: zero maximal with nonzero integral");
        out.ratio = 0.0;
        return out;
    }
    out.ratio = out.weighted_l1 / out.maximal;
    return out;
}

// --- The uniform-boundedness quantity G_h ------------------------------------------

/// Element-anchored sample point (element index plus barycentric position).
struct SamplePoint {
    int element = -1;
    std::array<double, 3> bary{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
    Vec2 pos{0, 0};
};

/// One interior (degree-6 rule) point per element, elements subsampled
/// deterministically to at most `cap`.
inline std::vector<SamplePoint> element_interior_samples(const Triangulation& mesh, int cap,
                                                         int point_index = 0) {
    const QuadratureRule& rule = QuadratureRule::for_degree(6);
    const auto& b = rule.points[point_index % rule.size()];
    const int nt = mesh.n_triangles();
    const int n = std::min(cap, nt);
    std::vector<SamplePoint> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i) {
        const int t = static_cast<int>((static_cast<long>(i) * nt) / n);
        out.push_back({t, b, mesh.bary_to_point(t, b)});
    }
    return out;
}

inline std::vector<SamplePoint> barycenter_samples(const Triangulation& mesh) {
    std::vector<SamplePoint> out;
    out.reserve(mesh.n_triangles());
    const std::array<double, 3> c{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
    for (int t = 0; t < mesh.n_triangles(); ++t) out.push_back({t, c, mesh.tri_centroid(t)});
    return out;
}

/// (grad g, grad phi_j) for all interior working DOFs, exact per fine element.
inline std::vector<double> project_rhs(const FeSpace& working, const FeFunction& fine_fn) {
    const int offset = fine_fn.space().mesh().level() - working.mesh().level();
    const int shift = 2 * offset;
    const int k = working.degree();
    const QuadratureRule& rule = QuadratureRule::for_degree(std::max(
        0, working.degree() + fine_fn.space().degree() - 2));
    const int nloc = local_dof_count(k);
    std::vector<double> rhs(working.n_interior(), 0.0);
    const Triangulation& fm = fine_fn.space().mesh();
    for (int e = 0; e < fm.n_triangles(); ++e) {
        const int parent = e >> shift;
        const double area = fm.tri_area(e);
        const auto& dofs = working.element_dofs(parent);
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const Vec2 x = fm.bary_to_point(e, rule.points[q]);
            const Vec2 g = fine_fn.eval_on_element(e, rule.points[q]).gradient;
            const auto wb = working.mesh().point_to_bary(parent, x);
            const BasisEval be = eval_basis(k, wb);
            for (int i = 0; i < nloc; ++i) {
                const int gi = working.interior_index(dofs[i]);
                if (gi < 0) continue;
                const Vec2 gphi = working.physical_gradient(parent, be.ref_grad[i]);
                rhs[gi] += rule.weights[q] * area * dot(g, gphi);
            }
        }
    }
    return rhs;
}

/// Ritz projection of a fine-space function onto a nested working space; the
/// right-hand side integrates fine-mesh polynomials against working-mesh
/// basis gradients exactly through the nesting. With zero offset the
/// projection is the identity and the input is returned as-is.
inline FeFunction project_to_working(std::shared_ptr<const FeSpace> working,
                                     const FeFunction& fine_fn, double rel_tol = 1e-10) {
    const int offset = fine_fn.space().mesh().level() - working->mesh().level();
    if (offset == 0) return FeFunction(fine_fn.space_ptr(), fine_fn.coefficients());
    if (offset < 0 ||
        fine_fn.space().mesh().n_triangles() != (working->mesh().n_triangles() << (2 * offset)))
        throw std::invalid_argument("project_to_working: spaces are not nested");
    const SparseSpdMatrix A = assemble_stiffness(*working);
    const std::vector<double> b = project_rhs(*working, fine_fn);
    const CgResult sol = solve_spd(A, b, rel_tol);
    return fe_from_interior(std::move(working), sol.x);
}


struct GhResult {
    double value = 0.0;           // the sampled sup defining G_h
    double grad_sup_h2 = 0.0;     // max_z ||grad g_z||_inf * h^2 (scaling probe)
    int n_z = 0;
};

/// Sampled sup over z and x of |grad(R_h g_z - g_z)(x)| / phi_{h,z}(x) with
/// eps = h (the working mesh size). g_z is the fine-space solution and serves
/// as reference truth; R_h g_z is its exact projection onto the working space.
inline GhResult compute_Gh(std::shared_ptr<const FeSpace> working,
                           std::shared_ptr<const FeSpace> fine, double K, double gamma,
                           const std::vector<SamplePoint>& sample_zs,
                           const std::vector<SamplePoint>& sample_xs, int component,
                           double rel_tol = 1e-10, double alpha = 0.5) {
    const int offset = fine->mesh().level() - working->mesh().level();
    if (offset < 0 || fine->mesh().n_triangles() != (working->mesh().n_triangles() << (2 * offset)))
        throw std::invalid_argument("compute_Gh: spaces are not nested");
    const double h = working->mesh().mesh_size_h();
    const SparseSpdMatrix A_fine = assemble_stiffness(*fine);
    const SparseSpdMatrix A_work =
        offset > 0 ? assemble_stiffness(*working) : SparseSpdMatrix();
    const int shift = 2 * offset;

    std::vector<double> per_z(sample_zs.size(), 0.0), per_z_grad(sample_zs.size(), 0.0);
    parallel_for(sample_zs.size(), [&](std::size_t zi) {
        const Vec2 z = sample_zs[zi].pos;
        const RegularizedDelta delta = build_delta(working->mesh_ptr(), working->degree(), z);
        const std::vector<double> b = detail::green_rhs(*fine, delta, component);
        const CgResult sol = solve_spd(A_fine, b, rel_tol);
        const FeFunction g = fe_from_interior(fine, sol.x);
        FeFunction Rg = [&] {
            if (offset == 0) return FeFunction(g.space_ptr(), g.coefficients());
            const std::vector<double> pb = project_rhs(*working, g);
            const CgResult psol = solve_spd(A_work, pb, rel_tol);
            return fe_from_interior(working, psol.x);
        }();
        const PhiWeight phi = make_phi_weight(working->mesh(), z, h, K, gamma, alpha);
        double worst = 0.0, gsup = 0.0;
        for (const SamplePoint& sp : sample_xs) {
            const Vec2 gg = g.eval_on_element(sp.element, sp.bary).gradient;
            gsup = std::max(gsup, norm(gg));
            Vec2 rgg;
            if (offset == 0) {
                rgg = gg;
            } else {
                const int parent = sp.element >> shift;
                rgg = Rg.eval_on_element(parent, working->mesh().point_to_bary(parent, sp.pos))
                          .gradient;
            }
            worst = std::max(worst, norm(rgg - gg) / phi_eval(phi, sp.pos));
        }
        per_z[zi] = worst;
        per_z_grad[zi] = gsup * h * h;
    });
    GhResult res;
    res.n_z = static_cast<int>(sample_zs.size());
    for (double v : per_z) res.value = std::max(res.value, v);
    for (double v : per_z_grad) res.grad_sup_h2 = std::max(res.grad_sup_h2, v);
    return res;
}

// --- Local error estimate probe ------------------------------------------------------

struct LocalErrorReport {
    double lhs = 0.0;         // |grad(w - R_h w)(z)|
    double grad_inf = 0.0;    // ||grad(w - w_h)||_inf(D)
    double val_inf = 0.0;     // d^{-1} ||w - w_h||_inf(D)
    double l2 = 0.0;          // d^{-2} ||w - R_h w||_L2(D)
    double rhs = 0.0;
    double ratio = 0.0;
};

/// Evaluates both sides of the local pointwise error estimate on
/// D = Omega intersect B_d(z), with w_h the nodal interpolant. Sup norms are
/// sampled at degree-12 quadrature points restricted to D.
inline LocalErrorReport local_error_check(const FeFunction& Rhw, const FeFunction& Ihw,
                                          const std::function<double(Vec2)>& w,
                                          const std::function<Vec2(Vec2)>& grad_w, Vec2 z,
                                          double d) {
    const Triangulation& mesh = Rhw.space().mesh();
    LocalErrorReport rep;
    {
        const auto loc = mesh.locate(z);
        if (!loc) throw std::invalid_argument("local_error_check: z outside the domain");
        rep.lhs = norm(grad_w(z) - Rhw.eval_on_element(loc->triangle, loc->bary).gradient);
    }
    const QuadratureRule& rule = QuadratureRule::for_degree(12);
    double g_inf = 0.0, v_inf = 0.0, l2 = 0.0;
    for (int t : mesh.elements_meeting_radial_set(z, 0.0, d)) {
        const double area = mesh.tri_area(t);
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const Vec2 x = mesh.bary_to_point(t, rule.points[q]);
            if (dist(x, z) >= d) continue;
            const FeEval ih = Ihw.eval_on_element(t, rule.points[q]);
            const FeEval rh = Rhw.eval_on_element(t, rule.points[q]);
            g_inf = std::max(g_inf, norm(grad_w(x) - ih.gradient));
            v_inf = std::max(v_inf, std::abs(w(x) - ih.value));
            const double diff = w(x) - rh.value;
            l2 += rule.weights[q] * area * diff * diff;
        }
    }
    rep.grad_inf = g_inf;
    rep.val_inf = v_inf / d;
    rep.l2 = std::sqrt(l2) / (d * d);
    rep.rhs = rep.grad_inf + rep.val_inf + rep.l2;
    rep.ratio = rep.rhs > 0.0 ? rep.lhs / rep.rhs
                             : (rep.lhs > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    return rep;
}

}  // namespace ritzlab
