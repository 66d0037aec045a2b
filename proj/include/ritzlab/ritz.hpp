#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <stdexcept>
#include <vector>

#include "ritzlab/fe_space.hpp"
#include "ritzlab/parallel.hpp"
#include "ritzlab/quadrature.hpp"
#include "ritzlab/sparse.hpp"

namespace ritzlab {

namespace detail {

/// Element stiffness contributions, exact for the piecewise polynomial
/// gradients (degree 2k-2 integrands).
template <typename Emit>
void element_stiffness(const FeSpace& space, int t, Emit&& emit) {
    const int k = space.degree();
    const QuadratureRule& rule = QuadratureRule::for_degree(std::max(0, 2 * k - 2));
    const double area = space.mesh().tri_area(t);
    const int nloc = local_dof_count(k);
    std::array<Vec2, 6> grad;
    std::array<std::array<double, 6>, 6> local{};
    for (std::size_t q = 0; q < rule.size(); ++q) {
        const BasisEval b = eval_basis(k, rule.points[q]);
        for (int i = 0; i < nloc; ++i) grad[i] = space.physical_gradient(t, b.ref_grad[i]);
        for (int i = 0; i < nloc; ++i)
            for (int j = 0; j < nloc; ++j)
                local[i][j] += rule.weights[q] * area * dot(grad[i], grad[j]);
    }
    for (int i = 0; i < nloc; ++i)
        for (int j = 0; j < nloc; ++j) emit(i, j, local[i][j]);
}

}  // namespace detail

/// Stiffness matrix over all DOFs (no boundary elimination).
inline SparseSpdMatrix assemble_stiffness_full(const FeSpace& space) {
    const int nloc = local_dof_count(space.degree());
    const std::size_t per_elem = static_cast<std::size_t>(nloc) * nloc;
    std::vector<Triplet> triplets(per_elem * space.mesh().n_triangles());
    parallel_for(space.mesh().n_triangles(), [&](std::size_t t) {
        std::size_t slot = per_elem * t;
        const auto& dofs = space.element_dofs(static_cast<int>(t));
        detail::element_stiffness(space, static_cast<int>(t), [&](int i, int j, double v) {
            triplets[slot++] = {dofs[i], dofs[j], v};
        });
    });
    return SparseSpdMatrix::from_triplets(space.n_dofs(), std::move(triplets));
}

/// Stiffness matrix restricted to interior DOFs (boundary rows/columns
/// eliminated), which keeps the system symmetric positive definite.
inline SparseSpdMatrix assemble_stiffness(const FeSpace& space) {
    const int nloc = local_dof_count(space.degree());
    const std::size_t per_elem = static_cast<std::size_t>(nloc) * nloc;
    std::vector<Triplet> triplets(per_elem * space.mesh().n_triangles(), Triplet{0, 0, 0.0});
    parallel_for(space.mesh().n_triangles(), [&](std::size_t t) {
        std::size_t slot = per_elem * t;
        const auto& dofs = space.element_dofs(static_cast<int>(t));
        detail::element_stiffness(space, static_cast<int>(t), [&](int i, int j, double v) {
            const int gi = space.interior_index(dofs[i]);
            const int gj = space.interior_index(dofs[j]);
            if (gi >= 0 && gj >= 0) triplets[slot] = {gi, gj, v};
            ++slot;
        });
    });
    return SparseSpdMatrix::from_triplets(space.n_interior(), std::move(triplets));
}

/// Right-hand side (grad u, grad phi_i) over interior DOFs via per-element
/// quadrature of the requested degree.
inline std::vector<double> assemble_rhs_gradform(const FeSpace& space,
                                                 const std::function<Vec2(Vec2)>& grad_u,
                                                 int quad_degree = 6) {
    const int k = space.degree();
    if (quad_degree < 2 * k - 2)
        throw std::invalid_argument("assemble_rhs_gradform: quadrature degree below 2k-2");
    const QuadratureRule& rule = QuadratureRule::for_degree(quad_degree);
    const int nloc = local_dof_count(k);
    const int nt = space.mesh().n_triangles();
    std::vector<double> contrib(static_cast<std::size_t>(nloc) * nt, 0.0);
    parallel_for(nt, [&](std::size_t t) {
        const double area = space.mesh().tri_area(static_cast<int>(t));
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const Vec2 x = space.mesh().bary_to_point(static_cast<int>(t), rule.points[q]);
            const Vec2 g = grad_u(x);
            const BasisEval b = eval_basis(k, rule.points[q]);
            for (int i = 0; i < nloc; ++i) {
                const Vec2 gphi = space.physical_gradient(static_cast<int>(t), b.ref_grad[i]);
                contrib[t * nloc + i] += rule.weights[q] * area * dot(g, gphi);
            }
        }
    });
    std::vector<double> rhs(space.n_interior(), 0.0);
    for (int t = 0; t < nt; ++t) {
        const auto& dofs = space.element_dofs(t);
        for (int i = 0; i < nloc; ++i) {
            const int gi = space.interior_index(dofs[i]);
            if (gi >= 0) rhs[gi] += contrib[static_cast<std::size_t>(t) * nloc + i];
        }
    }
    return rhs;
}

/// Expands an interior-DOF vector to a full coefficient vector (zero trace).
inline FeFunction fe_from_interior(std::shared_ptr<const FeSpace> space,
                                   const std::vector<double>& interior) {
    std::vector<double> c(space->n_dofs(), 0.0);
    for (int i = 0; i < space->n_dofs(); ++i) {
        const int gi = space->interior_index(i);
        if (gi >= 0) c[i] = interior[gi];
    }
    return FeFunction(std::move(space), std::move(c));
}

/// Ritz projection: the Galerkin solution of (grad R_h u, grad phi) =
/// (grad u, grad phi) over the zero-trace subspace.
inline FeFunction ritz_project(std::shared_ptr<const FeSpace> space, const AnalyticFunction& u,
                               double rel_tol = 1e-10, int quad_degree = 6) {
    if (!u.vanishes_on_boundary)
        throw std::invalid_argument("ritz_project: function must vanish on the boundary");
    const SparseSpdMatrix A = assemble_stiffness(*space);
    const std::vector<double> b = assemble_rhs_gradform(*space, u.gradient, quad_degree);
    const CgResult sol = solve_spd(A, b, rel_tol);
    return fe_from_interior(std::move(space), sol.x);
}

/// Exact integral of |grad v_h|^2 for a finite element function.
inline double grad_l2_norm_sq(const FeFunction& f) {
    const FeSpace& space = f.space();
    const int k = space.degree();
    const QuadratureRule& rule = QuadratureRule::for_degree(std::max(0, 2 * k - 2));
    double s = 0.0;
    for (int t = 0; t < space.mesh().n_triangles(); ++t) {
        const double area = space.mesh().tri_area(t);
        for (std::size_t q = 0; q < rule.size(); ++q)
            s += rule.weights[q] * area * norm_sq(f.eval_on_element(t, rule.points[q]).gradient);
    }
    return s;
}

/// Quadrature integral of |grad u|^2 for a closed-form gradient.
inline double grad_l2_norm_sq_analytic(const Triangulation& mesh,
                                       const std::function<Vec2(Vec2)>& grad_u,
                                       int quad_degree = 12) {
    const QuadratureRule& rule = QuadratureRule::for_degree(quad_degree);
    double s = 0.0;
    for (int t = 0; t < mesh.n_triangles(); ++t) {
        const double area = mesh.tri_area(t);
        for (std::size_t q = 0; q < rule.size(); ++q)
            s += rule.weights[q] * area * norm_sq(grad_u(mesh.bary_to_point(t, rule.points[q])));
    }
    return s;
}

/// Quadrature integral of |grad u - grad f|^2 (energy error).
inline double grad_l2_error_sq(const FeFunction& f, const std::function<Vec2(Vec2)>& grad_u,
                               int quad_degree = 12) {
    const FeSpace& space = f.space();
    const QuadratureRule& rule = QuadratureRule::for_degree(quad_degree);
    double s = 0.0;
    for (int t = 0; t < space.mesh().n_triangles(); ++t) {
        const double area = space.mesh().tri_area(t);
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const Vec2 x = space.mesh().bary_to_point(t, rule.points[q]);
            const Vec2 d = grad_u(x) - f.eval_on_element(t, rule.points[q]).gradient;
            s += rule.weights[q] * area * norm_sq(d);
        }
    }
    return s;
}

}  // namespace ritzlab
