#pragma once

#include <functional>
#include <memory>
#include <stdexcept>
#include <utility>
#include <vector>

#include "ritzlab/fe_space.hpp"
#include "ritzlab/mesh.hpp"

namespace ritzlab {

/// Element-wise polynomial (or closed-form) field over the domain, extended
/// by zero to the rest of the plane. Vector fields use the Euclidean norm as
/// pointwise magnitude. Carries the triangulation used for per-element
/// quadrature of integrals against the field.
class PiecewiseField {
public:
    int components() const { return components_; }
    const Triangulation& mesh() const { return *mesh_; }
    const std::shared_ptr<const Triangulation>& mesh_ptr() const { return mesh_; }

    /// Value for vector fields (scalar fields report (f, 0)).
    Vec2 vec(Vec2 x) const { return vec_(x); }

    double magnitude(Vec2 x) const {
        const Vec2 v = vec_(x);
        return components_ == 1 ? std::abs(v.x) : norm(v);
    }

    /// Gradient field of a finite element function.
    static PiecewiseField fe_gradient(std::shared_ptr<const FeFunction> f) {
        PiecewiseField p;
        p.components_ = 2;
        p.mesh_ = f->space().mesh_ptr();
        p.vec_ = [f](Vec2 x) { return f->eval(x).gradient; };
        return p;
    }

    /// Gradient field of a closed-form function, restricted to the domain of
    /// the given mesh and zero outside it.
    static PiecewiseField analytic_gradient(const AnalyticFunction& u,
                                            std::shared_ptr<const Triangulation> mesh) {
        PiecewiseField p;
        p.components_ = 2;
        p.mesh_ = std::move(mesh);
        const ConvexPolygon poly = p.mesh_->polygon();
        auto grad = u.gradient;
        p.vec_ = [poly, grad](Vec2 x) { return poly.contains(x) ? grad(x) : Vec2{0, 0}; };
        return p;
    }

    /// Scalar field from a closed form, zero outside the domain.
    static PiecewiseField scalar(std::function<double(Vec2)> f,
                                 std::shared_ptr<const Triangulation> mesh) {
        PiecewiseField p;
        p.components_ = 1;
        p.mesh_ = std::move(mesh);
        const ConvexPolygon poly = p.mesh_->polygon();
        p.vec_ = [poly, f = std::move(f)](Vec2 x) { return Vec2{poly.contains(x) ? f(x) : 0.0, 0.0}; };
        return p;
    }

    /// Piecewise constant scalar field given by one value per element.
    static PiecewiseField element_table(std::shared_ptr<const Triangulation> mesh,
                                        std::vector<double> per_element) {
        if (static_cast<int>(per_element.size()) != mesh->n_triangles())
            throw std::invalid_argument("PiecewiseField::element_table: size mismatch");
        PiecewiseField p;
        p.components_ = 1;
        p.mesh_ = mesh;
        p.vec_ = [mesh, vals = std::move(per_element)](Vec2 x) {
            const auto loc = mesh->locate(x);
            return Vec2{loc ? vals[loc->triangle] : 0.0, 0.0};
        };
        return p;
    }

    /// Indicator function of the domain.
    static PiecewiseField domain_indicator(std::shared_ptr<const Triangulation> mesh) {
        return scalar([](Vec2) { return 1.0; }, std::move(mesh));
    }

    friend PiecewiseField add(const PiecewiseField& a, const PiecewiseField& b) {
        if (a.components_ != b.components_)
            throw std::invalid_argument("PiecewiseField add: component mismatch");
        PiecewiseField p;
        p.components_ = a.components_;
        p.mesh_ = a.mesh_;
        auto fa = a.vec_, fb = b.vec_;
        p.vec_ = [fa, fb](Vec2 x) { return fa(x) + fb(x); };
        return p;
    }

    friend PiecewiseField scale(const PiecewiseField& a, double c) {
        PiecewiseField p;
        p.components_ = a.components_;
        p.mesh_ = a.mesh_;
        auto fa = a.vec_;
        p.vec_ = [fa, c](Vec2 x) { return c * fa(x); };
        return p;
    }

private:
    PiecewiseField() = default;
    int components_ = 1;
    std::shared_ptr<const Triangulation> mesh_;
    std::function<Vec2(Vec2)> vec_;
};

}  // namespace ritzlab
