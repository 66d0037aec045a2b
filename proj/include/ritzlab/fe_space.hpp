#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "ritzlab/mesh.hpp"

namespace ritzlab {

/// Closed-form function on the domain with a closed-form gradient.
struct AnalyticFunction {
    std::string name;
    std::function<double(Vec2)> value;
    std::function<Vec2(Vec2)> gradient;
    bool vanishes_on_boundary = false;
};

/// Values and reference gradients of the local Lagrange basis at a
/// barycentric point. Reference coordinates are (xi, eta) with
/// lambda = (1 - xi - eta, xi, eta).
struct BasisEval {
    int n = 0;
    std::array<double, 6> values{};
    std::array<Vec2, 6> ref_grad{};
};

inline int local_dof_count(int degree) { return (degree + 1) * (degree + 2) / 2; }

inline BasisEval eval_basis(int degree, const std::array<double, 3>& b) {
    BasisEval e;
    const double l0 = b[0], l1 = b[1], l2 = b[2];
    static constexpr Vec2 dl[3] = {{-1.0, -1.0}, {1.0, 0.0}, {0.0, 1.0}};
    if (degree == 1) {
        e.n = 3;
        e.values = {l0, l1, l2};
        e.ref_grad = {dl[0], dl[1], dl[2]};
    } else if (degree == 2) {
        e.n = 6;
        const double l[3] = {l0, l1, l2};
        for (int i = 0; i < 3; ++i) {
            e.values[i] = l[i] * (2.0 * l[i] - 1.0);
            e.ref_grad[i] = (4.0 * l[i] - 1.0) * dl[i];
        }
        // Edge bubbles: (0,1), (1,2), (0,2).
        static constexpr int ea[3] = {0, 1, 0}, eb[3] = {1, 2, 2};
        for (int k = 0; k < 3; ++k) {
            const int i = ea[k], j = eb[k];
            e.values[3 + k] = 4.0 * l[i] * l[j];
            e.ref_grad[3 + k] = 4.0 * (l[i] * dl[j] + l[j] * dl[i]);
        }
    } else {
        throw std::invalid_argument("eval_basis: unsupported degree " + std::to_string(degree));
    }
    return e;
}

/// Lagrange space of degree k in {1,2} on a triangulation, with the zero
/// boundary trace subspace identified by the interior DOF mask.
class FeSpace {
public:
    FeSpace(std::shared_ptr<const Triangulation> mesh, int degree)
        : mesh_(std::move(mesh)), degree_(degree) {
        if (degree_ != 1 && degree_ != 2)
            throw std::invalid_argument("FeSpace: degree must be 1 or 2");
        build();
    }

    const Triangulation& mesh() const { return *mesh_; }
    const std::shared_ptr<const Triangulation>& mesh_ptr() const { return mesh_; }
    int degree() const { return degree_; }
    int n_dofs() const { return static_cast<int>(dof_coords_.size()); }
    int n_interior() const { return n_interior_; }
    const std::vector<Vec2>& dof_coordinates() const { return dof_coords_; }
    const std::vector<bool>& interior_dof_mask() const { return interior_; }

    /// Global DOF indices of element t (3 for P1, 6 for P2; P2 order:
    /// vertices then edge midpoints (0,1),(1,2),(0,2)).
    const std::array<int, 6>& element_dofs(int t) const { return element_dofs_[t]; }

    /// Compact index among interior DOFs, or -1 on the boundary.
    int interior_index(int dof) const { return interior_index_[dof]; }
    const std::vector<int>& interior_dofs() const { return interior_dofs_; }

    /// Physical gradient factors: grad N = Jinv^T * ref_grad on element t.
    Vec2 physical_gradient(int t, Vec2 ref_grad) const {
        const auto v = mesh_->tri_vertices(t);
        const double j11 = v[1].x - v[0].x, j12 = v[2].x - v[0].x;
        const double j21 = v[1].y - v[0].y, j22 = v[2].y - v[0].y;
        const double det = j11 * j22 - j12 * j21;
        return {(j22 * ref_grad.x - j21 * ref_grad.y) / det,
                (-j12 * ref_grad.x + j11 * ref_grad.y) / det};
    }

private:
    void build() {
        const auto& mesh = *mesh_;
        const int nv = mesh.n_vertices();
        dof_coords_.assign(mesh.vertices().begin(), mesh.vertices().end());
        std::vector<bool> dof_boundary(mesh.boundary_vertex_flags().begin(),
                                       mesh.boundary_vertex_flags().end());
        element_dofs_.resize(mesh.n_triangles());

        std::map<std::pair<int, int>, int> edge_dof;
        std::map<std::pair<int, int>, int> edge_count;
        if (degree_ == 2) {
            for (const auto& tri : mesh.triangles())
                for (int i = 0; i < 3; ++i) {
                    const int a = tri[i], b = tri[(i + 1) % 3];
                    edge_count[{std::min(a, b), std::max(a, b)}]++;
                }
        }
        for (int t = 0; t < mesh.n_triangles(); ++t) {
            const auto& tri = mesh.triangles()[t];
            auto& dofs = element_dofs_[t];
            dofs = {tri[0], tri[1], tri[2], -1, -1, -1};
            if (degree_ == 2) {
                static constexpr int ea[3] = {0, 1, 0}, eb[3] = {1, 2, 2};
                for (int k = 0; k < 3; ++k) {
                    const int a = tri[ea[k]], b = tri[eb[k]];
                    const auto key = std::make_pair(std::min(a, b), std::max(a, b));
                    auto it = edge_dof.find(key);
                    if (it == edge_dof.end()) {
                        dof_coords_.push_back(0.5 * (mesh.vertices()[a] + mesh.vertices()[b]));
                        dof_boundary.push_back(edge_count[key] == 1);
                        it = edge_dof.emplace(key, nv + static_cast<int>(edge_dof.size())).first;
                    }
                    dofs[3 + k] = it->second;
                }
            }
        }
        interior_.resize(dof_coords_.size());
        interior_index_.assign(dof_coords_.size(), -1);
        n_interior_ = 0;
        for (std::size_t i = 0; i < dof_coords_.size(); ++i) {
            interior_[i] = !dof_boundary[i];
            if (interior_[i]) {
                interior_index_[i] = n_interior_++;
                interior_dofs_.push_back(static_cast<int>(i));
            }
        }
    }

    std::shared_ptr<const Triangulation> mesh_;
    int degree_;
    std::vector<Vec2> dof_coords_;
    std::vector<std::array<int, 6>> element_dofs_;
    std::vector<bool> interior_;
    std::vector<int> interior_index_;
    std::vector<int> interior_dofs_;
    int n_interior_ = 0;
};

struct FeEval {
    double value = 0.0;
    Vec2 gradient{0, 0};
};

/// Member of the Lagrange space: a coefficient vector over global DOFs.
/// Functions produced by interpolation or projection have zero boundary
/// coefficients (zero trace); evaluation extends by zero outside the domain.
class FeFunction {
public:
    FeFunction(std::shared_ptr<const FeSpace> space, std::vector<double> coeffs)
        : space_(std::move(space)), coeffs_(std::move(coeffs)) {
        if (static_cast<int>(coeffs_.size()) != space_->n_dofs())
            throw std::invalid_argument("FeFunction: coefficient count mismatch");
    }

    explicit FeFunction(std::shared_ptr<const FeSpace> space)
        : space_(std::move(space)), coeffs_(space_->n_dofs(), 0.0) {}

    const FeSpace& space() const { return *space_; }
    const std::shared_ptr<const FeSpace>& space_ptr() const { return space_; }
    const std::vector<double>& coefficients() const { return coeffs_; }
    std::vector<double>& coefficients() { return coeffs_; }

    FeEval eval_on_element(int t, const std::array<double, 3>& bary) const {
        const BasisEval b = eval_basis(space_->degree(), bary);
        const auto& dofs = space_->element_dofs(t);
        FeEval out;
        Vec2 rg{0, 0};
        for (int i = 0; i < b.n; ++i) {
            const double c = coeffs_[dofs[i]];
            out.value += c * b.values[i];
            rg += c * b.ref_grad[i];
        }
        out.gradient = space_->physical_gradient(t, rg);
        return out;
    }

    /// Point evaluation with zero extension; gradient attributed to the
    /// located element (lowest index on edge ties).
    FeEval eval(Vec2 x) const {
        const auto loc = space_->mesh().locate(x);
        if (!loc) return {};
        return eval_on_element(loc->triangle, loc->bary);
    }

private:
    std::shared_ptr<const FeSpace> space_;
    std::vector<double> coeffs_;
};

/// Nodal interpolant into the zero-trace subspace: boundary DOFs are 0.
inline FeFunction interpolate_nodal(std::shared_ptr<const FeSpace> space,
                                    const AnalyticFunction& u) {
    std::vector<double> c(space->n_dofs(), 0.0);
    for (int i = 0; i < space->n_dofs(); ++i)
        if (space->interior_dof_mask()[i]) c[i] = u.value(space->dof_coordinates()[i]);
    return FeFunction(std::move(space), std::move(c));
}

/// Nodal interpolant into the full Lagrange space (no boundary constraint).
inline FeFunction interpolate_nodal_unconstrained(std::shared_ptr<const FeSpace> space,
                                                  const std::function<double(Vec2)>& u) {
    std::vector<double> c(space->n_dofs());
    for (int i = 0; i < space->n_dofs(); ++i) c[i] = u(space->dof_coordinates()[i]);
    return FeFunction(std::move(space), std::move(c));
}

/// Wraps a finite element function as an AnalyticFunction (piecewise
/// polynomial value/gradient, zero outside the domain).
inline AnalyticFunction analytic_from_fe(std::shared_ptr<const FeFunction> f,
                                         const std::string& name = "fe_function") {
    AnalyticFunction a;
    a.name = name;
    a.value = [f](Vec2 x) { return f->eval(x).value; };
    a.gradient = [f](Vec2 x) { return f->eval(x).gradient; };
    a.vanishes_on_boundary = true;
    return a;
}

// --- Text serialization -----------------------------------------------------
//
//   FEFUN <degree> <n_dofs>
//   <coefficient>            (one per line, 17 significant digits)

inline void write_fefun(std::ostream& os, const FeFunction& f) {
    os << "FEFUN " << f.space().degree() << ' ' << f.space().n_dofs() << '\n';
    char buf[64];
    for (double c : f.coefficients()) {
        std::snprintf(buf, sizeof buf, "%.17g\n", c);
        os << buf;
    }
}

inline void write_fefun_file(const std::string& path, const FeFunction& f) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("write_fefun_file: cannot open " + path);
    write_fefun(os, f);
}

/// Reads coefficients back onto a compatible space (degree and size checked).
inline FeFunction read_fefun(std::istream& is, std::shared_ptr<const FeSpace> space) {
    std::string tag;
    int degree = 0, n = 0;
    if (!(is >> tag >> degree >> n) || tag != "FEFUN")
        throw std::runtime_error("read_fefun: bad header");
    if (degree != space->degree() || n != space->n_dofs())
        throw std::runtime_error("read_fefun: space mismatch");
    std::vector<double> c(n);
    for (int i = 0; i < n; ++i)
        if (!(is >> c[i])) throw std::runtime_error("read_fefun: truncated coefficients");
    return FeFunction(std::move(space), std::move(c));
}

inline FeFunction read_fefun_file(const std::string& path, std::shared_ptr<const FeSpace> space) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("read_fefun_file: cannot open " + path);
    return read_fefun(is, std::move(space));
}

}  // namespace ritzlab
