#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ritzlab/geometry.hpp"

namespace ritzlab {

/// Result of point location: containing triangle plus barycentric coordinates.
struct Located {
    int triangle = -1;
    std::array<double, 3> bary{0, 0, 0};
};

/// Conforming triangulation of a convex polygon. Immutable after construction.
///
/// Triangles are positively oriented. Uniform (red) refinement produces the
/// children of triangle t at indices 4t..4t+3, so the ancestor of a triangle
/// j across m levels is j / 4^m.
class Triangulation {
public:
    Triangulation(ConvexPolygon polygon, std::vector<Vec2> vertices,
                  std::vector<std::array<int, 3>> triangles, int level)
        : polygon_(std::move(polygon)),
          vertices_(std::move(vertices)),
          triangles_(std::move(triangles)),
          level_(level) {
        if (triangles_.empty()) throw std::invalid_argument("Triangulation: no triangles");
        for (const auto& t : triangles_)
            if (tri_area_impl(t) <= 0.0)
                throw std::invalid_argument("Triangulation: non-positive triangle area");
        compute_boundary_flags();
        mesh_size_h_ = 0.0;
        for (std::size_t i = 0; i < triangles_.size(); ++i)
            mesh_size_h_ = std::max(mesh_size_h_, tri_diameter(static_cast<int>(i)));
        build_locate_grid();
    }

    const ConvexPolygon& polygon() const { return polygon_; }
    const std::vector<Vec2>& vertices() const { return vertices_; }
    const std::vector<std::array<int, 3>>& triangles() const { return triangles_; }
    const std::vector<bool>& boundary_vertex_flags() const { return boundary_vertex_; }
    int level() const { return level_; }
    double mesh_size_h() const { return mesh_size_h_; }
    int n_vertices() const { return static_cast<int>(vertices_.size()); }
    int n_triangles() const { return static_cast<int>(triangles_.size()); }

    std::array<Vec2, 3> tri_vertices(int t) const {
        const auto& tri = triangles_[t];
        return {vertices_[tri[0]], vertices_[tri[1]], vertices_[tri[2]]};
    }

    double tri_area(int t) const { return tri_area_impl(triangles_[t]); }

    double tri_diameter(int t) const {
        const auto v = tri_vertices(t);
        return std::max({dist(v[0], v[1]), dist(v[1], v[2]), dist(v[2], v[0])});
    }

    double tri_inradius(int t) const {
        const auto v = tri_vertices(t);
        const double per = dist(v[0], v[1]) + dist(v[1], v[2]) + dist(v[2], v[0]);
        return 2.0 * tri_area(t) / per;
    }

    Vec2 tri_centroid(int t) const {
        const auto v = tri_vertices(t);
        return (v[0] + v[1] + v[2]) / 3.0;
    }

    Vec2 bary_to_point(int t, const std::array<double, 3>& b) const {
        const auto v = tri_vertices(t);
        return b[0] * v[0] + b[1] * v[1] + b[2] * v[2];
    }

    std::array<double, 3> point_to_bary(int t, Vec2 p) const {
        const auto v = tri_vertices(t);
        const double a = 2.0 * tri_area(t);
        return {cross(v[1] - p, v[2] - p) / a, cross(v[2] - p, v[0] - p) / a,
                cross(v[0] - p, v[1] - p) / a};
    }

    /// Locate the triangle containing x. Ties on shared edges/vertices resolve
    /// to the lowest triangle index. Returns nullopt for x outside the domain.
    std::optional<Located> locate(Vec2 x) const {
        if (x.x < grid_bb_.lo.x || x.x > grid_bb_.hi.x || x.y < grid_bb_.lo.y ||
            x.y > grid_bb_.hi.y)
            return std::nullopt;
        const int ci = cell_index(x);
        const double tol = 1e-12;
        for (int t : grid_cells_[ci]) {
            auto b = point_to_bary(t, x);
            if (b[0] >= -tol && b[1] >= -tol && b[2] >= -tol) {
                double s = 0.0;
                for (double& v : b) {
                    v = std::max(v, 0.0);
                    s += v;
                }
                for (double& v : b) v /= s;
                return Located{t, b};
            }
        }
        return std::nullopt;
    }

    /// Elements whose distance interval to z overlaps [rmin, rmax]. This is
    /// the neighborhood operator for radial sets: the union of triangles
    /// meeting {x : rmin <= |x-z| <= rmax}.
    std::vector<int> elements_meeting_radial_set(Vec2 z, double rmin, double rmax) const {
        std::vector<int> out;
        for (int t = 0; t < n_triangles(); ++t) {
            const auto [dmin, dmax] = tri_distance_interval(t, z);
            if (dmax >= rmin && dmin <= rmax) out.push_back(t);
        }
        return out;
    }

    /// [min, max] of |x - z| over triangle t.
    std::pair<double, double> tri_distance_interval(int t, Vec2 z) const {
        const auto v = tri_vertices(t);
        double dmax = 0.0;
        for (const Vec2& p : v) dmax = std::max(dmax, dist(p, z));
        // Min distance: zero if inside, else distance to nearest edge.
        const auto b = point_to_bary(t, z);
        if (b[0] >= 0 && b[1] >= 0 && b[2] >= 0) return {0.0, dmax};
        double dmin = std::numeric_limits<double>::infinity();
        for (int i = 0; i < 3; ++i) {
            const Vec2 a = v[i], c = v[(i + 1) % 3];
            const Vec2 e = c - a;
            const double s = std::clamp(dot(z - a, e) / norm_sq(e), 0.0, 1.0);
            dmin = std::min(dmin, dist(z, a + s * e));
        }
        return {dmin, dmax};
    }

private:
    double tri_area_impl(const std::array<int, 3>& tri) const {
        const Vec2 a = vertices_[tri[0]], b = vertices_[tri[1]], c = vertices_[tri[2]];
        return 0.5 * cross(b - a, c - a);
    }

    void compute_boundary_flags() {
        // Boundary edges are those incident to exactly one triangle.
        std::map<std::pair<int, int>, int> edge_count;
        for (const auto& tri : triangles_) {
            for (int i = 0; i < 3; ++i) {
                const int a = tri[i], b = tri[(i + 1) % 3];
                edge_count[{std::min(a, b), std::max(a, b)}]++;
            }
        }
        boundary_vertex_.assign(vertices_.size(), false);
        for (const auto& [e, c] : edge_count) {
            if (c == 1) {
                boundary_vertex_[e.first] = true;
                boundary_vertex_[e.second] = true;
            } else if (c > 2) {
                throw std::invalid_argument("Triangulation: edge shared by more than 2 triangles");
            }
        }
    }

    void build_locate_grid() {
        grid_bb_ = polygon_.bounding_box();
        const int target = std::max(1, static_cast<int>(std::sqrt(double(triangles_.size()))));
        grid_nx_ = target;
        grid_ny_ = target;
        grid_cells_.assign(static_cast<std::size_t>(grid_nx_) * grid_ny_, {});
        const double w = grid_bb_.width(), h = grid_bb_.height();
        for (int t = 0; t < n_triangles(); ++t) {
            const auto v = tri_vertices(t);
            Bbox tb{v[0], v[0]};
            tb.expand(v[1]);
            tb.expand(v[2]);
            const int i0 = clamp_cell((tb.lo.x - grid_bb_.lo.x) / w * grid_nx_, grid_nx_);
            const int i1 = clamp_cell((tb.hi.x - grid_bb_.lo.x) / w * grid_nx_, grid_nx_);
            const int j0 = clamp_cell((tb.lo.y - grid_bb_.lo.y) / h * grid_ny_, grid_ny_);
            const int j1 = clamp_cell((tb.hi.y - grid_bb_.lo.y) / h * grid_ny_, grid_ny_);
            for (int j = j0; j <= j1; ++j)
                for (int i = i0; i <= i1; ++i)
                    grid_cells_[static_cast<std::size_t>(j) * grid_nx_ + i].push_back(t);
        }
        // Ascending candidate order implements the lowest-index tie break.
        for (auto& c : grid_cells_) std::sort(c.begin(), c.end());
    }

    static int clamp_cell(double v, int n) {
        return std::clamp(static_cast<int>(v), 0, n - 1);
    }

    int cell_index(Vec2 x) const {
        const int i = clamp_cell((x.x - grid_bb_.lo.x) / grid_bb_.width() * grid_nx_, grid_nx_);
        const int j = clamp_cell((x.y - grid_bb_.lo.y) / grid_bb_.height() * grid_ny_, grid_ny_);
        return j * grid_nx_ + i;
    }

    ConvexPolygon polygon_;
    std::vector<Vec2> vertices_;
    std::vector<std::array<int, 3>> triangles_;
    std::vector<bool> boundary_vertex_;
    int level_ = 0;
    double mesh_size_h_ = 0.0;

    Bbox grid_bb_;
    int grid_nx_ = 1, grid_ny_ = 1;
    std::vector<std::vector<int>> grid_cells_;
};

/// Level-0 mesh: fan triangulation from the polygon centroid.
inline Triangulation triangulate_polygon(const ConvexPolygon& poly) {
    std::vector<Vec2> vertices = poly.vertices();
    vertices.push_back(poly.centroid());
    const int c = static_cast<int>(vertices.size()) - 1;
    std::vector<std::array<int, 3>> triangles;
    for (int i = 0; i < c; ++i) triangles.push_back({i, (i + 1) % c, c});
    return Triangulation(poly, std::move(vertices), std::move(triangles), 0);
}

/// Red refinement: each triangle splits into 4 similar children via edge
/// midpoints. Children of triangle t land at indices 4t..4t+3.
inline Triangulation refine_uniform(const Triangulation& mesh) {
    std::vector<Vec2> vertices = mesh.vertices();
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
        const auto key = std::make_pair(std::min(a, b), std::max(a, b));
        auto it = midpoint.find(key);
        if (it != midpoint.end()) return it->second;
        const Vec2 m = 0.5 * (vertices[a] + vertices[b]);
        vertices.push_back(m);
        const int idx = static_cast<int>(vertices.size()) - 1;
        midpoint.emplace(key, idx);
        return idx;
    };
    std::vector<std::array<int, 3>> triangles;
    triangles.reserve(4 * mesh.triangles().size());
    for (const auto& t : mesh.triangles()) {
        const int m01 = mid(t[0], t[1]);
        const int m12 = mid(t[1], t[2]);
        const int m20 = mid(t[2], t[0]);
        triangles.push_back({t[0], m01, m20});
        triangles.push_back({m01, t[1], m12});
        triangles.push_back({m20, m12, t[2]});
        triangles.push_back({m01, m12, m20});
    }
    return Triangulation(mesh.polygon(), std::move(vertices), std::move(triangles),
                         mesh.level() + 1);
}

inline Triangulation make_mesh(const ConvexPolygon& poly, int level) {
    Triangulation m = triangulate_polygon(poly);
    for (int i = 0; i < level; ++i) m = refine_uniform(m);
    return m;
}

/// max_T diam(T) / inradius(T); invariant under uniform (red) refinement.
inline double shape_regularity(const Triangulation& mesh) {
    double r = 0.0;
    for (int t = 0; t < mesh.n_triangles(); ++t)
        r = std::max(r, mesh.tri_diameter(t) / mesh.tri_inradius(t));
    return r;
}

/// max_T diam(T) / min_T diam(T).
inline double quasiuniformity_ratio(const Triangulation& mesh) {
    double dmin = std::numeric_limits<double>::infinity(), dmax = 0.0;
    for (int t = 0; t < mesh.n_triangles(); ++t) {
        const double d = mesh.tri_diameter(t);
        dmin = std::min(dmin, d);
        dmax = std::max(dmax, d);
    }
    return dmax / dmin;
}

/// Structural checks: conformity (no hanging nodes), orientation, coverage.
/// Throws std::runtime_error with a diagnostic on the first violation.
inline void validate_mesh(const Triangulation& mesh) {
    const double scale = mesh.polygon().diameter();
    std::map<std::pair<int, int>, int> edge_count;
    for (const auto& tri : mesh.triangles())
        for (int i = 0; i < 3; ++i) {
            const int a = tri[i], b = tri[(i + 1) % 3];
            if (a == b) throw std::runtime_error("validate_mesh: degenerate triangle");
            edge_count[{std::min(a, b), std::max(a, b)}]++;
        }
    // Edges shared by exactly two triangles are interior; edges used once must
    // lie on the polygon boundary. A hanging node always leaves a once-used
    // edge whose midpoint is interior, so this catches non-conformity.
    for (const auto& [e, c] : edge_count) {
        if (c > 2) throw std::runtime_error("validate_mesh: edge in more than 2 triangles");
        if (c == 1) {
            const Vec2 m = 0.5 * (mesh.vertices()[e.first] + mesh.vertices()[e.second]);
            if (mesh.polygon().boundary_distance(m) > 1e-10 * scale)
                throw std::runtime_error("validate_mesh: hanging node or interior crack");
        }
    }
    double area = 0.0;
    for (int t = 0; t < mesh.n_triangles(); ++t) {
        if (mesh.tri_area(t) <= 0.0) throw std::runtime_error("validate_mesh: bad orientation");
        area += mesh.tri_area(t);
    }
    if (std::abs(area - mesh.polygon().area()) > 1e-12 * mesh.polygon().area())
        throw std::runtime_error("validate_mesh: triangle areas do not cover the polygon");
}

// --- Text serialization -----------------------------------------------------
//
// Line format:
//   MESH2D <n_vertices> <n_triangles>
//   v <x> <y> <boundary_flag>
//   t <i0> <i1> <i2>
// Coordinates written with 17 significant digits.

inline void write_mesh(std::ostream& os, const Triangulation& mesh) {
    os << "MESH2D " << mesh.n_vertices() << ' ' << mesh.n_triangles() << '\n';
    char buf[128];
    for (int i = 0; i < mesh.n_vertices(); ++i) {
        const Vec2 p = mesh.vertices()[i];
        std::snprintf(buf, sizeof buf, "v %.17g %.17g %d\n", p.x, p.y,
                      mesh.boundary_vertex_flags()[i] ? 1 : 0);
        os << buf;
    }
    for (const auto& t : mesh.triangles()) os << "t " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

inline void write_mesh_file(const std::string& path, const Triangulation& mesh) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("write_mesh_file: cannot open " + path);
    write_mesh(f, mesh);
}

/// Reads the text format back. The polygon hull is reconstructed from the
/// boundary vertices, so geometric queries keep working on imported meshes.
inline Triangulation read_mesh(std::istream& is) {
    std::string tag;
    int nv = 0, nt = 0;
    if (!(is >> tag >> nv >> nt) || tag != "MESH2D")
        throw std::runtime_error("read_mesh: bad header");
    std::vector<Vec2> vertices(nv);
    std::vector<int> flags(nv);
    for (int i = 0; i < nv; ++i) {
        if (!(is >> tag >> vertices[i].x >> vertices[i].y >> flags[i]) || tag != "v")
            throw std::runtime_error("read_mesh: bad vertex line");
    }
    std::vector<std::array<int, 3>> triangles(nt);
    for (int i = 0; i < nt; ++i) {
        if (!(is >> tag >> triangles[i][0] >> triangles[i][1] >> triangles[i][2]) || tag != "t")
            throw std::runtime_error("read_mesh: bad triangle line");
        for (int k = 0; k < 3; ++k)
            if (triangles[i][k] < 0 || triangles[i][k] >= nv)
                throw std::runtime_error("read_mesh: triangle index out of range");
    }
    // Convex hull of boundary vertices (gift wrapping on the small set).
    std::vector<Vec2> bpts;
    for (int i = 0; i < nv; ++i)
        if (flags[i]) bpts.push_back(vertices[i]);
    if (bpts.size() < 3) throw std::runtime_error("read_mesh: too few boundary vertices");
    std::sort(bpts.begin(), bpts.end(), [](Vec2 a, Vec2 b) {
        return a.x < b.x || (a.x == b.x && a.y < b.y);
    });
    auto build_half = [&](bool upper) {
        std::vector<Vec2> h;
        for (std::size_t k = 0; k < bpts.size(); ++k) {
            const Vec2 p = bpts[upper ? bpts.size() - 1 - k : k];
            while (h.size() >= 2 && cross(h.back() - h[h.size() - 2], p - h.back()) <= 0)
                h.pop_back();
            h.push_back(p);
        }
        return h;
    };
    std::vector<Vec2> hull = build_half(false);
    std::vector<Vec2> up = build_half(true);
    hull.insert(hull.end(), up.begin() + 1, up.end() - 1);
    return Triangulation(ConvexPolygon(hull), std::move(vertices), std::move(triangles), 0);
}

inline Triangulation read_mesh_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("read_mesh_file: cannot open " + path);
    return read_mesh(f);
}

}  // namespace ritzlab
