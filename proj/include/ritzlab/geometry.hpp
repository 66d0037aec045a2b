#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace ritzlab {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
    friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
    friend Vec2 operator*(Vec2 a, double s) { return {s * a.x, s * a.y}; }
    friend Vec2 operator/(Vec2 a, double s) { return {a.x / s, a.y / s}; }
    Vec2& operator+=(Vec2 b) { x += b.x; y += b.y; return *this; }
    Vec2& operator-=(Vec2 b) { x -= b.x; y -= b.y; return *this; }
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline double norm_sq(Vec2 a) { return a.x * a.x + a.y * a.y; }
inline double dist(Vec2 a, Vec2 b) { return norm(a - b); }

/// Axis-aligned bounding box.
struct Bbox {
    Vec2 lo{0, 0};
    Vec2 hi{0, 0};
    double width() const { return hi.x - lo.x; }
    double height() const { return hi.y - lo.y; }
    void expand(Vec2 p) {
        lo.x = std::min(lo.x, p.x);
        lo.y = std::min(lo.y, p.y);
        hi.x = std::max(hi.x, p.x);
        hi.y = std::max(hi.y, p.y);
    }
};

/// Convex polygonal domain, vertices counter-clockwise.
class ConvexPolygon {
public:
    explicit ConvexPolygon(std::vector<Vec2> vertices) : vertices_(std::move(vertices)) {
        validate();
    }

    const std::vector<Vec2>& vertices() const { return vertices_; }
    std::size_t size() const { return vertices_.size(); }

    double area() const {
        double a = 0.0;
        for (std::size_t i = 0; i < vertices_.size(); ++i) {
            const Vec2 p = vertices_[i];
            const Vec2 q = vertices_[(i + 1) % vertices_.size()];
            a += cross(p, q);
        }
        return 0.5 * a;
    }

    Vec2 centroid() const {
        // Area-weighted polygon centroid.
        double a = 0.0;
        Vec2 c{0, 0};
        for (std::size_t i = 0; i < vertices_.size(); ++i) {
            const Vec2 p = vertices_[i];
            const Vec2 q = vertices_[(i + 1) % vertices_.size()];
            const double w = cross(p, q);
            a += w;
            c += w * (p + q);
        }
        return c / (3.0 * a);
    }

    /// Largest pairwise vertex distance (equals the diameter for convex polygons).
    double diameter() const {
        double d = 0.0;
        for (std::size_t i = 0; i < vertices_.size(); ++i)
            for (std::size_t j = i + 1; j < vertices_.size(); ++j)
                d = std::max(d, dist(vertices_[i], vertices_[j]));
        return d;
    }

    Bbox bounding_box() const {
        Bbox b{vertices_[0], vertices_[0]};
        for (const Vec2& v : vertices_) b.expand(v);
        return b;
    }

    /// Inside test (boundary counts as inside up to `tol` in the edge-normal direction).
    bool contains(Vec2 p, double tol = 1e-12) const {
        const double scale = diameter();
        for (std::size_t i = 0; i < vertices_.size(); ++i) {
            const Vec2 a = vertices_[i];
            const Vec2 b = vertices_[(i + 1) % vertices_.size()];
            if (cross(b - a, p - a) < -tol * scale * scale) return false;
        }
        return true;
    }

    /// Distance from p to the polygon boundary (p assumed inside).
    double boundary_distance(Vec2 p) const {
        double d = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < vertices_.size(); ++i) {
            const Vec2 a = vertices_[i];
            const Vec2 b = vertices_[(i + 1) % vertices_.size()];
            const Vec2 e = b - a;
            const double t = std::clamp(dot(p - a, e) / norm_sq(e), 0.0, 1.0);
            d = std::min(d, dist(p, a + t * e));
        }
        return d;
    }

    static ConvexPolygon unit_square() {
        return ConvexPolygon({{0, 0}, {1, 0}, {1, 1}, {0, 1}});
    }

    static ConvexPolygon equilateral_triangle() {
        return ConvexPolygon({{0, 0}, {1, 0}, {0.5, std::sqrt(3.0) / 2.0}});
    }

    /// Regular hexagon with unit circumradius, centered at the origin.
    static ConvexPolygon regular_hexagon() {
        std::vector<Vec2> v;
        for (int i = 0; i < 6; ++i) {
            const double t = M_PI / 3.0 * i;
            v.push_back({std::cos(t), std::sin(t)});
        }
        return ConvexPolygon(std::move(v));
    }

    static ConvexPolygon named(const std::string& name) {
        if (name == "square" || name == "unit_square") return unit_square();
        if (name == "equilateral" || name == "triangle") return equilateral_triangle();
        if (name == "hexagon") return regular_hexagon();
        throw std::invalid_argument("unknown polygon name: " + name +
                                    " (expected square, equilateral, hexagon)");
    }

private:
    void validate() const {
        if (vertices_.size() < 3)
            throw std::invalid_argument("ConvexPolygon: need at least 3 vertices");
        const double scale = [&] {
            double d = 0.0;
            for (std::size_t i = 0; i < vertices_.size(); ++i)
                for (std::size_t j = i + 1; j < vertices_.size(); ++j)
                    d = std::max(d, dist(vertices_[i], vertices_[j]));
            return d;
        }();
        if (scale <= 0.0) throw std::invalid_argument("ConvexPolygon: degenerate (zero extent)");
        for (std::size_t i = 0; i < vertices_.size(); ++i)
            for (std::size_t j = i + 1; j < vertices_.size(); ++j)
                if (dist(vertices_[i], vertices_[j]) < 1e-14 * scale)
                    throw std::invalid_argument("ConvexPolygon: repeated vertex");
        for (std::size_t i = 0; i < vertices_.size(); ++i) {
            const Vec2 a = vertices_[i];
            const Vec2 b = vertices_[(i + 1) % vertices_.size()];
            const Vec2 c = vertices_[(i + 2) % vertices_.size()];
            if (cross(b - a, c - b) <= 1e-14 * scale * scale)
                throw std::invalid_argument(
                    "ConvexPolygon: vertices not strictly convex counter-clockwise");
        }
    }

    std::vector<Vec2> vertices_;
};

}  // namespace ritzlab
