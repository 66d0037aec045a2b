#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <memory>
#include <sstream>

#include "ritzlab/corpus.hpp"
#include "ritzlab/fe_space.hpp"
#include "ritzlab/quadrature.hpp"
#include "ritzlab/sampling.hpp"

using namespace ritzlab;

namespace {

std::array<double, 3> random_bary(Rng& rng) {
    double a = rng.uniform(), b = rng.uniform();
    if (a + b > 1.0) {
        a = 1.0 - a;
        b = 1.0 - b;
    }
    return {1.0 - a - b, a, b};
}

FeFunction random_vh(std::shared_ptr<const FeSpace> space, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> c(space->n_dofs(), 0.0);
    for (int i = 0; i < space->n_dofs(); ++i)
        if (space->interior_dof_mask()[i]) c[i] = rng.uniform(-1.0, 1.0);
    return FeFunction(std::move(space), std::move(c));
}

}  // namespace

TEST_CASE("basis nodal values and partition of unity") {
    const BasisEval v0 = eval_basis(1, {1, 0, 0});
    CHECK(v0.values[0] == 1.0);
    CHECK(v0.values[1] == 0.0);
    CHECK(v0.values[2] == 0.0);

    // degree 2 at the (0,1) edge midpoint: vertex functions vanish.
    const BasisEval m = eval_basis(2, {0.5, 0.5, 0.0});
    CHECK(m.values[0] == Catch::Approx(0.0).margin(1e-15));
    CHECK(m.values[1] == Catch::Approx(0.0).margin(1e-15));
    CHECK(m.values[2] == Catch::Approx(0.0).margin(1e-15));
    CHECK(m.values[3] == Catch::Approx(1.0).epsilon(1e-15));
    CHECK(m.values[4] == Catch::Approx(0.0).margin(1e-15));
    CHECK(m.values[5] == Catch::Approx(0.0).margin(1e-15));

    CHECK_THROWS_AS(eval_basis(3, {1, 0, 0}), std::invalid_argument);

    Rng rng(7);
    for (int degree : {1, 2}) {
        for (int i = 0; i < 100; ++i) {
            const BasisEval e = eval_basis(degree, random_bary(rng));
            double vsum = 0.0;
            Vec2 gsum{0, 0};
            for (int k = 0; k < e.n; ++k) {
                vsum += e.values[k];
                gsum += e.ref_grad[k];
            }
            CHECK(vsum == Catch::Approx(1.0).epsilon(1e-14));
            CHECK(std::abs(gsum.x) <= 1e-14);
            CHECK(std::abs(gsum.y) <= 1e-14);
        }
    }
}

TEST_CASE("dof layout") {
    const auto mesh = std::make_shared<Triangulation>(make_mesh(ConvexPolygon::unit_square(), 1));
    const FeSpace p1(mesh, 1);
    CHECK(p1.n_dofs() == mesh->n_vertices());

    const FeSpace p2(mesh, 2);
    // Euler: E = V + T - 1 on a disc-like mesh.
    const int n_edges = mesh->n_vertices() + mesh->n_triangles() - 1;
    CHECK(p2.n_dofs() == mesh->n_vertices() + n_edges);
    CHECK(local_dof_count(1) == 3);
    CHECK(local_dof_count(2) == 6);

    // Boundary DOFs flagged non-interior; boundary edge midpoints included.
    int boundary_dofs = 0;
    for (int i = 0; i < p2.n_dofs(); ++i)
        if (!p2.interior_dof_mask()[i]) ++boundary_dofs;
    CHECK(boundary_dofs == 16);  // 8 boundary vertices + 8 boundary edge midpoints
}

TEST_CASE("nodal interpolation") {
    const auto mesh = std::make_shared<Triangulation>(make_mesh(ConvexPolygon::unit_square(), 2));

    SECTION("reproduces V_h members exactly") {
        for (int degree : {1, 2}) {
            const auto space = std::make_shared<FeSpace>(mesh, degree);
            const auto vh = std::make_shared<FeFunction>(random_vh(space, 11));
            const FeFunction back = interpolate_nodal(space, analytic_from_fe(vh));
            for (int i = 0; i < space->n_dofs(); ++i)
                CHECK(back.coefficients()[i] ==
                      Catch::Approx(vh->coefficients()[i]).margin(1e-12));
        }
    }

    SECTION("zero function gives zero coefficients") {
        const auto space = std::make_shared<FeSpace>(mesh, 2);
        AnalyticFunction zero{"zero", [](Vec2) { return 0.0; }, [](Vec2) { return Vec2{0, 0}; },
                              true};
        const FeFunction z = interpolate_nodal(space, zero);
        for (double c : z.coefficients()) CHECK(c == 0.0);
    }

    SECTION("interpolation is a projection (idempotent through evaluation)") {
        const auto space = std::make_shared<FeSpace>(mesh, 2);
        const auto once = std::make_shared<FeFunction>(
            interpolate_nodal(space, corpus_function("sine")));
        const FeFunction twice = interpolate_nodal(space, analytic_from_fe(once));
        for (int i = 0; i < space->n_dofs(); ++i)
            CHECK(twice.coefficients()[i] ==
                  Catch::Approx(once->coefficients()[i]).margin(1e-12));
    }

    SECTION("sup error of the k=2 interpolant decays at cubic rate") {
        const AnalyticFunction u = corpus_function("bubble");
        std::vector<double> hs, errs;
        auto m = std::make_shared<Triangulation>(make_mesh(ConvexPolygon::unit_square(), 1));
        for (int level = 1; level <= 4; ++level) {
            const auto space = std::make_shared<FeSpace>(m, 2);
            const FeFunction ih = interpolate_nodal(space, u);
            const QuadratureRule& rule = QuadratureRule::for_degree(12);
            double sup = 0.0;
            for (int t = 0; t < m->n_triangles(); ++t)
                for (std::size_t q = 0; q < rule.size(); ++q) {
                    const Vec2 x = m->bary_to_point(t, rule.points[q]);
                    sup = std::max(sup,
                                   std::abs(u.value(x) - ih.eval_on_element(t, rule.points[q]).value));
                }
            hs.push_back(m->mesh_size_h());
            errs.push_back(sup);
            m = std::make_shared<Triangulation>(refine_uniform(*m));
        }
        // Least squares slope of log err against log h.
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        const int n = static_cast<int>(hs.size());
        for (int i = 0; i < n; ++i) {
            const double X = std::log(hs[i]), Y = std::log(errs[i]);
            sx += X;
            sy += Y;
            sxx += X * X;
            sxy += X * Y;
        }
        const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        CHECK(slope >= 2.7);
        CHECK(slope <= 3.3);
    }
}

TEST_CASE("finite element evaluation") {
    SECTION("affine reproduction on one element") {
        const std::vector<Vec2> v{{0, 0}, {1, 0}, {0, 1}};
        const auto mesh = std::make_shared<Triangulation>(
            Triangulation(ConvexPolygon(v), v, {{0, 1, 2}}, 0));
        const auto space = std::make_shared<FeSpace>(mesh, 1);
        const FeFunction f =
            interpolate_nodal_unconstrained(space, [](Vec2 p) { return p.x; });
        const FeEval e = f.eval({0.25, 0.25});
        CHECK(e.value == Catch::Approx(0.25).epsilon(1e-14));
        CHECK(e.gradient.x == Catch::Approx(1.0).epsilon(1e-14));
        CHECK(e.gradient.y == Catch::Approx(0.0).margin(1e-14));
    }

    SECTION("evaluation at a DOF coordinate returns that coefficient") {
        const auto mesh =
            std::make_shared<Triangulation>(make_mesh(ConvexPolygon::unit_square(), 2));
        const auto space = std::make_shared<FeSpace>(mesh, 2);
        const FeFunction f = random_vh(space, 3);
        for (int i : {5, 17, 40, 60}) {
            if (i >= space->n_dofs()) continue;
            CHECK(f.eval(space->dof_coordinates()[i]).value ==
                  Catch::Approx(f.coefficients()[i]).margin(1e-12));
        }
    }

    SECTION("extension by zero outside the domain") {
        const auto mesh =
            std::make_shared<Triangulation>(make_mesh(ConvexPolygon::unit_square(), 1));
        const auto space = std::make_shared<FeSpace>(mesh, 1);
        const FeFunction f = random_vh(space, 5);
        const FeEval e = f.eval({3.0, -1.0});
        CHECK(e.value == 0.0);
        CHECK(e.gradient.x == 0.0);
        CHECK(e.gradient.y == 0.0);
    }

    SECTION("continuity across shared edges") {
        const auto mesh =
            std::make_shared<Triangulation>(make_mesh(ConvexPolygon::unit_square(), 3));
        for (int degree : {1, 2}) {
            const auto space = std::make_shared<FeSpace>(mesh, degree);
            const FeFunction f = random_vh(space, 23 + degree);
            std::map<std::pair<int, int>, std::pair<int, int>> edge_tris;
            for (int t = 0; t < mesh->n_triangles(); ++t)
                for (int i = 0; i < 3; ++i) {
                    const int a = mesh->triangles()[t][i], b = mesh->triangles()[t][(i + 1) % 3];
                    const auto key = std::make_pair(std::min(a, b), std::max(a, b));
                    auto it = edge_tris.find(key);
                    if (it == edge_tris.end())
                        edge_tris[key] = {t, -1};
                    else
                        it->second.second = t;
                }
            int checked = 0;
            for (const auto& [edge, tris] : edge_tris) {
                if (tris.second < 0 || checked >= 40) continue;
                const Vec2 m = 0.5 * (mesh->vertices()[edge.first] + mesh->vertices()[edge.second]);
                const double va = f.eval_on_element(tris.first, mesh->point_to_bary(tris.first, m)).value;
                const double vb =
                    f.eval_on_element(tris.second, mesh->point_to_bary(tris.second, m)).value;
                CHECK(va == Catch::Approx(vb).margin(1e-12));
                ++checked;
            }
            CHECK(checked == 40);
        }
    }
}

TEST_CASE("corpus functions") {
    const auto reg = corpus_registry();
    REQUIRE(reg.size() == 5);
    CHECK_THROWS_WITH(corpus_function("nope"), Catch::Matchers::ContainsSubstring("bubble"));

    SECTION("boundary values vanish") {
        Rng rng(17);
        const auto poly = ConvexPolygon::unit_square();
        for (const auto& f : reg) {
            CAPTURE(f.name);
            REQUIRE(f.vanishes_on_boundary);
            for (int i = 0; i < 1000; ++i) {
                const int side = rng.uniform_int(4);
                const double s = rng.uniform();
                const Vec2 a = poly.vertices()[side];
                const Vec2 b = poly.vertices()[(side + 1) % 4];
                CHECK(std::abs(f.value(a + s * (b - a))) <= 1e-10);
            }
        }
    }

    SECTION("gradient matches central differences") {
        Rng rng(19);
        const double h = 1e-5;
        for (const auto& f : reg) {
            CAPTURE(f.name);
            int tested = 0;
            while (tested < 100) {
                const Vec2 p{rng.uniform(0.02, 0.98), rng.uniform(0.02, 0.98)};
                // Keep finite differences meaningful away from gradient blowups.
                if (dist(p, {0.5, 0.5}) < 0.05 || dist(p, {0.3, 0.7}) < 0.05) continue;
                const Vec2 g = f.gradient(p);
                const Vec2 fd{(f.value({p.x + h, p.y}) - f.value({p.x - h, p.y})) / (2 * h),
                              (f.value({p.x, p.y + h}) - f.value({p.x, p.y - h})) / (2 * h)};
                const double scale = std::max(norm(g), 1e-8);
                CHECK(norm(g - fd) / scale <= 1e-6);
                ++tested;
            }
        }
    }

    SECTION("sing06 gradient magnitude near the center") {
        const AnalyticFunction f = corpus_function("sing06");
        // 0.6 r^{-0.4} at r = 1e-3 is ~9.51; the envelope is ~1 there.
        const double mag = norm(f.gradient({0.5 + 1e-3, 0.5}));
        CHECK(mag >= 9.4);
        CHECK(mag <= 9.6);
    }
}

TEST_CASE("fefun text roundtrip") {
    const auto mesh = std::make_shared<Triangulation>(make_mesh(ConvexPolygon::unit_square(), 2));
    const auto space = std::make_shared<FeSpace>(mesh, 2);
    const FeFunction f = random_vh(space, 31);
    std::stringstream ss;
    write_fefun(ss, f);
    const std::string text = ss.str();
    CHECK(text.rfind("FEFUN 2 ", 0) == 0);
    std::stringstream in(text);
    const FeFunction back = read_fefun(in, space);
    for (int i = 0; i < space->n_dofs(); ++i)
        CHECK(back.coefficients()[i] == f.coefficients()[i]);  // 17 digits: bit-exact

    const auto p1 = std::make_shared<FeSpace>(mesh, 1);
    std::stringstream in2(text);
    CHECK_THROWS(read_fefun(in2, p1));
}
