#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <memory>

#include "ritzlab/corpus.hpp"
#include "ritzlab/green.hpp"
#include "ritzlab/norms.hpp"
#include "ritzlab/sampling.hpp"

using namespace ritzlab;

namespace {

std::shared_ptr<const Triangulation> square_mesh(int level) {
    return std::make_shared<Triangulation>(make_mesh(ConvexPolygon::unit_square(), level));
}

std::shared_ptr<const Triangulation> refined(const std::shared_ptr<const Triangulation>& mesh,
                                             int offset) {
    auto m = mesh;
    for (int i = 0; i < offset; ++i)
        m = std::make_shared<Triangulation>(refine_uniform(*m));
    return m;
}

FeFunction random_vh(std::shared_ptr<const FeSpace> space, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> c(space->n_dofs(), 0.0);
    for (int i = 0; i < space->n_dofs(); ++i)
        if (space->interior_dof_mask()[i]) c[i] = rng.uniform(-1.0, 1.0);
    return FeFunction(std::move(space), std::move(c));
}

}  // namespace

TEST_CASE("regularized delta moments") {
    for (int level : {0, 1, 2}) {
        const auto mesh = square_mesh(level);
        for (int k : {1, 2}) {
            Rng rng(100 + level + k);
            for (int rep = 0; rep < 20; ++rep) {
                const int t = rng.uniform_int(mesh->n_triangles());
                const std::array<double, 3> b{0.5 - 0.2 * rng.uniform(),
                                              0.3 + 0.1 * rng.uniform(), 0.0};
                const std::array<double, 3> bary{b[0], b[1], 1.0 - b[0] - b[1]};
                const Vec2 z = mesh->bary_to_point(t, bary);
                const RegularizedDelta delta = build_delta(mesh, k, z);
                CAPTURE(level, k, rep);
                CHECK(delta.host_element() == t);
                CHECK(delta_moment_residual(delta) <= 1e-10);
            }
        }
    }
}

TEST_CASE("delta rejects boundary points and scales like h^{-2}") {
    const auto mesh = square_mesh(1);
    // Midpoint of an element edge lies on the boundary of two elements.
    const auto& tri = mesh->triangles()[2];
    const Vec2 edge_mid = 0.5 * (mesh->vertices()[tri[0]] + mesh->vertices()[tri[1]]);
    CHECK_THROWS_AS(build_delta(mesh, 1, edge_mid), std::invalid_argument);
    CHECK_THROWS_AS(build_delta(mesh, 1, {5.0, 5.0}), std::invalid_argument);

    // Same barycentric point in the corner child after one refinement: the
    // sup of delta grows by the area factor 4.
    const std::array<double, 3> bary{0.41, 0.33, 0.26};
    const auto fine = refined(mesh, 1);
    for (int k : {1, 2}) {
        const int parent = 5;
        const RegularizedDelta coarse_delta =
            build_delta(mesh, k, mesh->bary_to_point(parent, bary));
        const RegularizedDelta fine_delta =
            build_delta(fine, k, fine->bary_to_point(4 * parent, bary));
        const double ratio = fine_delta.sup_estimate() / coarse_delta.sup_estimate();
        CHECK(ratio == Catch::Approx(4.0).epsilon(0.05));
    }
}

TEST_CASE("regularized green solve") {
    const auto mesh = square_mesh(1);
    const auto fine = refined(mesh, 1);
    const auto fine_space = std::make_shared<FeSpace>(fine, 1);
    const Vec2 z = mesh->bary_to_point(3, {0.4, 0.35, 0.25});
    const RegularizedDelta delta = build_delta(mesh, 1, z);

    SECTION("rhs supported in the host element") {
        const auto rhs = detail::green_rhs(*fine_space, delta, 1);
        // DOFs of elements outside the host's descendants must have zero rhs.
        std::vector<bool> touched(fine_space->n_dofs(), false);
        for (int e = 4 * delta.host_element(); e < 4 * delta.host_element() + 4; ++e)
            for (int i = 0; i < 3; ++i) touched[fine_space->element_dofs(e)[i]] = true;
        for (int d = 0; d < fine_space->n_dofs(); ++d) {
            const int gi = fine_space->interior_index(d);
            if (gi >= 0 && !touched[d]) CHECK(rhs[gi] == 0.0);
        }
    }

    SECTION("component validation") {
        CHECK_THROWS_AS(detail::green_rhs(*fine_space, delta, 3), std::invalid_argument);
    }

    SECTION("sign flip of the data flips the solution exactly") {
        const SparseSpdMatrix A = assemble_stiffness(*fine_space);
        auto b = detail::green_rhs(*fine_space, delta, 2);
        const CgResult plus = solve_spd(A, b, 1e-10);
        for (double& v : b) v = -v;
        const CgResult minus = solve_spd(A, b, 1e-10);
        for (int i = 0; i < A.dimension(); ++i) CHECK(minus.x[i] == -plus.x[i]);
    }

    SECTION("pointwise representation of the discrete derivative") {
        // For v_h in the working space (subset of the fine space),
        // (grad g_z, grad v_h) equals d_l v_h(z) exactly by the moment
        // property; discretization errors cancel by Galerkin orthogonality.
        const FeFunction g = solve_regularized_green(fine_space, delta, 1, 1e-13);
        const auto wspace = std::make_shared<FeSpace>(mesh, 1);
        const FeFunction vh = random_vh(wspace, 77);
        // Interpolate v_h onto the fine space (exact by nestedness).
        const FeFunction vfine = interpolate_nodal(
            fine_space, analytic_from_fe(std::make_shared<FeFunction>(vh)));
        // Energy product via fine-mesh quadrature.
        double energy = 0.0;
        const QuadratureRule& rule = QuadratureRule::for_degree(2);
        for (int e = 0; e < fine->n_triangles(); ++e) {
            const double area = fine->tri_area(e);
            for (std::size_t q = 0; q < rule.size(); ++q)
                energy += rule.weights[q] * area *
                          dot(g.eval_on_element(e, rule.points[q]).gradient,
                              vfine.eval_on_element(e, rule.points[q]).gradient);
        }
        CHECK(energy == Catch::Approx(vh.eval(z).gradient.x).margin(1e-8));
    }
}

TEST_CASE("phi weight family") {
    const auto mesh = square_mesh(2);
    const double h = mesh->mesh_size_h();
    const Vec2 z{0.52, 0.47};
    const PhiWeight w = make_phi_weight(*mesh, z, h, 4.0, 0.25, 0.5);

    SECTION("parameter validation") {
        CHECK_THROWS_AS(make_phi_weight(*mesh, z, h, 2.0, 0.25, 0.5), std::invalid_argument);
        CHECK_THROWS_AS(make_phi_weight(*mesh, z, h, 4.0, 0.6, 0.5), std::invalid_argument);
        CHECK_THROWS_AS(make_phi_weight(*mesh, z, 0.0, 4.0, 0.25, 0.5), std::invalid_argument);
    }

    SECTION("unit mass against an independent finer quadrature") {
        const auto fine = refined(mesh, 2);
        const double mass = detail::integrate_refined_near(
            *fine, [&](Vec2 x) { return phi_eval(w, x); }, z, w.K * w.epsilon, 12);
        CHECK(mass == Catch::Approx(1.0).margin(1e-8));
    }

    SECTION("radially decreasing with the maximum at z") {
        const double at_z = phi_eval(w, z);
        Rng rng(21);
        for (int i = 0; i < 200; ++i) {
            const Vec2 x{rng.uniform(), rng.uniform()};
            CHECK(phi_eval(w, x) <= at_z * (1.0 + 1e-12));
        }
        CHECK(phi_eval(w, z + Vec2{0.1, 0}) > phi_eval(w, z + Vec2{0.2, 0}));
    }

    SECTION("near-constant on annuli") {
        const AnnulusDecomposition dec(z, h, 4.0, mesh->polygon());
        const double bound = std::pow(2.0, 2.0 + w.gamma) * 1.05;
        Rng rng(22);
        for (int j = 1; j <= dec.j_max; ++j) {
            double mx = 0.0, mn = kInf;
            int found = 0;
            for (int i = 0; i < 4000 && found < 200; ++i) {
                const Vec2 x{rng.uniform(), rng.uniform()};
                if (!dec.in_annulus(j, x)) continue;
                const double v = phi_eval(w, x);
                mx = std::max(mx, v);
                mn = std::min(mn, v);
                ++found;
            }
            if (found < 10) continue;
            CAPTURE(j, found);
            CHECK(mx / mn <= bound);
        }
    }
}

TEST_CASE("annulus decomposition") {
    const auto mesh = square_mesh(2);
    const AnnulusDecomposition dec({0.3, 0.4}, mesh->mesh_size_h(), 4.0, mesh->polygon());

    SECTION("radii double exactly") {
        for (int j = 0; j + 1 <= dec.j_max; ++j) CHECK(dec.d(j + 1) == 2.0 * dec.d(j));
        CHECK(dec.d(-1) == 0.0);
    }

    SECTION("annuli partition the domain") {
        Rng rng(31);
        for (int i = 0; i < 1000; ++i) {
            const Vec2 x{rng.uniform(), rng.uniform()};
            int hits = 0;
            for (int j = 0; j <= dec.j_max; ++j)
                if (dec.in_annulus(j, x)) ++hits;
            CHECK(hits == 1);
            // Membership is consistent with the distance.
            const double r = dist(x, {0.3, 0.4});
            for (int j = 0; j <= dec.j_max; ++j)
                CHECK(dec.in_annulus(j, x) == (r >= dec.d(j - 1) && r < dec.d(j)));
        }
    }

    SECTION("neighborhood of a radial set keeps a distance comparable to d_j") {
        // Needs several annuli inside the domain, so use a finer mesh.
        const auto fine = std::make_shared<Triangulation>(
            make_mesh(ConvexPolygon::unit_square(), 6));
        const Vec2 z{0.3, 0.4};
        const AnnulusDecomposition dfine(z, fine->mesh_size_h(), 4.0, fine->polygon());
        const int j = 3;
        REQUIRE(dfine.j_max >= j + 1);
        // Elements meeting the complement of A_j^{++} stay a positive
        // distance (at most d_j) away from the band of A_j^+.
        const double lo = dfine.d(j - 3), hi = dfine.d(j + 2);
        const double plus_lo = dfine.d(j - 2), plus_hi = dfine.d(j + 1);
        double min_gap = kInf;
        for (int t = 0; t < fine->n_triangles(); ++t) {
            const auto [dmin, dmax] = fine->tri_distance_interval(t, z);
            const bool meets_complement = dmin < lo || dmax > hi;
            if (!meets_complement) continue;
            if (dmax < plus_lo)
                min_gap = std::min(min_gap, plus_lo - dmax);
            else if (dmin > plus_hi)
                min_gap = std::min(min_gap, dmin - plus_hi);
            else
                min_gap = 0.0;
        }
        CHECK(min_gap > 0.0);
        CHECK(min_gap <= dfine.d(j));
    }
}

TEST_CASE("holder estimates") {
    const auto mesh = square_mesh(1);
    const auto inside = [&](Vec2 x) { return mesh->polygon().contains(x); };

    SECTION("constants give zero") {
        const PiecewiseField f = PiecewiseField::scalar([](Vec2) { return 4.2; }, mesh);
        CHECK(holder_estimate(f, inside, 0.5, 1000) == 0.0);
    }

    SECTION("affine field with alpha = 1 approaches its Lipschitz constant") {
        const PiecewiseField f = PiecewiseField::scalar([](Vec2 p) { return p.x; }, mesh);
        const double est = holder_estimate(f, inside, 1.0, 10000);
        CHECK(est >= 0.9);
        CHECK(est <= 1.0 + 1e-9);
    }

    SECTION("square root cusp with alpha = 1/2") {
        const Vec2 c{0.3, 0.4};
        const PiecewiseField f =
            PiecewiseField::scalar([c](Vec2 p) { return std::sqrt(dist(p, c)); }, mesh);
        const auto region = [&](Vec2 x) { return dist(x, c) < 0.25; };
        const double est = holder_estimate(f, region, 0.5, 10000);
        CHECK(est >= 0.9);
        CHECK(est <= 1.0 + 1e-9);
    }

    SECTION("empty region raises") {
        const PiecewiseField f = PiecewiseField::domain_indicator(mesh);
        CHECK_THROWS_AS(holder_estimate(f, [](Vec2) { return false; }, 0.5, 100),
                        std::runtime_error);
    }
}

TEST_CASE("Gh and the nested projection") {
    const auto mesh = square_mesh(2);
    const auto wspace = std::make_shared<FeSpace>(mesh, 1);

    SECTION("projection through the nesting returns coarse members") {
        const auto fine = refined(mesh, 2);
        const auto fspace = std::make_shared<FeSpace>(fine, 1);
        const auto vh = std::make_shared<FeFunction>(random_vh(wspace, 51));
        const FeFunction vfine = interpolate_nodal(fspace, analytic_from_fe(vh));
        const FeFunction back = project_to_working(wspace, vfine, 1e-13);
        for (int i = 0; i < wspace->n_dofs(); ++i)
            CHECK(back.coefficients()[i] == Catch::Approx(vh->coefficients()[i]).margin(1e-9));
    }

    SECTION("working = fine gives exactly zero") {
        const auto zs = element_interior_samples(*mesh, 8, 0);
        const auto xs = barycenter_samples(*mesh);
        const GhResult gh = compute_Gh(wspace, wspace, 4.0, 0.25, zs, xs, 1, 1e-10);
        CHECK(gh.value == 0.0);
        CHECK(gh.n_z == 8);
    }

    SECTION("offset-1 estimate is positive and finite") {
        const auto fine = refined(mesh, 1);
        const auto fspace = std::make_shared<FeSpace>(fine, 1);
        const auto zs = element_interior_samples(*mesh, 6, 0);
        const auto xs = barycenter_samples(*fine);
        const GhResult gh = compute_Gh(wspace, fspace, 4.0, 0.25, zs, xs, 1, 1e-10);
        CHECK(gh.value > 0.0);
        CHECK(std::isfinite(gh.value));
        CHECK(gh.grad_sup_h2 > 0.0);
    }
}

TEST_CASE("convolution check") {
    const auto mesh = square_mesh(2);

    SECTION("unit field at small epsilon gives ratio near one") {
        const PiecewiseField one = PiecewiseField::domain_indicator(mesh);
        const PhiWeight w = make_phi_weight(*mesh, {0.5, 0.5}, 0.01, 4.0, 0.25, 0.5);
        const ConvolutionCheck c = convolution_check(one, w, {0.5, 0.5});
        CHECK(c.weighted_l1 == Catch::Approx(1.0).epsilon(1e-6));
        CHECK(c.ratio == Catch::Approx(1.0).epsilon(0.10));
    }

    SECTION("zero field gives zero numerator") {
        const PiecewiseField zero = PiecewiseField::scalar([](Vec2) { return 0.0; }, mesh);
        const PhiWeight w = make_phi_weight(*mesh, {0.4, 0.6}, 0.05, 4.0, 0.25, 0.5);
        const ConvolutionCheck c = convolution_check(zero, w, {0.4, 0.6});
        CHECK(c.weighted_l1 == 0.0);
        CHECK(c.ratio == 0.0);
    }
}

TEST_CASE("local error check") {
    const auto mesh = square_mesh(2);
    const auto space = std::make_shared<FeSpace>(mesh, 1);
    const double h = mesh->mesh_size_h();

    SECTION("members of V_h give zero left-hand side and interpolation terms") {
        const auto vh = std::make_shared<FeFunction>(random_vh(space, 61));
        const AnalyticFunction w = analytic_from_fe(vh);
        const FeFunction rhw = ritz_project(space, w, 1e-12);
        const FeFunction ihw = interpolate_nodal(space, w);
        const Vec2 z = mesh->bary_to_point(10, {0.41, 0.3, 0.29});
        const LocalErrorReport rep = local_error_check(rhw, ihw, w.value, w.gradient, z, 4 * h);
        CHECK(rep.lhs <= 1e-8);
        CHECK(rep.grad_inf <= 1e-9);
        CHECK(rep.val_inf <= 1e-9);
    }

    SECTION("sup-norm domains grow with d") {
        const AnalyticFunction u = corpus_function("sine");
        const FeFunction rhw = ritz_project(space, u, 1e-11);
        const FeFunction ihw = interpolate_nodal(space, u);
        const Vec2 z{0.52, 0.47};
        const LocalErrorReport r1 = local_error_check(rhw, ihw, u.value, u.gradient, z, 4 * h);
        const LocalErrorReport r2 = local_error_check(rhw, ihw, u.value, u.gradient, z, 8 * h);
        CHECK(r2.grad_inf >= r1.grad_inf - 1e-14);
        CHECK(r2.val_inf * 8 * h >= r1.val_inf * 4 * h - 1e-14);
        CHECK(r1.rhs > 0.0);
        CHECK(r1.ratio < 10.0);
    }
}

TEST_CASE("annuli diagnostics table") {
    const auto mesh = square_mesh(2);
    const auto fine = refined(mesh, 2);
    const auto fspace = std::make_shared<FeSpace>(fine, 1);
    const Vec2 z = mesh->bary_to_point(20, {0.4, 0.35, 0.25});
    const RegularizedDelta delta = build_delta(mesh, 1, z);
    const auto g = std::make_shared<FeFunction>(solve_regularized_green(fspace, delta, 1, 1e-11));
    const AnnulusDecomposition dec(z, mesh->mesh_size_h(), 4.0, mesh->polygon());
    const auto rows =
        annuli_diagnostics(dec, PiecewiseField::fe_gradient(g), 0.5, 1500);
    REQUIRE(!rows.empty());
    for (std::size_t i = 0; i + 1 < rows.size(); ++i)
        CHECK(rows[i + 1].d_j == 2.0 * rows[i].d_j);
    for (const auto& r : rows) {
        CHECK(r.lemma_applies == (r.j >= 3));
        CHECK(r.holder >= 0.0);
        CHECK(std::isfinite(r.normalized));
    }
}
