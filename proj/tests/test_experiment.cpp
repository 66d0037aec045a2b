#include <catch2/catch_amalgamated.hpp>

#include <memory>
#include <sstream>

#include "ritzlab/experiment.hpp"
#include "ritzlab/maximal.hpp"

using namespace ritzlab;

namespace {

nlohmann::json base_config() {
    return nlohmann::json{
        {"domain", "square"},
        {"degree", 1},
        {"levels", {1, 2}},
        {"corpus", {"bubble"}},
        {"spaces", {{{"space", "lp"}, {"p", 2}}}},
        {"sample_points", {{"count", 16}, {"seed", 7}}},
        {"solver", {{"rel_tol", 1e-10}}},
        {"output_dir", "unused"}};
}

}  // namespace

TEST_CASE("config parsing and validation") {
    SECTION("full configuration with every space kind") {
        nlohmann::json j = base_config();
        j["spaces"] = nlohmann::json::array(
            {{{"space", "lp"}, {"p", 4}},
             {{"space", "wlp"}, {"p", 2}, {"weight", "power"}, {"beta", 1.0}, {"center", {0.5, 0.5}}},
             {{"space", "lorentz"}, {"p", 2}, {"q", 4}},
             {{"space", "lorentz"}, {"p", 2}, {"q", "inf"}},
             {{"space", "lorentz"}, {"p", 2}, {"q", 4}, {"weight", "power"}, {"beta", 1.0}},
             {{"space", "orlicz"}, {"phi", "exp"}},
             {{"space", "orlicz"}, {"phi", "power"}, {"p", 3}},
             {{"space", "bmo"}, {"centers", 16}, {"radii", 4}},
             {{"space", "varexp"}, {"exponent", "two_plus_x"}, {"weight", "one"}}});
        const ExperimentConfig cfg = ExperimentConfig::from_json(j);
        CHECK(cfg.spaces.size() == 9);
        CHECK(cfg.spaces[1].label() == "wlp_p2_power_beta1");
        CHECK(cfg.spaces[3].label() == "lorentz_p2_qinf");
        CHECK(cfg.spaces[8].label() == "varexp_two_plus_x_one");
        CHECK(cfg.config_hash().size() == 16);
    }

    SECTION("custom polygon domain") {
        nlohmann::json j = base_config();
        j["domain"] = {{0.0, 0.0}, {2.0, 0.0}, {2.0, 1.0}, {0.0, 1.0}};
        const ExperimentConfig cfg = ExperimentConfig::from_json(j);
        CHECK(cfg.domain_name == "custom");
        CHECK(cfg.domain.area() == Catch::Approx(2.0));
    }

    SECTION("invalid configurations are rejected") {
        auto expect_throw = [](nlohmann::json j) {
            CHECK_THROWS_AS(ExperimentConfig::from_json(j), std::invalid_argument);
        };
        nlohmann::json j = base_config();
        j["levels"] = {3, 2};
        expect_throw(j);
        j = base_config();
        j["levels"] = nlohmann::json::array();
        expect_throw(j);
        j = base_config();
        j["degree"] = 4;
        expect_throw(j);
        j = base_config();
        j["green"] = {{"gamma", 0.8}, {"alpha", 0.5}};
        expect_throw(j);
        j = base_config();
        j["green"] = {{"K", 1.5}};
        expect_throw(j);
        j = base_config();
        j["corpus"] = {"not_a_function"};
        expect_throw(j);
        j = base_config();
        j["spaces"] = {{{"space", "lorentz"}, {"p", 1}, {"q", 2}}};
        expect_throw(j);
    }
}

TEST_CASE("csv shape and determinism") {
    nlohmann::json j = base_config();
    const ExperimentConfig cfg = ExperimentConfig::from_json(j);

    const RunResult a = run_stability(cfg);
    const RunResult b = run_stability(cfg);
    const std::string csv_a = a.report.to_csv();
    CHECK(csv_a == b.report.to_csv());

    CHECK(csv_a.rfind("# experiment: stability", 0) == 0);
    std::istringstream lines(csv_a);
    std::string line;
    int data_rows = 0;
    bool seen_header = false;
    while (std::getline(lines, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!seen_header) {
            CHECK(line == "level,h,corpus,space,norm_grad_Rhu,norm_grad_u,ratio");
            seen_header = true;
            continue;
        }
        ++data_rows;
    }
    CHECK(data_rows == 2);  // 2 levels x 1 corpus x 1 space

    // L2 stability of the orthogonal projection: ratio <= 1 and flat.
    CHECK(a.violations.empty());
    for (const auto& row : a.report.rows) {
        const double ratio = std::stod(row.back());
        CHECK(ratio <= 1.0 + 1e-6);
        CHECK(ratio > 0.5);
    }
}

TEST_CASE("pointwise run and the V_h ratio property") {
    nlohmann::json j = base_config();
    j["sample_points"] = {{"count", 12}, {"seed", 3}};
    const ExperimentConfig cfg = ExperimentConfig::from_json(j);
    const RunResult r = run_pointwise(cfg);
    CHECK(r.report.rows.size() == 2);
    for (const auto& row : r.report.rows) {
        CHECK(row[2] == "bubble");
        CHECK(std::stod(row[4]) == 0.0);  // no skipped samples for bubble
        const double rmax = std::stod(row[5]);
        CHECK(rmax > 0.0);
        CHECK(rmax < 3.0);
    }

    // Members of V_h are reproduced by the projection, so the pointwise
    // ratio |grad v_h(z)| / M[grad v_h](z) is at most 1 up to quadrature
    // slack at element-interior points.
    const auto mesh = std::make_shared<Triangulation>(make_mesh(cfg.domain, 1));
    const auto space = std::make_shared<FeSpace>(mesh, 1);
    Rng rng(5);
    std::vector<double> coeffs(space->n_dofs(), 0.0);
    for (int i = 0; i < space->n_dofs(); ++i)
        if (space->interior_dof_mask()[i]) coeffs[i] = rng.uniform(-1.0, 1.0);
    const auto vh = std::make_shared<FeFunction>(space, coeffs);
    const PiecewiseField grad_vh = PiecewiseField::fe_gradient(vh);
    const RadiusGrid grid = RadiusGrid::standard(*mesh);
    for (int t = 0; t < mesh->n_triangles(); t += 3) {
        const Vec2 z = mesh->tri_centroid(t);
        const double m = maximal_value(grad_vh, z, grid);
        if (m < 1e-14) continue;
        CHECK(norm(vh->eval(z).gradient) / m <= 1.0 + 1e-6);
    }
}

TEST_CASE("green run in working=fine test mode") {
    nlohmann::json j = base_config();
    j["levels"] = {1};
    j["green"] = {{"K", 4.0}, {"gamma", 0.25}, {"alpha", 0.5}, {"fine_offset", 0},
                  {"max_z_samples", 6}, {"conv_points", 3}, {"local_error_points", 2}};
    j["corpus"] = {"bubble"};
    const ExperimentConfig cfg = ExperimentConfig::from_json(j);
    const RunResult r = run_green(cfg);
    REQUIRE(r.report.rows.size() == 1);
    const auto& row = r.report.rows[0];
    CHECK(row[3] == "0");  // Gh column exactly zero
    for (const auto& v : r.violations) CHECK(v.find("Gh nonzero") == std::string::npos);
}

TEST_CASE("experiment files are written and bit-identical across runs") {
    nlohmann::json j = base_config();
    const ExperimentConfig cfg = ExperimentConfig::from_json(j);
    const auto dir1 = std::filesystem::temp_directory_path() / "ritzlab_test_run1";
    const auto dir2 = std::filesystem::temp_directory_path() / "ritzlab_test_run2";
    std::filesystem::remove_all(dir1);
    std::filesystem::remove_all(dir2);
    run_experiments(cfg, dir1.string(), false, true, false);
    run_experiments(cfg, dir2.string(), false, true, false);
    std::ifstream f1(dir1 / "stability.csv"), f2(dir2 / "stability.csv");
    REQUIRE(f1.good());
    REQUIRE(f2.good());
    std::stringstream s1, s2;
    s1 << f1.rdbuf();
    s2 << f2.rdbuf();
    CHECK(s1.str() == s2.str());
    CHECK(!s1.str().empty());
}
