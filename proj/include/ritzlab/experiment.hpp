#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ritzlab/corpus.hpp"
#include "ritzlab/green.hpp"
#include "ritzlab/maximal.hpp"
#include "ritzlab/norms.hpp"
#include "ritzlab/parallel.hpp"
#include "ritzlab/ritz.hpp"
#include "ritzlab/sampling.hpp"

namespace ritzlab {

struct SampleSpec {
    int count = 200;
    std::uint64_t seed = 7;
};

struct GreenConfig {
    double K = 4.0;
    double gamma = 0.25;
    double alpha = 0.5;
    int k0 = 4;
    int fine_offset = 2;
    int component = 1;
    int max_z_samples = 200;
    int conv_points = 50;
    int local_error_points = 5;
};

struct SolverConfig {
    double rel_tol = 1e-10;
};

/// Batch experiment description, parsed from a JSON document.
struct ExperimentConfig {
    std::string domain_name = "square";
    ConvexPolygon domain = ConvexPolygon::unit_square();
    int degree = 1;
    std::vector<int> levels{2, 3, 4, 5};
    std::vector<std::string> corpus{"bubble", "sine", "sing06", "sing02", "osc"};
    std::vector<SpaceSpec> spaces;
    SampleSpec sample_points;
    GreenConfig green;
    SolverConfig solver;
    std::string output_dir = "out";
    nlohmann::json raw;  // normalized source document, for hashing

    void validate() const {
        if (levels.empty()) throw std::invalid_argument("config: levels must be nonempty");
        if (!std::is_sorted(levels.begin(), levels.end()) ||
            std::adjacent_find(levels.begin(), levels.end()) != levels.end())
            throw std::invalid_argument("config: levels must be strictly ascending");
        if (levels.front() < 0) throw std::invalid_argument("config: negative level");
        if (degree != 1 && degree != 2) throw std::invalid_argument("config: degree in {1,2}");
        if (!(green.gamma > 0.0 && green.gamma < green.alpha))
            throw std::invalid_argument("config: need 0 < gamma < alpha");
        if (!(green.K > 2.0)) throw std::invalid_argument("config: need K > 2");
        if (green.fine_offset < 0) throw std::invalid_argument("config: fine_offset >= 0");
        if (sample_points.count < 1) throw std::invalid_argument("config: sample count >= 1");
        if (!(solver.rel_tol > 0.0)) throw std::invalid_argument("config: rel_tol > 0");
        for (const auto& s : spaces) s.validate();
    }

    static ExperimentConfig from_json(const nlohmann::json& j);
    static ExperimentConfig from_file(const std::string& path) {
        std::ifstream f(path);
        if (!f) throw std::invalid_argument("config: cannot open " + path);
        nlohmann::json j;
        f >> j;
        return from_json(j);
    }

    std::string config_hash() const {
        // FNV-1a over the normalized (key-sorted) dump.
        std::uint64_t h = 1469598103934665603ULL;
        for (unsigned char c : raw.dump()) {
            h ^= c;
            h *= 1099511628211ULL;
        }
        char buf[24];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
        return buf;
    }
};

namespace detail {

inline Weight weight_from_json(const nlohmann::json& j) {
    const std::string name = j.value("weight", "one");
    if (name == "one") return Weight::one();
    if (name == "power") {
        const double beta = j.at("beta").get<double>();
        Vec2 c{0.5, 0.5};
        if (j.contains("center")) {
            c.x = j["center"].at(0).get<double>();
            c.y = j["center"].at(1).get<double>();
        }
        return Weight::power(beta, c);
    }
    throw std::invalid_argument("config: unknown weight '" + name + "' (one, power)");
}

inline double exponent_from_json(const nlohmann::json& j, const char* key, double dflt) {
    if (!j.contains(key)) return dflt;
    if (j[key].is_string()) {
        if (j[key] == "inf") return kInf;
        throw std::invalid_argument(std::string("config: bad value for ") + key);
    }
    return j[key].get<double>();
}

}  // namespace detail

inline SpaceSpec space_spec_from_json(const nlohmann::json& j) {
    const std::string kind = j.at("space").get<std::string>();
    SpaceSpec s;
    if (kind == "lp") {
        s.kind = SpaceSpec::Kind::Lp;
        s.p = detail::exponent_from_json(j, "p", 2.0);
    } else if (kind == "wlp") {
        s.kind = SpaceSpec::Kind::WeightedLp;
        s.p = detail::exponent_from_json(j, "p", 2.0);
        s.weight = detail::weight_from_json(j);
    } else if (kind == "lorentz") {
        s.kind = SpaceSpec::Kind::Lorentz;
        s.p = detail::exponent_from_json(j, "p", 2.0);
        s.q = detail::exponent_from_json(j, "q", s.p);
        if (j.contains("weight")) s.weight = detail::weight_from_json(j);
    } else if (kind == "orlicz") {
        s.kind = SpaceSpec::Kind::Orlicz;
        const std::string phi = j.at("phi").get<std::string>();
        s.phi = (phi == "power") ? OrliczFunction::power(j.at("p").get<double>())
                                 : OrliczFunction::named(phi);
    } else if (kind == "bmo") {
        s.kind = SpaceSpec::Kind::Bmo;
        s.bmo_centers = j.value("centers", 128);
        s.bmo_radii = j.value("radii", 12);
    } else if (kind == "varexp") {
        s.kind = SpaceSpec::Kind::VarExp;
        s.exponent = VariableExponent::named(j.at("exponent").get<std::string>());
        s.weight = detail::weight_from_json(j);
    } else {
        throw std::invalid_argument("config: unknown space kind '" + kind + "'");
    }
    s.validate();
    return s;
}

inline ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
    ExperimentConfig c;
    c.raw = j;
    if (j.contains("domain")) {
        if (j["domain"].is_string()) {
            c.domain_name = j["domain"].get<std::string>();
            c.domain = ConvexPolygon::named(c.domain_name);
        } else {
            std::vector<Vec2> vs;
            for (const auto& v : j["domain"]) vs.push_back({v.at(0).get<double>(), v.at(1).get<double>()});
            c.domain = ConvexPolygon(vs);
            c.domain_name = "custom";
        }
    }
    c.degree = j.value("degree", 1);
    if (j.contains("levels")) c.levels = j["levels"].get<std::vector<int>>();
    if (j.contains("corpus")) c.corpus = j["corpus"].get<std::vector<std::string>>();
    if (j.contains("spaces"))
        for (const auto& sj : j["spaces"]) c.spaces.push_back(space_spec_from_json(sj));
    if (j.contains("sample_points")) {
        c.sample_points.count = j["sample_points"].value("count", 200);
        c.sample_points.seed = j["sample_points"].value("seed", std::uint64_t{7});
    }
    if (j.contains("green")) {
        const auto& g = j["green"];
        c.green.K = g.value("K", 4.0);
        c.green.gamma = g.value("gamma", 0.25);
        c.green.alpha = g.value("alpha", 0.5);
        c.green.k0 = g.value("k0", 4);
        c.green.fine_offset = g.value("fine_offset", 2);
        c.green.component = g.value("component", 1);
        c.green.max_z_samples = g.value("max_z_samples", 200);
        c.green.conv_points = g.value("conv_points", 50);
        c.green.local_error_points = g.value("local_error_points", 5);
    }
    if (j.contains("solver")) c.solver.rel_tol = j["solver"].value("rel_tol", 1e-10);
    if (j.contains("output_dir")) c.output_dir = j["output_dir"].get<std::string>();
    c.validate();
    // Resolve corpus names early so unknown names fail before any work.
    for (const auto& name : c.corpus) corpus_function(name);
    return c;
}

// --- Reports -----------------------------------------------------------------

inline std::string fmt12(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

/// Per-level table written as CSV: '#'-prefixed metadata, then a header row,
/// then comma-separated values with 12 significant digits.
struct ExperimentReport {
    std::vector<std::pair<std::string, std::string>> meta;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    std::string to_csv() const {
        std::string out;
        for (const auto& [k, v] : meta) out += "# " + k + ": " + v + "\n";
        for (std::size_t i = 0; i < columns.size(); ++i)
            out += (i ? "," : "") + columns[i];
        out += "\n";
        for (const auto& r : rows) {
            for (std::size_t i = 0; i < r.size(); ++i) out += (i ? "," : "") + r[i];
            out += "\n";
        }
        return out;
    }

    void write(const std::string& path) const {
        std::ofstream f(path, std::ios::binary);
        if (!f) throw std::runtime_error("report: cannot open " + path);
        f << to_csv();
    }
};

struct RunResult {
    ExperimentReport report;
    std::vector<std::string> violations;
    bool had_errors = false;
};

namespace detail {

inline void standard_meta(ExperimentReport& rep, const ExperimentConfig& cfg,
                          const std::string& experiment) {
    rep.meta.push_back({"experiment", experiment});
    rep.meta.push_back({"config_hash", cfg.config_hash()});
    rep.meta.push_back({"domain", cfg.domain_name});
    rep.meta.push_back({"degree", std::to_string(cfg.degree)});
}

/// Shared mesh/space pyramid for one run.
struct Pyramid {
    std::vector<std::shared_ptr<const Triangulation>> meshes;   // by position in cfg.levels
    std::vector<std::shared_ptr<const FeSpace>> spaces;

    Pyramid(const ExperimentConfig& cfg, int extra_levels = 0) {
        const int top = cfg.levels.back() + extra_levels;
        std::vector<std::shared_ptr<const Triangulation>> all(top + 1);
        all[0] = std::make_shared<Triangulation>(triangulate_polygon(cfg.domain));
        for (int l = 1; l <= top; ++l)
            all[l] = std::make_shared<Triangulation>(refine_uniform(*all[l - 1]));
        by_level = all;
        for (int l : cfg.levels) {
            meshes.push_back(all[l]);
            spaces.push_back(std::make_shared<FeSpace>(all[l], cfg.degree));
        }
    }

    std::vector<std::shared_ptr<const Triangulation>> by_level;
};

inline double rel_change(double a, double b) {
    return std::abs(b - a) / std::max(std::abs(a), 1e-300);
}

}  // namespace detail

// --- Pointwise ratio experiment (the main theorem probe) -----------------------

/// For every level and corpus function: ratio statistics of
/// |grad R_h u(z)| / M[grad u](z) over a fixed panel of element-interior
/// sample points. The panel is drawn once on the coarsest requested level
/// (points stay element-interior under dyadic refinement), so the maximal
/// function values are shared across levels and the level trend isolates the
/// h-dependence. Probe: the per-corpus max ratio must vary by < 20% between
/// successive levels and stay below 3x its first-level value.
inline RunResult run_pointwise(const ExperimentConfig& cfg) {
    cfg.validate();
    RunResult res;
    detail::standard_meta(res.report, cfg, "pointwise");
    res.report.meta.push_back({"sample_count", std::to_string(cfg.sample_points.count)});
    res.report.meta.push_back({"sample_seed", std::to_string(cfg.sample_points.seed)});
    res.report.columns = {"level",     "h",          "corpus",    "n_samples", "n_skipped",
                          "ratio_max", "ratio_mean", "ratio_q50", "ratio_q90"};

    detail::Pyramid pyr(cfg);
    const Triangulation& base = *pyr.meshes.front();
    const Triangulation& finest = *pyr.meshes.back();

    // Sample panel: element-interior quadrature points of the coarsest level.
    std::vector<Vec2> zs;
    {
        Rng rng(cfg.sample_points.seed);
        const QuadratureRule& rule = QuadratureRule::for_degree(6);
        for (int i = 0; i < cfg.sample_points.count; ++i) {
            const int t = rng.uniform_int(base.n_triangles());
            const auto& b = rule.points[rng.uniform_int(static_cast<int>(rule.size()))];
            zs.push_back(base.bary_to_point(t, b));
        }
    }
    const RadiusGrid grid{finest.mesh_size_h() / 8.0, 2.0 * cfg.domain.diameter(), 1.05};

    std::map<std::string, std::vector<double>> max_per_level;
    for (const std::string& name : cfg.corpus) {
        const AnalyticFunction u = corpus_function(name);
        const PiecewiseField grad_u = PiecewiseField::analytic_gradient(u, pyr.meshes.front());
        std::vector<double> maximal(zs.size());
        parallel_for(zs.size(), [&](std::size_t i) { maximal[i] = maximal_value(grad_u, zs[i], grid); });

        for (std::size_t li = 0; li < cfg.levels.size(); ++li) {
            std::vector<std::string> row{std::to_string(cfg.levels[li]),
                                         fmt12(pyr.meshes[li]->mesh_size_h()), name};
            try {
                const FeFunction rhu = ritz_project(pyr.spaces[li], u, cfg.solver.rel_tol);
                std::vector<double> ratios;
                int skipped = 0;
                for (std::size_t i = 0; i < zs.size(); ++i) {
                    if (maximal[i] < 1e-14) {
                        ++skipped;
                        continue;
                    }
                    ratios.push_back(norm(rhu.eval(zs[i]).gradient) / maximal[i]);
                }
                std::sort(ratios.begin(), ratios.end());
                const double rmax = ratios.empty() ? 0.0 : ratios.back();
                const double mean = ratios.empty()
                                        ? 0.0
                                        : std::accumulate(ratios.begin(), ratios.end(), 0.0) /
                                              ratios.size();
                auto quantile = [&](double q) {
                    if (ratios.empty()) return 0.0;
                    return ratios[std::min(ratios.size() - 1,
                                           static_cast<std::size_t>(q * ratios.size()))];
                };
                row.insert(row.end(),
                           {std::to_string(ratios.size()), std::to_string(skipped), fmt12(rmax),
                            fmt12(mean), fmt12(quantile(0.5)), fmt12(quantile(0.9))});
                max_per_level[name].push_back(rmax);
            } catch (const SolverError& e) {
                row.insert(row.end(), {"0", "0", "error", e.what(), "", ""});
                res.had_errors = true;
                res.violations.push_back("pointwise solver error, corpus " + name + " level " +
                                         std::to_string(cfg.levels[li]) + ": " + e.what());
            }
            res.report.rows.push_back(row);
        }
    }

    for (const auto& [name, maxima] : max_per_level) {
        for (std::size_t i = 1; i < maxima.size(); ++i) {
            if (detail::rel_change(maxima[i - 1], maxima[i]) >= 0.20)
                res.violations.push_back(
                    "pointwise max-ratio varies >= 20% for " + name + " between levels " +
                    std::to_string(cfg.levels[i - 1]) + " and " + std::to_string(cfg.levels[i]));
            if (maxima[i] > 3.0 * maxima[0])
                res.violations.push_back("pointwise max-ratio exceeds 3x first level for " + name);
        }
    }
    return res;
}

// --- Norm stability experiment (the corollary probes) ----------------------------

/// Per level, corpus function, and space descriptor: ||grad R_h u||_X,
/// ||grad u||_X, and their ratio, with both sides computed by the same
/// sampled estimator. Probe: < 20% ratio variation between successive levels.
inline RunResult run_stability(const ExperimentConfig& cfg) {
    cfg.validate();
    RunResult res;
    detail::standard_meta(res.report, cfg, "stability");
    res.report.columns = {"level", "h", "corpus", "space", "norm_grad_Rhu", "norm_grad_u",
                          "ratio"};
    if (cfg.spaces.empty())
        throw std::invalid_argument("run_stability: config has no spaces");

    detail::Pyramid pyr(cfg);
    std::map<std::pair<std::string, std::string>, std::vector<double>> ratio_track;
    for (std::size_t li = 0; li < cfg.levels.size(); ++li) {
        for (const std::string& name : cfg.corpus) {
            const AnalyticFunction u = corpus_function(name);
            try {
                const auto rhu = std::make_shared<FeFunction>(
                    ritz_project(pyr.spaces[li], u, cfg.solver.rel_tol));
                const PiecewiseField f_num = PiecewiseField::fe_gradient(rhu);
                const PiecewiseField f_den =
                    PiecewiseField::analytic_gradient(u, pyr.meshes[li]);
                const FieldSamples s_num = sample_field(f_num);
                const FieldSamples s_den = sample_field(f_den);
                for (const SpaceSpec& spec : cfg.spaces) {
                    const double nn = space_norm_from_samples(f_num, s_num, spec);
                    const double nd = space_norm_from_samples(f_den, s_den, spec);
                    const double ratio = nd > 0.0 ? nn / nd : 0.0;
                    res.report.rows.push_back({std::to_string(cfg.levels[li]),
                                               fmt12(pyr.meshes[li]->mesh_size_h()), name,
                                               spec.label(), fmt12(nn), fmt12(nd), fmt12(ratio)});
                    ratio_track[{name, spec.label()}].push_back(ratio);
                }
            } catch (const SolverError& e) {
                res.report.rows.push_back({std::to_string(cfg.levels[li]),
                                           fmt12(pyr.meshes[li]->mesh_size_h()), name, "error",
                                           e.what(), "", ""});
                res.had_errors = true;
                res.violations.push_back("stability solver error, corpus " + name + " level " +
                                         std::to_string(cfg.levels[li]));
            }
        }
    }
    for (const auto& [key, ratios] : ratio_track)
        for (std::size_t i = 1; i < ratios.size(); ++i)
            if (detail::rel_change(ratios[i - 1], ratios[i]) >= 0.20)
                res.violations.push_back("stability ratio varies >= 20% for corpus " + key.first +
                                         ", space " + key.second);
    return res;
}

// --- Green's function diagnostics --------------------------------------------------

/// Per working level: the sampled G_h (eps = h), the ||grad g_z||_inf h^2
/// scaling column, the worst convolution-estimate ratio over the corpus, and
/// the worst local-error ratio. Probes: G_h within a factor 2 across levels
/// (and 0 when fine_offset = 0), convolution flat to 10%, scaling within a
/// factor 3, local-error constant exceeded by < 20% after the first level.
inline RunResult run_green(const ExperimentConfig& cfg) {
    cfg.validate();
    RunResult res;
    detail::standard_meta(res.report, cfg, "green");
    res.report.meta.push_back({"K", fmt12(cfg.green.K)});
    res.report.meta.push_back({"gamma", fmt12(cfg.green.gamma)});
    res.report.meta.push_back({"alpha", fmt12(cfg.green.alpha)});
    res.report.meta.push_back({"k0", std::to_string(cfg.green.k0)});
    res.report.meta.push_back({"fine_offset", std::to_string(cfg.green.fine_offset)});
    res.report.columns = {"level", "h",          "fine_level",       "Gh",
                          "grad_gz_sup_h2",      "conv_worst_ratio", "local_err_worst_ratio"};

    detail::Pyramid pyr(cfg, cfg.green.fine_offset);
    std::vector<double> gh_col, conv_col, local_col, scale_col;
    for (std::size_t li = 0; li < cfg.levels.size(); ++li) {
        const int level = cfg.levels[li];
        const int fine_level = level + cfg.green.fine_offset;
        const auto working = pyr.spaces[li];
        const auto fine = std::make_shared<FeSpace>(pyr.by_level[fine_level], cfg.degree);
        const double h = working->mesh().mesh_size_h();
        std::vector<std::string> row{std::to_string(level), fmt12(h),
                                     std::to_string(fine_level)};
        try {
            const auto zs = element_interior_samples(working->mesh(), cfg.green.max_z_samples, 0);
            const auto xs = barycenter_samples(fine->mesh());
            const GhResult gh = compute_Gh(working, fine, cfg.green.K, cfg.green.gamma, zs, xs,
                                           cfg.green.component, cfg.solver.rel_tol,
                                           cfg.green.alpha);

            // Convolution estimate probe over the corpus.
            const auto conv_zs =
                element_interior_samples(working->mesh(), cfg.green.conv_points, 1);
            double conv_worst = 0.0;
            for (const std::string& name : cfg.corpus) {
                const AnalyticFunction u = corpus_function(name);
                const PiecewiseField f =
                    PiecewiseField::analytic_gradient(u, pyr.meshes[li]);
                std::vector<double> per(conv_zs.size());
                parallel_for(conv_zs.size(), [&](std::size_t i) {
                    const PhiWeight w = make_phi_weight(working->mesh(), conv_zs[i].pos, h,
                                                        cfg.green.K, cfg.green.gamma,
                                                        cfg.green.alpha);
                    per[i] = convolution_check(f, w, conv_zs[i].pos).ratio;
                });
                for (double v : per) conv_worst = std::max(conv_worst, v);
            }

            // Local error estimate probe: corpus x (z, d) panel.
            const auto le_zs =
                element_interior_samples(working->mesh(), cfg.green.local_error_points, 2);
            double local_worst = 0.0;
            for (const std::string& name : cfg.corpus) {
                const AnalyticFunction u = corpus_function(name);
                const FeFunction rhw = ritz_project(working, u, cfg.solver.rel_tol);
                const FeFunction ihw = interpolate_nodal(working, u);
                for (const SamplePoint& sp : le_zs)
                    for (double dmul : {1.0, 1.5, 2.0, 3.0}) {
                        const double d = cfg.green.k0 * h * dmul;
                        const LocalErrorReport rep =
                            local_error_check(rhw, ihw, u.value, u.gradient, sp.pos, d);
                        local_worst = std::max(local_worst, rep.ratio);
                    }
            }

            row.insert(row.end(), {fmt12(gh.value), fmt12(gh.grad_sup_h2), fmt12(conv_worst),
                                   fmt12(local_worst)});
            gh_col.push_back(gh.value);
            scale_col.push_back(gh.grad_sup_h2);
            conv_col.push_back(conv_worst);
            local_col.push_back(local_worst);
        } catch (const SolverError& e) {
            row.insert(row.end(), {"error", e.what(), "", ""});
            res.had_errors = true;
            res.violations.push_back("green solver error at level " + std::to_string(level));
        }
        res.report.rows.push_back(row);
    }

    if (!gh_col.empty() && cfg.green.fine_offset == 0) {
        for (double v : gh_col)
            if (v != 0.0) res.violations.push_back("green: Gh nonzero in working=fine test mode");
    } else if (gh_col.size() > 1) {
        const auto [mn, mx] = std::minmax_element(gh_col.begin(), gh_col.end());
        if (*mx > 2.0 * *mn)
            res.violations.push_back("green: Gh varies by more than a factor 2 across levels");
    }
    if (scale_col.size() > 1) {
        const auto [mn, mx] = std::minmax_element(scale_col.begin(), scale_col.end());
        if (*mx > 3.0 * *mn)
            res.violations.push_back("green: ||grad g_z||_inf h^2 varies by more than factor 3");
    }
    for (std::size_t i = 1; i < conv_col.size(); ++i)
        if (detail::rel_change(conv_col[0], conv_col[i]) > 0.10)
            res.violations.push_back("green: convolution worst ratio drifts by more than 10%");
    for (std::size_t i = 1; i < local_col.size(); ++i)
        if (local_col[i] > 1.2 * local_col[0])
            res.violations.push_back("green: local error constant exceeded by more than 20%");
    return res;
}

// --- Aggregate runner ----------------------------------------------------------------

struct AllResult {
    std::vector<std::string> violations;
    bool had_errors = false;
};

/// Runs the requested experiments and writes one CSV per experiment into
/// out_dir. Returns the violations; callers map them to exit codes.
inline AllResult run_experiments(const ExperimentConfig& cfg, const std::string& out_dir,
                                 bool pointwise, bool stability, bool green) {
    std::filesystem::create_directories(out_dir);
    AllResult all;
    auto absorb = [&](RunResult&& r, const std::string& name) {
        r.report.write(out_dir + "/" + name + ".csv");
        all.violations.insert(all.violations.end(), r.violations.begin(), r.violations.end());
        all.had_errors = all.had_errors || r.had_errors;
    };
    if (pointwise) absorb(run_pointwise(cfg), "pointwise");
    if (stability) absorb(run_stability(cfg), "stability");
    if (green) absorb(run_green(cfg), "green");
    return all;
}

}  // namespace ritzlab
