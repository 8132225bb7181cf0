/*
 * gsft - Shape-from-Template with generalised cameras.
 *
 * File: tests/acceptance.cpp
 *
 * Copyright 2026 The gsft Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
/*
 * Acceptance suite. Prints one PASS/FAIL line per criterion and exits
 * non-zero if any criterion fails. Pass criterion numbers as arguments to
 * run a subset.
 */
#include "gsft/gsft.hpp"

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

using namespace gsft;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome
{
    bool pass = false;
    std::string detail;
};

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

Vec3 uniform_vec3(std::mt19937_64& rng, double scale)
{
    std::uniform_real_distribution<double> u(-scale, scale);
    return {u(rng), u(rng), u(rng)};
}

double mean(const std::vector<double>& v)
{
    return v.empty() ? std::numeric_limits<double>::quiet_NaN()
                     : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::vector<double> ranks(const std::vector<double>& v)
{
    std::vector<int> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return v[static_cast<std::size_t>(a)] < v[static_cast<std::size_t>(b)]; });
    std::vector<double> r(v.size());
    for (std::size_t k = 0; k < idx.size();) {
        std::size_t e = k;
        while (e + 1 < idx.size() && v[static_cast<std::size_t>(idx[e + 1])] == v[static_cast<std::size_t>(idx[k])]) {
            ++e;
        }
        for (std::size_t t = k; t <= e; ++t) {
            r[static_cast<std::size_t>(idx[t])] = 0.5 * static_cast<double>(k + e) + 1.0;
        }
        k = e + 1;
    }
    return r;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b)
{
    const auto ra = ranks(a);
    const auto rb = ranks(b);
    const double ma = mean(ra);
    const double mb = mean(rb);
    double num = 0.0, da = 0.0, db = 0.0;
    for (std::size_t k = 0; k < ra.size(); ++k) {
        num += (ra[k] - ma) * (rb[k] - mb);
        da += (ra[k] - ma) * (ra[k] - ma);
        db += (rb[k] - mb) * (rb[k] - mb);
    }
    return num / std::sqrt(da * db);
}

// ---- 1 ---------------------------------------------------------------------

Outcome keystone()
{
    const auto t0 = Clock::now();
    std::mt19937_64 rng(101);
    double worst = 0.0;
    for (int k = 0; k < 1000; ++k) {
        const int m = 1 + k % 5;
        const Rotation r = Rotation::random(rng);
        Eigen::VectorXd w(m);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        for (int i = 0; i < m; ++i) {
            w(i) = u(rng);
        }
        const Vec3 t = uniform_vec3(rng, 2.0);
        const Vec3 pbar = uniform_vec3(rng, 1.0);
        std::vector<Vec3> basis;
        Vec3 q = pbar;
        for (int i = 0; i < m; ++i) {
            basis.push_back(uniform_vec3(rng, 0.3));
            q += w(i) * basis.back();
        }
        const Ray ray(uniform_vec3(rng, 3.0), uniform_vec3(rng, 1.0) + Vec3(0, 0, 0.1));
        const Vec3 analytic = (r.matrix() * q + t - ray.origin()).cross(ray.direction());
        const Vec3 lifted = omega_b(lift_from_parameters(r, w), t, ray, pbar, basis);
        worst = std::max(worst, (lifted - analytic).cwiseAbs().maxCoeff());
    }
    const double secs = seconds_since(t0);
    return {worst <= 1e-12 && secs < 1.0, fmt("max |omega_b - residual| = %.2e over 1000 draws, %.3f s", worst, secs)};
}

// ---- 2 ---------------------------------------------------------------------

Outcome so3_constraints()
{
    std::mt19937_64 rng(102);
    double wc = 0.0;
    double wd = 0.0;
    for (int k = 0; k < 100; ++k) {
        const GramLift g = lift_from_parameters(Rotation::random(rng), Eigen::VectorXd::Zero(2));
        for (int r = 1; r <= 3; ++r) {
            wc = std::max(wc, std::abs(omega_c(g, r) - 1.0));
            wd = std::max(wd, std::abs(omega_d(g, r)));
        }
    }
    Eigen::VectorXd xi = Eigen::VectorXd::Zero(12);
    xi(0) = 1.0;
    for (int r = 0; r < 3; ++r) {
        xi(rotation_index(r, r)) = 2.0;
    }
    const GramLift two(xi * xi.transpose());
    bool four = true;
    for (int r = 1; r <= 3; ++r) {
        four = four && omega_c(two, r) == 4.0;
    }
    return {wc <= 1e-12 && wd <= 1e-12 && four,
            fmt("max |omega_c - 1| = %.2e, max |omega_d| = %.2e, omega_c(2I) = 4: %s", wc, wd, four ? "yes" : "no")};
}

// ---- 3 ---------------------------------------------------------------------

Outcome gauge()
{
    ScenarioConfig c = ladder_config(1, true, 103);
    c.noise_sd = 0.01;
    const Scenario sc = generate_scenario(c);
    InteriorPointBackend ipm;
    const NscSolution s = solve_nsc(*sc.nsc, ipm);
    const double base = nsc_cost(*sc.nsc, s.shape(sc.model), RigidTransform::identity(), s.poses);
    std::mt19937_64 rng(104);
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
        const RigidTransform t{Rotation::random(rng), uniform_vec3(rng, 10.0)};
        worst = std::max(worst, verify_gauge_freedom(*sc.nsc, s, t) / base);
    }
    return {worst < 1e-9 && base > 0.0, fmt("cost %.4g, max relative change %.2e over 100 transforms", base, worst)};
}

// ---- 4 ---------------------------------------------------------------------

Outcome reduction()
{
    const auto t0 = Clock::now();
    double dobj = 0.0;
    double drec = 0.0;
    int failures = 0;
    for (int k = 0; k < 20; ++k) {
        ScenarioConfig c;
        c.seed = 400 + static_cast<std::uint64_t>(k);
        c.correspondences = {10, 10, 10};
        const Scenario sc = generate_scenario(c);
        InteriorPointBackend ipm;
        const NsSolution multi = solve_ns(sc.ns, ipm);
        const SingleViewReduction red = reduce_to_single_view(sc.ns);
        const NsSolution single = solve_ns(red.problem, ipm);
        if (!is_usable(multi.status) || !is_usable(single.status)) {
            ++failures;
        }
        dobj = std::max(dobj, std::abs(multi.objective - single.objective));
        drec = std::max(drec, rmse(red.world_from_frame.apply(single.reconstruction), multi.reconstruction));
    }
    const double secs = seconds_since(t0);
    return {failures == 0 && dobj <= 1e-6 && drec <= 1e-5 && secs < 120.0,
            fmt("max |objective diff| = %.2e, max RMSE between solutions = %.2e au, %d solver failures, %.1f s", dobj,
                drec, failures, secs)};
}

// ---- 5 ---------------------------------------------------------------------

Outcome ns_ladder()
{
    const auto t0 = Clock::now();
    std::vector<double> means;
    double worst = 0.0;
    int errors = 0;
    std::string per;
    for (int id = 1; id <= 5; ++id) {
        ScenarioConfig c = ladder_config(id, false, 500 + static_cast<std::uint64_t>(10 * id));
        const auto reports = run_experiment(c, Method::ns, 10);
        std::vector<double> e;
        for (const auto& r : reports) {
            if (std::isnan(r.rmse)) {
                ++errors;
                continue;
            }
            e.push_back(r.rmse);
            worst = std::max(worst, r.rmse);
        }
        means.push_back(mean(e));
        per += fmt(" c%d=%.2e", id, means.back());
    }
    const double ratio = means[4] / means[0];
    const double secs = seconds_since(t0);
    return {errors == 0 && worst <= 1e-3 && ratio <= 2.0 && secs < 600.0,
            fmt("max RMSE %.2e au, mean RMSE", worst) + per + fmt(", ratio c5/c1 = %.3g, %.1f s", ratio, secs)};
}

// ---- 6 ---------------------------------------------------------------------

Outcome ns_vs_trivial()
{
    int wins = 0;
    std::string per;
    double triv_ratio = 0.0;
    int triv_views = 0;
    for (int k = 0; k < 10; ++k) {
        ScenarioConfig c = ladder_config(4, false, 600 + static_cast<std::uint64_t>(k));
        c.noise_sd = 0.01;
        const MetricReport ns = run_repeat(c, Method::ns);
        const MetricReport triv = run_repeat(c, Method::trivial_repeated_sft);
        wins += ns.rmse < triv.rmse ? 1 : 0;
        for (double r : triv.rank_ratios) {
            triv_ratio += r;
            ++triv_views;
        }
        if (k < 3) {
            per += fmt(" (%.3g vs %.3g)", ns.rmse, triv.rmse);
        }
    }
    // single central views admit a shrunken zero-residual relaxation, the ratio shows it
    return {wins >= 9, fmt("NS better in %d/10 repeats; mean single-view rank ratio %.2f; first RMSEs NS vs trivial:",
                           wins, triv_views > 0 ? triv_ratio / triv_views : 0.0)
                           + per};
}

// ---- 7 ---------------------------------------------------------------------

Outcome nsc_recovery()
{
    double worst_rmse = 0.0;
    double worst_rot = 0.0;
    double worst_weights = 0.0;
    int rank_one = 0;
    int errors = 0;
    for (int k = 0; k < 10; ++k) {
        const Scenario sc = generate_scenario(ladder_config(1, true, 700 + static_cast<std::uint64_t>(k)));
        InteriorPointBackend ipm;
        NscSolution s;
        try {
            s = solve_nsc(*sc.nsc, ipm);
        } catch (const Error&) {
            ++errors;
            continue;
        }
        const Points3 truth = sc.gt_viewpoint_poses[0].inverse().apply(sc.gt_points);
        worst_rmse = std::max(worst_rmse, rmse(s.transforms[0].apply(s.shape(sc.model)), truth));
        worst_weights = std::max(worst_weights, (s.lift_weights[0] - s.lift_weights[1]).cwiseAbs().maxCoeff());
        // the bound is only promised for rank-1 lifts; checking every solve is stricter
        rank_one += s.rank[0].ratio <= 1e-4 && s.rank[1].ratio <= 1e-4 ? 1 : 0;
        const RigidTransform gt_rel = sc.gt_viewpoint_poses[0].inverse() * sc.gt_viewpoint_poses[1];
        worst_rot = std::max(worst_rot, rotation_error_deg(s.relative_poses[1].rotation, gt_rel.rotation));
    }
    std::vector<double> ids;
    std::vector<double> means;
    std::string per;
    for (int id = 1; id <= 5; ++id) {
        const auto reports = run_experiment(ladder_config(id, true, 750 + static_cast<std::uint64_t>(10 * id)),
                                            Method::nsc, 5);
        std::vector<double> e;
        for (const auto& r : reports) {
            if (!std::isnan(r.rmse)) {
                e.push_back(r.rmse);
            }
        }
        ids.push_back(id);
        means.push_back(mean(e));
        per += fmt(" c%d=%.2e", id, means.back());
    }
    const double rho = spearman(ids, means);
    const bool pass = errors == 0 && worst_rmse <= 1e-2 && worst_rot <= 2.0 && worst_weights <= 1e-6 && rho >= 0.0;
    return {pass, fmt("config 1: max anchor RMSE %.2e au, max relative rotation error %.3g deg over all 10 (%d rank-1), "
                      "max weight segment gap %.2e; ladder mean RMSE",
                      worst_rmse, worst_rot, rank_one, worst_weights)
                      + per + fmt(", Spearman %.2f", rho)};
}

// ---- 8 ---------------------------------------------------------------------

Outcome scaled_lift()
{
    std::mt19937_64 rng(801);
    double worst_angle = 0.0;
    double worst_scale = 0.0;
    for (int k = 0; k < 100; ++k) {
        const Rotation r = Rotation::random(rng);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        Eigen::VectorXd w(3);
        w << u(rng), u(rng), u(rng);
        Eigen::VectorXd xi = lift_vector(r, w);
        xi.segment(1, 9) *= 1.5;
        const Extraction e = extract_solution(GramLift(xi * xi.transpose()));
        worst_angle = std::max(worst_angle, rad_to_deg(e.rotation.angle_to(r)));
        worst_scale = std::max(worst_scale, std::abs(e.diagnostics.scale - 1.5) / 1.5);
    }
    return {worst_angle < 1e-9 && worst_scale < 0.01,
            fmt("max angular error %.2e deg, max scale error %.2e (relative) over 100 lifts", worst_angle, worst_scale)};
}

// ---- 9 ---------------------------------------------------------------------

Outcome silhouette_boosting()
{
    const auto t0 = Clock::now();
    int improved = 0;
    int converged = 0;
    int trials = 0;
    bool every_count_improves = true;
    int strict = 0;
    std::string per;
    ExperimentOptions opt;
    opt.lambda = 0.9;
    opt.max_iters = 50;
    opt.threads = 1;
    for (int total : {5, 6, 7}) {
        int conv_here = 0;
        int impr_here = 0;
        for (int k = 0; k < 20; ++k) {
            ScenarioConfig c;
            c.seed = 900 + static_cast<std::uint64_t>(100 * total + k);
            c.correspondences = {2, total - 2};
            c.density = 2000;
            const MetricReport r = run_repeat(c, Method::silhouette_ns, opt);
            ++trials;
            const bool ok = !std::isnan(r.rmse) && !std::isnan(r.initial_rmse);
            // exact initial solves sit at the solver noise floor, compare with its slack
            if (ok && r.rmse <= r.initial_rmse + 1e-6) {
                ++improved;
                ++impr_here;
            }
            strict += ok && r.rmse <= r.initial_rmse ? 1 : 0;
            if (ok && r.converged && r.iters <= 50) {
                ++converged;
                ++conv_here;
            }
        }
        // 80% per correspondence count, not pooled
        every_count_improves = every_count_improves && impr_here >= 16;
        per += fmt(" n=%d: %d improved, %d converged;", total, impr_here, conv_here);
    }

    // lambda = 1 reduces to the plain NS program
    ScenarioConfig c;
    c.seed = 990;
    c.correspondences = {3, 4};
    c.density = 2000;
    const Scenario sc = generate_scenario(c);
    InteriorPointBackend ipm;
    const NsSolution plain = solve_ns(sc.ns, ipm);
    const BoostResult one = solve_silhouette_boosted_ns(sc.ns, sc.silhouettes, 1.0, 50, ipm);
    const double gap = std::abs(one.solution.objective - plain.objective);
    const double tol = 1e-6 * std::max(1.0, std::abs(plain.objective));

    const bool pass = every_count_improves && converged == trials && gap <= tol;
    return {pass, fmt("final <= initial RMSE + 1e-6 in %d/%d (%d without slack), converged in %d/%d;", improved, trials,
                           strict, converged, trials) + per
                      + fmt(" lambda=1 objective gap %.2e; %.0f s", gap, seconds_since(t0))};
}

// ---- 10 --------------------------------------------------------------------

std::vector<int> hull_oracle(const Points2& p)
{
    std::vector<int> idx(static_cast<std::size_t>(p.cols()));
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
        return p(0, a) < p(0, b) || (p(0, a) == p(0, b) && p(1, a) < p(1, b));
    });
    auto cross = [&](int o, int a, int b) {
        return (p(0, a) - p(0, o)) * (p(1, b) - p(1, o)) - (p(1, a) - p(1, o)) * (p(0, b) - p(0, o));
    };
    std::vector<int> h(2 * idx.size());
    std::size_t k = 0;
    for (int i : idx) {
        while (k >= 2 && cross(h[k - 2], h[k - 1], i) <= 0) {
            --k;
        }
        h[k++] = i;
    }
    for (std::size_t i = idx.size() - 1, t = k + 1; i-- > 0;) {
        while (k >= t && cross(h[k - 2], h[k - 1], idx[i]) <= 0) {
            --k;
        }
        h[k++] = idx[i];
    }
    h.resize(k - 1);
    std::rotate(h.begin(), std::min_element(h.begin(), h.end()), h.end());
    return h;
}

Outcome oracles()
{
    std::mt19937_64 rng(1001);
    std::normal_distribution<double> g(0.0, 1.0);
    int hull_ok = 0;
    for (int k = 0; k < 100; ++k) {
        Points2 p(2, 20 + 3 * k);
        for (Eigen::Index j = 0; j < p.cols(); ++j) {
            p.col(j) = Vec2(g(rng), g(rng));
        }
        auto b = alpha_silhouette(p, std::numeric_limits<double>::infinity());
        std::rotate(b.begin(), std::min_element(b.begin(), b.end()), b.end());
        hull_ok += b == hull_oracle(p) ? 1 : 0;
    }

    double metric_err = 0.0;
    for (int k = 0; k < 20; ++k) {
        Points3 a(3, 30);
        Points3 b(3, 30);
        Points3 c(3, 17);
        for (int j = 0; j < 30; ++j) {
            a.col(j) = uniform_vec3(rng, 1.0);
            b.col(j) = uniform_vec3(rng, 1.0);
        }
        for (int j = 0; j < 17; ++j) {
            c.col(j) = uniform_vec3(rng, 1.0);
        }
        double sq = 0.0;
        for (int j = 0; j < 30; ++j) {
            for (int d = 0; d < 3; ++d) {
                sq += (a(d, j) - b(d, j)) * (a(d, j) - b(d, j));
            }
        }
        metric_err = std::max(metric_err, std::abs(rmse(a, b) - std::sqrt(sq / 30.0)));
        auto directed = [](const Points3& x, const Points3& y) {
            double s = 0.0;
            for (Eigen::Index i = 0; i < x.cols(); ++i) {
                double best = std::numeric_limits<double>::infinity();
                for (Eigen::Index l = 0; l < y.cols(); ++l) {
                    double d2 = 0.0;
                    for (int d = 0; d < 3; ++d) {
                        d2 += (x(d, i) - y(d, l)) * (x(d, i) - y(d, l));
                    }
                    best = std::min(best, std::sqrt(d2));
                }
                s += best;
            }
            return s / static_cast<double>(x.cols());
        };
        metric_err = std::max(metric_err, std::abs(chamfer(a, c) - 0.5 * (directed(a, c) + directed(c, a))));
    }

    int beaten = 0;
    for (int k = 0; k < 100; ++k) {
        Mat3 m;
        for (int i = 0; i < 9; ++i) {
            m(i / 3, i % 3) = g(rng);
        }
        const double best = (nearest_rotation(m).matrix() - m).norm();
        double sampled = std::numeric_limits<double>::infinity();
        for (int s = 0; s < 2000; ++s) {
            sampled = std::min(sampled, (Rotation::random(rng).matrix() - m).norm());
        }
        beaten += best <= sampled ? 1 : 0;
    }
    return {hull_ok == 100 && metric_err <= 1e-12 && beaten == 100,
            fmt("alpha=inf equals hull on %d/100 clouds, max rmse/chamfer deviation %.2e, nearest_rotation beats "
                "2000 samples on %d/100 matrices",
                hull_ok, metric_err, beaten)};
}

// ---- 11 --------------------------------------------------------------------

Outcome determinism()
{
    const auto base = std::filesystem::temp_directory_path() / ("gsft_accept_" + std::to_string(::getpid()));
    std::filesystem::create_directories(base);
    std::vector<std::string> csv;
    for (const char* run : {"a", "b"}) {
        const std::string cmd =
            std::string("\"") + GSFT_CLI_PATH + "\" bench --seed 7 --out \"" + (base / run).string() + "\" > /dev/null";
        const int rc = std::system(cmd.c_str());
        if (rc != 0) {
            std::filesystem::remove_all(base);
            return {false, fmt("bench exited with status %d", rc)};
        }
        csv.push_back(detail::read_text_file(base / run / "bench.csv"));
    }
    std::filesystem::remove_all(base);
    const bool same = csv[0] == csv[1];
    const auto lines = std::count(csv[0].begin(), csv[0].end(), '\n');
    return {same && lines > 1, fmt("two runs of bench --seed 7: %ld CSV lines, identical: %s", static_cast<long>(lines),
                                   same ? "yes" : "no")};
}

} // namespace

int main(int argc, char** argv)
{
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"keystone rank-1 consistency", keystone},
        {"SO(3) lift constraints", so3_constraints},
        {"gauge invariance", gauge},
        {"multi-view vs single-view equivalence", reduction},
        {"NS recovery along the ladder", ns_ladder},
        {"NS vs trivial repeated SfT", ns_vs_trivial},
        {"NSC recovery", nsc_recovery},
        {"scaled lift extraction", scaled_lift},
        {"silhouette boosting", silhouette_boosting},
        {"oracle equivalences", oracles},
        {"end-to-end determinism", determinism},
    };
    std::set<int> selected;
    for (int a = 1; a < argc; ++a) {
        selected.insert(std::atoi(argv[a]));
    }
    int failed = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        const int id = static_cast<int>(k) + 1;
        if (!selected.empty() && selected.count(id) == 0) {
            continue;
        }
        Outcome o;
        try {
            o = criteria[k].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += o.pass ? 0 : 1;
        std::printf("%s %d: %s: %s\n", o.pass ? "PASS" : "FAIL", id, criteria[k].first, o.detail.c_str());
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
