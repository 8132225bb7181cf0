/*
 * gsft - Shape-from-Template with generalised cameras.
 *
 * File: include/gsft/experiment.hpp
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
#pragma once

#ifndef GSFT_EXPERIMENT_HPP_
#define GSFT_EXPERIMENT_HPP_

#include "gsft/error.hpp"
#include "gsft/geometry.hpp"
#include "gsft/ipm.hpp"
#include "gsft/metrics.hpp"
#include "gsft/ns.hpp"
#include "gsft/nsc.hpp"
#include "gsft/shape_model.hpp"
#include "gsft/silhouette.hpp"
#include "gsft/synth.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace gsft {

enum class Method { ns, nsc, silhouette_ns, trivial_repeated_sft };

inline std::string_view to_string(Method m)
{
    switch (m) {
    case Method::ns: return "ns";
    case Method::nsc: return "nsc";
    case Method::silhouette_ns: return "silhouette_ns";
    case Method::trivial_repeated_sft: return "trivial_repeated_sft";
    }
    return "unknown";
}

inline Method method_from_string(std::string_view s)
{
    for (Method m : {Method::ns, Method::nsc, Method::silhouette_ns, Method::trivial_repeated_sft}) {
        if (s == to_string(m)) {
            return m;
        }
    }
    if (s == "silh-ns" || s == "silhouette") {
        return Method::silhouette_ns;
    }
    if (s == "trivial") {
        return Method::trivial_repeated_sft;
    }
    throw Error(ErrorCode::InvalidArgument, "unknown method '" + std::string(s) + "'");
}

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// One repeat of one method. Errors in au, angles in degrees.
struct MetricReport
{
    std::uint64_t seed = 0;
    int config_id = 0;
    Method method = Method::ns;
    double rmse = kNaN;
    double procrustes_rmse = kNaN;
    double rot_err_deg = kNaN;
    double trans_err = kNaN;
    double chamfer = kNaN;
    std::string status;
    int iters = 0;
    double wall_ms = 0.0;

    // not part of the CSV
    std::vector<double> view_rotation_errors;    ///< per view (NSC: relative poses; trivial: per-view solves)
    std::vector<double> view_translation_errors;
    double initial_rmse = kNaN;  ///< silhouette_ns: plain NS before boosting
    double combined_rmse = kNaN; ///< trivial: Euclidean mean of the per-view reconstructions
    int degenerate_views = 0;
    bool converged = true;
    bool gimbal_warning = false;
    std::vector<double> rank_ratios;
};

struct ExperimentOptions
{
    double lambda = kDefaultLambda;
    int max_iters = kDefaultMaxIterations;
    int silhouette_density = 2000; ///< used when the config has no density of its own
    bool timing = false;           ///< wall_ms stays 0 unless set, which keeps reports reproducible
    int threads = 0;               ///< 0 = hardware concurrency
};

namespace detail {

inline MetricReport evaluate_ns(const Scenario& sc, SolverBackend& backend, MetricReport r)
{
    const NsSolution s = solve_ns(sc.ns, backend);
    r.rmse = rmse(s.reconstruction, sc.gt_points);
    r.procrustes_rmse = procrustes_rmse(s.reconstruction, sc.gt_points);
    const RotationError re = rotation_error(s.instance.pose.rotation, sc.gt_instance.pose.rotation);
    r.rot_err_deg = re.degrees;
    r.gimbal_warning = re.gimbal_warning;
    r.trans_err = translation_error(s.instance.pose.translation, sc.gt_instance.pose.translation);
    r.chamfer = chamfer(s.reconstruction, sc.gt_points);
    r.status = std::string(to_string(s.status));
    r.iters = s.iterations;
    r.rank_ratios = {s.rank.ratio};
    return r;
}

inline MetricReport evaluate_nsc(const Scenario& sc, SolverBackend& backend, MetricReport r)
{
    if (!sc.nsc) {
        throw Error(ErrorCode::ConfigInfeasible, "NSC needs perspective viewpoints");
    }
    const NscSolution s = solve_nsc(*sc.nsc, backend);
    const Points3 shape = s.shape(sc.model);
    const RigidTransform gt_anchor = sc.gt_viewpoint_poses.front().inverse();
    const Points3 gt_anchor_points = gt_anchor.apply(sc.gt_points);
    const Points3 est_anchor_points = s.transforms.front().apply(shape);
    r.rmse = rmse(est_anchor_points, gt_anchor_points);
    r.procrustes_rmse = procrustes_rmse(shape, sc.gt_points);
    r.chamfer = chamfer(est_anchor_points, gt_anchor_points);
    double rot = 0.0;
    double trans = 0.0;
    for (std::size_t x = 0; x < s.transforms.size(); ++x) {
        const RigidTransform gt_transform = sc.gt_viewpoint_poses[x].inverse() * sc.gt_instance.pose;
        const RotationError re = rotation_error(s.transforms[x].rotation, gt_transform.rotation);
        rot += re.degrees;
        r.gimbal_warning = r.gimbal_warning || re.gimbal_warning;
        trans += translation_error(s.transforms[x].translation, gt_transform.translation);
        const RigidTransform gt_relative = gt_anchor * sc.gt_viewpoint_poses[x];
        r.view_rotation_errors.push_back(rotation_error_deg(s.relative_poses[x].rotation, gt_relative.rotation));
        r.view_translation_errors.push_back(
            translation_error(s.relative_poses[x].translation, gt_relative.translation));
        r.rank_ratios.push_back(s.rank[x].ratio);
    }
    const auto p = static_cast<double>(s.transforms.size());
    r.rot_err_deg = rot / p;
    r.trans_err = trans / p;
    r.status = std::string(to_string(s.status));
    r.iters = s.iterations;
    return r;
}

inline MetricReport evaluate_silhouette(const Scenario& sc, SolverBackend& backend, const ExperimentOptions& opt,
                                        MetricReport r)
{
    const BoostResult b =
        solve_silhouette_boosted_ns(sc.ns, sc.silhouettes, opt.lambda, opt.max_iters, backend, &sc.gt_points);
    const NsSolution& s = b.solution;
    r.initial_rmse = rmse(b.initial.reconstruction, sc.gt_points);
    r.rmse = rmse(s.reconstruction, sc.gt_points);
    r.procrustes_rmse = procrustes_rmse(s.reconstruction, sc.gt_points);
    const RotationError re = rotation_error(s.instance.pose.rotation, sc.gt_instance.pose.rotation);
    r.rot_err_deg = re.degrees;
    r.gimbal_warning = re.gimbal_warning;
    r.trans_err = translation_error(s.instance.pose.translation, sc.gt_instance.pose.translation);
    r.chamfer = chamfer(s.reconstruction, sc.gt_points);
    r.converged = b.converged;
    r.status = b.converged ? std::string(to_string(s.status)) : "nonconvergence";
    r.iters = b.iterations;
    for (const auto& t : b.trace) {
        r.rank_ratios.push_back(t.rank_ratio);
    }
    return r;
}

/**
 * Independent single-view solves with the GT viewpoint poses. Views with
 * fewer than 4 correspondences cannot be solved alone and are counted as
 * degenerate.
 */
inline MetricReport evaluate_trivial(const Scenario& sc, SolverBackend& backend, MetricReport r)
{
    std::vector<Points3> recons;
    double acc = 0.0;
    double pacc = 0.0;
    double rot = 0.0;
    double trans = 0.0;
    SolveStatus worst = SolveStatus::optimal;
    for (std::size_t x = 0; x < sc.ns.viewpoints.size(); ++x) {
        if (sc.ns.correspondences[x].size() < 4) {
            ++r.degenerate_views;
            continue;
        }
        NsProblem single;
        single.model = sc.ns.model;
        single.trace_weight = sc.ns.trace_weight;
        single.viewpoints = {sc.ns.viewpoints[x]};
        single.correspondences = {sc.ns.correspondences[x]};
        const NsSolution s = solve_ns(single, backend);
        recons.push_back(s.reconstruction);
        const double e = rmse(s.reconstruction, sc.gt_points);
        acc += e;
        pacc += procrustes_rmse(s.reconstruction, sc.gt_points);
        const double re = rotation_error_deg(s.instance.pose.rotation, sc.gt_instance.pose.rotation);
        rot += re;
        trans += translation_error(s.instance.pose.translation, sc.gt_instance.pose.translation);
        r.view_rotation_errors.push_back(re);
        r.view_translation_errors.push_back(
            translation_error(s.instance.pose.translation, sc.gt_instance.pose.translation));
        r.iters += s.iterations;
        r.rank_ratios.push_back(s.rank.ratio);
        if (static_cast<int>(s.status) > static_cast<int>(worst)) {
            worst = s.status;
        }
    }
    if (recons.empty()) {
        r.status = "degenerate";
        return r;
    }
    const auto k = static_cast<double>(recons.size());
    r.rmse = acc / k;
    r.procrustes_rmse = pacc / k;
    r.rot_err_deg = rot / k;
    r.trans_err = trans / k;
    Points3 mean = Points3::Zero(3, sc.gt_points.cols());
    for (const auto& q : recons) {
        mean += q / k;
    }
    r.combined_rmse = rmse(mean, sc.gt_points);
    r.chamfer = chamfer(mean, sc.gt_points);
    r.status = std::string(to_string(worst));
    return r;
}

} // namespace detail

/// A single seeded repeat; library errors are recorded in the status, not thrown.
inline MetricReport run_repeat(const ScenarioConfig& config, Method method, const ExperimentOptions& options = {})
{
    MetricReport r;
    r.seed = config.seed;
    r.config_id = config.config_id;
    r.method = method;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        ScenarioConfig cfg = config;
        if (method == Method::silhouette_ns && cfg.density == 0) {
            cfg.density = std::max(options.silhouette_density, cfg.n_points);
        }
        const Scenario sc = generate_scenario(cfg);
        InteriorPointBackend backend;
        switch (method) {
        case Method::ns: r = detail::evaluate_ns(sc, backend, r); break;
        case Method::nsc: r = detail::evaluate_nsc(sc, backend, r); break;
        case Method::silhouette_ns: r = detail::evaluate_silhouette(sc, backend, options, r); break;
        case Method::trivial_repeated_sft: r = detail::evaluate_trivial(sc, backend, r); break;
        }
    } catch (const Error& e) {
        r.status = "error:" + std::string(to_string(e.code()));
    }
    if (options.timing) {
        r.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    }
    return r;
}

/**
 * Repeat r runs with seed config.seed + r. Repeats are spread over a small
 * thread pool; each worker owns its backend, and results keep repeat order.
 */
inline std::vector<MetricReport> run_experiment(const ScenarioConfig& config, Method method, int repeats,
                                                const ExperimentOptions& options = {})
{
    if (repeats < 0) {
        throw Error(ErrorCode::InvalidArgument, "repeats must be nonnegative");
    }
    config.validate();
    std::vector<MetricReport> out(static_cast<std::size_t>(repeats));
    if (repeats == 0) {
        return out;
    }
    int threads = options.threads > 0 ? options.threads : static_cast<int>(std::thread::hardware_concurrency());
    threads = std::clamp(threads, 1, repeats);
    std::atomic<int> next{0};
    auto worker = [&]() {
        for (int k = next++; k < repeats; k = next++) {
            ScenarioConfig c = config;
            c.seed = config.seed + static_cast<std::uint64_t>(k);
            out[static_cast<std::size_t>(k)] = run_repeat(c, method, options);
        }
    };
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) {
            pool.emplace_back(worker);
        }
        for (auto& t : pool) {
            t.join();
        }
    }
    return out;
}

// ---- reports ---------------------------------------------------------------

inline constexpr const char* kReportHeader =
    "seed,config_id,method,rmse,procrustes_rmse,rot_err_deg,trans_err,chamfer,status,iters,wall_ms";

namespace detail {

inline std::string format_double(double v)
{
    if (std::isnan(v)) {
        return "nan";
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline double parse_double(const std::string& s)
{
    if (s == "nan") {
        return kNaN;
    }
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) {
            throw Error(ErrorCode::ParseError, "report: bad number '" + s + "'");
        }
        return v;
    } catch (const std::logic_error&) {
        throw Error(ErrorCode::ParseError, "report: bad number '" + s + "'");
    }
}

} // namespace detail

inline std::string report_csv(const std::vector<MetricReport>& reports)
{
    std::ostringstream os;
    os << kReportHeader << '\n';
    for (const auto& r : reports) {
        os << r.seed << ',' << r.config_id << ',' << to_string(r.method) << ',' << detail::format_double(r.rmse)
           << ',' << detail::format_double(r.procrustes_rmse) << ',' << detail::format_double(r.rot_err_deg) << ','
           << detail::format_double(r.trans_err) << ',' << detail::format_double(r.chamfer) << ',' << r.status << ','
           << r.iters << ',' << detail::format_double(r.wall_ms) << '\n';
    }
    return os.str();
}

/// Inverse of report_csv for the CSV columns.
inline std::vector<MetricReport> parse_report_csv(const std::string& text)
{
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != kReportHeader) {
        throw Error(ErrorCode::ParseError, "report: unexpected header");
    }
    std::vector<MetricReport> out;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        std::vector<std::string> f;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) {
            f.push_back(cell);
        }
        if (f.size() != 11) {
            throw Error(ErrorCode::ParseError, "report: expected 11 columns in '" + line + "'");
        }
        MetricReport r;
        try {
            r.seed = std::stoull(f[0]);
            r.config_id = std::stoi(f[1]);
            r.iters = std::stoi(f[9]);
        } catch (const std::logic_error&) {
            throw Error(ErrorCode::ParseError, "report: bad integer in '" + line + "'");
        }
        r.method = method_from_string(f[2]);
        r.rmse = detail::parse_double(f[3]);
        r.procrustes_rmse = detail::parse_double(f[4]);
        r.rot_err_deg = detail::parse_double(f[5]);
        r.trans_err = detail::parse_double(f[6]);
        r.chamfer = detail::parse_double(f[7]);
        r.status = f[8];
        r.wall_ms = detail::parse_double(f[10]);
        out.push_back(std::move(r));
    }
    return out;
}

/// Scatter of log10 RMSE against configuration id, one colour per method.
inline std::string report_svg(const std::vector<MetricReport>& reports)
{
    constexpr double w = 480.0;
    constexpr double h = 320.0;
    constexpr double m = 48.0;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    int cmax = 1;
    for (const auto& r : reports) {
        if (r.rmse > 0.0 && std::isfinite(r.rmse)) {
            lo = std::min(lo, std::log10(r.rmse));
            hi = std::max(hi, std::log10(r.rmse));
        }
        cmax = std::max(cmax, r.config_id);
    }
    if (!std::isfinite(lo)) {
        lo = -1.0;
        hi = 0.0;
    }
    lo = std::floor(lo);
    hi = std::max(std::ceil(hi), lo + 1.0);
    auto px = [&](int c) { return m + (w - 2 * m) * (c + 0.5) / (cmax + 1.0); };
    auto py = [&](double v) { return h - m - (h - 2 * m) * (v - lo) / (hi - lo); };
    const char* colours[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<line x1=\"" << m << "\" y1=\"" << h - m << "\" x2=\"" << w - m << "\" y2=\"" << h - m
       << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << m << "\" y1=\"" << m << "\" x2=\"" << m << "\" y2=\"" << h - m << "\" stroke=\"black\"/>\n";
    for (int c = 0; c <= cmax; ++c) {
        os << "<text x=\"" << px(c) << "\" y=\"" << h - m + 16 << "\" font-size=\"11\" text-anchor=\"middle\">" << c
           << "</text>\n";
    }
    for (double v = lo; v <= hi + 1e-9; v += 1.0) {
        os << "<text x=\"" << m - 6 << "\" y=\"" << py(v) + 4 << "\" font-size=\"11\" text-anchor=\"end\">1e"
           << static_cast<int>(v) << "</text>\n";
    }
    os << "<text x=\"" << w / 2 << "\" y=\"" << h - 8 << "\" font-size=\"12\" text-anchor=\"middle\">configuration</text>\n";
    os << "<text x=\"14\" y=\"" << h / 2 << "\" font-size=\"12\" transform=\"rotate(-90 14 " << h / 2
       << ")\" text-anchor=\"middle\">RMSE (au)</text>\n";
    for (const auto& r : reports) {
        if (!(r.rmse > 0.0) || !std::isfinite(r.rmse)) {
            continue;
        }
        os << "<circle cx=\"" << px(r.config_id) << "\" cy=\"" << py(std::log10(r.rmse)) << "\" r=\"3\" fill=\""
           << colours[static_cast<int>(r.method)] << "\" fill-opacity=\"0.7\"><title>" << to_string(r.method)
           << " seed " << r.seed << "</title></circle>\n";
    }
    os << "</svg>\n";
    return os.str();
}

/// Writes the CSV and, when svg_path is given, the scatter plot.
inline void emit_report(const std::vector<MetricReport>& reports, const std::filesystem::path& csv_path,
                        const std::optional<std::filesystem::path>& svg_path = std::nullopt)
{
    detail::write_text_file(csv_path, report_csv(reports));
    if (svg_path) {
        detail::write_text_file(*svg_path, report_svg(reports));
    }
}

} // namespace gsft

#endif // GSFT_EXPERIMENT_HPP_
