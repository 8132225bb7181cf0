/*
 * gsft - Shape-from-Template with generalised cameras.
 *
 * File: include/gsft/synth.hpp
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

#ifndef GSFT_SYNTH_HPP_
#define GSFT_SYNTH_HPP_

#include "gsft/alpha_shape.hpp"
#include "gsft/error.hpp"
#include "gsft/geometry.hpp"
#include "gsft/ns.hpp"
#include "gsft/nsc.hpp"
#include "gsft/shape_model.hpp"
#include "gsft/silhouette.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <random>
#include <string>
#include <vector>

namespace gsft {

/**
 * Population of pre-aligned samples: a uniform random cloud in the unit cube
 * deformed by random combinations of M smooth trigonometric displacement
 * fields of amplitude deformation_scale. Each sample is centred.
 */
inline std::vector<Points3> generate_population(std::uint64_t seed, int n_points, int n_modes, double deformation_scale)
{
    if (n_points < 4 || n_modes < 1) {
        throw Error(ErrorCode::InvalidArgument, "population needs N >= 4 and M >= 1");
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-0.5, 0.5);
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    std::uniform_real_distribution<double> freq(-std::numbers::pi, std::numbers::pi);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);

    Points3 base(3, n_points);
    for (int j = 0; j < n_points; ++j) {
        for (int c = 0; c < 3; ++c) {
            base(c, j) = unit(rng);
        }
    }
    std::vector<Points3> fields;
    for (int i = 0; i < n_modes; ++i) {
        Points3 f(3, n_points);
        for (int c = 0; c < 3; ++c) {
            const Vec3 w(freq(rng), freq(rng), freq(rng));
            const double ph = phase(rng);
            for (int j = 0; j < n_points; ++j) {
                f(c, j) = std::sin(w.dot(base.col(j)) + ph);
            }
        }
        fields.push_back(deformation_scale * f);
    }
    const int count = std::max(2 * n_modes + 1, 8);
    std::vector<Points3> samples;
    samples.reserve(static_cast<std::size_t>(count));
    for (int s = 0; s < count; ++s) {
        Points3 q = base;
        for (const auto& f : fields) {
            q += coef(rng) * f;
        }
        const Vec3 centroid = q.rowwise().mean();
        q.colwise() -= centroid;
        samples.push_back(std::move(q));
    }
    return samples;
}

/**
 * Adds target_n - N points, each a random convex combination of the 4
 * nearest (in the mean shape) neighbours of a random existing point. The
 * same coefficients are applied to the mean and to every basis, so the added
 * points deform linearly with the weights. Original points keep their
 * indices.
 */
inline ShapeModel densify_for_silhouette(const ShapeModel& model, int target_n, std::uint64_t seed = 0)
{
    const int n = model.point_count();
    if (target_n < n) {
        throw Error(ErrorCode::InvalidArgument, "target point count must not shrink the model");
    }
    if (target_n == n) {
        return model;
    }
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> pick(0, n - 1);
    std::exponential_distribution<double> expo(1.0);
    const Points3& mean = model.mean();

    // four nearest neighbours (including the point itself) per original point
    std::vector<std::array<int, 4>> knn(static_cast<std::size_t>(n));
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
        std::iota(order.begin(), order.end(), 0);
        std::partial_sort(order.begin(), order.begin() + 4, order.end(), [&](int a, int b) {
            const double da = (mean.col(a) - mean.col(j)).squaredNorm();
            const double db = (mean.col(b) - mean.col(j)).squaredNorm();
            return da != db ? da < db : a < b;
        });
        std::copy_n(order.begin(), 4, knn[static_cast<std::size_t>(j)].begin());
    }

    Points3 new_mean(3, target_n);
    new_mean.leftCols(n) = mean;
    std::vector<Points3> new_bases;
    for (const auto& b : model.bases()) {
        Points3 nb(3, target_n);
        nb.leftCols(n) = b;
        new_bases.push_back(std::move(nb));
    }
    for (int k = n; k < target_n; ++k) {
        const auto& nbrs = knn[static_cast<std::size_t>(pick(rng))];
        std::array<double, 4> lam{};
        double total = 0.0;
        for (auto& l : lam) {
            l = expo(rng);
            total += l;
        }
        new_mean.col(k).setZero();
        for (auto& nb : new_bases) {
            nb.col(k).setZero();
        }
        for (int q = 0; q < 4; ++q) {
            const double l = lam[static_cast<std::size_t>(q)] / total;
            const int src = nbrs[static_cast<std::size_t>(q)];
            new_mean.col(k) += l * mean.col(src);
            for (std::size_t i = 0; i < new_bases.size(); ++i) {
                new_bases[i].col(k) += l * model.bases()[i].col(src);
            }
        }
    }
    return ShapeModel(std::move(new_mean), std::move(new_bases));
}

struct ScenarioConfig
{
    std::uint64_t seed = 0;
    int config_id = 0; ///< 1..5 ladder entry, 0 for custom
    int n_points = 50;
    int n_bases = 3;
    std::vector<int> correspondences = {25, 25}; ///< per view; P is its length
    std::vector<ProjectionModel> projections;    ///< per view; empty means all perspective
    double euler_range_deg = 90.0;
    double translation_range = 1.0;
    double weight_min = 0.0;
    double weight_max = 1.0;
    double noise_sd = 0.0;
    double deformation_scale = 0.2;
    int density = 0; ///< dense point count for silhouette scenarios; 0 disables
    double min_depth = kDefaultMinDepth;
    double trace_weight = kDefaultTraceWeight;

    int view_count() const { return static_cast<int>(correspondences.size()); }

    void validate() const
    {
        if (correspondences.empty()) {
            throw Error(ErrorCode::ConfigInfeasible, "at least one viewpoint is required");
        }
        const int total = std::accumulate(correspondences.begin(), correspondences.end(), 0);
        if (total < 4) {
            throw Error(ErrorCode::ConfigInfeasible, "at least 4 correspondences in total are required");
        }
        const int pool = std::max(n_points, density);
        if (total > pool) {
            throw Error(ErrorCode::ConfigInfeasible, "sum of correspondences exceeds the point count");
        }
        if (std::any_of(correspondences.begin(), correspondences.end(), [](int c) { return c < 0; })) {
            throw Error(ErrorCode::ConfigInfeasible, "correspondence counts must be nonnegative");
        }
        if (!projections.empty() && projections.size() != correspondences.size()) {
            throw Error(ErrorCode::ConfigInfeasible, "one projection model per view is required");
        }
        if (!(euler_range_deg >= 0.0 && euler_range_deg <= 180.0)) {
            throw Error(ErrorCode::ConfigInfeasible, "Euler range must lie in [0, 180] degrees");
        }
        if (n_points < 4 || n_bases < 1) {
            throw Error(ErrorCode::ConfigInfeasible, "need N >= 4 and M >= 1");
        }
        if (density != 0 && density < n_points) {
            throw Error(ErrorCode::ConfigInfeasible, "density must be 0 or at least N");
        }
        if (!(noise_sd >= 0.0) || !(min_depth > 0.0) || !(weight_max >= weight_min)) {
            throw Error(ErrorCode::ConfigInfeasible, "invalid noise, depth or weight range");
        }
    }
};

/**
 * Configuration ladder with a fixed total of 100 correspondences:
 * 1 = 2 x 50, 2 = 3 views (33, 33, 34), 3 = 4 x 25, 4 = 10 x 10, and
 * 5 = 100 x 1 for NS or 20 x 5 for NSC.
 */
inline std::vector<int> ladder_counts(int config_id, bool nsc)
{
    switch (config_id) {
    case 1: return {50, 50};
    case 2: return {33, 33, 34};
    case 3: return std::vector<int>(4, 25);
    case 4: return std::vector<int>(10, 10);
    case 5: return nsc ? std::vector<int>(20, 5) : std::vector<int>(100, 1);
    default: throw Error(ErrorCode::InvalidArgument, "ladder configuration must be 1..5");
    }
}

inline ScenarioConfig ladder_config(int config_id, bool nsc, std::uint64_t seed)
{
    ScenarioConfig c;
    c.config_id = config_id;
    c.seed = seed;
    c.correspondences = ladder_counts(config_id, nsc);
    c.n_points = std::max(c.n_points, std::accumulate(c.correspondences.begin(), c.correspondences.end(), 0));
    return c;
}

struct Scenario
{
    ScenarioConfig config;
    ShapeModel model;
    ShapeInstance gt_instance;
    std::vector<RigidTransform> gt_viewpoint_poses; ///< world_from_camera
    Points3 gt_points;                             ///< noiseless world points
    NsProblem ns;
    std::optional<NscProblem> nsc; ///< present when every view is perspective
    std::vector<SilhouetteObservation> silhouettes;
};

namespace detail {

/// Camera on a sphere around target, optical axis towards it, random roll.
template <class Rng>
RigidTransform look_at_pose(const Vec3& target, double radius, Rng& rng)
{
    std::normal_distribution<double> normal(0.0, 1.0);
    Vec3 dir(normal(rng), normal(rng), normal(rng));
    dir.normalize();
    const Vec3 centre = target + radius * dir;
    const Vec3 z = (target - centre).normalized();
    Vec3 up(normal(rng), normal(rng), normal(rng));
    Vec3 x = up.cross(z);
    if (x.norm() < 1e-6) {
        x = z.unitOrthogonal();
    }
    x.normalize();
    const Vec3 y = z.cross(x);
    Mat3 r;
    r.col(0) = x;
    r.col(1) = y;
    r.col(2) = z;
    return {nearest_rotation(r), centre};
}

inline nlohmann::json projection_json(ProjectionModel p)
{
    return p == ProjectionModel::perspective ? "perspective" : "orthographic";
}

} // namespace detail

/**
 * Builds the model, draws the ground-truth instance and viewpoints, and emits
 * NS (world rays) and NSC (camera-frame rays) problems over disjoint
 * correspondence sets. Noise is added to the 3D points before projection.
 */
inline Scenario generate_scenario(const ScenarioConfig& config)
{
    config.validate();
    std::mt19937_64 rng(config.seed);
    Scenario sc;
    sc.config = config;

    const auto population = generate_population(rng(), config.n_points, config.n_bases, config.deformation_scale);
    sc.model = build_ssm(population, 1.0);
    if (config.density > config.n_points) {
        sc.model = densify_for_silhouette(sc.model, config.density, rng());
    }

    std::uniform_real_distribution<double> weight(config.weight_min, config.weight_max);
    std::uniform_real_distribution<double> angle(-config.euler_range_deg, config.euler_range_deg);
    std::uniform_real_distribution<double> shift(-config.translation_range, config.translation_range);
    std::uniform_real_distribution<double> jitter(0.7, 1.3);
    std::normal_distribution<double> noise(0.0, 1.0);

    sc.gt_instance.weights.resize(sc.model.basis_count());
    for (int i = 0; i < sc.model.basis_count(); ++i) {
        sc.gt_instance.weights(i) = weight(rng);
    }
    const double yaw = angle(rng);
    const double pitch = angle(rng);
    const double roll = angle(rng);
    sc.gt_instance.pose.rotation = Rotation::from_euler_zyx(deg_to_rad(yaw), deg_to_rad(pitch), deg_to_rad(roll));
    sc.gt_instance.pose.translation = Vec3(shift(rng), shift(rng), shift(rng));
    sc.gt_points = instantiate(sc.model, sc.gt_instance);

    const Vec3 centroid = sc.gt_points.rowwise().mean();
    const double diagonal = (sc.gt_points.rowwise().maxCoeff() - sc.gt_points.rowwise().minCoeff()).norm();
    const int p = config.view_count();
    for (int x = 0; x < p; ++x) {
        sc.gt_viewpoint_poses.push_back(detail::look_at_pose(centroid, 3.0 * diagonal * jitter(rng), rng));
    }

    // disjoint shuffled chunks of template indices
    std::vector<int> pool(static_cast<std::size_t>(sc.model.point_count()));
    std::iota(pool.begin(), pool.end(), 0);
    std::shuffle(pool.begin(), pool.end(), rng);

    sc.ns.model = sc.model;
    sc.ns.trace_weight = config.trace_weight;
    bool all_perspective = true;
    NscProblem nsc;
    nsc.model = sc.model;
    nsc.trace_weight = config.trace_weight;
    std::size_t cursor = 0;
    for (int x = 0; x < p; ++x) {
        const ProjectionModel proj =
            config.projections.empty() ? ProjectionModel::perspective : config.projections[static_cast<std::size_t>(x)];
        all_perspective = all_perspective && proj == ProjectionModel::perspective;
        const RigidTransform& pose = sc.gt_viewpoint_poses[static_cast<std::size_t>(x)];
        const RigidTransform cam_from_world = pose.inverse();
        const int count = config.correspondences[static_cast<std::size_t>(x)];
        Points2 keypoints(2, count);
        std::vector<Ray> local;
        CorrespondenceSet set;
        for (int k = 0; k < count; ++k) {
            const int j = pool[cursor++];
            Vec3 world = sc.gt_points.col(j);
            if (config.noise_sd > 0.0) {
                world += config.noise_sd * Vec3(noise(rng), noise(rng), noise(rng));
            }
            const Vec3 cam = cam_from_world.apply(world);
            if (proj == ProjectionModel::perspective) {
                if (!(cam(2) > kDepthEpsilon)) {
                    throw Error(ErrorCode::NonPositiveDepth, "generated point behind viewpoint");
                }
                keypoints.col(k) = Vec2(cam(0) / cam(2), cam(1) / cam(2));
                local.emplace_back(Vec3::Zero(), cam);
            } else {
                keypoints.col(k) = Vec2(cam(0), cam(1));
            }
            set.push_back({j, k});
        }
        sc.ns.viewpoints.push_back({rays_from_keypoints(keypoints, pose, proj), pose, proj});
        sc.ns.correspondences.push_back(set);
        nsc.rays.push_back(std::move(local));
        nsc.correspondences.push_back(std::move(set));
        nsc.min_depths.push_back(config.min_depth);
    }
    if (all_perspective) {
        sc.nsc = std::move(nsc);
    }

    if (config.density > 0 && all_perspective) {
        for (int x = 0; x < p; ++x) {
            const ModelSilhouette sil =
                model_silhouette(sc.model, sc.gt_instance, sc.gt_viewpoint_poses[static_cast<std::size_t>(x)]);
            sc.silhouettes.push_back({sil.directions});
        }
    }
    return sc;
}

inline nlohmann::json config_to_json(const ScenarioConfig& c)
{
    nlohmann::json j;
    j["seed"] = c.seed;
    j["config_id"] = c.config_id;
    j["n_points"] = c.n_points;
    j["n_bases"] = c.n_bases;
    j["correspondences"] = c.correspondences;
    nlohmann::json proj = nlohmann::json::array();
    for (auto p : c.projections) {
        proj.push_back(detail::projection_json(p));
    }
    j["projections"] = proj;
    j["euler_range_deg"] = c.euler_range_deg;
    j["translation_range"] = c.translation_range;
    j["weight_range"] = {c.weight_min, c.weight_max};
    j["noise_sd"] = c.noise_sd;
    j["deformation_scale"] = c.deformation_scale;
    j["density"] = c.density;
    j["min_depth"] = c.min_depth;
    j["trace_weight"] = c.trace_weight;
    return j;
}

/// Missing fields keep their defaults; a ladder config_id without explicit counts expands to the NS ladder.
inline ScenarioConfig config_from_json(const nlohmann::json& j, bool nsc_ladder = false)
{
    if (!j.is_object()) {
        throw Error(ErrorCode::ParseError, "scenario config: top level must be an object");
    }
    ScenarioConfig c;
    try {
        c.seed = j.value("seed", c.seed);
        c.config_id = j.value("config_id", c.config_id);
        if (c.config_id >= 1 && c.config_id <= 5 && !j.contains("correspondences")) {
            c = ladder_config(c.config_id, nsc_ladder, c.seed);
        }
        c.n_points = j.value("n_points", c.n_points);
        c.n_bases = j.value("n_bases", c.n_bases);
        c.correspondences = j.value("correspondences", c.correspondences);
        if (j.contains("projections")) {
            c.projections.clear();
            for (const auto& p : j.at("projections")) {
                const auto s = p.get<std::string>();
                if (s == "perspective") {
                    c.projections.push_back(ProjectionModel::perspective);
                } else if (s == "orthographic") {
                    c.projections.push_back(ProjectionModel::orthographic);
                } else {
                    throw Error(ErrorCode::ParseError, "projections: unknown model '" + s + "'");
                }
            }
        }
        c.euler_range_deg = j.value("euler_range_deg", c.euler_range_deg);
        c.translation_range = j.value("translation_range", c.translation_range);
        if (j.contains("weight_range")) {
            const auto w = j.at("weight_range").get<std::vector<double>>();
            if (w.size() != 2) {
                throw Error(ErrorCode::ParseError, "weight_range: expected [min, max]");
            }
            c.weight_min = w[0];
            c.weight_max = w[1];
        }
        c.noise_sd = j.value("noise_sd", c.noise_sd);
        c.deformation_scale = j.value("deformation_scale", c.deformation_scale);
        c.density = j.value("density", c.density);
        c.min_depth = j.value("min_depth", c.min_depth);
        c.trace_weight = j.value("trace_weight", c.trace_weight);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("scenario config: ") + e.what());
    }
    return c;
}

} // namespace gsft

#endif // GSFT_SYNTH_HPP_
