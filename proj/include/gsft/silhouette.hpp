/*
 * gsft - Shape-from-Template with generalised cameras.
 *
 * File: include/gsft/silhouette.hpp
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

#ifndef GSFT_SILHOUETTE_HPP_
#define GSFT_SILHOUETTE_HPP_

#include "gsft/alpha_shape.hpp"
#include "gsft/conic.hpp"
#include "gsft/error.hpp"
#include "gsft/geometry.hpp"
#include "gsft/ns.hpp"
#include "gsft/shape_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <set>
#include <tuple>
#include <vector>

namespace gsft {

/// Observed outline of one view as world-frame unit directions from the view centre.
struct SilhouetteObservation
{
    std::vector<Vec3> directions;
};

/// Model outline: template indices on the boundary and their unit directions.
struct ModelSilhouette
{
    std::vector<int> indices;
    std::vector<Vec3> directions;
};

/// Pairs (s, s'): model boundary position s matched to observed position s'.
struct SilhouetteCorrespondence
{
    std::vector<std::pair<int, int>> pairs;
};

inline constexpr int kMaxSilhouetteDirections = 512;
inline constexpr double kDefaultLambda = 0.5;
inline constexpr int kDefaultMaxIterations = 50;

/**
 * Projects the instantiated model into the view (view_pose is
 * world_from_camera), takes the auto-alpha outline and returns the world
 * directions of the outline points.
 */
inline ModelSilhouette model_silhouette(const ShapeModel& model, const ShapeInstance& instance,
                                        const RigidTransform& view_pose)
{
    const Points3 world = instantiate(model, instance);
    const Points2 image = project_perspective(world, view_pose.inverse());
    ModelSilhouette sil;
    sil.indices = alpha_silhouette(image);
    const Mat3& r = view_pose.rotation.matrix();
    for (int idx : sil.indices) {
        sil.directions.push_back((r * Vec3(image(0, idx), image(1, idx), 1.0)).normalized());
    }
    return sil;
}

/// Each model boundary direction picks the observed direction with the smallest cross-product norm.
inline SilhouetteCorrespondence match_silhouettes(const ModelSilhouette& model_sil,
                                                  const SilhouetteObservation& observed)
{
    if (model_sil.directions.empty() || observed.directions.empty()) {
        throw Error(ErrorCode::InvalidArgument, "silhouettes to match must be non-empty");
    }
    SilhouetteCorrespondence out;
    out.pairs.reserve(model_sil.directions.size());
    for (std::size_t s = 0; s < model_sil.directions.size(); ++s) {
        double best = std::numeric_limits<double>::infinity();
        int arg = 0;
        for (std::size_t k = 0; k < observed.directions.size(); ++k) {
            const double v = model_sil.directions[s].cross(observed.directions[k]).norm();
            if (v < best) {
                best = v;
                arg = static_cast<int>(k);
            }
        }
        out.pairs.emplace_back(static_cast<int>(s), arg);
    }
    return out;
}

/**
 * Keeps at most max_count directions, evenly spaced by arc length along the
 * closed outline.
 */
inline SilhouetteObservation resample_silhouette(const SilhouetteObservation& obs,
                                                 int max_count = kMaxSilhouetteDirections)
{
    const auto n = static_cast<int>(obs.directions.size());
    if (n <= max_count) {
        return obs;
    }
    std::vector<double> cumulative(static_cast<std::size_t>(n) + 1, 0.0);
    for (int k = 0; k < n; ++k) {
        const Vec3& a = obs.directions[static_cast<std::size_t>(k)];
        const Vec3& b = obs.directions[static_cast<std::size_t>((k + 1) % n)];
        cumulative[static_cast<std::size_t>(k) + 1] =
            cumulative[static_cast<std::size_t>(k)] + std::atan2(a.cross(b).norm(), a.dot(b));
    }
    const double total = cumulative.back();
    SilhouetteObservation out;
    std::size_t k = 0;
    std::size_t last = static_cast<std::size_t>(n);
    for (int s = 0; s < max_count; ++s) {
        const double target = total * s / max_count;
        while (k + 1 < static_cast<std::size_t>(n) && cumulative[k + 1] <= target) {
            ++k;
        }
        if (k != last) {
            out.directions.push_back(obs.directions[k]);
            last = k;
        }
    }
    return out;
}

struct BoostIteration
{
    double objective = 0.0;
    std::optional<double> rmse;
    int pair_count = 0;
    int new_pairs = 0; ///< triples absent from the previous matching
    double rank_ratio = 0.0;
};

struct BoostResult
{
    NsSolution solution;
    NsSolution initial;
    std::vector<BoostIteration> trace; ///< entry 0 is the plain NS solve
    bool converged = false;
    int iterations = 0;
};

/**
 * Silhouette-boosted NS. Starting from plain NS, alternates between matching
 * the current model outline to the observed outline in every view and
 * re-solving with correspondence terms weighted lambda and outline terms
 * weighted 1 - lambda. Stops once a matching adds no (view, template point,
 * observed direction) triple beyond the previous one; otherwise returns the
 * iterate with the lowest objective after max_iters.
 */
inline BoostResult solve_silhouette_boosted_ns(const NsProblem& problem,
                                               const std::vector<SilhouetteObservation>& observations,
                                               double lambda, int max_iters, SolverBackend& backend,
                                               const Points3* ground_truth = nullptr)
{
    validate(problem);
    if (observations.size() != problem.viewpoints.size()) {
        throw Error(ErrorCode::DimensionMismatch, "one silhouette observation per viewpoint is required");
    }
    if (!(lambda >= 0.0 && lambda <= 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "lambda must lie in [0, 1]");
    }
    if (max_iters < 1) {
        throw Error(ErrorCode::InvalidArgument, "max_iters must be positive");
    }
    for (const auto& v : problem.viewpoints) {
        if (!v.pose) {
            throw Error(ErrorCode::InvalidArgument, "silhouette boosting needs every viewpoint pose");
        }
        if (v.projection != ProjectionModel::perspective) {
            throw Error(ErrorCode::InvalidArgument, "silhouette boosting supports perspective viewpoints only");
        }
    }
    std::vector<SilhouetteObservation> observed;
    for (const auto& o : observations) {
        if (o.directions.size() < 3) {
            throw Error(ErrorCode::InvalidArgument, "silhouette observations need at least 3 directions");
        }
        observed.push_back(resample_silhouette(o));
    }

    auto rmse_of = [&](const Points3& recon) -> std::optional<double> {
        if (ground_truth == nullptr) {
            return std::nullopt;
        }
        return std::sqrt((recon - *ground_truth).colwise().squaredNorm().mean());
    };

    BoostResult result;
    result.initial = solve_ns(problem, backend);
    result.trace.push_back(
        {result.initial.objective, rmse_of(result.initial.reconstruction), 0, 0, result.initial.rank.ratio});

    using Key = std::tuple<int, int, int>;
    std::set<Key> previous;
    NsSolution current = result.initial;
    std::optional<NsSolution> best;
    const auto base_terms = correspondence_terms(problem, lambda);
    for (int it = 1; it <= max_iters; ++it) {
        std::set<Key> pairs;
        std::vector<RayTerm> terms = base_terms;
        for (std::size_t x = 0; x < problem.viewpoints.size(); ++x) {
            const RigidTransform& pose = *problem.viewpoints[x].pose;
            const ModelSilhouette sil = model_silhouette(problem.model, current.instance, pose);
            const SilhouetteCorrespondence match = match_silhouettes(sil, observed[x]);
            for (const auto& [s, sp] : match.pairs) {
                const int j = sil.indices[static_cast<std::size_t>(s)];
                if (pairs.emplace(static_cast<int>(x), j, sp).second) {
                    terms.push_back({Ray(pose.translation, observed[x].directions[static_cast<std::size_t>(sp)]), j,
                                     1.0 - lambda});
                }
            }
        }
        int fresh = 0;
        for (const auto& k : pairs) {
            fresh += previous.count(k) == 0 ? 1 : 0;
        }
        if (it > 1 && fresh == 0) {
            result.converged = true;
            result.iterations = it - 1;
            break;
        }
        NsSolution next = solve_ray_terms(problem.model, terms, problem.trace_weight, backend);
        next.residuals = ns_residuals(problem, next.reconstruction);
        result.trace.push_back(
            {next.objective, rmse_of(next.reconstruction), static_cast<int>(pairs.size()), fresh, next.rank.ratio});
        if (!best || next.objective < best->objective) {
            best = next;
        }
        current = std::move(next);
        previous = std::move(pairs);
        result.iterations = it;
    }
    result.solution = result.converged ? current : *best;
    return result;
}

} // namespace gsft

#endif // GSFT_SILHOUETTE_HPP_
