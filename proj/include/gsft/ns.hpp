/*
 * gsft - Shape-from-Template with generalised cameras.
 *
 * File: include/gsft/ns.hpp
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

#ifndef GSFT_NS_HPP_
#define GSFT_NS_HPP_

#include "gsft/conic.hpp"
#include "gsft/error.hpp"
#include "gsft/geometry.hpp"
#include "gsft/lifting.hpp"
#include "gsft/shape_model.hpp"

#include "Eigen/Core"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gsft {

/// Template point j observed along ray j' of the same viewpoint.
struct Correspondence
{
    int template_index = 0;
    int ray_index = 0;

    bool operator==(const Correspondence&) const = default;
};

using CorrespondenceSet = std::vector<Correspondence>;

/// World-frame sightlines of one viewpoint. The pose (world_from_camera) is
/// needed only by operations that reason about the camera itself.
struct Viewpoint
{
    std::vector<Ray> rays;
    std::optional<RigidTransform> pose;
    ProjectionModel projection = ProjectionModel::perspective;
};

inline constexpr double kDefaultTraceWeight = 1e-3;

struct NsProblem
{
    ShapeModel model;
    std::vector<Viewpoint> viewpoints;
    std::vector<CorrespondenceSet> correspondences;
    double trace_weight = kDefaultTraceWeight;
};

struct NsSolution
{
    ShapeInstance instance;
    Points3 reconstruction;
    double objective = 0.0;
    SolveStatus status = SolveStatus::numerical_failure;
    RankDiagnostics rank;
    bool sign_flipped = false;
    std::vector<std::vector<double>> residuals; ///< perpendicular distances per view and correspondence
    LiftSolution lift;
    int iterations = 0;
};

inline void validate_correspondences(const ShapeModel& model, std::span<const std::vector<Ray>> rays,
                                     std::span<const CorrespondenceSet> sets)
{
    if (rays.size() != sets.size()) {
        throw Error(ErrorCode::DimensionMismatch, "viewpoint and correspondence lists differ in length");
    }
    for (std::size_t x = 0; x < sets.size(); ++x) {
        for (const auto& c : sets[x]) {
            if (c.template_index < 0 || c.template_index >= model.point_count() || c.ray_index < 0
                || c.ray_index >= static_cast<int>(rays[x].size())) {
                throw Error(ErrorCode::InvalidArgument, "view " + std::to_string(x) + ": correspondence ("
                                                            + std::to_string(c.template_index) + ", "
                                                            + std::to_string(c.ray_index) + ") out of range");
            }
        }
    }
}

inline std::size_t correspondence_count(std::span<const CorrespondenceSet> sets)
{
    std::size_t n = 0;
    for (const auto& s : sets) {
        n += s.size();
    }
    return n;
}

inline void validate(const NsProblem& problem)
{
    if (problem.viewpoints.empty()) {
        throw Error(ErrorCode::InvalidArgument, "NS problem needs at least one viewpoint");
    }
    std::vector<std::vector<Ray>> rays;
    for (const auto& v : problem.viewpoints) {
        rays.push_back(v.rays);
    }
    validate_correspondences(problem.model, rays, problem.correspondences);
    if (correspondence_count(problem.correspondences) < 4) {
        throw Error(ErrorCode::InsufficientCorrespondences, "NS needs at least 4 correspondences in total");
    }
    if (!(problem.trace_weight >= 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "trace weight must be nonnegative");
    }
}

/// One weighted point-on-ray term of the NS program.
struct RayTerm
{
    Ray ray;
    int template_index = 0;
    double weight = 1.0;
};

/// Weighted L1 sum of point-to-ray residuals plus the trace term, for a candidate instance.
inline double ns_objective(const ShapeModel& model, std::span<const RayTerm> terms, const ShapeInstance& instance,
                           double trace_weight)
{
    const Points3 v = instantiate(model, instance);
    double cost = trace_weight * (4.0 + instance.weights.squaredNorm());
    for (const auto& t : terms) {
        cost += t.weight * point_to_ray_residual(v.col(t.template_index), t.ray).lpNorm<1>();
    }
    return cost;
}

inline std::vector<RayTerm> correspondence_terms(const NsProblem& problem, double weight = 1.0)
{
    std::vector<RayTerm> terms;
    for (std::size_t x = 0; x < problem.viewpoints.size(); ++x) {
        for (const auto& c : problem.correspondences[x]) {
            terms.push_back({problem.viewpoints[x].rays[static_cast<std::size_t>(c.ray_index)], c.template_index,
                             weight});
        }
    }
    return terms;
}

/**
 * Builds and solves the single-lift program
 *   min eps' tr(Delta) + sum_k weight_k ||omega_b(Delta, t, ray_k, ...)||_1
 * under the SO(3) row constraints, then extracts (R, w) and t. Terms with
 * zero weight are left out of the program.
 */
inline NsSolution solve_ray_terms(const ShapeModel& model, std::span<const RayTerm> terms, double trace_weight,
                                  SolverBackend& backend, nlohmann::json* dump = nullptr)
{
    const BackendCapabilities caps = backend.capabilities();
    if (!caps.psd_cone || !caps.free_variables || !caps.nonneg_cone) {
        throw Error(ErrorCode::InvalidArgument, "backend lacks PSD, free or nonneg support");
    }
    ConicProblem cp;
    const int m = model.basis_count();
    const int block = cp.add_psd_block("Delta", 10 + m);
    const int tvec = cp.add_free_vector("t", 3);
    const SymbolicGram g{&cp, block};
    add_rotation_constraints(cp, g);
    AffineExpr objective = trace_expr(g) * trace_weight;
    const auto t = free_vec3(cp, tvec);
    for (const auto& term : terms) {
        if (term.weight == 0.0) {
            continue;
        }
        const auto basis = model.basis_points(term.template_index);
        const auto expr = omega_b(g, t, term.ray, Vec3(model.mean().col(term.template_index)), basis);
        objective += assemble_l1_epigraph(cp, expr) * term.weight;
    }
    cp.add_objective(objective);
    if (dump != nullptr) {
        *dump = cp.to_json();
    }

    const ConicSolution sol = backend.solve(cp);
    if (sol.status == SolveStatus::infeasible || sol.status == SolveStatus::unbounded) {
        throw Error(ErrorCode::SolverInfeasible, std::string("conic solve reported ") + std::string(to_string(sol.status)));
    }
    const GramLift delta(0.5 * (sol.psd_matrix(cp, block) + sol.psd_matrix(cp, block).transpose()));
    const Vec3 tsol = sol.free_vector(cp, tvec);
    Extraction ex;
    try {
        ex = extract_solution(delta);
    } catch (const Error& e) {
        throw Error(ErrorCode::SolverFailure, std::string("cannot extract a rotation: ") + e.what());
    }

    NsSolution out;
    out.instance = {ex.weights, {ex.rotation, tsol}};
    if (ex.diagnostics.sign_ambiguous) {
        const ShapeInstance alt{ex.weights, {ex.flipped, -tsol}};
        if (ns_objective(model, terms, alt, trace_weight) < ns_objective(model, terms, out.instance, trace_weight)) {
            out.instance = alt;
            out.sign_flipped = true;
        }
    }
    out.reconstruction = instantiate(model, out.instance);
    out.objective = sol.objective;
    out.status = sol.status;
    out.rank = ex.diagnostics;
    out.iterations = sol.iterations;
    out.lift.deltas = {delta};
    out.lift.translations = {tsol};
    out.lift.objective = sol.objective;
    out.lift.status = sol.status;
    out.lift.rank = {ex.diagnostics};
    return out;
}

inline std::vector<std::vector<double>> ns_residuals(const NsProblem& problem, const Points3& reconstruction)
{
    std::vector<std::vector<double>> res(problem.viewpoints.size());
    for (std::size_t x = 0; x < problem.viewpoints.size(); ++x) {
        for (const auto& c : problem.correspondences[x]) {
            res[x].push_back(point_to_ray_residual(reconstruction.col(c.template_index),
                                                   problem.viewpoints[x].rays[static_cast<std::size_t>(c.ray_index)])
                                 .norm());
        }
    }
    return res;
}

/// SfT with known viewpoint poses: shape weights and object pose from rays of all viewpoints.
inline NsSolution solve_ns(const NsProblem& problem, SolverBackend& backend, nlohmann::json* dump = nullptr)
{
    validate(problem);
    const auto terms = correspondence_terms(problem);
    NsSolution sol = solve_ray_terms(problem.model, terms, problem.trace_weight, backend, dump);
    sol.residuals = ns_residuals(problem, sol.reconstruction);
    return sol;
}

struct SingleViewReduction
{
    NsProblem problem;
    RigidTransform world_from_frame; ///< maps the reduced problem's frame to the original world frame
};

/**
 * Merges all viewpoints into one, expressed in the frame of viewpoint 0
 * (world frame when that pose is unknown). Instances solved in the reduced
 * problem map back to the world by world_from_frame.
 */
inline SingleViewReduction reduce_to_single_view(const NsProblem& problem)
{
    if (problem.viewpoints.empty()) {
        throw Error(ErrorCode::InvalidArgument, "nothing to reduce");
    }
    if (problem.viewpoints.size() == 1) {
        return {problem, RigidTransform::identity()};
    }
    const RigidTransform world_from_frame = problem.viewpoints.front().pose.value_or(RigidTransform::identity());
    const RigidTransform frame_from_world = world_from_frame.inverse();
    const Mat3& rt = frame_from_world.rotation.matrix();
    Viewpoint merged;
    merged.pose = RigidTransform::identity();
    merged.projection = problem.viewpoints.front().projection;
    CorrespondenceSet set;
    for (std::size_t x = 0; x < problem.viewpoints.size(); ++x) {
        const int offset = static_cast<int>(merged.rays.size());
        for (const auto& r : problem.viewpoints[x].rays) {
            merged.rays.emplace_back(frame_from_world.apply(r.origin()), rt * r.direction());
        }
        for (const auto& c : problem.correspondences.at(x)) {
            set.push_back({c.template_index, c.ray_index + offset});
        }
    }
    NsProblem out{problem.model, {std::move(merged)}, {std::move(set)}, problem.trace_weight};
    return {std::move(out), world_from_frame};
}

} // namespace gsft

#endif // GSFT_NS_HPP_
