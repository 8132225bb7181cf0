/*
 * gsft - Shape-from-Template with generalised cameras.
 *
 * File: include/gsft/nsc.hpp
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

#ifndef GSFT_NSC_HPP_
#define GSFT_NSC_HPP_

#include "gsft/conic.hpp"
#include "gsft/error.hpp"
#include "gsft/geometry.hpp"
#include "gsft/lifting.hpp"
#include "gsft/ns.hpp"
#include "gsft/shape_model.hpp"

#include "Eigen/Core"

#include <cmath>
#include <string>
#include <vector>

namespace gsft {

inline constexpr double kDefaultMinDepth = 0.1;

/**
 * SfT with unknown viewpoint extrinsics. Rays are expressed in each
 * viewpoint's own camera frame with the origin at zero, which fixes the
 * gauge; only directions carry information.
 */
struct NscProblem
{
    ShapeModel model;
    std::vector<std::vector<Ray>> rays;
    std::vector<CorrespondenceSet> correspondences;
    std::vector<double> min_depths;
    double trace_weight = kDefaultTraceWeight;
};

struct NscSolution
{
    Eigen::VectorXd weights;                    ///< shared shape (mean of per-view reads)
    std::vector<Eigen::VectorXd> view_weights;  ///< per-view scale-compensated reads
    std::vector<Eigen::VectorXd> lift_weights;  ///< row-0 weight segment of each lift (the chained entries)
    std::vector<RigidTransform> transforms;     ///< object frame -> camera x frame
    std::vector<RigidTransform> poses;          ///< camera x in the object frame (inverses)
    std::vector<RigidTransform> relative_poses; ///< camera x in the anchor camera frame
    double objective = 0.0;
    double weight_discrepancy = 0.0;
    SolveStatus status = SolveStatus::numerical_failure;
    std::vector<RankDiagnostics> rank; ///< per view; scale carries the drift estimate
    std::vector<bool> sign_flipped;
    LiftSolution lift;
    int iterations = 0;

    /// Object-frame shape of the shared weights.
    Points3 shape(const ShapeModel& model) const { return deform(model, weights); }
};

inline void validate(const NscProblem& problem)
{
    const std::size_t p = problem.rays.size();
    if (p == 0) {
        throw Error(ErrorCode::InvalidArgument, "NSC problem needs at least one viewpoint");
    }
    if (problem.min_depths.size() != p) {
        throw Error(ErrorCode::DimensionMismatch, "one minimum depth per viewpoint is required");
    }
    validate_correspondences(problem.model, problem.rays, problem.correspondences);
    for (std::size_t x = 0; x < p; ++x) {
        if (!(problem.min_depths[x] > 0.0)) {
            throw Error(ErrorCode::InvalidArgument, "minimum depths must be positive");
        }
        for (const auto& r : problem.rays[x]) {
            if (r.origin().cwiseAbs().maxCoeff() > 1e-12) {
                throw Error(ErrorCode::InvalidArgument,
                            "view " + std::to_string(x) + ": NSC rays must start at the camera origin");
            }
        }
    }
    if (correspondence_count(problem.correspondences) < 4) {
        throw Error(ErrorCode::InsufficientCorrespondences, "NSC needs at least 4 correspondences in total");
    }
    if (!(problem.trace_weight >= 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "trace weight must be nonnegative");
    }
}

/// Componentwise rigid inverse: camera poses from object-to-camera transforms.
inline std::vector<RigidTransform> recover_viewpoint_poses(const std::vector<RigidTransform>& transforms)
{
    std::vector<RigidTransform> poses;
    poses.reserve(transforms.size());
    for (const auto& t : transforms) {
        poses.push_back(t.inverse());
    }
    return poses;
}

/// L1 point-to-ray cost of one view for object-to-camera transform T and shape q.
inline double nsc_view_cost(const NscProblem& problem, std::size_t view, const Points3& shape,
                            const RigidTransform& transform)
{
    double cost = 0.0;
    for (const auto& c : problem.correspondences[view]) {
        cost += point_to_ray_residual(transform.apply(Vec3(shape.col(c.template_index))),
                                      problem.rays[view][static_cast<std::size_t>(c.ray_index)])
                    .lpNorm<1>();
    }
    return cost;
}

/**
 * Joint program: one Gram lift and one free translation per view, SO(3) row
 * constraints per lift, depth bound tau_x,z >= f_x, and weight entries of
 * consecutive lifts chained equal.
 */
inline NscSolution solve_nsc(const NscProblem& problem, SolverBackend& backend, nlohmann::json* dump = nullptr)
{
    validate(problem);
    const BackendCapabilities caps = backend.capabilities();
    if (!caps.psd_cone || !caps.free_variables || !caps.nonneg_cone) {
        throw Error(ErrorCode::InvalidArgument, "backend lacks PSD, free or nonneg support");
    }
    const ShapeModel& model = problem.model;
    const int m = model.basis_count();
    const std::size_t p = problem.rays.size();

    ConicProblem cp;
    std::vector<int> blocks(p);
    std::vector<int> tvecs(p);
    AffineExpr objective;
    for (std::size_t x = 0; x < p; ++x) {
        blocks[x] = cp.add_psd_block("Delta_" + std::to_string(x + 1), 10 + m);
        tvecs[x] = cp.add_free_vector("tau_" + std::to_string(x + 1), 3);
    }
    for (std::size_t x = 0; x < p; ++x) {
        const SymbolicGram g{&cp, blocks[x]};
        add_rotation_constraints(cp, g);
        objective += trace_expr(g) * problem.trace_weight;
        const auto tau = free_vec3(cp, tvecs[x]);
        for (const auto& c : problem.correspondences[x]) {
            const auto basis = model.basis_points(c.template_index);
            const auto expr = omega_b(g, tau, problem.rays[x][static_cast<std::size_t>(c.ray_index)],
                                      Vec3(model.mean().col(c.template_index)), basis);
            objective += assemble_l1_epigraph(cp, expr);
        }
        cp.add_inequality(AffineExpr::variable(cp.free_var(tvecs[x], 2)), problem.min_depths[x]);
        if (x + 1 < p) {
            for (int i = 0; i < m; ++i) {
                cp.add_equality(g(0, weight_index(i)) - SymbolicGram{&cp, blocks[x + 1]}(0, weight_index(i)), 0.0);
            }
        }
    }
    cp.add_objective(objective);
    if (dump != nullptr) {
        *dump = cp.to_json();
    }

    const ConicSolution sol = backend.solve(cp);
    if (sol.status == SolveStatus::infeasible || sol.status == SolveStatus::unbounded) {
        throw Error(ErrorCode::SolverInfeasible, std::string("conic solve reported ") + std::string(to_string(sol.status)));
    }

    NscSolution out;
    out.objective = sol.objective;
    out.status = sol.status;
    out.iterations = sol.iterations;
    out.lift.objective = sol.objective;
    out.lift.status = sol.status;
    std::vector<Extraction> ex(p);
    out.weights = Eigen::VectorXd::Zero(m);
    for (std::size_t x = 0; x < p; ++x) {
        const Eigen::MatrixXd d = sol.psd_matrix(cp, blocks[x]);
        out.lift.deltas.emplace_back(0.5 * (d + d.transpose()));
        out.lift.translations.emplace_back(sol.free_vector(cp, tvecs[x]));
        try {
            ex[x] = extract_solution(out.lift.deltas.back());
        } catch (const Error& e) {
            throw Error(ErrorCode::SolverFailure, "view " + std::to_string(x) + ": cannot extract a rotation: " + e.what());
        }
        out.lift_weights.push_back(ex[x].weights);
        out.view_weights.push_back(ex[x].coupled_weights);
        out.weights += ex[x].coupled_weights / static_cast<double>(p);
        out.rank.push_back(ex[x].diagnostics);
    }
    out.lift.rank = out.rank;
    for (const auto& w : out.view_weights) {
        out.weight_discrepancy = std::max(out.weight_discrepancy, (w - out.weights).cwiseAbs().maxCoeff());
    }
    if (out.weight_discrepancy > 1e-4 && out.status == SolveStatus::optimal) {
        out.status = SolveStatus::near_optimal;
    }

    // The relaxation tends to shrink the scene towards the camera (tau_z sits
    // on f_x while the putative rotation is s R). Directions are unaffected,
    // so undo the shrink on the translation.
    const Points3 q = deform(model, out.weights);
    for (std::size_t x = 0; x < p; ++x) {
        const double s = std::abs(ex[x].diagnostics.scale);
        const Vec3 tau = s > 1e-12 ? Vec3(out.lift.translations[x] / s) : out.lift.translations[x];
        RigidTransform t{ex[x].rotation, tau};
        bool flipped = false;
        if (ex[x].diagnostics.sign_ambiguous) {
            const RigidTransform alt{ex[x].flipped, -tau};
            if (alt.translation(2) > 0.0
                && nsc_view_cost(problem, x, q, alt) < nsc_view_cost(problem, x, q, t)) {
                t = alt;
                flipped = true;
            }
        }
        out.transforms.push_back(t);
        out.sign_flipped.push_back(flipped);
    }
    out.poses = recover_viewpoint_poses(out.transforms);
    const RigidTransform anchor_from_object = out.transforms.front();
    for (const auto& pose : out.poses) {
        out.relative_poses.push_back(anchor_from_object * pose);
    }
    return out;
}

/**
 * Analytic NSC cost with the object at object_pose and viewpoint x at
 * camera_poses[x] (camera in world). Each residual is measured in its
 * viewpoint's own frame, where the L1 norm is unaffected by a common rigid
 * motion of object and cameras.
 */
inline double nsc_cost(const NscProblem& problem, const Points3& shape, const RigidTransform& object_pose,
                       const std::vector<RigidTransform>& camera_poses)
{
    double cost = 0.0;
    for (std::size_t x = 0; x < problem.rays.size(); ++x) {
        cost += nsc_view_cost(problem, x, shape, camera_poses[x].inverse() * object_pose);
    }
    return cost;
}

/**
 * |cost after moving object and all camera centres by transform - cost
 * before|, for the candidate placed in its own object frame.
 */
inline double verify_gauge_freedom(const NscProblem& problem, const NscSolution& candidate,
                                   const RigidTransform& transform)
{
    const Points3 q = candidate.shape(problem.model);
    const RigidTransform object = RigidTransform::identity();
    const double before = nsc_cost(problem, q, object, candidate.poses);
    std::vector<RigidTransform> moved;
    moved.reserve(candidate.poses.size());
    for (const auto& pose : candidate.poses) {
        moved.push_back(transform * pose);
    }
    const double after = nsc_cost(problem, q, transform * object, moved);
    return std::abs(after - before);
}

} // namespace gsft

#endif // GSFT_NSC_HPP_
