/*
 * gsft - Shape-from-Template with generalised cameras.
 *
 * File: include/gsft/lifting.hpp
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

#ifndef GSFT_LIFTING_HPP_
#define GSFT_LIFTING_HPP_

#include "gsft/conic.hpp"
#include "gsft/error.hpp"
#include "gsft/geometry.hpp"

#include "Eigen/Core"
#include "Eigen/Eigenvalues"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace gsft {

/**
 * Gram matrix of xi = (1, vec(R) row-major, w_1..w_M), dimension 10 + M.
 *
 * Index layout (0-based): 0 is the homogeneous entry, 1 + 3r + c holds
 * R(r, c), and 10 + i holds w_i.
 */
class GramLift
{
public:
    GramLift() = default;

    explicit GramLift(Eigen::MatrixXd matrix) : matrix_(std::move(matrix))
    {
        if (matrix_.rows() != matrix_.cols() || matrix_.rows() < 10) {
            throw Error(ErrorCode::DimensionMismatch, "Gram lift must be square with dimension >= 10");
        }
        if ((matrix_ - matrix_.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, matrix_.cwiseAbs().maxCoeff())) {
            throw Error(ErrorCode::InvalidArgument, "Gram lift must be symmetric");
        }
    }

    int dim() const noexcept { return static_cast<int>(matrix_.rows()); }
    int basis_count() const noexcept { return dim() - 10; }
    const Eigen::MatrixXd& matrix() const noexcept { return matrix_; }
    double operator()(int i, int j) const { return matrix_(i, j); }

private:
    Eigen::MatrixXd matrix_;
};

inline constexpr int rotation_index(int r, int c) { return 1 + 3 * r + c; }
inline constexpr int weight_index(int i) { return 10 + i; }

inline Eigen::VectorXd lift_vector(const Rotation& rotation, const Eigen::VectorXd& weights)
{
    Eigen::VectorXd xi(10 + weights.size());
    xi(0) = 1.0;
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) {
            xi(rotation_index(r, c)) = rotation.matrix()(r, c);
        }
    }
    xi.tail(weights.size()) = weights;
    return xi;
}

/// Rank-1 lift xi xi' of a rotation and weight vector.
inline GramLift lift_from_parameters(const Rotation& rotation, const Eigen::VectorXd& weights)
{
    const Eigen::VectorXd xi = lift_vector(rotation, weights);
    return GramLift(xi * xi.transpose());
}

/// Symbolic view of a PSD block of a ConicProblem as a Gram lift.
struct SymbolicGram
{
    const ConicProblem* problem = nullptr;
    int block = 0;

    int dim() const { return problem->psd_blocks().at(static_cast<std::size_t>(block)).dim; }
    AffineExpr operator()(int i, int j) const { return AffineExpr::variable(problem->psd_var(block, i, j)); }
};

/**
 * The sampling operators below are templates over a Gram accessor g(i, j):
 * GramLift gives numbers, SymbolicGram gives affine expressions in the
 * problem variables. Both paths share the same index arithmetic.
 */
template <class Gram>
auto omega_a(const Gram& g)
{
    using Scalar = decltype(g(0, 0));
    Scalar acc(0.0);
    for (int i = 10; i < g.dim(); ++i) {
        acc += g(i, i);
    }
    return acc;
}

/// Trace of the diagonal block of rotation row r (1-based).
template <class Gram>
auto omega_c(const Gram& g, int r)
{
    if (r < 1 || r > 3) {
        throw Error(ErrorCode::InvalidArgument, "rotation row must lie in 1..3");
    }
    using Scalar = decltype(g(0, 0));
    Scalar acc(0.0);
    for (int c = 0; c < 3; ++c) {
        acc += g(rotation_index(r - 1, c), rotation_index(r - 1, c));
    }
    return acc;
}

/// Trace of the off-diagonal block pairing rotation rows (1,2), (1,3), (2,3) for r = 1, 2, 3.
template <class Gram>
auto omega_d(const Gram& g, int r)
{
    static constexpr std::array<std::array<int, 2>, 3> pairs{{{0, 1}, {0, 2}, {1, 2}}};
    if (r < 1 || r > 3) {
        throw Error(ErrorCode::InvalidArgument, "row pair index must lie in 1..3");
    }
    const auto [a, b] = pairs[static_cast<std::size_t>(r - 1)];
    using Scalar = decltype(g(0, 0));
    Scalar acc(0.0);
    for (int c = 0; c < 3; ++c) {
        acc += g(rotation_index(a, c), rotation_index(b, c));
    }
    return acc;
}

/**
 * (P_up - ray.origin) x ray.direction, where
 * P_up_r = sum_c g(0, 1+3r+c) pbar_c + sum_i sum_c g(10+i, 1+3r+c) p_ic + t_r.
 *
 * On a rank-1 lift of (R, w) this is exactly (R Q_j + t - C) x d. The basis
 * term reads the w_i vec(R) products from rows 10 + i.
 */
template <class Gram, class Scalar>
std::array<Scalar, 3> omega_b(const Gram& g, const std::array<Scalar, 3>& translation, const Ray& ray,
                              const Vec3& mean_point, std::span<const Vec3> basis_points)
{
    const int m = g.dim() - 10;
    if (static_cast<int>(basis_points.size()) != m) {
        throw Error(ErrorCode::DimensionMismatch, "expected " + std::to_string(m) + " basis points, got "
                                                      + std::to_string(basis_points.size()));
    }
    std::array<Scalar, 3> p;
    for (int r = 0; r < 3; ++r) {
        Scalar acc = translation[static_cast<std::size_t>(r)];
        acc -= Scalar(ray.origin()(r));
        for (int c = 0; c < 3; ++c) {
            if (mean_point(c) != 0.0) {
                acc += g(0, rotation_index(r, c)) * mean_point(c);
            }
            for (int i = 0; i < m; ++i) {
                const double v = basis_points[static_cast<std::size_t>(i)](c);
                if (v != 0.0) {
                    acc += g(weight_index(i), rotation_index(r, c)) * v;
                }
            }
        }
        p[static_cast<std::size_t>(r)] = std::move(acc);
    }
    const Vec3& d = ray.direction();
    return {p[1] * d(2) - p[2] * d(1), p[2] * d(0) - p[0] * d(2), p[0] * d(1) - p[1] * d(0)};
}

/// Numeric convenience form.
inline Vec3 omega_b(const GramLift& g, const Vec3& translation, const Ray& ray, const Vec3& mean_point,
                    std::span<const Vec3> basis_points)
{
    const std::array<double, 3> t{translation(0), translation(1), translation(2)};
    const auto r = omega_b<GramLift, double>(g, t, ray, mean_point, basis_points);
    return {r[0], r[1], r[2]};
}

/// Symbolic translation vector for a free 3-vector of the problem.
inline std::array<AffineExpr, 3> free_vec3(const ConicProblem& problem, int vec)
{
    return {AffineExpr::variable(problem.free_var(vec, 0)), AffineExpr::variable(problem.free_var(vec, 1)),
            AffineExpr::variable(problem.free_var(vec, 2))};
}

/**
 * Epigraph of ||expr||_1: one (u+, u-) nonnegative pair per component with
 * u+ - u- = expr_k. Returns sum(u+ + u-), which the caller adds (scaled) to
 * the objective; at an optimum it equals the L1 norm.
 */
inline AffineExpr assemble_l1_epigraph(ConicProblem& problem, std::span<const AffineExpr> expr)
{
    const int first = problem.add_nonneg(2 * static_cast<int>(expr.size()));
    AffineExpr contribution;
    for (std::size_t k = 0; k < expr.size(); ++k) {
        const int up = first + 2 * static_cast<int>(k);
        AffineExpr row = AffineExpr::variable(up) - AffineExpr::variable(up + 1) - expr[k];
        const double rhs = -row.constant;
        row.constant = 0.0;
        problem.add_equality(std::move(row), rhs);
        contribution += AffineExpr::variable(up) + AffineExpr::variable(up + 1);
    }
    return contribution;
}

/// Delta_00 = 1 and the row-orthonormality constraints omega_c = 1, omega_d = 0.
inline void add_rotation_constraints(ConicProblem& problem, const SymbolicGram& g)
{
    problem.add_equality(g(0, 0), 1.0);
    for (int r = 1; r <= 3; ++r) {
        problem.add_equality(omega_c(g, r), 1.0);
    }
    for (int r = 1; r <= 3; ++r) {
        problem.add_equality(omega_d(g, r), 0.0);
    }
}

/// tr(Delta) as an affine expression.
inline AffineExpr trace_expr(const SymbolicGram& g)
{
    AffineExpr acc;
    for (int i = 0; i < g.dim(); ++i) {
        acc += g(i, i);
    }
    return acc;
}

inline constexpr double kRankOneThreshold = 1e-4;

struct RankDiagnostics
{
    std::vector<double> eigenvalues; ///< descending
    double ratio = 0.0;              ///< lambda_2 / lambda_1
    double scale = 1.0;              ///< cube root of det of the putative rotation
    bool high_rank = false;
    bool sign_ambiguous = false; ///< putative rotation had negative determinant
};

struct Extraction
{
    Rotation rotation;
    Rotation flipped; ///< nearest rotation to the negated putative matrix
    Eigen::VectorXd weights;
    /// w_i from the w_i vec(R) rows projected on the putative vec(R). Equal
    /// to weights on rank-1 lifts but unaffected by a uniform scale of the
    /// rotation block.
    Eigen::VectorXd coupled_weights;
    Mat3 putative;
    RankDiagnostics diagnostics;
};

inline RankDiagnostics rank_diagnostics(const Eigen::MatrixXd& m, double threshold = kRankOneThreshold)
{
    RankDiagnostics d;
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
    const Eigen::VectorXd ev = eig.eigenvalues();
    d.eigenvalues.assign(ev.data(), ev.data() + ev.size());
    std::sort(d.eigenvalues.begin(), d.eigenvalues.end(), std::greater<>());
    const double l1 = d.eigenvalues.front();
    const double l2 = d.eigenvalues.size() > 1 ? d.eigenvalues[1] : 0.0;
    d.ratio = l1 > 0.0 ? std::max(0.0, l2) / l1 : std::numeric_limits<double>::infinity();
    d.high_rank = !(d.ratio <= threshold);
    return d;
}

/**
 * Reads the putative rotation and weights from row 0 of Delta (exact on
 * rank-1 lifts since xi_0 = 1) and projects the rotation onto SO(3).
 * Also fills the scale-compensated coupled weights.
 */
inline Extraction extract_solution(const GramLift& delta, double threshold = kRankOneThreshold)
{
    Extraction e;
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) {
            e.putative(r, c) = delta(0, rotation_index(r, c));
        }
    }
    const int m = delta.basis_count();
    e.weights = delta.matrix().row(0).tail(m).transpose();
    e.coupled_weights = e.weights;
    const Eigen::VectorXd rot = delta.matrix().row(0).segment(1, 9).transpose();
    const double norm2 = rot.squaredNorm();
    if (norm2 > 0.0) {
        for (int i = 0; i < m; ++i) {
            e.coupled_weights(i) = delta.matrix().row(weight_index(i)).segment(1, 9).dot(rot) / norm2;
        }
    }
    e.diagnostics = rank_diagnostics(delta.matrix(), threshold);
    const double det = e.putative.determinant();
    e.diagnostics.scale = std::cbrt(det);
    e.diagnostics.sign_ambiguous = det < 0.0;
    e.rotation = nearest_rotation(e.putative);
    e.flipped = nearest_rotation(-e.putative);
    return e;
}

/// Solver output shared by the NS and NSC front ends.
struct LiftSolution
{
    std::vector<GramLift> deltas;
    std::vector<Vec3> translations;
    double objective = 0.0;
    SolveStatus status = SolveStatus::numerical_failure;
    std::vector<RankDiagnostics> rank;
};

} // namespace gsft

#endif // GSFT_LIFTING_HPP_
