/*
 * gsft - Shape-from-Template with generalised cameras.
 *
 * File: include/gsft/geometry.hpp
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

#ifndef GSFT_GEOMETRY_HPP_
#define GSFT_GEOMETRY_HPP_

#include "gsft/error.hpp"

#include "Eigen/Core"
#include "Eigen/Geometry"
#include "Eigen/SVD"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

namespace gsft {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Points2 = Eigen::Matrix2Xd;
using Points3 = Eigen::Matrix3Xd;

inline constexpr double kDepthEpsilon = 1e-9;

inline double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

/**
 * A sightline: a ray in space given by an origin and a unit direction.
 *
 * The direction is normalised on construction; every use site relies on
 * ||direction|| = 1 so that cross products with it are exact perpendicular
 * distances.
 */
class Ray
{
public:
    Ray() = default;

    Ray(const Vec3& origin, const Vec3& direction) : origin_(origin)
    {
        const double norm = direction.norm();
        if (!(norm > 0.0) || !std::isfinite(norm)) {
            throw Error(ErrorCode::InvalidArgument, "ray direction must be a finite non-zero vector");
        }
        direction_ = direction / norm;
    }

    const Vec3& origin() const noexcept { return origin_; }
    const Vec3& direction() const noexcept { return direction_; }

private:
    Vec3 origin_ = Vec3::Zero();
    Vec3 direction_ = Vec3::UnitZ();
};

/**
 * An element of SO(3). Construction from an arbitrary matrix validates
 * orthonormality and det = +1 to 1e-9.
 */
class Rotation
{
public:
    Rotation() : matrix_(Mat3::Identity()) {}

    static Rotation identity() { return Rotation(); }

    static Rotation from_matrix(const Mat3& m, double tolerance = 1e-9)
    {
        if (!m.allFinite() || ((m * m.transpose()) - Mat3::Identity()).cwiseAbs().maxCoeff() > tolerance
            || std::abs(m.determinant() - 1.0) > tolerance) {
            throw Error(ErrorCode::InvalidArgument, "matrix is not a rotation");
        }
        return Rotation(m, Unchecked{});
    }

    /// R = Rz(yaw) * Ry(pitch) * Rx(roll), angles in radians.
    static Rotation from_euler_zyx(double yaw, double pitch, double roll)
    {
        const Mat3 m = (Eigen::AngleAxisd(yaw, Vec3::UnitZ()) * Eigen::AngleAxisd(pitch, Vec3::UnitY())
                        * Eigen::AngleAxisd(roll, Vec3::UnitX()))
                           .toRotationMatrix();
        return Rotation(m, Unchecked{});
    }

    static Rotation from_axis_angle(const Vec3& axis, double angle)
    {
        return Rotation(Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix(), Unchecked{});
    }

    /// Haar-uniform random rotation (normalised Gaussian quaternion).
    template <class Rng>
    static Rotation random(Rng& rng)
    {
        std::normal_distribution<double> normal(0.0, 1.0);
        Eigen::Quaterniond q(normal(rng), normal(rng), normal(rng), normal(rng));
        q.normalize();
        return Rotation(q.toRotationMatrix(), Unchecked{});
    }

    const Mat3& matrix() const noexcept { return matrix_; }

    Rotation inverse() const { return Rotation(matrix_.transpose(), Unchecked{}); }

    Rotation operator*(const Rotation& other) const { return Rotation(matrix_ * other.matrix_, Unchecked{}); }
    Vec3 operator*(const Vec3& v) const { return matrix_ * v; }

    /// Angle of the relative rotation, in radians. Chord form: |A - B|_F =
    /// 2 sqrt(2) sin(angle / 2). acos of the trace loses everything below 1e-8.
    double angle_to(const Rotation& other) const
    {
        const double chord = (matrix_ - other.matrix_).norm() / (2.0 * std::sqrt(2.0));
        return 2.0 * std::asin(std::min(chord, 1.0));
    }

private:
    struct Unchecked {};
    Rotation(const Mat3& m, Unchecked) : matrix_(m) {}

    friend Rotation nearest_rotation(const Mat3& matrix);

    Mat3 matrix_;
};

/// x -> rotation * x + translation.
struct RigidTransform
{
    Rotation rotation;
    Vec3 translation = Vec3::Zero();

    static RigidTransform identity() { return {}; }

    Vec3 apply(const Vec3& p) const { return rotation.matrix() * p + translation; }

    Points3 apply(const Points3& points) const
    {
        return (rotation.matrix() * points).colwise() + translation;
    }

    RigidTransform inverse() const
    {
        const Rotation r_inv = rotation.inverse();
        return {r_inv, -(r_inv.matrix() * translation)};
    }

    /// (this * other)(x) = this(other(x)).
    RigidTransform operator*(const RigidTransform& other) const
    {
        return {rotation * other.rotation, rotation.matrix() * other.translation + translation};
    }
};

enum class ProjectionModel { perspective, orthographic };

/// Moment of the line through point_on_ray with the ray's direction: d x P.
inline Vec3 moment_vector(const Ray& ray, const Vec3& point_on_ray)
{
    return ray.direction().cross(point_on_ray);
}

/**
 * (point - origin) x direction. Its L2 norm is the perpendicular distance of
 * the point to the ray's supporting line.
 */
inline Vec3 point_to_ray_residual(const Vec3& point, const Ray& ray)
{
    return (point - ray.origin()).cross(ray.direction());
}

/**
 * Perspective projection of points after applying camera_from_world.
 * Returns normalised image coordinates (X/Z, Y/Z).
 */
inline Points2 project_perspective(const Points3& points, const RigidTransform& camera_from_world)
{
    const Points3 cam = camera_from_world.apply(points);
    Points2 out(2, cam.cols());
    for (Eigen::Index k = 0; k < cam.cols(); ++k) {
        const double z = cam(2, k);
        if (!(z > kDepthEpsilon)) {
            throw Error(ErrorCode::NonPositiveDepth, "point " + std::to_string(k) + " is not in front of the camera");
        }
        out(0, k) = cam(0, k) / z;
        out(1, k) = cam(1, k) / z;
    }
    return out;
}

/**
 * World-frame sightlines of normalised keypoints seen from a viewpoint whose
 * pose is world_from_camera.
 *
 * Perspective: every ray starts at the camera centre. Orthographic: each ray
 * starts at the keypoint lifted onto the camera's Z = 0 plane and runs along
 * the camera Z axis.
 */
inline std::vector<Ray> rays_from_keypoints(const Points2& keypoints, const RigidTransform& world_from_camera,
                                            ProjectionModel model)
{
    std::vector<Ray> rays;
    rays.reserve(static_cast<std::size_t>(keypoints.cols()));
    const Mat3& r = world_from_camera.rotation.matrix();
    for (Eigen::Index k = 0; k < keypoints.cols(); ++k) {
        if (model == ProjectionModel::perspective) {
            rays.emplace_back(world_from_camera.translation, r * Vec3(keypoints(0, k), keypoints(1, k), 1.0));
        } else {
            rays.emplace_back(world_from_camera.apply(Vec3(keypoints(0, k), keypoints(1, k), 0.0)), r.col(2));
        }
    }
    return rays;
}

/**
 * Closest rotation in Frobenius norm (orthogonal Procrustes projection).
 * A negative determinant is repaired by flipping the smallest singular
 * direction. Throws DegenerateMatrix when two singular values vanish.
 */
inline Rotation nearest_rotation(const Mat3& matrix)
{
    if (!matrix.allFinite()) {
        throw Error(ErrorCode::DegenerateMatrix, "matrix has non-finite entries");
    }
    const Eigen::JacobiSVD<Mat3> svd(matrix, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vec3 s = svd.singularValues();
    if (!(s(0) > 0.0) || s(1) <= 1e-12 * s(0)) {
        throw Error(ErrorCode::DegenerateMatrix, "rank < 2, nearest rotation is ambiguous");
    }
    const Mat3& u = svd.matrixU();
    const Mat3& v = svd.matrixV();
    Vec3 signs(1.0, 1.0, (u * v.transpose()).determinant() < 0.0 ? -1.0 : 1.0);
    return Rotation(u * signs.asDiagonal() * v.transpose(), Rotation::Unchecked{});
}

/**
 * Least-squares rigid transform taking source onto target (columns paired).
 */
inline RigidTransform rigid_align(const Points3& source, const Points3& target)
{
    if (source.cols() != target.cols()) {
        throw Error(ErrorCode::DimensionMismatch, "rigid_align needs equally sized point sets");
    }
    if (source.cols() < 3) {
        throw Error(ErrorCode::DegenerateConfiguration, "rigid_align needs at least 3 points");
    }
    const Vec3 cs = source.rowwise().mean();
    const Vec3 ct = target.rowwise().mean();
    const Points3 sc = source.colwise() - cs;
    const Points3 tc = target.colwise() - ct;
    const Mat3 cross_cov = tc * sc.transpose();
    Rotation r;
    try {
        r = nearest_rotation(cross_cov);
    } catch (const Error&) {
        throw Error(ErrorCode::DegenerateConfiguration, "point sets are collinear");
    }
    return {r, ct - r.matrix() * cs};
}

} // namespace gsft

#endif // GSFT_GEOMETRY_HPP_
