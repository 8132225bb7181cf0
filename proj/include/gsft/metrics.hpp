/*
 * gsft - Shape-from-Template with generalised cameras.
 *
 * File: include/gsft/metrics.hpp
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

#ifndef GSFT_METRICS_HPP_
#define GSFT_METRICS_HPP_

#include "gsft/error.hpp"
#include "gsft/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace gsft {

/// sqrt of the mean squared distance between paired columns.
inline double rmse(const Points3& recon, const Points3& gt)
{
    if (recon.cols() != gt.cols()) {
        throw Error(ErrorCode::DimensionMismatch, "rmse needs equally sized point sets");
    }
    if (recon.cols() == 0) {
        return 0.0;
    }
    return std::sqrt((recon - gt).colwise().squaredNorm().mean());
}

/// RMSE after the best rigid alignment of recon onto gt.
inline double procrustes_rmse(const Points3& recon, const Points3& gt)
{
    if (recon.cols() != gt.cols()) {
        throw Error(ErrorCode::DimensionMismatch, "procrustes_rmse needs equally sized point sets");
    }
    return rmse(rigid_align(recon, gt).apply(recon), gt);
}

/// ZYX angles (yaw, pitch, roll) in radians of R = Rz(yaw) Ry(pitch) Rx(roll).
inline Vec3 euler_zyx(const Mat3& r)
{
    const double pitch = std::asin(std::clamp(-r(2, 0), -1.0, 1.0));
    double yaw = 0.0;
    double roll = 0.0;
    if (std::abs(r(2, 0)) < 1.0 - 1e-12) {
        yaw = std::atan2(r(1, 0), r(0, 0));
        roll = std::atan2(r(2, 1), r(2, 2));
    } else {
        // gimbal lock: put everything in yaw
        yaw = std::atan2(-r(0, 1), r(1, 1));
    }
    return {yaw, pitch, roll};
}

struct RotationError
{
    double degrees = 0.0;
    bool gimbal_warning = false; ///< pitch of the difference within 1 degree of +-90
};

/**
 * Mean absolute ZYX Euler angle of the difference rotation, in degrees. The
 * decomposition of a'b and b'a can differ, so both are averaged to keep the
 * measure symmetric.
 */
inline RotationError rotation_error(const Rotation& a, const Rotation& b)
{
    const Mat3 d = a.matrix().transpose() * b.matrix();
    const Vec3 e1 = euler_zyx(d);
    const Vec3 e2 = euler_zyx(d.transpose());
    RotationError out;
    out.degrees = rad_to_deg(0.5 * (e1.cwiseAbs().mean() + e2.cwiseAbs().mean()));
    const double near = deg_to_rad(89.0);
    out.gimbal_warning = std::abs(e1(1)) > near || std::abs(e2(1)) > near;
    return out;
}

inline double rotation_error_deg(const Rotation& a, const Rotation& b) { return rotation_error(a, b).degrees; }

inline double translation_error(const Vec3& a, const Vec3& b) { return (a - b).norm(); }

/// Symmetric mean nearest-neighbour distance, brute force.
inline double chamfer(const Points3& a, const Points3& b)
{
    if (a.cols() == 0 || b.cols() == 0) {
        throw Error(ErrorCode::InvalidArgument, "chamfer needs non-empty clouds");
    }
    auto directed = [](const Points3& from, const Points3& to) {
        double acc = 0.0;
        for (Eigen::Index i = 0; i < from.cols(); ++i) {
            acc += std::sqrt((to.colwise() - from.col(i)).colwise().squaredNorm().minCoeff());
        }
        return acc / static_cast<double>(from.cols());
    };
    return 0.5 * (directed(a, b) + directed(b, a));
}

} // namespace gsft

#endif // GSFT_METRICS_HPP_
