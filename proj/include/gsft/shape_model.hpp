/*
 * gsft - Shape-from-Template with generalised cameras.
 *
 * File: include/gsft/shape_model.hpp
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

#ifndef GSFT_SHAPE_MODEL_HPP_
#define GSFT_SHAPE_MODEL_HPP_

#include "gsft/error.hpp"
#include "gsft/geometry.hpp"

#include "Eigen/Core"
#include "Eigen/SVD"
#include "json.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace gsft {

/**
 * Statistical shape model: a mean point cloud plus M basis displacement
 * clouds, all 3 x N in the object frame. A shape is Q = mean + sum_i w_i P_i.
 *
 * Models produced by build_ssm have zero-mean bases (samples are centred);
 * the constructor only checks the structural invariants (M >= 1, N >= 4,
 * equal basis shapes).
 */
class ShapeModel
{
public:
    ShapeModel() = default;

    ShapeModel(Points3 mean, std::vector<Points3> bases) : mean_(std::move(mean)), bases_(std::move(bases))
    {
        if (mean_.cols() < 4) {
            throw Error(ErrorCode::InvalidArgument, "shape model needs at least 4 points");
        }
        if (bases_.empty()) {
            throw Error(ErrorCode::InvalidArgument, "shape model needs at least one basis");
        }
        for (const auto& b : bases_) {
            if (b.cols() != mean_.cols()) {
                throw Error(ErrorCode::DimensionMismatch, "basis point count differs from the mean shape");
            }
        }
        if (!mean_.allFinite()) {
            throw Error(ErrorCode::InvalidArgument, "mean shape has non-finite coordinates");
        }
    }

    int point_count() const noexcept { return static_cast<int>(mean_.cols()); }
    int basis_count() const noexcept { return static_cast<int>(bases_.size()); }

    const Points3& mean() const noexcept { return mean_; }
    const std::vector<Points3>& bases() const noexcept { return bases_; }
    const Points3& basis(int i) const { return bases_.at(static_cast<std::size_t>(i)); }

    /// Column j of every basis, in basis order.
    std::vector<Vec3> basis_points(int j) const
    {
        std::vector<Vec3> pts;
        pts.reserve(bases_.size());
        for (const auto& b : bases_) {
            pts.emplace_back(b.col(j));
        }
        return pts;
    }

    /// True when every basis is identically zero (degenerate population).
    bool has_zero_variance() const
    {
        for (const auto& b : bases_) {
            if (b.cwiseAbs().maxCoeff() > 0.0) {
                return false;
            }
        }
        return true;
    }

private:
    Points3 mean_;
    std::vector<Points3> bases_;
};

struct ShapeInstance
{
    Eigen::VectorXd weights;
    RigidTransform pose;
};

/// Q = mean + sum_i w_i P_i, object frame.
inline Points3 deform(const ShapeModel& model, const Eigen::VectorXd& weights)
{
    if (weights.size() != model.basis_count()) {
        throw Error(ErrorCode::DimensionMismatch, "expected " + std::to_string(model.basis_count()) + " weights, got "
                                                      + std::to_string(weights.size()));
    }
    Points3 q = model.mean();
    for (int i = 0; i < model.basis_count(); ++i) {
        q += weights(i) * model.basis(i);
    }
    return q;
}

/// V = R Q + t, world frame.
inline Points3 instantiate(const ShapeModel& model, const ShapeInstance& instance)
{
    if (!instance.weights.allFinite()) {
        throw Error(ErrorCode::InvalidArgument, "instance weights must be finite");
    }
    return instance.pose.apply(deform(model, instance.weights));
}

/**
 * PCA shape model from pre-aligned samples.
 *
 * Bases are principal components of the centred, vectorised samples scaled
 * by their standard deviation, so that a unit weight moves one standard
 * deviation along that mode. The smallest M whose cumulative variance
 * reaches variance_fraction is kept (M <= samples - 1). A population without
 * variance yields a single zero basis; check has_zero_variance().
 */
inline ShapeModel build_ssm(const std::vector<Points3>& samples, double variance_fraction = 0.99)
{
    if (samples.size() < 2) {
        throw Error(ErrorCode::InsufficientSamples, "build_ssm needs at least 2 samples");
    }
    if (!(variance_fraction > 0.0 && variance_fraction <= 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "variance_fraction must lie in (0, 1]");
    }
    const Eigen::Index n = samples.front().cols();
    for (const auto& s : samples) {
        if (s.cols() != n) {
            throw Error(ErrorCode::InconsistentPointCounts, "all samples must have the same point count");
        }
    }
    const auto count = static_cast<Eigen::Index>(samples.size());
    Points3 mean = Points3::Zero(3, n);
    for (const auto& s : samples) {
        mean += s;
    }
    mean /= static_cast<double>(count);

    Eigen::MatrixXd centred(3 * n, count);
    for (Eigen::Index k = 0; k < count; ++k) {
        const Points3 d = samples[static_cast<std::size_t>(k)] - mean;
        centred.col(k) = Eigen::Map<const Eigen::VectorXd>(d.data(), 3 * n);
    }
    const Eigen::BDCSVD<Eigen::MatrixXd> svd(centred, Eigen::ComputeThinU);
    const Eigen::VectorXd sv = svd.singularValues();
    const double total = sv.squaredNorm();
    if (!(total > 0.0) || sv(0) <= 1e-14 * mean.cwiseAbs().maxCoeff()) {
        return ShapeModel(mean, {Points3::Zero(3, n)});
    }
    const Eigen::Index max_modes = std::min<Eigen::Index>(count - 1, sv.size());
    Eigen::Index modes = 0;
    double cumulative = 0.0;
    while (modes < max_modes) {
        cumulative += sv(modes) * sv(modes);
        ++modes;
        if (cumulative >= variance_fraction * total * (1.0 - 1e-12)) {
            break;
        }
    }
    const double denom = std::sqrt(static_cast<double>(count - 1));
    std::vector<Points3> bases;
    bases.reserve(static_cast<std::size_t>(modes));
    for (Eigen::Index i = 0; i < modes; ++i) {
        Eigen::VectorXd u = svd.matrixU().col(i) * (sv(i) / denom);
        Eigen::Index arg = 0;
        u.cwiseAbs().maxCoeff(&arg);
        if (u(arg) < 0.0) {
            u = -u;
        }
        bases.emplace_back(Eigen::Map<const Points3>(u.data(), 3, n));
    }
    return ShapeModel(mean, std::move(bases));
}

namespace detail {

inline Points3 parse_point_list(const nlohmann::json& arr, const std::string& field)
{
    if (!arr.is_array()) {
        throw Error(ErrorCode::ParseError, field + ": expected an array of points");
    }
    Points3 pts(3, static_cast<Eigen::Index>(arr.size()));
    for (std::size_t k = 0; k < arr.size(); ++k) {
        const auto& p = arr[k];
        if (!p.is_array() || p.size() != 3) {
            throw Error(ErrorCode::ParseError, field + "[" + std::to_string(k) + "]: expected [x, y, z]");
        }
        for (std::size_t c = 0; c < 3; ++c) {
            if (!p[c].is_number()) {
                throw Error(ErrorCode::ParseError,
                            field + "[" + std::to_string(k) + "][" + std::to_string(c) + "]: expected a number");
            }
            pts(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(k)) = p[c].get<double>();
        }
    }
    return pts;
}

inline nlohmann::json point_list_json(const Points3& pts)
{
    nlohmann::json arr = nlohmann::json::array();
    for (Eigen::Index k = 0; k < pts.cols(); ++k) {
        arr.push_back({pts(0, k), pts(1, k), pts(2, k)});
    }
    return arr;
}

/// Parses text as JSON, turning syntax errors into ParseError with the byte offset.
inline nlohmann::json parse_json_text(const std::string& text, const std::string& what)
{
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::ParseError, what + ": " + e.what());
    }
}

inline std::string read_text_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::IoError, "cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(ErrorCode::IoError, "cannot write " + path.string());
    }
    out << text;
    if (!out) {
        throw Error(ErrorCode::IoError, "write failed for " + path.string());
    }
}

inline int require_int(const nlohmann::json& j, const char* key, const std::string& what)
{
    if (!j.contains(key) || !j.at(key).is_number_integer()) {
        throw Error(ErrorCode::ParseError, what + ": missing integer field '" + key + "'");
    }
    return j.at(key).get<int>();
}

} // namespace detail

inline nlohmann::json model_to_json(const ShapeModel& model)
{
    nlohmann::json j;
    j["n"] = model.point_count();
    j["m"] = model.basis_count();
    j["mean"] = detail::point_list_json(model.mean());
    nlohmann::json bases = nlohmann::json::array();
    for (const auto& b : model.bases()) {
        bases.push_back(detail::point_list_json(b));
    }
    j["bases"] = std::move(bases);
    return j;
}

inline ShapeModel model_from_json(const nlohmann::json& j)
{
    if (!j.is_object()) {
        throw Error(ErrorCode::ParseError, "shape model: top level must be an object");
    }
    const int n = detail::require_int(j, "n", "shape model");
    const int m = detail::require_int(j, "m", "shape model");
    if (!j.contains("mean") || !j.contains("bases")) {
        throw Error(ErrorCode::ParseError, "shape model: missing 'mean' or 'bases'");
    }
    Points3 mean = detail::parse_point_list(j.at("mean"), "mean");
    if (mean.cols() != n) {
        throw Error(ErrorCode::ParseError,
                    "mean: expected " + std::to_string(n) + " points, found " + std::to_string(mean.cols()));
    }
    const auto& jb = j.at("bases");
    if (!jb.is_array() || static_cast<int>(jb.size()) != m) {
        throw Error(ErrorCode::ParseError, "bases: expected " + std::to_string(m) + " bases");
    }
    std::vector<Points3> bases;
    for (std::size_t i = 0; i < jb.size(); ++i) {
        Points3 b = detail::parse_point_list(jb[i], "bases[" + std::to_string(i) + "]");
        if (b.cols() != n) {
            throw Error(ErrorCode::ParseError, "bases[" + std::to_string(i) + "]: expected " + std::to_string(n)
                                                   + " points, found " + std::to_string(b.cols()));
        }
        bases.push_back(std::move(b));
    }
    try {
        return ShapeModel(std::move(mean), std::move(bases));
    } catch (const Error& e) {
        throw Error(ErrorCode::ParseError, std::string("shape model: ") + e.what());
    }
}

inline ShapeModel load_model(const std::filesystem::path& path)
{
    return model_from_json(detail::parse_json_text(detail::read_text_file(path), path.string()));
}

inline void save_model(const ShapeModel& model, const std::filesystem::path& path)
{
    detail::write_text_file(path, model_to_json(model).dump(1) + "\n");
}

} // namespace gsft

#endif // GSFT_SHAPE_MODEL_HPP_
