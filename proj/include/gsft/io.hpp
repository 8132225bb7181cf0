/*
 * gsft - Shape-from-Template with generalised cameras.
 *
 * File: include/gsft/io.hpp
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

#ifndef GSFT_IO_HPP_
#define GSFT_IO_HPP_

#include "gsft/error.hpp"
#include "gsft/geometry.hpp"
#include "gsft/ns.hpp"
#include "gsft/nsc.hpp"
#include "gsft/shape_model.hpp"
#include "gsft/silhouette.hpp"
#include "gsft/synth.hpp"

#include "json.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace gsft {

namespace detail {

inline Vec3 parse_vec3(const nlohmann::json& j, const std::string& field)
{
    if (!j.is_array() || j.size() != 3) {
        throw Error(ErrorCode::ParseError, field + ": expected [x, y, z]");
    }
    Vec3 v;
    for (std::size_t c = 0; c < 3; ++c) {
        if (!j[c].is_number()) {
            throw Error(ErrorCode::ParseError, field + ": expected numbers");
        }
        v(static_cast<Eigen::Index>(c)) = j[c].get<double>();
    }
    return v;
}

inline nlohmann::json vec3_json(const Vec3& v) { return {v(0), v(1), v(2)}; }

inline nlohmann::json matrix_json(const Mat3& m)
{
    nlohmann::json rows = nlohmann::json::array();
    for (int r = 0; r < 3; ++r) {
        rows.push_back({m(r, 0), m(r, 1), m(r, 2)});
    }
    return rows;
}

inline Mat3 parse_matrix(const nlohmann::json& j, const std::string& field)
{
    if (!j.is_array() || j.size() != 3) {
        throw Error(ErrorCode::ParseError, field + ": expected 3 rows");
    }
    Mat3 m;
    for (std::size_t r = 0; r < 3; ++r) {
        m.row(static_cast<Eigen::Index>(r)) = parse_vec3(j[r], field).transpose();
    }
    return m;
}

inline nlohmann::json load_json(const std::filesystem::path& path)
{
    return parse_json_text(read_text_file(path), path.string());
}

} // namespace detail

inline nlohmann::json transform_json(const RigidTransform& t)
{
    return {{"rotation", detail::matrix_json(t.rotation.matrix())}, {"translation", detail::vec3_json(t.translation)}};
}

inline RigidTransform transform_from_json(const nlohmann::json& j, const std::string& field)
{
    if (!j.is_object() || !j.contains("rotation") || !j.contains("translation")) {
        throw Error(ErrorCode::ParseError, field + ": expected {rotation, translation}");
    }
    try {
        return {Rotation::from_matrix(detail::parse_matrix(j.at("rotation"), field + ".rotation"), 1e-6),
                detail::parse_vec3(j.at("translation"), field + ".translation")};
    } catch (const Error& e) {
        if (e.code() == ErrorCode::ParseError) {
            throw;
        }
        throw Error(ErrorCode::ParseError, field + ": " + e.what());
    }
}

// ---- rays ------------------------------------------------------------------

/**
 * {"views": [{"origin": [..], "rays": [{"o": [..], "d": [..]}, ..]}, ..]}.
 * "origin" is the view centre; a view may also carry "pose" (world from
 * camera) and "projection".
 */
inline nlohmann::json viewpoints_to_json(const std::vector<Viewpoint>& views)
{
    nlohmann::json jv = nlohmann::json::array();
    for (const auto& v : views) {
        nlohmann::json view;
        Vec3 origin = Vec3::Zero();
        if (v.pose) {
            origin = v.pose->translation;
            view["pose"] = transform_json(*v.pose);
        } else if (!v.rays.empty()) {
            origin = v.rays.front().origin();
        }
        view["origin"] = detail::vec3_json(origin);
        view["projection"] = v.projection == ProjectionModel::perspective ? "perspective" : "orthographic";
        nlohmann::json rays = nlohmann::json::array();
        for (const auto& r : v.rays) {
            rays.push_back({{"o", detail::vec3_json(r.origin())}, {"d", detail::vec3_json(r.direction())}});
        }
        view["rays"] = std::move(rays);
        jv.push_back(std::move(view));
    }
    return {{"views", jv}};
}

inline std::vector<Viewpoint> viewpoints_from_json(const nlohmann::json& j)
{
    if (!j.is_object() || !j.contains("views") || !j.at("views").is_array()) {
        throw Error(ErrorCode::ParseError, "rays file: expected {\"views\": [...]}");
    }
    std::vector<Viewpoint> out;
    const auto& views = j.at("views");
    for (std::size_t x = 0; x < views.size(); ++x) {
        const std::string where = "views[" + std::to_string(x) + "]";
        const auto& jv = views[x];
        if (!jv.is_object() || !jv.contains("rays") || !jv.at("rays").is_array()) {
            throw Error(ErrorCode::ParseError, where + ": missing 'rays'");
        }
        Viewpoint v;
        if (jv.contains("pose")) {
            v.pose = transform_from_json(jv.at("pose"), where + ".pose");
        }
        if (jv.contains("projection")) {
            const auto p = jv.at("projection").get<std::string>();
            if (p == "orthographic") {
                v.projection = ProjectionModel::orthographic;
            } else if (p != "perspective") {
                throw Error(ErrorCode::ParseError, where + ": unknown projection '" + p + "'");
            }
        }
        const Vec3 origin = jv.contains("origin") ? detail::parse_vec3(jv.at("origin"), where + ".origin") : Vec3::Zero();
        const auto& rays = jv.at("rays");
        for (std::size_t k = 0; k < rays.size(); ++k) {
            const std::string rw = where + ".rays[" + std::to_string(k) + "]";
            if (!rays[k].is_object() || !rays[k].contains("d")) {
                throw Error(ErrorCode::ParseError, rw + ": missing 'd'");
            }
            const Vec3 o = rays[k].contains("o") ? detail::parse_vec3(rays[k].at("o"), rw + ".o") : origin;
            try {
                v.rays.emplace_back(o, detail::parse_vec3(rays[k].at("d"), rw + ".d"));
            } catch (const Error& e) {
                throw Error(ErrorCode::ParseError, rw + ": " + e.what());
            }
        }
        out.push_back(std::move(v));
    }
    return out;
}

// ---- correspondences -------------------------------------------------------

/// {"views": [[[j, j'], ..], ..]}: template index j, ray index j'.
inline nlohmann::json correspondences_to_json(const std::vector<CorrespondenceSet>& sets)
{
    nlohmann::json views = nlohmann::json::array();
    for (const auto& s : sets) {
        nlohmann::json v = nlohmann::json::array();
        for (const auto& c : s) {
            v.push_back({c.template_index, c.ray_index});
        }
        views.push_back(std::move(v));
    }
    return {{"views", views}};
}

inline std::vector<CorrespondenceSet> correspondences_from_json(const nlohmann::json& j)
{
    if (!j.is_object() || !j.contains("views") || !j.at("views").is_array()) {
        throw Error(ErrorCode::ParseError, "correspondence file: expected {\"views\": [...]}");
    }
    std::vector<CorrespondenceSet> out;
    for (const auto& v : j.at("views")) {
        if (!v.is_array()) {
            throw Error(ErrorCode::ParseError, "correspondence file: each view must be a list of pairs");
        }
        CorrespondenceSet set;
        for (const auto& p : v) {
            if (!p.is_array() || p.size() != 2 || !p[0].is_number_integer() || !p[1].is_number_integer()) {
                throw Error(ErrorCode::ParseError, "correspondence file: pairs must be [j, j'] integers");
            }
            set.push_back({p[0].get<int>(), p[1].get<int>()});
        }
        out.push_back(std::move(set));
    }
    return out;
}

// ---- silhouettes -----------------------------------------------------------

inline nlohmann::json silhouettes_to_json(const std::vector<SilhouetteObservation>& obs)
{
    nlohmann::json views = nlohmann::json::array();
    for (const auto& o : obs) {
        nlohmann::json d = nlohmann::json::array();
        for (const auto& v : o.directions) {
            d.push_back(detail::vec3_json(v));
        }
        views.push_back({{"directions", d}});
    }
    return {{"views", views}};
}

/// Directions are normalised; zero vectors are rejected.
inline std::vector<SilhouetteObservation> silhouettes_from_json(const nlohmann::json& j)
{
    if (!j.is_object() || !j.contains("views") || !j.at("views").is_array()) {
        throw Error(ErrorCode::ParseError, "silhouette file: expected {\"views\": [...]}");
    }
    std::vector<SilhouetteObservation> out;
    const auto& views = j.at("views");
    for (std::size_t x = 0; x < views.size(); ++x) {
        const std::string where = "silhouette views[" + std::to_string(x) + "]";
        if (!views[x].is_object() || !views[x].contains("directions") || !views[x].at("directions").is_array()) {
            throw Error(ErrorCode::ParseError, where + ": missing 'directions'");
        }
        SilhouetteObservation o;
        for (const auto& d : views[x].at("directions")) {
            const Vec3 v = detail::parse_vec3(d, where);
            if (!(v.norm() > 0.0)) {
                throw Error(ErrorCode::ParseError, where + ": zero direction");
            }
            o.directions.push_back(v.normalized());
        }
        out.push_back(std::move(o));
    }
    return out;
}

// ---- ground truth and solutions ---------------------------------------------

inline nlohmann::json ground_truth_json(const Scenario& sc)
{
    nlohmann::json poses = nlohmann::json::array();
    for (const auto& p : sc.gt_viewpoint_poses) {
        poses.push_back(transform_json(p));
    }
    std::vector<double> w(sc.gt_instance.weights.data(), sc.gt_instance.weights.data() + sc.gt_instance.weights.size());
    return {{"weights", w},
            {"pose", transform_json(sc.gt_instance.pose)},
            {"viewpoint_poses", poses},
            {"points", detail::point_list_json(sc.gt_points)}};
}

inline nlohmann::json solution_json(const NsSolution& s)
{
    std::vector<double> w(s.instance.weights.data(), s.instance.weights.data() + s.instance.weights.size());
    return {{"status", std::string(to_string(s.status))},
            {"objective", s.objective},
            {"iterations", s.iterations},
            {"weights", w},
            {"pose", transform_json(s.instance.pose)},
            {"rank_ratio", s.rank.ratio},
            {"scale", s.rank.scale},
            {"sign_flipped", s.sign_flipped},
            {"points", detail::point_list_json(s.reconstruction)}};
}

inline nlohmann::json solution_json(const NscSolution& s, const ShapeModel& model)
{
    std::vector<double> w(s.weights.data(), s.weights.data() + s.weights.size());
    nlohmann::json views = nlohmann::json::array();
    for (std::size_t x = 0; x < s.transforms.size(); ++x) {
        views.push_back({{"transform", transform_json(s.transforms[x])},
                         {"pose", transform_json(s.poses[x])},
                         {"relative_pose", transform_json(s.relative_poses[x])},
                         {"rank_ratio", s.rank[x].ratio},
                         {"scale", s.rank[x].scale},
                         {"sign_flipped", static_cast<bool>(s.sign_flipped[x])}});
    }
    return {{"status", std::string(to_string(s.status))},
            {"objective", s.objective},
            {"iterations", s.iterations},
            {"weights", w},
            {"weight_discrepancy", s.weight_discrepancy},
            {"views", views},
            {"points", detail::point_list_json(s.shape(model))}};
}

/// Samples for SSM building: {"samples": [[[x, y, z], ..], ..]}.
inline std::vector<Points3> population_from_json(const nlohmann::json& j)
{
    if (!j.is_object() || !j.contains("samples") || !j.at("samples").is_array()) {
        throw Error(ErrorCode::ParseError, "population file: expected {\"samples\": [...]}");
    }
    std::vector<Points3> out;
    const auto& s = j.at("samples");
    for (std::size_t k = 0; k < s.size(); ++k) {
        out.push_back(detail::parse_point_list(s[k], "samples[" + std::to_string(k) + "]"));
    }
    return out;
}

inline nlohmann::json population_to_json(const std::vector<Points3>& samples)
{
    nlohmann::json s = nlohmann::json::array();
    for (const auto& p : samples) {
        s.push_back(detail::point_list_json(p));
    }
    return {{"samples", s}};
}

} // namespace gsft

#endif // GSFT_IO_HPP_
