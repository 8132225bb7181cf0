/*
 * gsft - Shape-from-Template with generalised cameras.
 *
 * File: include/gsft/alpha_shape.hpp
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

#ifndef GSFT_ALPHA_SHAPE_HPP_
#define GSFT_ALPHA_SHAPE_HPP_

#include "gsft/error.hpp"
#include "gsft/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <utility>
#include <vector>

namespace gsft {

using Triangle = std::array<int, 3>;

namespace detail {

struct Point2L
{
    long double x;
    long double y;
};

inline long double orient(const Point2L& a, const Point2L& b, const Point2L& c)
{
    return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

/// > 0 when d lies inside the circumcircle of the counter-clockwise triangle abc.
inline long double incircle(const Point2L& a, const Point2L& b, const Point2L& c, const Point2L& d)
{
    const long double adx = a.x - d.x, ady = a.y - d.y;
    const long double bdx = b.x - d.x, bdy = b.y - d.y;
    const long double cdx = c.x - d.x, cdy = c.y - d.y;
    const long double ad = adx * adx + ady * ady;
    const long double bd = bdx * bdx + bdy * bdy;
    const long double cd = cdx * cdx + cdy * cdy;
    return adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) + ad * (bdx * cdy - bdy * cdx);
}

/// Indices of the distinct points (first occurrence wins), in input order.
inline std::vector<int> unique_points(const Points2& pts)
{
    std::vector<int> order(static_cast<std::size_t>(pts.cols()));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (pts(0, a) != pts(0, b)) {
            return pts(0, a) < pts(0, b);
        }
        if (pts(1, a) != pts(1, b)) {
            return pts(1, a) < pts(1, b);
        }
        return a < b;
    });
    std::vector<int> keep;
    for (std::size_t k = 0; k < order.size(); ++k) {
        if (k == 0 || pts(0, order[k]) != pts(0, order[k - 1]) || pts(1, order[k]) != pts(1, order[k - 1])) {
            keep.push_back(order[k]);
        }
    }
    std::sort(keep.begin(), keep.end());
    return keep;
}

inline bool all_collinear(const Points2& pts)
{
    const Eigen::Index n = pts.cols();
    if (n < 3) {
        return true;
    }
    const Vec2 lo = pts.rowwise().minCoeff();
    const Vec2 hi = pts.rowwise().maxCoeff();
    const double extent = (hi - lo).norm();
    if (!(extent > 0.0)) {
        return true;
    }
    // farthest pair along the dominant axis spans the line
    Eigen::Index a = 0;
    Eigen::Index b = 0;
    const int axis = (hi - lo)(0) >= (hi - lo)(1) ? 0 : 1;
    pts.row(axis).minCoeff(&a);
    pts.row(axis).maxCoeff(&b);
    const Vec2 dir = (pts.col(b) - pts.col(a)).normalized();
    for (Eigen::Index k = 0; k < n; ++k) {
        const Vec2 v = pts.col(k) - pts.col(a);
        if (std::abs(dir(0) * v(1) - dir(1) * v(0)) > 1e-12 * extent) {
            return false;
        }
    }
    return true;
}

} // namespace detail

/**
 * Delaunay triangulation by Bowyer-Watson insertion. Triangles are counter
 * clockwise and index the columns of pts. Duplicate points must be removed
 * beforehand; a collinear set yields no triangles.
 */
inline std::vector<Triangle> delaunay_triangulation(const Points2& pts)
{
    const auto n = static_cast<int>(pts.cols());
    if (n < 3) {
        return {};
    }
    const Vec2 lo = pts.rowwise().minCoeff();
    const Vec2 hi = pts.rowwise().maxCoeff();
    const double span = std::max((hi - lo).maxCoeff(), std::numeric_limits<double>::min());
    std::vector<detail::Point2L> p(static_cast<std::size_t>(n) + 3);
    for (int k = 0; k < n; ++k) {
        p[static_cast<std::size_t>(k)] = {static_cast<long double>((pts(0, k) - lo(0)) / span),
                                          static_cast<long double>((pts(1, k) - lo(1)) / span)};
    }
    const long double big = 1e5L;
    p[static_cast<std::size_t>(n)] = {-big, -big};
    p[static_cast<std::size_t>(n) + 1] = {big, -big};
    p[static_cast<std::size_t>(n) + 2] = {0.5L, big};

    std::vector<Triangle> tris{{n, n + 1, n + 2}};
    for (int k = 0; k < n; ++k) {
        const auto& q = p[static_cast<std::size_t>(k)];
        std::vector<Triangle> keep;
        std::map<std::pair<int, int>, int> edges;
        keep.reserve(tris.size() + 2);
        for (const auto& t : tris) {
            if (detail::incircle(p[static_cast<std::size_t>(t[0])], p[static_cast<std::size_t>(t[1])],
                                 p[static_cast<std::size_t>(t[2])], q)
                > 0.0L) {
                for (int e = 0; e < 3; ++e) {
                    const int a = t[static_cast<std::size_t>(e)];
                    const int b = t[static_cast<std::size_t>((e + 1) % 3)];
                    ++edges[{std::min(a, b), std::max(a, b)}];
                }
            } else {
                keep.push_back(t);
            }
        }
        // re-triangulate the cavity boundary (edges seen once), keeping orientation
        for (const auto& t : tris) {
            if (detail::incircle(p[static_cast<std::size_t>(t[0])], p[static_cast<std::size_t>(t[1])],
                                 p[static_cast<std::size_t>(t[2])], q)
                <= 0.0L) {
                continue;
            }
            for (int e = 0; e < 3; ++e) {
                const int a = t[static_cast<std::size_t>(e)];
                const int b = t[static_cast<std::size_t>((e + 1) % 3)];
                if (edges[{std::min(a, b), std::max(a, b)}] == 1) {
                    keep.push_back({a, b, k});
                }
            }
        }
        tris = std::move(keep);
    }
    std::erase_if(tris, [n](const Triangle& t) { return t[0] >= n || t[1] >= n || t[2] >= n; });
    // drop slivers created by exactly collinear input
    std::erase_if(tris, [&](const Triangle& t) {
        return !(detail::orient(p[static_cast<std::size_t>(t[0])], p[static_cast<std::size_t>(t[1])],
                                p[static_cast<std::size_t>(t[2])])
                 > 0.0L);
    });
    return tris;
}

inline double circumradius(const Vec2& a, const Vec2& b, const Vec2& c)
{
    const double ab = (a - b).norm();
    const double bc = (b - c).norm();
    const double ca = (c - a).norm();
    const double area2 = std::abs((b - a)(0) * (c - a)(1) - (b - a)(1) * (c - a)(0));
    if (!(area2 > 0.0)) {
        return std::numeric_limits<double>::infinity();
    }
    return ab * bc * ca / (2.0 * area2);
}

namespace detail {

/// Closed boundary walks of the triangles passing the radius filter.
inline std::vector<std::vector<int>> boundary_cycles(const Points2& pts, const std::vector<Triangle>& tris,
                                                     const std::vector<double>& radii, double alpha,
                                                     bool& covers_all)
{
    std::map<std::pair<int, int>, int> count;
    std::map<std::pair<int, int>, std::pair<int, int>> directed;
    std::vector<char> covered(static_cast<std::size_t>(pts.cols()), 0);
    for (std::size_t t = 0; t < tris.size(); ++t) {
        if (!(radii[t] <= alpha)) {
            continue;
        }
        for (int e = 0; e < 3; ++e) {
            const int a = tris[t][static_cast<std::size_t>(e)];
            const int b = tris[t][static_cast<std::size_t>((e + 1) % 3)];
            covered[static_cast<std::size_t>(a)] = 1;
            ++count[{std::min(a, b), std::max(a, b)}];
            directed[{std::min(a, b), std::max(a, b)}] = {a, b};
        }
    }
    covers_all = std::find(covered.begin(), covered.end(), 0) == covered.end();
    std::multimap<int, int> next;
    for (const auto& [key, c] : count) {
        if (c == 1) {
            next.emplace(directed[key].first, directed[key].second);
        }
    }
    std::vector<std::vector<int>> cycles;
    while (!next.empty()) {
        std::vector<int> cycle;
        const int start = next.begin()->first;
        int v = start;
        for (;;) {
            const auto it = next.find(v);
            if (it == next.end()) {
                break;
            }
            cycle.push_back(v);
            v = it->second;
            next.erase(it);
            if (v == start) {
                break;
            }
        }
        cycles.push_back(std::move(cycle));
    }
    return cycles;
}

/// The boundary when it is one simple cycle around every point.
inline std::optional<std::vector<int>> single_cycle(const Points2& pts, const std::vector<Triangle>& tris,
                                                    const std::vector<double>& radii, double alpha)
{
    bool covers = false;
    auto cycles = boundary_cycles(pts, tris, radii, alpha, covers);
    if (!covers || cycles.size() != 1) {
        return std::nullopt;
    }
    std::vector<int> sorted = cycles.front();
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        return std::nullopt;
    }
    return std::move(cycles.front());
}

} // namespace detail

/**
 * Boundary of the alpha shape of a planar point set, as indices into the
 * columns of points2d ordered counter-clockwise along the boundary.
 *
 * A Delaunay triangle belongs to the shape when its circumradius (in input
 * units) is at most alpha; alpha = infinity gives the convex hull. Without an
 * alpha, the smallest value giving one boundary cycle around all points is
 * searched by bisection over the sorted radii (20 steps), falling back to the
 * convex hull.
 */
inline std::vector<int> alpha_silhouette(const Points2& points2d, std::optional<double> alpha = std::nullopt)
{
    if (!points2d.allFinite()) {
        throw Error(ErrorCode::InvalidArgument, "points must be finite");
    }
    const std::vector<int> ids = detail::unique_points(points2d);
    Points2 pts(2, static_cast<Eigen::Index>(ids.size()));
    for (std::size_t k = 0; k < ids.size(); ++k) {
        pts.col(static_cast<Eigen::Index>(k)) = points2d.col(ids[k]);
    }
    if (ids.size() < 3 || detail::all_collinear(pts)) {
        throw Error(ErrorCode::DegenerateCloud, "alpha shape needs 3 non-collinear points");
    }
    if (alpha && !(*alpha > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "alpha must be positive");
    }
    const std::vector<Triangle> tris = delaunay_triangulation(pts);
    if (tris.empty()) {
        throw Error(ErrorCode::DegenerateCloud, "triangulation is empty");
    }
    std::vector<double> radii(tris.size());
    for (std::size_t t = 0; t < tris.size(); ++t) {
        radii[t] = circumradius(pts.col(tris[t][0]), pts.col(tris[t][1]), pts.col(tris[t][2]));
    }
    const double inf = std::numeric_limits<double>::infinity();

    std::vector<int> boundary;
    if (alpha) {
        bool covers = false;
        for (const auto& c : detail::boundary_cycles(pts, tris, radii, *alpha, covers)) {
            boundary.insert(boundary.end(), c.begin(), c.end());
        }
    } else {
        std::vector<double> sorted = radii;
        std::sort(sorted.begin(), sorted.end());
        std::size_t lo = 0;
        std::size_t hi = sorted.size() - 1;
        std::optional<std::vector<int>> found = detail::single_cycle(pts, tris, radii, sorted[hi]);
        for (int step = 0; step < 20 && lo < hi; ++step) {
            const std::size_t mid = lo + (hi - lo) / 2;
            auto c = detail::single_cycle(pts, tris, radii, sorted[mid]);
            if (c) {
                hi = mid;
                found = std::move(c);
            } else {
                lo = mid + 1;
            }
        }
        if (found) {
            boundary = std::move(*found);
        } else {
            bool covers = false;
            for (const auto& c : detail::boundary_cycles(pts, tris, radii, inf, covers)) {
                boundary.insert(boundary.end(), c.begin(), c.end());
            }
        }
    }
    if (boundary.empty()) {
        throw Error(ErrorCode::DegenerateCloud, "no boundary found for this alpha");
    }
    std::vector<int> out;
    out.reserve(boundary.size());
    for (int v : boundary) {
        out.push_back(ids[static_cast<std::size_t>(v)]);
    }
    return out;
}

} // namespace gsft

#endif // GSFT_ALPHA_SHAPE_HPP_
