/*
 * gsft - Shape-from-Template with generalised cameras.
 *
 * File: tests/test_silhouette.cpp
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
#include "test_util.hpp"

#include <limits>
#include <numbers>
#include <numeric>

using namespace gsft;

namespace {

// Andrew's monotone chain, counter-clockwise, strict turns only
std::vector<int> hull_oracle(const Points2& p)
{
    std::vector<int> idx(static_cast<std::size_t>(p.cols()));
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
        return p(0, a) < p(0, b) || (p(0, a) == p(0, b) && p(1, a) < p(1, b));
    });
    auto cross = [&](int o, int a, int b) {
        return (p(0, a) - p(0, o)) * (p(1, b) - p(1, o)) - (p(1, a) - p(1, o)) * (p(0, b) - p(0, o));
    };
    std::vector<int> h(2 * idx.size());
    std::size_t k = 0;
    for (int i : idx) {
        while (k >= 2 && cross(h[k - 2], h[k - 1], i) <= 0) {
            --k;
        }
        h[k++] = i;
    }
    for (std::size_t i = idx.size() - 1, t = k + 1; i-- > 0;) {
        while (k >= t && cross(h[k - 2], h[k - 1], idx[i]) <= 0) {
            --k;
        }
        h[k++] = idx[i];
    }
    h.resize(k - 1);
    return h;
}

std::vector<int> rotate_to_min(std::vector<int> c)
{
    std::rotate(c.begin(), std::min_element(c.begin(), c.end()), c.end());
    return c;
}

Points2 random_cloud(std::mt19937_64& rng, int n)
{
    std::normal_distribution<double> g(0.0, 1.0);
    Points2 p(2, n);
    for (int j = 0; j < n; ++j) {
        p.col(j) = Vec2(g(rng), g(rng));
    }
    return p;
}

} // namespace

TEST(AlphaShape, InfiniteAlphaIsConvexHull)
{
    std::mt19937_64 rng(51);
    for (int k = 0; k < 30; ++k) {
        const Points2 p = random_cloud(rng, 10 + 7 * k);
        const auto got = alpha_silhouette(p, std::numeric_limits<double>::infinity());
        EXPECT_EQ(rotate_to_min(got), rotate_to_min(hull_oracle(p)));
    }
}

TEST(AlphaShape, SquareWithInteriorPoints)
{
    Points2 p(2, 6);
    p << 0, 1, 1, 0, 0.5, 0.3, 0, 0, 1, 1, 0.5, 0.6;
    const auto b = alpha_silhouette(p, std::numeric_limits<double>::infinity());
    EXPECT_EQ(rotate_to_min(b), (std::vector<int>{0, 1, 2, 3}));
}

TEST(AlphaShape, AutoAlphaFollowsConcavity)
{
    // dense L-shaped grid: points along the inner edge must be on the boundary.
    // the corner itself may be cut, its triangle is as small as the grid's
    std::vector<Vec2> pts;
    for (int i = 0; i <= 10; ++i) {
        for (int j = 0; j <= 10; ++j) {
            if (i <= 4 || j <= 4) {
                pts.emplace_back(0.1 * i + 1e-4 * j * j, 0.1 * j + 1e-4 * i);
            }
        }
    }
    Points2 p(2, static_cast<Eigen::Index>(pts.size()));
    int inner = -1;
    for (std::size_t k = 0; k < pts.size(); ++k) {
        p.col(static_cast<Eigen::Index>(k)) = pts[k];
        if (std::abs(pts[k](0) - 0.7) < 0.01 && std::abs(pts[k](1) - 0.4) < 0.01) {
            inner = static_cast<int>(k);
        }
    }
    ASSERT_GE(inner, 0);
    const auto b = alpha_silhouette(p);
    EXPECT_NE(std::find(b.begin(), b.end(), inner), b.end());
    const auto hull = alpha_silhouette(p, std::numeric_limits<double>::infinity());
    EXPECT_EQ(std::find(hull.begin(), hull.end(), inner), hull.end());
    for (int h : hull) {
        EXPECT_NE(std::find(b.begin(), b.end(), h), b.end());
    }
}

TEST(AlphaShape, DegenerateInput)
{
    Points2 line(2, 5);
    line << 0, 1, 2, 3, 4, 0, 1, 2, 3, 4;
    test::expect_code([&] { alpha_silhouette(line); }, ErrorCode::DegenerateCloud);
    Points2 two(2, 4);
    two << 0, 1, 0, 1, 0, 1, 0, 1;
    test::expect_code([&] { alpha_silhouette(two); }, ErrorCode::DegenerateCloud);
    Points2 tri(2, 3);
    tri << 0, 1, 0, 0, 0, 1;
    test::expect_code([&] { alpha_silhouette(tri, -1.0); }, ErrorCode::InvalidArgument);
    tri(0, 0) = std::nan("");
    test::expect_code([&] { alpha_silhouette(tri); }, ErrorCode::InvalidArgument);
}

TEST(AlphaShape, DuplicatesAreIgnored)
{
    Points2 p(2, 5);
    p << 0, 1, 0, 1, 1, 0, 0, 1, 1, 1;
    const auto b = alpha_silhouette(p, std::numeric_limits<double>::infinity());
    EXPECT_EQ(b.size(), 4u);
}

TEST(Silhouette, MatchPicksSmallestCross)
{
    ModelSilhouette m;
    m.directions = {Vec3(0, 0, 1), Vec3(1, 0, 1).normalized()};
    SilhouetteObservation o;
    o.directions = {Vec3(1, 0, 1.1).normalized(), Vec3(0.01, 0, 1).normalized(), Vec3(0, 1, 0)};
    const auto c = match_silhouettes(m, o);
    ASSERT_EQ(c.pairs.size(), 2u);
    EXPECT_EQ(c.pairs[0].second, 1);
    EXPECT_EQ(c.pairs[1].second, 0);
    test::expect_code([&] { match_silhouettes(ModelSilhouette{}, o); }, ErrorCode::InvalidArgument);
}

TEST(Silhouette, ResampleKeepsAtMostMaxCount)
{
    SilhouetteObservation o;
    for (int k = 0; k < 1000; ++k) {
        const double a = 2.0 * std::numbers::pi * k / 1000.0;
        o.directions.push_back(Vec3(std::cos(a), std::sin(a), 5.0).normalized());
    }
    const auto r = resample_silhouette(o, 100);
    EXPECT_LE(r.directions.size(), 100u);
    EXPECT_GE(r.directions.size(), 95u);
    EXPECT_EQ(resample_silhouette(r, 200).directions.size(), r.directions.size());
}

TEST(Silhouette, ModelSilhouetteIsOnOutline)
{
    ScenarioConfig c = test::small_config(52, {5, 5}, 50);
    c.density = 300;
    const Scenario sc = generate_scenario(c);
    ASSERT_EQ(sc.silhouettes.size(), 2u);
    const auto sil = model_silhouette(sc.model, sc.gt_instance, sc.gt_viewpoint_poses[0]);
    EXPECT_EQ(sil.directions.size(), sc.silhouettes[0].directions.size());
    for (std::size_t k = 0; k < sil.indices.size(); ++k) {
        const Vec3 d = (sc.gt_points.col(sil.indices[k]) - sc.gt_viewpoint_poses[0].translation).normalized();
        EXPECT_LT((d - sil.directions[k]).norm(), 1e-12);
    }
}

class Boosting : public ::testing::Test
{
protected:
    static void SetUpTestSuite()
    {
        ScenarioConfig c = test::small_config(53, {4, 4}, 50);
        c.density = 300;
        scenario_ = std::make_unique<Scenario>(generate_scenario(c));
    }
    static void TearDownTestSuite() { scenario_.reset(); }
    static std::unique_ptr<Scenario> scenario_;
};

std::unique_ptr<Scenario> Boosting::scenario_;

TEST_F(Boosting, LambdaOneIsPlainNs)
{
    InteriorPointBackend ipm;
    const NsSolution plain = solve_ns(scenario_->ns, ipm);
    const BoostResult r = solve_silhouette_boosted_ns(scenario_->ns, scenario_->silhouettes, 1.0, 5, ipm);
    EXPECT_NEAR(r.solution.objective, plain.objective, 1e-6);
    EXPECT_NEAR(r.initial.objective, plain.objective, 1e-9);
}

TEST_F(Boosting, TraceAndConvergence)
{
    InteriorPointBackend ipm;
    const BoostResult r =
        solve_silhouette_boosted_ns(scenario_->ns, scenario_->silhouettes, 0.9, 50, ipm, &scenario_->gt_points);
    ASSERT_FALSE(r.trace.empty());
    EXPECT_EQ(static_cast<int>(r.trace.size()), r.iterations + 1);
    for (const auto& it : r.trace) {
        ASSERT_TRUE(it.rmse.has_value());
    }
    for (std::size_t k = 1; k < r.trace.size(); ++k) {
        EXPECT_GT(r.trace[k].pair_count, 0);
    }
    EXPECT_LE(r.iterations, 50);
}

TEST_F(Boosting, Validation)
{
    InteriorPointBackend ipm;
    const auto& ns = scenario_->ns;
    const auto& obs = scenario_->silhouettes;
    test::expect_code([&] { solve_silhouette_boosted_ns(ns, obs, 1.5, 5, ipm); }, ErrorCode::InvalidArgument);
    test::expect_code([&] { solve_silhouette_boosted_ns(ns, obs, 0.5, 0, ipm); }, ErrorCode::InvalidArgument);
    test::expect_code([&] { solve_silhouette_boosted_ns(ns, {obs[0]}, 0.5, 5, ipm); }, ErrorCode::DimensionMismatch);
    auto bad = obs;
    bad[0].directions.resize(2);
    test::expect_code([&] { solve_silhouette_boosted_ns(ns, bad, 0.5, 5, ipm); }, ErrorCode::InvalidArgument);
    NsProblem no_pose = ns;
    no_pose.viewpoints[1].pose.reset();
    test::expect_code([&] { solve_silhouette_boosted_ns(no_pose, obs, 0.5, 5, ipm); }, ErrorCode::InvalidArgument);
}
