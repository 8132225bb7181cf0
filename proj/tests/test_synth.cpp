/*
 * gsft - Shape-from-Template with generalised cameras.
 *
 * File: tests/test_synth.cpp
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

#include <numeric>

using namespace gsft;

TEST(Synth, LadderKeepsTotalFixed)
{
    for (bool nsc : {false, true}) {
        for (int id = 1; id <= 5; ++id) {
            const auto counts = ladder_counts(id, nsc);
            EXPECT_EQ(std::accumulate(counts.begin(), counts.end(), 0), 100) << id;
        }
    }
    EXPECT_EQ(ladder_counts(5, false).size(), 100u);
    EXPECT_EQ(ladder_counts(5, true).size(), 20u);
    EXPECT_EQ(ladder_counts(4, false), std::vector<int>(10, 10));
    test::expect_code([] { ladder_counts(6, false); }, ErrorCode::InvalidArgument);
    EXPECT_GE(ladder_config(1, false, 0).n_points, 100);
}

TEST(Synth, InfeasibleConfigs)
{
    auto bad = [](auto mutate) {
        ScenarioConfig c = test::small_config(1, {5, 5});
        mutate(c);
        test::expect_code([&] { c.validate(); }, ErrorCode::ConfigInfeasible);
    };
    bad([](ScenarioConfig& c) { c.correspondences = {}; });
    bad([](ScenarioConfig& c) { c.correspondences = {1, 2}; });
    bad([](ScenarioConfig& c) { c.correspondences = {15, 15}; });
    bad([](ScenarioConfig& c) { c.correspondences = {10, -1}; });
    bad([](ScenarioConfig& c) { c.projections = {ProjectionModel::perspective}; });
    bad([](ScenarioConfig& c) { c.euler_range_deg = 200.0; });
    bad([](ScenarioConfig& c) { c.density = 10; });
    bad([](ScenarioConfig& c) { c.noise_sd = -1.0; });
    bad([](ScenarioConfig& c) { c.n_bases = 0; });
}

TEST(Synth, Deterministic)
{
    const Scenario a = generate_scenario(test::small_config(61, {5, 6}));
    const Scenario b = generate_scenario(test::small_config(61, {5, 6}));
    const Scenario c = generate_scenario(test::small_config(62, {5, 6}));
    EXPECT_EQ(a.gt_points, b.gt_points);
    EXPECT_EQ(a.model.mean(), b.model.mean());
    EXPECT_NE(a.gt_points, c.gt_points);
}

TEST(Synth, ModelHasRequestedModes)
{
    const Scenario sc = generate_scenario(test::small_config(63, {5, 5}));
    EXPECT_EQ(sc.model.basis_count(), 3);
    EXPECT_EQ(sc.model.point_count(), 20);
    EXPECT_EQ(sc.gt_instance.weights.size(), 3);
    EXPECT_GE(sc.gt_instance.weights.minCoeff(), 0.0);
    EXPECT_LE(sc.gt_instance.weights.maxCoeff(), 1.0);
}

TEST(Synth, NoiselessRaysHitTruth)
{
    const Scenario sc = generate_scenario(test::small_config(64, {7, 8}));
    std::set<int> used;
    for (std::size_t x = 0; x < sc.ns.viewpoints.size(); ++x) {
        const auto& v = sc.ns.viewpoints[x];
        ASSERT_TRUE(v.pose.has_value());
        for (const auto& c : sc.ns.correspondences[x]) {
            EXPECT_TRUE(used.insert(c.template_index).second) << "correspondence sets overlap";
            const Ray& world = v.rays[static_cast<std::size_t>(c.ray_index)];
            EXPECT_LT(point_to_ray_residual(sc.gt_points.col(c.template_index), world).norm(), 1e-10);
            // camera-frame ray mapped to the world is the same line
            const Ray& local = sc.nsc->rays[x][static_cast<std::size_t>(c.ray_index)];
            EXPECT_EQ(local.origin(), Vec3::Zero());
            const Vec3 d = v.pose->rotation.matrix() * local.direction();
            EXPECT_LT((d - world.direction()).norm(), 1e-10);
        }
    }
    EXPECT_EQ(used.size(), 15u);
}

TEST(Synth, PointsAreInFrontOfEveryView)
{
    const Scenario sc = generate_scenario(test::small_config(65, {5, 5, 5}));
    for (const auto& pose : sc.gt_viewpoint_poses) {
        const Points3 cam = pose.inverse().apply(sc.gt_points);
        EXPECT_GT(cam.row(2).minCoeff(), 0.0);
    }
}

TEST(Synth, NoiseMovesObservations)
{
    ScenarioConfig c = test::small_config(66, {6, 6});
    c.noise_sd = 0.01;
    const Scenario sc = generate_scenario(c);
    double worst = 0.0;
    for (std::size_t x = 0; x < 2; ++x) {
        for (const auto& corr : sc.ns.correspondences[x]) {
            worst = std::max(worst, point_to_ray_residual(sc.gt_points.col(corr.template_index),
                                                          sc.ns.viewpoints[x].rays[static_cast<std::size_t>(corr.ray_index)])
                                        .norm());
        }
    }
    EXPECT_GT(worst, 1e-4);
    EXPECT_LT(worst, 0.1);
}

TEST(Synth, DensifyPreservesOriginalPoints)
{
    std::mt19937_64 rng(67);
    const ShapeModel model = test::random_model(rng, 20, 2);
    const ShapeModel dense = densify_for_silhouette(model, 200, 1);
    ASSERT_EQ(dense.point_count(), 200);
    EXPECT_EQ(dense.mean().leftCols(20), model.mean());
    EXPECT_EQ(dense.basis(1).leftCols(20), model.basis(1));
    // new points deform linearly: their instance lies in the hull of the originals' bounding box
    const Eigen::VectorXd w = test::random_weights(rng, 2);
    const Points3 q = deform(model, w);
    const Points3 qd = deform(dense, w);
    EXPECT_LT((qd.leftCols(20) - q).norm(), 1e-12);
    for (int c = 0; c < 3; ++c) {
        EXPECT_LE(qd.row(c).maxCoeff(), q.row(c).maxCoeff() + 1e-12);
        EXPECT_GE(qd.row(c).minCoeff(), q.row(c).minCoeff() - 1e-12);
    }
    test::expect_code([&] { densify_for_silhouette(model, 10); }, ErrorCode::InvalidArgument);
}

TEST(Synth, SilhouettesForDenseScenarios)
{
    ScenarioConfig c = test::small_config(68, {3, 3}, 50);
    c.density = 200;
    const Scenario sc = generate_scenario(c);
    EXPECT_EQ(sc.model.point_count(), 200);
    ASSERT_EQ(sc.silhouettes.size(), 2u);
    for (const auto& s : sc.silhouettes) {
        EXPECT_GE(s.directions.size(), 3u);
        for (const auto& d : s.directions) {
            EXPECT_NEAR(d.norm(), 1.0, 1e-12);
        }
    }
}

TEST(Synth, ConfigJsonRoundTrip)
{
    ScenarioConfig c = test::small_config(69, {4, 5, 6});
    c.projections = {ProjectionModel::perspective, ProjectionModel::orthographic, ProjectionModel::perspective};
    c.noise_sd = 0.02;
    c.weight_min = -0.5;
    const ScenarioConfig back = config_from_json(config_to_json(c));
    EXPECT_EQ(config_to_json(back), config_to_json(c));
}

TEST(Synth, ConfigJsonLadderShortcut)
{
    const ScenarioConfig c = config_from_json(nlohmann::json{{"config_id", 5}, {"seed", 3}}, true);
    EXPECT_EQ(c.correspondences, std::vector<int>(20, 5));
    EXPECT_EQ(c.seed, 3u);
    test::expect_code([] { config_from_json(nlohmann::json{{"projections", {"fisheye"}}}); }, ErrorCode::ParseError);
    test::expect_code([] { config_from_json(nlohmann::json{{"weight_range", {1.0}}}); }, ErrorCode::ParseError);
    test::expect_code([] { config_from_json(nlohmann::json::array()); }, ErrorCode::ParseError);
}

TEST(Synth, PopulationIsCentred)
{
    for (const auto& s : generate_population(70, 30, 2, 0.2)) {
        EXPECT_LT(s.rowwise().mean().norm(), 1e-12);
    }
    test::expect_code([] { generate_population(1, 3, 1, 0.1); }, ErrorCode::InvalidArgument);
}
