/*
 * gsft - Shape-from-Template with generalised cameras.
 *
 * File: tests/test_shape_model.cpp
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

using namespace gsft;

TEST(ShapeModel, ConstructorChecks)
{
    test::expect_code([] { ShapeModel(Points3::Zero(3, 3), {Points3::Zero(3, 3)}); }, ErrorCode::InvalidArgument);
    test::expect_code([] { ShapeModel(Points3::Zero(3, 5), {}); }, ErrorCode::InvalidArgument);
    test::expect_code([] { ShapeModel(Points3::Zero(3, 5), {Points3::Zero(3, 4)}); }, ErrorCode::DimensionMismatch);
}

TEST(ShapeModel, DeformAndInstantiate)
{
    std::mt19937_64 rng(1);
    const ShapeModel model = test::random_model(rng, 8, 3);
    EXPECT_EQ(deform(model, Eigen::VectorXd::Zero(3)), model.mean());
    const Eigen::VectorXd w = test::random_weights(rng, 3);
    Points3 q = model.mean();
    for (int i = 0; i < 3; ++i) {
        q += w(i) * model.basis(i);
    }
    EXPECT_LT((deform(model, w) - q).norm(), 1e-14);

    const ShapeInstance inst{w, test::random_transform(rng)};
    EXPECT_LT((instantiate(model, inst) - inst.pose.apply(q)).norm(), 1e-13);
    test::expect_code([&] { deform(model, Eigen::VectorXd::Zero(2)); }, ErrorCode::DimensionMismatch);
}

TEST(ShapeModel, BasisPoints)
{
    std::mt19937_64 rng(2);
    const ShapeModel model = test::random_model(rng, 6, 2);
    const auto pts = model.basis_points(4);
    ASSERT_EQ(pts.size(), 2u);
    EXPECT_EQ(pts[1], Vec3(model.basis(1).col(4)));
}

TEST(BuildSsm, SpansTheSamples)
{
    const auto population = generate_population(3, 30, 3, 0.2);
    const ShapeModel model = build_ssm(population, 1.0);
    EXPECT_LE(model.basis_count(), static_cast<int>(population.size()) - 1);
    const auto n = 3 * model.point_count();
    Eigen::MatrixXd b(n, model.basis_count());
    for (int i = 0; i < model.basis_count(); ++i) {
        b.col(i) = Eigen::Map<const Eigen::VectorXd>(model.basis(i).data(), n);
        // centred samples give zero-mean bases
        EXPECT_LT(model.basis(i).rowwise().mean().norm(), 1e-12);
    }
    for (const auto& s : population) {
        const Points3 d = s - model.mean();
        const Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(d.data(), n);
        const Eigen::VectorXd w = b.colPivHouseholderQr().solve(v);
        EXPECT_LT((b * w - v).norm(), 1e-9);
    }
}

TEST(BuildSsm, UnitWeightIsOneStandardDeviation)
{
    const auto population = generate_population(4, 25, 2, 0.3);
    const ShapeModel model = build_ssm(population, 1.0);
    const auto n = 3 * model.point_count();
    const Eigen::VectorXd u = Eigen::Map<const Eigen::VectorXd>(model.basis(0).data(), n);
    const Eigen::VectorXd dir = u.normalized();
    double var = 0.0;
    for (const auto& s : population) {
        const Points3 d = s - model.mean();
        const double c = Eigen::Map<const Eigen::VectorXd>(d.data(), n).dot(dir);
        var += c * c;
    }
    var /= static_cast<double>(population.size() - 1);
    EXPECT_NEAR(u.norm(), std::sqrt(var), 1e-9);
}

TEST(BuildSsm, VarianceFractionControlsModes)
{
    const auto population = generate_population(5, 30, 4, 0.2);
    const int full = build_ssm(population, 1.0).basis_count();
    const int half = build_ssm(population, 0.5).basis_count();
    EXPECT_LE(half, full);
    EXPECT_GE(half, 1);
}

TEST(BuildSsm, Errors)
{
    const auto population = generate_population(6, 10, 2, 0.2);
    test::expect_code([&] { build_ssm({population[0]}); }, ErrorCode::InsufficientSamples);
    test::expect_code([&] { build_ssm(population, 0.0); }, ErrorCode::InvalidArgument);
    auto bad = population;
    bad[1] = Points3::Zero(3, 9);
    test::expect_code([&] { build_ssm(bad); }, ErrorCode::InconsistentPointCounts);
}

TEST(BuildSsm, IdenticalSamplesGiveZeroVariance)
{
    const auto population = generate_population(7, 10, 2, 0.2);
    const ShapeModel model = build_ssm({population[0], population[0], population[0]});
    EXPECT_TRUE(model.has_zero_variance());
    EXPECT_EQ(model.basis_count(), 1);
}

TEST(ShapeModelIo, JsonRoundTrip)
{
    std::mt19937_64 rng(8);
    const ShapeModel model = test::random_model(rng, 7, 3);
    const ShapeModel back = model_from_json(model_to_json(model));
    EXPECT_EQ(back.mean(), model.mean());
    ASSERT_EQ(back.basis_count(), 3);
    for (int i = 0; i < 3; ++i) {
        EXPECT_EQ(back.basis(i), model.basis(i));
    }
}

TEST(ShapeModelIo, MalformedJson)
{
    test::expect_code([] { model_from_json(nlohmann::json::array()); }, ErrorCode::ParseError);
    test::expect_code([] { model_from_json(nlohmann::json{{"mean", {{0, 0}}}}); }, ErrorCode::ParseError);
    test::expect_code([] { detail::parse_json_text("{ nope", "model"); }, ErrorCode::ParseError);
}

TEST(ShapeModelIo, SaveAndLoad)
{
    std::mt19937_64 rng(9);
    const ShapeModel model = test::random_model(rng, 5, 1);
    const auto path = std::filesystem::temp_directory_path() / "gsft_model_roundtrip.json";
    save_model(model, path);
    EXPECT_EQ(load_model(path).mean(), model.mean());
    std::filesystem::remove(path);
    test::expect_code([&] { load_model(path); }, ErrorCode::IoError);
}
