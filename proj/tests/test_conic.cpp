/*
 * gsft - Shape-from-Template with generalised cameras.
 *
 * File: tests/test_conic.cpp
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

#include <cstdlib>
#include <fstream>

using namespace gsft;

TEST(AffineExpr, Arithmetic)
{
    const AffineExpr a = AffineExpr::variable(0, 2.0) + 1.0;
    const AffineExpr b = AffineExpr::variable(1) * 3.0 - AffineExpr::variable(0);
    const std::vector<double> v{0.5, -1.0};
    EXPECT_DOUBLE_EQ((a + b).evaluate(v), 2.0 + -3.0 - 0.5);
    EXPECT_DOUBLE_EQ((-a).evaluate(v), -2.0);
    EXPECT_DOUBLE_EQ((2.0 * b).evaluate(v), -7.0);
}

TEST(ConicProblem, PsdIndexing)
{
    ConicProblem cp;
    cp.add_free_vector("f", 2);
    const int b = cp.add_psd_block("X", 4);
    EXPECT_EQ(cp.variable_count(), 2 + 10);
    EXPECT_EQ(cp.psd_var(b, 0, 0), 2);
    EXPECT_EQ(cp.psd_var(b, 1, 3), cp.psd_var(b, 3, 1));
    EXPECT_EQ(cp.psd_var(b, 3, 3), 11);
    std::set<int> seen;
    for (int i = 0; i < 4; ++i) {
        for (int j = i; j < 4; ++j) {
            seen.insert(cp.psd_var(b, i, j));
        }
    }
    EXPECT_EQ(seen.size(), 10u);
    test::expect_code([&] { cp.psd_var(b, 0, 4); }, ErrorCode::InvalidArgument);
    test::expect_code([&] { cp.free_var(0, 2); }, ErrorCode::InvalidArgument);
    test::expect_code([&] { cp.add_equality(AffineExpr::variable(99), 0.0); }, ErrorCode::InvalidArgument);
    test::expect_code([&] { cp.add_psd_block("bad", 0); }, ErrorCode::InvalidArgument);
}

TEST(ConicProblem, JsonRoundTrip)
{
    ConicProblem cp;
    const int b = cp.add_psd_block("X", 3);
    const int f = cp.add_free_vector("t", 2);
    const int u = cp.add_nonneg(3);
    cp.add_objective(AffineExpr::variable(cp.psd_var(b, 0, 0)) + AffineExpr::variable(u + 2, 0.5) + 0.25);
    cp.add_equality(AffineExpr::variable(cp.free_var(f, 1)) - AffineExpr::variable(u), 1.0);
    cp.add_inequality(AffineExpr::variable(cp.psd_var(b, 1, 2), -1.0), -3.0);
    const nlohmann::json j = cp.to_json();
    EXPECT_EQ(ConicProblem::from_json(j).to_json(), j);
}

TEST(ConicProblem, FromJsonRejectsBadInput)
{
    test::expect_code([] { ConicProblem::from_json(nlohmann::json::object()); }, ErrorCode::ParseError);
    ConicProblem cp;
    cp.add_free_vector("t", 2);
    nlohmann::json j = cp.to_json();
    j["variable_count"] = 5;
    test::expect_code([&] { ConicProblem::from_json(j); }, ErrorCode::ParseError);
    j = cp.to_json();
    j["format"] = "other";
    test::expect_code([&] { ConicProblem::from_json(j); }, ErrorCode::ParseError);
}

TEST(SolverSettings, EnvironmentOverride)
{
    ::setenv("GSFT_SOLVER_TOL", "1e-5", 1);
    EXPECT_DOUBLE_EQ(SolverSettings::from_environment().tolerance, 1e-5);
    ::setenv("GSFT_SOLVER_TOL", "garbage", 1);
    EXPECT_DOUBLE_EQ(SolverSettings::from_environment().tolerance, 1e-8);
    ::unsetenv("GSFT_SOLVER_TOL");
    EXPECT_DOUBLE_EQ(SolverSettings::from_environment().tolerance, 1e-8);
}

TEST(Ipm, SmallLp)
{
    // min x + 2y  s.t. x + y = 1, x, y >= 0  ->  1 at (1, 0)
    ConicProblem cp;
    const int u = cp.add_nonneg(2);
    cp.add_objective(AffineExpr::variable(u) + AffineExpr::variable(u + 1, 2.0));
    cp.add_equality(AffineExpr::variable(u) + AffineExpr::variable(u + 1), 1.0);
    InteriorPointBackend ipm;
    const ConicSolution s = ipm.solve(cp);
    ASSERT_TRUE(is_usable(s.status));
    EXPECT_NEAR(s.objective, 1.0, 1e-7);
    EXPECT_NEAR(s.values[static_cast<std::size_t>(u)], 1.0, 1e-6);
}

TEST(Ipm, MinEigenvalueSdp)
{
    // min <C, X> s.t. tr X = 1, X psd  ->  smallest eigenvalue of C
    Eigen::Matrix3d c;
    c << 2, -1, 0, -1, 2, -1, 0, -1, 2;
    ConicProblem cp;
    const int b = cp.add_psd_block("X", 3);
    AffineExpr obj;
    AffineExpr tr;
    for (int i = 0; i < 3; ++i) {
        for (int j = i; j < 3; ++j) {
            obj += AffineExpr::variable(cp.psd_var(b, i, j), i == j ? c(i, j) : 2.0 * c(i, j));
        }
        tr += AffineExpr::variable(cp.psd_var(b, i, i));
    }
    cp.add_objective(obj);
    cp.add_equality(tr, 1.0);
    InteriorPointBackend ipm;
    const ConicSolution s = ipm.solve(cp);
    ASSERT_TRUE(is_usable(s.status));
    EXPECT_NEAR(s.objective, 2.0 - std::sqrt(2.0), 1e-7);
    const Eigen::MatrixXd x = s.psd_matrix(cp, b);
    EXPECT_GT(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(x).eigenvalues().minCoeff(), -1e-8);
}

TEST(Ipm, DetectsInfeasibility)
{
    ConicProblem cp;
    const int u = cp.add_nonneg(1);
    cp.add_objective(AffineExpr::variable(u));
    cp.add_equality(AffineExpr::variable(u), -1.0);
    InteriorPointBackend ipm;
    EXPECT_EQ(ipm.solve(cp).status, SolveStatus::infeasible);
}

TEST(Ipm, DetectsUnboundedness)
{
    ConicProblem cp;
    const int u = cp.add_nonneg(2);
    cp.add_objective(AffineExpr::variable(u, -1.0));
    cp.add_equality(AffineExpr::variable(u) - AffineExpr::variable(u + 1), 0.0);
    InteriorPointBackend ipm;
    EXPECT_EQ(ipm.solve(cp).status, SolveStatus::unbounded);
}

// Reference optima from an independent solver, see tests/oracles.
class ConicFixture : public ::testing::TestWithParam<std::string>
{
};

TEST_P(ConicFixture, MatchesReferenceOptimum)
{
    const auto path = test::data_dir() / (GetParam() + ".json");
    const nlohmann::json j = detail::load_json(path);
    const ConicProblem cp = ConicProblem::from_json(j.at("problem"));
    const double ref = j.at("oracle").at("objective").get<double>();
    const double tol = 1e-6 * std::max(1.0, std::abs(ref));
    for (auto strategy : {InteriorPointBackend::KktStrategy::automatic, InteriorPointBackend::KktStrategy::dense_schur}) {
        InteriorPointBackend ipm(SolverSettings{}, strategy);
        const ConicSolution s = ipm.solve(cp);
        ASSERT_TRUE(is_usable(s.status)) << to_string(s.status);
        EXPECT_NEAR(s.objective, ref, tol);
        // primal feasibility of the returned point
        for (const auto& row : cp.equalities()) {
            EXPECT_NEAR(s.value(row.expr), row.rhs, 1e-6 * std::max(1.0, std::abs(row.rhs)));
        }
        for (const auto& row : cp.inequalities()) {
            EXPECT_GE(s.value(row.expr), row.rhs - 1e-6);
        }
        for (std::size_t b = 0; b < cp.psd_blocks().size(); ++b) {
            const Eigen::MatrixXd x = s.psd_matrix(cp, static_cast<int>(b));
            const double lmin = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(x).eigenvalues().minCoeff();
            EXPECT_GT(lmin, -1e-7 * std::max(1.0, x.norm()));
        }
    }
}

TEST_P(ConicFixture, LowRankStrategyAgrees)
{
    const nlohmann::json j = detail::load_json(test::data_dir() / (GetParam() + ".json"));
    const ConicProblem cp = ConicProblem::from_json(j.at("problem"));
    const double ref = j.at("oracle").at("objective").get<double>();
    InteriorPointBackend ipm(SolverSettings{}, InteriorPointBackend::KktStrategy::low_rank);
    const ConicSolution s = ipm.solve(cp);
    ASSERT_TRUE(is_usable(s.status)) << to_string(s.status);
    EXPECT_NEAR(s.objective, ref, 1e-5 * std::max(1.0, std::abs(ref)));
}

INSTANTIATE_TEST_SUITE_P(Oracle, ConicFixture,
                         ::testing::Values("conic_sdp_small", "conic_sdp_medium", "conic_lp", "conic_mixed",
                                           "conic_ns_two_views", "conic_nsc_two_views"));
