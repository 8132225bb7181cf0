/*
 * gsft - Shape-from-Template with generalised cameras.
 *
 * File: include/gsft/conic.hpp
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

#ifndef GSFT_CONIC_HPP_
#define GSFT_CONIC_HPP_

#include "gsft/error.hpp"

#include "Eigen/Core"
#include "json.hpp"

#include <algorithm>
#include <cstdlib>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace gsft {

/**
 * c + sum_k a_k x_{v_k} over the scalar variables of a ConicProblem.
 * Terms may repeat a variable; they are summed on assembly.
 */
struct AffineExpr
{
    std::vector<std::pair<int, double>> terms;
    double constant = 0.0;

    AffineExpr() = default;
    AffineExpr(double c) : constant(c) {} // NOLINT(google-explicit-constructor)

    static AffineExpr variable(int index, double coefficient = 1.0)
    {
        AffineExpr e;
        e.terms.emplace_back(index, coefficient);
        return e;
    }

    AffineExpr& operator+=(const AffineExpr& o)
    {
        terms.insert(terms.end(), o.terms.begin(), o.terms.end());
        constant += o.constant;
        return *this;
    }

    AffineExpr& operator-=(const AffineExpr& o)
    {
        terms.reserve(terms.size() + o.terms.size());
        for (const auto& [v, a] : o.terms) {
            terms.emplace_back(v, -a);
        }
        constant -= o.constant;
        return *this;
    }

    AffineExpr& operator*=(double s)
    {
        for (auto& t : terms) {
            t.second *= s;
        }
        constant *= s;
        return *this;
    }

    double evaluate(std::span<const double> values) const
    {
        double v = constant;
        for (const auto& [idx, a] : terms) {
            v += a * values[static_cast<std::size_t>(idx)];
        }
        return v;
    }
};

inline AffineExpr operator+(AffineExpr a, const AffineExpr& b) { return a += b; }
inline AffineExpr operator-(AffineExpr a, const AffineExpr& b) { return a -= b; }
inline AffineExpr operator*(AffineExpr a, double s) { return a *= s; }
inline AffineExpr operator*(double s, AffineExpr a) { return a *= s; }
inline AffineExpr operator-(AffineExpr a) { return a *= -1.0; }

/**
 * Standard-form carrier for linear objectives over a product of cones:
 * symmetric PSD blocks, free vectors and a nonnegative orthant.
 *
 * Every scalar variable has a global index. A PSD block of dimension n owns
 * n(n+1)/2 variables, one per upper-triangle entry X(i, j), i <= j, laid out
 * row by row; a coefficient on that variable multiplies the entry itself.
 */
class ConicProblem
{
public:
    enum class VarKind { psd, free, nonneg };

    struct PsdBlock
    {
        std::string label;
        int dim = 0;
        int first_var = 0;
    };

    struct FreeVector
    {
        std::string label;
        int dim = 0;
        int first_var = 0;
    };

    /// equality: expr == rhs; inequality: expr >= rhs.
    struct Row
    {
        AffineExpr expr;
        double rhs = 0.0;
    };

    struct VarInfo
    {
        VarKind kind;
        int group; // block / vector index; -1 for nonneg
        int i;
        int j;
    };

    int add_psd_block(std::string label, int dim)
    {
        if (dim < 1) {
            throw Error(ErrorCode::InvalidArgument, "PSD block dimension must be positive");
        }
        const int id = static_cast<int>(psd_blocks_.size());
        psd_blocks_.push_back({std::move(label), dim, variable_count()});
        for (int i = 0; i < dim; ++i) {
            for (int j = i; j < dim; ++j) {
                vars_.push_back({VarKind::psd, id, i, j});
            }
        }
        return id;
    }

    int add_free_vector(std::string label, int dim)
    {
        const int id = static_cast<int>(free_vectors_.size());
        free_vectors_.push_back({std::move(label), dim, variable_count()});
        for (int k = 0; k < dim; ++k) {
            vars_.push_back({VarKind::free, id, k, 0});
        }
        return id;
    }

    /// Appends count nonnegative scalars; returns the global index of the first.
    int add_nonneg(int count)
    {
        const int first = variable_count();
        for (int k = 0; k < count; ++k) {
            vars_.push_back({VarKind::nonneg, -1, nonneg_count_ + k, 0});
        }
        nonneg_count_ += count;
        return first;
    }

    /// Global index of the symmetric entry (i, j) of a PSD block.
    int psd_var(int block, int i, int j) const
    {
        const auto& b = psd_blocks_.at(static_cast<std::size_t>(block));
        if (i > j) {
            std::swap(i, j);
        }
        if (i < 0 || j >= b.dim) {
            throw Error(ErrorCode::InvalidArgument, "PSD entry out of range");
        }
        return b.first_var + i * b.dim - i * (i - 1) / 2 + (j - i);
    }

    int free_var(int vec, int k) const
    {
        const auto& f = free_vectors_.at(static_cast<std::size_t>(vec));
        if (k < 0 || k >= f.dim) {
            throw Error(ErrorCode::InvalidArgument, "free variable out of range");
        }
        return f.first_var + k;
    }

    void add_objective(const AffineExpr& e)
    {
        check_expr(e);
        objective_ += e;
    }

    void add_equality(AffineExpr e, double rhs)
    {
        check_expr(e);
        equalities_.push_back({std::move(e), rhs});
    }

    void add_inequality(AffineExpr e, double rhs)
    {
        check_expr(e);
        inequalities_.push_back({std::move(e), rhs});
    }

    int variable_count() const noexcept { return static_cast<int>(vars_.size()); }
    int nonneg_count() const noexcept { return nonneg_count_; }
    const VarInfo& variable(int index) const { return vars_.at(static_cast<std::size_t>(index)); }
    const std::vector<PsdBlock>& psd_blocks() const noexcept { return psd_blocks_; }
    const std::vector<FreeVector>& free_vectors() const noexcept { return free_vectors_; }
    const AffineExpr& objective() const noexcept { return objective_; }
    const std::vector<Row>& equalities() const noexcept { return equalities_; }
    const std::vector<Row>& inequalities() const noexcept { return inequalities_; }

    /// Self-describing standard-form dump for debugging.
    nlohmann::json to_json() const
    {
        auto expr_json = [](const AffineExpr& e) {
            nlohmann::json terms = nlohmann::json::array();
            for (const auto& [v, a] : e.terms) {
                terms.push_back({v, a});
            }
            return nlohmann::json{{"terms", terms}, {"constant", e.constant}};
        };
        nlohmann::json j;
        j["format"] = "gsft-conic-v1";
        j["variable_layout"] = "psd blocks own upper-triangle entries (i<=j) row by row; coefficients multiply entries";
        nlohmann::json blocks = nlohmann::json::array();
        for (const auto& b : psd_blocks_) {
            blocks.push_back({{"label", b.label}, {"dim", b.dim}, {"first_var", b.first_var}});
        }
        j["psd_blocks"] = blocks;
        nlohmann::json frees = nlohmann::json::array();
        for (const auto& f : free_vectors_) {
            frees.push_back({{"label", f.label}, {"dim", f.dim}, {"first_var", f.first_var}});
        }
        j["free_vectors"] = frees;
        nlohmann::json nonneg = nlohmann::json::array();
        for (int v = 0; v < variable_count(); ++v) {
            if (vars_[static_cast<std::size_t>(v)].kind == VarKind::nonneg) {
                nonneg.push_back(v);
            }
        }
        j["nonneg_vars"] = nonneg;
        j["variable_count"] = variable_count();
        j["objective"] = expr_json(objective_);
        nlohmann::json eq = nlohmann::json::array();
        for (const auto& r : equalities_) {
            eq.push_back({{"expr", expr_json(r.expr)}, {"rhs", r.rhs}});
        }
        j["equalities"] = eq;
        nlohmann::json ineq = nlohmann::json::array();
        for (const auto& r : inequalities_) {
            ineq.push_back({{"expr", expr_json(r.expr)}, {"rhs", r.rhs}, {"sense", ">="}});
        }
        j["inequalities"] = ineq;
        return j;
    }

    /// Rebuilds a problem from to_json() output; variable indices are preserved.
    static ConicProblem from_json(const nlohmann::json& j)
    {
        try {
            if (j.at("format").get<std::string>() != "gsft-conic-v1") {
                throw Error(ErrorCode::ParseError, "conic problem: unknown format");
            }
            // (first_var, kind, payload) in declaration order
            struct Group
            {
                int first;
                int kind;
                std::string label;
                int dim;
            };
            std::vector<Group> groups;
            for (const auto& b : j.at("psd_blocks")) {
                groups.push_back({b.at("first_var").get<int>(), 0, b.at("label").get<std::string>(),
                                  b.at("dim").get<int>()});
            }
            for (const auto& f : j.at("free_vectors")) {
                groups.push_back({f.at("first_var").get<int>(), 1, f.at("label").get<std::string>(),
                                  f.at("dim").get<int>()});
            }
            const auto nonneg = j.at("nonneg_vars").get<std::vector<int>>();
            for (std::size_t k = 0; k < nonneg.size();) {
                std::size_t e = k + 1;
                while (e < nonneg.size() && nonneg[e] == nonneg[e - 1] + 1) {
                    ++e;
                }
                groups.push_back({nonneg[k], 2, "", static_cast<int>(e - k)});
                k = e;
            }
            std::sort(groups.begin(), groups.end(), [](const Group& a, const Group& b) { return a.first < b.first; });
            ConicProblem p;
            for (const auto& g : groups) {
                if (p.variable_count() != g.first) {
                    throw Error(ErrorCode::ParseError, "conic problem: variable layout has gaps");
                }
                if (g.kind == 0) {
                    p.add_psd_block(g.label, g.dim);
                } else if (g.kind == 1) {
                    p.add_free_vector(g.label, g.dim);
                } else {
                    p.add_nonneg(g.dim);
                }
            }
            if (p.variable_count() != j.at("variable_count").get<int>()) {
                throw Error(ErrorCode::ParseError, "conic problem: variable count mismatch");
            }
            auto expr = [](const nlohmann::json& e) {
                AffineExpr out;
                for (const auto& t : e.at("terms")) {
                    out.terms.emplace_back(t.at(0).get<int>(), t.at(1).get<double>());
                }
                out.constant = e.at("constant").get<double>();
                return out;
            };
            p.add_objective(expr(j.at("objective")));
            for (const auto& r : j.at("equalities")) {
                p.add_equality(expr(r.at("expr")), r.at("rhs").get<double>());
            }
            for (const auto& r : j.at("inequalities")) {
                p.add_inequality(expr(r.at("expr")), r.at("rhs").get<double>());
            }
            return p;
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::ParseError, std::string("conic problem: ") + e.what());
        }
    }

private:
    void check_expr(const AffineExpr& e) const
    {
        for (const auto& [v, a] : e.terms) {
            if (v < 0 || v >= variable_count()) {
                throw Error(ErrorCode::InvalidArgument, "expression references undeclared variable "
                                                            + std::to_string(v));
            }
        }
    }

    std::vector<VarInfo> vars_;
    std::vector<PsdBlock> psd_blocks_;
    std::vector<FreeVector> free_vectors_;
    int nonneg_count_ = 0;
    AffineExpr objective_;
    std::vector<Row> equalities_;
    std::vector<Row> inequalities_;
};

enum class SolveStatus { optimal, near_optimal, infeasible, unbounded, numerical_failure };

inline std::string_view to_string(SolveStatus s)
{
    switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::near_optimal: return "near_optimal";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::unbounded: return "unbounded";
    case SolveStatus::numerical_failure: return "numerical_failure";
    }
    return "unknown";
}

inline bool is_usable(SolveStatus s) { return s == SolveStatus::optimal || s == SolveStatus::near_optimal; }

struct ConicSolution
{
    SolveStatus status = SolveStatus::numerical_failure;
    std::vector<double> values; ///< one per problem variable
    double objective = 0.0;
    double dual_objective = 0.0;
    double primal_infeasibility = 0.0;
    double dual_infeasibility = 0.0;
    double relative_gap = 0.0;
    int iterations = 0;

    double value(const AffineExpr& e) const { return e.evaluate(values); }

    Eigen::MatrixXd psd_matrix(const ConicProblem& problem, int block) const
    {
        const auto& b = problem.psd_blocks().at(static_cast<std::size_t>(block));
        Eigen::MatrixXd m(b.dim, b.dim);
        for (int i = 0; i < b.dim; ++i) {
            for (int j = i; j < b.dim; ++j) {
                m(i, j) = m(j, i) = values[static_cast<std::size_t>(problem.psd_var(block, i, j))];
            }
        }
        return m;
    }

    Eigen::VectorXd free_vector(const ConicProblem& problem, int vec) const
    {
        const auto& f = problem.free_vectors().at(static_cast<std::size_t>(vec));
        Eigen::VectorXd v(f.dim);
        for (int k = 0; k < f.dim; ++k) {
            v(k) = values[static_cast<std::size_t>(f.first_var + k)];
        }
        return v;
    }
};

struct SolverSettings
{
    double tolerance = 1e-8;
    int max_iterations = 120;

    /// Defaults, with GSFT_SOLVER_TOL overriding the tolerance when set.
    static SolverSettings from_environment()
    {
        SolverSettings s;
        if (const char* env = std::getenv("GSFT_SOLVER_TOL")) {
            char* end = nullptr;
            const double v = std::strtod(env, &end);
            if (end != env && v > 0.0) {
                s.tolerance = v;
            }
        }
        return s;
    }
};

struct BackendCapabilities
{
    bool psd_cone = false;
    bool free_variables = false;
    bool nonneg_cone = false;
};

/**
 * Contract for conic solvers. A conforming backend reports one of the
 * SolveStatus values and primal values for every problem variable.
 * Instances are not shared between threads.
 */
class SolverBackend
{
public:
    virtual ~SolverBackend() = default;
    virtual BackendCapabilities capabilities() const = 0;
    virtual const SolverSettings& settings() const = 0;
    virtual ConicSolution solve(const ConicProblem& problem) = 0;
};

} // namespace gsft

#endif // GSFT_CONIC_HPP_
