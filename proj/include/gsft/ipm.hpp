/*
 * gsft - Shape-from-Template with generalised cameras.
 *
 * File: include/gsft/ipm.hpp
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

#ifndef GSFT_IPM_HPP_
#define GSFT_IPM_HPP_

#include "gsft/conic.hpp"

#include "Eigen/Cholesky"
#include "Eigen/Core"
#include "Eigen/Eigenvalues"
#include "Eigen/LU"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <numbers>
#include <utility>
#include <vector>

namespace gsft {

namespace detail {

inline constexpr double kSqrt2 = std::numbers::sqrt2;

inline int svec_size(int n) { return n * (n + 1) / 2; }

/// Upper triangle row by row, off-diagonals scaled by sqrt(2) so that
/// <svec(A), svec(B)> = trace(A B).
inline Eigen::VectorXd svec(const Eigen::MatrixXd& m)
{
    const auto n = static_cast<int>(m.rows());
    Eigen::VectorXd v(svec_size(n));
    int p = 0;
    for (int i = 0; i < n; ++i) {
        v(p++) = m(i, i);
        for (int j = i + 1; j < n; ++j) {
            v(p++) = kSqrt2 * 0.5 * (m(i, j) + m(j, i));
        }
    }
    return v;
}

inline Eigen::MatrixXd smat(const Eigen::VectorXd& v, int n)
{
    Eigen::MatrixXd m(n, n);
    int p = 0;
    for (int i = 0; i < n; ++i) {
        m(i, i) = v(p++);
        for (int j = i + 1; j < n; ++j) {
            m(i, j) = m(j, i) = v(p++) / kSqrt2;
        }
    }
    return m;
}

inline Eigen::MatrixXd sym(const Eigen::MatrixXd& m) { return 0.5 * (m + m.transpose()); }

struct PsdData
{
    int dim = 0;
    int first_var = 0;
    std::vector<int> rows;  ///< constraint rows touching the block
    Eigen::MatrixXd coeffs; ///< rows.size() x svec_size(dim)
    Eigen::VectorXd cost;   ///< svec_size(dim)
};

/// min c'x s.t. Ax = b over PSD blocks, free columns and nonneg columns.
struct StandardForm
{
    int rows = 0;
    Eigen::VectorXd b;
    std::vector<PsdData> psd;
    std::vector<int> free_vars;
    Eigen::MatrixXd free_coeffs; ///< rows x free
    Eigen::VectorXd free_cost;
    std::vector<int> lp_vars; ///< problem variable per column, -1 for slacks
    std::vector<std::vector<std::pair<int, double>>> lp_cols;
    Eigen::VectorXd lp_cost;
    double offset = 0.0;
    bool lp_single_row = true;
};

inline StandardForm build_standard_form(const ConicProblem& problem)
{
    StandardForm sf;
    const auto& eqs = problem.equalities();
    const auto& ineqs = problem.inequalities();
    sf.rows = static_cast<int>(eqs.size() + ineqs.size());
    sf.b = Eigen::VectorXd::Zero(sf.rows);

    const int nvars = problem.variable_count();
    std::vector<int> column(static_cast<std::size_t>(nvars), -1);
    for (const auto& blk : problem.psd_blocks()) {
        PsdData d;
        d.dim = blk.dim;
        d.first_var = blk.first_var;
        d.cost = Eigen::VectorXd::Zero(svec_size(blk.dim));
        sf.psd.push_back(std::move(d));
    }
    for (int v = 0; v < nvars; ++v) {
        const auto& info = problem.variable(v);
        if (info.kind == ConicProblem::VarKind::free) {
            column[static_cast<std::size_t>(v)] = static_cast<int>(sf.free_vars.size());
            sf.free_vars.push_back(v);
        } else if (info.kind == ConicProblem::VarKind::nonneg) {
            column[static_cast<std::size_t>(v)] = static_cast<int>(sf.lp_vars.size());
            sf.lp_vars.push_back(v);
        }
    }
    const int n_nonneg = static_cast<int>(sf.lp_vars.size());
    for (std::size_t k = 0; k < ineqs.size(); ++k) {
        sf.lp_vars.push_back(-1);
    }
    const auto nf = static_cast<Eigen::Index>(sf.free_vars.size());
    sf.free_coeffs = Eigen::MatrixXd::Zero(sf.rows, nf);
    sf.free_cost = Eigen::VectorXd::Zero(nf);
    sf.lp_cols.resize(sf.lp_vars.size());
    sf.lp_cost = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(sf.lp_vars.size()));

    std::vector<Eigen::MatrixXd> dense(sf.psd.size());
    for (std::size_t k = 0; k < sf.psd.size(); ++k) {
        dense[k] = Eigen::MatrixXd::Zero(sf.rows, svec_size(sf.psd[k].dim));
    }

    // coefficient a on entry X(i, j) is a (diagonal) or a / sqrt(2) (off-diagonal) on the svec coordinate
    auto scatter = [&](const AffineExpr& e, int row) {
        for (const auto& [v, a] : e.terms) {
            const auto& info = problem.variable(v);
            const int col = column[static_cast<std::size_t>(v)];
            if (info.kind == ConicProblem::VarKind::psd) {
                auto& blk = sf.psd[static_cast<std::size_t>(info.group)];
                const int p = v - blk.first_var;
                const double s = info.i == info.j ? a : a / kSqrt2;
                if (row < 0) {
                    blk.cost(p) += s;
                } else {
                    dense[static_cast<std::size_t>(info.group)](row, p) += s;
                }
            } else if (info.kind == ConicProblem::VarKind::free) {
                if (row < 0) {
                    sf.free_cost(col) += a;
                } else {
                    sf.free_coeffs(row, col) += a;
                }
            } else if (row < 0) {
                sf.lp_cost(col) += a;
            } else {
                sf.lp_cols[static_cast<std::size_t>(col)].emplace_back(row, a);
            }
        }
    };

    int row = 0;
    for (const auto& r : eqs) {
        scatter(r.expr, row);
        sf.b(row) = r.rhs - r.expr.constant;
        ++row;
    }
    for (std::size_t k = 0; k < ineqs.size(); ++k) {
        scatter(ineqs[k].expr, row);
        sf.lp_cols[static_cast<std::size_t>(n_nonneg) + k].emplace_back(row, -1.0);
        sf.b(row) = ineqs[k].rhs - ineqs[k].expr.constant;
        ++row;
    }
    scatter(problem.objective(), -1);
    sf.offset = problem.objective().constant;

    for (auto& col : sf.lp_cols) {
        std::sort(col.begin(), col.end());
        std::vector<std::pair<int, double>> merged;
        for (const auto& e : col) {
            if (!merged.empty() && merged.back().first == e.first) {
                merged.back().second += e.second;
            } else {
                merged.push_back(e);
            }
        }
        std::erase_if(merged, [](const auto& e) { return e.second == 0.0; });
        col = std::move(merged);
        if (col.size() > 1) {
            sf.lp_single_row = false;
        }
    }
    for (std::size_t k = 0; k < sf.psd.size(); ++k) {
        auto& blk = sf.psd[k];
        for (int r = 0; r < sf.rows; ++r) {
            if (dense[k].row(r).cwiseAbs().maxCoeff() > 0.0) {
                blk.rows.push_back(r);
            }
        }
        blk.coeffs.resize(static_cast<Eigen::Index>(blk.rows.size()), dense[k].cols());
        for (std::size_t q = 0; q < blk.rows.size(); ++q) {
            blk.coeffs.row(static_cast<Eigen::Index>(q)) = dense[k].row(blk.rows[q]);
        }
    }
    return sf;
}

inline Eigen::VectorXd gather(const Eigen::VectorXd& y, const std::vector<int>& rows)
{
    Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t q = 0; q < rows.size(); ++q) {
        out(static_cast<Eigen::Index>(q)) = y(rows[q]);
    }
    return out;
}

inline void scatter_add(Eigen::VectorXd& y, const std::vector<int>& rows, const Eigen::VectorXd& v)
{
    for (std::size_t q = 0; q < rows.size(); ++q) {
        y(rows[q]) += v(static_cast<Eigen::Index>(q));
    }
}

/// H_pq = trace(E_p X E_q Z^-1) over the orthonormal svec basis E.
inline Eigen::MatrixXd hkm_operator(const Eigen::MatrixXd& x, const Eigen::MatrixXd& zi)
{
    const auto n = static_cast<int>(x.rows());
    const int s = svec_size(n);
    std::vector<std::pair<int, int>> idx;
    std::vector<double> beta;
    idx.reserve(static_cast<std::size_t>(s));
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            idx.emplace_back(i, j);
            beta.push_back(i == j ? 0.5 : 1.0 / kSqrt2);
        }
    }
    Eigen::MatrixXd h(s, s);
    for (int p = 0; p < s; ++p) {
        const auto [i, j] = idx[static_cast<std::size_t>(p)];
        for (int q = p; q < s; ++q) {
            const auto [k, l] = idx[static_cast<std::size_t>(q)];
            const double v = x(j, k) * zi(l, i) + x(j, l) * zi(k, i) + x(i, k) * zi(l, j) + x(i, l) * zi(k, j);
            h(p, q) = h(q, p) = beta[static_cast<std::size_t>(p)] * beta[static_cast<std::size_t>(q)] * v;
        }
    }
    return h;
}

/// Largest alpha with x + alpha dx still PSD (infinity when unbounded).
inline double max_psd_step(const Eigen::MatrixXd& x, const Eigen::MatrixXd& dx)
{
    const Eigen::LLT<Eigen::MatrixXd> llt(x);
    if (llt.info() != Eigen::Success) {
        return 0.0;
    }
    const auto l = llt.matrixL();
    Eigen::MatrixXd s = l.solve(dx);
    s = l.solve(s.transpose()).transpose();
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym(s), Eigen::EigenvaluesOnly);
    const double lmin = eig.eigenvalues()(0);
    return lmin >= 0.0 ? std::numeric_limits<double>::infinity() : -1.0 / lmin;
}

inline double max_lp_step(const Eigen::VectorXd& x, const Eigen::VectorXd& dx)
{
    double a = std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < x.size(); ++k) {
        if (dx(k) < 0.0) {
            a = std::min(a, -x(k) / dx(k));
        }
    }
    return a;
}

} // namespace detail

/**
 * Primal-dual interior-point method for ConicProblem with the HKM search
 * direction and Mehrotra predictor-corrector steps, started from an
 * infeasible scaled-identity point.
 *
 * The Newton system is reduced to the constraint multipliers. Two
 * factorisations are available: the dense Schur complement, and an
 * elimination through the PSD coordinates that is cheaper when many
 * constraint rows carry nonnegative variables used by a single row each (L1
 * epigraph terms). Automatic mode only picks the latter for large systems.
 */
class InteriorPointBackend final : public SolverBackend
{
public:
    enum class KktStrategy { automatic, dense_schur, low_rank };

    /// The elimination loses accuracy once the L1 residuals vanish (noiseless
    /// fits), so automatic mode keeps the dense factorisation up to this size.
    static constexpr int kDenseRowLimit = 2500;

    explicit InteriorPointBackend(SolverSettings settings = SolverSettings::from_environment(),
                                  KktStrategy strategy = KktStrategy::automatic)
        : settings_(settings), strategy_(strategy)
    {
    }

    BackendCapabilities capabilities() const override { return {true, true, true}; }
    const SolverSettings& settings() const override { return settings_; }

    /// Strategy used by the most recent solve.
    KktStrategy last_strategy() const noexcept { return used_; }

    ConicSolution solve(const ConicProblem& problem) override
    {
        sf_ = detail::build_standard_form(problem);
        choose_strategy();
        return run(problem);
    }

private:
    using VectorXd = Eigen::VectorXd;
    using MatrixXd = Eigen::MatrixXd;

    struct Iterate
    {
        std::vector<MatrixXd> x;
        std::vector<MatrixXd> z;
        VectorXd xf;
        VectorXd xl;
        VectorXd zl;
        VectorXd y;
    };

    struct Direction
    {
        std::vector<MatrixXd> dx;
        std::vector<MatrixXd> dz;
        VectorXd dxf;
        VectorXd dxl;
        VectorXd dzl;
        VectorXd dy;
    };

    int nf() const { return static_cast<int>(sf_.free_vars.size()); }
    int nl() const { return static_cast<int>(sf_.lp_vars.size()); }
    int svec_total() const
    {
        int s = 0;
        for (const auto& b : sf_.psd) {
            s += detail::svec_size(b.dim);
        }
        return s;
    }

    void choose_strategy()
    {
        const double m = sf_.rows;
        const double f = nf();
        double dense = m * m * m / 3.0 + m * m * f;
        for (const auto& b : sf_.psd) {
            const double r = static_cast<double>(b.rows.size());
            const double s = detail::svec_size(b.dim);
            dense += r * s * s + r * r * s;
        }
        int lp_rows = 0;
        std::vector<char> has_lp(static_cast<std::size_t>(sf_.rows), 0);
        for (const auto& col : sf_.lp_cols) {
            for (const auto& e : col) {
                has_lp[static_cast<std::size_t>(e.first)] = 1;
            }
        }
        for (char c : has_lp) {
            lp_rows += c;
        }
        const double ns = svec_total();
        const double me = lp_rows;
        const double nb = ns + (m - me) + f;
        const double low = ns * ns * me + ns * me * f + 2.0 * nb * nb * nb / 3.0 + ns * ns * ns;
        const bool eligible = sf_.lp_single_row && lp_rows > 0;
        if (strategy_ == KktStrategy::low_rank && eligible) {
            used_ = KktStrategy::low_rank;
        } else if (strategy_ == KktStrategy::automatic && eligible && m > kDenseRowLimit && low < dense) {
            used_ = KktStrategy::low_rank;
        } else {
            used_ = KktStrategy::dense_schur;
        }
    }

    // A(x) for the primal iterate.
    VectorXd apply_a(const std::vector<MatrixXd>& x, const VectorXd& xf, const VectorXd& xl) const
    {
        VectorXd out = sf_.free_coeffs * xf;
        for (std::size_t k = 0; k < sf_.psd.size(); ++k) {
            detail::scatter_add(out, sf_.psd[k].rows, sf_.psd[k].coeffs * detail::svec(x[k]));
        }
        for (int c = 0; c < nl(); ++c) {
            for (const auto& [r, a] : sf_.lp_cols[static_cast<std::size_t>(c)]) {
                out(r) += a * xl(c);
            }
        }
        return out;
    }

    MatrixXd adjoint_psd(std::size_t k, const VectorXd& y) const
    {
        const auto& b = sf_.psd[k];
        return detail::smat(b.coeffs.transpose() * detail::gather(y, b.rows), b.dim);
    }

    VectorXd adjoint_lp(const VectorXd& y) const
    {
        VectorXd out = VectorXd::Zero(nl());
        for (int c = 0; c < nl(); ++c) {
            for (const auto& [r, a] : sf_.lp_cols[static_cast<std::size_t>(c)]) {
                out(c) += a * y(r);
            }
        }
        return out;
    }

    // ---- Newton system ---------------------------------------------------

    void factor(const Iterate& it, const std::vector<MatrixXd>& zi)
    {
        h_.resize(sf_.psd.size());
        for (std::size_t k = 0; k < sf_.psd.size(); ++k) {
            h_[k] = detail::hkm_operator(it.x[k], zi[k]);
        }
        ratio_ = it.xl.cwiseQuotient(it.zl);
        if (used_ == KktStrategy::low_rank) {
            factor_low_rank();
        } else {
            factor_dense();
        }
    }

    void factor_dense()
    {
        const int m = sf_.rows;
        MatrixXd mm = MatrixXd::Zero(m, m);
        for (std::size_t k = 0; k < sf_.psd.size(); ++k) {
            const auto& b = sf_.psd[k];
            const MatrixXd g = b.coeffs * h_[k];
            const MatrixXd mk = g * b.coeffs.transpose();
            for (std::size_t p = 0; p < b.rows.size(); ++p) {
                for (std::size_t q = 0; q < b.rows.size(); ++q) {
                    mm(b.rows[p], b.rows[q]) += mk(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q));
                }
            }
        }
        for (int c = 0; c < nl(); ++c) {
            const auto& col = sf_.lp_cols[static_cast<std::size_t>(c)];
            for (const auto& [r1, a1] : col) {
                for (const auto& [r2, a2] : col) {
                    mm(r1, r2) += ratio_(c) * a1 * a2;
                }
            }
        }
        const double scale = std::max(1.0, mm.diagonal().cwiseAbs().maxCoeff());
        mm.diagonal().array() += 1e-15 * scale;
        ldlt_.compute(mm);
        if (nf() > 0) {
            minv_f_ = ldlt_.solve(sf_.free_coeffs);
            schur_.compute(sf_.free_coeffs.transpose() * minv_f_);
        }
    }

    void factor_low_rank()
    {
        const int m = sf_.rows;
        d_ = VectorXd::Zero(m);
        for (int c = 0; c < nl(); ++c) {
            for (const auto& [r, a] : sf_.lp_cols[static_cast<std::size_t>(c)]) {
                d_(r) += ratio_(c) * a * a;
            }
        }
        const int ns = svec_total();
        MatrixXd ball = MatrixXd::Zero(m, ns);
        hfull_ = MatrixXd::Zero(ns, ns);
        int off = 0;
        for (std::size_t k = 0; k < sf_.psd.size(); ++k) {
            const auto& b = sf_.psd[k];
            const int s = detail::svec_size(b.dim);
            for (std::size_t q = 0; q < b.rows.size(); ++q) {
                ball.block(b.rows[q], off, 1, s) = b.coeffs.row(static_cast<Eigen::Index>(q));
            }
            hfull_.block(off, off, s, s) = h_[k];
            off += s;
        }
        // Only rows where the LP diagonal dominates the PSD part are
        // eliminated. Rows whose L1 residual vanishes have a tiny diagonal
        // and stay in the bordered system, otherwise 1/d blows up.
        const VectorXd bhb = (ball * hfull_).cwiseProduct(ball).rowwise().sum();
        e_rows_.clear();
        g_rows_.clear();
        for (int r = 0; r < m; ++r) {
            (d_(r) > 0.0 && d_(r) >= bhb(r) ? e_rows_ : g_rows_).push_back(r);
        }
        const auto me = static_cast<Eigen::Index>(e_rows_.size());
        const auto mg = static_cast<Eigen::Index>(g_rows_.size());
        const Eigen::Index f = nf();
        be_.resize(me, ns);
        fe_.resize(me, f);
        dinv_e_.resize(me);
        for (Eigen::Index q = 0; q < me; ++q) {
            be_.row(q) = ball.row(e_rows_[static_cast<std::size_t>(q)]);
            fe_.row(q) = sf_.free_coeffs.row(e_rows_[static_cast<std::size_t>(q)]);
            dinv_e_(q) = 1.0 / d_(e_rows_[static_cast<std::size_t>(q)]);
        }
        bg_.resize(mg, ns);
        fg_.resize(mg, f);
        VectorXd dg(mg);
        for (Eigen::Index q = 0; q < mg; ++q) {
            bg_.row(q) = ball.row(g_rows_[static_cast<std::size_t>(q)]);
            fg_.row(q) = sf_.free_coeffs.row(g_rows_[static_cast<std::size_t>(q)]);
            dg(q) = d_(g_rows_[static_cast<std::size_t>(q)]);
        }
        const MatrixXd dbe = dinv_e_.asDiagonal() * be_;
        const MatrixXd dfe = dinv_e_.asDiagonal() * fe_;
        const MatrixXd k = be_.transpose() * dbe;
        const MatrixXd bh = be_ * hfull_;
        const Eigen::Index n = ns + mg + f;
        MatrixXd sys = MatrixXd::Zero(n, n);
        sys.block(0, 0, ns, ns) = MatrixXd::Identity(ns, ns) + k * hfull_;
        sys.block(0, ns, ns, mg) = -bg_.transpose();
        sys.block(0, ns + mg, ns, f) = be_.transpose() * dfe;
        sys.block(ns, 0, mg, ns) = bg_ * hfull_;
        sys.block(ns, ns, mg, mg).diagonal() = dg;
        sys.block(ns, ns + mg, mg, f) = fg_;
        sys.block(ns + mg, 0, f, ns) = -(dfe.transpose() * bh);
        sys.block(ns + mg, ns, f, mg) = fg_.transpose();
        sys.block(ns + mg, ns + mg, f, f) = -(fe_.transpose() * dfe);
        lu_.compute(sys);
    }

    void solve_once(const VectorXd& h, const VectorXd& g, VectorXd& dy, VectorXd& dxf) const
    {
        if (used_ == KktStrategy::low_rank) {
            const int ns = svec_total();
            const auto mg = static_cast<Eigen::Index>(g_rows_.size());
            const Eigen::Index f = nf();
            const VectorXd he = detail::gather(h, e_rows_);
            const VectorXd dhe = dinv_e_.cwiseProduct(he);
            VectorXd rhs(ns + mg + f);
            rhs.head(ns) = be_.transpose() * dhe;
            rhs.segment(ns, mg) = detail::gather(h, g_rows_);
            rhs.tail(f) = g - fe_.transpose() * dhe;
            const VectorXd sol = lu_.solve(rhs);
            const VectorXd w = sol.head(ns);
            dxf = sol.tail(f);
            const VectorXd dye = dinv_e_.cwiseProduct(he - be_ * (hfull_ * w) - fe_ * dxf);
            dy = VectorXd::Zero(sf_.rows);
            detail::scatter_add(dy, e_rows_, dye);
            detail::scatter_add(dy, g_rows_, sol.segment(ns, mg));
            return;
        }
        const VectorXd u = ldlt_.solve(h);
        if (nf() > 0) {
            dxf = schur_.solve(sf_.free_coeffs.transpose() * u - g);
            dy = u - minv_f_ * dxf;
        } else {
            dxf.resize(0);
            dy = u;
        }
    }

    // (M dy + F dxf, F' dy) with M = A H A' + LP diagonal.
    void apply_kkt(const VectorXd& dy, const VectorXd& dxf, VectorXd& r1, VectorXd& r2) const
    {
        r1 = sf_.free_coeffs * dxf;
        for (std::size_t k = 0; k < sf_.psd.size(); ++k) {
            const auto& b = sf_.psd[k];
            const VectorXd t = h_[k] * (b.coeffs.transpose() * detail::gather(dy, b.rows));
            detail::scatter_add(r1, b.rows, b.coeffs * t);
        }
        for (int c = 0; c < nl(); ++c) {
            const auto& col = sf_.lp_cols[static_cast<std::size_t>(c)];
            double s = 0.0;
            for (const auto& [r, a] : col) {
                s += a * dy(r);
            }
            for (const auto& [r, a] : col) {
                r1(r) += ratio_(c) * s * a;
            }
        }
        r2 = sf_.free_coeffs.transpose() * dy;
    }

    void solve_kkt(const VectorXd& h, const VectorXd& g, VectorXd& dy, VectorXd& dxf) const
    {
        solve_once(h, g, dy, dxf);
        for (int pass = 0; pass < 2; ++pass) {
            VectorXd r1;
            VectorXd r2;
            apply_kkt(dy, dxf, r1, r2);
            r1 = h - r1;
            r2 = g - r2;
            if (!r1.allFinite() || !r2.allFinite()) {
                return;
            }
            VectorXd cy;
            VectorXd cf;
            solve_once(r1, r2, cy, cf);
            if (!cy.allFinite() || !cf.allFinite()) {
                return;
            }
            dy += cy;
            dxf += cf;
        }
    }

    /// Newton direction for complementarity targets rc (PSD) and rcl (LP).
    Direction direction(const Iterate& it, const std::vector<MatrixXd>& zi, const VectorXd& rp,
                        const std::vector<MatrixXd>& rd, const VectorXd& rdf, const VectorXd& rdl,
                        const std::vector<MatrixXd>& rc, const VectorXd& rcl) const
    {
        VectorXd h = rp;
        for (std::size_t k = 0; k < sf_.psd.size(); ++k) {
            const MatrixXd t = detail::sym((rc[k] - it.x[k] * rd[k]) * zi[k]);
            detail::scatter_add(h, sf_.psd[k].rows, -(sf_.psd[k].coeffs * detail::svec(t)));
        }
        const VectorXd tl = (rcl - it.xl.cwiseProduct(rdl)).cwiseQuotient(it.zl);
        for (int c = 0; c < nl(); ++c) {
            for (const auto& [r, a] : sf_.lp_cols[static_cast<std::size_t>(c)]) {
                h(r) -= a * tl(c);
            }
        }
        Direction d;
        solve_kkt(h, rdf, d.dy, d.dxf);
        d.dx.resize(sf_.psd.size());
        d.dz.resize(sf_.psd.size());
        for (std::size_t k = 0; k < sf_.psd.size(); ++k) {
            d.dz[k] = rd[k] - adjoint_psd(k, d.dy);
            d.dx[k] = detail::sym((rc[k] - it.x[k] * d.dz[k]) * zi[k]);
        }
        d.dzl = rdl - adjoint_lp(d.dy);
        d.dxl = (rcl - it.xl.cwiseProduct(d.dzl)).cwiseQuotient(it.zl);
        return d;
    }

    std::pair<double, double> step_bounds(const Iterate& it, const Direction& d) const
    {
        double ap = detail::max_lp_step(it.xl, d.dxl);
        double ad = detail::max_lp_step(it.zl, d.dzl);
        for (std::size_t k = 0; k < sf_.psd.size(); ++k) {
            ap = std::min(ap, detail::max_psd_step(it.x[k], d.dx[k]));
            ad = std::min(ad, detail::max_psd_step(it.z[k], d.dz[k]));
        }
        return {ap, ad};
    }

    // ---- driver ----------------------------------------------------------

    Iterate initial_point() const
    {
        Iterate it;
        const int m = sf_.rows;
        const VectorXd babs = sf_.b.cwiseAbs();
        it.x.resize(sf_.psd.size());
        it.z.resize(sf_.psd.size());
        for (std::size_t k = 0; k < sf_.psd.size(); ++k) {
            const auto& b = sf_.psd[k];
            const double n = b.dim;
            double xi = std::max(10.0, std::sqrt(n));
            double eta = std::max({10.0, std::sqrt(n), b.cost.norm()});
            for (std::size_t q = 0; q < b.rows.size(); ++q) {
                const double an = b.coeffs.row(static_cast<Eigen::Index>(q)).norm();
                xi = std::max(xi, n * (1.0 + babs(b.rows[q])) / (1.0 + an));
                eta = std::max(eta, an);
            }
            it.x[k] = xi * MatrixXd::Identity(b.dim, b.dim);
            it.z[k] = eta * MatrixXd::Identity(b.dim, b.dim);
        }
        double xi = 10.0;
        double eta = std::max(10.0, sf_.lp_cost.size() > 0 ? sf_.lp_cost.norm() : 0.0);
        for (const auto& col : sf_.lp_cols) {
            for (const auto& [r, a] : col) {
                xi = std::max(xi, (1.0 + babs(r)) / (1.0 + std::abs(a)));
                eta = std::max(eta, std::abs(a));
            }
        }
        it.xl = VectorXd::Constant(nl(), xi);
        it.zl = VectorXd::Constant(nl(), eta);
        it.xf = VectorXd::Zero(nf());
        it.y = VectorXd::Zero(m);
        return it;
    }

    ConicSolution run(const ConicProblem& problem)
    {
        Iterate it = initial_point();
        double nu = nl();
        double cost_norm2 = sf_.free_cost.squaredNorm() + sf_.lp_cost.squaredNorm();
        for (const auto& b : sf_.psd) {
            nu += b.dim;
            cost_norm2 += b.cost.squaredNorm();
        }
        nu = std::max(nu, 1.0);
        const double bnorm = sf_.b.norm();
        const double cnorm = std::sqrt(cost_norm2);
        const double tol = settings_.tolerance;
        const double near_tol = std::max(1e-6, 100.0 * tol);

        ConicSolution best;
        double best_merit = std::numeric_limits<double>::infinity();
        Iterate best_it = it;
        SolveStatus status = SolveStatus::numerical_failure;
        int stalls = 0;
        int iter = 0;

        for (;; ++iter) {
            // residuals
            const VectorXd rp = sf_.b - apply_a(it.x, it.xf, it.xl);
            std::vector<MatrixXd> rd(sf_.psd.size());
            double dres2 = 0.0;
            double pobj = sf_.offset + sf_.free_cost.dot(it.xf) + sf_.lp_cost.dot(it.xl);
            double comp = it.xl.dot(it.zl);
            for (std::size_t k = 0; k < sf_.psd.size(); ++k) {
                rd[k] = detail::smat(sf_.psd[k].cost, sf_.psd[k].dim) - adjoint_psd(k, it.y) - it.z[k];
                dres2 += rd[k].squaredNorm();
                pobj += sf_.psd[k].cost.dot(detail::svec(it.x[k]));
                comp += (it.x[k] * it.z[k]).trace();
            }
            const VectorXd rdf = sf_.free_cost - sf_.free_coeffs.transpose() * it.y;
            const VectorXd rdl = sf_.lp_cost - adjoint_lp(it.y) - it.zl;
            dres2 += rdf.squaredNorm() + rdl.squaredNorm();
            const double dobj = sf_.offset + sf_.b.dot(it.y);
            const double pinf = rp.norm() / (1.0 + bnorm);
            const double dinf = std::sqrt(dres2) / (1.0 + cnorm);
            const double gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
            const double mu = comp / nu;

            if (!std::isfinite(pinf) || !std::isfinite(dinf) || !std::isfinite(gap)) {
                break;
            }
            const double merit = std::max({pinf, dinf, gap});
            if (std::getenv("GSFT_IPM_TRACE") != nullptr) {
                std::fprintf(stderr, "ipm %3d pobj % .10e dobj % .10e pinf %.2e dinf %.2e gap %.2e mu %.2e\n", iter,
                             pobj, dobj, pinf, dinf, gap, mu);
            }
            if (merit < best_merit) {
                best_merit = merit;
                best_it = it;
                best.objective = pobj;
                best.dual_objective = dobj;
                best.primal_infeasibility = pinf;
                best.dual_infeasibility = dinf;
                best.relative_gap = gap;
            }
            if (pinf <= tol && dinf <= tol && gap <= tol) {
                status = SolveStatus::optimal;
                break;
            }
            // divergence: a growing dual ray certifies primal infeasibility, a primal ray unboundedness
            if (it.y.norm() > 1e10 && dobj > 0.0 && pinf > near_tol) {
                status = SolveStatus::infeasible;
                break;
            }
            if (pobj < -1e10 * (1.0 + std::abs(dobj)) && dinf > near_tol) {
                status = SolveStatus::unbounded;
                break;
            }
            if (iter >= settings_.max_iterations) {
                break;
            }

            std::vector<MatrixXd> zi(sf_.psd.size());
            bool ok = true;
            for (std::size_t k = 0; k < sf_.psd.size(); ++k) {
                const Eigen::LLT<MatrixXd> llt(it.z[k]);
                if (llt.info() != Eigen::Success) {
                    ok = false;
                    break;
                }
                zi[k] = detail::sym(llt.solve(MatrixXd::Identity(it.z[k].rows(), it.z[k].cols())));
            }
            if (!ok) {
                break;
            }
            factor(it, zi);

            // predictor
            std::vector<MatrixXd> rc(sf_.psd.size());
            for (std::size_t k = 0; k < sf_.psd.size(); ++k) {
                rc[k] = -(it.x[k] * it.z[k]);
            }
            VectorXd rcl = -it.xl.cwiseProduct(it.zl);
            const Direction aff = direction(it, zi, rp, rd, rdf, rdl, rc, rcl);
            auto [ap, ad] = step_bounds(it, aff);
            ap = std::min(1.0, ap);
            ad = std::min(1.0, ad);
            double mu_aff = (it.xl + ap * aff.dxl).dot(it.zl + ad * aff.dzl);
            for (std::size_t k = 0; k < sf_.psd.size(); ++k) {
                mu_aff += ((it.x[k] + ap * aff.dx[k]) * (it.z[k] + ad * aff.dz[k])).trace();
            }
            mu_aff /= nu;
            const double ratio = mu > 0.0 ? std::max(0.0, mu_aff / mu) : 0.0;
            const double sigma = std::clamp(ratio * ratio * ratio, 0.0, 1.0);

            // corrector
            for (std::size_t k = 0; k < sf_.psd.size(); ++k) {
                rc[k] = sigma * mu * MatrixXd::Identity(it.x[k].rows(), it.x[k].cols()) - it.x[k] * it.z[k]
                        - aff.dx[k] * aff.dz[k];
            }
            rcl = VectorXd::Constant(nl(), sigma * mu) - it.xl.cwiseProduct(it.zl) - aff.dxl.cwiseProduct(aff.dzl);
            const Direction d = direction(it, zi, rp, rd, rdf, rdl, rc, rcl);
            auto [sp, sd] = step_bounds(it, d);
            const double gamma = 0.98;
            sp = std::min(1.0, gamma * sp);
            sd = std::min(1.0, gamma * sd);
            if (!(sp > 0.0) || !(sd > 0.0) || !d.dy.allFinite()) {
                break;
            }
            stalls = (sp < 1e-8 && sd < 1e-8) ? stalls + 1 : 0;
            if (stalls >= 3) {
                break;
            }
            for (std::size_t k = 0; k < sf_.psd.size(); ++k) {
                it.x[k] += sp * d.dx[k];
                it.z[k] += sd * d.dz[k];
            }
            it.xf += sp * d.dxf;
            it.xl += sp * d.dxl;
            it.y += sd * d.dy;
            it.zl += sd * d.dzl;
        }

        if (status == SolveStatus::numerical_failure && best_merit <= near_tol) {
            status = SolveStatus::near_optimal;
        }
        if (status == SolveStatus::optimal) {
            best_it = it;
        }
        ConicSolution sol = best;
        if (status == SolveStatus::optimal) {
            sol.objective = best.objective;
        }
        sol.status = status;
        sol.iterations = iter;
        sol.values.assign(static_cast<std::size_t>(problem.variable_count()), 0.0);
        for (std::size_t k = 0; k < sf_.psd.size(); ++k) {
            const auto& b = sf_.psd[k];
            int p = b.first_var;
            for (int i = 0; i < b.dim; ++i) {
                for (int j = i; j < b.dim; ++j) {
                    sol.values[static_cast<std::size_t>(p++)] = best_it.x[k](i, j);
                }
            }
        }
        for (int c = 0; c < nf(); ++c) {
            sol.values[static_cast<std::size_t>(sf_.free_vars[static_cast<std::size_t>(c)])] = best_it.xf(c);
        }
        for (int c = 0; c < nl(); ++c) {
            const int v = sf_.lp_vars[static_cast<std::size_t>(c)];
            if (v >= 0) {
                sol.values[static_cast<std::size_t>(v)] = best_it.xl(c);
            }
        }
        return sol;
    }

    SolverSettings settings_;
    KktStrategy strategy_;
    KktStrategy used_ = KktStrategy::dense_schur;
    detail::StandardForm sf_;

    // factorisation state
    std::vector<MatrixXd> h_;
    VectorXd ratio_;
    Eigen::LDLT<MatrixXd> ldlt_;
    MatrixXd minv_f_;
    Eigen::LDLT<MatrixXd> schur_;
    VectorXd d_;
    std::vector<int> e_rows_;
    std::vector<int> g_rows_;
    MatrixXd be_, bg_, fe_, fg_, hfull_;
    VectorXd dinv_e_;
    Eigen::PartialPivLU<MatrixXd> lu_;
};

} // namespace gsft

#endif // GSFT_IPM_HPP_
