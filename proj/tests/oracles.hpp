#pragma once

// Independent reference computations the tests compare the library against.
// Everything here deliberately avoids the library's own solver paths: dense
// linear algebra through Eigen, quadratic-exact stencils, separable discrete
// eigenvalue formulas, series evaluation, and brute-force scans.

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "shapeflow/shapeflow.hpp"

namespace oracles {

using shapeflow::GridDomain;
using shapeflow::ShapeMask;

/// Indices of interior (non-ring) cells when a mask covers the whole box, or
/// of inside cells otherwise, plus the inverse map.
struct CellIndex {
    std::vector<std::size_t> cells;       // grid index per reduced row
    std::vector<int> row;                 // grid index -> reduced row, -1 outside
};

inline CellIndex index_inside(const ShapeMask& m) {
    CellIndex ci;
    ci.row.assign(m.inside.size(), -1);
    for (std::size_t k = 0; k < m.inside.size(); ++k)
        if (m.inside[k]) {
            ci.row[k] = static_cast<int>(ci.cells.size());
            ci.cells.push_back(k);
        }
    return ci;
}

/// Dense five-point operator -Lap + diag(potential) over the inside cells of
/// a mask; outside cells are eliminated as zeros.
inline Eigen::MatrixXd dense_operator(const ShapeMask& m, const std::vector<double>& potential,
                                      const CellIndex& ci) {
    const GridDomain& d = m.domain;
    const double ih2 = 1.0 / (d.h * d.h);
    const int n = static_cast<int>(ci.cells.size());
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
    for (int r = 0; r < n; ++r) {
        std::size_t k = ci.cells[r];
        int i = static_cast<int>(k % d.cells[0]);
        int j = static_cast<int>(k / d.cells[0]);
        A(r, r) = 2.0 * d.dim * ih2 + (potential.empty() ? 0.0 : potential[k]);
        const int di[4] = {1, -1, 0, 0};
        const int dj[4] = {0, 0, 1, -1};
        for (int q = 0; q < 2 * d.dim; ++q) {
            int r2 = ci.row[d.index(i + di[q], j + dj[q])];
            if (r2 >= 0) A(r, r2) = -ih2;
        }
    }
    return A;
}

/// Exact solve of (-Lap + diag(potential)) u = rhs by dense LU. Small grids only.
inline shapeflow::ScalarGridField dense_solve(const ShapeMask& m,
                                              const std::vector<double>& potential,
                                              double rhs_value = 1.0) {
    CellIndex ci = index_inside(m);
    Eigen::MatrixXd A = dense_operator(m, potential, ci);
    Eigen::VectorXd b = Eigen::VectorXd::Constant(A.rows(), rhs_value);
    Eigen::VectorXd x = A.partialPivLu().solve(b);
    shapeflow::ScalarGridField u = shapeflow::ScalarGridField::zero(m.domain);
    for (int r = 0; r < x.size(); ++r) u.values[ci.cells[r]] = x(r);
    return u;
}

/// First k eigenvalues of the dense operator, ascending.
inline std::vector<double> dense_eigenvalues(const ShapeMask& m,
                                             const std::vector<double>& potential, int k) {
    CellIndex ci = index_inside(m);
    Eigen::MatrixXd A = dense_operator(m, potential, ci);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
    std::vector<double> out;
    for (int q = 0; q < k && q < es.eigenvalues().size(); ++q)
        out.push_back(es.eigenvalues()(q));
    return out;
}

/// Exact first eigenvalue of the five-point Laplacian on an axis-aligned box
/// mask: separable sine modes give lambda = sum over axes of
/// (4/h^2) sin^2(pi h / (2 L_axis)) with L_axis = (n_axis + 1) h.
inline double box_eigenvalue_formula(const ShapeMask& m) {
    const GridDomain& d = m.domain;
    int lo[2] = {1 << 30, 1 << 30}, hi[2] = {-1, -1};
    for (int j = 0; j < d.cells[1]; ++j)
        for (int i = 0; i < d.cells[0]; ++i)
            if (m.at(i, j)) {
                lo[0] = std::min(lo[0], i);
                hi[0] = std::max(hi[0], i);
                lo[1] = std::min(lo[1], j);
                hi[1] = std::max(hi[1], j);
            }
    double lambda = 0;
    for (int a = 0; a < d.dim; ++a) {
        int n = hi[a] - lo[a] + 1;
        double L = (n + 1) * d.h;
        double s = std::sin(shapeflow::pi * d.h / (2 * L));
        lambda += 4.0 / (d.h * d.h) * s * s;
    }
    return lambda;
}

/// Torsion of the continuum interval (0,1): w(x) = x(1-x)/2. The three-point
/// stencil is exact on quadratics, so the discrete solution matches this at
/// cell centers to rounding when the grid is aligned to {0,1}.
inline double interval_torsion(double x) { return 0.5 * x * (1.0 - x); }

/// Truncated sine series for the torsion of the unit square (0,1)^2.
inline double square_torsion_series(double x, double y, int terms = 399) {
    double s = 0;
    for (int mm = 1; mm <= terms; mm += 2)
        for (int nn = 1; nn <= terms; nn += 2) {
            double lam = shapeflow::pi * shapeflow::pi * (mm * mm + nn * nn);
            s += 16.0 / (shapeflow::pi * shapeflow::pi * mm * nn * lam) *
                 std::sin(mm * shapeflow::pi * x) * std::sin(nn * shapeflow::pi * y);
        }
    return s;
}

/// First zero of the Bessel function J0, by bisection on the standard library
/// evaluation; lambda_1 of the unit disk is its square.
inline double bessel_j0_first_zero() {
    double a = 2.0, b = 3.0;
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (a + b);
        if (std::cyl_bessel_j(0.0, a) * std::cyl_bessel_j(0.0, mid) <= 0)
            b = mid;
        else
            a = mid;
    }
    return 0.5 * (a + b);
}

/// Exact squared Euclidean distance transform by exhaustive pairing.
/// Quadratic cost; small masks only.
inline shapeflow::ScalarGridField brute_distance(const ShapeMask& m,
                                                 shapeflow::DistanceTarget target) {
    const GridDomain& d = m.domain;
    shapeflow::ScalarGridField out = shapeflow::ScalarGridField::zero(d);
    for (int j = 0; j < d.cells[1]; ++j)
        for (int i = 0; i < d.cells[0]; ++i) {
            bool from = target == shapeflow::DistanceTarget::to_set ? !m.at(i, j) : m.at(i, j);
            if (!from) continue;
            double best = shapeflow::inf;
            for (int jj = 0; jj < d.cells[1]; ++jj)
                for (int ii = 0; ii < d.cells[0]; ++ii) {
                    bool hit = target == shapeflow::DistanceTarget::to_set ? m.at(ii, jj)
                                                                           : !m.at(ii, jj);
                    if (!hit) continue;
                    double dx = (ii - i) * d.h, dy = (jj - j) * d.h;
                    best = std::min(best, std::sqrt(dx * dx + dy * dy));
                }
            out.at(i, j) = best;
        }
    return out;
}

/// Projection onto {w >= 0} intersect {(-Lap w)_k <= 1 on interior} by
/// Dykstra's algorithm of cyclic projections, one correction per constraint.
/// Linearly convergent but entirely independent of the active-set path.
inline std::vector<double> dykstra_project(const ShapeMask& m, const std::vector<double>& v,
                                           int max_sweeps = 400000, double tol = 1e-11) {
    const GridDomain& d = m.domain;
    CellIndex ci = index_inside(m);
    const int n = static_cast<int>(ci.cells.size());
    const double ih2 = 1.0 / (d.h * d.h);
    const double diag = 2.0 * d.dim * ih2;

    // rows of -Lap over reduced indices
    std::vector<std::vector<std::pair<int, double>>> rows(n);
    for (int r = 0; r < n; ++r) {
        std::size_t k = ci.cells[r];
        int i = static_cast<int>(k % d.cells[0]);
        int j = static_cast<int>(k / d.cells[0]);
        rows[r].push_back({r, diag});
        const int di[4] = {1, -1, 0, 0};
        const int dj[4] = {0, 0, 1, -1};
        for (int q = 0; q < 2 * d.dim; ++q) {
            int r2 = ci.row[d.index(i + di[q], j + dj[q])];
            if (r2 >= 0) rows[r].push_back({r2, -ih2});
        }
    }

    std::vector<double> w(n), p_pos(n, 0.0);
    for (int r = 0; r < n; ++r) w[r] = v[ci.cells[r]];
    std::vector<double> p_half(n, 0.0); // scalar multiplier per half-space

    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double change = 0;

        // positivity set, with its Dykstra correction
        for (int r = 0; r < n; ++r) {
            double y = w[r] + p_pos[r];
            double proj = std::max(y, 0.0);
            p_pos[r] = y - proj;
            change += std::abs(proj - w[r]);
            w[r] = proj;
        }

        // one half-space per interior cell: row . w <= 1
        for (int r = 0; r < n; ++r) {
            double norm2 = 0, dot = 0;
            for (auto [c, a] : rows[r]) {
                w[c] += p_half[r] * a; // add back this set's correction
                norm2 += a * a;
            }
            for (auto [c, a] : rows[r]) dot += a * w[c];
            double t = std::max(0.0, (dot - 1.0) / norm2);
            p_half[r] = t;
            for (auto [c, a] : rows[r]) {
                w[c] -= t * a;
                change += std::abs(t * a);
            }
        }
        if (change < tol) break;
    }

    std::vector<double> full(m.inside.size(), 0.0);
    for (int r = 0; r < n; ++r) full[ci.cells[r]] = w[r];
    return full;
}

/// Plain trapezoid rule on a uniform grid, for cross-checking quadratures.
inline double trapezoid(const std::function<double(double)>& g, double a, double b, int n) {
    double s = 0.5 * (g(a) + g(b));
    for (int k = 1; k < n; ++k) s += g(a + (b - a) * k / n);
    return s * (b - a) / n;
}

inline std::mt19937& rng() {
    static std::mt19937 gen(987654321u);
    return gen;
}

} // namespace oracles
