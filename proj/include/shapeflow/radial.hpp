#pragma once

#include <cmath>
#include <vector>

#include "shapeflow/common.hpp"

namespace shapeflow {

/// Radially symmetric reference solutions on disks and annuli, used as
/// high-accuracy oracles for the 2D grid solvers and for ball evolutions.
struct RadialResult {
    double lambda1 = 0;
    std::vector<double> r;       // sample radii
    std::vector<double> torsion; // torsion profile at r
};

namespace detail {

// Symmetric tridiagonal solve (Thomas with the symmetric off-diagonal).
inline std::vector<double> tridiag_solve(const std::vector<double>& diag,
                                         const std::vector<double>& off,
                                         std::vector<double> rhs) {
    const std::size_t n = diag.size();
    std::vector<double> c(n, 0.0);
    double piv = diag[0];
    require(piv > 0, ErrorKind::solver_failure, "tridiagonal pivot breakdown");
    c[0] = n > 1 ? off[0] / piv : 0.0;
    rhs[0] /= piv;
    for (std::size_t i = 1; i < n; ++i) {
        piv = diag[i] - off[i - 1] * c[i - 1];
        require(piv > 0, ErrorKind::solver_failure, "tridiagonal pivot breakdown");
        if (i + 1 < n) c[i] = off[i] / piv;
        rhs[i] = (rhs[i] - off[i - 1] * rhs[i - 1]) / piv;
    }
    for (std::size_t i = n - 1; i-- > 0;) rhs[i] -= c[i] * rhs[i + 1];
    return rhs;
}

// Smallest eigenvalue of A u = lambda D u (A symmetric tridiagonal positive
// definite, D positive diagonal) by inverse power iteration.
inline double generalized_smallest_eigenvalue(const std::vector<double>& diag,
                                              const std::vector<double>& off,
                                              const std::vector<double>& weight) {
    const std::size_t n = diag.size();
    std::vector<double> u(n, 1.0), rhs(n);
    double lambda = 0, prev = inf;
    for (int it = 0; it < 10000; ++it) {
        for (std::size_t i = 0; i < n; ++i) rhs[i] = weight[i] * u[i];
        std::vector<double> y = tridiag_solve(diag, off, rhs);
        double norm2 = 0;
        for (std::size_t i = 0; i < n; ++i) norm2 += weight[i] * y[i] * y[i];
        double norm = std::sqrt(norm2);
        for (std::size_t i = 0; i < n; ++i) u[i] = y[i] / norm;
        // Rayleigh quotient <Au,u> with <Du,u> = 1 (off holds true entries)
        double num = 0;
        for (std::size_t i = 0; i < n; ++i) {
            double au = diag[i] * u[i];
            if (i > 0) au += off[i - 1] * u[i - 1];
            if (i + 1 < n) au += off[i] * u[i + 1];
            num += au * u[i];
        }
        lambda = num;
        if (std::abs(lambda - prev) <= 1e-13 * lambda) return lambda;
        prev = lambda;
    }
    fail(ErrorKind::solver_failure, "radial eigen iteration did not converge");
}

} // namespace detail

/// Disk of radius R: staggered cells r_j = (j+1/2) d with d = R/(n+1/2), so
/// the Dirichlet zero falls exactly on r = R and the r = 0 symmetry condition
/// is the natural zero flux through r = 0. Flux-form operator rows are scaled
/// by r_j, giving a symmetric system with weight r_j.
inline RadialResult radial_disk(double R, int n) {
    require(R > 0 && n >= 100, ErrorKind::invalid_config, "radial_disk needs R > 0, n >= 100");
    double d = R / (n + 0.5);
    std::vector<double> diag(n), off(n > 1 ? n - 1 : 0), weight(n), r(n);
    for (int j = 0; j < n; ++j) {
        r[j] = (j + 0.5) * d;
        double rm = j * d;        // r_{j-1/2}, zero at the axis
        double rp = (j + 1) * d;  // r_{j+1/2}
        diag[j] = (rm + rp) / (d * d);
        if (j + 1 < n) off[j] = -rp / (d * d);
        weight[j] = r[j];
    }
    RadialResult out;
    out.lambda1 = detail::generalized_smallest_eigenvalue(diag, off, weight);
    std::vector<double> rhs = weight; // f = 1 weighted by r_j
    out.torsion = detail::tridiag_solve(diag, off, std::move(rhs));
    out.r = std::move(r);
    return out;
}

/// Interval (-R, R), one dimension: the even ground state reduces to (0, R)
/// with zero flux at 0, same staggered layout as the disk with unit weights.
/// lambda1 converges to (pi/(2R))^2.
inline RadialResult radial_interval(double R, int n) {
    require(R > 0 && n >= 100, ErrorKind::invalid_config,
            "radial_interval needs R > 0, n >= 100");
    double d = R / (n + 0.5);
    std::vector<double> diag(n, 2.0 / (d * d)), off(n > 1 ? n - 1 : 0, -1.0 / (d * d));
    std::vector<double> weight(n, 1.0), r(n);
    diag[0] = 1.0 / (d * d); // no flux through the symmetry point
    for (int j = 0; j < n; ++j) r[j] = (j + 0.5) * d;
    RadialResult out;
    out.lambda1 = detail::generalized_smallest_eigenvalue(diag, off, weight);
    std::vector<double> rhs(n, 1.0);
    out.torsion = detail::tridiag_solve(diag, off, std::move(rhs));
    out.r = std::move(r);
    return out;
}

/// Annulus r1 < r < r2: node-centered grid with Dirichlet zeros exactly at
/// both radii.
inline RadialResult radial_annulus(double r1, double r2, int n) {
    require(0 < r1 && r1 < r2 && n >= 100, ErrorKind::invalid_config,
            "radial_annulus needs 0 < r1 < r2, n >= 100");
    double d = (r2 - r1) / (n + 1);
    std::vector<double> diag(n), off(n > 1 ? n - 1 : 0), weight(n), r(n);
    for (int j = 0; j < n; ++j) {
        r[j] = r1 + (j + 1) * d;
        double rm = r[j] - 0.5 * d;
        double rp = r[j] + 0.5 * d;
        diag[j] = (rm + rp) / (d * d);
        if (j + 1 < n) off[j] = -rp / (d * d);
        weight[j] = r[j];
    }
    RadialResult out;
    out.lambda1 = detail::generalized_smallest_eigenvalue(diag, off, weight);
    std::vector<double> rhs = weight;
    out.torsion = detail::tridiag_solve(diag, off, std::move(rhs));
    out.r = std::move(r);
    return out;
}

} // namespace shapeflow
