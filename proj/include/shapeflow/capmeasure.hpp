#pragma once

#include <cmath>
#include <vector>

#include "shapeflow/pde.hpp"

namespace shapeflow {

/// Below w_floor = scale * max(w) a cell is declared mu = +infinity; the
/// quotient (1 + Delta_h w)/w is unstable as w -> 0 and the limit object is
/// the infinite measure anyway.
constexpr double default_w_floor_scale = 1e-9;

/// Inverse of the torsion map: mu_w = (1 + Delta_h w)/w where w is positive,
/// +infinity where it (numerically) vanishes. Exact inverse of `torsion` up
/// to solver tolerance: (-Delta_h + mu_w) w = 1 holds cell-wise by
/// construction wherever w > w_floor.
inline CapacitaryMeasure measure_of_torsion(const TorsionField& w, double w_floor = -1.0,
                                            double eps_x = default_eps_x) {
    check_torsion_invariants(w, eps_x);
    if (w_floor < 0) w_floor = default_w_floor_scale * w.max();
    ScalarGridField lw = apply_neg_laplacian(w.as_field());
    CapacitaryMeasure mu = CapacitaryMeasure::zero(w.domain);
    for (int j = 0; j < w.domain.cells[1]; ++j)
        for (int i = 0; i < w.domain.cells[0]; ++i) {
            std::size_t k = w.domain.index(i, j);
            if (w.domain.on_ring(i, j)) continue; // stays +infinity
            if (w.values[k] <= w_floor) {
                mu.infinite[k] = 1;
                mu.density[k] = 0;
            } else {
                // 1 + Delta_h w >= -eps_x was just checked; clamp the
                // tolerance band so the density stays nonnegative
                mu.density[k] = std::max(0.0, (1.0 - lw.values[k]) / w.values[k]);
            }
        }
    return mu;
}

/// Distance between measures: L2(D) norm of the difference of their torsion
/// functions. Symmetric and zero exactly when the torsions coincide.
inline double gamma_distance(const CapacitaryMeasure& a, const CapacitaryMeasure& b,
                             double tol = 1e-10) {
    require_same_domain(a.domain, b.domain);
    return l2_distance(torsion(a, tol), torsion(b, tol));
}

inline double gamma_distance(const ShapeMask& a, const ShapeMask& b, double tol = 1e-10) {
    return gamma_distance(CapacitaryMeasure::from_mask(a), CapacitaryMeasure::from_mask(b), tol);
}

inline double gamma_distance(const ShapeMask& a, const CapacitaryMeasure& b, double tol = 1e-10) {
    return gamma_distance(CapacitaryMeasure::from_mask(a), b, tol);
}

inline double gamma_distance(const CapacitaryMeasure& a, const ShapeMask& b, double tol = 1e-10) {
    return gamma_distance(a, CapacitaryMeasure::from_mask(b), tol);
}

/// Geodesics are linear in the torsion variable: interpolate w, map back.
inline CapacitaryMeasure geodesic_interpolate(const CapacitaryMeasure& mu0,
                                              const CapacitaryMeasure& mu1, double t,
                                              double tol = 1e-10) {
    require(t >= 0 && t <= 1, ErrorKind::invalid_config, "interpolation parameter not in [0,1]");
    require_same_domain(mu0.domain, mu1.domain);
    TorsionField w0 = torsion(mu0, tol);
    TorsionField w1 = torsion(mu1, tol);
    TorsionField w = TorsionField::zero(mu0.domain);
    for (std::size_t k = 0; k < w.values.size(); ++k)
        w.values[k] = (1 - t) * w0.values[k] + t * w1.values[k];
    return measure_of_torsion(w);
}

/// Convex combinations of torsions, exposed for flows and probes.
inline TorsionField interpolate_torsion(const TorsionField& w0, const TorsionField& w1,
                                        double t) {
    require_same_domain(w0.domain, w1.domain);
    TorsionField w = TorsionField::zero(w0.domain);
    for (std::size_t k = 0; k < w.values.size(); ++k)
        w.values[k] = (1 - t) * w0.values[k] + t * w1.values[k];
    return w;
}

// ---------------------------------------------------------------------------
// torsion ordering versus measure ordering

/// Compares the torsion of mu_inner = infinity outside B(0,1) against
/// mu_shell = 1 on B(0,1) plus infinity outside B(0,R). The measures are
/// never cell-wise comparable, yet for R large enough the shell torsion
/// dominates everywhere; for R slightly above 1 it does not.
struct OrderingReport {
    TorsionField w_inner;
    TorsionField w_shell;
    double min_gap = 0;       // min over cells of w_shell - w_inner
    bool torsion_ordered = false;
    bool measures_comparable = false;
    double radius = 0;
};

inline OrderingReport remark_case_ordering(const GridDomain& d, double R, double tol = 1e-8) {
    require(R > 1, ErrorKind::invalid_config, "outer radius must exceed 1");
    ShapeMask unit = rasterize(d, Primitive::ball({0, 0}, 1.0));
    ShapeMask outer = rasterize(d, Primitive::ball({0, 0}, R)); // fits-check = range check
    CapacitaryMeasure mu_inner = CapacitaryMeasure::from_mask(unit);
    CapacitaryMeasure mu_shell = CapacitaryMeasure::from_mask(outer);
    for (std::size_t k = 0; k < mu_shell.density.size(); ++k)
        if (!mu_shell.infinite[k] && unit.inside[k]) mu_shell.density[k] = 1.0;

    OrderingReport rep;
    rep.radius = R;
    rep.w_inner = torsion(mu_inner);
    rep.w_shell = torsion(mu_shell);
    rep.min_gap = inf;
    for (std::size_t k = 0; k < rep.w_inner.values.size(); ++k)
        rep.min_gap = std::min(rep.min_gap, rep.w_shell.values[k] - rep.w_inner.values[k]);
    rep.torsion_ordered = rep.min_gap >= -tol;
    rep.measures_comparable =
        CapacitaryMeasure::leq(mu_inner, mu_shell) || CapacitaryMeasure::leq(mu_shell, mu_inner);
    return rep;
}

} // namespace shapeflow
