#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "shapeflow/pde.hpp"

namespace shapeflow {

/// Boundary perturbation density on the square (0,pi)^2. Sides are numbered
/// 0 bottom, 1 right, 2 top, 3 left; s in [0, pi] runs along each side. The
/// study normalizes the total mass of |v| to one before use.
struct BoundaryDensity {
    std::string name;
    std::function<double(int side, double s)> weight;
};

struct SquareCandidateResult {
    std::string name;
    double integral = 0; // integral of |du1/dn|^2 v over the boundary
    double step = 0;     // optimal step eps * integral
    double value = 0;    // first-order objective after the step
};

struct SquareStudyReport {
    double epsilon = 0;
    double lambda1 = 0;
    double profile_max_rel_error = 0; // computed |du1/dn| vs the sine profile
    std::vector<SquareCandidateResult> candidates; // input order
    std::vector<std::size_t> ranking;              // best (lowest value) first
};

inline std::vector<BoundaryDensity> default_square_candidates() {
    std::vector<BoundaryDensity> out;
    out.push_back({"uniform", [](int, double) { return 1.0 / (4 * pi); }});
    out.push_back({"midpoint_bump", [](int side, double s) {
                       if (side != 0) return 0.0;
                       double x = std::abs(s - pi / 2) / 0.2;
                       return x >= 1 ? 0.0 : (1 - x) / 0.2;
                   }});
    out.push_back({"corner_bump", [](int side, double s) {
                       if (side != 0) return 0.0;
                       double x = s / 0.4;
                       return x >= 1 ? 0.0 : (1 - x) * 5.0;
                   }});
    return out;
}

/// First-order effect of growing the square by a normal field v: with the
/// principal eigenfunction u1 normalized to sup 1, the eigenvalue derivative
/// is -integral(|du1/dn|^2 v ds), the optimal step of size eps is
/// t_v = eps * integral, and the objective drops to lambda1 - (eps/2) *
/// integral^2. Candidates are ranked by that value.
inline SquareStudyReport square_perturbation_study(
    double epsilon, const std::vector<BoundaryDensity>& candidates, int cells_per_side = 64,
    const EigenOptions& eig = {}) {
    require(epsilon > 0, ErrorKind::invalid_config, "step size must be positive");
    require(!candidates.empty(), ErrorKind::invalid_config, "need at least one candidate");
    require(cells_per_side >= 16, ErrorKind::invalid_config, "square grid too coarse");

    GridDomain dom = GridDomain::aligned(2, 0.0, pi, pi / cells_per_side);
    ShapeMask square = rasterize(dom, Primitive::box({0, 0}, {pi, pi}));
    EigenResult er = principal_eigenpair(square, eig);

    ScalarGridField u = er.eigenfunctions.front();
    double sup = u.max_abs();
    require(sup > 0, ErrorKind::solver_failure, "vanishing eigenfunction");
    for (double& v : u.values) v /= sup;

    SquareStudyReport rep;
    rep.epsilon = epsilon;
    rep.lambda1 = er.eigenvalues.front();

    struct Sample {
        int side;
        double s;
        double dudn2; // |du1/dn|^2
    };
    std::vector<Sample> samples;
    for (const BoundaryFace& f : boundary_normal_derivative(u, square)) {
        Sample smp;
        if (f.dj == -1) {
            smp.side = 0;
            smp.s = f.position[0];
        } else if (f.di == 1) {
            smp.side = 1;
            smp.s = f.position[1];
        } else if (f.dj == 1) {
            smp.side = 2;
            smp.s = f.position[0];
        } else {
            smp.side = 3;
            smp.s = f.position[1];
        }
        smp.dudn2 = f.value * f.value;
        samples.push_back(smp);
        // away from the corners, the exact normal derivative is sin(s)
        if (smp.s > 0.3 && smp.s < pi - 0.3) {
            double exact = std::sin(smp.s);
            rep.profile_max_rel_error =
                std::max(rep.profile_max_rel_error, std::abs(f.value - exact) / exact);
        }
    }

    const double ds = dom.h;
    for (const BoundaryDensity& cand : candidates) {
        double mass = 0;
        for (const Sample& smp : samples) mass += std::abs(cand.weight(smp.side, smp.s)) * ds;
        require(std::abs(mass - 1.0) < 0.05, ErrorKind::invalid_config,
                "candidate '" + cand.name + "' is not normalized to unit boundary mass");
        double integral = 0;
        for (const Sample& smp : samples)
            integral += smp.dudn2 * cand.weight(smp.side, smp.s) / mass * ds;
        SquareCandidateResult r;
        r.name = cand.name;
        r.integral = integral;
        r.step = epsilon * integral;
        r.value = rep.lambda1 - 0.5 * epsilon * integral * integral;
        rep.candidates.push_back(r);
    }

    rep.ranking.resize(rep.candidates.size());
    for (std::size_t q = 0; q < rep.ranking.size(); ++q) rep.ranking[q] = q;
    std::sort(rep.ranking.begin(), rep.ranking.end(), [&](std::size_t a, std::size_t b) {
        if (rep.candidates[a].value != rep.candidates[b].value)
            return rep.candidates[a].value < rep.candidates[b].value;
        return a < b;
    });
    return rep;
}

} // namespace shapeflow
