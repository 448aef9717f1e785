#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "shapeflow/common.hpp"

namespace shapeflow {

/// First proximal step of the energy flow on the punctured disk
/// D = B(0,2), starting set = B(0,2) minus the circle of radius 1.
/// All candidate non-relaxed states are radial two-annulus sets with torsion
/// u_s; the relaxed competitor carries a surface density on the unit circle
/// and torsion w~ = u_0 + eps*f. Everything reduces to 1D radial integrals,
/// evaluated here far below 2D grid accuracy.
struct AnnulusCaseReport {
    double epsilon = 0;
    int quadrature_n = 0;
    std::vector<double> s_grid;
    std::vector<double> lhs;        // I(s) - Q(s)/(2 eps)
    std::vector<double> first_term; // I(s) = integral (u_s - u_0) r dr
    double rhs = 0;                 // eps * integral (f - f^2/2) r dr
    double f_integral = 0;          // integral (f - f^2/2) r dr
    double j_eps_relaxed = 0;       // J_eps(w~)
    double min_j_eps_s = 0;         // min over s of J_eps(w_s)
    double argmin_s = 0;
    // certified flags
    bool lhs_bounded = false;          // LHS <= 1e-8 at every grid s
    bool zeros_only_near_one = false;  // |LHS| <= 1e-8 only within |s-1| <= 1e-2
    bool f_integral_large = false;     // >= 0.25
    bool relaxation_at_first_step = false; // J_eps(w~) < min_s J_eps(w_s)
};

namespace detail {

// torsion of B(0,s) u A(s,2) inside B(0,2), radial closed form
inline double annulus_u(double s, double r) {
    if (r <= s) return (s * s - r * r) / 4.0;
    if (r >= 2.0) return 0.0;
    return 0.25 * (4.0 - r * r + (s * s - 4.0) * std::log(r / 2.0) / std::log(s / 2.0));
}

inline double relax_f(double r) {
    if (r <= 1.0) return 1.0;
    if (r >= 2.0) return 0.0;
    return std::log(r / 2.0) / std::log(0.5);
}

// composite trapezoid of g(r)*r over [a,b]
inline double trapz_radial(const std::function<double(double)>& g, double a, double b, int n) {
    if (b <= a) return 0.0;
    double h = (b - a) / n;
    double acc = 0.5 * (g(a) * a + g(b) * b);
    for (int i = 1; i < n; ++i) {
        double r = a + i * h;
        acc += g(r) * r;
    }
    return acc * h;
}

// split [0,2] at interior kinks so each panel is smooth
inline double integrate_radial(const std::function<double(double)>& g,
                               std::vector<double> kinks, int total_n) {
    kinks.push_back(0.0);
    kinks.push_back(2.0);
    std::sort(kinks.begin(), kinks.end());
    kinks.erase(std::unique(kinks.begin(), kinks.end()), kinks.end());
    double acc = 0;
    for (std::size_t q = 0; q + 1 < kinks.size(); ++q) {
        double a = kinks[q], b = kinks[q + 1];
        if (b - a <= 1e-14) continue;
        int n = std::max(16, static_cast<int>(std::lround(total_n * (b - a) / 2.0)));
        acc += trapz_radial(g, a, b, n);
    }
    return acc;
}

} // namespace detail

inline AnnulusCaseReport annulus_case_study(double epsilon, int quadrature_n = 10000,
                                            int s_points = 200) {
    require(epsilon > 0, ErrorKind::invalid_config, "step size must be positive");
    require(quadrature_n >= 1000, ErrorKind::invalid_config, "quadrature too coarse");
    require(s_points >= 10, ErrorKind::invalid_config, "need a reasonable s grid");
    using detail::annulus_u;
    using detail::integrate_radial;
    using detail::relax_f;

    AnnulusCaseReport rep;
    rep.epsilon = epsilon;
    rep.quadrature_n = quadrature_n;

    auto u0 = [](double r) { return annulus_u(1.0, r); };
    double U0 = integrate_radial(u0, {1.0}, quadrature_n);
    double F1 = integrate_radial(relax_f, {1.0}, quadrature_n);
    double F2 = integrate_radial([](double r) { double f = relax_f(r); return f * f; }, {1.0},
                                 quadrature_n);
    rep.f_integral = F1 - 0.5 * F2;
    rep.rhs = epsilon * rep.f_integral;
    rep.f_integral_large = rep.f_integral >= 0.25;
    rep.j_eps_relaxed = 2 * pi * (-U0 - epsilon * F1 + 0.5 * epsilon * F2);

    auto j_eps_s = [&](double s) {
        auto us = [&](double r) { return annulus_u(s, r); };
        double Us = integrate_radial(us, {s, 1.0}, quadrature_n);
        double Q = integrate_radial(
            [&](double r) {
                double d = annulus_u(s, r) - annulus_u(1.0, r);
                return d * d;
            },
            {s, 1.0}, quadrature_n);
        return 2 * pi * (-Us + Q / (2 * epsilon));
    };

    rep.lhs_bounded = true;
    rep.zeros_only_near_one = true;
    rep.min_j_eps_s = inf;
    for (int q = 1; q <= s_points; ++q) {
        double s = 2.0 * q / (s_points + 1);
        auto diff = [&](double r) { return annulus_u(s, r) - annulus_u(1.0, r); };
        double I = integrate_radial(diff, {s, 1.0}, quadrature_n);
        double Q = integrate_radial([&](double r) { double d = diff(r); return d * d; },
                                    {s, 1.0}, quadrature_n);
        double lhs = I - Q / (2 * epsilon);
        rep.s_grid.push_back(s);
        rep.first_term.push_back(I);
        rep.lhs.push_back(lhs);
        if (lhs > 1e-8) rep.lhs_bounded = false;
        if (std::abs(lhs) <= 1e-8 && std::abs(s - 1.0) > 1e-2) rep.zeros_only_near_one = false;

        double j = j_eps_s(s);
        if (j < rep.min_j_eps_s) {
            rep.min_j_eps_s = j;
            rep.argmin_s = s;
        }
    }

    // refine min_s J_eps(w_s) around the best grid point by golden section
    {
        double span = 2.0 / (s_points + 1);
        double a = std::max(1e-6, rep.argmin_s - span);
        double b = std::min(2.0 - 1e-9, rep.argmin_s + span);
        const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
        double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
        double f1 = j_eps_s(x1), f2 = j_eps_s(x2);
        for (int it = 0; it < 60; ++it) {
            if (f1 < f2) {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - gr * (b - a);
                f1 = j_eps_s(x1);
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + gr * (b - a);
                f2 = j_eps_s(x2);
            }
        }
        double s_star = 0.5 * (a + b);
        double j_star = j_eps_s(s_star);
        if (j_star < rep.min_j_eps_s) {
            rep.min_j_eps_s = j_star;
            rep.argmin_s = s_star;
        }
    }

    rep.relaxation_at_first_step = rep.j_eps_relaxed < rep.min_j_eps_s;
    return rep;
}

} // namespace shapeflow
