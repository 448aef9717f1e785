#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "shapeflow/functional.hpp"
#include "shapeflow/project_x.hpp"

namespace shapeflow {

struct MeasureFlowConfig {
    double epsilon = 1e-2;       // implicit Euler time step
    double horizon = 0.5;        // total time T; steps = floor(T/epsilon)
    FunctionalSpec functional;
    double projection_tol = 1e-10;
    EigenOptions eigen;          // spectral kinds only
    int descent_max_iterations = 200;
    double descent_tol_scale = 1e-7; // residual <= scale * (1 + |w_n|)

    void validate() const {
        require(epsilon > 0, ErrorKind::invalid_config, "time step must be positive");
        require(horizon >= epsilon, ErrorKind::invalid_config, "horizon shorter than one step");
        functional.validate();
        require(!functional.set_flow_only(), ErrorKind::invalid_config,
                "functional '" + functional.kind_name() + "' drives set flows only");
    }
};

struct FlowTrajectory {
    double epsilon = 0;
    std::vector<double> times;            // t_n = n * epsilon, from 0
    std::vector<TorsionField> states;     // same length as times
    std::vector<double> values;           // J(u_n)
    std::vector<double> step_distances;   // d(u_n, u_{n+1}), length steps
    std::vector<double> energy_residuals; // J(u_{n+1}) + d^2/2eps - J(u_n)
    bool completed = true;
    std::string failure;                  // set when a step threw

    std::size_t steps() const { return step_distances.size(); }
};

namespace detail {

struct ProxEnv {
    ProjectorX& projector;
    double projection_tol;
    const EigenOptions& eigen;
    int max_iterations;
    double tol_scale;
};

inline TorsionField shifted_projection(const TorsionField& w_n, double shift, ProxEnv& env) {
    ScalarGridField v = w_n.as_field();
    for (auto& x : v.values) x += shift;
    // the ring must not be shifted; the projector pins it anyway, but keep
    // the input honest
    const GridDomain& d = w_n.domain;
    for (int j = 0; j < d.cells[1]; ++j)
        for (int i = 0; i < d.cells[0]; ++i)
            if (d.on_ring(i, j)) v.at(i, j) = 0;
    return env.projector.project(v, env.projection_tol).w;
}

inline TorsionField scaled_projection(const TorsionField& w_n, double scale, ProxEnv& env) {
    ScalarGridField v = w_n.as_field();
    for (auto& x : v.values) x *= scale;
    return env.projector.project(v, env.projection_tol).w;
}

} // namespace detail

/// One implicit Euler (proximal) step: minimize J(w) + |w - w_n|^2 / 2eps
/// over the torsion constraint set. Linear and quadratic kinds reduce to a
/// single projection; spectral kinds run a projected descent and keep the
/// best visited point, so the step objective never exceeds the stay-put
/// value and the discrete energy inequality holds by construction.
inline TorsionField prox_step(const FunctionalSpec& spec, const TorsionField& w_n, double epsilon,
                              ProjectorX& projector, double projection_tol = 1e-10,
                              const EigenOptions& eigen = {}, int max_iterations = 200,
                              double tol_scale = 1e-7);

/// Generic projected-descent path for the same minimization; used to
/// cross-check the closed-form reductions. Accelerated with backtracking;
/// for convex kinds it converges to the unique prox point.
inline TorsionField prox_step_descent(const FunctionalSpec& spec, const TorsionField& w_n,
                                      double epsilon, ProjectorX& projector,
                                      double projection_tol = 1e-10,
                                      const EigenOptions& eigen = {}, int max_iterations = 200,
                                      double tol_scale = 1e-7) {
    spec.validate();
    const double inv_eps = 1.0 / epsilon;
    auto objective = [&](const TorsionField& w) {
        double d = l2_distance(w, w_n);
        return evaluate_measure_functional(spec, w, eigen) + 0.5 * d * d * inv_eps;
    };
    auto gradient = [&](const TorsionField& w) {
        ScalarGridField g = measure_functional_gradient(spec, w, eigen);
        for (std::size_t k = 0; k < g.values.size(); ++k)
            g.values[k] += (w.values[k] - w_n.values[k]) * inv_eps;
        return g;
    };

    double wn_norm = w_n.as_field().l2_norm();
    double target = tol_scale * (1.0 + wn_norm);

    TorsionField best = w_n;
    double best_val = objective(w_n);

    TorsionField w = w_n;
    double obj_w = best_val;
    TorsionField y = w_n; // extrapolated point
    double t_acc = 1.0;
    double step = epsilon; // natural scale: exact for the linear case

    for (int it = 0; it < max_iterations; ++it) {
        ScalarGridField g = gradient(y);
        double obj_y = objective(y);

        TorsionField w_new;
        double obj_new = 0;
        for (;;) {
            ScalarGridField v = y.as_field();
            for (std::size_t k = 0; k < v.values.size(); ++k) v.values[k] -= step * g.values[k];
            w_new = projector.project(v, projection_tol).w;
            obj_new = objective(w_new);
            // sufficient decrease against the quadratic model at y
            double lin = 0, sq = 0;
            for (std::size_t k = 0; k < v.values.size(); ++k) {
                double dwk = w_new.values[k] - y.values[k];
                lin += g.values[k] * dwk;
                sq += dwk * dwk;
            }
            lin *= w_n.domain.cell_measure();
            sq *= w_n.domain.cell_measure();
            if (obj_new <= obj_y + lin + 0.5 * sq / step + 1e-14 * (1 + std::abs(obj_y)))
                break;
            step *= 0.5;
            require(step > 1e-16 * epsilon, ErrorKind::solver_failure,
                    "prox descent backtracking underflow");
        }

        double moved = l2_distance(w_new, y);
        if (obj_new < best_val) {
            best = w_new;
            best_val = obj_new;
        }

        // FISTA momentum with restart when the objective fails to improve
        double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_acc * t_acc));
        TorsionField y_next = TorsionField::zero(w.domain);
        double beta = (t_acc - 1.0) / t_next;
        for (std::size_t k = 0; k < y_next.values.size(); ++k)
            y_next.values[k] =
                w_new.values[k] + beta * (w_new.values[k] - w.values[k]);
        if (obj_new > obj_w + 1e-14) {
            y_next = w_new; // restart
            t_next = 1.0;
        } else if (beta > 0) {
            // the extrapolation can leave the constraint set, where spectral
            // objectives are undefined; pull it back so every evaluation
            // point stays admissible
            y_next = projector.project(y_next.as_field(), projection_tol).w;
        }
        w = w_new;
        obj_w = obj_new;
        y = y_next;
        t_acc = t_next;

        if (moved / step <= target) break;
    }

    if (spec.kind == FunctionalKind::spectral) return best;
    // convex kinds: the last iterate is the converged prox point; keep the
    // better of iterate and best for safety
    return obj_w <= best_val ? w : best;
}

inline TorsionField prox_step(const FunctionalSpec& spec, const TorsionField& w_n, double epsilon,
                              ProjectorX& projector, double projection_tol,
                              const EigenOptions& eigen, int max_iterations, double tol_scale) {
    spec.validate();
    require(!spec.set_flow_only(), ErrorKind::invalid_config,
            "functional '" + spec.kind_name() + "' drives set flows only");
    require(epsilon > 0, ErrorKind::invalid_config, "time step must be positive");
    detail::ProxEnv env{projector, projection_tol, eigen, max_iterations, tol_scale};
    double c = spec.coefficient;
    switch (spec.kind) {
        case FunctionalKind::zero:
            return w_n;
        case FunctionalKind::energy:
            // J(w) + |w-w_n|^2/2eps = |w - (w_n + c eps)|^2/2eps + const
            return detail::shifted_projection(w_n, c * epsilon, env);
        case FunctionalKind::mass:
            return detail::shifted_projection(w_n, -c * epsilon, env);
        case FunctionalKind::quadratic:
            // (c/2)|w|^2 + |w-w_n|^2/2eps: complete the square
            return detail::scaled_projection(w_n, 1.0 / (1.0 + c * epsilon), env);
        case FunctionalKind::spectral:
            return prox_step_descent(spec, w_n, epsilon, projector, projection_tol, eigen,
                                     max_iterations, tol_scale);
        case FunctionalKind::volume:
            break; // rejected above
    }
    return w_n;
}

inline TorsionField prox_step(const FunctionalSpec& spec, const TorsionField& w_n,
                              double epsilon) {
    ProjectorX p(w_n.domain);
    return prox_step(spec, w_n, epsilon, p, 1e-10, {}, 200, 1e-7);
}

/// Iterates prox_step over floor(T/eps) steps. On a step failure the partial
/// trajectory is returned with the failure recorded, not thrown away.
inline FlowTrajectory run_measure_flow(const MeasureFlowConfig& config, const TorsionField& w0) {
    config.validate();
    check_torsion_invariants(w0);
    FlowTrajectory traj;
    traj.epsilon = config.epsilon;
    const int steps = static_cast<int>(std::floor(config.horizon / config.epsilon + 1e-9));
    ProjectorX projector(w0.domain);

    traj.times.push_back(0.0);
    traj.states.push_back(w0);
    traj.values.push_back(
        evaluate_measure_functional(config.functional, w0, config.eigen));

    for (int n = 0; n < steps; ++n) {
        try {
            const TorsionField& w = traj.states.back();
            TorsionField w_next =
                prox_step(config.functional, w, config.epsilon, projector,
                          config.projection_tol, config.eigen, config.descent_max_iterations,
                          config.descent_tol_scale);
            check_torsion_invariants(w_next);
            double d = l2_distance(w_next, w);
            double val = evaluate_measure_functional(config.functional, w_next, config.eigen);
            traj.step_distances.push_back(d);
            traj.energy_residuals.push_back(val + 0.5 * d * d / config.epsilon -
                                            traj.values.back());
            traj.times.push_back((n + 1) * config.epsilon);
            traj.states.push_back(std::move(w_next));
            traj.values.push_back(val);
        } catch (const Error& e) {
            traj.completed = false;
            traj.failure = e.what();
            break;
        }
    }
    return traj;
}

// ---------------------------------------------------------------------------
// diagnostics

struct FlowDiagnostics {
    std::vector<double> metric_derivative;     // d(u_n, u_{n+1}) / eps
    std::vector<double> energy_residuals;      // copied from the trajectory
    std::vector<double> slope_balance_defect;  // | -dJ/eps - |u'|^2 | per step
    double max_energy_residual = 0;
    bool contraction_checked = false;
    double contraction_modulus = 0;
    double max_contraction_defect = 0; // max_n d(u_n,v_n) - e^{-lambda t_n} d(u_0,v_0)
};

inline FlowDiagnostics flow_diagnostics(const FlowTrajectory& traj, const FunctionalSpec& spec,
                                        const FlowTrajectory* partner = nullptr) {
    FlowDiagnostics d;
    d.energy_residuals = traj.energy_residuals;
    d.max_energy_residual = -inf;
    for (std::size_t n = 0; n < traj.steps(); ++n) {
        double md = traj.step_distances[n] / traj.epsilon;
        d.metric_derivative.push_back(md);
        double dJ = (traj.values[n] - traj.values[n + 1]) / traj.epsilon;
        d.slope_balance_defect.push_back(std::abs(dJ - md * md));
        d.max_energy_residual = std::max(d.max_energy_residual, traj.energy_residuals[n]);
    }
    if (traj.steps() == 0) d.max_energy_residual = 0;

    if (partner) {
        require(partner->times.size() == traj.times.size() && partner->epsilon == traj.epsilon,
                ErrorKind::invalid_config, "partner trajectory length mismatch");
        if (spec.has_declared_convexity()) {
            d.contraction_checked = true;
            d.contraction_modulus = spec.convexity_modulus();
            double d0 = l2_distance(traj.states[0], partner->states[0]);
            d.max_contraction_defect = -inf;
            for (std::size_t n = 0; n < traj.times.size(); ++n) {
                double dn = l2_distance(traj.states[n], partner->states[n]);
                double bound = std::exp(-d.contraction_modulus * traj.times[n]) * d0;
                d.max_contraction_defect = std::max(d.max_contraction_defect, dn - bound);
            }
        }
    }
    return d;
}

/// Sampled lower bound on the local slope at w: the best ratio
/// (J(w) - J(v))^+ / d(w, v) over projected random perturbations of size
/// `radius`. Deterministic for a fixed seed.
inline double local_slope_estimate(const FunctionalSpec& spec, const TorsionField& w,
                                   double radius, int samples, unsigned seed = 2024,
                                   const EigenOptions& eigen = {}) {
    spec.validate();
    require(radius > 0 && samples >= 1, ErrorKind::invalid_config,
            "slope estimate needs a positive radius and at least one sample");
    const GridDomain& dom = w.domain;
    double jw = evaluate_measure_functional(spec, w, eigen);
    std::mt19937 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    ProjectorX projector(dom);
    double best = 0;
    for (int s = 0; s < samples; ++s) {
        ScalarGridField p = ScalarGridField::zero(dom);
        for (int j = 0; j < dom.cells[1]; ++j)
            for (int i = 0; i < dom.cells[0]; ++i)
                if (!dom.on_ring(i, j)) p.at(i, j) = gauss(rng);
        double norm = p.l2_norm();
        if (norm == 0) continue;
        ScalarGridField v = w.as_field();
        for (std::size_t k = 0; k < v.values.size(); ++k)
            v.values[k] += p.values[k] * (radius / norm);
        TorsionField pv = projector.project(v, 1e-10).w;
        double dist = l2_distance(pv, w);
        if (dist <= 1e-14) continue;
        double gain = jw - evaluate_measure_functional(spec, pv, eigen);
        if (gain > 0) best = std::max(best, gain / dist);
    }
    return best;
}

} // namespace shapeflow
