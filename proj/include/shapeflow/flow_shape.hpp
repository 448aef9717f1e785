#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "shapeflow/functional.hpp"
#include "shapeflow/radial.hpp"
#include "shapeflow/setops.hpp"

namespace shapeflow {

enum class ShapeFlowStrategy { radial, greedy, hausdorff };

inline std::string strategy_name(ShapeFlowStrategy s) {
    switch (s) {
        case ShapeFlowStrategy::radial: return "radial";
        case ShapeFlowStrategy::greedy: return "greedy";
        case ShapeFlowStrategy::hausdorff: return "hausdorff";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// functional on sets

/// F(Omega): spectral kinds of the Dirichlet eigenvalues, energy kinds of the
/// torsion, volume of the mask, plus the volume/perimeter penalties. The
/// negate flag flips the main term only; penalties keep their sign.
inline double evaluate_shape_functional(const FunctionalSpec& spec, const ShapeMask& m,
                                        const EigenOptions& eig = {}) {
    spec.validate();
    MaskStats st = measure_stats(m);
    double value = 0;
    switch (spec.kind) {
        case FunctionalKind::zero:
            break;
        case FunctionalKind::energy:
            if (st.cell_count > 0) value = -spec.coefficient * torsion(m).as_field().integral();
            break;
        case FunctionalKind::mass:
            if (st.cell_count > 0) value = spec.coefficient * torsion(m).as_field().integral();
            break;
        case FunctionalKind::quadratic: {
            if (st.cell_count > 0) {
                TorsionField w = torsion(m);
                double s = 0;
                for (double v : w.values) s += v * v;
                value = 0.5 * spec.coefficient * s * m.domain.cell_measure();
            }
            break;
        }
        case FunctionalKind::spectral: {
            EigenResult er = eigenvalues_of(m, spectral_count(spec), eig);
            value = spec.coefficient * spectral_combine(spec, er.eigenvalues);
            break;
        }
        case FunctionalKind::volume:
            value = spec.coefficient * st.volume;
            break;
    }
    if (spec.negate) value = -value;
    return value + spec.volume_penalty * st.volume + spec.perimeter_penalty * st.perimeter;
}

// ---------------------------------------------------------------------------
// radial reference quantities

namespace detail {

inline double omega_d(int d) { return d == 2 ? pi : 2.0; }

struct BallReference {
    double lambda1 = 0;       // lambda_1(B(0,1))
    double torsion_mass = 0;  // integral of the torsion over B(0,1)
    double torsion_sq = 0;    // integral of its square
};

/// Unit-ball quantities from the 1D solvers; everything else follows from the
/// scalings lambda(B_r) = lambda(B_1)/r^2 and w_{B_r}(x) = r^2 w_{B_1}(x/r).
inline const BallReference& ball_reference(int d) {
    require(d == 1 || d == 2, ErrorKind::invalid_config, "dimension must be 1 or 2");
    static const BallReference ref1 = [] {
        RadialResult r = radial_interval(1.0, 4000);
        BallReference b;
        b.lambda1 = r.lambda1;
        double dlt = 1.0 / (r.r.size() + 0.5);
        for (std::size_t j = 0; j < r.r.size(); ++j) {
            b.torsion_mass += 2 * r.torsion[j] * dlt; // both halves of (-1,1)
            b.torsion_sq += 2 * r.torsion[j] * r.torsion[j] * dlt;
        }
        return b;
    }();
    static const BallReference ref2 = [] {
        RadialResult r = radial_disk(1.0, 4000);
        BallReference b;
        b.lambda1 = r.lambda1;
        double dlt = 1.0 / (r.r.size() + 0.5);
        for (std::size_t j = 0; j < r.r.size(); ++j) {
            b.torsion_mass += 2 * pi * r.torsion[j] * r.r[j] * dlt;
            b.torsion_sq += 2 * pi * r.torsion[j] * r.torsion[j] * r.r[j] * dlt;
        }
        return b;
    }();
    return d == 1 ? ref1 : ref2;
}

/// F(B(0,r)) for the radial strategy, penalties included.
inline double radial_value(const FunctionalSpec& spec, int d, double r) {
    const BallReference& ref = ball_reference(d);
    double value = 0;
    switch (spec.kind) {
        case FunctionalKind::zero:
            break;
        case FunctionalKind::energy:
            value = -spec.coefficient * ref.torsion_mass * std::pow(r, d + 2);
            break;
        case FunctionalKind::mass:
            value = spec.coefficient * ref.torsion_mass * std::pow(r, d + 2);
            break;
        case FunctionalKind::quadratic:
            value = 0.5 * spec.coefficient * ref.torsion_sq * std::pow(r, d + 4);
            break;
        case FunctionalKind::spectral:
            require(spectral_count(spec) == 1 && spec.spectral_form != SpectralForm::lambda_k,
                    ErrorKind::invalid_config,
                    "radial strategy supports first-eigenvalue functionals only");
            value = spec.coefficient * ref.lambda1 / (r * r);
            break;
        case FunctionalKind::volume:
            value = spec.coefficient * omega_d(d) * std::pow(r, d);
            break;
    }
    if (spec.negate) value = -value;
    double surface = d == 2 ? 2 * pi * r : 2.0;
    return value + spec.volume_penalty * omega_d(d) * std::pow(r, d) +
           spec.perimeter_penalty * surface;
}

/// Scalar golden-section minimizer on [a, b]; assumes a unimodal objective.
template <typename F>
double golden_min(F&& f, double a, double b, int iterations = 200) {
    if (b <= a) return a;
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = f(x1), f2 = f(x2);
    for (int it = 0; it < iterations && b - a > 1e-13 * (1 + std::abs(a)); ++it) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - gr * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (b - a);
            f2 = f(x2);
        }
    }
    return 0.5 * (a + b);
}

struct BallShape {
    std::array<double, 2> center{0, 0};
    double volume_radius = 0; // radius matching the mask volume exactly
    double inner_max = 0;     // largest center distance of an inside cell
};

/// Returns the ball parameters of a mask and rejects non-ball geometry: every
/// inside cell must be nearer the centroid than every outside cell.
inline BallShape ball_shape_of(const ShapeMask& m) {
    const GridDomain& d = m.domain;
    require(m.count() > 0, ErrorKind::invalid_config, "radial strategy needs a nonempty state");
    BallShape b;
    double n = 0;
    for (int j = 0; j < d.cells[1]; ++j)
        for (int i = 0; i < d.cells[0]; ++i) {
            if (!m.at(i, j)) continue;
            auto c = d.cell_center(i, j);
            for (int a = 0; a < d.dim; ++a) b.center[a] += c[a];
            n += 1;
        }
    for (int a = 0; a < d.dim; ++a) b.center[a] /= n;
    double out_min = inf;
    for (int j = 0; j < d.cells[1]; ++j)
        for (int i = 0; i < d.cells[0]; ++i) {
            if (d.on_ring(i, j)) continue;
            auto c = d.cell_center(i, j);
            double r2 = 0;
            for (int a = 0; a < d.dim; ++a) r2 += (c[a] - b.center[a]) * (c[a] - b.center[a]);
            double r = std::sqrt(r2);
            if (m.at(i, j))
                b.inner_max = std::max(b.inner_max, r);
            else
                out_min = std::min(out_min, r);
        }
    require(b.inner_max < out_min + 1e-9, ErrorKind::invalid_config,
            "radial strategy requires a ball-shaped state");
    double vol = n * d.cell_measure();
    b.volume_radius = d.dim == 2 ? std::sqrt(vol / pi) : vol / 2.0;
    return b;
}

inline ShapeMask rasterize_ball(const GridDomain& d, std::array<double, 2> center, double r) {
    return rasterize(d, Primitive::ball(center, r));
}

/// Largest ball radius around the center that stays inside the physical box
/// (the grid box minus its padding band).
inline double wall_cap(const GridDomain& d, std::array<double, 2> center) {
    double cap = inf;
    for (int a = 0; a < d.dim; ++a)
        cap = std::min(cap, std::min(center[a] - d.lower[a], d.upper[a] - center[a]));
    return cap - 1.5 * d.h - 1e-9;
}

} // namespace detail

/// Next radius of the one-parameter ball family: minimizes
/// F(B_r) + (omega_d (r^d - R_n^d))^2 / (2 eps) over r in [R_n, r_cap].
inline double radial_step_radius(const FunctionalSpec& spec, int d, double R_n, double epsilon,
                                 double r_cap) {
    require(R_n > 0 && epsilon > 0, ErrorKind::invalid_config,
            "radial step needs positive radius and step size");
    if (r_cap <= R_n) return R_n;
    double w = detail::omega_d(d);
    auto phi = [&](double r) {
        double dv = w * (std::pow(r, d) - std::pow(R_n, d));
        return detail::radial_value(spec, d, r) + dv * dv / (2 * epsilon);
    };
    double r = detail::golden_min(phi, R_n, r_cap);
    return std::max(r, R_n);
}

// ---------------------------------------------------------------------------
// one incremental step on sets

struct ShapeStepOptions {
    EigenOptions eigen;
    int initial_batch = 0; // 0: a quarter of the candidate count
    int stall_probes = 8;  // exact single-cell probes after batch rejection
    int max_rounds = 100000;
    // when set, receives the first accepted batch of the step (diagnostics)
    std::vector<std::size_t>* first_batch_out = nullptr;
};

namespace detail {

inline int candidate_thread_count() {
    if (const char* s = std::getenv("SHAPEFLOW_THREADS")) {
        int v = std::atoi(s);
        if (v >= 1) return std::min(v, 64);
    }
    unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(std::min(hc, 4u));
}

/// Applies fn(i) for i in [0, n) on up to candidate_thread_count() threads.
/// Results land in index order, so the outcome is thread-count independent.
template <typename Fn>
void parallel_for_index(std::size_t n, Fn&& fn) {
    std::size_t threads =
        std::min(static_cast<std::size_t>(candidate_thread_count()), n);
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t)
        pool.emplace_back([&, t] {
            try {
                for (std::size_t i = t; i < n; i += threads) fn(i);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

/// Outside non-ring cells whose filling merges opposite inside neighbors;
/// these are the cells a pure gain ranking can miss (the gain sits on two
/// separate components) yet they close gaps and drop the eigenvalue sharply.
inline std::vector<std::size_t> bridge_cells(const ShapeMask& m) {
    const GridDomain& d = m.domain;
    std::vector<std::size_t> out;
    for (int j = 0; j < d.cells[1]; ++j)
        for (int i = 0; i < d.cells[0]; ++i) {
            if (d.on_ring(i, j) || m.at(i, j)) continue;
            bool lr = i > 0 && i + 1 < d.cells[0] && m.at(i - 1, j) && m.at(i + 1, j);
            bool du = d.dim == 2 && j > 0 && j + 1 < d.cells[1] && m.at(i, j - 1) &&
                      m.at(i, j + 1);
            if (lr || du) out.push_back(d.index(i, j));
        }
    return out;
}

/// Per-candidate shape-derivative proxy: for each outside cell adjacent to
/// the boundary, the sum over its adjacent faces of |du/dn|^2 * face measure.
/// The fields are the relevant eigenfunctions (spectral) or the torsion
/// (energy kinds); the ranking only orders candidates, acceptance is always
/// by exact re-evaluation.
inline std::vector<std::pair<double, std::size_t>> ranked_candidates(
    const FunctionalSpec& spec, const ShapeMask& m, const EigenOptions& eig) {
    const GridDomain& d = m.domain;
    std::vector<ScalarGridField> fields;
    switch (spec.kind) {
        case FunctionalKind::zero:
        case FunctionalKind::volume:
            return {};
        case FunctionalKind::energy:
        case FunctionalKind::mass:
        case FunctionalKind::quadratic:
            fields.push_back(torsion(m).as_field());
            break;
        case FunctionalKind::spectral: {
            EigenResult er = eigenvalues_of(m, spectral_count(spec), eig);
            if (spec.spectral_form == SpectralForm::lambda_k)
                fields.push_back(er.eigenfunctions.back());
            else
                for (auto& u : er.eigenfunctions) fields.push_back(u);
            break;
        }
    }
    std::vector<double> gain(d.cell_count(), 0.0);
    for (const auto& u : fields)
        for (const BoundaryFace& f : boundary_normal_derivative(u, m)) {
            int oi = f.i + f.di, oj = f.j + f.dj;
            if (oi < 0 || oi >= d.cells[0] || oj < 0 || oj >= d.cells[1]) continue;
            if (d.on_ring(oi, oj)) continue;
            gain[d.index(oi, oj)] += f.value * f.value * f.length * d.h;
        }
    std::vector<std::pair<double, std::size_t>> ranked;
    for (std::size_t k = 0; k < gain.size(); ++k)
        if (gain[k] > 0) ranked.emplace_back(gain[k], k);
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    return ranked;
}

} // namespace detail

/// One minimizing-movement step on sets: minimizes (approximately, by greedy
/// growth or exactly on the radial family) F(M) + |M delta M_n|^2 / (2 eps)
/// over supersets M of M_n. Always returns a superset whose step objective
/// does not exceed the stay-put value F(M_n); worst case returns M_n itself.
inline ShapeMask mm_step_shape(const FunctionalSpec& spec, const ShapeMask& M_n, double epsilon,
                               ShapeFlowStrategy strategy, const ShapeStepOptions& opts = {}) {
    spec.validate();
    require(spec.monotone_decreasing_in_inclusion(), ErrorKind::invalid_config,
            "the inward scheme needs a functional that decreases under inclusion");
    require(epsilon > 0, ErrorKind::invalid_config, "time step must be positive");
    const GridDomain& dom = M_n.domain;

    if (strategy == ShapeFlowStrategy::radial) {
        detail::BallShape b = detail::ball_shape_of(M_n);
        double cap = detail::wall_cap(dom, b.center);
        double r = radial_step_radius(spec, dom.dim, b.volume_radius, epsilon, cap);
        if (r <= b.inner_max) return M_n; // growth below one cell: stay put
        return detail::rasterize_ball(dom, b.center, r);
    }
    require(strategy == ShapeFlowStrategy::greedy, ErrorKind::invalid_config,
            "mm_step_shape strategies are radial and greedy");

    const double cell = dom.cell_measure();
    ShapeMask M = M_n;
    std::size_t added = 0;
    auto objective = [&](const ShapeMask& m, std::size_t added_cells) {
        double dv = static_cast<double>(added_cells) * cell;
        return evaluate_shape_functional(spec, m, opts.eigen) + dv * dv / (2 * epsilon);
    };
    double obj_cur = objective(M, 0);
    const double accept_slack = 1e-13 * (1 + std::abs(obj_cur));

    auto with_cells = [&](const ShapeMask& base, const std::vector<std::size_t>& cells_to_add) {
        ShapeMask m = base;
        for (std::size_t k : cells_to_add) m.inside[k] = 1;
        return m;
    };
    bool first_batch_recorded = false;
    auto note_batch = [&](const std::vector<std::size_t>& cells_added) {
        if (opts.first_batch_out && !first_batch_recorded) {
            *opts.first_batch_out = cells_added;
            first_batch_recorded = true;
        }
    };

    for (int round = 0; round < opts.max_rounds; ++round) {
        // gap closings first: collective move, accepted only on exact decrease
        std::vector<std::size_t> bridges = detail::bridge_cells(M);
        if (!bridges.empty()) {
            ShapeMask trial = with_cells(M, bridges);
            double obj = objective(trial, added + bridges.size());
            if (obj < obj_cur - accept_slack) {
                M = std::move(trial);
                added += bridges.size();
                obj_cur = obj;
                note_batch(bridges);
                continue;
            }
        }

        auto ranked = detail::ranked_candidates(spec, M, opts.eigen);
        if (ranked.empty()) break;
        std::size_t batch = opts.initial_batch > 0
                                ? std::min<std::size_t>(opts.initial_batch, ranked.size())
                                : std::max<std::size_t>(1, ranked.size() / 4);
        bool accepted = false;
        while (batch >= 1) {
            std::vector<std::size_t> cells_to_add;
            for (std::size_t q = 0; q < batch; ++q) cells_to_add.push_back(ranked[q].second);
            ShapeMask trial = with_cells(M, cells_to_add);
            double obj = objective(trial, added + batch);
            if (obj < obj_cur - accept_slack) {
                M = std::move(trial);
                added += batch;
                obj_cur = obj;
                accepted = true;
                note_batch(cells_to_add);
                break;
            }
            if (batch == 1) break;
            batch /= 2;
        }
        if (accepted) continue;

        // the proxy ranking can be off near stalls: probe the top candidates
        // exactly (in parallel) and take the best true decrease if any
        std::size_t probes = std::min<std::size_t>(opts.stall_probes, ranked.size());
        std::vector<double> objs(probes, inf);
        detail::parallel_for_index(probes, [&](std::size_t q) {
            ShapeMask trial = with_cells(M, {ranked[q].second});
            objs[q] = objective(trial, added + 1);
        });
        std::size_t best = probes;
        for (std::size_t q = 0; q < probes; ++q)
            if (objs[q] < obj_cur - accept_slack && (best == probes || objs[q] < objs[best]))
                best = q;
        if (best == probes) break;
        M = with_cells(M, {ranked[best].second});
        added += 1;
        obj_cur = objs[best];
        note_batch({ranked[best].second});
    }
    return M;
}

// ---------------------------------------------------------------------------
// trajectories

struct ShapeFlowConfig {
    double epsilon = 1e-2;
    double horizon = 0.1;
    FunctionalSpec functional;
    ShapeFlowStrategy strategy = ShapeFlowStrategy::greedy;
    ShapeStepOptions step;

    void validate() const {
        require(epsilon > 0, ErrorKind::invalid_config, "time step must be positive");
        require(horizon >= epsilon, ErrorKind::invalid_config, "horizon shorter than one step");
        functional.validate();
        if (strategy != ShapeFlowStrategy::hausdorff)
            require(functional.monotone_decreasing_in_inclusion(), ErrorKind::invalid_config,
                    "the inward scheme needs a functional that decreases under inclusion");
        else
            require(functional.monotone_increasing_in_inclusion(), ErrorKind::invalid_config,
                    "the erosion scheme needs a functional that increases under inclusion");
    }
};

struct ShapeTrajectory {
    double epsilon = 0;
    ShapeFlowStrategy strategy = ShapeFlowStrategy::greedy;
    std::vector<double> times;
    std::vector<ShapeMask> states;
    std::vector<double> values;  // F(state), penalties included
    std::vector<double> lambda1; // spectral growth runs and all erosion runs
    std::vector<std::vector<double>> lambdas; // per state, same runs as lambda1
    std::vector<double> volumes;
    std::vector<double> perimeters;
    std::vector<int> components;
    std::vector<double> step_sym_diff;       // |M_{k+1} delta M_k|
    std::vector<double> radii;               // radial strategy
    std::vector<double> erosion_radii;       // hausdorff: per-step h*
    std::vector<double> f_of_t;              // hausdorff: cumulative erosion radius
    std::vector<double> discontinuity_times; // outsized lambda_1 drops
    std::vector<double> lambda_regression_times; // lambda_1 moves against the flow
    bool nested_chain = true; // states nested in the scheme's growth direction
    bool components_monotone = true;
    bool perimeter_superset_note = false; // perimeter penalty active: superset
                                          // restriction is a design choice here
    bool completed = true;
    std::string failure;

    int steps() const { return static_cast<int>(times.size()) - 1; }
};

namespace detail {

/// Flags lambda_1 discontinuities. Growth schemes push lambda_1 down and
/// erosion schemes push it up, so moves are scored along the scheme's own
/// direction: a move counts as a jump when it exceeds 10x the eigen tolerance
/// and 5x the median of the preceding moves; moves against the flow beyond
/// 10x tolerance are recorded separately (none are expected).
inline void detect_lambda_jumps(ShapeTrajectory& traj, double eig_tol, bool lambda_decreasing) {
    if (traj.lambda1.size() < 2) return;
    const double sign = lambda_decreasing ? 1.0 : -1.0;
    std::vector<double> moves;
    for (std::size_t k = 0; k + 1 < traj.lambda1.size(); ++k) {
        double move = sign * (traj.lambda1[k] - traj.lambda1[k + 1]);
        if (move < -10 * eig_tol) traj.lambda_regression_times.push_back(traj.times[k + 1]);
        if (moves.size() >= 3) {
            std::vector<double> sorted = moves;
            std::sort(sorted.begin(), sorted.end());
            double median = sorted[sorted.size() / 2];
            if (move > std::max(10 * eig_tol, 5 * median))
                traj.discontinuity_times.push_back(traj.times[k + 1]);
        }
        moves.push_back(std::max(move, 0.0));
    }
}

} // namespace detail

/// Iterates mm_step_shape and records the state series. Monotone under
/// inclusion by construction; a step failure truncates the trajectory and is
/// recorded rather than rethrown.
inline ShapeTrajectory run_shape_flow(const ShapeFlowConfig& config, const ShapeMask& M0) {
    config.validate();
    require(config.strategy != ShapeFlowStrategy::hausdorff, ErrorKind::invalid_config,
            "use hausdorff_flow_run for the erosion flow");
    require(M0.count() > 0, ErrorKind::invalid_config, "shape flow needs a nonempty start");

    ShapeTrajectory traj;
    traj.epsilon = config.epsilon;
    traj.strategy = config.strategy;
    traj.perimeter_superset_note = config.functional.perimeter_penalty > 0;
    const bool spectral = config.functional.kind == FunctionalKind::spectral;
    const int steps = static_cast<int>(std::floor(config.horizon / config.epsilon + 1e-9));

    bool radial = config.strategy == ShapeFlowStrategy::radial;
    detail::BallShape ball{};
    double radius = 0, cap = 0;
    if (radial) {
        ball = detail::ball_shape_of(M0);
        radius = ball.volume_radius;
        cap = detail::wall_cap(M0.domain, ball.center);
    }

    auto record = [&](const ShapeMask& m, double t, double r) {
        traj.times.push_back(t);
        MaskStats st = measure_stats(m);
        traj.volumes.push_back(st.volume);
        traj.perimeters.push_back(st.perimeter);
        traj.components.push_back(connected_components(m));
        if (radial) {
            traj.radii.push_back(r);
            traj.values.push_back(detail::radial_value(config.functional, m.domain.dim, r));
            if (spectral) {
                double l1 = detail::ball_reference(m.domain.dim).lambda1 / (r * r);
                traj.lambda1.push_back(l1);
                traj.lambdas.push_back({l1});
            }
        } else if (spectral) {
            // one eigen solve covers both the value and the lambda series
            EigenResult er =
                eigenvalues_of(m, spectral_count(config.functional), config.step.eigen);
            double v = config.functional.coefficient *
                       spectral_combine(config.functional, er.eigenvalues);
            traj.values.push_back(v + config.functional.volume_penalty * st.volume +
                                  config.functional.perimeter_penalty * st.perimeter);
            traj.lambda1.push_back(er.eigenvalues.front());
            traj.lambdas.push_back(er.eigenvalues);
        } else {
            traj.values.push_back(
                evaluate_shape_functional(config.functional, m, config.step.eigen));
        }
        if (!traj.states.empty()) {
            const ShapeMask& prev = traj.states.back();
            SymDiff sd = sym_diff(prev, m);
            traj.step_sym_diff.push_back(sd.measure);
            for (std::size_t k = 0; k < m.inside.size(); ++k)
                if (prev.inside[k] && !m.inside[k]) traj.nested_chain = false;
            if (traj.components.size() >= 2 &&
                traj.components.back() > traj.components[traj.components.size() - 2])
                traj.components_monotone = false;
        }
        traj.states.push_back(m);
    };

    record(M0, 0.0, radius);
    try {
        for (int n = 1; n <= steps; ++n) {
            if (radial) {
                radius = radial_step_radius(config.functional, M0.domain.dim, radius,
                                            config.epsilon, cap);
                record(detail::rasterize_ball(M0.domain, ball.center, radius),
                       n * config.epsilon, radius);
            } else {
                ShapeMask next = mm_step_shape(config.functional, traj.states.back(),
                                               config.epsilon, config.strategy, config.step);
                record(next, n * config.epsilon, 0);
            }
        }
    } catch (const Error& e) {
        traj.completed = false;
        traj.failure = e.what();
    }
    detail::detect_lambda_jumps(traj, config.step.eigen.tolerance, true);
    return traj;
}

// ---------------------------------------------------------------------------
// ball flow closed form

/// lambda_1(B(0,1)) in dimension d from the 1D reference solvers.
inline double unit_ball_lambda1(int d) { return detail::ball_reference(d).lambda1; }

/// Right-hand side of the radius equation of the ball flow for F = lambda_1:
/// R' = 2 lambda_1(B_1) / (d^2 omega_d^2 R^{2d+1}).
inline double ball_flow_rhs(int d, double R) {
    require(R > 0, ErrorKind::invalid_config, "radius must be positive");
    double w = detail::omega_d(d);
    return 2 * unit_ball_lambda1(d) / (d * d * w * w * std::pow(R, 2 * d + 1));
}

/// Closed-form solution of that equation:
/// R(t) = (R0^{2d+2} + 4(d+1) lambda_1(B_1) t / (d^2 omega_d^2))^{1/(2d+2)}.
inline double ball_flow_reference(double R0, int d, double t) {
    require(R0 > 0 && t >= 0, ErrorKind::invalid_config,
            "ball flow reference needs R0 > 0, t >= 0");
    require(d == 1 || d == 2, ErrorKind::invalid_config, "dimension must be 1 or 2");
    double w = detail::omega_d(d);
    double p = 2.0 * d + 2.0;
    return std::pow(std::pow(R0, p) + 4 * (d + 1) * unit_ball_lambda1(d) * t / (d * d * w * w),
                    1.0 / p);
}

// ---------------------------------------------------------------------------
// erosion (complement-distance) flow

/// Flow in the Hausdorff distance of complements: each state is an erosion of
/// the previous one, with the radius h chosen per step to minimize
/// F(erode(M, h)) + h^2/(2 eps) by golden-section, polished over the exact
/// distance thresholds inside the final bracket.
inline ShapeTrajectory hausdorff_flow_run(const FunctionalSpec& spec, const ShapeMask& omega0,
                                          double epsilon, double horizon,
                                          const EigenOptions& eig = {}) {
    spec.validate();
    require(spec.monotone_increasing_in_inclusion(), ErrorKind::invalid_config,
            "the erosion scheme needs a functional that increases under inclusion");
    require(epsilon > 0, ErrorKind::invalid_config, "time step must be positive");
    require(horizon >= epsilon, ErrorKind::invalid_config, "horizon shorter than one step");
    require(omega0.count() > 0, ErrorKind::invalid_config, "erosion flow needs a nonempty start");

    ShapeTrajectory traj;
    traj.epsilon = epsilon;
    traj.strategy = ShapeFlowStrategy::hausdorff;
    const bool spectral = spec.kind == FunctionalKind::spectral;
    const int steps = static_cast<int>(std::floor(horizon / epsilon + 1e-9));

    auto record = [&](const ShapeMask& m, double t, double f_cum) {
        traj.times.push_back(t);
        MaskStats st = measure_stats(m);
        traj.volumes.push_back(st.volume);
        traj.perimeters.push_back(st.perimeter);
        traj.components.push_back(connected_components(m));
        traj.f_of_t.push_back(f_cum);
        traj.values.push_back(evaluate_shape_functional(spec, m, eig));
        // The lambda series is reported for every nonempty state, not just for
        // spectral drivers: erosion runs under volume are the natural place to
        // watch lambda_1 react to pieces disappearing.
        const int kc = spectral ? spectral_count(spec) : 1;
        if (m.count() > static_cast<std::size_t>(4 * kc)) {
            EigenResult er = eigenvalues_of(m, kc, eig);
            traj.lambda1.push_back(er.eigenvalues.front());
            traj.lambdas.push_back(er.eigenvalues);
        }
        if (!traj.states.empty()) {
            const ShapeMask& prev = traj.states.back();
            traj.step_sym_diff.push_back(sym_diff(prev, m).measure);
            // erosions may split or lose pieces, so only nesting is checked here
            for (std::size_t k = 0; k < m.inside.size(); ++k)
                if (m.inside[k] && !prev.inside[k]) traj.nested_chain = false;
        }
        traj.states.push_back(m);
    };

    double f_cum = 0;
    record(omega0, 0.0, 0.0);
    try {
        for (int n = 1; n <= steps; ++n) {
            const ShapeMask& M = traj.states.back();
            if (M.count() == 0) {
                record(M, n * epsilon, f_cum);
                continue;
            }
            ScalarGridField dist = distance_transform(M, DistanceTarget::to_complement);
            std::vector<double> levels;
            for (std::size_t k = 0; k < M.inside.size(); ++k)
                if (M.inside[k]) levels.push_back(dist.values[k]);
            std::sort(levels.begin(), levels.end());
            levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
            double h_hi = levels.back() * (1 - 1e-12); // largest h with a nonempty erosion

            auto erosion_value = [&](double h) {
                ShapeMask m = ShapeMask::empty(M.domain);
                for (std::size_t k = 0; k < M.inside.size(); ++k)
                    m.inside[k] = (M.inside[k] != 0 && dist.values[k] > h) ? 1 : 0;
                return evaluate_shape_functional(spec, m, eig);
            };
            auto phi = [&](double h) { return erosion_value(h) + h * h / (2 * epsilon); };

            // golden-section down to a quarter-cell bracket; finer brackets
            // are meaningless on a staircase objective
            double a = 0, b = h_hi;
            const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
            const double width_stop = std::max(1e-9, 0.25 * M.domain.h);
            double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
            double p1 = phi(x1), p2 = phi(x2);
            for (int it = 0; it < 120 && b - a > width_stop; ++it) {
                if (p1 < p2) {
                    b = x2;
                    x2 = x1;
                    p2 = p1;
                    x1 = b - gr * (b - a);
                    p1 = phi(x1);
                } else {
                    a = x1;
                    x1 = x2;
                    p1 = p2;
                    x2 = a + gr * (b - a);
                    p2 = phi(x2);
                }
            }
            // the erosion set only changes when h crosses a distance value, so
            // the exact minimizer near the bracket sits on such a threshold;
            // widen by one cell to cover the teeth adjacent to the bracket
            double h_best = 0;
            double phi_best = phi(0);
            for (double lv : levels) {
                if (lv < a - M.domain.h) continue;
                if (lv > b + M.domain.h) break;
                double p = phi(lv);
                if (p < phi_best) {
                    phi_best = p;
                    h_best = lv;
                }
            }
            ShapeMask next = erode_complement(M, h_best);
            f_cum += h_best;
            traj.erosion_radii.push_back(h_best);
            record(next, n * epsilon, f_cum);
        }
    } catch (const Error& e) {
        traj.completed = false;
        traj.failure = e.what();
    }
    detail::detect_lambda_jumps(traj, eig.tolerance, false);
    return traj;
}

} // namespace shapeflow
