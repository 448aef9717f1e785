#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "shapeflow/shapeflow.hpp"

using namespace shapeflow;

namespace {

double prox_objective(const FunctionalSpec& spec, const TorsionField& w,
                      const TorsionField& w_n, double epsilon) {
    double d = l2_distance(w, w_n);
    return evaluate_measure_functional(spec, w) + 0.5 * d * d / epsilon;
}

std::vector<TorsionField> random_feasible(const GridDomain& d, int count, unsigned seed) {
    std::mt19937 gen(seed);
    std::uniform_real_distribution<double> U(-0.3, 0.6);
    ProjectorX projector(d);
    std::vector<TorsionField> out;
    for (int q = 0; q < count; ++q) {
        ScalarGridField v = ScalarGridField::zero(d);
        for (auto& x : v.values) x = U(gen);
        for (int j = 0; j < d.cells[1]; ++j)
            for (int i = 0; i < d.cells[0]; ++i)
                if (d.on_ring(i, j)) v.at(i, j) = 0;
        out.push_back(projector.project(v, 1e-10).w);
    }
    return out;
}

} // namespace

TEST_CASE("prox step minimizes the step objective over the constraint set",
          "[flow_measure]") {
    GridDomain d = GridDomain::aligned(2, 0.0, 1.0, 1.0 / 10);
    TorsionField w0 = torsion(rasterize(d, Primitive::ball({0.5, 0.5}, 0.35)));
    const double eps = 2e-2;
    auto candidates = random_feasible(d, 30, 777001u);

    for (const FunctionalSpec& spec :
         {FunctionalSpec::energy(1.0), FunctionalSpec::mass(0.7),
          FunctionalSpec::quadratic(2.0)}) {
        TorsionField w1 = prox_step(spec, w0, eps);
        double star = prox_objective(spec, w1, w0, eps);
        REQUIRE(star <= prox_objective(spec, w0, w0, eps) + 1e-10);
        for (const TorsionField& c : candidates)
            REQUIRE(star <= prox_objective(spec, c, w0, eps) + 1e-8);
    }
}

TEST_CASE("closed-form prox steps agree with the generic descent", "[flow_measure]") {
    GridDomain d = GridDomain::aligned(2, 0.0, 1.0, 1.0 / 8);
    TorsionField w0 = torsion(rasterize(d, Primitive::ball({0.5, 0.5}, 0.3)));
    const double eps = 1e-2;
    for (const FunctionalSpec& spec :
         {FunctionalSpec::energy(1.0), FunctionalSpec::mass(1.0),
          FunctionalSpec::quadratic(1.5)}) {
        ProjectorX p1(d), p2(d);
        TorsionField closed = prox_step(spec, w0, eps, p1, 1e-11, {}, 400, 1e-9);
        TorsionField descent = prox_step_descent(spec, w0, eps, p2, 1e-11, {}, 400, 1e-9);
        REQUIRE(l2_distance(closed, descent) <= 1e-6);
    }
}

TEST_CASE("zero functional never moves", "[flow_measure]") {
    GridDomain d = GridDomain::aligned(2, 0.0, 1.0, 1.0 / 8);
    TorsionField w0 = torsion(rasterize(d, Primitive::ball({0.5, 0.5}, 0.3)));
    TorsionField w1 = prox_step(FunctionalSpec::zero_functional(), w0, 1e-2);
    REQUIRE(l2_distance(w0, w1) == 0.0);
}

TEST_CASE("trajectory bookkeeping and the energy inequality", "[flow_measure]") {
    GridDomain d = GridDomain::aligned(2, -1.0, 1.0, 1.0 / 12);
    TorsionField w0 = torsion(rasterize(d, Primitive::ball({0, 0}, 0.6)));
    MeasureFlowConfig cfg;
    cfg.epsilon = 1e-2;
    cfg.horizon = 0.1;
    cfg.functional = FunctionalSpec::energy(1.0);
    FlowTrajectory traj = run_measure_flow(cfg, w0);

    REQUIRE(traj.completed);
    REQUIRE(traj.steps() == 10);
    REQUIRE(traj.times.size() == 11);
    REQUIRE(traj.states.size() == 11);
    REQUIRE(traj.values.size() == 11);
    REQUIRE(traj.energy_residuals.size() == 10);
    for (std::size_t n = 0; n < traj.times.size(); ++n)
        REQUIRE(traj.times[n] == Catch::Approx(n * cfg.epsilon).margin(1e-15));

    for (double r : traj.energy_residuals) REQUIRE(r <= 1e-10);
    for (std::size_t n = 0; n + 1 < traj.values.size(); ++n)
        REQUIRE(traj.values[n + 1] <= traj.values[n] + 1e-10);
}

TEST_CASE("energy flow grows the torsion cell-wise", "[flow_measure]") {
    GridDomain d = GridDomain::aligned(2, -1.0, 1.0, 1.0 / 12);
    TorsionField w0 = torsion(rasterize(d, Primitive::ball({0, 0}, 0.55)));
    MeasureFlowConfig cfg;
    cfg.epsilon = 1e-2;
    cfg.horizon = 0.1;
    cfg.functional = FunctionalSpec::energy(1.0);
    FlowTrajectory traj = run_measure_flow(cfg, w0);
    REQUIRE(traj.completed);
    for (std::size_t n = 0; n + 1 < traj.states.size(); ++n)
        for (std::size_t k = 0; k < traj.states[n].values.size(); ++k)
            REQUIRE(traj.states[n + 1].values[k] >= traj.states[n].values[k] - 1e-8);
}

TEST_CASE("paired energy flows never spread apart", "[flow_measure]") {
    GridDomain d = GridDomain::aligned(2, -1.0, 1.0, 1.0 / 12);
    TorsionField w0 = torsion(rasterize(d, Primitive::ball({0, 0}, 0.6)));
    TorsionField v0 = w0;
    for (auto& x : v0.values) x *= 0.5; // still feasible: constraints are one-sided

    MeasureFlowConfig cfg;
    cfg.epsilon = 1e-2;
    cfg.horizon = 0.08;
    cfg.functional = FunctionalSpec::energy(1.0);
    FlowTrajectory a = run_measure_flow(cfg, w0);
    FlowTrajectory b = run_measure_flow(cfg, v0);
    REQUIRE(a.completed);
    REQUIRE(b.completed);

    double prev = l2_distance(a.states[0], b.states[0]);
    for (std::size_t n = 1; n < a.states.size(); ++n) {
        double cur = l2_distance(a.states[n], b.states[n]);
        REQUIRE(cur <= prev + 1e-6);
        prev = cur;
    }
}

TEST_CASE("quadratic flow contracts at its declared modulus", "[flow_measure]") {
    GridDomain d = GridDomain::aligned(2, 0.0, 1.0, 1.0 / 10);
    TorsionField w0 = torsion(rasterize(d, Primitive::ball({0.5, 0.5}, 0.35)));
    TorsionField v0 = w0;
    for (auto& x : v0.values) x *= 0.4;

    MeasureFlowConfig cfg;
    cfg.epsilon = 1e-3;
    cfg.horizon = 0.02;
    cfg.functional = FunctionalSpec::quadratic(1.0);
    FlowTrajectory a = run_measure_flow(cfg, w0);
    FlowTrajectory b = run_measure_flow(cfg, v0);
    REQUIRE(a.completed);
    REQUIRE(b.completed);

    FlowDiagnostics diag = flow_diagnostics(a, cfg.functional, &b);
    REQUIRE(diag.contraction_checked);
    REQUIRE(diag.contraction_modulus == Catch::Approx(1.0));
    REQUIRE(diag.max_contraction_defect <= 1e-6);
}

TEST_CASE("diagnostics recompute the per-step quantities", "[flow_measure]") {
    GridDomain d = GridDomain::aligned(2, 0.0, 1.0, 1.0 / 10);
    TorsionField w0 = torsion(rasterize(d, Primitive::ball({0.5, 0.5}, 0.3)));
    MeasureFlowConfig cfg;
    cfg.epsilon = 5e-3;
    cfg.horizon = 0.03;
    cfg.functional = FunctionalSpec::mass(1.0);
    FlowTrajectory traj = run_measure_flow(cfg, w0);
    FlowDiagnostics diag = flow_diagnostics(traj, cfg.functional);
    REQUIRE(diag.metric_derivative.size() == traj.steps());
    for (std::size_t n = 0; n < traj.steps(); ++n)
        REQUIRE(diag.metric_derivative[n] ==
                Catch::Approx(traj.step_distances[n] / cfg.epsilon).margin(1e-14));
    REQUIRE(diag.max_energy_residual <= 1e-10);
}

TEST_CASE("spectral prox keeps the energy inequality by construction",
          "[flow_measure]") {
    GridDomain d = GridDomain::aligned(2, -1.0, 1.0, 1.0 / 10);
    TorsionField w0 = torsion(rasterize(d, Primitive::ball({0, 0}, 0.55)));
    MeasureFlowConfig cfg;
    cfg.epsilon = 1e-3;
    cfg.horizon = 3e-3;
    cfg.functional = FunctionalSpec::lambda1();
    cfg.descent_max_iterations = 60;
    FlowTrajectory traj = run_measure_flow(cfg, w0);
    REQUIRE(traj.completed);
    REQUIRE(traj.steps() == 3);
    for (double r : traj.energy_residuals) REQUIRE(r <= 1e-10);
    for (std::size_t n = 0; n + 1 < traj.values.size(); ++n)
        REQUIRE(traj.values[n + 1] <= traj.values[n] + 1e-10);
}

TEST_CASE("set-flow functionals are rejected on the measure side", "[flow_measure]") {
    GridDomain d = GridDomain::aligned(2, 0.0, 1.0, 1.0 / 8);
    TorsionField w0 = torsion(rasterize(d, Primitive::ball({0.5, 0.5}, 0.3)));
    REQUIRE_THROWS_AS(prox_step(FunctionalSpec::volume(1.0), w0, 1e-2), Error);
    REQUIRE_THROWS_AS(prox_step(FunctionalSpec::energy(1.0).negated(), w0, 1e-2), Error);

    MeasureFlowConfig cfg;
    cfg.functional = FunctionalSpec::volume(1.0);
    REQUIRE_THROWS_AS(cfg.validate(), Error);
    REQUIRE_THROWS_AS(evaluate_measure_functional(FunctionalSpec::volume(1.0), w0), Error);
}

TEST_CASE("slope estimate is seed-deterministic and nonnegative", "[flow_measure]") {
    GridDomain d = GridDomain::aligned(2, 0.0, 1.0, 1.0 / 8);
    TorsionField w0 = torsion(rasterize(d, Primitive::ball({0.5, 0.5}, 0.3)));
    FunctionalSpec spec = FunctionalSpec::mass(1.0);
    double s1 = local_slope_estimate(spec, w0, 0.01, 8, 42u);
    double s2 = local_slope_estimate(spec, w0, 0.01, 8, 42u);
    REQUIRE(s1 == s2);
    REQUIRE(s1 >= 0.0);
    REQUIRE_THROWS_AS(local_slope_estimate(spec, w0, -1.0, 8), Error);
}

TEST_CASE("convexity probe sees the declared moduli", "[flow_measure]") {
    GridDomain d = GridDomain::aligned(2, 0.0, 1.0, 1.0 / 10);
    CapacitaryMeasure mu0 =
        CapacitaryMeasure::from_mask(rasterize(d, Primitive::ball({0.5, 0.5}, 0.35)));
    CapacitaryMeasure mu1 = CapacitaryMeasure::constant(d, 1.0);

    ConvexityReport lin = convexity_probe(FunctionalSpec::energy(1.0), mu0, mu1, 7);
    REQUIRE(lin.convexity_defect <= 1e-9); // linear in w: flat chords
    REQUIRE(lin.bijection_defect <= 1e-6);

    ConvexityReport quad = convexity_probe(FunctionalSpec::quadratic(1.0), mu0, mu1, 7);
    REQUIRE(quad.convexity_defect <= 1e-9);
    REQUIRE(quad.lambda_max >= 1.0 - 1e-6); // modulus at least the coefficient
}
