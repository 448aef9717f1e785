#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "shapeflow/shapeflow.hpp"

using namespace shapeflow;

namespace {

// All non-ring cells: exactly the variable set of the projection, so the
// dense oracle and the active-set method solve the same quadratic program.
ShapeMask full_interior(const GridDomain& d) {
    ShapeMask m = ShapeMask::empty(d);
    for (int j = 0; j < d.cells[1]; ++j)
        for (int i = 0; i < d.cells[0]; ++i)
            if (!d.on_ring(i, j)) m.set(i, j, true);
    return m;
}

double l2_gap(const GridDomain& d, const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        double t = a[k] - b[k];
        s += t * t;
    }
    return std::sqrt(s * d.cell_measure());
}

std::vector<ScalarGridField> probe_inputs(const GridDomain& d, const ShapeMask& interior) {
    TorsionField w = torsion(interior, 1e-12);
    std::vector<ScalarGridField> probes;

    ScalarGridField shifted = w.as_field();
    for (auto& v : shifted.values) v += 0.3;
    probes.push_back(shifted);

    ScalarGridField scaled = w.as_field();
    for (auto& v : scaled.values) v *= 1.2;
    probes.push_back(scaled);

    ScalarGridField noise = ScalarGridField::zero(d);
    std::mt19937 gen(90210u);
    std::uniform_real_distribution<double> U(-0.5, 0.5);
    for (auto& v : noise.values) v = U(gen);
    probes.push_back(noise);

    probes.push_back(ScalarGridField::constant(d, -0.2));

    ScalarGridField bump = ScalarGridField::zero(d);
    std::array<double, 2> mid = {0.5 * (d.lower[0] + d.upper[0]),
                                 0.5 * (d.lower[1] + d.upper[1])};
    for (int j = 0; j < d.cells[1]; ++j)
        for (int i = 0; i < d.cells[0]; ++i) {
            auto c = d.cell_center(i, j);
            double r2 = (c[0] - mid[0]) * (c[0] - mid[0]);
            if (d.dim == 2) r2 += (c[1] - mid[1]) * (c[1] - mid[1]);
            bump.at(i, j) = std::exp(-8.0 * r2);
        }
    probes.push_back(bump);
    return probes;
}

} // namespace

TEST_CASE("active-set projection matches cyclic projections on small grids",
          "[projection]") {
    std::vector<GridDomain> grids = {
        GridDomain::aligned(1, 0.0, 1.0, 1.0 / 8),
        GridDomain::aligned(2, 0.0, 1.0, 1.0 / 6),
        GridDomain::aligned(2, 0.0, 1.0, 1.0 / 8),
    };
    for (const GridDomain& d : grids) {
        ShapeMask interior = full_interior(d);
        for (const ScalarGridField& v : probe_inputs(d, interior)) {
            ProjectionResult res = project_onto_x(v, 1e-10);
            std::vector<double> ref = oracles::dykstra_project(interior, v.values);
            INFO("grid h = " << d.h << ", dim = " << d.dim);
            REQUIRE(l2_gap(d, res.w.values, ref) <= 1e-6);
        }
    }
}

TEST_CASE("projection output is feasible and certified", "[projection]") {
    GridDomain d = GridDomain::aligned(2, 0.0, 1.0, 1.0 / 8);
    for (const ScalarGridField& v : probe_inputs(d, full_interior(d))) {
        ProjectionResult res = project_onto_x(v, 1e-10);
        REQUIRE(res.max_bound_violation <= default_eps_x);
        REQUIRE(res.max_constraint_violation <= default_eps_x);
        REQUIRE(res.kkt_residual <= 1e-8);
        REQUIRE(torsion_invariants_hold(res.w));
    }
}

TEST_CASE("projection is idempotent", "[projection]") {
    GridDomain d = GridDomain::aligned(2, 0.0, 1.0, 1.0 / 8);
    for (const ScalarGridField& v : probe_inputs(d, full_interior(d))) {
        ProjectionResult once = project_onto_x(v, 1e-10);
        ProjectionResult twice = project_onto_x(once.w.as_field(), 1e-10);
        REQUIRE(l2_gap(d, once.w.values, twice.w.values) <= 1e-10);
    }
}

TEST_CASE("feasible points are fixed points", "[projection]") {
    GridDomain d = GridDomain::aligned(2, 0.0, 1.0, 1.0 / 8);
    TorsionField w = torsion(full_interior(d), 1e-12);
    ScalarGridField v = w.as_field();
    for (auto& x : v.values) x *= 0.9; // strictly feasible
    ProjectionResult res = project_onto_x(v, 1e-10);
    REQUIRE(l2_gap(d, res.w.values, v.values) <= 1e-9);
}

TEST_CASE("projection is nonexpansive", "[projection]") {
    GridDomain d = GridDomain::aligned(2, 0.0, 1.0, 1.0 / 8);
    auto probes = probe_inputs(d, full_interior(d));
    for (std::size_t a = 0; a < probes.size(); ++a)
        for (std::size_t b = a + 1; b < probes.size(); ++b) {
            ProjectionResult pa = project_onto_x(probes[a], 1e-10);
            ProjectionResult pb = project_onto_x(probes[b], 1e-10);
            double lhs = l2_gap(d, pa.w.values, pb.w.values);
            double rhs = l2_gap(d, probes[a].values, probes[b].values);
            REQUIRE(lhs <= rhs + 1e-9);
        }
}

TEST_CASE("warm-started projector reproduces the one-shot result", "[projection]") {
    GridDomain d = GridDomain::aligned(2, 0.0, 1.0, 1.0 / 8);
    auto probes = probe_inputs(d, full_interior(d));
    ProjectorX warm(d);
    for (const ScalarGridField& v : probes) {
        ProjectionResult a = warm.project(v, 1e-10);
        ProjectionResult b = project_onto_x(v, 1e-10);
        REQUIRE(l2_gap(d, a.w.values, b.w.values) <= 1e-8);
    }
}
