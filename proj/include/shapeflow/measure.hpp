#pragma once

#include <cmath>
#include <vector>

#include "shapeflow/grid.hpp"

namespace shapeflow {

/// Nonnegative measure density on grid cells, possibly +infinity. Infinity is
/// a flag, never a large float, so constraints stay exact. The padding ring is
/// always +infinity.
struct CapacitaryMeasure {
    GridDomain domain;
    std::vector<double> density;       // finite part, meaningful where !infinite
    std::vector<std::uint8_t> infinite;

    static CapacitaryMeasure zero(const GridDomain& d) {
        CapacitaryMeasure m;
        m.domain = d;
        m.density.assign(d.cell_count(), 0.0);
        m.infinite.assign(d.cell_count(), 0);
        for (int j = 0; j < d.cells[1]; ++j)
            for (int i = 0; i < d.cells[0]; ++i)
                if (d.on_ring(i, j)) m.infinite[d.index(i, j)] = 1;
        return m;
    }

    static CapacitaryMeasure constant(const GridDomain& d, double c) {
        require(c >= 0 && std::isfinite(c), ErrorKind::invalid_config,
                "measure density must be finite and nonnegative");
        CapacitaryMeasure m = zero(d);
        for (std::size_t k = 0; k < m.density.size(); ++k)
            if (!m.infinite[k]) m.density[k] = c;
        return m;
    }

    /// Set embedding: finite 0 inside the mask, +infinity outside.
    static CapacitaryMeasure from_mask(const ShapeMask& s) {
        CapacitaryMeasure m = zero(s.domain);
        for (std::size_t k = 0; k < m.density.size(); ++k)
            if (!s.inside[k]) m.infinite[k] = 1;
        return m;
    }

    bool is_infinite(int i, int j) const { return infinite[domain.index(i, j)] != 0; }
    double finite_at(int i, int j) const { return density[domain.index(i, j)]; }

    void set(int i, int j, double v) {
        std::size_t k = domain.index(i, j);
        if (std::isinf(v)) {
            infinite[k] = 1;
            density[k] = 0;
            return;
        }
        require(!domain.on_ring(i, j), ErrorKind::invariant_violation,
                "padding ring must stay at +infinity");
        require(v >= 0 && !std::isnan(v), ErrorKind::invalid_config,
                "measure density must be nonnegative and not NaN");
        infinite[k] = 0;
        density[k] = v;
    }

    void validate() const {
        for (std::size_t k = 0; k < density.size(); ++k) {
            require(!std::isnan(density[k]), ErrorKind::invariant_violation,
                    "NaN in measure density");
            require(infinite[k] || density[k] >= 0, ErrorKind::invariant_violation,
                    "negative measure density");
        }
        for (int j = 0; j < domain.cells[1]; ++j)
            for (int i = 0; i < domain.cells[0]; ++i)
                if (domain.on_ring(i, j))
                    require(infinite[domain.index(i, j)], ErrorKind::invariant_violation,
                            "padding ring must be +infinity");
    }

    /// Cell-wise ordering a <= b (with +infinity as the top element).
    static bool leq(const CapacitaryMeasure& a, const CapacitaryMeasure& b) {
        require_same_domain(a.domain, b.domain);
        for (std::size_t k = 0; k < a.density.size(); ++k) {
            if (b.infinite[k]) continue;
            if (a.infinite[k]) return false;
            if (a.density[k] > b.density[k]) return false;
        }
        return true;
    }

    bool operator==(const CapacitaryMeasure& o) const {
        if (domain != o.domain) return false;
        for (std::size_t k = 0; k < density.size(); ++k) {
            if ((infinite[k] != 0) != (o.infinite[k] != 0)) return false;
            if (!infinite[k] && density[k] != o.density[k]) return false;
        }
        return true;
    }
};

/// Torsion-like field: the w side of the measure/torsion correspondence.
/// Nonnegative, zero on the padding ring, and discretely subharmonic-plus-one
/// (1 + Δ_h w ≥ −eps at interior cells). The invariant check lives next to
/// the stencil code; this is the value type.
struct TorsionField {
    GridDomain domain;
    std::vector<double> values;

    static TorsionField zero(const GridDomain& d) {
        TorsionField w;
        w.domain = d;
        w.values.assign(d.cell_count(), 0.0);
        return w;
    }
    static TorsionField from_field(const ScalarGridField& f) {
        TorsionField w;
        w.domain = f.domain;
        w.values = f.values;
        return w;
    }

    ScalarGridField as_field() const {
        ScalarGridField f;
        f.domain = domain;
        f.values = values;
        return f;
    }
    double at(int i, int j) const { return values[domain.index(i, j)]; }
    double& at(int i, int j) { return values[domain.index(i, j)]; }
    double max() const {
        double m = 0;
        for (double v : values) m = std::max(m, v);
        return m;
    }
};

inline double l2_distance(const TorsionField& a, const TorsionField& b) {
    require_same_domain(a.domain, b.domain);
    double s = 0;
    for (std::size_t k = 0; k < a.values.size(); ++k) {
        double d = a.values[k] - b.values[k];
        s += d * d;
    }
    return std::sqrt(s * a.domain.cell_measure());
}

} // namespace shapeflow
