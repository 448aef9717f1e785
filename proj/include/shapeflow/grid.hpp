#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <vector>

#include "shapeflow/common.hpp"

namespace shapeflow {

/// Uniform cell-centered grid over a box in dimension 1 or 2. The outermost
/// ring of cells is reserved as homogeneous-Dirichlet padding and can never
/// belong to a shape or carry a finite measure density.
struct GridDomain {
    int dim = 2;
    std::array<double, 2> lower{0.0, 0.0};
    std::array<double, 2> upper{1.0, 1.0};
    std::array<int, 2> cells{0, 1}; // cells[1] == 1 when dim == 1
    double h = 0.0;

    static GridDomain box(int dim, std::array<double, 2> lower, std::array<double, 2> upper,
                          std::array<int, 2> cells) {
        require(dim == 1 || dim == 2, ErrorKind::invalid_config, "grid dimension must be 1 or 2");
        GridDomain d;
        d.dim = dim;
        d.lower = lower;
        d.upper = upper;
        d.cells = cells;
        if (dim == 1) {
            d.cells[1] = 1;
            d.lower[1] = 0.0;
        }
        for (int a = 0; a < dim; ++a)
            require(d.cells[a] >= 3, ErrorKind::invalid_config,
                    "need at least 3 cells per axis (padding ring plus interior)");
        d.h = (d.upper[0] - d.lower[0]) / d.cells[0];
        require(d.h > 0, ErrorKind::invalid_config, "degenerate box");
        for (int a = 1; a < dim; ++a) {
            double ha = (d.upper[a] - d.lower[a]) / d.cells[a];
            require(std::abs(ha - d.h) <= 1e-12 * d.h, ErrorKind::invalid_config,
                    "box proportions must give one uniform spacing");
        }
        if (dim == 1) d.upper[1] = d.lower[1] + d.h;
        return d;
    }

    /// Grid whose cell centers hit the physical boundary of [lo,hi]^dim exactly:
    /// one layer of centers sits on the boundary (outside any strict-interior
    /// mask) plus one padding ring beyond it. Spacing is exactly `h` when
    /// (hi-lo)/h is integral.
    static GridDomain aligned(int dim, double lo, double hi, double h) {
        require(hi > lo && h > 0, ErrorKind::invalid_config, "bad aligned-grid request");
        int m = static_cast<int>(std::llround((hi - lo) / h));
        require(std::abs(m * h - (hi - lo)) <= 1e-9 * (hi - lo), ErrorKind::invalid_config,
                "aligned grid needs (hi-lo)/h integral");
        int n = m + 3;
        std::array<double, 2> lw{lo - 1.5 * h, lo - 1.5 * h};
        std::array<double, 2> up{hi + 1.5 * h, hi + 1.5 * h};
        return box(dim, lw, up, {n, dim == 2 ? n : 1});
    }

    std::size_t cell_count() const {
        return static_cast<std::size_t>(cells[0]) * static_cast<std::size_t>(cells[1]);
    }
    std::size_t index(int i, int j) const {
        return static_cast<std::size_t>(j) * cells[0] + static_cast<std::size_t>(i);
    }
    double center(int axis, int i) const { return lower[axis] + (i + 0.5) * h; }
    std::array<double, 2> cell_center(int i, int j) const {
        return {center(0, i), dim == 2 ? center(1, j) : 0.0};
    }
    bool on_ring(int i, int j) const {
        if (i == 0 || i == cells[0] - 1) return true;
        if (dim == 2 && (j == 0 || j == cells[1] - 1)) return true;
        return false;
    }
    double cell_measure() const { return dim == 2 ? h * h : h; }

    bool operator==(const GridDomain& o) const {
        return dim == o.dim && lower == o.lower && upper == o.upper && cells == o.cells;
    }
    bool operator!=(const GridDomain& o) const { return !(*this == o); }
};

inline void require_same_domain(const GridDomain& a, const GridDomain& b) {
    require(a == b, ErrorKind::domain_mismatch, "objects live on different grid domains");
}

/// Binary set of cells; the padding ring is always outside.
struct ShapeMask {
    GridDomain domain;
    std::vector<std::uint8_t> inside;

    static ShapeMask empty(const GridDomain& d) {
        ShapeMask m;
        m.domain = d;
        m.inside.assign(d.cell_count(), 0);
        return m;
    }

    bool at(int i, int j) const { return inside[domain.index(i, j)] != 0; }
    void set(int i, int j, bool v) {
        if (v) require(!domain.on_ring(i, j), ErrorKind::invariant_violation,
                       "padding ring cells cannot be inside a mask");
        inside[domain.index(i, j)] = v ? 1 : 0;
    }
    std::size_t count() const {
        std::size_t c = 0;
        for (auto v : inside) c += v != 0;
        return c;
    }
    bool operator==(const ShapeMask& o) const { return domain == o.domain && inside == o.inside; }
};

struct ScalarGridField {
    GridDomain domain;
    std::vector<double> values;

    static ScalarGridField constant(const GridDomain& d, double v) {
        ScalarGridField f;
        f.domain = d;
        f.values.assign(d.cell_count(), v);
        return f;
    }
    static ScalarGridField zero(const GridDomain& d) { return constant(d, 0.0); }

    double at(int i, int j) const { return values[domain.index(i, j)]; }
    double& at(int i, int j) { return values[domain.index(i, j)]; }

    double l2_norm() const {
        double s = 0;
        for (double v : values) s += v * v;
        return std::sqrt(s * domain.cell_measure());
    }
    double integral() const {
        double s = 0;
        for (double v : values) s += v;
        return s * domain.cell_measure();
    }
    double max_abs() const {
        double m = 0;
        for (double v : values) m = std::max(m, std::abs(v));
        return m;
    }
};

inline double l2_distance(const ScalarGridField& a, const ScalarGridField& b) {
    require_same_domain(a.domain, b.domain);
    double s = 0;
    for (std::size_t k = 0; k < a.values.size(); ++k) {
        double d = a.values[k] - b.values[k];
        s += d * d;
    }
    return std::sqrt(s * a.domain.cell_measure());
}

// ---------------------------------------------------------------------------
// geometric primitives and rasterization

class Primitive {
  public:
    static Primitive ball(std::array<double, 2> center, double r) {
        require(r > 0, ErrorKind::invalid_config, "ball radius must be positive");
        Primitive p(Kind::ball);
        p.a_ = center;
        p.r1_ = r;
        return p;
    }
    static Primitive annulus(std::array<double, 2> center, double r1, double r2) {
        require(0 < r1 && r1 < r2, ErrorKind::invalid_config, "annulus needs 0 < r1 < r2");
        Primitive p(Kind::annulus);
        p.a_ = center;
        p.r1_ = r1;
        p.r2_ = r2;
        return p;
    }
    static Primitive box(std::array<double, 2> lo, std::array<double, 2> hi) {
        Primitive p(Kind::box);
        p.a_ = lo;
        p.b_ = hi;
        return p;
    }
    static Primitive join(Primitive x, Primitive y) {
        Primitive p(Kind::set_union);
        p.children_.push_back(std::move(x));
        p.children_.push_back(std::move(y));
        return p;
    }
    static Primitive cut(Primitive x, Primitive y) {
        Primitive p(Kind::set_difference);
        p.children_.push_back(std::move(x));
        p.children_.push_back(std::move(y));
        return p;
    }

    bool contains(std::array<double, 2> x, int dim) const {
        switch (kind_) {
            case Kind::ball:
                return dist2(x, a_, dim) < r1_ * r1_;
            case Kind::annulus: {
                double d2 = dist2(x, a_, dim);
                return d2 > r1_ * r1_ && d2 < r2_ * r2_;
            }
            case Kind::box:
                for (int a = 0; a < dim; ++a)
                    if (x[a] <= a_[a] || x[a] >= b_[a]) return false;
                return true;
            case Kind::set_union:
                return children_[0].contains(x, dim) || children_[1].contains(x, dim);
            case Kind::set_difference:
                return children_[0].contains(x, dim) && !children_[1].contains(x, dim);
        }
        return false;
    }

    /// Bounding box of the primitive (difference bounds by its left operand).
    void bounds(int dim, std::array<double, 2>& lo, std::array<double, 2>& hi) const {
        switch (kind_) {
            case Kind::ball:
            case Kind::annulus: {
                double r = kind_ == Kind::ball ? r1_ : r2_;
                for (int a = 0; a < dim; ++a) {
                    lo[a] = a_[a] - r;
                    hi[a] = a_[a] + r;
                }
                break;
            }
            case Kind::box:
                lo = a_;
                hi = b_;
                break;
            case Kind::set_union: {
                std::array<double, 2> l2{}, h2{};
                children_[0].bounds(dim, lo, hi);
                children_[1].bounds(dim, l2, h2);
                for (int a = 0; a < dim; ++a) {
                    lo[a] = std::min(lo[a], l2[a]);
                    hi[a] = std::max(hi[a], h2[a]);
                }
                break;
            }
            case Kind::set_difference:
                children_[0].bounds(dim, lo, hi);
                break;
        }
    }

  private:
    enum class Kind { ball, annulus, box, set_union, set_difference };
    explicit Primitive(Kind k) : kind_(k) {}
    static double dist2(std::array<double, 2> x, std::array<double, 2> c, int dim) {
        double s = 0;
        for (int a = 0; a < dim; ++a) s += (x[a] - c[a]) * (x[a] - c[a]);
        return s;
    }
    Kind kind_;
    std::array<double, 2> a_{}, b_{};
    double r1_ = 0, r2_ = 0;
    std::vector<Primitive> children_;
};

/// Cell is inside iff its center satisfies the primitive's predicate.
inline ShapeMask rasterize(const GridDomain& d, const Primitive& p) {
    std::array<double, 2> lo{}, hi{};
    p.bounds(d.dim, lo, hi);
    // the physical box excludes the padding band: its boundary runs through
    // the centers of the outside cells just inside the ring
    for (int a = 0; a < d.dim; ++a)
        require(lo[a] >= d.lower[a] + 1.5 * d.h - 1e-12 &&
                    hi[a] <= d.upper[a] - 1.5 * d.h + 1e-12,
                ErrorKind::domain_violation, "primitive does not fit inside the grid box");
    ShapeMask m = ShapeMask::empty(d);
    for (int j = 0; j < d.cells[1]; ++j)
        for (int i = 0; i < d.cells[0]; ++i) {
            if (d.on_ring(i, j)) continue;
            if (p.contains(d.cell_center(i, j), d.dim)) m.inside[d.index(i, j)] = 1;
        }
    return m;
}

// ---------------------------------------------------------------------------
// mask statistics and set algebra

struct MaskStats {
    double volume = 0;       // cell count * cell measure
    double perimeter = 0;    // inside-outside face count * face measure
    std::size_t cell_count = 0;
    std::array<double, 2> bbox_lo{0, 0}, bbox_hi{0, 0}; // over cell centers
};

inline MaskStats measure_stats(const ShapeMask& m) {
    const GridDomain& d = m.domain;
    MaskStats s;
    s.bbox_lo = {inf, inf};
    s.bbox_hi = {-inf, -inf};
    double face = d.dim == 2 ? d.h : 1.0;
    for (int j = 0; j < d.cells[1]; ++j)
        for (int i = 0; i < d.cells[0]; ++i) {
            if (!m.at(i, j)) continue;
            ++s.cell_count;
            auto c = d.cell_center(i, j);
            for (int a = 0; a < d.dim; ++a) {
                s.bbox_lo[a] = std::min(s.bbox_lo[a], c[a]);
                s.bbox_hi[a] = std::max(s.bbox_hi[a], c[a]);
            }
            const int di[4] = {1, -1, 0, 0};
            const int dj[4] = {0, 0, 1, -1};
            int nsides = d.dim == 2 ? 4 : 2;
            for (int q = 0; q < nsides; ++q) {
                int ni = i + di[q], nj = j + dj[q];
                bool nb_in = ni >= 0 && ni < d.cells[0] && nj >= 0 && nj < d.cells[1] &&
                             m.at(ni, nj);
                if (!nb_in) s.perimeter += face;
            }
        }
    s.volume = static_cast<double>(s.cell_count) * d.cell_measure();
    if (s.cell_count == 0) {
        s.bbox_lo = {0, 0};
        s.bbox_hi = {0, 0};
    }
    return s;
}

struct SymDiff {
    std::size_t cell_count = 0;
    double measure = 0;
    ShapeMask mask;
};

inline SymDiff sym_diff(const ShapeMask& a, const ShapeMask& b) {
    require_same_domain(a.domain, b.domain);
    SymDiff r;
    r.mask = ShapeMask::empty(a.domain);
    for (std::size_t k = 0; k < a.inside.size(); ++k)
        if (a.inside[k] != b.inside[k]) {
            r.mask.inside[k] = 1;
            ++r.cell_count;
        }
    r.measure = static_cast<double>(r.cell_count) * a.domain.cell_measure();
    return r;
}

/// Count of axis-connected components, by union-find over inside cells.
inline int connected_components(const ShapeMask& m) {
    const GridDomain& d = m.domain;
    std::vector<std::size_t> parent(d.cell_count());
    for (std::size_t k = 0; k < parent.size(); ++k) parent[k] = k;
    auto find = [&](std::size_t k) {
        while (parent[k] != k) {
            parent[k] = parent[parent[k]];
            k = parent[k];
        }
        return k;
    };
    auto unite = [&](std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[b] = a;
    };
    for (int j = 0; j < d.cells[1]; ++j)
        for (int i = 0; i < d.cells[0]; ++i) {
            std::size_t k = d.index(i, j);
            if (!m.inside[k]) continue;
            if (i > 0 && m.inside[d.index(i - 1, j)]) unite(k, d.index(i - 1, j));
            if (d.dim == 2 && j > 0 && m.inside[d.index(i, j - 1)]) unite(k, d.index(i, j - 1));
        }
    int comps = 0;
    for (std::size_t k = 0; k < parent.size(); ++k)
        if (m.inside[k] && find(k) == k) ++comps;
    return comps;
}

} // namespace shapeflow
