#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "shapeflow/grid.hpp"

namespace shapeflow {

enum class DistanceTarget { to_set, to_complement };

namespace detail {

// One-dimensional squared-distance envelope (Felzenszwalb & Huttenlocher).
// f holds squared distances in cell units; writes the lower envelope back.
inline void edt_pass(std::vector<double>& f, std::vector<double>& scratch,
                     std::vector<int>& v, std::vector<double>& z) {
    const int n = static_cast<int>(f.size());
    v.resize(n);
    z.resize(n + 1);
    const double INF = std::numeric_limits<double>::infinity();
    int k = 0;
    v[0] = 0;
    z[0] = -INF;
    z[1] = INF;
    for (int q = 1; q < n; ++q) {
        // parabolas at infinite height never reach the lower envelope: while
        // the envelope holds nothing else, replace the placeholder, and once
        // a finite parabola is in, skip infinite ones entirely; that keeps
        // every stacked parabola finite, so the intersection abscissa below
        // is finite and the pop loop stops at z[0] = -inf
        if (k == 0 && f[v[0]] == INF) {
            v[0] = q;
            continue;
        }
        if (f[q] == INF) continue;
        double s;
        while (true) {
            int p = v[k];
            s = ((f[q] + q * static_cast<double>(q)) - (f[p] + p * static_cast<double>(p))) /
                (2.0 * q - 2.0 * p);
            if (s <= z[k]) {
                --k;
            } else {
                break;
            }
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = std::numeric_limits<double>::infinity();
    }
    scratch.resize(n);
    k = 0;
    for (int q = 0; q < n; ++q) {
        while (z[k + 1] < q) ++k;
        double dq = q - static_cast<double>(v[k]);
        scratch[q] = dq * dq + f[v[k]];
    }
    f.swap(scratch);
}

} // namespace detail

/// Exact Euclidean distance from every cell center to the nearest cell center
/// of the target set (the mask itself or its complement within the grid box).
/// Distances come out in physical units; target cells get 0.
inline ScalarGridField distance_transform(const ShapeMask& m, DistanceTarget target) {
    const GridDomain& d = m.domain;
    const double INF = std::numeric_limits<double>::infinity();
    std::size_t total = d.cell_count();

    bool want = target == DistanceTarget::to_set;
    bool any = false;
    std::vector<double> sq(total);
    for (std::size_t k = 0; k < total; ++k) {
        bool is_target = (m.inside[k] != 0) == want;
        sq[k] = is_target ? 0.0 : INF;
        any = any || is_target;
    }
    require(any, ErrorKind::invalid_config,
            target == DistanceTarget::to_set ? "distance to an empty set is undefined"
                                             : "distance to an empty complement is undefined");

    std::vector<double> line, scratch, z;
    std::vector<int> v;
    // pass along axis 0
    line.resize(d.cells[0]);
    for (int j = 0; j < d.cells[1]; ++j) {
        for (int i = 0; i < d.cells[0]; ++i) line[i] = sq[d.index(i, j)];
        detail::edt_pass(line, scratch, v, z);
        for (int i = 0; i < d.cells[0]; ++i) sq[d.index(i, j)] = line[i];
    }
    if (d.dim == 2) {
        line.resize(d.cells[1]);
        for (int i = 0; i < d.cells[0]; ++i) {
            for (int j = 0; j < d.cells[1]; ++j) line[j] = sq[d.index(i, j)];
            detail::edt_pass(line, scratch, v, z);
            for (int j = 0; j < d.cells[1]; ++j) sq[d.index(i, j)] = line[j];
        }
    }

    ScalarGridField out = ScalarGridField::zero(d);
    for (std::size_t k = 0; k < total; ++k) out.values[k] = std::sqrt(sq[k]) * d.h;
    return out;
}

/// Cells of `m` strictly farther than `r` from the complement. Radius 0 (or
/// negative) returns the mask unchanged.
inline ShapeMask erode_complement(const ShapeMask& m, double r) {
    if (r <= 0) return m;
    ScalarGridField dist = distance_transform(m, DistanceTarget::to_complement);
    ShapeMask out = ShapeMask::empty(m.domain);
    for (std::size_t k = 0; k < m.inside.size(); ++k)
        out.inside[k] = (m.inside[k] != 0 && dist.values[k] > r) ? 1 : 0;
    return out;
}

// ---------------------------------------------------------------------------
// distances between cell sets

struct SetDistances {
    double char_l1 = 0;        // measure of the symmetric difference
    double hausdorff = 0;      // between the sets
    double hausdorff_compl = 0; // between their complements within the box
    double oriented_l2 = 0;    // L2 norm of the signed-distance difference
    double fraenkel = 0;       // scale/translation-invariant relative asymmetry
};

inline double fraenkel_asymmetry(const ShapeMask& k1, const ShapeMask& k2);

namespace detail {

inline ScalarGridField signed_distance(const ShapeMask& m) {
    ScalarGridField to_set = distance_transform(m, DistanceTarget::to_set);
    ScalarGridField to_comp = distance_transform(m, DistanceTarget::to_complement);
    ScalarGridField out = ScalarGridField::zero(m.domain);
    for (std::size_t k = 0; k < m.inside.size(); ++k)
        out.values[k] = m.inside[k] ? -to_comp.values[k] : to_set.values[k];
    return out;
}

inline double sup_abs_diff(const ScalarGridField& a, const ScalarGridField& b) {
    double s = 0;
    for (std::size_t k = 0; k < a.values.size(); ++k)
        s = std::max(s, std::abs(a.values[k] - b.values[k]));
    return s;
}

} // namespace detail

/// All four distances at once; both masks must be nonempty with nonempty
/// complements (guaranteed by the padding ring).
inline SetDistances set_distances(const ShapeMask& a, const ShapeMask& b) {
    require_same_domain(a.domain, b.domain);
    require(a.count() > 0 && b.count() > 0, ErrorKind::invalid_config,
            "set distances need nonempty sets");
    SetDistances r;
    r.char_l1 = sym_diff(a, b).measure;

    ScalarGridField da = distance_transform(a, DistanceTarget::to_set);
    ScalarGridField db = distance_transform(b, DistanceTarget::to_set);
    r.hausdorff = detail::sup_abs_diff(da, db);

    ScalarGridField dac = distance_transform(a, DistanceTarget::to_complement);
    ScalarGridField dbc = distance_transform(b, DistanceTarget::to_complement);
    r.hausdorff_compl = detail::sup_abs_diff(dac, dbc);

    ScalarGridField sa = ScalarGridField::zero(a.domain);
    for (std::size_t k = 0; k < sa.values.size(); ++k)
        sa.values[k] = (a.inside[k] ? -dac.values[k] : da.values[k]) -
                       (b.inside[k] ? -dbc.values[k] : db.values[k]);
    r.oriented_l2 = sa.l2_norm();
    r.fraenkel = fraenkel_asymmetry(a, b);
    return r;
}

/// Fraenkel asymmetry proxy: min over integer cell shifts of the symmetric
/// difference between k1 and the rescaled copy of k2 (scaled about its bbox
/// center so the volumes match), normalized by |k1|. Exhaustive over all
/// shifts that keep the rescaled set inside the interior.
inline double fraenkel_asymmetry(const ShapeMask& k1, const ShapeMask& k2) {
    require_same_domain(k1.domain, k2.domain);
    const GridDomain& d = k1.domain;
    MaskStats s1 = measure_stats(k1);
    MaskStats s2 = measure_stats(k2);
    require(s1.cell_count > 0 && s2.cell_count > 0, ErrorKind::invalid_config,
            "Fraenkel asymmetry needs nonempty sets");
    double lambda = std::pow(s1.volume / s2.volume, 1.0 / d.dim);

    // Rescale k2 about its bbox center by resampling cell centers.
    std::array<double, 2> c{(s2.bbox_lo[0] + s2.bbox_hi[0]) / 2,
                            (s2.bbox_lo[1] + s2.bbox_hi[1]) / 2};
    ShapeMask scaled = ShapeMask::empty(d);
    int lo_i = d.cells[0], hi_i = -1, lo_j = d.cells[1], hi_j = -1;
    for (int j = 0; j < d.cells[1]; ++j)
        for (int i = 0; i < d.cells[0]; ++i) {
            if (d.on_ring(i, j)) continue;
            auto x = d.cell_center(i, j);
            std::array<double, 2> y{c[0] + (x[0] - c[0]) / lambda,
                                    c[1] + (x[1] - c[1]) / lambda};
            int si = static_cast<int>(std::floor((y[0] - d.lower[0]) / d.h));
            int sj = d.dim == 2 ? static_cast<int>(std::floor((y[1] - d.lower[1]) / d.h)) : j;
            if (si < 0 || si >= d.cells[0] || sj < 0 || sj >= d.cells[1]) continue;
            if (k2.at(si, sj)) {
                scaled.inside[d.index(i, j)] = 1;
                lo_i = std::min(lo_i, i);
                hi_i = std::max(hi_i, i);
                lo_j = std::min(lo_j, j);
                hi_j = std::max(hi_j, j);
            }
        }
    require(hi_i >= lo_i, ErrorKind::invariant_violation, "rescaled set vanished");

    // Slide the rescaled set over every in-bounds integer shift.
    std::size_t best = std::numeric_limits<std::size_t>::max();
    int smin_i = 1 - lo_i, smax_i = d.cells[0] - 2 - hi_i;
    int smin_j = d.dim == 2 ? 1 - lo_j : 0;
    int smax_j = d.dim == 2 ? d.cells[1] - 2 - hi_j : 0;
    for (int tj = smin_j; tj <= smax_j; ++tj)
        for (int ti = smin_i; ti <= smax_i; ++ti) {
            std::size_t diff = 0;
            for (int j = std::max(0, lo_j - 1); j <= std::min(d.cells[1] - 1, hi_j + 1); ++j)
                for (int i = lo_i; i <= hi_i; ++i)
                    if (scaled.at(i, j) != k1.at(i + ti, j + tj)) ++diff;
            // cells of k1 outside the shifted bbox are all mismatches
            std::size_t overlap_in = 0;
            for (int j = std::max(0, lo_j - 1); j <= std::min(d.cells[1] - 1, hi_j + 1); ++j)
                for (int i = lo_i; i <= hi_i; ++i)
                    if (k1.at(i + ti, j + tj)) ++overlap_in;
            diff += s1.cell_count - overlap_in;
            best = std::min(best, diff);
        }
    return static_cast<double>(best) * d.cell_measure() / s1.volume;
}

} // namespace shapeflow
