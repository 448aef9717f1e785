#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "shapeflow/flow_measure.hpp"
#include "shapeflow/flow_shape.hpp"

namespace shapeflow {

using ordered_json = nlohmann::ordered_json;

/// Fixed %.17g rendering so emitted text artifacts are byte-stable.
inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), ErrorKind::io_error, "cannot open '" + path + "' for writing");
    out << content;
    out.flush();
    require(out.good(), ErrorKind::io_error, "write failed on '" + path + "'");
}

// ---------------------------------------------------------------------------
// masks: PGM and a run-length JSON descriptor

/// Plain PGM (P2), 255 inside and 0 outside, top image row = highest y.
inline std::string pgm_of(const ShapeMask& m) {
    const GridDomain& d = m.domain;
    std::ostringstream out;
    out << "P2\n" << d.cells[0] << ' ' << d.cells[1] << "\n255\n";
    for (int j = d.cells[1] - 1; j >= 0; --j) {
        for (int i = 0; i < d.cells[0]; ++i) {
            if (i) out << ' ';
            out << (m.at(i, j) ? "255" : "0");
        }
        out << '\n';
    }
    return out.str();
}

inline void write_mask_pgm(const std::string& path, const ShapeMask& m) {
    write_text_file(path, pgm_of(m));
}

inline ordered_json domain_to_json(const GridDomain& d) {
    ordered_json j;
    j["dim"] = d.dim;
    j["lower"] = std::vector<double>(d.lower.begin(), d.lower.begin() + d.dim);
    j["upper"] = std::vector<double>(d.upper.begin(), d.upper.begin() + d.dim);
    j["cells"] = std::vector<int>(d.cells.begin(), d.cells.begin() + d.dim);
    j["h"] = d.h;
    return j;
}

inline GridDomain domain_from_json(const nlohmann::json& j) {
    int dim = j.at("dim").get<int>();
    require(dim == 1 || dim == 2, ErrorKind::invalid_config, "domain dim must be 1 or 2");
    std::array<double, 2> lo{0, 0}, hi{0, 0};
    std::array<int, 2> cells{1, 1};
    for (int a = 0; a < dim; ++a) {
        lo[a] = j.at("lower").at(a).get<double>();
        hi[a] = j.at("upper").at(a).get<double>();
        cells[a] = j.at("cells").at(a).get<int>();
    }
    return GridDomain::box(dim, lo, hi, cells);
}

/// {domain, rle}: rle is a flat list of [start, length] runs of inside cells
/// in linear cell order.
inline ordered_json mask_to_json(const ShapeMask& m) {
    ordered_json j;
    j["domain"] = domain_to_json(m.domain);
    std::vector<std::size_t> rle;
    std::size_t k = 0, total = m.inside.size();
    while (k < total) {
        if (!m.inside[k]) {
            ++k;
            continue;
        }
        std::size_t start = k;
        while (k < total && m.inside[k]) ++k;
        rle.push_back(start);
        rle.push_back(k - start);
    }
    j["rle"] = rle;
    return j;
}

inline ShapeMask mask_from_json(const nlohmann::json& j) {
    GridDomain d = domain_from_json(j.at("domain"));
    ShapeMask m = ShapeMask::empty(d);
    const auto& rle = j.at("rle");
    require(rle.is_array() && rle.size() % 2 == 0, ErrorKind::invalid_config,
            "mask rle must hold (start, length) pairs");
    for (std::size_t q = 0; q + 1 < rle.size(); q += 2) {
        std::size_t start = rle.at(q).get<std::size_t>();
        std::size_t len = rle.at(q + 1).get<std::size_t>();
        require(start + len <= m.inside.size(), ErrorKind::invalid_config,
                "mask rle run exceeds the grid");
        for (std::size_t k = start; k < start + len; ++k) {
            int i = static_cast<int>(k % d.cells[0]);
            int jj = static_cast<int>(k / d.cells[0]);
            require(!d.on_ring(i, jj), ErrorKind::invalid_config,
                    "mask rle marks a padding ring cell inside");
            m.inside[k] = 1;
        }
    }
    return m;
}

// ---------------------------------------------------------------------------
// fields and measures: CSV and raw blocks

/// CSV rows (x, y, value) over all cells, y omitted in one dimension.
inline std::string field_csv(const ScalarGridField& f) {
    const GridDomain& d = f.domain;
    std::ostringstream out;
    out << (d.dim == 2 ? "x,y,value\n" : "x,value\n");
    for (int j = 0; j < d.cells[1]; ++j)
        for (int i = 0; i < d.cells[0]; ++i) {
            auto c = d.cell_center(i, j);
            out << format_double(c[0]);
            if (d.dim == 2) out << ',' << format_double(c[1]);
            out << ',' << format_double(f.at(i, j)) << '\n';
        }
    return out.str();
}

/// Same layout for a measure; infinite cells print the literal "inf".
inline std::string measure_csv(const CapacitaryMeasure& mu) {
    const GridDomain& d = mu.domain;
    std::ostringstream out;
    out << (d.dim == 2 ? "x,y,value\n" : "x,value\n");
    for (int j = 0; j < d.cells[1]; ++j)
        for (int i = 0; i < d.cells[0]; ++i) {
            auto c = d.cell_center(i, j);
            out << format_double(c[0]);
            if (d.dim == 2) out << ',' << format_double(c[1]);
            std::size_t k = d.index(i, j);
            out << ',' << (mu.infinite[k] ? "inf" : format_double(mu.density[k])) << '\n';
        }
    return out.str();
}

namespace detail {

/// Raw block: one ASCII header line of 8 values
///   d n1 n2 lo1 lo2 hi1 hi2 flags
/// then n1*n2 IEEE float64 values, little endian, linear cell order. flags=0
/// is a plain field; flags=1 marks measure semantics, where cells carrying
/// the +infinity bit pattern are the infinite-density cells.
inline void write_raw_block(const std::string& path, const GridDomain& d,
                            const std::vector<double>& values, int flags) {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), ErrorKind::io_error, "cannot open '" + path + "' for writing");
    out << d.dim << ' ' << d.cells[0] << ' ' << d.cells[1] << ' ' << format_double(d.lower[0])
        << ' ' << format_double(d.lower[1]) << ' ' << format_double(d.upper[0]) << ' '
        << format_double(d.upper[1]) << ' ' << flags << '\n';
    for (double v : values) {
        char buf[sizeof(double)];
        std::memcpy(buf, &v, sizeof(double));
        out.write(buf, sizeof(double));
    }
    out.flush();
    require(out.good(), ErrorKind::io_error, "write failed on '" + path + "'");
}

struct RawBlock {
    GridDomain domain;
    std::vector<double> values;
    int flags = 0;
};

inline RawBlock read_raw_block(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorKind::io_error, "cannot open '" + path + "'");
    RawBlock b;
    int dim = 0;
    std::array<int, 2> cells{1, 1};
    std::array<double, 2> lo{0, 0}, hi{0, 0};
    in >> dim >> cells[0] >> cells[1] >> lo[0] >> lo[1] >> hi[0] >> hi[1] >> b.flags;
    require(in.good(), ErrorKind::io_error, "malformed raw block header in '" + path + "'");
    in.get(); // the newline closing the header
    if (dim == 1) cells[1] = 1;
    b.domain = GridDomain::box(dim, lo, hi, cells);
    b.values.resize(b.domain.cell_count());
    for (double& v : b.values) {
        char buf[sizeof(double)];
        in.read(buf, sizeof(double));
        require(in.good(), ErrorKind::io_error, "raw block truncated in '" + path + "'");
        std::memcpy(&v, buf, sizeof(double));
    }
    return b;
}

} // namespace detail

inline void write_field_raw(const std::string& path, const ScalarGridField& f) {
    detail::write_raw_block(path, f.domain, f.values, 0);
}

inline ScalarGridField read_field_raw(const std::string& path) {
    detail::RawBlock b = detail::read_raw_block(path);
    require(b.flags == 0, ErrorKind::io_error, "raw block is not a plain field");
    ScalarGridField f = ScalarGridField::zero(b.domain);
    f.values = std::move(b.values);
    return f;
}

inline void write_measure_raw(const std::string& path, const CapacitaryMeasure& mu) {
    std::vector<double> values = mu.density;
    for (std::size_t k = 0; k < values.size(); ++k)
        if (mu.infinite[k]) values[k] = inf;
    detail::write_raw_block(path, mu.domain, values, 1);
}

inline CapacitaryMeasure read_measure_raw(const std::string& path) {
    detail::RawBlock b = detail::read_raw_block(path);
    require(b.flags == 1, ErrorKind::io_error, "raw block is not a measure");
    CapacitaryMeasure mu = CapacitaryMeasure::zero(b.domain);
    for (int j = 0; j < b.domain.cells[1]; ++j)
        for (int i = 0; i < b.domain.cells[0]; ++i) {
            std::size_t k = b.domain.index(i, j);
            if (b.domain.on_ring(i, j)) continue; // ring stays at infinity
            mu.set(i, j, b.values[k]); // +inf round-trips through set()
        }
    return mu;
}

// ---------------------------------------------------------------------------
// trajectory exports

/// Measure flow series: n, t, J, step_distance, metric_derivative,
/// energy_residual, slope_estimate. The slope estimate is the one-sided
/// difference quotient (J_{n-1} - J_n)+ / step_distance along the flow.
inline std::string trajectory_csv(const FlowTrajectory& traj) {
    std::ostringstream out;
    out << "n,t,J,step_distance,metric_derivative,energy_residual,slope_estimate\n";
    for (std::size_t n = 0; n < traj.times.size(); ++n) {
        double dist = n == 0 ? 0.0 : traj.step_distances[n - 1];
        double met = n == 0 ? 0.0 : dist / traj.epsilon;
        double res = n == 0 ? 0.0 : traj.energy_residuals[n - 1];
        double slope = 0.0;
        if (n > 0 && dist > 0)
            slope = std::max(0.0, traj.values[n - 1] - traj.values[n]) / dist;
        out << n << ',' << format_double(traj.times[n]) << ',' << format_double(traj.values[n])
            << ',' << format_double(dist) << ',' << format_double(met) << ','
            << format_double(res) << ',' << format_double(slope) << '\n';
    }
    return out.str();
}

/// Shape flow series: n, t, lambda_1..lambda_k, volume, perimeter,
/// step_sym_diff, objective.
inline std::string shape_trajectory_csv(const ShapeTrajectory& traj) {
    std::size_t k = traj.lambdas.empty() ? 0 : traj.lambdas.front().size();
    std::ostringstream out;
    out << "n,t";
    for (std::size_t q = 1; q <= k; ++q) out << ",lambda" << q;
    out << ",volume,perimeter,step_sym_diff,objective\n";
    for (std::size_t n = 0; n < traj.times.size(); ++n) {
        out << n << ',' << format_double(traj.times[n]);
        for (std::size_t q = 0; q < k; ++q)
            out << ',' << (n < traj.lambdas.size() ? format_double(traj.lambdas[n][q]) : "");
        double sd = n == 0 ? 0.0 : traj.step_sym_diff[n - 1];
        out << ',' << format_double(traj.volumes[n]) << ',' << format_double(traj.perimeters[n])
            << ',' << format_double(sd) << ',' << format_double(traj.values[n]) << '\n';
    }
    return out.str();
}

inline ordered_json trajectory_to_json(const FlowTrajectory& traj) {
    ordered_json j;
    j["epsilon"] = traj.epsilon;
    j["steps"] = traj.steps();
    j["times"] = traj.times;
    j["values"] = traj.values;
    j["step_distances"] = traj.step_distances;
    j["energy_residuals"] = traj.energy_residuals;
    j["completed"] = traj.completed;
    if (!traj.completed) j["failure"] = traj.failure;
    return j;
}

inline ordered_json shape_trajectory_to_json(const ShapeTrajectory& traj) {
    ordered_json j;
    j["strategy"] = strategy_name(traj.strategy);
    j["epsilon"] = traj.epsilon;
    j["steps"] = traj.steps();
    j["times"] = traj.times;
    j["values"] = traj.values;
    if (!traj.lambda1.empty()) j["lambda1"] = traj.lambda1;
    j["volumes"] = traj.volumes;
    j["perimeters"] = traj.perimeters;
    j["components"] = traj.components;
    j["step_sym_diff"] = traj.step_sym_diff;
    if (!traj.radii.empty()) j["radii"] = traj.radii;
    if (traj.strategy == ShapeFlowStrategy::hausdorff) {
        j["erosion_radii"] = traj.erosion_radii;
        j["f_of_t"] = traj.f_of_t;
    }
    j["discontinuity_times"] = traj.discontinuity_times;
    j["lambda_regression_times"] = traj.lambda_regression_times;
    ordered_json inv;
    inv["nested_chain"] = traj.nested_chain;
    if (traj.strategy != ShapeFlowStrategy::hausdorff)
        inv["components_monotone"] = traj.components_monotone;
    if (traj.perimeter_superset_note) inv["perimeter_superset_note"] = true;
    j["invariants"] = inv;
    j["completed"] = traj.completed;
    if (!traj.completed) j["failure"] = traj.failure;
    return j;
}

} // namespace shapeflow
