#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "shapeflow/capmeasure.hpp"

namespace shapeflow {

/// Closed catalog of driving functionals. Flow routines rely on the
/// monotonicity and convexity metadata below, which arbitrary user code could
/// not certify; hence an enumeration, not a callback.
enum class FunctionalKind {
    zero,      // J = 0
    energy,    // J(w) = -c * integral(w)
    mass,      // J(w) = +c * integral(w)
    quadratic, // J(w) = (c/2) * integral(w^2)
    spectral,  // J = c * Phi(lambda_1..lambda_k) of the associated measure/set
    volume     // J(Omega) = c * |Omega|, set flows only
};

enum class SpectralForm { lambda1, lambda_k, sum_first_k };

struct FunctionalSpec {
    FunctionalKind kind = FunctionalKind::energy;
    double coefficient = 1.0;
    SpectralForm spectral_form = SpectralForm::lambda1;
    int spectral_k = 1;
    // set-flow penalties, ignored by measure flows
    double volume_penalty = 0.0;
    double perimeter_penalty = 0.0;
    // flip the overall sign; turns a decreasing-in-inclusion functional into an
    // increasing one for the complement-side flow. Set flows only.
    bool negate = false;

    static FunctionalSpec zero_functional() { return {FunctionalKind::zero, 0.0}; }
    static FunctionalSpec energy(double c = 1.0) { return {FunctionalKind::energy, c}; }
    static FunctionalSpec mass(double c = 1.0) { return {FunctionalKind::mass, c}; }
    static FunctionalSpec quadratic(double c = 1.0) { return {FunctionalKind::quadratic, c}; }
    static FunctionalSpec lambda1() {
        FunctionalSpec s;
        s.kind = FunctionalKind::spectral;
        s.spectral_form = SpectralForm::lambda1;
        s.spectral_k = 1;
        return s;
    }
    static FunctionalSpec spectral(SpectralForm form, int k, double c = 1.0) {
        require(k >= 1, ErrorKind::invalid_config, "spectral index must be >= 1");
        FunctionalSpec s;
        s.kind = FunctionalKind::spectral;
        s.coefficient = c;
        s.spectral_form = form;
        s.spectral_k = k;
        return s;
    }
    static FunctionalSpec volume(double c = 1.0) { return {FunctionalKind::volume, c}; }
    FunctionalSpec negated() const {
        FunctionalSpec s = *this;
        s.negate = !s.negate;
        return s;
    }

    void validate() const {
        require(std::isfinite(coefficient), ErrorKind::invalid_config,
                "functional coefficient must be finite");
        require(coefficient >= 0, ErrorKind::invalid_config,
                "functional coefficient must be nonnegative (sign is fixed by the kind)");
        require(spectral_k >= 1, ErrorKind::invalid_config, "spectral index must be >= 1");
        require(volume_penalty >= 0 && perimeter_penalty >= 0, ErrorKind::invalid_config,
                "penalty coefficients must be nonnegative");
    }

    /// True when the functional only drives set flows and has no meaning as a
    /// functional of the torsion state of a capacitary measure.
    bool set_flow_only() const { return kind == FunctionalKind::volume || negate; }

    /// w1 <= w2 implies J(w1) >= J(w2): the hypothesis under which measure
    /// flows are monotone. True for the energy (and trivially for zero);
    /// unknown for spectral kinds, so declared false.
    bool monotone_decreasing_in_w() const {
        if (negate) return kind == FunctionalKind::zero;
        return kind == FunctionalKind::energy || kind == FunctionalKind::zero;
    }

    /// Omega1 c= Omega2 implies F(Omega1) >= F(Omega2): the hypothesis of the
    /// inward set-flow scheme. Holds for eigenvalue functionals increasing in
    /// each lambda and for the torsional energy.
    bool monotone_decreasing_in_inclusion() const {
        switch (kind) {
            case FunctionalKind::zero:
                return true;
            case FunctionalKind::energy:
            case FunctionalKind::spectral:
                return !negate;
            case FunctionalKind::volume:
                return negate;
            case FunctionalKind::mass:
            case FunctionalKind::quadratic:
                return false;
        }
        return false;
    }

    /// Omega1 c= Omega2 implies F(Omega1) <= F(Omega2): the hypothesis of the
    /// complement-distance flow, which erodes the set.
    bool monotone_increasing_in_inclusion() const {
        switch (kind) {
            case FunctionalKind::zero:
                return true;
            case FunctionalKind::energy:
            case FunctionalKind::spectral:
                return negate;
            case FunctionalKind::volume:
                return !negate;
            case FunctionalKind::mass:
            case FunctionalKind::quadratic:
                return false;
        }
        return false;
    }

    bool has_declared_convexity() const {
        return kind != FunctionalKind::spectral && !set_flow_only();
    }

    /// Geodesic convexity modulus along linear-in-w geodesics.
    double convexity_modulus() const {
        require(!set_flow_only(), ErrorKind::invalid_config,
                "set-flow functionals carry no torsion-side convexity modulus");
        switch (kind) {
            case FunctionalKind::zero:
            case FunctionalKind::energy:
            case FunctionalKind::mass:
                return 0.0;
            case FunctionalKind::quadratic:
                return coefficient;
            case FunctionalKind::spectral:
                fail(ErrorKind::invalid_config,
                     "spectral functionals carry no declared convexity modulus");
            case FunctionalKind::volume:
                break;
        }
        return 0.0;
    }

    std::string kind_name() const {
        std::string base = "?";
        switch (kind) {
            case FunctionalKind::zero: base = "zero"; break;
            case FunctionalKind::energy: base = "energy"; break;
            case FunctionalKind::mass: base = "mass"; break;
            case FunctionalKind::quadratic: base = "quadratic"; break;
            case FunctionalKind::spectral: base = "spectral"; break;
            case FunctionalKind::volume: base = "volume"; break;
        }
        return negate ? "neg_" + base : base;
    }
};

inline double spectral_combine(const FunctionalSpec& spec, const std::vector<double>& lambdas) {
    switch (spec.spectral_form) {
        case SpectralForm::lambda1:
            return lambdas.front();
        case SpectralForm::lambda_k:
            return lambdas.at(spec.spectral_k - 1);
        case SpectralForm::sum_first_k: {
            double s = 0;
            for (int q = 0; q < spec.spectral_k; ++q) s += lambdas.at(q);
            return s;
        }
    }
    return 0;
}

inline int spectral_count(const FunctionalSpec& spec) {
    return spec.spectral_form == SpectralForm::lambda1 ? 1 : spec.spectral_k;
}

/// Value of the functional at a torsion state (measure flows).
inline double evaluate_measure_functional(const FunctionalSpec& spec, const TorsionField& w,
                                          const EigenOptions& eig = {}) {
    spec.validate();
    require(!spec.set_flow_only(), ErrorKind::invalid_config,
            "functional '" + spec.kind_name() + "' drives set flows only");
    switch (spec.kind) {
        case FunctionalKind::zero:
            return 0.0;
        case FunctionalKind::energy:
            return -spec.coefficient * w.as_field().integral();
        case FunctionalKind::mass:
            return spec.coefficient * w.as_field().integral();
        case FunctionalKind::quadratic: {
            double s = 0;
            for (double v : w.values) s += v * v;
            return 0.5 * spec.coefficient * s * w.domain.cell_measure();
        }
        case FunctionalKind::spectral: {
            CapacitaryMeasure mu = measure_of_torsion(w);
            EigenResult er = eigenvalues_of(mu, spectral_count(spec), eig);
            return spec.coefficient * spectral_combine(spec, er.eigenvalues);
        }
        case FunctionalKind::volume:
            break; // rejected above
    }
    return 0.0;
}

/// Gradient in the flat L2(D) metric. Exact for the smooth integral kinds.
/// For spectral kinds the eigenvalue perturbation formula gives
///   d lambda = integral(u^2 d mu'), with mu_w = (1 - L w)/w,
/// so the gradient is -(L + mu)(u^2/w) on {w > floor} and is set to 0 on the
/// numerically-vanishing set (where u vanishes as well); flows treat it as a
/// descent direction only and re-check objectives before accepting steps.
inline ScalarGridField measure_functional_gradient(const FunctionalSpec& spec,
                                                   const TorsionField& w,
                                                   const EigenOptions& eig = {}) {
    spec.validate();
    require(!spec.set_flow_only(), ErrorKind::invalid_config,
            "functional '" + spec.kind_name() + "' drives set flows only");
    const GridDomain& d = w.domain;
    ScalarGridField g = ScalarGridField::zero(d);
    switch (spec.kind) {
        case FunctionalKind::zero:
            break;
        case FunctionalKind::energy:
            for (std::size_t k = 0; k < g.values.size(); ++k) g.values[k] = -spec.coefficient;
            break;
        case FunctionalKind::mass:
            for (std::size_t k = 0; k < g.values.size(); ++k) g.values[k] = spec.coefficient;
            break;
        case FunctionalKind::quadratic:
            for (std::size_t k = 0; k < g.values.size(); ++k)
                g.values[k] = spec.coefficient * w.values[k];
            break;
        case FunctionalKind::spectral: {
            CapacitaryMeasure mu = measure_of_torsion(w);
            int kc = spectral_count(spec);
            EigenResult er = eigenvalues_of(mu, kc, eig);
            double floor = default_w_floor_scale * w.max();
            auto add_pair_gradient = [&](const ScalarGridField& u, double scale) {
                ScalarGridField ratio = ScalarGridField::zero(d);
                for (std::size_t k = 0; k < ratio.values.size(); ++k)
                    if (w.values[k] > floor)
                        ratio.values[k] = u.values[k] * u.values[k] / w.values[k];
                ScalarGridField lr = apply_neg_laplacian(ratio);
                for (std::size_t k = 0; k < g.values.size(); ++k) {
                    if (w.values[k] <= floor) continue;
                    double muk = mu.infinite[k] ? 0.0 : mu.density[k];
                    g.values[k] -= scale * (lr.values[k] + muk * ratio.values[k]);
                }
            };
            if (spec.spectral_form == SpectralForm::lambda1) {
                add_pair_gradient(er.eigenfunctions[0], spec.coefficient);
            } else if (spec.spectral_form == SpectralForm::lambda_k) {
                add_pair_gradient(er.eigenfunctions[kc - 1], spec.coefficient);
            } else {
                for (int q = 0; q < kc; ++q)
                    add_pair_gradient(er.eigenfunctions[q], spec.coefficient);
            }
            break;
        }
        case FunctionalKind::volume:
            break; // rejected above
    }
    // ring cells never move
    for (int j = 0; j < d.cells[1]; ++j)
        for (int i = 0; i < d.cells[0]; ++i)
            if (d.on_ring(i, j)) g.at(i, j) = 0;
    return g;
}

// ---------------------------------------------------------------------------
// geodesic convexity probe

struct ConvexityReport {
    std::vector<double> ts;                  // sample parameters, endpoints included
    std::vector<double> values;              // J along the geodesic, direct in w
    std::vector<double> values_via_measure;  // J after a measure round trip
    double endpoint_distance = 0;            // d_gamma(mu0, mu1)
    double lambda_max = 0;     // largest modulus consistent with the samples
    double convexity_defect = 0; // max of J(w_t) minus the chord (0-convexity defect)
    double bijection_defect = 0; // max |direct - round trip|
};

/// Samples J along the geodesic between two measures and reports the observed
/// convexity modulus. Never throws on a violated inequality: the numbers are
/// the result.
inline ConvexityReport convexity_probe(const FunctionalSpec& spec, const CapacitaryMeasure& mu0,
                                       const CapacitaryMeasure& mu1, int samples,
                                       const EigenOptions& eig = {}) {
    require(samples >= 1, ErrorKind::invalid_config, "need at least one interior sample");
    require_same_domain(mu0.domain, mu1.domain);
    TorsionField w0 = torsion(mu0);
    TorsionField w1 = torsion(mu1);
    ConvexityReport rep;
    rep.endpoint_distance = l2_distance(w0, w1);

    for (int q = 0; q <= samples + 1; ++q) {
        double t = static_cast<double>(q) / (samples + 1);
        TorsionField wt = interpolate_torsion(w0, w1, t);
        double direct = evaluate_measure_functional(spec, wt, eig);
        // round trip through the measure side: mu_t -> torsion -> J
        TorsionField wt_round = torsion(measure_of_torsion(wt));
        double via = evaluate_measure_functional(spec, wt_round, eig);
        rep.ts.push_back(t);
        rep.values.push_back(direct);
        rep.values_via_measure.push_back(via);
        rep.bijection_defect = std::max(rep.bijection_defect, std::abs(direct - via));
    }

    double f0 = rep.values.front(), f1 = rep.values.back();
    double d2 = rep.endpoint_distance * rep.endpoint_distance;
    rep.lambda_max = inf;
    rep.convexity_defect = 0;
    for (std::size_t q = 1; q + 1 < rep.ts.size(); ++q) {
        double t = rep.ts[q];
        double chord = (1 - t) * f0 + t * f1;
        double gap = chord - rep.values[q]; // >= (lambda/2) t(1-t) d^2 for lambda-convexity
        rep.convexity_defect = std::max(rep.convexity_defect, -gap);
        if (d2 > 0) rep.lambda_max = std::min(rep.lambda_max, 2 * gap / (t * (1 - t) * d2));
    }
    return rep;
}

} // namespace shapeflow
