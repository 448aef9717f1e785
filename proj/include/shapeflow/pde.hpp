#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "shapeflow/measure.hpp"

namespace shapeflow {

// ---------------------------------------------------------------------------
// full-grid stencil, used by constraint checks and the measure/torsion map

/// y = (-Delta_h x) at every non-ring cell, treating values beyond a non-ring
/// neighbor as given (ring cells contribute their stored value, normally 0).
/// Ring cells of y are set to 0.
inline void apply_neg_laplacian_into(const ScalarGridField& x, ScalarGridField& y) {
    const GridDomain& d = x.domain;
    y.domain = d;
    y.values.assign(d.cell_count(), 0.0);
    double inv_h2 = 1.0 / (d.h * d.h);
    int stencil = d.dim == 2 ? 4 : 2;
    for (int j = 0; j < d.cells[1]; ++j)
        for (int i = 0; i < d.cells[0]; ++i) {
            if (d.on_ring(i, j)) continue;
            double c = stencil * x.at(i, j);
            c -= x.at(i - 1, j) + x.at(i + 1, j);
            if (d.dim == 2) c -= x.at(i, j - 1) + x.at(i, j + 1);
            y.at(i, j) = c * inv_h2;
        }
}

inline ScalarGridField apply_neg_laplacian(const ScalarGridField& x) {
    ScalarGridField y;
    apply_neg_laplacian_into(x, y);
    return y;
}

/// Membership tolerance for the constraint set {w >= 0, 1 + Delta_h w >= 0}.
constexpr double default_eps_x = 1e-8;

inline bool torsion_invariants_hold(const TorsionField& w, double eps = default_eps_x,
                                    std::string* why = nullptr) {
    const GridDomain& d = w.domain;
    for (int j = 0; j < d.cells[1]; ++j)
        for (int i = 0; i < d.cells[0]; ++i)
            if (d.on_ring(i, j) && w.at(i, j) != 0.0) {
                if (why) *why = "nonzero value on the padding ring";
                return false;
            }
    for (double v : w.values)
        if (!(v >= -eps) || std::isnan(v)) {
            if (why) *why = "negative or NaN value";
            return false;
        }
    ScalarGridField lw = apply_neg_laplacian(w.as_field());
    for (std::size_t k = 0; k < lw.values.size(); ++k)
        if (lw.values[k] > 1.0 + eps) {
            if (why) *why = "1 + Delta_h w < 0 at an interior cell";
            return false;
        }
    return true;
}

inline void check_torsion_invariants(const TorsionField& w, double eps = default_eps_x) {
    std::string why;
    // evaluate before building the message: argument order is unspecified
    bool ok = torsion_invariants_hold(w, eps, &why);
    require(ok, ErrorKind::invariant_violation, "field is not an admissible torsion state: " + why);
}

// ---------------------------------------------------------------------------
// masked operator (-Delta_h + mu) over the cells where mu is finite

/// Degrees of freedom are the finite-mu cells; infinite-mu cells and the ring
/// are eliminated (value pinned to 0). Symmetric positive definite.
class MaskedOperator {
  public:
    explicit MaskedOperator(const CapacitaryMeasure& mu) : domain_(mu.domain) {
        mu.validate(); // ring at infinity keeps neighbor indexing in bounds below
        const GridDomain& d = domain_;
        dof_.assign(d.cell_count(), -1);
        for (std::size_t k = 0; k < d.cell_count(); ++k)
            if (!mu.infinite[k]) {
                dof_[k] = static_cast<std::int64_t>(cell_.size());
                cell_.push_back(k);
            }
        double inv_h2 = 1.0 / (d.h * d.h);
        int stencil = d.dim == 2 ? 4 : 2;
        diag_.resize(cell_.size());
        for (std::size_t t = 0; t < cell_.size(); ++t)
            diag_[t] = stencil * inv_h2 + mu.density[cell_[t]];
        inv_h2_ = inv_h2;
    }

    explicit MaskedOperator(const ShapeMask& m) : MaskedOperator(CapacitaryMeasure::from_mask(m)) {}

    const GridDomain& domain() const { return domain_; }
    std::size_t size() const { return cell_.size(); }
    const std::vector<std::size_t>& cells() const { return cell_; }
    const std::vector<double>& diagonal() const { return diag_; }

    void apply(const std::vector<double>& x, std::vector<double>& y) const {
        const GridDomain& d = domain_;
        const int n0 = d.cells[0];
        y.resize(cell_.size());
        for (std::size_t t = 0; t < cell_.size(); ++t) {
            std::size_t k = cell_[t];
            double s = diag_[t] * x[t];
            // non-ring cells always have all four neighbors in the array
            std::int64_t q;
            if ((q = dof_[k - 1]) >= 0) s -= inv_h2_ * x[q];
            if ((q = dof_[k + 1]) >= 0) s -= inv_h2_ * x[q];
            if (d.dim == 2) {
                if ((q = dof_[k - n0]) >= 0) s -= inv_h2_ * x[q];
                if ((q = dof_[k + n0]) >= 0) s -= inv_h2_ * x[q];
            }
            y[t] = s;
        }
    }

    std::vector<double> restrict_field(const ScalarGridField& f) const {
        require_same_domain(f.domain, domain_);
        std::vector<double> x(cell_.size());
        for (std::size_t t = 0; t < cell_.size(); ++t) x[t] = f.values[cell_[t]];
        return x;
    }

    ScalarGridField extend(const std::vector<double>& x) const {
        ScalarGridField f = ScalarGridField::zero(domain_);
        for (std::size_t t = 0; t < cell_.size(); ++t) f.values[cell_[t]] = x[t];
        return f;
    }

  private:
    GridDomain domain_;
    std::vector<std::int64_t> dof_;
    std::vector<std::size_t> cell_;
    std::vector<double> diag_;
    double inv_h2_ = 0;
};

// ---------------------------------------------------------------------------
// conjugate gradient

struct CgResult {
    int iterations = 0;
    double relative_residual = 0;
};

struct CgOptions {
    double tol = 1e-10;  // relative to the rhs norm
    int max_iterations = 10000;
    bool jacobi = true;
};

namespace detail {

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s;
}

} // namespace detail

/// Preconditioned CG for an SPD operator; x holds the initial guess on entry.
template <class Op>
CgResult conjugate_gradient(const Op& A, const std::vector<double>& b, std::vector<double>& x,
                            const CgOptions& opt = {}) {
    const std::size_t n = b.size();
    x.resize(n, 0.0);
    std::vector<double> r(n), z(n), p(n), Ap(n);
    A.apply(x, Ap);
    for (std::size_t k = 0; k < n; ++k) r[k] = b[k] - Ap[k];
    double bnorm = std::sqrt(detail::dot(b, b));
    if (bnorm == 0) {
        std::fill(x.begin(), x.end(), 0.0);
        return {0, 0.0};
    }
    const std::vector<double>* diag = nullptr;
    if (opt.jacobi) diag = &A.diagonal();
    auto precondition = [&](const std::vector<double>& in, std::vector<double>& out) {
        if (diag) {
            for (std::size_t k = 0; k < n; ++k) out[k] = in[k] / (*diag)[k];
        } else {
            out = in;
        }
    };
    precondition(r, z);
    p = z;
    double rz = detail::dot(r, z);
    double rnorm = std::sqrt(detail::dot(r, r));
    int it = 0;
    while (rnorm / bnorm > opt.tol) {
        require(it < opt.max_iterations, ErrorKind::solver_failure,
                "conjugate gradient hit the iteration limit, residual " +
                    std::to_string(rnorm / bnorm));
        A.apply(p, Ap);
        double alpha = rz / detail::dot(p, Ap);
        for (std::size_t k = 0; k < n; ++k) {
            x[k] += alpha * p[k];
            r[k] -= alpha * Ap[k];
        }
        precondition(r, z);
        double rz_new = detail::dot(r, z);
        double beta = rz_new / rz;
        rz = rz_new;
        for (std::size_t k = 0; k < n; ++k) p[k] = z[k] + beta * p[k];
        rnorm = std::sqrt(detail::dot(r, r));
        ++it;
    }
    return {it, rnorm / bnorm};
}

// ---------------------------------------------------------------------------
// Dirichlet solves

struct DirichletProblemSpec {
    CapacitaryMeasure coefficient;
    ScalarGridField rhs;
    double tolerance = 1e-10;
    int max_iterations = 10000;

    static DirichletProblemSpec with_constant_rhs(const CapacitaryMeasure& mu, double f) {
        DirichletProblemSpec s;
        s.coefficient = mu;
        s.rhs = ScalarGridField::constant(mu.domain, f);
        return s;
    }
};

inline ScalarGridField solve_dirichlet(const DirichletProblemSpec& spec) {
    require(spec.tolerance > 0, ErrorKind::invalid_config, "solver tolerance must be positive");
    spec.coefficient.validate();
    for (double v : spec.rhs.values)
        require(std::isfinite(v), ErrorKind::invalid_config, "right-hand side must be finite");
    MaskedOperator A(spec.coefficient);
    if (A.size() == 0) return ScalarGridField::zero(spec.coefficient.domain);
    std::vector<double> b = A.restrict_field(spec.rhs);
    std::vector<double> x(b.size(), 0.0);
    CgOptions opt;
    opt.tol = spec.tolerance;
    opt.max_iterations = spec.max_iterations;
    conjugate_gradient(A, b, x, opt);
    return A.extend(x);
}

inline TorsionField torsion(const CapacitaryMeasure& mu, double tol = 1e-10) {
    DirichletProblemSpec s = DirichletProblemSpec::with_constant_rhs(mu, 1.0);
    s.tolerance = tol;
    return TorsionField::from_field(solve_dirichlet(s));
}

inline TorsionField torsion(const ShapeMask& m, double tol = 1e-10) {
    return torsion(CapacitaryMeasure::from_mask(m), tol);
}

// ---------------------------------------------------------------------------
// eigenvalue solver: deflated inverse power iteration

struct EigenResult {
    std::vector<double> eigenvalues;          // ascending
    std::vector<ScalarGridField> eigenfunctions; // L2(D)-normalized
    std::vector<double> residuals;            // ||A u - lambda u||_{L2(D)}
};

struct EigenOptions {
    double tolerance = 1e-8;   // residual target, scaled by max(1, lambda)
    int max_outer = 2000;
    double cg_tol = 1e-12;
    int cg_max_iterations = 20000;
};

namespace detail {

struct EigenWork {
    const MaskedOperator& A;
    double cell_measure;

    double dot_l2(const std::vector<double>& a, const std::vector<double>& b) const {
        return dot(a, b) * cell_measure;
    }
    double norm_l2(const std::vector<double>& a) const { return std::sqrt(dot_l2(a, a)); }
    void orthogonalize(std::vector<double>& v, const std::vector<std::vector<double>>& basis) const {
        for (const auto& u : basis) {
            double c = dot_l2(v, u);
            for (std::size_t k = 0; k < v.size(); ++k) v[k] -= c * u[k];
        }
    }
};

} // namespace detail

/// k smallest eigenpairs of (-Delta_h + mu) on the finite-mu cells. An
/// optional warm-start guess (for the ground state) speeds up flows that
/// re-solve after small mask edits.
inline EigenResult eigenvalues_of(const CapacitaryMeasure& mu, int k,
                                  const EigenOptions& opt = {},
                                  const ScalarGridField* warm = nullptr) {
    require(k >= 1, ErrorKind::invalid_config, "need k >= 1 eigenvalues");
    MaskedOperator A(mu);
    require(A.size() > static_cast<std::size_t>(4 * k), ErrorKind::invalid_config,
            "mask too small for the requested eigenvalue count");
    detail::EigenWork W{A, mu.domain.cell_measure()};

    std::vector<std::vector<double>> basis;
    std::vector<double> lambdas, residuals;
    std::mt19937 rng(12345);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);

    CgOptions cg;
    cg.tol = opt.cg_tol;
    cg.max_iterations = opt.cg_max_iterations;

    for (int m = 0; m < k; ++m) {
        std::vector<double> u(A.size());
        if (m == 0) {
            std::fill(u.begin(), u.end(), 1.0);
            if (warm) {
                std::vector<double> g = A.restrict_field(*warm);
                if (W.norm_l2(g) > 0) u = std::move(g);
            }
        } else {
            for (auto& v : u) v = unif(rng);
        }
        W.orthogonalize(u, basis);
        double nu = W.norm_l2(u);
        require(nu > 0, ErrorKind::solver_failure, "degenerate start vector in eigensolver");
        for (auto& v : u) v /= nu;

        std::vector<double> y = u, Au(A.size());
        double lambda = 0, res = inf;
        int it = 0;
        for (; it < opt.max_outer; ++it) {
            // warm start: current eigenvector estimate scaled by 1/lambda
            if (lambda > 0)
                for (std::size_t q = 0; q < y.size(); ++q) y[q] = u[q] / lambda;
            conjugate_gradient(A, u, y, cg);
            W.orthogonalize(y, basis);
            double ny = W.norm_l2(y);
            require(ny > 0, ErrorKind::solver_failure, "eigensolver iterate collapsed");
            for (std::size_t q = 0; q < y.size(); ++q) u[q] = y[q] / ny;
            A.apply(u, Au);
            lambda = W.dot_l2(u, Au);
            res = 0;
            for (std::size_t q = 0; q < u.size(); ++q) {
                double r = Au[q] - lambda * u[q];
                res += r * r;
            }
            res = std::sqrt(res * W.cell_measure);
            if (res <= opt.tolerance * std::max(1.0, lambda)) break;
        }
        require(res <= opt.tolerance * std::max(1.0, lambda), ErrorKind::solver_failure,
                "inverse iteration did not converge, residual " + std::to_string(res));
        basis.push_back(u);
        lambdas.push_back(lambda);
        residuals.push_back(res);
    }

    // ascending order (deflation normally yields it; sort defensively)
    std::vector<std::size_t> order(lambdas.size());
    for (std::size_t q = 0; q < order.size(); ++q) order[q] = q;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return lambdas[a] < lambdas[b]; });

    EigenResult out;
    for (std::size_t q : order) {
        std::vector<double> u = basis[q];
        if (out.eigenfunctions.empty()) {
            // sign-normalize the ground state: nonnegative by the discrete
            // maximum principle once the dominant entry is positive
            double extreme = 0;
            for (double v : u)
                if (std::abs(v) > std::abs(extreme)) extreme = v;
            if (extreme < 0)
                for (auto& v : u) v = -v;
        }
        out.eigenvalues.push_back(lambdas[q]);
        out.residuals.push_back(residuals[q]);
        out.eigenfunctions.push_back(A.extend(u));
    }
    return out;
}

inline EigenResult eigenvalues_of(const ShapeMask& m, int k, const EigenOptions& opt = {}) {
    require(m.count() > 0, ErrorKind::invalid_config, "eigenvalues of an empty mask");
    return eigenvalues_of(CapacitaryMeasure::from_mask(m), k, opt);
}

inline EigenResult principal_eigenpair(const ShapeMask& m, const EigenOptions& opt = {}) {
    return eigenvalues_of(m, 1, opt);
}

inline EigenResult principal_eigenpair(const CapacitaryMeasure& mu, const EigenOptions& opt = {}) {
    return eigenvalues_of(mu, 1, opt);
}

// ---------------------------------------------------------------------------
// boundary normal derivative (one-sided, per inside-outside face)

struct BoundaryFace {
    int i = 0, j = 0;              // inside cell
    int di = 0, dj = 0;            // outward face direction
    std::array<double, 2> position{0, 0}; // face center
    double value = 0;              // |u(inside)| / h
    double length = 0;             // h^{d-1}
};

inline std::vector<BoundaryFace> boundary_normal_derivative(const ScalarGridField& u,
                                                            const ShapeMask& m) {
    require_same_domain(u.domain, m.domain);
    const GridDomain& d = m.domain;
    std::vector<BoundaryFace> faces;
    const int di[4] = {1, -1, 0, 0};
    const int dj[4] = {0, 0, 1, -1};
    int nsides = d.dim == 2 ? 4 : 2;
    for (int j = 0; j < d.cells[1]; ++j)
        for (int i = 0; i < d.cells[0]; ++i) {
            if (!m.at(i, j)) continue;
            for (int q = 0; q < nsides; ++q) {
                int ni = i + di[q], nj = j + dj[q];
                bool nb_in = ni >= 0 && ni < d.cells[0] && nj >= 0 && nj < d.cells[1] &&
                             m.at(ni, nj);
                if (nb_in) continue;
                BoundaryFace f;
                f.i = i;
                f.j = j;
                f.di = di[q];
                f.dj = dj[q];
                auto c = d.cell_center(i, j);
                f.position = {c[0] + 0.5 * d.h * di[q],
                              d.dim == 2 ? c[1] + 0.5 * d.h * dj[q] : 0.0};
                f.value = std::abs(u.at(i, j)) / d.h;
                f.length = d.dim == 2 ? d.h : 1.0;
                faces.push_back(f);
            }
        }
    return faces;
}

/// Discrete Rayleigh quotient of u on the mask (Dirichlet form over L2 norm).
inline double rayleigh_quotient(const ScalarGridField& u, const ShapeMask& m) {
    require_same_domain(u.domain, m.domain);
    MaskedOperator A(m);
    std::vector<double> x = A.restrict_field(u), Ax;
    A.apply(x, Ax);
    double num = detail::dot(x, Ax);
    double den = detail::dot(x, x);
    require(den > 0, ErrorKind::invalid_config, "Rayleigh quotient of the zero field");
    return num / den;
}

} // namespace shapeflow
