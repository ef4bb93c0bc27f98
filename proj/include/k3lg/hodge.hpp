#pragma once

#include <optional>
#include <string>
#include <vector>

#include "k3lg/error.hpp"
#include "k3lg/matrix.hpp"
#include "k3lg/numberfield.hpp"
#include "k3lg/quadform.hpp"

namespace k3lg {

/// Period of a weight-2 structure: either exact coordinates x + sqrt(-d) y over
/// a real field K0, or rational x + i y with a tolerance.
struct PeriodVector {
    bool exact = true;

    // exact mode
    RealField field = RealField::rationals();
    FieldElem d = fe_const(Rat(1));
    std::vector<FieldElem> x, y;

    // approx mode
    VecQ xq, yq;
    Rat tau = Rat(1, Int("1000000000000"));

    std::size_t dim() const { return exact ? x.size() : xq.size(); }
};

inline PeriodVector make_exact_period(RealField field, FieldElem d, std::vector<FieldElem> x,
                                      std::vector<FieldElem> y) {
    require(x.size() == y.size(), errc::dimension_mismatch, "period components differ in length");
    PeriodVector p;
    p.exact = true;
    p.field = std::move(field);
    p.d = reduce(p.field, d);
    require(!poly_is_zero(p.d), errc::invalid_input, "discriminant d must be nonzero");
    for (auto& e : x) e = reduce(p.field, e);
    for (auto& e : y) e = reduce(p.field, e);
    p.x = std::move(x);
    p.y = std::move(y);
    return p;
}

inline PeriodVector make_approx_period(VecQ x, VecQ y, const Rat& tau) {
    require(x.size() == y.size(), errc::dimension_mismatch, "period components differ in length");
    require(tau >= 0, errc::invalid_input, "tolerance must be nonnegative");
    PeriodVector p;
    p.exact = false;
    p.xq = std::move(x);
    p.yq = std::move(y);
    p.tau = tau;
    return p;
}

struct K3TypeReport {
    bool signature_ok = false;
    bool isotropy_ok = false;
    bool positivity_ok = false;
    MatQ algebraic_kernel; ///< rows span the rational classes orthogonal to the period
    bool irreducible = false;
    long rho_implied = 0;
    std::vector<std::string> warnings;
};

namespace detail {

/// Rational coordinate rows of the period components (one per K0 basis power).
inline MatQ period_coordinate_rows(const PeriodVector& p) {
    std::size_t n = p.dim();
    if (!p.exact) {
        MatQ rows(2, n);
        rows.set_row(0, p.xq);
        rows.set_row(1, p.yq);
        return rows;
    }
    std::size_t deg = static_cast<std::size_t>(p.field.degree());
    MatQ rows(2 * deg, n);
    for (std::size_t t = 0; t < deg; ++t)
        for (std::size_t j = 0; j < n; ++j) {
            rows(t, j) = t < p.x[j].size() ? p.x[j][t] : Rat(0);
            rows(deg + t, j) = t < p.y[j].size() ? p.y[j][t] : Rat(0);
        }
    return rows;
}

inline FieldElem bilinear(const RealField& k, const MatQ& g, const std::vector<FieldElem>& u,
                          const std::vector<FieldElem>& v) {
    FieldElem s;
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (poly_is_zero(u[i])) continue;
        for (std::size_t j = 0; j < v.size(); ++j) {
            if (poly_is_zero(v[j]) || g(i, j) == 0) continue;
            s = fe_add(k, s, fe_scale(k, fe_mul(k, u[i], v[j]), g(i, j)));
        }
    }
    return s;
}

/// Greedy independent subset of the rows, each primitivized.
inline MatQ primitive_row_basis(const MatQ& rows) {
    std::vector<VecQ> picked;
    MatQ probe(0, rows.cols());
    for (std::size_t r = 0; r < rows.rows(); ++r) {
        if (is_zero(rows.row(r))) continue;
        MatQ test(picked.size() + 1, rows.cols());
        for (std::size_t i = 0; i < picked.size(); ++i) test.set_row(i, picked[i]);
        test.set_row(picked.size(), rows.row(r));
        if (rank(test) == picked.size() + 1) picked.push_back(to_rational(primitive_row(rows.row(r))));
    }
    MatQ out(picked.size(), rows.cols());
    for (std::size_t i = 0; i < picked.size(); ++i) out.set_row(i, picked[i]);
    return out;
}

} // namespace detail

/// Checks the K3-type conditions for the period against the space: signature
/// (2, n-2), isotropy and positivity of the period, and computes the rational
/// algebraic kernel.
inline K3TypeReport validate_k3_type(const QuadSpace& v, const PeriodVector& omega) {
    const std::size_t n = v.dim();
    require(omega.dim() == n, errc::dimension_mismatch, "period length != space dimension");

    K3TypeReport rep;
    auto sig = signature(v);
    if (sig.first != 2 || sig.second != static_cast<long>(n) - 2)
        fail(errc::signature_error, "signature (" + std::to_string(sig.first) + "," +
                                        std::to_string(sig.second) + ") is not (2," +
                                        std::to_string(n - 2) + ")");
    rep.signature_ok = true;

    if (omega.exact) {
        const RealField& k = omega.field;
        FieldElem sxx = detail::bilinear(k, v.gram, omega.x, omega.x);
        FieldElem syy = detail::bilinear(k, v.gram, omega.y, omega.y);
        FieldElem sxy = detail::bilinear(k, v.gram, omega.x, omega.y);
        FieldElem dyy = fe_mul(k, omega.d, syy);
        rep.isotropy_ok = poly_is_zero(reduce(k, poly_sub(sxx, dyy))) &&
                          poly_is_zero(reduce(k, sxy));
        rep.positivity_ok = eval_sign(k, poly_add(sxx, dyy)) > 0;
        if (eval_sign(k, omega.d) <= 0)
            rep.warnings.push_back("discriminant d is not positive at the designated embedding");
    } else {
        Rat sxx = gram_eval(v.gram, omega.xq, omega.xq);
        Rat syy = gram_eval(v.gram, omega.yq, omega.yq);
        Rat sxy = gram_eval(v.gram, omega.xq, omega.yq);
        auto absr = [](const Rat& r) { return r < 0 ? Rat(-r) : r; };
        rep.isotropy_ok = absr(sxx - syy) <= omega.tau && absr(sxy) <= omega.tau;
        rep.positivity_ok = sxx + syy > 0;
    }

    MatQ coords = detail::period_coordinate_rows(omega);
    if (rank(coords) < 2)
        rep.warnings.push_back("period spans a rational line; the (2,0) part would be rational");
    MatQ conditions = coords * v.gram;
    MatQ kernel = right_kernel(conditions);
    rep.algebraic_kernel = detail::primitive_row_basis(kernel);
    rep.irreducible = rep.algebraic_kernel.rows() == 0;
    rep.rho_implied = static_cast<long>(rep.algebraic_kernel.rows());
    return rep;
}

struct SplitResult {
    MatQ algebraic_basis;      ///< rows in V coordinates; may be empty
    MatQ algebraic_gram;       ///< gram of the algebraic part
    MatQ transcendental_basis; ///< rows in V coordinates
    MatQ transcendental_gram;
    PeriodVector period; ///< the period rewritten in the transcendental basis
    K3TypeReport report;
};

/// Orthogonal splitting V = algebraic + transcendental with the period carried
/// into the transcendental coordinates.
inline SplitResult transcendental_split(const QuadSpace& v, const PeriodVector& omega) {
    SplitResult out;
    out.report = validate_k3_type(v, omega);
    require(out.report.isotropy_ok && out.report.positivity_ok, errc::invalid_input,
            "period fails the K3-type conditions");

    MatQ coords = detail::period_coordinate_rows(omega);
    out.transcendental_basis = detail::primitive_row_basis(coords);
    out.algebraic_basis = out.report.algebraic_kernel;
    const std::size_t rt = out.transcendental_basis.rows();
    const std::size_t ra = out.algebraic_basis.rows();
    require(rt + ra == v.dim(), errc::degenerate_split, "kernel and period span overlap");

    out.transcendental_gram =
        out.transcendental_basis * v.gram * out.transcendental_basis.transpose();
    if (det(out.transcendental_gram) == 0)
        fail(errc::degenerate_split, "transcendental part is degenerate");
    if (ra > 0) {
        out.algebraic_gram = out.algebraic_basis * v.gram * out.algebraic_basis.transpose();
        if (det(out.algebraic_gram) == 0)
            fail(errc::degenerate_split, "algebraic part is degenerate");
        MatQ cross = out.algebraic_basis * v.gram * out.transcendental_basis.transpose();
        for (std::size_t i = 0; i < cross.rows(); ++i)
            for (std::size_t j = 0; j < cross.cols(); ++j)
                require(cross(i, j) == 0, errc::invariant_violation, "split is not orthogonal");
    } else {
        out.algebraic_gram = MatQ(0, 0);
    }

    // rewrite the period in the transcendental basis, coordinate by coordinate
    PeriodVector p = omega;
    if (omega.exact) {
        std::size_t deg = static_cast<std::size_t>(omega.field.degree());
        std::vector<FieldElem> nx(rt), ny(rt);
        for (std::size_t t = 0; t < deg; ++t) {
            VecQ cx(v.dim()), cy(v.dim());
            for (std::size_t j = 0; j < v.dim(); ++j) {
                cx[j] = t < omega.x[j].size() ? omega.x[j][t] : Rat(0);
                cy[j] = t < omega.y[j].size() ? omega.y[j][t] : Rat(0);
            }
            auto sx = solve_left(out.transcendental_basis, cx);
            auto sy = solve_left(out.transcendental_basis, cy);
            require(sx && sy, errc::invariant_violation, "period does not lie in its own span");
            for (std::size_t j = 0; j < rt; ++j) {
                if ((*sx)[j] != 0) {
                    if (nx[j].size() <= t) nx[j].resize(t + 1, Rat(0));
                    nx[j][t] = (*sx)[j];
                }
                if ((*sy)[j] != 0) {
                    if (ny[j].size() <= t) ny[j].resize(t + 1, Rat(0));
                    ny[j][t] = (*sy)[j];
                }
            }
        }
        p.x = std::move(nx);
        p.y = std::move(ny);
    } else {
        auto sx = solve_left(out.transcendental_basis, omega.xq);
        auto sy = solve_left(out.transcendental_basis, omega.yq);
        require(sx && sy, errc::invariant_violation, "period does not lie in its own span");
        p.xq = *sx;
        p.yq = *sy;
    }
    out.period = std::move(p);

    // the transported period still satisfies the K3 conditions
    if (omega.exact) {
        const RealField& k = out.period.field;
        FieldElem sxx = detail::bilinear(k, out.transcendental_gram, out.period.x, out.period.x);
        FieldElem syy = detail::bilinear(k, out.transcendental_gram, out.period.y, out.period.y);
        FieldElem sxy = detail::bilinear(k, out.transcendental_gram, out.period.x, out.period.y);
        require(poly_is_zero(reduce(k, poly_sub(sxx, fe_mul(k, out.period.d, syy)))) &&
                    poly_is_zero(reduce(k, sxy)),
                errc::invariant_violation, "transported period lost isotropy");
    }
    return out;
}

} // namespace k3lg
