#pragma once

#include <optional>
#include <vector>

#include "k3lg/error.hpp"
#include "k3lg/rational.hpp"

namespace k3lg {

/// Dense univariate polynomial over Q, coefficients in increasing degree.
using Poly = std::vector<Rat>;

inline void poly_trim(Poly& p) {
    while (!p.empty() && p.back() == 0) p.pop_back();
}

inline long poly_deg(const Poly& p) { return static_cast<long>(p.size()) - 1; }

inline bool poly_is_zero(const Poly& p) { return p.empty(); }

inline Poly poly_add(const Poly& a, const Poly& b) {
    Poly c(std::max(a.size(), b.size()), Rat(0));
    for (std::size_t i = 0; i < a.size(); ++i) c[i] += a[i];
    for (std::size_t i = 0; i < b.size(); ++i) c[i] += b[i];
    poly_trim(c);
    return c;
}

inline Poly poly_neg(Poly a) {
    for (auto& x : a) x = -x;
    return a;
}

inline Poly poly_sub(const Poly& a, const Poly& b) { return poly_add(a, poly_neg(b)); }

inline Poly poly_scale(Poly a, const Rat& c) {
    for (auto& x : a) x *= c;
    poly_trim(a);
    return a;
}

inline Poly poly_mul(const Poly& a, const Poly& b) {
    if (a.empty() || b.empty()) return {};
    Poly c(a.size() + b.size() - 1, Rat(0));
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) c[i + j] += a[i] * b[j];
    poly_trim(c);
    return c;
}

/// Quotient and remainder of a by b, b != 0.
inline std::pair<Poly, Poly> poly_divmod(Poly a, const Poly& b) {
    require(!b.empty(), errc::invalid_input, "division by zero polynomial");
    Poly q;
    while (!a.empty() && a.size() >= b.size()) {
        Rat f = a.back() / b.back();
        std::size_t shift = a.size() - b.size();
        if (q.size() < shift + 1) q.resize(shift + 1, Rat(0));
        q[shift] += f;
        for (std::size_t i = 0; i < b.size(); ++i) a[shift + i] -= f * b[i];
        poly_trim(a);
    }
    poly_trim(q);
    return {q, a};
}

inline Poly poly_mod(const Poly& a, const Poly& b) { return poly_divmod(a, b).second; }

inline Poly poly_derivative(const Poly& a) {
    if (a.size() <= 1) return {};
    Poly d(a.size() - 1);
    for (std::size_t i = 1; i < a.size(); ++i) d[i - 1] = a[i] * Rat(static_cast<long>(i));
    return d;
}

inline Rat poly_eval(const Poly& a, const Rat& x) {
    Rat v = 0;
    for (std::size_t i = a.size(); i-- > 0;) v = v * x + a[i];
    return v;
}

inline Poly poly_gcd(Poly a, Poly b) {
    poly_trim(a);
    poly_trim(b);
    while (!b.empty()) {
        Poly r = poly_mod(a, b);
        a = std::move(b);
        b = std::move(r);
    }
    if (!a.empty()) {
        Rat lead = a.back();
        for (auto& x : a) x /= lead;
    }
    return a;
}

// ---------------------------------------------------------------------------
// Sturm sequences and real root counting

inline std::vector<Poly> sturm_sequence(const Poly& f) {
    std::vector<Poly> seq;
    Poly a = f;
    poly_trim(a);
    if (a.empty()) return seq;
    seq.push_back(a);
    Poly b = poly_derivative(a);
    while (!b.empty()) {
        seq.push_back(b);
        Poly r = poly_neg(poly_mod(seq[seq.size() - 2], b));
        b = std::move(r);
    }
    return seq;
}

inline long sturm_sign_changes(const std::vector<Poly>& seq, const Rat& x) {
    long changes = 0;
    int prev = 0;
    for (const auto& p : seq) {
        int s = sign_of(poly_eval(p, x));
        if (s == 0) continue;
        if (prev != 0 && s != prev) ++changes;
        prev = s;
    }
    return changes;
}

/// Number of distinct real roots of f in (a, b], for f without a root at a.
inline long count_roots(const std::vector<Poly>& seq, const Rat& a, const Rat& b) {
    if (seq.empty()) return 0;
    return sturm_sign_changes(seq, a) - sturm_sign_changes(seq, b);
}

// ---------------------------------------------------------------------------
// a real algebraic number: squarefree polynomial plus isolating interval

/// A totally ordered real embedding of Q[x]/(min_poly): the root of min_poly
/// isolated by (lo, hi).
struct RealField {
    Poly min_poly; ///< monic, squarefree, increasing-degree coefficients
    Rat lo, hi;

    long degree() const { return poly_deg(min_poly); }

    static RealField rationals() { return RealField{Poly{Rat(0), Rat(1)}, Rat(-1), Rat(1)}; }
};

inline RealField make_real_field(Poly min_poly, const Rat& lo, const Rat& hi) {
    poly_trim(min_poly);
    require(poly_deg(min_poly) >= 1, errc::invalid_input, "constant min_poly");
    require(min_poly.back() == 1, errc::invalid_input, "min_poly must be monic");
    require(lo < hi, errc::invalid_input, "empty isolating interval");
    require(poly_eval(min_poly, lo) != 0 && poly_eval(min_poly, hi) != 0, errc::invalid_input,
            "isolating interval endpoints must not be roots");
    Poly g = poly_gcd(min_poly, poly_derivative(min_poly));
    require(poly_deg(g) <= 0, errc::invalid_input, "min_poly must be squarefree");
    auto seq = sturm_sequence(min_poly);
    require(count_roots(seq, lo, hi) == 1, errc::invalid_input,
            "interval must isolate exactly one root");
    return RealField{std::move(min_poly), lo, hi};
}

/// Element of the field: polynomial of degree < deg(min_poly).
using FieldElem = Poly;

inline FieldElem reduce(const RealField& k, const Poly& p) { return poly_mod(p, k.min_poly); }

inline FieldElem fe_add(const RealField&, const FieldElem& a, const FieldElem& b) {
    return poly_add(a, b);
}
inline FieldElem fe_sub(const RealField&, const FieldElem& a, const FieldElem& b) {
    return poly_sub(a, b);
}
inline FieldElem fe_mul(const RealField& k, const FieldElem& a, const FieldElem& b) {
    return poly_mod(poly_mul(a, b), k.min_poly);
}
inline FieldElem fe_scale(const RealField&, const FieldElem& a, const Rat& c) {
    return poly_scale(a, c);
}
inline FieldElem fe_const(const Rat& c) { return c == 0 ? FieldElem{} : FieldElem{c}; }

/// Exact sign of the element at the designated real embedding: exact zero test
/// by reduction, then interval refinement by bisection with Sturm counts until
/// the sign is locked.
inline int eval_sign(const RealField& k, const FieldElem& elem) {
    FieldElem e = reduce(k, elem);
    if (poly_is_zero(e)) return 0;
    if (k.degree() == 1) {
        // rational root -m0
        return sign_of(poly_eval(e, -k.min_poly[0]));
    }
    // roots shared with min_poly inside the interval mean the element vanishes
    Poly g = poly_gcd(e, k.min_poly);
    auto mseq = sturm_sequence(k.min_poly);
    if (poly_deg(g) >= 1) {
        auto gseq = sturm_sequence(g);
        if (count_roots(gseq, k.lo, k.hi) >= 1) return 0;
    }
    auto eseq = sturm_sequence(e);
    Rat lo = k.lo, hi = k.hi;
    while (count_roots(eseq, lo, hi) > 0) {
        Rat mid = (lo + hi) / 2;
        if (poly_eval(k.min_poly, mid) == 0) {
            // the isolated root is rational and equals mid
            return sign_of(poly_eval(e, mid));
        }
        if (count_roots(mseq, lo, mid) == 1)
            hi = mid;
        else
            lo = mid;
    }
    return sign_of(poly_eval(e, (lo + hi) / 2));
}

} // namespace k3lg
