#pragma once

#include <algorithm>
#include <climits>
#include <map>
#include <set>
#include <tuple>
#include <vector>

#include "k3lg/error.hpp"
#include "k3lg/matrix.hpp"
#include "k3lg/quadform.hpp"
#include "k3lg/rational.hpp"

namespace k3lg {

// ---------------------------------------------------------------------------
// integral lattices

struct IntegralLattice {
    MatZ gram;

    std::size_t rank() const { return gram.rows(); }
    bool even() const {
        for (std::size_t i = 0; i < gram.rows(); ++i)
            if (gram(i, i) % 2 != 0) return false;
        return true;
    }
};

inline IntegralLattice make_lattice(MatZ gram) {
    require(gram.rows() >= 1, errc::invalid_input, "rank must be positive");
    require(is_symmetric(gram), errc::invalid_input, "gram matrix not symmetric");
    require(det_bareiss(gram) != 0, errc::degenerate_form, "gram determinant is zero");
    return IntegralLattice{std::move(gram)};
}

inline QuadSpace rational_space(const IntegralLattice& l) {
    return QuadSpace{to_rational(l.gram)};
}

inline MatZ hyperbolic_plane_gram() { return MatZ{{Int(0), Int(1)}, {Int(1), Int(0)}}; }

/// Gram matrix of E8 from the simply-laced diagram 1-3-4-5-6-7-8 with 2
/// attached to node 4; determinant 1, even, positive definite.
inline MatZ e8_gram() {
    MatZ c(8, 8);
    for (std::size_t i = 0; i < 8; ++i) c(i, i) = 2;
    auto edge = [&](std::size_t a, std::size_t b) {
        c(a - 1, b - 1) = -1;
        c(b - 1, a - 1) = -1;
    };
    edge(1, 3);
    edge(3, 4);
    edge(4, 5);
    edge(5, 6);
    edge(6, 7);
    edge(7, 8);
    edge(2, 4);
    return c;
}

inline MatZ negate(MatZ m) {
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) = -m(i, j);
    return m;
}

/// The K3 lattice E8(-1)^2 + U^3, with its self-checks.
inline const IntegralLattice& k3_gram() {
    static const IntegralLattice l = [] {
        MatZ u = hyperbolic_plane_gram();
        MatZ e8m = negate(e8_gram());
        IntegralLattice out{block_diag({e8m, e8m, u, u, u})};
        require(out.rank() == 22, errc::invariant_violation, "K3 lattice rank");
        require(out.even(), errc::invariant_violation, "K3 lattice must be even");
        require(det_bareiss(out.gram) == -1, errc::invariant_violation, "K3 lattice determinant");
        auto sig = signature(rational_space(out));
        require(sig.first == 3 && sig.second == 19, errc::invariant_violation,
                "K3 lattice signature");
        return out;
    }();
    return l;
}

namespace detail {

/// All 240 roots of E8 in simple-root coordinates, by reflection closure.
inline std::vector<VecZ> e8_roots() {
    MatZ c = e8_gram();
    auto pair_with_simple = [&](const VecZ& v, std::size_t i) {
        Int s = 0;
        for (std::size_t j = 0; j < 8; ++j) s += c(i, j) * v[j];
        return s;
    };
    std::set<VecZ> seen;
    std::vector<VecZ> queue;
    for (std::size_t i = 0; i < 8; ++i) {
        VecZ e(8, Int(0));
        e[i] = 1;
        seen.insert(e);
        queue.push_back(e);
    }
    while (!queue.empty()) {
        VecZ v = queue.back();
        queue.pop_back();
        for (std::size_t i = 0; i < 8; ++i) {
            VecZ w = v;
            w[i] -= pair_with_simple(v, i);
            if (seen.insert(w).second) queue.push_back(w);
            for (auto& x : w) x = -x;
            if (seen.insert(w).second) queue.push_back(w);
        }
    }
    return {seen.begin(), seen.end()};
}

/// Eight pairwise orthogonal roots of E8 (a D8-style frame), by backtracking.
inline std::vector<VecZ> e8_orthogonal_roots() {
    static const std::vector<VecZ> frame = [] {
        MatZ c = e8_gram();
        auto roots = e8_roots();
        auto pairing = [&](const VecZ& a, const VecZ& b) {
            Int s = 0;
            for (std::size_t i = 0; i < 8; ++i)
                for (std::size_t j = 0; j < 8; ++j) s += a[i] * c(i, j) * b[j];
            return s;
        };
        std::vector<VecZ> chosen;
        std::vector<std::size_t> stack;
        std::size_t start = 0;
        while (chosen.size() < 8) {
            bool advanced = false;
            for (std::size_t i = start; i < roots.size(); ++i) {
                bool ok = true;
                for (const auto& r : chosen)
                    if (pairing(roots[i], r) != 0) {
                        ok = false;
                        break;
                    }
                if (ok) {
                    chosen.push_back(roots[i]);
                    stack.push_back(i);
                    start = i + 1;
                    advanced = true;
                    break;
                }
            }
            if (!advanced) {
                require(!stack.empty(), errc::invariant_violation, "no orthogonal E8 frame");
                start = stack.back() + 1;
                stack.pop_back();
                chosen.pop_back();
            }
        }
        return chosen;
    }();
    return frame;
}

} // namespace detail

/// A diagonalizing frame of the K3 lattice adapted to embeddings: one (2,-2)
/// pair per U summand first, then sixteen orthogonal (-2)-lines inside the two
/// E8(-1) summands.
inline const DiagForm& k3_hyperbolic_frame() {
    static const DiagForm frame = [] {
        const auto& l = k3_gram();
        MatQ g = to_rational(l.gram);
        DiagForm f;
        f.transform = MatQ(22, 22);
        f.entries.resize(22);
        std::size_t row = 0;
        for (std::size_t u = 0; u < 3; ++u) {
            std::size_t off = 16 + 2 * u;
            VecQ plus(22, Rat(0)), minus(22, Rat(0));
            plus[off] = 1;
            plus[off + 1] = 1;
            minus[off] = 1;
            minus[off + 1] = -1;
            f.transform.set_row(row, plus);
            f.entries[row++] = 2;
            f.transform.set_row(row, minus);
            f.entries[row++] = -2;
        }
        auto roots = detail::e8_orthogonal_roots();
        for (std::size_t blk = 0; blk < 2; ++blk)
            for (const auto& r : roots) {
                VecQ v(22, Rat(0));
                for (std::size_t i = 0; i < 8; ++i) v[8 * blk + i] = Rat(r[i]);
                f.transform.set_row(row, v);
                f.entries[row++] = -2;
            }
        // exact congruence self-check
        MatQ d = f.transform * g * f.transform.transpose();
        for (std::size_t i = 0; i < 22; ++i)
            for (std::size_t j = 0; j < 22; ++j)
                require(d(i, j) == (i == j ? f.entries[i] : Rat(0)), errc::invariant_violation,
                        "K3 frame is not orthogonal");
        return f;
    }();
    return frame;
}

// ---------------------------------------------------------------------------
// primitive sublattices

struct PrimitiveSublattice {
    std::size_t ambient_rank = 0;
    MatZ basis; ///< r x ambient_rank, extendable to a basis of Z^ambient_rank
    MatZ gram;
    std::vector<Int> elementary_divisors; ///< of the Gram matrix, ascending chain

    std::size_t rank() const { return basis.rows(); }
};

/// Elementary divisors of the Gram matrix: cyclic structure of the
/// discriminant group, ones included.
inline std::vector<Int> disc_group(const IntegralLattice& l) {
    auto s = smith_normal_form(l.gram);
    require(s.rank == l.rank(), errc::degenerate_form, "gram determinant is zero");
    return s.divisors;
}

/// Intersection of the Q-span of the given rows with the ambient lattice.
inline PrimitiveSublattice saturate(const IntegralLattice& ambient, const MatQ& span) {
    const std::size_t n = ambient.rank();
    require(span.cols() == n, errc::dimension_mismatch, "span width != ambient rank");
    require(span.rows() >= 1, errc::invalid_input, "empty span");

    auto [cleared, scale_] = clear_denominators(span);
    auto s = smith_normal_form(cleared, /*want_right_inverse=*/true);
    require(s.rank == span.rows(), errc::rank_deficient, "span rows are linearly dependent");

    PrimitiveSublattice out;
    out.ambient_rank = n;
    out.basis = MatZ(span.rows(), n);
    for (std::size_t i = 0; i < span.rows(); ++i)
        for (std::size_t j = 0; j < n; ++j) out.basis(i, j) = s.winv(i, j);
    out.gram = out.basis * ambient.gram * out.basis.transpose();
    auto gs = smith_normal_form(out.gram);
    require(gs.rank == out.gram.rows(), errc::degenerate_form, "degenerate sublattice gram");
    out.elementary_divisors = gs.divisors;
    return out;
}

// ---------------------------------------------------------------------------
// p-adic Jordan data (odd p)

struct JordanBlock {
    long scale = 0; ///< exponent k of p^k
    long rank = 0;
    int unit_class = 1; ///< Legendre class of the unit determinant
};

/// Jordan decomposition at an odd prime by pivoting on entries of minimal
/// p-valuation; diagonal entries collect into scale blocks.
inline std::vector<JordanBlock> jordan_symbol_odd_p(const IntegralLattice& l, const Int& p) {
    require(p != 2, errc::invalid_input, "2-adic symbols are out of scope");
    require(is_prime(p), errc::invalid_input, "p must be prime");
    const std::size_t n = l.rank();
    MatQ m = to_rational(l.gram);

    auto valq = [&](const Rat& r) { return r == 0 ? LONG_MAX : valuation(r, p); };

    std::vector<std::pair<long, Rat>> diag; // (valuation, unit part)
    for (std::size_t k = 0; k < n; ++k) {
        // minimal valuation position in the trailing block
        long best = LONG_MAX;
        std::size_t bi = k, bj = k;
        for (std::size_t i = k; i < n; ++i)
            for (std::size_t j = i; j < n; ++j) {
                long v = valq(m(i, j));
                if (v < best) {
                    best = v;
                    bi = i;
                    bj = j;
                }
            }
        require(best != LONG_MAX, errc::degenerate_form, "gram determinant is zero");
        if (bi != bj) {
            // fold column j into i; for odd p the new diagonal entry keeps the
            // minimal valuation (2 m_ij dominates)
            for (std::size_t t = 0; t < n; ++t) m(bi, t) += m(bj, t);
            for (std::size_t t = 0; t < n; ++t) m(t, bi) += m(t, bj);
        }
        if (bi != k) {
            m.swap_rows(k, bi);
            m.swap_cols(k, bi);
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            if (m(i, k) == 0) continue;
            Rat f = -m(i, k) / m(k, k);
            for (std::size_t t = 0; t < n; ++t) m(i, t) += f * m(k, t);
            for (std::size_t t = 0; t < n; ++t) m(t, i) += f * m(t, k);
        }
        diag.emplace_back(valuation(m(k, k), p), p_unit_part(m(k, k), p));
    }

    std::map<long, std::pair<long, Rat>> blocks; // scale -> (rank, unit product)
    for (const auto& [v, u] : diag) {
        auto& b = blocks.try_emplace(v, 0, Rat(1)).first->second;
        b.first += 1;
        b.second *= u;
    }
    std::vector<JordanBlock> out;
    for (const auto& [k, b] : blocks)
        out.push_back({k, b.first, legendre(unit_mod(b.second, p), p)});
    return out;
}

// ---------------------------------------------------------------------------
// genus-level summary

struct GenusSummary {
    long rank = 0;
    std::pair<long, long> sig;
    Int determinant;
    Int det_class;
    std::vector<Int> elementary_divisors;
    bool even = false;
    std::vector<std::pair<Place, int>> hasse; ///< at infinity, 2, and odd p | det
    std::map<Int, std::vector<JordanBlock>> jordan_odd;

    bool operator==(const GenusSummary& o) const {
        auto key = [](const GenusSummary& g) {
            std::vector<std::tuple<std::string, long, long, int>> j;
            for (const auto& [p, blocks] : g.jordan_odd)
                for (const auto& b : blocks) j.emplace_back(p.str(), b.scale, b.rank, b.unit_class);
            std::vector<std::pair<std::string, int>> h;
            for (const auto& [pl, e] : g.hasse) h.emplace_back(pl.str(), e);
            return std::make_tuple(g.rank, g.sig, g.determinant, g.det_class,
                                   g.elementary_divisors, g.even, h, j);
        };
        return key(*this) == key(o);
    }
};

inline GenusSummary genus_summary(const IntegralLattice& l, const factor_limits& lim = {}) {
    GenusSummary g;
    g.rank = static_cast<long>(l.rank());
    QuadSpace q = rational_space(l);
    DiagForm d = diagonalize(q);
    g.sig = signature_of_entries(d.entries);
    g.determinant = det_bareiss(l.gram);
    require(g.determinant != 0, errc::degenerate_form, "gram determinant is zero");
    g.det_class = squarefree_class(Rat(g.determinant), lim);
    g.elementary_divisors = disc_group(l);
    g.even = l.even();
    g.hasse.emplace_back(Place::at_infinity(), hasse_of_entries(d.entries, Place::at_infinity()));
    for (const auto& p : prime_support_with_two(g.determinant, lim)) {
        Place v = Place::finite(p);
        g.hasse.emplace_back(v, hasse_of_entries(d.entries, v));
        if (p != 2) g.jordan_odd[p] = jordan_symbol_odd_p(l, p);
    }
    return g;
}

/// Q-isometry after tensoring with Q: rank, signature, determinant class and
/// Hasse invariants at all relevant places.
inline bool same_rational_class(const IntegralLattice& a, const IntegralLattice& b,
                                const factor_limits& lim = {}) {
    return isometric_over_Q(rational_space(a), rational_space(b), lim);
}

} // namespace k3lg
