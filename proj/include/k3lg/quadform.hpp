#pragma once

#include <algorithm>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "k3lg/error.hpp"
#include "k3lg/matrix.hpp"
#include "k3lg/rational.hpp"

namespace k3lg {

// ---------------------------------------------------------------------------
// places

/// A place of Q: the real place or a finite prime.
struct Place {
    bool infinite = true;
    Int p = 0;

    static Place at_infinity() { return Place{}; }
    static Place finite(const Int& prime) {
        require(is_prime(prime), errc::invalid_input, "not a prime: " + prime.str());
        return Place{false, prime};
    }

    bool operator==(const Place& o) const {
        return infinite == o.infinite && (infinite || p == o.p);
    }
    bool operator<(const Place& o) const {
        if (infinite != o.infinite) return !infinite; // finite places sort first
        return !infinite && p < o.p;
    }
    std::string str() const { return infinite ? "inf" : p.str(); }
};

// ---------------------------------------------------------------------------
// quadratic spaces

/// Nondegenerate symmetric bilinear space over Q.
struct QuadSpace {
    MatQ gram;

    std::size_t dim() const { return gram.rows(); }
};

inline QuadSpace make_quad_space(MatQ gram) {
    require(gram.rows() >= 1, errc::invalid_input, "dimension must be positive");
    require(is_symmetric(gram), errc::invalid_input, "gram matrix not symmetric");
    require(det(gram) != 0, errc::degenerate_form, "gram determinant is zero");
    return QuadSpace{std::move(gram)};
}

inline QuadSpace negate(const QuadSpace& v) {
    MatQ g(v.gram.rows(), v.gram.cols());
    for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j) g(i, j) = -v.gram(i, j);
    return QuadSpace{std::move(g)};
}

/// Diagonalization of a quadratic space: transform * gram * transform^T = diag(entries).
struct DiagForm {
    VecQ entries;
    MatQ transform;
};

/// Symmetric Gaussian congruence; pivots by minimal height and rescales basis
/// rows primitive after each step to keep entry growth down. Rows of the
/// transform come out as primitive integer vectors.
inline DiagForm diagonalize(const QuadSpace& v) {
    const std::size_t n = v.dim();
    require(is_symmetric(v.gram), errc::invalid_input, "gram matrix not symmetric");
    MatQ m = v.gram;
    MatQ x = MatQ::identity(n);

    auto add_row_col = [&](std::size_t dst, const Rat& f, std::size_t src) {
        for (std::size_t j = 0; j < n; ++j) m(dst, j) += f * m(src, j);
        for (std::size_t i = 0; i < n; ++i) m(i, dst) += f * m(i, src);
        for (std::size_t j = 0; j < n; ++j) x(dst, j) += f * x(src, j);
    };
    auto swap_sym = [&](std::size_t i, std::size_t j) {
        m.swap_rows(i, j);
        m.swap_cols(i, j);
        x.swap_rows(i, j);
    };
    auto rescale_primitive = [&](std::size_t i) {
        if (is_zero(x.row(i))) return;
        VecQ prim = to_rational(primitive_row(x.row(i)));
        Rat c;
        for (std::size_t j = 0; j < n; ++j)
            if (x(i, j) != 0) {
                c = prim[j] / x(i, j);
                break;
            }
        if (c == 1) return;
        x.set_row(i, prim);
        for (std::size_t j = 0; j < n; ++j) m(i, j) *= c;
        for (std::size_t j = 0; j < n; ++j) m(j, i) *= c;
    };
    auto height = [](const Rat& r) {
        return boost::multiprecision::abs(num(r)) * den(r);
    };

    for (std::size_t k = 0; k < n; ++k) {
        std::size_t di = n;
        for (std::size_t i = k; i < n; ++i)
            if (m(i, i) != 0 && (di == n || height(m(i, i)) < height(m(di, di)))) di = i;
        if (di < n) {
            if (di != k) swap_sym(k, di);
        } else {
            // all trailing diagonal entries vanish; pull in an off-diagonal one
            std::size_t bi = n, bj = n;
            for (std::size_t i = k; i < n && bi == n; ++i)
                for (std::size_t j = i + 1; j < n; ++j)
                    if (m(i, j) != 0) {
                        bi = i;
                        bj = j;
                        break;
                    }
            require(bi < n, errc::degenerate_form, "gram determinant is zero");
            add_row_col(bi, Rat(1), bj); // diagonal entry becomes 2*m(bi,bj)
            if (bi != k) swap_sym(k, bi);
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            if (m(i, k) == 0) continue;
            add_row_col(i, -m(i, k) / m(k, k), k);
            rescale_primitive(i);
        }
    }

    DiagForm out;
    out.entries.resize(n);
    out.transform = MatQ(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        VecZ prim = primitive_row(x.row(k));
        VecQ row = to_rational(prim);
        out.transform.set_row(k, row);
        out.entries[k] = gram_eval(v.gram, row, row);
        require(out.entries[k] != 0, errc::degenerate_form, "gram determinant is zero");
    }
    return out;
}

inline std::pair<long, long> signature_of_entries(const VecQ& entries) {
    long r = 0, s = 0;
    for (const auto& e : entries) (e > 0 ? r : s)++;
    return {r, s};
}

/// (positives, negatives) of the diagonalized form.
inline std::pair<long, long> signature(const QuadSpace& v) {
    return signature_of_entries(diagonalize(v).entries);
}

/// det(gram) as a squarefree integer modulo rational squares.
inline Int disc_class(const QuadSpace& v, const factor_limits& lim = {}) {
    Rat d = det(v.gram);
    require(d != 0, errc::degenerate_form, "gram determinant is zero");
    return squarefree_class(d, lim);
}

// ---------------------------------------------------------------------------
// local invariants

/// Hilbert symbol (a,b)_v by the valuation/Legendre formulas.
inline int hilbert_symbol(const Rat& a, const Rat& b, const Place& v) {
    require(a != 0 && b != 0, errc::invalid_input, "hilbert symbol of 0");
    if (v.infinite) return (a < 0 && b < 0) ? -1 : 1;
    const Int& p = v.p;
    long alpha = valuation(a, p), beta = valuation(b, p);
    Rat u = p_unit_part(a, p), w = p_unit_part(b, p);
    if (p != 2) {
        long e = 0;
        if ((alpha & 1) && (beta & 1) && ((p - 1) / 2) % 2 == 1) e ^= 1;
        if ((beta & 1) && legendre(unit_mod(u, p), p) == -1) e ^= 1;
        if ((alpha & 1) && legendre(unit_mod(w, p), p) == -1) e ^= 1;
        return e ? -1 : 1;
    }
    auto eps = [](const Int& u8) { return (u8 % 4 == 3) ? 1 : 0; }; // (u-1)/2 mod 2
    auto omg = [](const Int& u8) { return (u8 == 3 || u8 == 5) ? 1 : 0; }; // (u^2-1)/8 mod 2
    Int u8 = unit_mod(u, 8), w8 = unit_mod(w, 8);
    long e = eps(u8) * eps(w8) + (alpha & 1) * omg(w8) + (beta & 1) * omg(u8);
    return (e % 2) ? -1 : 1;
}

inline int hasse_of_entries(const VecQ& entries, const Place& v) {
    int h = 1;
    for (std::size_t i = 0; i < entries.size(); ++i)
        for (std::size_t j = i + 1; j < entries.size(); ++j)
            h *= hilbert_symbol(entries[i], entries[j], v);
    return h;
}

/// Product of Hilbert symbols over pairs of any diagonalization.
inline int hasse_invariant(const QuadSpace& v, const Place& place) {
    return hasse_of_entries(diagonalize(v).entries, place);
}

/// Is r a square in the completion at v?
inline bool is_local_square(const Rat& r, const Place& v) {
    require(r != 0, errc::invalid_input, "local square test of 0");
    if (v.infinite) return r > 0;
    if (valuation(r, v.p) % 2 != 0) return false;
    Rat u = p_unit_part(r, v.p);
    if (v.p == 2) return unit_mod(u, 8) == 1;
    return legendre(unit_mod(u, v.p), v.p) == 1;
}

namespace detail {

/// Isotropy over Q_p from (rank, disc, hasse); the classification of anisotropic
/// forms in ranks 1..4.
inline bool locally_isotropic(long n, const Rat& d, int eps, const Place& v) {
    if (n >= 5) return true;
    if (n <= 1) return false;
    if (n == 2) return is_local_square(-d, v);
    if (n == 3) return eps == hilbert_symbol(Rat(-1), -d, v);
    return !is_local_square(d, v) || eps == hilbert_symbol(Rat(-1), Rat(-1), v);
}

} // namespace detail

/// Number of hyperbolic planes split off over the completion at v.
inline long witt_index_of_entries(const VecQ& entries, const Place& v) {
    if (v.infinite) {
        auto [r, s] = signature_of_entries(entries);
        return std::min(r, s);
    }
    long n = static_cast<long>(entries.size());
    Rat d = 1;
    for (const auto& e : entries) d *= e;
    int eps = hasse_of_entries(entries, v);
    long w = 0;
    while (n >= 2 && detail::locally_isotropic(n, d, eps, v)) {
        ++w;
        n -= 2;
        d = -d;
        eps *= hilbert_symbol(Rat(-1), d, v);
    }
    return w;
}

inline long witt_index_local(const QuadSpace& v, const Place& place) {
    return witt_index_of_entries(diagonalize(v).entries, place);
}

// ---------------------------------------------------------------------------
// global classification (Hasse-Minkowski)

/// Finite places where invariants of the given determinants can disagree.
inline std::vector<Place> relevant_places(const std::vector<Rat>& dets,
                                          const factor_limits& lim = {}) {
    Int prod = 1;
    for (const auto& d : dets) {
        require(d != 0, errc::degenerate_form, "gram determinant is zero");
        prod *= num(d) * den(d);
    }
    std::vector<Place> out;
    for (const auto& p : prime_support_with_two(prod, lim)) out.push_back(Place::finite(p));
    return out;
}

inline bool isometric_over_Q(const QuadSpace& a, const QuadSpace& b,
                             const factor_limits& lim = {}) {
    if (a.dim() != b.dim()) return false;
    DiagForm da = diagonalize(a), db = diagonalize(b);
    if (signature_of_entries(da.entries) != signature_of_entries(db.entries)) return false;
    Rat deta = 1, detb = 1;
    for (const auto& e : da.entries) deta *= e;
    for (const auto& e : db.entries) detb *= e;
    if (squarefree_class(deta, lim) != squarefree_class(detb, lim)) return false;
    for (const auto& v : relevant_places({deta, detb}, lim))
        if (hasse_of_entries(da.entries, v) != hasse_of_entries(db.entries, v)) return false;
    return true;
}

/// V is rationally represented by W: Witt index of W + (-V) is at least dim V
/// at the real place and at every prime dividing 2 det(V) det(W).
inline bool represents_over_Q(const QuadSpace& v, const QuadSpace& w,
                              const factor_limits& lim = {}) {
    if (v.dim() > w.dim()) return false;
    DiagForm dv = diagonalize(v), dw = diagonalize(w);
    VecQ joint = dw.entries;
    for (const auto& e : dv.entries) joint.push_back(-e);
    Rat detv = 1, detw = 1;
    for (const auto& e : dv.entries) detv *= e;
    for (const auto& e : dw.entries) detw *= e;
    long need = static_cast<long>(v.dim());
    if (witt_index_of_entries(joint, Place::at_infinity()) < need) return false;
    for (const auto& place : relevant_places({detv, detw}, lim))
        if (witt_index_of_entries(joint, place) < need) return false;
    return true;
}

/// Where representation of V by W fails locally, if anywhere; for diagnostics.
struct local_obstruction {
    Place place;
    long witt_have = 0;
    long witt_need = 0;
};

inline std::vector<local_obstruction> representation_obstructions(const QuadSpace& v,
                                                                  const QuadSpace& w,
                                                                  const factor_limits& lim = {}) {
    DiagForm dv = diagonalize(v), dw = diagonalize(w);
    VecQ joint = dw.entries;
    for (const auto& e : dv.entries) joint.push_back(-e);
    Rat detv = 1, detw = 1;
    for (const auto& e : dv.entries) detv *= e;
    for (const auto& e : dw.entries) detw *= e;
    std::vector<Place> places{Place::at_infinity()};
    for (const auto& p : relevant_places({detv, detw}, lim)) places.push_back(p);
    std::vector<local_obstruction> out;
    long need = static_cast<long>(v.dim());
    for (const auto& place : places) {
        long have = witt_index_of_entries(joint, place);
        if (have < need) out.push_back({place, have, need});
    }
    return out;
}

// ---------------------------------------------------------------------------
// constructive representation

struct search_limits {
    long height = 64;     ///< numerator/denominator bound in the search passes
    long work = 1200000;  ///< candidate evaluations before giving up
};

/// Greedy constructive engine over an orthogonal pool of lines. Consumes lines
/// to realize target norms and returns explicit orthogonal complements of what
/// it used, so successive calls stay mutually orthogonal.
class embedder {
public:
    embedder(const MatQ& ambient_gram, const DiagForm& frame, std::vector<Place> places)
        : gram_(ambient_gram), places_(std::move(places)) {
        for (std::size_t i = 0; i < frame.entries.size(); ++i)
            pool_.push_back({frame.transform.row(i), frame.entries[i], -1});
        // link disjoint hyperbolic pairs present in the frame
        for (std::size_t i = 0; i < pool_.size(); ++i) {
            if (pool_[i].partner >= 0) continue;
            for (std::size_t j = i + 1; j < pool_.size(); ++j) {
                if (pool_[j].partner >= 0) continue;
                if (is_square(-pool_[i].norm * pool_[j].norm)) {
                    pool_[i].partner = static_cast<int>(j);
                    pool_[j].partner = static_cast<int>(i);
                    break;
                }
            }
        }
        used_.assign(pool_.size(), false);
    }

    enum class status { found, locally_impossible, exhausted };

    status represent(const Rat& target, const search_limits& lim, VecQ& out) {
        require(target != 0, errc::invalid_input, "representing 0");
        if (!locally_representable(target)) return status::locally_impossible;
        work_left_ = lim.work;
        if (pass_square_class(target, out)) return status::found;
        // spend the last intact hyperbolic pair only when nothing else works:
        // it is the one resource that absorbs any target class
        bool conserve = intact_pairs() <= 1;
        if (!conserve && pass_hyperbolic(target, out)) return status::found;
        if (pass_equal_class(target, out)) return status::found;
        if (pass_isotropic_plane(target, out)) return status::found;
        if (pass_mixed_class(target, out)) return status::found;
        if (pass_small_support(target, lim, out)) return status::found;
        if (conserve && pass_hyperbolic(target, out)) return status::found;
        if (pass_generic_search(target, lim, out)) return status::found;
        return status::exhausted;
    }

    std::size_t active_lines() const {
        std::size_t n = 0;
        for (std::size_t i = 0; i < pool_.size(); ++i)
            if (!used_[i]) ++n;
        return n;
    }

    bool locally_representable(const Rat& target) const {
        VecQ entries;
        for (std::size_t i = 0; i < pool_.size(); ++i)
            if (!used_[i]) entries.push_back(pool_[i].norm);
        entries.push_back(-target);
        if (witt_index_of_entries(entries, Place::at_infinity()) < 1) return false;
        for (const auto& v : places_)
            if (witt_index_of_entries(entries, v) < 1) return false;
        return true;
    }

private:
    struct line {
        VecQ row;
        Rat norm;
        int partner; ///< index of the hyperbolic partner, -1 when unpaired
    };

    std::size_t intact_pairs() const {
        std::size_t n = 0;
        for (std::size_t i = 0; i < pool_.size(); ++i)
            if (!used_[i] && pool_[i].partner > static_cast<int>(i) &&
                !used_[static_cast<std::size_t>(pool_[i].partner)])
                ++n;
        return n;
    }

    // 0: line of an intact hyperbolic pair, 1: leftover of a consumed pair, 2: rest
    int tier(std::size_t i) const {
        if (pool_[i].partner < 0) return 2;
        return used_[static_cast<std::size_t>(pool_[i].partner)] ? 1 : 0;
    }

    void consume(std::size_t i) { used_[i] = true; }

    /// New pool line; rows are rescaled primitive to keep entry growth down
    /// (the square class of the norm is unchanged).
    void push_line(VecQ row, Rat norm) {
        require(norm != 0, errc::invariant_violation, "degenerate pool line");
        VecQ prim = to_rational(primitive_row(row));
        pool_.push_back({prim, gram_eval(gram_, prim, prim), -1});
        used_.push_back(false);
    }

    void check_norm(const VecQ& w, const Rat& target) const {
        require(gram_eval(gram_, w, w) == target, errc::invariant_violation,
                "represented vector has wrong norm");
    }

    // (i) target / norm is a rational square
    bool pass_square_class(const Rat& target, VecQ& out) {
        for (int t = 0; t <= 2; ++t)
            for (std::size_t i = 0; i < pool_.size(); ++i) {
                if (used_[i] || tier(i) != t) continue;
                auto s = sqrt_exact(target / pool_[i].norm);
                if (!s) continue;
                out = scale(pool_[i].row, *s);
                check_norm(out, target);
                consume(i);
                return true;
            }
        return false;
    }

    // closed form on a pair of lines with -n_i n_j a square (a hyperbolic plane)
    bool solve_on_pair(std::size_t i, std::size_t j, const Rat& target, VecQ& out) {
        const Rat &d1 = pool_[i].norm, &d2 = pool_[j].norm;
        auto s = sqrt_exact(-d1 * d2);
        if (!s) return false;
        Rat sp = *s / d1;
        Rat u = target / d1;
        Rat xx = (1 + u) / 2;
        Rat yy = (u - 1) / (2 * sp);
        out = axpy(scale(pool_[i].row, xx), yy, pool_[j].row);
        check_norm(out, target);
        // complement inside the plane
        Rat xc = -d2 * yy, yc = d1 * xx;
        VecQ comp = axpy(scale(pool_[i].row, xc), yc, pool_[j].row);
        consume(i);
        consume(j);
        push_line(std::move(comp), d1 * d2 * target);
        return true;
    }

    // (ii) hyperbolic pairs: intact frame pairs first, then any square-compatible pair
    bool pass_hyperbolic(const Rat& target, VecQ& out) {
        for (std::size_t i = 0; i < pool_.size(); ++i) {
            if (used_[i] || tier(i) != 0) continue;
            std::size_t j = static_cast<std::size_t>(pool_[i].partner);
            if (j > i && solve_on_pair(i, j, target, out)) return true;
        }
        for (std::size_t i = 0; i < pool_.size(); ++i) {
            if (used_[i]) continue;
            for (std::size_t j = i + 1; j < pool_.size(); ++j) {
                if (used_[j]) continue;
                if (!is_square(-pool_[i].norm * pool_[j].norm)) continue;
                if (solve_on_pair(i, j, target, out)) return true;
            }
        }
        return false;
    }

    // groups of lines in one square class, largest first
    std::vector<std::vector<std::size_t>> class_groups() const {
        std::vector<std::vector<std::size_t>> groups;
        for (std::size_t i = 0; i < pool_.size(); ++i) {
            if (used_[i]) continue;
            bool placed = false;
            for (auto& g : groups)
                if (is_square(pool_[i].norm / pool_[g[0]].norm)) {
                    g.push_back(i);
                    placed = true;
                    break;
                }
            if (!placed) groups.push_back({i});
        }
        std::stable_sort(groups.begin(), groups.end(),
                         [](const auto& a, const auto& b) { return a.size() > b.size(); });
        return groups;
    }

    /// Scale rows of a one-class group to a common norm d; returns scaled rows.
    std::vector<VecQ> normalized_rows(const std::vector<std::size_t>& g, const Rat& d) const {
        std::vector<VecQ> rows;
        for (auto i : g) {
            Rat s = *sqrt_exact(pool_[i].norm / d);
            rows.push_back(scale(pool_[i].row, 1 / s));
        }
        return rows;
    }

    /// Orthogonal basis (as coefficient vectors) of the complement of z inside
    /// the k-dim block of equal-norm lines. For k = 4 the quaternion conjugates
    /// give three lines in one class (a reusable group); for k = 3 a vector of
    /// square Euclidean norm keeps the class of the block alive when one exists.
    static std::vector<VecQ> block_complement(const std::vector<Rat>& z) {
        const std::size_t k = z.size();
        if (k == 2) return {{-z[1], z[0]}};
        if (k == 4) {
            const Rat &z1 = z[0], &z2 = z[1], &z3 = z[2], &z4 = z[3];
            return {{-z2, z1, -z4, z3}, {-z3, z4, z1, -z2}, {-z4, -z3, z2, z1}};
        }
        VecZ zz = primitive_row(VecQ(z.begin(), z.end()));
        MatQ zrow(1, k);
        for (std::size_t i = 0; i < k; ++i) zrow(0, i) = Rat(zz[i]);
        MatQ ker = right_kernel(zrow);
        std::vector<VecZ> basis;
        for (std::size_t r = 0; r < ker.rows(); ++r) basis.push_back(primitive_row(ker.row(r)));

        std::vector<VecZ> found;
        const long span = 6;
        std::vector<long> c(k - 1, -span);
        while (found.size() + 2 <= k) {
            VecZ w(k, Int(0));
            for (std::size_t i = 0; i + 1 < k; ++i)
                for (std::size_t t = 0; t < k; ++t) w[t] += c[i] * basis[i][t];
            bool nonzero = false, ortho = true;
            Int n2 = 0;
            for (const auto& x : w) {
                if (x != 0) nonzero = true;
                n2 += x * x;
            }
            for (const auto& f : found) {
                Int dp = 0;
                for (std::size_t t = 0; t < k; ++t) dp += f[t] * w[t];
                if (dp != 0) { ortho = false; break; }
            }
            if (nonzero && ortho && is_square(n2)) found.push_back(w);
            std::size_t i = 0;
            while (i + 1 < k && c[i] == span) c[i++] = -span;
            if (i + 1 == k) break;
            ++c[i];
        }

        std::vector<VecQ> out;
        if (found.size() == k - 2) {
            MatQ stack(found.size() + 1, k);
            for (std::size_t j = 0; j < k; ++j) stack(0, j) = Rat(zz[j]);
            for (std::size_t r = 0; r < found.size(); ++r)
                for (std::size_t j = 0; j < k; ++j) stack(r + 1, j) = Rat(found[r][j]);
            MatQ last = right_kernel(stack);
            if (last.rows() == 1) {
                for (const auto& f : found) out.push_back(to_rational(f));
                out.push_back(to_rational(primitive_row(last.row(0))));
                return out;
            }
            out.clear();
        }
        // fallbacks
        if (k == 4) {
            const Rat &z1 = z[0], &z2 = z[1], &z3 = z[2], &z4 = z[3];
            return {{-z2, z1, -z4, z3}, {-z3, z4, z1, -z2}, {-z4, -z3, z2, z1}};
        }
        std::vector<VecQ> coeffs;
        for (std::size_t r = 0; r < ker.rows(); ++r) {
            VecQ cf = ker.row(r);
            for (const auto& prev : coeffs) cf = axpy(cf, -dot(cf, prev) / dot(prev, prev), prev);
            coeffs.push_back(cf);
        }
        return coeffs;
    }

    bool build_from_squares(const std::vector<std::size_t>& g, const std::vector<Rat>& z,
                            const Rat& d, const Rat& target, VecQ& out) {
        auto rows = normalized_rows(g, d);
        VecQ w(rows[0].size(), Rat(0));
        for (std::size_t i = 0; i < g.size(); ++i) w = axpy(w, z[i], rows[i]);
        check_norm(w, target);
        for (const auto& c : block_complement(z)) {
            VecQ row(rows[0].size(), Rat(0));
            for (std::size_t i = 0; i < g.size(); ++i) row = axpy(row, c[i], rows[i]);
            push_line(row, d * dot(c, c));
        }
        for (auto i : g) consume(i);
        out = w;
        return true;
    }

    // structured sums of squares over one-class groups
    bool pass_equal_class(const Rat& target, VecQ& out) {
        for (const auto& g : class_groups()) {
            if (g.size() < 2) continue;
            if ((work_left_ -= 600) <= 0) return false;
            Rat d = pool_[g[0]].norm;
            auto z = square_decomposition(target / d, std::min<std::size_t>(4, g.size()));
            if (!z) continue;
            std::vector<std::size_t> sub(g.begin(), g.begin() + z->size());
            if (build_from_squares(sub, *z, d, target, out)) return true;
        }
        return false;
    }

    /// k-squares decomposition data for ratio = sum of k squares, largest k first.
    static std::optional<std::vector<Rat>> square_decomposition(const Rat& ratio,
                                                                std::size_t k_max,
                                                                long tries = 150) {
        if (ratio <= 0) return std::nullopt;
        Int nm = num(ratio) * den(ratio);
        const Int& m = den(ratio);
        for (std::size_t k = k_max; k >= 2; --k) {
            std::vector<Rat> z;
            if (k == 4) {
                auto q = four_squares(nm, tries);
                if (!q) continue;
                for (const auto& c : *q) z.emplace_back(Rat(c, m));
            } else if (k == 3) {
                auto q = three_squares(nm, tries);
                if (!q) continue;
                for (const auto& c : *q) z.emplace_back(Rat(c, m));
            } else {
                auto q = two_squares(nm);
                if (!q) continue;
                z = {Rat(q->first, m), Rat(q->second, m)};
            }
            return z;
        }
        return std::nullopt;
    }

    /// Build an isotropic vector from a one-class group plus an opposite-sign
    /// line; the plane it spans with that line is hyperbolic and represents any
    /// target in closed form. The complement keeps an equal-class triple and a
    /// line in the class of -target, so the construction renews the pool.
    bool pass_isotropic_plane(const Rat& target, VecQ& out) {
        static const std::vector<Rat> grid = {Rat(1), Rat(2),    Rat(1, 2), Rat(3),
                                              Rat(1, 3), Rat(3, 2), Rat(4),    Rat(5)};
        auto groups = class_groups();
        for (const auto& g : groups) {
            if (g.size() < 2) continue;
            Rat d = pool_[g[0]].norm;
            for (int jt = 2; jt >= 0; --jt) // spare intact pairs for the hyperbolic pass
                for (std::size_t j = 0; j < pool_.size(); ++j) {
                    if (used_[j] || tier(j) != jt) continue;
                    const Rat& nj = pool_[j].norm;
                    if (sign_of(nj) == sign_of(d)) continue;
                    for (const auto& t : grid) {
                        if ((work_left_ -= 600) <= 0) return false;
                        auto z = square_decomposition(-nj * t * t / d,
                                                      std::min<std::size_t>(4, g.size()));
                        if (!z) continue;
                        std::size_t k = z->size();
                        std::vector<std::size_t> sub(g.begin(), g.begin() + k);
                        auto rows = normalized_rows(sub, d);
                        VecQ u = scale(pool_[j].row, t);
                        for (std::size_t i = 0; i < k; ++i) u = axpy(u, (*z)[i], rows[i]);
                        require(gram_eval(gram_, u, u) == 0, errc::invariant_violation,
                                "isotropic construction failed");
                        Rat alpha = (target - nj) / (2 * t * nj);
                        VecQ w = axpy(pool_[j].row, alpha, u);
                        check_norm(w, target);
                        // complement of w inside the plane span(u, line j)
                        VecQ vp = axpy(scale(pool_[j].row, t), -(alpha * t + 1), u);
                        // complement of z inside the group block
                        std::vector<VecQ> block = block_complement(*z);
                        for (auto i : sub) consume(i);
                        consume(j);
                        for (const auto& c : block) {
                            VecQ row(rows[0].size(), Rat(0));
                            for (std::size_t i = 0; i < k; ++i) row = axpy(row, c[i], rows[i]);
                            push_line(std::move(row), d * dot(c, c));
                        }
                        push_line(std::move(vp), -target * t * t);
                        out = w;
                        return true;
                    }
                }
        }
        return false;
    }

    // one-class triple plus one foreign line, small transversal grid
    bool pass_mixed_class(const Rat& target, VecQ& out) {
        static const std::vector<Rat> grid = {Rat(1),     Rat(1, 2), Rat(2), Rat(3, 2),
                                              Rat(1, 3),  Rat(3),    Rat(1, 4), Rat(4),
                                              Rat(2, 3),  Rat(5, 2), Rat(5)};
        auto groups = class_groups();
        for (const auto& g : groups) {
            if (g.size() < 3) continue;
            Rat d = pool_[g[0]].norm;
            for (std::size_t b = 0; b < pool_.size(); ++b) {
                if (used_[b]) continue;
                if (is_square(pool_[b].norm / d)) continue; // same class: handled above
                for (const auto& t : grid) {
                    if ((work_left_ -= 200) <= 0) return false;
                    Rat resid = (target - pool_[b].norm * t * t) / d;
                    if (resid <= 0) continue;
                    Int nm = num(resid) * den(resid);
                    auto q = three_squares(nm, 400);
                    if (!q) continue;
                    std::vector<std::size_t> sub(g.begin(), g.begin() + 3);
                    auto rows = normalized_rows(sub, d);
                    rows.push_back(pool_[b].row);
                    VecQ w = scale(rows[3], t);
                    std::vector<Rat> z;
                    for (const auto& c : *q) z.emplace_back(Rat(c, den(resid)));
                    for (std::size_t i = 0; i < 3; ++i) w = axpy(w, z[i], rows[i]);
                    check_norm(w, target);
                    // complement of w inside the mixed 4-dim span
                    MatQ cond(1, 4);
                    for (std::size_t i = 0; i < 3; ++i) cond(0, i) = d * z[i];
                    cond(0, 3) = pool_[b].norm * t;
                    MatQ ker = right_kernel(cond);
                    std::vector<VecQ> basis;
                    for (std::size_t r = 0; r < ker.rows(); ++r) {
                        VecQ cf = ker.row(r);
                        VecQ vec(rows[0].size(), Rat(0));
                        for (std::size_t i = 0; i < 4; ++i) vec = axpy(vec, cf[i], rows[i]);
                        basis.push_back(vec);
                    }
                    // Gram-Schmidt in the ambient form
                    std::vector<VecQ> ortho;
                    bool ok = true;
                    for (auto& vec : basis) {
                        VecQ c = vec;
                        for (const auto& prev : ortho) {
                            Rat pn = gram_eval(gram_, prev, prev);
                            c = axpy(c, -gram_eval(gram_, c, prev) / pn, prev);
                        }
                        if (gram_eval(gram_, c, c) == 0) { ok = false; break; }
                        ortho.push_back(c);
                    }
                    if (!ok) continue;
                    for (auto i : sub) consume(i);
                    consume(b);
                    for (auto& c : ortho) {
                        Rat nrm = gram_eval(gram_, c, c);
                        push_line(std::move(c), nrm);
                    }
                    out = w;
                    return true;
                }
            }
        }
        return false;
    }

    /// Consume a set of lines to realize w = sum x_i r_i with q(w) = target,
    /// pushing an orthogonal complement of w within the span.
    bool commit_combination(const std::vector<std::size_t>& lines, const std::vector<Rat>& x,
                            const Rat& target, VecQ& out) {
        std::size_t k = lines.size();
        VecQ w(gram_.cols(), Rat(0));
        for (std::size_t i = 0; i < k; ++i) w = axpy(w, x[i], pool_[lines[i]].row);
        check_norm(w, target);
        MatQ cond(1, k);
        for (std::size_t i = 0; i < k; ++i) cond(0, i) = pool_[lines[i]].norm * x[i];
        MatQ ker = right_kernel(cond);
        std::vector<VecQ> ortho;
        for (std::size_t r = 0; r < ker.rows(); ++r) {
            VecQ cf = ker.row(r);
            VecQ vec(gram_.cols(), Rat(0));
            for (std::size_t i = 0; i < k; ++i) vec = axpy(vec, cf[i], pool_[lines[i]].row);
            for (const auto& prev : ortho) {
                Rat pn = gram_eval(gram_, prev, prev);
                vec = axpy(vec, -gram_eval(gram_, vec, prev) / pn, prev);
            }
            if (gram_eval(gram_, vec, vec) == 0) return false; // keep the pool orthogonal
            ortho.push_back(vec);
        }
        for (auto i : lines) consume(i);
        for (auto& vec : ortho) {
            Rat nrm = gram_eval(gram_, vec, vec);
            push_line(std::move(vec), nrm);
        }
        out = w;
        return true;
    }

    /// Bounded search over triples with small numerators, then over scattered
    /// integer vectors when the pool has shrunk; both are cheap complements of
    /// the pair search below.
    bool pass_small_support(const Rat& target, const search_limits& lim, VecQ& out) {
        std::vector<std::size_t> act;
        for (std::size_t i = 0; i < pool_.size(); ++i)
            if (!used_[i]) act.push_back(i);
        long h = std::min<long>(lim.height, 8);
        for (std::size_t a = 0; a < act.size(); ++a)
            for (std::size_t b = a + 1; b < act.size(); ++b)
                for (std::size_t c = 0; c < act.size(); ++c) {
                    if (c == a || c == b) continue;
                    const Rat &da = pool_[act[a]].norm, &db = pool_[act[b]].norm;
                    const Rat& dc = pool_[act[c]].norm;
                    for (long qd = 1; qd <= 4; ++qd)
                        for (long xa = 1; xa <= h; ++xa)
                            for (long xb = 0; xb <= h; ++xb) {
                                if (work_left_-- <= 0) return false;
                                Rat xx(xa, qd), yy(xb, qd);
                                Rat z2 = (target - da * xx * xx - db * yy * yy) / dc;
                                auto z = sqrt_exact(z2);
                                if (!z || *z == 0) continue;
                                if (commit_combination({act[a], act[b], act[c]}, {xx, yy, *z},
                                                       target, out))
                                    return true;
                            }
                }
        if (act.size() <= 6) {
            // scattered vectors with entries in {-2..2}
            std::size_t n = act.size();
            std::vector<long> v(n, -2);
            while (true) {
                if (work_left_-- <= 0) return false;
                Rat q = 0;
                for (std::size_t i = 0; i < n; ++i)
                    q += pool_[act[i]].norm * Rat(v[i]) * Rat(v[i]);
                if (q == target) {
                    std::vector<std::size_t> lines;
                    std::vector<Rat> coeffs;
                    for (std::size_t i = 0; i < n; ++i)
                        if (v[i] != 0) {
                            lines.push_back(act[i]);
                            coeffs.emplace_back(v[i]);
                        }
                    if (!lines.empty() && commit_combination(lines, coeffs, target, out))
                        return true;
                }
                std::size_t i = 0;
                while (i < n && v[i] == 2) v[i++] = -2;
                if (i == n) break;
                ++v[i];
            }
        }
        return false;
    }

    // (iii) bounded search on pairs of lines, numerators/denominators up to height
    bool pass_generic_search(const Rat& target, const search_limits& lim, VecQ& out) {
        std::vector<std::size_t> act;
        for (std::size_t i = 0; i < pool_.size(); ++i)
            if (!used_[i]) act.push_back(i);
        // smallest norms first
        std::stable_sort(act.begin(), act.end(), [&](std::size_t a, std::size_t b) {
            return boost::multiprecision::abs(num(pool_[a].norm) * den(pool_[a].norm)) <
                   boost::multiprecision::abs(num(pool_[b].norm) * den(pool_[b].norm));
        });
        for (std::size_t ai = 0; ai < act.size(); ++ai)
            for (std::size_t bi = 0; bi < act.size(); ++bi) {
                if (ai == bi) continue;
                std::size_t i = act[ai], j = act[bi];
                const Rat &di = pool_[i].norm, &dj = pool_[j].norm;
                for (long qx = 1; qx <= lim.height; ++qx)
                    for (long px = 1; px <= lim.height; ++px) {
                        if (std::gcd(px, qx) != 1) continue;
                        if (work_left_-- <= 0) return false;
                        Rat xx(px, qx);
                        Rat y2 = (target - di * xx * xx) / dj;
                        auto y = sqrt_exact(y2);
                        if (!y || *y == 0) continue;
                        VecQ w = axpy(scale(pool_[i].row, xx), *y, pool_[j].row);
                        check_norm(w, target);
                        Rat xc = -dj * *y, yc = di * xx;
                        VecQ comp = axpy(scale(pool_[i].row, xc), yc, pool_[j].row);
                        consume(i);
                        consume(j);
                        push_line(std::move(comp), di * dj * target);
                        out = w;
                        return true;
                    }
            }
        return false;
    }

    MatQ gram_;
    std::vector<Place> places_;
    std::vector<line> pool_;
    std::vector<bool> used_;
    long work_left_ = 0;
};

/// Finds w with q(w) = a in W: square-class and hyperbolic shortcuts first,
/// bounded search as a fallback.
inline VecQ represent_number(const QuadSpace& w, const Rat& a, long height_bound,
                             const factor_limits& lim = {}) {
    require(a != 0, errc::invalid_input, "representing 0");
    require(height_bound >= 1, errc::invalid_input, "height bound must be positive");
    Rat detw = det(w.gram);
    std::vector<Place> places = relevant_places({detw, a}, lim);
    embedder emb(w.gram, diagonalize(w), places);
    VecQ out;
    search_limits sl;
    sl.height = height_bound;
    switch (emb.represent(a, sl, out)) {
    case embedder::status::found: return out;
    case embedder::status::locally_impossible:
        fail(errc::not_representable, to_string(a) + " is not represented (local obstruction)");
    default:
        fail(errc::search_exhausted,
             "no representation of " + to_string(a) + " found at height " +
                 std::to_string(height_bound));
    }
}

/// Isometric embedding B of V into W with B * G_W * B^T = G_V, by greedy
/// representation of the diagonal entries of V, positives first.
inline MatQ embed_space(const QuadSpace& v, const QuadSpace& w, long height_bound,
                        const factor_limits& lim = {},
                        const DiagForm* ambient_frame = nullptr) {
    require(height_bound >= 1, errc::invalid_input, "height bound must be positive");
    if (!represents_over_Q(v, w, lim))
        fail(errc::not_representable, "V is not rationally represented by W");

    DiagForm dv = diagonalize(v);
    const std::size_t n = v.dim();
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < n; ++i)
        if (dv.entries[i] > 0) order.push_back(i);
    // negatives grouped by square class, larger groups first: the first member
    // of a group pays for a structured step whose complement lines serve the
    // rest of the group through the square-class shortcut
    std::vector<std::vector<std::size_t>> neg_groups;
    for (std::size_t i = 0; i < n; ++i) {
        if (dv.entries[i] >= 0) continue;
        bool placed = false;
        for (auto& g : neg_groups)
            if (is_square(dv.entries[i] / dv.entries[g[0]])) {
                g.push_back(i);
                placed = true;
                break;
            }
        if (!placed) neg_groups.push_back({i});
    }
    std::stable_sort(neg_groups.begin(), neg_groups.end(),
                     [](const auto& a, const auto& b) { return a.size() > b.size(); });
    for (const auto& g : neg_groups)
        for (auto i : g) order.push_back(i);

    Rat detv = 1, detw = det(w.gram);
    for (const auto& e : dv.entries) detv *= e;
    std::vector<Place> places = relevant_places({detv, detw}, lim);

    DiagForm frame = ambient_frame ? *ambient_frame : diagonalize(w);
    embedder emb(w.gram, frame, places);
    search_limits sl;
    sl.height = height_bound;

    MatQ found(n, w.dim());
    for (std::size_t step = 0; step < n; ++step) {
        const Rat& target = dv.entries[order[step]];
        VecQ row;
        auto st = emb.represent(target, sl, row);
        if (st == embedder::status::locally_impossible)
            fail(errc::not_representable,
                 "diagonal entry " + to_string(target) + " not represented in the complement");
        if (st == embedder::status::exhausted)
            fail(errc::search_exhausted,
                 "entry " + std::to_string(order[step]) + " (" + to_string(target) +
                     ") not found in a complement of rank " +
                     std::to_string(emb.active_lines()) + " at height " +
                     std::to_string(height_bound));
        found.set_row(order[step], row);
    }

    // undo the diagonalizing change of basis: B = X_V^{-1} * found
    MatQ b = inverse(dv.transform) * found;
    MatQ check = b * w.gram * b.transpose();
    require(check == v.gram, errc::invariant_violation, "embedding postcondition failed");
    return b;
}

} // namespace k3lg
