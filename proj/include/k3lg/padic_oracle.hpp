#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "k3lg/error.hpp"
#include "k3lg/rational.hpp"

namespace k3lg::oracle {

/// Brute-force p-adic solubility: breadth-first lifting of primitive zeros of a
/// diagonal form modulo p^k, certifying liftability by the Hensel criterion
/// (a zero x with f(x) = 0 mod p^(2s+1) and a partial derivative of valuation s
/// lifts to Z_p). Deliberately independent of the symbol-based local theory.
class solubility {
public:
    /// Does sum a_i x_i^2 = 0 have a nonzero solution over Q_p?
    static bool isotropic(const std::vector<Int>& diag, const Int& p) {
        require(!diag.empty(), errc::invalid_input, "empty form");
        for (const auto& a : diag) require(a != 0, errc::degenerate_form, "zero diagonal entry");

        // remove even powers of p; the form stays equivalent
        std::vector<Int> a;
        for (Int ai : diag) {
            long v = valuation(ai, p);
            for (long i = 0; i + 1 < v; i += 2) ai /= p * p;
            a.push_back(ai);
        }
        long s_max = 0;
        for (const auto& ai : a) s_max = std::max(s_max, valuation(Int(2 * ai), p));
        const long kmax = 2 * s_max + 1;

        // arithmetic fits in int64: moduli p^kmax are tiny
        std::int64_t pk = 1;
        const std::int64_t pl = static_cast<std::int64_t>(p);
        for (long i = 0; i < kmax; ++i) pk *= pl;
        const std::size_t n = a.size();
        std::vector<std::int64_t> c(n);
        for (std::size_t i = 0; i < n; ++i)
            c[i] = static_cast<std::int64_t>(mod_reduce(a[i], Int(pk)));

        auto val64 = [&](std::int64_t x) {
            if (x == 0) return kmax + 1; // treated as "at least the modulus"
            long v = 0;
            while (x % pl == 0) { x /= pl; ++v; }
            return v;
        };
        auto f_mod = [&](const std::vector<std::int64_t>& x) {
            std::int64_t s = 0;
            for (std::size_t i = 0; i < n; ++i) s = (s + c[i] % pk * (x[i] * x[i] % pk)) % pk;
            return ((s % pk) + pk) % pk;
        };
        auto certified = [&](const std::vector<std::int64_t>& x, long level) {
            long s = kmax + 1;
            for (std::size_t i = 0; i < n; ++i) {
                std::int64_t g = (2 * c[i] % pk) * (x[i] % pk) % pk;
                s = std::min(s, val64(g));
            }
            if (s > s_max) return false; // cannot happen for primitive x; defensive cap
            long need = 2 * s + 1;
            if (need > level) {
                std::int64_t m = 1;
                for (long i = 0; i < need; ++i) m *= pl;
                return f_mod(x) % m == 0;
            }
            return true; // f = 0 mod p^level already implies the criterion
        };

        // level 1: primitive residues
        std::vector<std::vector<std::int64_t>> layer;
        std::vector<std::int64_t> x(n, 0);
        const long work_cap = 8000000;
        long work = 0;
        std::int64_t total = 1;
        for (std::size_t i = 0; i < n; ++i) total *= pl;
        for (std::int64_t code = 1; code < total; ++code) {
            std::int64_t cc = code;
            for (std::size_t i = 0; i < n; ++i) { x[i] = cc % pl; cc /= pl; }
            if (f_mod(x) % pl != 0) continue;
            if (certified(x, 1)) return true;
            layer.push_back(x);
        }

        std::int64_t mod_level = pl;
        for (long level = 1; level < kmax; ++level) {
            std::vector<std::vector<std::int64_t>> next;
            std::int64_t mod_next = mod_level * pl;
            for (const auto& base : layer) {
                std::int64_t branches = 1;
                for (std::size_t i = 0; i < n; ++i) branches *= pl;
                for (std::int64_t code = 0; code < branches; ++code) {
                    require(++work < work_cap, errc::budget_exceeded, "oracle work cap hit");
                    std::int64_t cc = code;
                    std::vector<std::int64_t> y = base;
                    for (std::size_t i = 0; i < n; ++i) { y[i] += (cc % pl) * mod_level; cc /= pl; }
                    std::int64_t fv = 0;
                    for (std::size_t i = 0; i < n; ++i)
                        fv = (fv + c[i] % mod_next * (y[i] * y[i] % mod_next)) % mod_next;
                    if (((fv % mod_next) + mod_next) % mod_next != 0) continue;
                    if (certified(y, level + 1)) return true;
                    next.push_back(std::move(y));
                }
            }
            if (next.empty()) return false;
            layer = std::move(next);
            mod_level = mod_next;
        }
        // at level kmax every primitive survivor certifies
        return !layer.empty();
    }

    /// Does the diagonal form represent a over Q_p?
    static bool represents(std::vector<Int> diag, const Int& a, const Int& p) {
        diag.push_back(-a);
        return isotropic(diag, p);
    }

    /// Is r a square in Q_p, via solubility of z^2 = r?
    static bool square_in_Qp(const Rat& r, const Int& p) {
        require(r != 0, errc::invalid_input, "square test of 0");
        return isotropic({num(r) * den(r), Int(-1)}, p);
    }

    /// Hilbert symbol by solubility of z^2 = a x^2 + b y^2.
    static int hilbert(const Rat& a, const Rat& b, const Int& p) {
        Int ai = num(a) * den(a), bi = num(b) * den(b);
        return isotropic({ai, bi, Int(-1)}, p) ? 1 : -1;
    }

    /// Witt index of a rank <= 4 diagonal form over Q_p: isotropy decides w >= 1,
    /// and for isotropic rank-4 forms w = 2 exactly when the discriminant is a
    /// local square (the residual binary form is then hyperbolic).
    static long witt_rank_le4(const std::vector<Int>& diag, const Int& p) {
        require(diag.size() <= 4, errc::invalid_input, "oracle witt limited to rank 4");
        if (!isotropic(diag, p)) return 0;
        if (diag.size() < 4) return 1;
        Int disc = 1;
        for (const auto& d : diag) disc *= d;
        return square_in_Qp(Rat(disc), p) ? 2 : 1;
    }
};

} // namespace k3lg::oracle
