#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "k3lg/error.hpp"

namespace k3lg {

using Int = boost::multiprecision::cpp_int;
using Rat = boost::multiprecision::cpp_rational;

inline Int num(const Rat& r) { return boost::multiprecision::numerator(r); }
inline Int den(const Rat& r) { return boost::multiprecision::denominator(r); }

inline int sign_of(const Int& n) { return n.sign(); }
inline int sign_of(const Rat& r) { return num(r).sign(); }

// ---------------------------------------------------------------------------
// string round-trip ("p/q", exact)

inline std::string to_string(const Int& n) { return n.str(); }

inline std::string to_string(const Rat& r) {
    if (den(r) == 1) return num(r).str();
    return num(r).str() + "/" + den(r).str();
}

inline Int parse_int(const std::string& s) {
    if (s.empty()) fail(errc::parse_error, "empty integer literal");
    std::size_t i = (s[0] == '-' || s[0] == '+') ? 1 : 0;
    if (i == s.size()) fail(errc::parse_error, "bad integer literal '" + s + "'");
    for (; i < s.size(); ++i)
        if (s[i] < '0' || s[i] > '9') fail(errc::parse_error, "bad integer literal '" + s + "'");
    return Int(s);
}

inline Rat parse_rat(const std::string& s) {
    auto slash = s.find('/');
    if (slash == std::string::npos) return Rat(parse_int(s));
    Int p = parse_int(s.substr(0, slash));
    Int q = parse_int(s.substr(slash + 1));
    if (q == 0) fail(errc::parse_error, "zero denominator in '" + s + "'");
    return Rat(p, q);
}

// ---------------------------------------------------------------------------
// squares

inline Int isqrt(const Int& n) {
    if (n < 0) fail(errc::invalid_input, "isqrt of negative");
    return boost::multiprecision::sqrt(n);
}

inline bool is_square(const Int& n) {
    if (n < 0) return false;
    Int r = boost::multiprecision::sqrt(n);
    return r * r == n;
}

/// Exact square root of a rational, if it is a square.
inline std::optional<Rat> sqrt_exact(const Rat& r) {
    if (r < 0) return std::nullopt;
    Int p = num(r), q = den(r);
    if (!is_square(p) || !is_square(q)) return std::nullopt;
    return Rat(isqrt(p), isqrt(q));
}

inline bool is_square(const Rat& r) { return sqrt_exact(r).has_value(); }

// ---------------------------------------------------------------------------
// valuations and unit parts

/// p-adic valuation of a nonzero integer.
inline long valuation(Int n, const Int& p) {
    require(n != 0, errc::invalid_input, "valuation of 0");
    long v = 0;
    while (n % p == 0) { n /= p; ++v; }
    return v;
}

inline long valuation(const Rat& r, const Int& p) {
    return valuation(num(r), p) - valuation(den(r), p);
}

/// r with all powers of p removed (a p-adic unit).
inline Rat p_unit_part(const Rat& r, const Int& p) {
    Int n = num(r), d = den(r);
    while (n % p == 0) n /= p;
    while (d % p == 0) d /= p;
    return Rat(n, d);
}

inline Int mod_reduce(Int a, const Int& m) {
    a %= m;
    if (a < 0) a += m;
    return a;
}

inline Int egcd(const Int& a, const Int& b, Int& x, Int& y) {
    if (b == 0) { x = (a < 0) ? -1 : 1; y = 0; return boost::multiprecision::abs(a); }
    Int x1, y1;
    Int g = egcd(b, a % b, x1, y1);
    x = y1;
    y = x1 - (a / b) * y1;
    return g;
}

inline Int inv_mod(const Int& a, const Int& m) {
    Int x, y;
    Int g = egcd(mod_reduce(a, m), m, x, y);
    require(g == 1, errc::invalid_input, "not invertible mod " + m.str());
    return mod_reduce(x, m);
}

/// Residue of a p-adic unit rational modulo m (m a power of the prime, or the prime itself).
inline Int unit_mod(const Rat& u, const Int& m) {
    Int n = mod_reduce(num(u), m);
    Int d = mod_reduce(den(u), m);
    return mod_reduce(n * inv_mod(d, m), m);
}

// ---------------------------------------------------------------------------
// primes

inline bool miller_rabin_witness(const Int& n, const Int& a, const Int& d, int r) {
    Int x = boost::multiprecision::powm(a % n, d, n);
    if (x == 1 || x == n - 1) return false;
    for (int i = 1; i < r; ++i) {
        x = (x * x) % n;
        if (x == n - 1) return false;
    }
    return true;
}

/// Deterministic below 3.3e24 with this base set; treated as strong evidence above.
inline bool is_prime(const Int& n) {
    if (n < 2) return false;
    static const std::array<int, 13> small = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41};
    for (int p : small) {
        if (n == p) return true;
        if (n % p == 0) return false;
    }
    Int d = n - 1;
    int r = 0;
    while (d % 2 == 0) { d /= 2; ++r; }
    for (int a : small)
        if (miller_rabin_witness(n, Int(a), d, r)) return false;
    return true;
}

/// Legendre symbol (a|p) for odd prime p; 0 when p | a.
inline int legendre(const Int& a, const Int& p) {
    Int r = mod_reduce(a, p);
    if (r == 0) return 0;
    Int e = boost::multiprecision::powm(r, (p - 1) / 2, p);
    return e == 1 ? 1 : -1;
}

// ---------------------------------------------------------------------------
// factorization (trial division only, hard bound)

struct factor_limits {
    Int trial_bound = 1000000;
};

/// Prime factorization of |n| by trial division. Residual cofactors are accepted
/// only when certified prime; anything else is a hard error so square classes
/// never come out silently wrong.
inline std::map<Int, long> trial_factor(Int n, const factor_limits& lim = {}) {
    require(n != 0, errc::invalid_input, "factoring 0");
    std::map<Int, long> out;
    n = boost::multiprecision::abs(n);
    for (Int p = 2; p * p <= n && p <= lim.trial_bound; p == 2 ? p = 3 : p += 2) {
        while (n % p == 0) { n /= p; ++out[p]; }
    }
    if (n > 1) {
        if (n <= lim.trial_bound * lim.trial_bound || is_prime(n)) {
            if (!is_prime(n))
                fail(errc::factor_bound_exceeded,
                     "composite cofactor " + n.str() + " beyond trial bound " + lim.trial_bound.str());
            ++out[n];
        } else {
            fail(errc::factor_bound_exceeded,
                 "cofactor " + n.str() + " beyond trial bound " + lim.trial_bound.str());
        }
    }
    return out;
}

/// The squarefree integer representing r modulo nonzero rational squares.
inline Int squarefree_class(const Rat& r, const factor_limits& lim = {}) {
    require(r != 0, errc::degenerate_form, "square class of 0");
    Int m = num(r) * den(r); // same class as r
    Int out = (m < 0) ? -1 : 1;
    for (const auto& [p, e] : trial_factor(m, lim))
        if (e % 2) out *= p;
    return out;
}

/// Odd primes dividing n (n != 0), plus 2, sorted; the standard place support of 2*n.
inline std::vector<Int> prime_support_with_two(const Int& n, const factor_limits& lim = {}) {
    std::vector<Int> ps{2};
    for (const auto& [p, e] : trial_factor(n == 0 ? Int(1) : n, lim))
        if (p != 2) ps.push_back(p);
    return ps;
}

// ---------------------------------------------------------------------------
// constructive sums of squares

/// a^2 + b^2 = m; exhaustive below a small bound, certificate-based above
/// (powers of two, squares, primes = 1 mod 4; composites beyond the bound are
/// reached through the callers' descent loops).
inline std::optional<std::pair<Int, Int>> two_squares(const Int& m) {
    if (m < 0) return std::nullopt;
    if (m == 0) return std::make_pair(Int(0), Int(0));
    if (m <= 1000000) {
        for (Int a = isqrt(m); 2 * a * a >= m; --a) {
            Int b2 = m - a * a;
            if (is_square(b2)) return std::make_pair(a, isqrt(b2));
        }
        return std::nullopt;
    }
    if (is_square(m)) return std::make_pair(isqrt(m), Int(0));
    if (m % 4 == 0) {
        auto sub = two_squares(m / 4);
        if (!sub) return std::nullopt;
        return std::make_pair(2 * sub->first, 2 * sub->second);
    }
    if (m % 2 == 0) {
        auto sub = two_squares(m / 2);
        if (!sub) return std::nullopt;
        return std::make_pair(sub->first + sub->second,
                              boost::multiprecision::abs(sub->first - sub->second));
    }
    if (m % 4 != 1 || !is_prime(m)) return std::nullopt;
    // Hermite-Serret descent on a square root of -1 mod m.
    Int x = 0;
    for (Int g = 2; g < 100; ++g) {
        Int cand = boost::multiprecision::powm(g, (m - 1) / 4, m);
        if ((cand * cand) % m == m - 1) { x = cand; break; }
    }
    if (x == 0) return std::nullopt;
    Int a = m, b = x;
    Int bound = isqrt(m);
    while (b > bound) { Int t = a % b; a = b; b = t; }
    Int c2 = m - b * b;
    if (!is_square(c2)) return std::nullopt;
    return std::make_pair(b, isqrt(c2));
}

/// Exact three-squares criterion: n >= 0 is a sum of three squares unless it
/// has the form 4^a (8b + 7).
inline bool three_square_representable(Int n) {
    if (n < 0) return false;
    while (n % 4 == 0 && n > 0) n /= 4;
    return n % 8 != 7;
}

inline std::optional<std::array<Int, 3>> three_squares(const Int& n, long tries = 2000) {
    if (!three_square_representable(n)) return std::nullopt;
    if (n == 0) return std::array<Int, 3>{0, 0, 0};
    Int z = isqrt(n);
    for (long t = 0; t <= tries && z >= 0; ++t, --z) {
        if (auto ab = two_squares(n - z * z))
            return std::array<Int, 3>{z, ab->first, ab->second};
    }
    return std::nullopt;
}

/// Lagrange decomposition n = a^2 + b^2 + c^2 + d^2: peel one square so the
/// remainder passes the three-squares criterion.
inline std::optional<std::array<Int, 4>> four_squares(const Int& n, long tries = 2000) {
    if (n < 0) return std::nullopt;
    if (n == 0) return std::array<Int, 4>{0, 0, 0, 0};
    if (n % 4 == 0) {
        auto sub = four_squares(n / 4, tries);
        if (!sub) return std::nullopt;
        for (auto& v : *sub) v *= 2;
        return sub;
    }
    for (Int w = 0; w * w <= n && w <= 8; ++w) {
        if (!three_square_representable(n - w * w)) continue;
        if (auto abc = three_squares(n - w * w, tries))
            return std::array<Int, 4>{w, (*abc)[0], (*abc)[1], (*abc)[2]};
    }
    return std::nullopt;
}

inline long euler_phi(long m) {
    long out = m;
    for (long p = 2; p * p <= m; ++p)
        if (m % p == 0) {
            out -= out / p;
            while (m % p == 0) m /= p;
        }
    if (m > 1) out -= out / m;
    return out;
}

} // namespace k3lg
