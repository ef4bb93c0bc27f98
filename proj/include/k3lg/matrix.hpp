#pragma once

#include <algorithm>
#include <cstddef>
#include <initializer_list>
#include <optional>
#include <utility>
#include <vector>

#include "k3lg/error.hpp"
#include "k3lg/rational.hpp"

namespace k3lg {

/// Dense row-major matrix over an exact scalar (Int or Rat).
template <class T>
class Mat {
public:
    Mat() : rows_(0), cols_(0) {}
    Mat(std::size_t r, std::size_t c) : rows_(r), cols_(c), a_(r * c, T(0)) {}
    Mat(std::initializer_list<std::initializer_list<T>> init) {
        rows_ = init.size();
        cols_ = rows_ ? init.begin()->size() : 0;
        a_.reserve(rows_ * cols_);
        for (const auto& row : init) {
            require(row.size() == cols_, errc::invalid_input, "ragged matrix literal");
            for (const auto& v : row) a_.push_back(v);
        }
    }

    static Mat identity(std::size_t n) {
        Mat m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = T(1);
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    T& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
    const T& operator()(std::size_t i, std::size_t j) const { return a_[i * cols_ + j]; }

    bool operator==(const Mat& o) const {
        return rows_ == o.rows_ && cols_ == o.cols_ && a_ == o.a_;
    }

    std::vector<T> row(std::size_t i) const {
        return std::vector<T>(a_.begin() + i * cols_, a_.begin() + (i + 1) * cols_);
    }
    void set_row(std::size_t i, const std::vector<T>& v) {
        require(v.size() == cols_, errc::invalid_input, "row length mismatch");
        std::copy(v.begin(), v.end(), a_.begin() + i * cols_);
    }

    void swap_rows(std::size_t i, std::size_t j) {
        if (i == j) return;
        for (std::size_t k = 0; k < cols_; ++k) std::swap((*this)(i, k), (*this)(j, k));
    }
    void swap_cols(std::size_t i, std::size_t j) {
        if (i == j) return;
        for (std::size_t k = 0; k < rows_; ++k) std::swap((*this)(k, i), (*this)(k, j));
    }

    Mat transpose() const {
        Mat t(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

    friend Mat operator*(const Mat& x, const Mat& y) {
        require(x.cols_ == y.rows_, errc::dimension_mismatch, "matrix product shape");
        Mat z(x.rows_, y.cols_);
        for (std::size_t i = 0; i < x.rows_; ++i)
            for (std::size_t k = 0; k < x.cols_; ++k) {
                const T& xik = x(i, k);
                if (xik == 0) continue;
                for (std::size_t j = 0; j < y.cols_; ++j) z(i, j) += xik * y(k, j);
            }
        return z;
    }

private:
    std::size_t rows_, cols_;
    std::vector<T> a_;
};

using MatZ = Mat<Int>;
using MatQ = Mat<Rat>;
using VecZ = std::vector<Int>;
using VecQ = std::vector<Rat>;

template <class T>
bool is_symmetric(const Mat<T>& m) {
    if (m.rows() != m.cols()) return false;
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = i + 1; j < m.cols(); ++j)
            if (m(i, j) != m(j, i)) return false;
    return true;
}

inline MatQ to_rational(const MatZ& m) {
    MatQ q(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) q(i, j) = Rat(m(i, j));
    return q;
}

inline Mat<Int> block_diag(const std::vector<MatZ>& blocks) {
    std::size_t n = 0;
    for (const auto& b : blocks) n += b.rows();
    MatZ out(n, n);
    std::size_t off = 0;
    for (const auto& b : blocks) {
        for (std::size_t i = 0; i < b.rows(); ++i)
            for (std::size_t j = 0; j < b.cols(); ++j) out(off + i, off + j) = b(i, j);
        off += b.rows();
    }
    return out;
}

// ---------------------------------------------------------------------------
// vectors

inline Rat dot(const VecQ& u, const VecQ& v) {
    require(u.size() == v.size(), errc::dimension_mismatch, "dot length");
    Rat s = 0;
    for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
    return s;
}

/// u * G * v^T for row vectors.
inline Rat gram_eval(const MatQ& g, const VecQ& u, const VecQ& v) {
    require(u.size() == g.rows() && v.size() == g.cols(), errc::dimension_mismatch, "gram_eval");
    Rat s = 0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (u[i] == 0) continue;
        Rat t = 0;
        for (std::size_t j = 0; j < v.size(); ++j)
            if (v[j] != 0) t += g(i, j) * v[j];
        s += u[i] * t;
    }
    return s;
}

inline VecQ scale(const VecQ& v, const Rat& c) {
    VecQ out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] * c;
    return out;
}

inline VecQ axpy(const VecQ& u, const Rat& c, const VecQ& v) {
    VecQ out(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) out[i] = u[i] + c * v[i];
    return out;
}

inline bool is_zero(const VecQ& v) {
    return std::all_of(v.begin(), v.end(), [](const Rat& x) { return x == 0; });
}

/// Scale a rational row to a primitive integer vector (content 1, first nonzero > 0).
inline VecZ primitive_row(const VecQ& v) {
    Int l = 1;
    for (const auto& x : v) l = boost::multiprecision::lcm(l, den(x));
    VecZ w(v.size());
    Int g = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        w[i] = num(v[i]) * (l / den(v[i]));
        g = boost::multiprecision::gcd(g, w[i]);
    }
    require(g != 0, errc::invalid_input, "primitive_row of zero vector");
    int s = 0;
    for (auto& x : w) {
        x /= g;
        if (s == 0 && x != 0) s = (x < 0) ? -1 : 1;
    }
    if (s < 0)
        for (auto& x : w) x = -x;
    return w;
}

inline VecQ to_rational(const VecZ& v) {
    VecQ out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = Rat(v[i]);
    return out;
}

// ---------------------------------------------------------------------------
// determinants

/// Fraction-free Bareiss determinant.
inline Int det_bareiss(MatZ m) {
    require(m.rows() == m.cols(), errc::invalid_input, "det of non-square");
    std::size_t n = m.rows();
    if (n == 0) return 1;
    Int prev = 1;
    int sig = 1;
    for (std::size_t k = 0; k + 1 < n; ++k) {
        if (m(k, k) == 0) {
            std::size_t piv = k + 1;
            while (piv < n && m(piv, k) == 0) ++piv;
            if (piv == n) return 0;
            m.swap_rows(k, piv);
            sig = -sig;
        }
        for (std::size_t i = k + 1; i < n; ++i)
            for (std::size_t j = k + 1; j < n; ++j)
                m(i, j) = (m(i, j) * m(k, k) - m(i, k) * m(k, j)) / prev;
        prev = m(k, k);
    }
    return sig * m(n - 1, n - 1);
}

inline Rat det(const MatQ& m) {
    require(m.rows() == m.cols(), errc::invalid_input, "det of non-square");
    Int l = 1;
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) l = boost::multiprecision::lcm(l, den(m(i, j)));
    MatZ z(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) z(i, j) = num(m(i, j)) * (l / den(m(i, j)));
    Rat d(det_bareiss(z));
    Rat scale_back = 1;
    for (std::size_t i = 0; i < m.rows(); ++i) scale_back *= Rat(1, l);
    return d * scale_back;
}

// ---------------------------------------------------------------------------
// rational elimination

/// Reduced row echelon form in place; returns pivot column indices.
inline std::vector<std::size_t> rref(MatQ& m) {
    std::vector<std::size_t> pivots;
    std::size_t r = 0;
    for (std::size_t c = 0; c < m.cols() && r < m.rows(); ++c) {
        std::size_t piv = r;
        while (piv < m.rows() && m(piv, c) == 0) ++piv;
        if (piv == m.rows()) continue;
        m.swap_rows(r, piv);
        Rat inv = Rat(1) / m(r, c);
        for (std::size_t j = c; j < m.cols(); ++j) m(r, j) *= inv;
        for (std::size_t i = 0; i < m.rows(); ++i) {
            if (i == r || m(i, c) == 0) continue;
            Rat f = m(i, c);
            for (std::size_t j = c; j < m.cols(); ++j) m(i, j) -= f * m(r, j);
        }
        pivots.push_back(c);
        ++r;
    }
    return pivots;
}

inline std::size_t rank(MatQ m) { return rref(m).size(); }

/// Rows form a basis of { x : A x^T = 0 }.
inline MatQ right_kernel(MatQ a) {
    auto pivots = rref(a);
    std::size_t n = a.cols();
    std::vector<bool> is_pivot(n, false);
    for (auto c : pivots) is_pivot[c] = true;
    MatQ out(n - pivots.size(), n);
    std::size_t k = 0;
    for (std::size_t c = 0; c < n; ++c) {
        if (is_pivot[c]) continue;
        out(k, c) = 1;
        for (std::size_t r = 0; r < pivots.size(); ++r) out(k, pivots[r]) = -a(r, c);
        ++k;
    }
    return out;
}

/// Solve x * A = b for a row vector x, if consistent.
inline std::optional<VecQ> solve_left(const MatQ& a, const VecQ& b) {
    require(b.size() == a.cols(), errc::dimension_mismatch, "solve_left shape");
    // augmented [A^T | b^T]
    MatQ aug(a.cols(), a.rows() + 1);
    for (std::size_t i = 0; i < a.cols(); ++i) {
        for (std::size_t j = 0; j < a.rows(); ++j) aug(i, j) = a(j, i);
        aug(i, a.rows()) = b[i];
    }
    auto pivots = rref(aug);
    for (auto c : pivots)
        if (c == a.rows()) return std::nullopt; // inconsistent
    VecQ x(a.rows(), Rat(0));
    for (std::size_t r = 0; r < pivots.size(); ++r) x[pivots[r]] = aug(r, a.rows());
    return x;
}

inline MatQ inverse(const MatQ& m) {
    require(m.rows() == m.cols(), errc::invalid_input, "inverse of non-square");
    std::size_t n = m.rows();
    MatQ aug(n, 2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) aug(i, j) = m(i, j);
        aug(i, n + i) = 1;
    }
    auto pivots = rref(aug);
    require(pivots.size() == n && pivots.back() == n - 1, errc::degenerate_form, "singular matrix");
    MatQ out(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) out(i, j) = aug(i, n + j);
    return out;
}

// ---------------------------------------------------------------------------
// Smith normal form

struct smith_result {
    std::vector<Int> divisors; ///< nonnegative, d_i | d_{i+1}, zeros trailing
    std::size_t rank = 0;
    MatZ winv; ///< V^{-1} for U*A*V = D, when requested
};

/// Smith normal form over Z. With want_right_inverse, tracks V^{-1}; its first
/// rank rows are a basis of the saturation of the row span of A.
inline smith_result smith_normal_form(MatZ a, bool want_right_inverse = false) {
    std::size_t m = a.rows(), n = a.cols();
    MatZ w;
    if (want_right_inverse) w = MatZ::identity(n);

    auto col_sub = [&](std::size_t dst, const Int& q, std::size_t src) {
        // col_dst -= q * col_src ; W tracks the inverse op on rows
        for (std::size_t i = 0; i < m; ++i) a(i, dst) -= q * a(i, src);
        if (want_right_inverse)
            for (std::size_t j = 0; j < n; ++j) w(src, j) += q * w(dst, j);
    };
    auto col_swap = [&](std::size_t i, std::size_t j) {
        a.swap_cols(i, j);
        if (want_right_inverse) w.swap_rows(i, j);
    };

    std::size_t t = 0;
    std::size_t steps = std::min(m, n);
    while (t < steps) {
        // locate minimal nonzero entry of the trailing submatrix
        std::size_t bi = m, bj = n;
        for (std::size_t i = t; i < m; ++i)
            for (std::size_t j = t; j < n; ++j)
                if (a(i, j) != 0 &&
                    (bi == m || boost::multiprecision::abs(a(i, j)) <
                                    boost::multiprecision::abs(a(bi, bj)))) {
                    bi = i;
                    bj = j;
                }
        if (bi == m) break; // submatrix is zero
        a.swap_rows(t, bi);
        col_swap(t, bj);

        bool dirty = true;
        while (dirty) {
            dirty = false;
            for (std::size_t i = t + 1; i < m; ++i) {
                if (a(i, t) == 0) continue;
                Int q = a(i, t) / a(t, t);
                for (std::size_t j = 0; j < n; ++j) a(i, j) -= q * a(t, j);
                if (a(i, t) != 0) {
                    a.swap_rows(t, i);
                    dirty = true;
                }
            }
            for (std::size_t j = t + 1; j < n; ++j) {
                if (a(t, j) == 0) continue;
                Int q = a(t, j) / a(t, t);
                col_sub(j, q, t);
                if (a(t, j) != 0) {
                    col_swap(t, j);
                    dirty = true;
                }
            }
        }
        // divisibility fix-up: fold any offending later entry into this pivot
        bool redo = false;
        for (std::size_t i = t + 1; i < m && !redo; ++i)
            for (std::size_t j = t + 1; j < n; ++j)
                if (a(i, j) % a(t, t) != 0) {
                    col_sub(t, Int(-1), j); // col_t += col_j
                    redo = true;
                    break;
                }
        if (!redo) ++t;
    }

    smith_result out;
    out.divisors.assign(std::min(m, n), Int(0));
    for (std::size_t i = 0; i < std::min(m, n); ++i) {
        out.divisors[i] = boost::multiprecision::abs(a(i, i));
        if (out.divisors[i] != 0) ++out.rank;
    }
    if (want_right_inverse) out.winv = std::move(w);
    return out;
}

/// Invariant factors of the Z-row span (nonzero Smith divisors).
inline std::vector<Int> invariant_factors(const MatZ& a) {
    auto s = smith_normal_form(a);
    std::vector<Int> out;
    for (const auto& d : s.divisors)
        if (d != 0) out.push_back(d);
    return out;
}

/// Clear denominators of a rational matrix: returns integer matrix and the common scale.
inline std::pair<MatZ, Int> clear_denominators(const MatQ& m) {
    Int l = 1;
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) l = boost::multiprecision::lcm(l, den(m(i, j)));
    MatZ z(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) z(i, j) = num(m(i, j)) * (l / den(m(i, j)));
    return {z, l};
}

} // namespace k3lg
