#pragma once

/**
 * @file linalg.hpp
 * @brief Dense complex linear algebra at desk scale.
 *
 * Everything here works on small matrices (dimension up to a few dozen) held
 * in row-major std::vector storage. Values are immutable once built and every
 * free function is pure.
 */

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "beta/error.hpp"

namespace beta::linalg {

using Scalar = std::complex<double>;

inline constexpr double kOrthoTol = 1e-10;
inline constexpr double kReconTol = 1e-9;

class Vector {
public:
    Vector() = default;
    explicit Vector(std::size_t dim) : data_(dim, Scalar{0.0, 0.0}) { check_dim(dim, "vector"); }
    Vector(std::initializer_list<Scalar> values) : data_(values) { check_dim(data_.size(), "vector"); }
    explicit Vector(std::vector<Scalar> values) : data_(std::move(values)) {
        check_dim(data_.size(), "vector");
    }

    static Vector basis(std::size_t dim, std::size_t index) {
        if (index >= dim) fail(errc::domain, "basis index out of range");
        Vector v(dim);
        v.data_[index] = 1.0;
        return v;
    }

    std::size_t dim() const { return data_.size(); }
    const Scalar& operator[](std::size_t i) const { return data_[i]; }
    Scalar& operator[](std::size_t i) { return data_[i]; }
    std::span<const Scalar> entries() const { return data_; }
    auto begin() const { return data_.begin(); }
    auto end() const { return data_.end(); }

    double norm() const {
        double s = 0.0;
        for (const auto& z : data_) s += std::norm(z);
        return std::sqrt(s);
    }

    Vector normalized() const {
        const double n = norm();
        if (!(n > 0.0)) fail(errc::degeneracy, "cannot normalize a zero vector");
        Vector out = *this;
        for (auto& z : out.data_) z /= n;
        return out;
    }

    bool operator==(const Vector&) const = default;

private:
    std::vector<Scalar> data_;
};

/// Conjugate-linear in the first argument: <a|b>.
inline Scalar inner(const Vector& a, const Vector& b) {
    if (a.dim() != b.dim()) fail(errc::dimension, "inner product of unequal dimensions");
    Scalar s{0.0, 0.0};
    for (std::size_t i = 0; i < a.dim(); ++i) s += std::conj(a[i]) * b[i];
    return s;
}

inline Vector operator+(const Vector& a, const Vector& b) {
    if (a.dim() != b.dim()) fail(errc::dimension, "vector sum of unequal dimensions");
    Vector out = a;
    for (std::size_t i = 0; i < a.dim(); ++i) out[i] += b[i];
    return out;
}

inline Vector operator-(const Vector& a, const Vector& b) {
    if (a.dim() != b.dim()) fail(errc::dimension, "vector difference of unequal dimensions");
    Vector out = a;
    for (std::size_t i = 0; i < a.dim(); ++i) out[i] -= b[i];
    return out;
}

inline Vector operator*(Scalar s, const Vector& v) {
    Vector out = v;
    for (std::size_t i = 0; i < v.dim(); ++i) out[i] *= s;
    return out;
}

inline double max_abs_diff(const Vector& a, const Vector& b) {
    if (a.dim() != b.dim()) fail(errc::dimension, "comparison of unequal dimensions");
    double m = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols) {
        check_dim(rows, "matrix rows");
        check_dim(cols, "matrix cols");
        data_.assign(rows * cols, Scalar{0.0, 0.0});
    }
    Matrix(std::initializer_list<std::initializer_list<Scalar>> rows) {
        rows_ = rows.size();
        cols_ = rows_ == 0 ? 0 : rows.begin()->size();
        check_dim(rows_, "matrix rows");
        check_dim(cols_, "matrix cols");
        for (const auto& r : rows) {
            if (r.size() != cols_) fail(errc::dimension, "ragged matrix literal");
            data_.insert(data_.end(), r.begin(), r.end());
        }
    }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    static Matrix diagonal(std::span<const Scalar> d) {
        Matrix m(d.size(), d.size());
        for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
        return m;
    }

    /// |u><v|
    static Matrix outer(const Vector& u, const Vector& v) {
        Matrix m(u.dim(), v.dim());
        for (std::size_t i = 0; i < u.dim(); ++i)
            for (std::size_t j = 0; j < v.dim(); ++j) m(i, j) = u[i] * std::conj(v[j]);
        return m;
    }

    static Matrix from_columns(std::span<const Vector> cols) {
        if (cols.empty()) fail(errc::domain, "no columns");
        Matrix m(cols[0].dim(), cols.size());
        for (std::size_t j = 0; j < cols.size(); ++j) {
            if (cols[j].dim() != m.rows_) fail(errc::dimension, "columns of unequal dimension");
            for (std::size_t i = 0; i < m.rows_; ++i) m(i, j) = cols[j][i];
        }
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool square() const { return rows_ == cols_; }

    const Scalar& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
    Scalar& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }

    Vector column(std::size_t j) const {
        Vector v(rows_);
        for (std::size_t i = 0; i < rows_; ++i) v[i] = (*this)(i, j);
        return v;
    }

    Vector row(std::size_t i) const {
        Vector v(cols_);
        for (std::size_t j = 0; j < cols_; ++j) v[j] = (*this)(i, j);
        return v;
    }

    Matrix adjoint() const {
        Matrix m(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) m(j, i) = std::conj((*this)(i, j));
        return m;
    }

    Matrix transpose() const {
        Matrix m(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) m(j, i) = (*this)(i, j);
        return m;
    }

    Scalar trace() const {
        Scalar t{0.0, 0.0};
        for (std::size_t i = 0; i < std::min(rows_, cols_); ++i) t += (*this)(i, i);
        return t;
    }

    double max_abs() const {
        double m = 0.0;
        for (const auto& z : data_) m = std::max(m, std::abs(z));
        return m;
    }

    bool is_hermitian(double tol = 1e-12) const {
        if (!square()) return false;
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = i; j < cols_; ++j)
                if (std::abs((*this)(i, j) - std::conj((*this)(j, i))) > tol) return false;
        return true;
    }

    bool is_real(double tol = 1e-12) const {
        return std::all_of(data_.begin(), data_.end(),
                           [tol](const Scalar& z) { return std::abs(z.imag()) <= tol; });
    }

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<Scalar> data_;
};

inline Matrix operator*(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) fail(errc::dimension, "matrix product shape mismatch");
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const Scalar aik = a(i, k);
            if (aik == Scalar{}) continue;
            for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
        }
    return c;
}

inline Vector operator*(const Matrix& a, const Vector& v) {
    if (a.cols() != v.dim()) fail(errc::dimension, "matrix-vector shape mismatch");
    Vector out(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        Scalar s{0.0, 0.0};
        for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * v[j];
        out[i] = s;
    }
    return out;
}

inline Matrix operator+(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) fail(errc::dimension, "matrix sum shape mismatch");
    Matrix c = a;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) c(i, j) += b(i, j);
    return c;
}

inline Matrix operator-(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        fail(errc::dimension, "matrix difference shape mismatch");
    Matrix c = a;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) c(i, j) -= b(i, j);
    return c;
}

inline Matrix operator*(Scalar s, const Matrix& a) {
    Matrix c = a;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) c(i, j) *= s;
    return c;
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) { return (a - b).max_abs(); }

// ---------------------------------------------------------------------------
// Kronecker product
// ---------------------------------------------------------------------------

namespace detail {
inline std::size_t checked_product(std::size_t a, std::size_t b, const char* what) {
    if (a != 0 && b > dim_cap() / a)
        fail(errc::capacity, std::string(what) + ": product dimension exceeds cap " +
                                 std::to_string(dim_cap()));
    const std::size_t n = a * b;
    check_dim(n, what);
    return n;
}
}  // namespace detail

inline Vector tensor(const Vector& a, const Vector& b) {
    Vector out(detail::checked_product(a.dim(), b.dim(), "tensor"));
    for (std::size_t i = 0; i < a.dim(); ++i)
        for (std::size_t j = 0; j < b.dim(); ++j) out[i * b.dim() + j] = a[i] * b[j];
    return out;
}

inline Matrix tensor(const Matrix& a, const Matrix& b) {
    Matrix out(detail::checked_product(a.rows(), b.rows(), "tensor"),
               detail::checked_product(a.cols(), b.cols(), "tensor"));
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            for (std::size_t k = 0; k < b.rows(); ++k)
                for (std::size_t l = 0; l < b.cols(); ++l)
                    out(i * b.rows() + k, j * b.cols() + l) = a(i, j) * b(k, l);
    return out;
}

// ---------------------------------------------------------------------------
// Eigen decomposition
// ---------------------------------------------------------------------------

struct EigenPair {
    Scalar value;
    Vector vector;
};

namespace detail {

// First component with magnitude above the noise floor becomes real and >= 0.
inline Vector fix_phase(Vector v) {
    for (std::size_t i = 0; i < v.dim(); ++i) {
        const double mag = std::abs(v[i]);
        if (mag > 1e-12) {
            const Scalar rot = std::conj(v[i]) / mag;
            for (std::size_t k = 0; k < v.dim(); ++k) v[k] *= rot;
            v[i] = mag;
            break;
        }
    }
    return v;
}

inline void sort_pairs(std::vector<EigenPair>& pairs) {
    std::stable_sort(pairs.begin(), pairs.end(), [](const EigenPair& a, const EigenPair& b) {
        if (std::abs(a.value.real() - b.value.real()) > 1e-12) return a.value.real() > b.value.real();
        return a.value.imag() > b.value.imag() + 1e-12;
    });
}

inline std::vector<EigenPair> eigen_1x1(const Matrix& m) {
    return {EigenPair{m(0, 0), Vector{Scalar{1.0, 0.0}}}};
}

// Closed-form roots of the characteristic polynomial of a 2x2 matrix.
inline std::vector<EigenPair> eigen_2x2(const Matrix& m) {
    const Scalar a = m(0, 0), b = m(0, 1), c = m(1, 0), d = m(1, 1);
    const Scalar tr = a + d;
    const Scalar det = a * d - b * c;
    Scalar root = std::sqrt(tr * tr - 4.0 * det);
    // Choose the sign that avoids cancellation, then use Vieta for the other root.
    if (std::abs(tr + root) < std::abs(tr - root)) root = -root;
    const Scalar l1 = (tr + root) / 2.0;
    const Scalar l2 = std::abs(l1) > 0.0 ? det / l1 : (tr - root) / 2.0;
    const bool hermitian = m.is_hermitian();

    const double scale = std::max(1.0, m.max_abs());
    auto vector_for = [&](Scalar lambda) -> std::vector<Vector> {
        const Scalar r00 = a - lambda, r01 = b, r10 = c, r11 = d - lambda;
        const double n0 = std::hypot(std::abs(r00), std::abs(r01));
        const double n1 = std::hypot(std::abs(r10), std::abs(r11));
        if (std::max(n0, n1) <= 1e-12 * scale)
            return {Vector::basis(2, 0), Vector::basis(2, 1)};
        // Null vector of the dominant row (r0, r1) is (r1, -r0).
        Vector v = n0 >= n1 ? Vector{r01, -r00} : Vector{r11, -r10};
        return {v.normalized()};
    };

    std::vector<EigenPair> out;
    if (std::abs(l1 - l2) <= 1e-12 * scale) {
        auto vs = vector_for(l1);
        const Scalar lambda = hermitian ? Scalar{l1.real(), 0.0} : l1;
        out.push_back({lambda, vs[0]});
        out.push_back({lambda, vs.size() > 1 ? vs[1] : vs[0]});
    } else {
        for (Scalar lambda : {l1, l2}) {
            if (hermitian) lambda = Scalar{lambda.real(), 0.0};
            out.push_back({lambda, vector_for(lambda)[0]});
        }
    }
    return out;
}

// Cyclic complex Jacobi sweeps; exact orthonormal eigenvectors even for
// repeated eigenvalues.
inline std::vector<EigenPair> eigen_hermitian_jacobi(const Matrix& m, int max_sweeps) {
    const std::size_t n = m.rows();
    Matrix a = m;
    Matrix v = Matrix::identity(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) total += std::norm(a(i, j));
    const double floor = std::max(total, 1e-300) * 1e-32;

    bool converged = false;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += std::norm(a(p, q));
        if (off <= floor) {
            converged = true;
            break;
        }
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const Scalar z = a(p, q);
                const double mag = std::abs(z);
                if (mag == 0.0) continue;
                const Scalar phase = z / mag;  // e^{i alpha}
                const double app = a(p, p).real(), aqq = a(q, q).real();
                const double theta = (aqq - app) / (2.0 * mag);
                double t = 1.0 / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                if (theta < 0.0) t = -t;
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                // G = diag(1, e^{-i alpha}) * [[c, s], [-s, c]] on coordinates (p, q).
                const Scalar gpp = c, gpq = s;
                const Scalar gqp = -s * std::conj(phase), gqq = c * std::conj(phase);
                for (std::size_t k = 0; k < n; ++k) {
                    const Scalar akp = a(k, p), akq = a(k, q);
                    a(k, p) = akp * gpp + akq * gqp;
                    a(k, q) = akp * gpq + akq * gqq;
                    const Scalar vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = vkp * gpp + vkq * gqp;
                    v(k, q) = vkp * gpq + vkq * gqq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const Scalar apk = a(p, k), aqk = a(q, k);
                    a(p, k) = std::conj(gpp) * apk + std::conj(gqp) * aqk;
                    a(q, k) = std::conj(gpq) * apk + std::conj(gqq) * aqk;
                }
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                a(p, p) = a(p, p).real();
                a(q, q) = a(q, q).real();
            }
        }
    }
    if (!converged) fail(errc::numeric, "Jacobi eigen solver did not converge within sweep budget");

    std::vector<EigenPair> out;
    out.reserve(n);
    for (std::size_t j = 0; j < n; ++j) out.push_back({Scalar{a(j, j).real(), 0.0}, v.column(j)});
    return out;
}

inline std::vector<EigenPair> eigen_general_qr(const Matrix& m) {
    const auto n = static_cast<Eigen::Index>(m.rows());
    Eigen::MatrixXcd em(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            em(i, j) = m(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(em, true);
    if (solver.info() != Eigen::Success) fail(errc::numeric, "QR eigen solver did not converge");
    std::vector<EigenPair> out;
    for (Eigen::Index j = 0; j < n; ++j) {
        Vector v(m.rows());
        for (Eigen::Index i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = solver.eigenvectors()(i, j);
        out.push_back({solver.eigenvalues()(j), v.normalized()});
    }
    return out;
}

}  // namespace detail

/**
 * @brief Eigenvalues and unit eigenvectors of a square matrix.
 *
 * Pairs come back sorted by descending real part, each eigenvector with its
 * first non-negligible component real and non-negative. 1x1 and 2x2 inputs
 * use the closed-form characteristic roots; larger Hermitian inputs use
 * complex Jacobi sweeps and larger general inputs use a Schur/QR solver.
 */
inline std::vector<EigenPair> eigen(const Matrix& m) {
    if (!m.square()) fail(errc::dimension, "eigen requires a square matrix");
    check_dim(m.rows(), "eigen");
    std::vector<EigenPair> pairs;
    if (m.rows() == 1)
        pairs = detail::eigen_1x1(m);
    else if (m.rows() == 2)
        pairs = detail::eigen_2x2(m);
    else if (m.is_hermitian())
        pairs = detail::eigen_hermitian_jacobi(m, 10000);
    else
        pairs = detail::eigen_general_qr(m);
    for (auto& p : pairs) p.vector = detail::fix_phase(p.vector);
    detail::sort_pairs(pairs);
    return pairs;
}

// ---------------------------------------------------------------------------
// Gram-Schmidt
// ---------------------------------------------------------------------------

inline bool is_orthonormal(std::span<const Vector> basis, double tol = kOrthoTol) {
    for (std::size_t i = 0; i < basis.size(); ++i)
        for (std::size_t j = i; j < basis.size(); ++j) {
            const Scalar g = inner(basis[i], basis[j]);
            const Scalar expect = i == j ? Scalar{1.0, 0.0} : Scalar{0.0, 0.0};
            if (std::abs(g - expect) > tol) return false;
        }
    return true;
}

namespace detail {
// Two passes of modified Gram-Schmidt.
inline Vector orthogonalize(std::span<const Vector> basis, Vector v) {
    for (int pass = 0; pass < 2; ++pass)
        for (const auto& b : basis) {
            const Scalar c = inner(b, v);
            for (std::size_t i = 0; i < v.dim(); ++i) v[i] -= c * b[i];
        }
    return v;
}
}  // namespace detail

/**
 * Extends an orthonormal basis by the normalized component of v orthogonal to
 * it. Throws errc::degeneracy when that component is below 1e-9 (relative to
 * max(1, |v|)).
 */
inline Vector gram_schmidt_extend(std::span<const Vector> basis, const Vector& v) {
    for (const auto& b : basis)
        if (b.dim() != v.dim()) fail(errc::dimension, "basis and vector dimensions differ");
    if (!is_orthonormal(basis)) fail(errc::domain, "basis is not orthonormal");
    const Vector r = detail::orthogonalize(basis, v);
    const double rn = r.norm();
    if (rn < 1e-9 * std::max(1.0, v.norm()))
        fail(errc::degeneracy, "vector is linearly dependent on the basis");
    return (1.0 / rn) * r;
}

/// Orthonormal basis of the span of `columns`, built by pivoted Gram-Schmidt.
/// Residuals below tol times the largest column norm, or below abs_floor, count as zero.
inline std::vector<Vector> orthonormal_range(std::span<const Vector> columns, double tol = 1e-9,
                                             double abs_floor = 0.0) {
    std::vector<Vector> basis;
    if (columns.empty()) return basis;
    std::vector<Vector> residual(columns.begin(), columns.end());
    double scale = 0.0;
    for (const auto& c : residual) scale = std::max(scale, c.norm());
    if (scale == 0.0 || scale <= abs_floor) return basis;
    const std::size_t dim = residual[0].dim();
    while (basis.size() < dim) {
        std::size_t best = 0;
        double best_norm = -1.0;
        for (std::size_t j = 0; j < residual.size(); ++j) {
            const double n = residual[j].norm();
            if (n > best_norm) {
                best_norm = n;
                best = j;
            }
        }
        const double cutoff = std::max(tol * scale, abs_floor);
        if (best_norm <= cutoff) break;
        Vector q = detail::orthogonalize(basis, residual[best]);
        const double qn = q.norm();
        if (qn <= cutoff) break;
        q = (1.0 / qn) * q;
        basis.push_back(q);
        for (auto& r : residual) {
            const Scalar c = inner(q, r);
            for (std::size_t i = 0; i < r.dim(); ++i) r[i] -= c * q[i];
        }
    }
    return basis;
}

// ---------------------------------------------------------------------------
// Polar decomposition
// ---------------------------------------------------------------------------

struct PolarFactors {
    Matrix rotation;  // Q, orthogonal
    Matrix stretch;   // S, symmetric positive semidefinite
    double theta = 0.0;
};

/// M = Q S with S = sqrt(M^T M). Requires a real, well-conditioned square input.
inline PolarFactors polar(const Matrix& m) {
    if (!m.square()) fail(errc::dimension, "polar requires a square matrix");
    if (!m.is_real()) fail(errc::domain, "polar requires a real matrix");
    const std::size_t n = m.rows();
    const Matrix gram = m.transpose() * m;
    const auto pairs = eigen(gram);
    const double largest = std::max(pairs.front().value.real(), 0.0);
    const double smallest = pairs.back().value.real();
    if (!(largest > 0.0) || !(smallest > 0.0) || std::sqrt(smallest / largest) < 1e-10)
        fail(errc::numeric, "polar decomposition of a singular matrix");

    Matrix stretch(n, n), inv_stretch(n, n);
    for (const auto& p : pairs) {
        // Real eigenvectors for a real symmetric input after the phase fix.
        Vector v = p.vector;
        for (std::size_t i = 0; i < n; ++i) v[i] = v[i].real();
        const double sigma = std::sqrt(p.value.real());
        stretch = stretch + Scalar{sigma} * Matrix::outer(v, v);
        inv_stretch = inv_stretch + Scalar{1.0 / sigma} * Matrix::outer(v, v);
    }
    Matrix rotation = m * inv_stretch;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            rotation(i, j) = rotation(i, j).real();
            stretch(i, j) = stretch(i, j).real();
        }
    const double c = std::clamp(rotation(0, 0).real(), -1.0, 1.0);
    return PolarFactors{rotation, stretch, std::acos(c)};
}

// ---------------------------------------------------------------------------
// Entropy and vector composition
// ---------------------------------------------------------------------------

/// -sum w log2 w over a probability vector, in bits.
inline double von_neumann_entropy(std::span<const double> weights) {
    if (weights.empty()) fail(errc::domain, "entropy of an empty distribution");
    double total = 0.0;
    for (double w : weights) {
        if (!std::isfinite(w)) fail(errc::domain, "non-finite weight");
        if (w < 0.0) fail(errc::domain, "negative weight");
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-9) fail(errc::domain, "weights do not sum to 1");
    double s = 0.0;
    for (double w : weights)
        if (w > 0.0) s -= w * std::log2(w);
    return std::clamp(s, 0.0, std::log2(static_cast<double>(weights.size())));
}

/// Entropy of the spectrum of a density matrix.
inline double von_neumann_entropy(const Matrix& rho) {
    if (!rho.is_hermitian(1e-10)) fail(errc::domain, "density matrix is not Hermitian");
    std::vector<double> w;
    for (const auto& p : eigen(rho)) w.push_back(std::max(p.value.real(), 0.0));
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    if (std::abs(total - 1.0) > 1e-9) fail(errc::domain, "density matrix trace is not 1");
    for (auto& x : w) x /= total;
    return von_neumann_entropy(std::span<const double>(w));
}

inline Vector direct_sum(const Vector& u, const Vector& v) {
    std::vector<Scalar> out(u.begin(), u.end());
    out.insert(out.end(), v.begin(), v.end());
    check_dim(out.size(), "direct_sum");
    return Vector(std::move(out));
}

inline Vector hadamard(const Vector& u, const Vector& v) {
    if (u.dim() != v.dim()) fail(errc::dimension, "hadamard product of unequal dimensions");
    Vector out(u.dim());
    for (std::size_t i = 0; i < u.dim(); ++i) out[i] = u[i] * v[i];
    return out;
}

/// Determinant by partial-pivot LU.
inline Scalar determinant(const Matrix& m) {
    if (!m.square()) fail(errc::dimension, "determinant of a non-square matrix");
    Matrix a = m;
    const std::size_t n = a.rows();
    Scalar det{1.0, 0.0};
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(a(i, k)) > std::abs(a(piv, k))) piv = i;
        if (a(piv, k) == Scalar{}) return Scalar{};
        if (piv != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(piv, j));
            det = -det;
        }
        det *= a(k, k);
        for (std::size_t i = k + 1; i < n; ++i) {
            const Scalar f = a(i, k) / a(k, k);
            for (std::size_t j = k; j < n; ++j) a(i, j) -= f * a(k, j);
        }
    }
    return det;
}

/// Determinant nonzero relative to the entry scale.
inline bool is_invertible(const Matrix& m, double tol = 1e-12) {
    if (!m.square()) return false;
    return std::abs(determinant(m)) > tol * std::pow(std::max(1.0, m.max_abs()), double(m.rows()));
}

}  // namespace beta::linalg
