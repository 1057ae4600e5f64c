#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "strangeres/errors.hpp"
#include "strangeres/rng.hpp"

namespace sr {

using Vector = std::vector<double>;

inline double dot(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw DimensionError("dot: size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(const Vector& v) { return std::sqrt(dot(v, v)); }

inline double norm_inf(const Vector& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

inline Vector operator+(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw DimensionError("vector add: size mismatch");
    Vector r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
    return r;
}

inline Vector operator-(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw DimensionError("vector sub: size mismatch");
    Vector r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
    return r;
}

inline Vector operator*(double s, const Vector& a) {
    Vector r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = s * a[i];
    return r;
}

// Row-major dense matrix of doubles.
class Matrix {
  public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), a_(rows * cols, fill) {
        if (rows == 0 || cols == 0) throw DimensionError("Matrix: zero dimension");
    }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool square() const { return rows_ == cols_; }

    double& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a_[i * cols_ + j]; }

    const std::vector<double>& data() const { return a_; }
    std::vector<double>& data() { return a_; }

    Vector col(std::size_t j) const {
        Vector v(rows_);
        for (std::size_t i = 0; i < rows_; ++i) v[i] = (*this)(i, j);
        return v;
    }

    void set_col(std::size_t j, const Vector& v) {
        for (std::size_t i = 0; i < rows_; ++i) (*this)(i, j) = v[i];
    }

    Matrix transpose() const {
        Matrix t(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

    double max_abs() const {
        double m = 0.0;
        for (double x : a_) m = std::max(m, std::abs(x));
        return m;
    }

    void scale(double s) {
        for (double& x : a_) x *= s;
    }

  private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<double> a_;
};

inline Vector mat_vec(const Matrix& A, const Vector& x) {
    if (A.cols() != x.size()) throw DimensionError("mat_vec: size mismatch");
    Vector y(A.rows(), 0.0);
    for (std::size_t i = 0; i < A.rows(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < A.cols(); ++j) s += A(i, j) * x[j];
        y[i] = s;
    }
    return y;
}

inline Matrix mat_mul(const Matrix& A, const Matrix& B) {
    if (A.cols() != B.rows()) throw DimensionError("mat_mul: size mismatch");
    Matrix C(A.rows(), B.cols());
    for (std::size_t i = 0; i < A.rows(); ++i)
        for (std::size_t k = 0; k < A.cols(); ++k) {
            const double aik = A(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < B.cols(); ++j) C(i, j) += aik * B(k, j);
        }
    return C;
}

inline Matrix operator*(const Matrix& A, const Matrix& B) { return mat_mul(A, B); }

// Spectral norm via power iteration on A^T A. Stops at relative accuracy
// 1e-10 or 10*N^2 iterations, whichever comes first.
inline double operator_norm(const Matrix& A) {
    if (!A.square()) throw DimensionError("operator_norm: matrix must be square");
    const std::size_t n = A.rows();
    if (A.max_abs() == 0.0) return 0.0;

    Vector v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = 1.0 + static_cast<double>(i) / static_cast<double>(n + 1);
    double nv = norm2(v);
    for (double& x : v) x /= nv;

    const Matrix At = A.transpose();
    double lambda = 0.0;
    const std::size_t max_iter = 10 * n * n + 10;
    for (std::size_t it = 0; it < max_iter; ++it) {
        Vector w = mat_vec(At, mat_vec(A, v));
        const double lam = dot(v, w);
        const double wn = norm2(w);
        if (wn == 0.0) return 0.0;
        for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / wn;
        if (it > 0 && std::abs(lam - lambda) <= 1e-10 * std::max(1.0, std::abs(lam))) {
            lambda = lam;
            break;
        }
        lambda = lam;
    }
    return std::sqrt(std::max(lambda, 0.0));
}

// Spectral radius by Gelfand's formula with repeated squaring,
// renormalizing each step and tracking the log of the removed scale.
inline double spectral_radius(const Matrix& A, double tol = 1e-10) {
    if (!A.square()) throw DimensionError("spectral_radius: matrix must be square");
    if (!(tol > 0.0)) throw std::invalid_argument("spectral_radius: tol must be > 0");

    Matrix B = A;
    double log_scale = 0.0;  // log of the factor divided out of B so far
    double prev = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= 60; ++k) {
        const double nrm = operator_norm(B);
        if (nrm == 0.0) return 0.0;
        const double est = std::exp((log_scale + std::log(nrm)) / std::ldexp(1.0, k));
        // no early stop before 2^k >= N: a nilpotent part only dies at power N
        if (std::ldexp(1.0, k) >= static_cast<double>(A.rows()) && std::abs(est - prev) < tol)
            return est;
        prev = est;
        if (k == 60) throw NotConvergedError(est, "spectral_radius: not converged within squaring cap");
        // B <- B^2, renormalized by its max entry
        B = B * B;
        const double f = B.max_abs();
        if (f == 0.0) return 0.0;
        B.scale(1.0 / f);
        log_scale = 2.0 * log_scale + std::log(f);
    }
    return prev;  // unreachable
}

namespace detail {

// Householder QR of a square matrix; returns Q and R explicitly.
inline void householder_qr(const Matrix& A, Matrix& Q, Matrix& R) {
    const std::size_t n = A.rows();
    R = A;
    Q = Matrix::identity(n);
    for (std::size_t k = 0; k + 1 < n; ++k) {
        double nrm = 0.0;
        for (std::size_t i = k; i < n; ++i) nrm += R(i, k) * R(i, k);
        nrm = std::sqrt(nrm);
        if (nrm == 0.0) continue;
        const double alpha = R(k, k) >= 0.0 ? -nrm : nrm;
        Vector v(n, 0.0);
        for (std::size_t i = k; i < n; ++i) v[i] = R(i, k);
        v[k] -= alpha;
        const double vn2 = dot(v, v);
        if (vn2 == 0.0) continue;
        // R <- (I - 2 v v^T / v^T v) R ;  Q <- Q (I - 2 v v^T / v^T v)
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t i = k; i < n; ++i) s += v[i] * R(i, j);
            s *= 2.0 / vn2;
            for (std::size_t i = k; i < n; ++i) R(i, j) -= s * v[i];
        }
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t j = k; j < n; ++j) s += Q(i, j) * v[j];
            s *= 2.0 / vn2;
            for (std::size_t j = k; j < n; ++j) Q(i, j) -= s * v[j];
        }
    }
}

}  // namespace detail

// Haar-distributed orthogonal matrix: Gaussian fill, QR, then fix the sign
// ambiguity by the signs of diag(R).
inline Matrix haar_orthogonal(std::size_t n, Rng& rng) {
    if (n == 0) throw DimensionError("haar_orthogonal: n must be >= 1");
    Matrix G(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) G(i, j) = rng.gaussian();
    Matrix Q, R;
    detail::householder_qr(G, Q, R);
    for (std::size_t j = 0; j < n; ++j) {
        if (R(j, j) < 0.0)
            for (std::size_t i = 0; i < n; ++i) Q(i, j) = -Q(i, j);
    }
    return Q;
}

// Columns [C, AC, A^2 C, ..., A^{N-1} C].
inline Matrix krylov_matrix(const Matrix& A, const Vector& C) {
    if (!A.square() || A.rows() != C.size()) throw DimensionError("krylov_matrix: dimension mismatch");
    const std::size_t n = A.rows();
    Matrix K(n, n);
    Vector v = C;
    for (std::size_t j = 0; j < n; ++j) {
        K.set_col(j, v);
        if (j + 1 < n) v = mat_vec(A, v);
    }
    return K;
}

// Diagonal magnitudes of R from a column-pivoted Householder QR,
// in pivot order (non-increasing in exact arithmetic).
inline std::vector<double> cpqr_diagonal(const Matrix& M) {
    const std::size_t m = M.rows(), n = M.cols();
    Matrix R = M;
    const std::size_t steps = std::min(m, n);
    std::vector<double> diag(steps, 0.0);
    std::vector<std::size_t> perm(n);
    for (std::size_t j = 0; j < n; ++j) perm[j] = j;

    for (std::size_t k = 0; k < steps; ++k) {
        // pivot: trailing column with largest norm
        std::size_t best = k;
        double best_nrm = -1.0;
        for (std::size_t j = k; j < n; ++j) {
            double s = 0.0;
            for (std::size_t i = k; i < m; ++i) s += R(i, j) * R(i, j);
            if (s > best_nrm) {
                best_nrm = s;
                best = j;
            }
        }
        if (best != k)
            for (std::size_t i = 0; i < m; ++i) std::swap(R(i, k), R(i, best));

        double nrm = 0.0;
        for (std::size_t i = k; i < m; ++i) nrm += R(i, k) * R(i, k);
        nrm = std::sqrt(nrm);
        diag[k] = nrm;
        if (nrm == 0.0) break;
        const double alpha = R(k, k) >= 0.0 ? -nrm : nrm;
        Vector v(m, 0.0);
        for (std::size_t i = k; i < m; ++i) v[i] = R(i, k);
        v[k] -= alpha;
        const double vn2 = dot(v, v);
        if (vn2 == 0.0) continue;
        for (std::size_t j = k; j < n; ++j) {
            double s = 0.0;
            for (std::size_t i = k; i < m; ++i) s += v[i] * R(i, j);
            s *= 2.0 / vn2;
            for (std::size_t i = k; i < m; ++i) R(i, j) -= s * v[i];
        }
    }
    return diag;
}

// Rank = count of CPQR diagonal magnitudes above tol * largest.
inline std::size_t numerical_rank(const Matrix& M, double tol = 1e-10) {
    if (!(tol > 0.0)) throw std::invalid_argument("numerical_rank: tol must be > 0");
    const auto diag = cpqr_diagonal(M);
    if (diag.empty() || diag[0] == 0.0) return 0;
    std::size_t r = 0;
    for (double d : diag)
        if (d > tol * diag[0]) ++r;
    return r;
}

// Smallest/largest CPQR pivot ratio; 0 when the matrix is rank deficient.
inline double min_pivot_ratio(const Matrix& M) {
    const auto diag = cpqr_diagonal(M);
    if (diag.empty() || diag[0] == 0.0) return 0.0;
    return diag.back() / diag.front();
}

// Solve A x = b by Gaussian elimination with partial pivoting.
inline Vector solve(const Matrix& A, const Vector& b) {
    if (!A.square() || A.rows() != b.size()) throw DimensionError("solve: dimension mismatch");
    const std::size_t n = A.rows();
    Matrix M = A;
    Vector x = b;
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(M(i, k)) > std::abs(M(piv, k))) piv = i;
        if (M(piv, k) == 0.0) throw std::runtime_error("solve: singular matrix");
        if (piv != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(M(k, j), M(piv, j));
            std::swap(x[k], x[piv]);
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            const double f = M(i, k) / M(k, k);
            if (f == 0.0) continue;
            for (std::size_t j = k; j < n; ++j) M(i, j) -= f * M(k, j);
            x[i] -= f * x[k];
        }
    }
    for (std::size_t i = n; i-- > 0;) {
        double s = x[i];
        for (std::size_t j = i + 1; j < n; ++j) s -= M(i, j) * x[j];
        x[i] = s / M(i, i);
    }
    return x;
}

using CVector = std::vector<std::complex<double>>;
using CMatrix = std::vector<CVector>;  // row-major, ragged guard by construction

inline CVector solve_complex(CMatrix M, CVector b) {
    const std::size_t n = b.size();
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(M[i][k]) > std::abs(M[piv][k])) piv = i;
        if (std::abs(M[piv][k]) == 0.0) throw std::runtime_error("solve_complex: singular matrix");
        std::swap(M[k], M[piv]);
        std::swap(b[k], b[piv]);
        for (std::size_t i = k + 1; i < n; ++i) {
            const std::complex<double> f = M[i][k] / M[k][k];
            for (std::size_t j = k; j < n; ++j) M[i][j] -= f * M[k][j];
            b[i] -= f * b[k];
        }
    }
    CVector x(n);
    for (std::size_t i = n; i-- > 0;) {
        std::complex<double> s = b[i];
        for (std::size_t j = i + 1; j < n; ++j) s -= M[i][j] * x[j];
        x[i] = s / M[i][i];
    }
    return x;
}

// Rank over C of the columns, via pivoted modified Gram-Schmidt.
// Returns the pivot magnitudes in pivot order.
inline std::vector<double> complex_column_pivots(std::vector<CVector> cols) {
    const std::size_t n = cols.size();
    std::vector<double> pivots;
    pivots.reserve(n);
    std::vector<bool> used(n, false);
    for (std::size_t step = 0; step < n; ++step) {
        std::size_t best = n;
        double best_nrm = -1.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (used[j]) continue;
            double s = 0.0;
            for (const auto& c : cols[j]) s += std::norm(c);
            if (s > best_nrm) {
                best_nrm = s;
                best = j;
            }
        }
        const double nrm = std::sqrt(std::max(best_nrm, 0.0));
        pivots.push_back(nrm);
        used[best] = true;
        if (nrm == 0.0) continue;
        auto& q = cols[best];
        for (auto& c : q) c /= nrm;
        for (std::size_t j = 0; j < n; ++j) {
            if (used[j]) continue;
            std::complex<double> proj = 0.0;
            for (std::size_t i = 0; i < q.size(); ++i) proj += std::conj(q[i]) * cols[j][i];
            for (std::size_t i = 0; i < q.size(); ++i) cols[j][i] -= proj * q[i];
        }
    }
    return pivots;
}

// Symmetric eigendecomposition by cyclic Jacobi rotations.
// Returns eigenvalues (descending) and the matrix of eigenvectors as columns.
inline void jacobi_eigen(const Matrix& S, std::vector<double>& eigvals, Matrix& eigvecs) {
    if (!S.square()) throw DimensionError("jacobi_eigen: matrix must be square");
    const std::size_t n = S.rows();
    Matrix A = S;
    Matrix V = Matrix::identity(n);

    auto off_norm = [&]() {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (i != j) s += A(i, j) * A(i, j);
        return std::sqrt(s);
    };
    const double off0 = off_norm();
    if (off0 > 0.0) {
        for (int sweep = 0; sweep < 100 && off_norm() >= 1e-12 * off0; ++sweep) {
            for (std::size_t p = 0; p + 1 < n; ++p)
                for (std::size_t q = p + 1; q < n; ++q) {
                    if (A(p, q) == 0.0) continue;
                    const double theta = (A(q, q) - A(p, p)) / (2.0 * A(p, q));
                    const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                     (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                    const double c = 1.0 / std::sqrt(t * t + 1.0);
                    const double s = t * c;
                    for (std::size_t k = 0; k < n; ++k) {
                        const double akp = A(k, p), akq = A(k, q);
                        A(k, p) = c * akp - s * akq;
                        A(k, q) = s * akp + c * akq;
                    }
                    for (std::size_t k = 0; k < n; ++k) {
                        const double apk = A(p, k), aqk = A(q, k);
                        A(p, k) = c * apk - s * aqk;
                        A(q, k) = s * apk + c * aqk;
                        const double vkp = V(k, p), vkq = V(k, q);
                        V(k, p) = c * vkp - s * vkq;
                        V(k, q) = s * vkp + c * vkq;
                    }
                }
        }
    }

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return A(a, a) > A(b, b); });
    eigvals.resize(n);
    eigvecs = Matrix(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        eigvals[j] = A(order[j], order[j]);
        for (std::size_t i = 0; i < n; ++i) eigvecs(i, j) = V(i, order[j]);
    }
}

struct PcaResult {
    std::vector<Vector> projections;     // k-dim coordinates per data point
    Matrix components;                   // N x k, orthonormal columns
    std::vector<double> explained_variance;  // top-k eigenvalues, descending
};

// PCA on the sample covariance, diagonalized by Jacobi rotations.
// Component signs fixed so each column's largest-magnitude entry is positive.
inline PcaResult pca_project(const std::vector<Vector>& data, std::size_t k) {
    if (data.size() < 2) throw std::invalid_argument("pca_project: need at least 2 data points");
    const std::size_t n = data[0].size();
    if (k < 1 || k > n) throw DimensionError("pca_project: k out of range");
    for (const auto& v : data)
        if (v.size() != n) throw DimensionError("pca_project: inconsistent dims");

    Vector mean(n, 0.0);
    for (const auto& v : data)
        for (std::size_t i = 0; i < n; ++i) mean[i] += v[i];
    for (double& m : mean) m /= static_cast<double>(data.size());

    Matrix cov(n, n);
    for (const auto& v : data)
        for (std::size_t i = 0; i < n; ++i) {
            const double di = v[i] - mean[i];
            for (std::size_t j = 0; j < n; ++j) cov(i, j) += di * (v[j] - mean[j]);
        }
    cov.scale(1.0 / static_cast<double>(data.size() - 1));

    std::vector<double> eigvals;
    Matrix eigvecs;
    jacobi_eigen(cov, eigvals, eigvecs);

    PcaResult res;
    res.components = Matrix(n, k);
    for (std::size_t j = 0; j < k; ++j) {
        Vector c = eigvecs.col(j);
        std::size_t imax = 0;
        for (std::size_t i = 1; i < n; ++i)
            if (std::abs(c[i]) > std::abs(c[imax])) imax = i;
        if (c[imax] < 0.0)
            for (double& x : c) x = -x;
        res.components.set_col(j, c);
    }
    res.explained_variance.assign(eigvals.begin(), eigvals.begin() + static_cast<std::ptrdiff_t>(k));

    res.projections.reserve(data.size());
    for (const auto& v : data) {
        Vector p(k, 0.0);
        for (std::size_t j = 0; j < k; ++j)
            for (std::size_t i = 0; i < n; ++i) p[j] += res.components(i, j) * (v[i] - mean[i]);
        res.projections.push_back(std::move(p));
    }
    return res;
}

// log of ||A^T||_2, computed with per-step renormalization.
inline double log_matrix_power_norm(const Matrix& A, std::size_t T) {
    if (!A.square()) throw DimensionError("log_matrix_power_norm: matrix must be square");
    Matrix M = Matrix::identity(A.rows());
    double log_scale = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
        M = A * M;
        const double f = M.max_abs();
        if (f == 0.0) return -std::numeric_limits<double>::infinity();
        M.scale(1.0 / f);
        log_scale += std::log(f);
    }
    return log_scale + std::log(operator_norm(M));
}

}  // namespace sr
