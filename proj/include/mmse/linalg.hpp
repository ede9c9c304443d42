#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "mmse/util.hpp"

namespace mmse {

using Vec = std::vector<double>;

// Dense row-major matrix. All experiments live at d <= ~20, so no attempt is
// made at blocking or sparsity.
class Mat {
  public:
    Mat() = default;
    Mat(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Mat identity(std::size_t n) {
        Mat m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    static Mat diag(const Vec& d) {
        Mat m(d.size(), d.size());
        for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t i, std::size_t j) {
        return data_[i * cols_ + j];
    }
    double operator()(std::size_t i, std::size_t j) const {
        return data_[i * cols_ + j];
    }

    std::span<const double> row(std::size_t i) const {
        return {data_.data() + i * cols_, cols_};
    }
    std::span<double> row(std::size_t i) {
        return {data_.data() + i * cols_, cols_};
    }

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    bool operator==(const Mat& other) const = default;

    double max_abs() const {
        double m = 0.0;
        for (double v : data_) m = std::max(m, std::abs(v));
        return m;
    }

    double frobenius() const {
        double s = 0.0;
        for (double v : data_) s += v * v;
        return std::sqrt(s);
    }

    Mat transposed() const {
        Mat t(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

  private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<double> data_;
};

inline Mat operator*(const Mat& a, const Mat& b) {
    if (a.cols() != b.rows()) throw std::invalid_argument("matmul: shape mismatch");
    Mat c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
        }
    return c;
}

inline Vec matvec(const Mat& a, std::span<const double> x) {
    if (a.cols() != x.size()) throw std::invalid_argument("matvec: shape mismatch");
    Vec y(a.rows(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
        y[i] = s;
    }
    return y;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("dot: size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// x^T M y
inline double quad_form(std::span<const double> x, const Mat& m,
                        std::span<const double> y) {
    double s = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i) {
        double r = 0.0;
        for (std::size_t j = 0; j < m.cols(); ++j) r += m(i, j) * y[j];
        s += x[i] * r;
    }
    return s;
}

inline double trace(const Mat& m) {
    double t = 0.0;
    for (std::size_t i = 0; i < std::min(m.rows(), m.cols()); ++i) t += m(i, i);
    return t;
}

inline void check_square_symmetric(const Mat& m, double rel_tol = 1e-12) {
    if (m.rows() != m.cols())
        throw std::invalid_argument("matrix must be square");
    const double scale = std::max(m.max_abs(), 1e-300);
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = i + 1; j < m.cols(); ++j)
            if (std::abs(m(i, j) - m(j, i)) > rel_tol * scale)
                throw std::invalid_argument("matrix not symmetric");
}

// Lower-triangular Cholesky factor of an SPD matrix; throws numerical_error
// exactly when a pivot is non-positive.
inline Mat cholesky(const Mat& m) {
    check_square_symmetric(m);
    const std::size_t n = m.rows();
    Mat l(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double diag = m(j, j);
        for (std::size_t k = 0; k < j; ++k) diag -= l(j, k) * l(j, k);
        if (!(diag > 0.0)) throw numerical_error("cholesky: matrix not positive definite");
        l(j, j) = std::sqrt(diag);
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = m(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / l(j, j);
        }
    }
    return l;
}

// Solve M x = b given the Cholesky factor L (forward + back substitution).
inline Vec cholesky_solve(const Mat& l, std::span<const double> b) {
    const std::size_t n = l.rows();
    Vec y(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * y[k];
        y[i] = s / l(i, i);
    }
    Vec x(n);
    for (std::size_t ii = n; ii-- > 0;) {
        double s = y[ii];
        for (std::size_t k = ii + 1; k < n; ++k) s -= l(k, ii) * x[k];
        x[ii] = s / l(ii, ii);
    }
    return x;
}

inline Mat spd_inverse(const Mat& m) {
    const Mat l = cholesky(m);
    const std::size_t n = m.rows();
    Mat inv(n, n);
    Vec e(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        e[j] = 1.0;
        const Vec col = cholesky_solve(l, e);
        for (std::size_t i = 0; i < n; ++i) inv(i, j) = col[i];
        e[j] = 0.0;
    }
    return inv;
}

inline double log_det_spd(const Mat& m) {
    const Mat l = cholesky(m);
    double s = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i) s += std::log(l(i, i));
    return 2.0 * s;
}

struct SymEig {
    Vec values;       // descending
    Mat vectors;      // columns, orthonormal
};

// Cyclic Jacobi eigensolver. Converges when the off-diagonal Frobenius norm
// drops below 1e-13 * ||M||_F, capped at 100 sweeps. Eigenvalues descending;
// each eigenvector's largest-magnitude entry is made positive.
inline SymEig sym_eig(const Mat& m_in) {
    check_square_symmetric(m_in);
    const std::size_t n = m_in.rows();
    Mat a = m_in;
    Mat q = Mat::identity(n);
    const double tol = 1e-13 * std::max(m_in.frobenius(), 1e-300);

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) off += 2.0 * a(i, j) * a(i, j);
        if (std::sqrt(off) < tol) break;

        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t r = p + 1; r < n; ++r) {
                const double apr = a(p, r);
                if (apr == 0.0) continue;
                const double app = a(p, p), arr = a(r, r);
                const double tau = (arr - app) / (2.0 * apr);
                const double t = (tau >= 0.0)
                                     ? 1.0 / (tau + std::sqrt(1.0 + tau * tau))
                                     : 1.0 / (tau - std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p), akr = a(k, r);
                    a(k, p) = c * akp - s * akr;
                    a(k, r) = s * akp + c * akr;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k), ark = a(r, k);
                    a(p, k) = c * apk - s * ark;
                    a(r, k) = s * apk + c * ark;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double qkp = q(k, p), qkr = q(k, r);
                    q(k, p) = c * qkp - s * qkr;
                    q(k, r) = s * qkp + c * qkr;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

    SymEig out;
    out.values.resize(n);
    out.vectors = Mat(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t src = order[j];
        out.values[j] = a(src, src);
        std::size_t imax = 0;
        double vmax = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (std::abs(q(i, src)) > vmax) {
                vmax = std::abs(q(i, src));
                imax = i;
            }
        }
        const double sign = q(imax, src) >= 0.0 ? 1.0 : -1.0;
        for (std::size_t i = 0; i < n; ++i) out.vectors(i, j) = sign * q(i, src);
    }
    return out;
}

// Symmetric square root of an SPD matrix: R with R*R = M.
inline Mat spd_sqrt(const Mat& m) {
    const SymEig eig = sym_eig(m);
    const std::size_t n = m.rows();
    for (double v : eig.values)
        if (!(v > 0.0)) throw numerical_error("spd_sqrt: matrix not positive definite");
    Mat r(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < n; ++k)
                s += eig.vectors(i, k) * std::sqrt(eig.values[k]) * eig.vectors(j, k);
            r(i, j) = s;
        }
    return r;
}

struct EmpStats {
    Vec mean_x;    // R^d
    Mat var_x;     // d x d, unbiased
    double mean_y = 0.0;
    Vec cov_xy;    // R^d, unbiased
    double var_y = 0.0;
};

// Unbiased sample moments of paired (x, y) data; n >= 2 required.
inline EmpStats emp_stats(const Mat& xs, std::span<const double> ys) {
    const std::size_t n = xs.rows();
    const std::size_t d = xs.cols();
    if (n != ys.size()) throw std::invalid_argument("emp_stats: row count mismatch");
    if (n < 2) throw std::invalid_argument("emp_stats: need at least 2 samples");

    EmpStats st;
    st.mean_x.assign(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) st.mean_x[j] += xs(i, j);
        st.mean_y += ys[i];
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    for (double& v : st.mean_x) v *= inv_n;
    st.mean_y *= inv_n;

    st.var_x = Mat(d, d);
    st.cov_xy.assign(d, 0.0);
    Vec cx(d);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) cx[j] = xs(i, j) - st.mean_x[j];
        const double cy = ys[i] - st.mean_y;
        for (std::size_t j = 0; j < d; ++j) {
            for (std::size_t k = j; k < d; ++k) st.var_x(j, k) += cx[j] * cx[k];
            st.cov_xy[j] += cx[j] * cy;
        }
        st.var_y += cy * cy;
    }
    const double inv_nm1 = 1.0 / static_cast<double>(n - 1);
    for (std::size_t j = 0; j < d; ++j)
        for (std::size_t k = j; k < d; ++k) {
            st.var_x(j, k) *= inv_nm1;
            st.var_x(k, j) = st.var_x(j, k);
        }
    for (double& v : st.cov_xy) v *= inv_nm1;
    st.var_y *= inv_nm1;
    return st;
}

}  // namespace mmse
