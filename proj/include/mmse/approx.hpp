#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <variant>
#include <vector>

#include "mmse/bounds.hpp"
#include "mmse/distributions.hpp"
#include "mmse/hypotheses.hpp"
#include "mmse/linalg.hpp"
#include "mmse/util.hpp"

namespace mmse {

// theta(x) = x^T A x + b^T x + c
struct QuadraticForm {
    Mat a;
    Vec b;
    double c = 0.0;

    double operator()(std::span<const double> x) const {
        return quad_form(x, a, x) + dot(b, x) + c;
    }
};

// Conditional mean and variance of theta(X^sigma) given S = s.
struct ClassMoments {
    double mean = 0.0;
    double var = 0.0;
};

// Coefficients of the exact quadratic separator for class-conditional
// Gaussians with noise level sigma:
//   A = (Sig0~^-1 - Sig1~^-1)/2,  b = Sig1~^-1 mu1 - Sig0~^-1 mu0,
//   c = (mu0' Sig0~^-1 mu0 - mu1' Sig1~^-1 mu1)/2
//       + log(|Sig0~|/|Sig1~|)/2 + log(p/(1-p)),
// where Sig_s~ = Sig_s + sigma^2 I.
inline QuadraticForm ccg_quadratic_coeffs(double p, const Vec& mu0, const Vec& mu1,
                                          const Mat& sigma0, const Mat& sigma1,
                                          double sigma) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("p must lie in (0,1)");
    const std::size_t d = mu0.size();
    if (mu1.size() != d || sigma0.rows() != d || sigma1.rows() != d)
        throw std::invalid_argument("ccg_quadratic_coeffs: dimension mismatch");
    Mat st0 = sigma0, st1 = sigma1;
    for (std::size_t j = 0; j < d; ++j) {
        st0(j, j) += sigma * sigma;
        st1(j, j) += sigma * sigma;
    }
    const Mat i0 = spd_inverse(st0), i1 = spd_inverse(st1);
    QuadraticForm qf;
    qf.a = Mat(d, d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) qf.a(i, j) = 0.5 * (i0(i, j) - i1(i, j));
    const Vec i1mu1 = matvec(i1, mu1), i0mu0 = matvec(i0, mu0);
    qf.b.resize(d);
    for (std::size_t j = 0; j < d; ++j) qf.b[j] = i1mu1[j] - i0mu0[j];
    qf.c = 0.5 * dot(mu0, i0mu0) - 0.5 * dot(mu1, i1mu1) +
           0.5 * (log_det_spd(st0) - log_det_spd(st1)) + std::log(p / (1.0 - p));
    return qf;
}

// Moments of the quadratic form under X^sigma | S = s ~ N(mu_s, Sig_s~):
//   M_s = sum_j lambda_j + b'mu_s + mu_s'A mu_s + c
//   V_s = sum_j 2 lambda_j^2 + u_j^2,  u = Q' Sig~^{1/2} (b + 2 A mu_s),
// with lambda_j, Q the eigensystem of Sig~^{1/2} A Sig~^{1/2}.
inline ClassMoments ccg_class_moments(const QuadraticForm& qf, const Vec& mu_s,
                                      const Mat& sigma_tilde_s) {
    const std::size_t d = mu_s.size();
    const Mat root = spd_sqrt(sigma_tilde_s);
    const Mat inner = root * qf.a * root;
    const SymEig eig = sym_eig(inner);

    Vec t(d);
    const Vec a_mu = matvec(qf.a, mu_s);
    for (std::size_t j = 0; j < d; ++j) t[j] = qf.b[j] + 2.0 * a_mu[j];
    const Vec rt = matvec(root, t);
    const Vec u = matvec(eig.vectors.transposed(), rt);

    ClassMoments out;
    for (std::size_t j = 0; j < d; ++j) {
        out.mean += eig.values[j];
        out.var += 2.0 * eig.values[j] * eig.values[j] + u[j] * u[j];
    }
    out.mean += dot(qf.b, mu_s) + dot(mu_s, a_mu) + qf.c;
    return out;
}

namespace detail {

struct CcgBlocks {
    double var_theta = 0.0;  // VAR_1
    Vec cov;                 // COV, length d
    Mat var_x;               // VAR_2
};

inline CcgBlocks ccg_blocks(double p, const Vec& mu0, const Vec& mu1,
                            const Mat& sigma0, const Mat& sigma1, double sigma) {
    const std::size_t d = mu0.size();
    const double pb = 1.0 - p;
    const QuadraticForm qf = ccg_quadratic_coeffs(p, mu0, mu1, sigma0, sigma1, sigma);

    Mat st0 = sigma0, st1 = sigma1;
    for (std::size_t j = 0; j < d; ++j) {
        st0(j, j) += sigma * sigma;
        st1(j, j) += sigma * sigma;
    }
    const ClassMoments m0 = ccg_class_moments(qf, mu0, st0);
    const ClassMoments m1 = ccg_class_moments(qf, mu1, st1);

    CcgBlocks out;
    out.var_theta = p * m1.var + pb * m0.var +
                    p * pb * (m1.mean - m0.mean) * (m1.mean - m0.mean);

    Vec mud(d);
    for (std::size_t j = 0; j < d; ++j) mud[j] = mu1[j] - mu0[j];

    // COV = 2p mu1'A Sig1 + 2(1-p) mu0'A Sig0 + 2 sigma^2 (p mu1 + (1-p) mu0)'A
    //       + p(1-p) [tr(A(Sig1-Sig0)) + mu1'A mu1 - mu0'A mu0] mud'
    //       + b' [p Sig1 + (1-p) Sig0 + sigma^2 I + p(1-p) mud mud']
    out.cov.assign(d, 0.0);
    const Vec a_mu1 = matvec(qf.a, mu1), a_mu0 = matvec(qf.a, mu0);
    for (std::size_t j = 0; j < d; ++j) {
        double v = 0.0;
        for (std::size_t i = 0; i < d; ++i)
            v += 2.0 * p * a_mu1[i] * sigma1(i, j) + 2.0 * pb * a_mu0[i] * sigma0(i, j);
        v += 2.0 * sigma * sigma * (p * a_mu1[j] + pb * a_mu0[j]);
        out.cov[j] = v;
    }
    Mat diff(d, d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) diff(i, j) = sigma1(i, j) - sigma0(i, j);
    const double scalar =
        trace(qf.a * diff) + dot(mu1, a_mu1) - dot(mu0, a_mu0);
    for (std::size_t j = 0; j < d; ++j) out.cov[j] += p * pb * scalar * mud[j];

    out.var_x = Mat(d, d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j)
            out.var_x(i, j) = p * sigma1(i, j) + pb * sigma0(i, j) +
                              p * pb * mud[i] * mud[j] +
                              (i == j ? sigma * sigma : 0.0);
    const Vec bv = matvec(out.var_x, qf.b);
    for (std::size_t j = 0; j < d; ++j) out.cov[j] += bv[j];
    return out;
}

}  // namespace detail

// Closed-form upper bound on eps_A for general class-conditional Gaussians:
//   eps_A <= (VAR_1 - COV VAR_2^{-1} COV') / 4.
inline double eps_a_ccg_general(double p, const Vec& mu0, const Vec& mu1,
                                const Mat& sigma0, const Mat& sigma1, double sigma) {
    const auto blocks = detail::ccg_blocks(p, mu0, mu1, sigma0, sigma1, sigma);
    Mat l;
    try {
        l = cholesky(blocks.var_x);
    } catch (const numerical_error&) {
        throw numerical_error("eps_a_ccg_general: singular Var(X^sigma)");
    }
    const Vec solved = cholesky_solve(l, blocks.cov);
    return 0.25 * (blocks.var_theta - dot(blocks.cov, solved));
}

namespace detail {

struct DiagCoeffs {
    double q1, q2, q3;
    double r1, r2, r3, r4, r5;
};

inline DiagCoeffs diag_coeffs(double p, double md2, double s0, double s1, double d) {
    const double pb = 1.0 - p;
    DiagCoeffs c{};
    c.q1 = md2 * md2 * (p * p * pb * s1 + p * pb * pb * s0) + 2.0 * d * s0 * s0 * s0 -
           d * d * p * p * p * std::pow(s1 - s0, 3) +
           2.0 * p * pb * (2.0 + d) * s0 * s1 * md2 +
           p * p * (d * (5.0 * d - 2.0) * s0 * s0 * s1 -
                    2.0 * d * (2.0 * d + 1.0) * s0 * s1 * s1 +
                    d * (2.0 + d) * s1 * s1 * s1 - 2.0 * d * (d - 1.0) * s0 * s0 * s0) +
           p * (d * (d - 4.0) * s0 * s0 * s0 - 2.0 * d * (d - 1.0) * s0 * s0 * s1 +
                d * (2.0 + d) * s0 * s1 * s1);
    c.q2 = p * pb * md2 * (md2 + 2.0 * (2.0 + d) * (s0 + s1)) -
           p * p * d * (d - 4.0) * (s1 - s0) * (s1 - s0) +
           p * (d * (d - 10.0) * s0 * s0 - 2.0 * d * (d - 4.0) * s0 * s1 +
                d * (2.0 + d) * s1 * s1) +
           6.0 * d * s0 * s0;
    c.q3 = 2.0 * p * pb * (2.0 + d) * md2 + 6.0 * d * (p * s1 + pb * s0);
    c.r1 = s0 * s0 * s1 * s1 * (p * pb * md2 + p * s1 + pb * s0);
    c.r2 = s0 * s1 * (2.0 * p * pb * (s1 + s0) * md2 + 2.0 * p * s1 * s1 +
                      2.0 * pb * s0 * s0 + 3.0 * s0 * s1);
    c.r3 = p * pb * (s0 * s0 + 4.0 * s0 * s1 + s1 * s1) * md2 + p * s1 * s1 * s1 +
           3.0 * (1.0 + p) * s0 * s1 * s1 + 3.0 * (2.0 - p) * s0 * s0 * s1 +
           pb * s0 * s0 * s0;
    c.r4 = 2.0 * p * pb * (s1 + s0) * md2 + (2.0 * p + 1.0) * s1 * s1 +
           (3.0 - 2.0 * p) * s0 * s0 + 6.0 * s0 * s1;
    c.r5 = p * pb * md2 + (3.0 - p) * s0 + (2.0 + p) * s1;
    return c;
}

}  // namespace detail

// Closed-form eps_A bound for isotropic class covariances var_s * I in
// dimension d. Evaluates both algebraic routes -- the (q, r) rational form
// and the (c1 d^2 + c2 d + c3)/c4 dimension polynomial -- and insists they
// agree; a disagreement means one of them was transcribed wrong.
inline double eps_a_ccg_diag(double p, const Vec& mu0, const Vec& mu1, double var0,
                             double var1, double sigma, std::size_t d) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("p must lie in (0,1)");
    if (!(var0 > 0.0 && var1 > 0.0))
        throw std::invalid_argument("class variances must be positive");
    if (mu0.size() != d || mu1.size() != d)
        throw std::invalid_argument("eps_a_ccg_diag: dimension mismatch");

    double md2 = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
        const double t = mu1[j] - mu0[j];
        md2 += t * t;
    }
    const double pb = 1.0 - p;
    const double s0 = var0, s1 = var1, s = sigma * sigma;
    const double dd = static_cast<double>(d);
    const auto c = detail::diag_coeffs(p, md2, s0, s1, dd);

    const double den =
        16.0 * (c.r1 + c.r2 * s + c.r3 * s * s + c.r4 * s * s * s +
                c.r5 * s * s * s * s + s * s * s * s * s);
    const double num_qr = (s1 - s0) * (s1 - s0) *
                          (c.q1 + c.q2 * s + c.q3 * s * s + 2.0 * dd * s * s * s);
    const double val_qr = num_qr / den;

    const double c1 = p * pb * std::pow(s1 - s0, 4) * (s + p * s1 + pb * s0);
    const double c2 =
        2.0 * (s1 - s0) * (s1 - s0) *
        (std::pow(s0 + s, 3) + p * pb * md2 * (s0 + s) * (s1 + s) +
         p * p * (s1 - s0) * (s1 - s0) * (s1 + s0 + 2.0 * s) +
         p * (s0 + s) * (s1 - s0) * (s1 + 2.0 * s0 + 3.0 * s));
    const double c3 = p * pb * md2 * (s1 - s0) * (s1 - s0) *
                      (4.0 * (s0 + s) * (s1 + s) + md2 * (p * s1 + pb * s0 + s));
    const double val_dim = (c1 * dd * dd + c2 * dd + c3) / den;

    if (std::abs(val_qr - val_dim) > 1e-9 * std::max(1.0, std::abs(val_qr)))
        throw consistency_error(
            "eps_a_ccg_diag: rational and dimension forms disagree beyond 1e-9");
    return val_qr;
}

// Truncated series bound on eps_A for the binary symmetric channel, summing
// the first `terms` explicit terms (at most four; the remainder carries
// unknown constants and is excluded). Not a certified upper bound for small
// sigma.
inline double eps_a_bsc_series(double p, double p_n, double sigma, int terms = 4) {
    if (!(p > 0.0 && p < 1.0) || !(p_n >= 0.0 && p_n <= 1.0))
        throw std::invalid_argument("eps_a_bsc_series: invalid probabilities");
    if (sigma == 0.0)
        throw std::domain_error("eps_a_bsc_series: series diverges at sigma = 0");
    if (sigma < 0.0) throw std::invalid_argument("sigma must be >= 0");
    if (terms < 1 || terms > 4)
        throw std::invalid_argument("eps_a_bsc_series: terms must lie in 1..4");

    const double q = p_n * (1.0 - p) + (1.0 - p_n) * p;
    const double qb = 1.0 - q;
    const double k = (1.0 - 2.0 * p_n) * (1.0 - 2.0 * p_n);
    const double s2 = sigma * sigma;
    const double term[4] = {
        3.0 * k / (4.0 * s2),
        -k / (4.0 * (q * qb + s2)),
        k * (5.0 - 4.0 * p_n + 4.0 * p_n * p_n + 14.0 * q - 2.0 * q * q) /
            (8.0 * s2 * s2),
        2.0 * k * (p_n * (1.0 - p_n) - q * qb) / (4.0 * s2 * (q * qb + s2)),
    };
    double out = 0.0;
    for (int i = 0; i < terms; ++i) out += term[i];
    return out;
}

// Quarter-Lipschitz residual bound from empirical moments of
// (X^sigma, theta(X^sigma)) over the given samples:
//   (Var(theta) - Cov' Var(X)^{-1} Cov) / 4.
inline double eps_a_linear_gap(const JointModel& model, double sigma,
                               const NoisyDataset& stats_data) {
    const ThetaEvaluator theta(model, sigma);
    const std::size_t n = stats_data.size();
    Vec th(n);
    for (std::size_t i = 0; i < n; ++i) th[i] = theta(stats_data.xs.row(i));
    const EmpStats st = emp_stats(stats_data.xs, th);
    Mat l;
    try {
        l = cholesky(st.var_x);
    } catch (const numerical_error&) {
        throw numerical_error("eps_a_linear_gap: singular Var(X^sigma)");
    }
    const Vec solved = cholesky_solve(l, st.cov_xy);
    return 0.25 * (st.var_y - dot(st.cov_xy, solved));
}

// Closed-form moment route of the same bound; defined for the CCG variants.
inline double eps_a_linear_gap(const JointModel& model, double sigma) {
    if (const auto* g = std::get_if<CcgGeneral>(&model))
        return eps_a_ccg_general(g->p, g->mu0, g->mu1, g->sigma0, g->sigma1, sigma);
    if (const auto* dg = std::get_if<CcgDiag>(&model)) {
        const std::size_t d = dg->mu0.size();
        Mat s0 = Mat::identity(d), s1 = Mat::identity(d);
        for (std::size_t j = 0; j < d; ++j) {
            s0(j, j) = dg->var0;
            s1(j, j) = dg->var1;
        }
        return eps_a_ccg_general(dg->p, dg->mu0, dg->mu1, s0, s1, sigma);
    }
    throw std::invalid_argument(
        "eps_a_linear_gap: closed-form moments exist only for the CCG variants; "
        "pass a sample set for other models");
}

// Monte-Carlo estimate of eps_A = E[(eta(X^s) - h(X^s))^2] over fresh draws.
// h must have been fitted on samples independent of this seed.
inline McEstimate eps_a_mc(const JointModel& model, double sigma, const Hypothesis& h,
                           std::size_t n_mc, std::uint64_t seed) {
    if (n_mc < 1) throw std::invalid_argument("eps_a_mc: need n_mc >= 1");
    const NoisyDataset ds = sample(model, n_mc, sigma, seed);
    const ThetaEvaluator theta(model, sigma);
    double sum = 0.0, sum2 = 0.0;
    std::visit(
        [&](const auto& hm) {
            for (std::size_t i = 0; i < n_mc; ++i) {
                const auto x = ds.xs.row(i);
                const double e = sigmoid(theta(x)) - predict(hm, x);
                const double w = e * e;
                sum += w;
                sum2 += w * w;
            }
        },
        h);
    const double mean = sum / static_cast<double>(n_mc);
    const double var =
        n_mc > 1 ? (sum2 - sum * mean) / static_cast<double>(n_mc - 1) : 0.0;
    return {mean, std::sqrt(std::max(var, 0.0) / static_cast<double>(n_mc)), n_mc};
}

// Same estimate over an already-sampled evaluation set.
inline McEstimate eps_a_mc_on(const NoisyDataset& ds, const JointModel& model,
                              const Hypothesis& h) {
    const ThetaEvaluator theta(model, ds.sigma);
    const std::size_t n = ds.size();
    double sum = 0.0, sum2 = 0.0;
    std::visit(
        [&](const auto& hm) {
            for (std::size_t i = 0; i < n; ++i) {
                const auto x = ds.xs.row(i);
                const double e = sigmoid(theta(x)) - predict(hm, x);
                const double w = e * e;
                sum += w;
                sum2 += w * w;
            }
        },
        h);
    const double mean = sum / static_cast<double>(n);
    const double var = n > 1 ? (sum2 - sum * mean) / static_cast<double>(n - 1) : 0.0;
    return {mean, std::sqrt(std::max(var, 0.0) / static_cast<double>(n)), n};
}

}  // namespace mmse
