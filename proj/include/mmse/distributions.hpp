#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "mmse/linalg.hpp"
#include "mmse/rng.hpp"
#include "mmse/util.hpp"

namespace mmse {

// X = S xor N over {0,1}, embedded in R^1 before noising.
struct Bsc {
    double p;    // prior P(S=1)
    double p_n;  // crossover probability
};

// X | S=s ~ N(mu_s, var_s * I)
struct CcgDiag {
    double p;
    Vec mu0, mu1;
    double var0, var1;
};

// X | S=s ~ N(mu_s, Sigma_s), Sigma_s symmetric positive definite
struct CcgGeneral {
    double p;
    Vec mu0, mu1;
    Mat sigma0, sigma1;
};

// 2D class-conditional Gaussian mixture: 2*n_modes means evenly spaced on a
// circle, classes interleaved (even index -> class 0). Component variance is
// 1/n_modes^2 and the additive noise is scaled to sigma/n_modes so that the
// task difficulty stays comparable across mode counts.
struct RingMixture {
    double p;
    int n_modes;
    double radius;
};

using JointModel = std::variant<Bsc, CcgDiag, CcgGeneral, RingMixture>;

inline void validate(const JointModel& model) {
    const auto check_prior = [](double p) {
        if (!(p > 0.0 && p < 1.0))
            throw std::invalid_argument("prior p must lie strictly inside (0,1)");
    };
    std::visit(
        [&](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            check_prior(m.p);
            if constexpr (std::is_same_v<T, Bsc>) {
                // p_n = 0 and 1 are the noiseless channels; both are useful
                // as degenerate test cases, so only reject values outside
                if (!(m.p_n >= 0.0 && m.p_n <= 1.0))
                    throw std::invalid_argument("crossover p_n must lie in [0,1]");
            } else if constexpr (std::is_same_v<T, CcgDiag>) {
                if (m.mu0.size() != m.mu1.size() || m.mu0.empty())
                    throw std::invalid_argument("mean vectors must be non-empty and equal length");
                if (!(m.var0 > 0.0) || !(m.var1 > 0.0))
                    throw std::invalid_argument("class variances must be positive");
            } else if constexpr (std::is_same_v<T, CcgGeneral>) {
                if (m.mu0.size() != m.mu1.size() || m.mu0.empty())
                    throw std::invalid_argument("mean vectors must be non-empty and equal length");
                if (m.sigma0.rows() != m.mu0.size() || m.sigma1.rows() != m.mu0.size())
                    throw std::invalid_argument("covariance dimension mismatch");
                cholesky(m.sigma0);  // throws if not SPD
                cholesky(m.sigma1);
            } else if constexpr (std::is_same_v<T, RingMixture>) {
                if (m.n_modes < 1) throw std::invalid_argument("need at least one mode per class");
                if (!(m.radius > 0.0)) throw std::invalid_argument("radius must be positive");
            }
        },
        model);
}

inline std::size_t dim(const JointModel& model) {
    return std::visit(
        [](const auto& m) -> std::size_t {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, Bsc>) return 1;
            else if constexpr (std::is_same_v<T, RingMixture>) return 2;
            else return m.mu0.size();
        },
        model);
}

inline double prior(const JointModel& model) {
    return std::visit([](const auto& m) { return m.p; }, model);
}

// Noise std actually added to X for a nominal level sigma.
inline double effective_noise_std(const JointModel& model, double sigma) {
    if (const auto* ring = std::get_if<RingMixture>(&model))
        return sigma / static_cast<double>(ring->n_modes);
    return sigma;
}

inline std::vector<Vec> ring_means(const RingMixture& m, int cls) {
    std::vector<Vec> out;
    out.reserve(static_cast<std::size_t>(m.n_modes));
    for (int j = cls; j < 2 * m.n_modes; j += 2) {
        const double ang = M_PI * static_cast<double>(j) / static_cast<double>(m.n_modes);
        out.push_back({m.radius * std::cos(ang), m.radius * std::sin(ang)});
    }
    return out;
}

struct NoisyDataset {
    Mat xs;             // n x d noisy features
    Vec ss;             // labels in [0,1]
    double sigma = 0.0; // nominal noise level
    std::uint64_t seed = 0;

    std::size_t size() const { return ss.size(); }
    std::size_t dim() const { return xs.cols(); }
};

// i.i.d. draws of (X^sigma, S). Deterministic given seed.
inline NoisyDataset sample(const JointModel& model, std::size_t n, double sigma,
                           std::uint64_t seed) {
    validate(model);
    if (n < 1) throw std::invalid_argument("sample: need n >= 1");
    if (sigma < 0.0) throw std::invalid_argument("sample: sigma must be >= 0");

    const std::size_t d = mmse::dim(model);
    NoisyDataset ds;
    ds.xs = Mat(n, d);
    ds.ss.resize(n);
    ds.sigma = sigma;
    ds.seed = seed;
    Rng rng(seed);
    const double noise_sd = effective_noise_std(model, sigma);

    std::optional<Mat> l0, l1;
    if (const auto* g = std::get_if<CcgGeneral>(&model)) {
        l0 = cholesky(g->sigma0);
        l1 = cholesky(g->sigma1);
    }
    std::vector<Vec> means0, means1;
    if (const auto* ring = std::get_if<RingMixture>(&model)) {
        means0 = ring_means(*ring, 0);
        means1 = ring_means(*ring, 1);
    }

    Vec z(d);
    for (std::size_t i = 0; i < n; ++i) {
        const bool s1 = rng.bernoulli(prior(model));
        ds.ss[i] = s1 ? 1.0 : 0.0;
        auto row = ds.xs.row(i);

        if (const auto* b = std::get_if<Bsc>(&model)) {
            const bool flip = rng.bernoulli(b->p_n);
            row[0] = (s1 != flip) ? 1.0 : 0.0;
        } else if (const auto* dg = std::get_if<CcgDiag>(&model)) {
            const Vec& mu = s1 ? dg->mu1 : dg->mu0;
            const double sd = std::sqrt(s1 ? dg->var1 : dg->var0);
            for (std::size_t j = 0; j < d; ++j) row[j] = mu[j] + sd * rng.normal();
        } else if (const auto* g = std::get_if<CcgGeneral>(&model)) {
            const Vec& mu = s1 ? g->mu1 : g->mu0;
            const Mat& l = s1 ? *l1 : *l0;
            for (std::size_t j = 0; j < d; ++j) z[j] = rng.normal();
            for (std::size_t j = 0; j < d; ++j) {
                double v = mu[j];
                for (std::size_t k = 0; k <= j; ++k) v += l(j, k) * z[k];
                row[j] = v;
            }
        } else if (const auto* ring = std::get_if<RingMixture>(&model)) {
            const auto& means = s1 ? means1 : means0;
            const Vec& mu = means[rng.uniform_index(means.size())];
            const double comp_sd = 1.0 / static_cast<double>(ring->n_modes);
            row[0] = mu[0] + comp_sd * rng.normal();
            row[1] = mu[1] + comp_sd * rng.normal();
        }

        // noise draws are consumed even at sigma = 0 so that the same seed
        // yields the same clean X across noise levels
        for (std::size_t j = 0; j < d; ++j) row[j] += noise_sd * rng.normal();
    }
    return ds;
}

namespace detail {

// log N(x; mu, v*I) in d dimensions
inline double log_iso_gauss(std::span<const double> x, std::span<const double> mu,
                            double v) {
    double q = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        const double t = x[j] - mu[j];
        q += t * t;
    }
    return -0.5 * q / v -
           0.5 * static_cast<double>(x.size()) * std::log(2.0 * M_PI * v);
}

}  // namespace detail

// Prepared evaluator of the log posterior odds theta^sigma for a fixed
// (model, sigma) pair. Factorizations are done once so Monte-Carlo loops can
// call operator() millions of times.
class ThetaEvaluator {
  public:
    ThetaEvaluator(const JointModel& model, double sigma)
        : model_(model), sigma_(sigma) {
        validate(model_);
        if (sigma < 0.0) throw std::invalid_argument("theta_sigma: sigma must be >= 0");
        prior_odds_ = std::log(prior(model_) / (1.0 - prior(model_)));

        if (const auto* g = std::get_if<CcgGeneral>(&model_)) {
            const std::size_t d = g->mu0.size();
            Mat st0 = g->sigma0, st1 = g->sigma1;
            for (std::size_t j = 0; j < d; ++j) {
                st0(j, j) += sigma * sigma;
                st1(j, j) += sigma * sigma;
            }
            inv0_ = spd_inverse(st0);
            inv1_ = spd_inverse(st1);
            const_term_ = prior_odds_ + 0.5 * (log_det_spd(st0) - log_det_spd(st1));
        } else if (const auto* ring = std::get_if<RingMixture>(&model_)) {
            const double nm = static_cast<double>(ring->n_modes);
            ring_var_ = 1.0 / (nm * nm) + (sigma / nm) * (sigma / nm);
            if (!(ring_var_ > 0.0))
                throw std::domain_error("ring mixture: singular effective covariance");
            means0_ = ring_means(*ring, 0);
            means1_ = ring_means(*ring, 1);
        } else if (const auto* dg = std::get_if<CcgDiag>(&model_)) {
            const double s2 = sigma * sigma;
            if (!(dg->var0 + s2 > 0.0) || !(dg->var1 + s2 > 0.0))
                throw std::domain_error("ccg: singular effective covariance");
        }
    }

    double operator()(std::span<const double> x) const {
        if (x.size() != mmse::dim(model_))
            throw std::invalid_argument("theta_sigma: dimension mismatch");

        if (const auto* b = std::get_if<Bsc>(&model_)) {
            if (sigma_ == 0.0) {
                // discrete two-atom model, defined only at x in {0,1}
                if (x[0] == 1.0)
                    return prior_odds_ + std::log((1.0 - b->p_n) / b->p_n);
                if (x[0] == 0.0)
                    return prior_odds_ + std::log(b->p_n / (1.0 - b->p_n));
                throw std::domain_error("BSC with sigma=0 is defined only at the atoms {0,1}");
            }
            const double t = (2.0 * x[0] - 1.0) / (2.0 * sigma_ * sigma_);
            return prior_odds_ + log_a_plus_b_exp(b->p_n, 1.0 - b->p_n, t) -
                   log_a_plus_b_exp(1.0 - b->p_n, b->p_n, t);
        }

        if (const auto* dg = std::get_if<CcgDiag>(&model_)) {
            const double s2 = sigma_ * sigma_;
            const double st0 = dg->var0 + s2, st1 = dg->var1 + s2;
            const double a = 0.5 * (1.0 / st0 - 1.0 / st1);
            double quad = 0.0, lin = 0.0;
            for (std::size_t j = 0; j < x.size(); ++j) {
                quad += x[j] * x[j];
                lin += x[j] * (dg->mu1[j] / st1 - dg->mu0[j] / st0);
            }
            const double c = 0.5 * dot(dg->mu0, dg->mu0) / st0 -
                             0.5 * dot(dg->mu1, dg->mu1) / st1 +
                             0.5 * static_cast<double>(x.size()) * std::log(st0 / st1) +
                             prior_odds_;
            return a * quad + lin + c;
        }

        if (const auto* g = std::get_if<CcgGeneral>(&model_)) {
            const std::size_t d = x.size();
            double q0 = 0.0, q1 = 0.0;
            for (std::size_t i = 0; i < d; ++i) {
                double r0 = 0.0, r1 = 0.0;
                for (std::size_t j = 0; j < d; ++j) {
                    r0 += inv0_(i, j) * (x[j] - g->mu0[j]);
                    r1 += inv1_(i, j) * (x[j] - g->mu1[j]);
                }
                q0 += (x[i] - g->mu0[i]) * r0;
                q1 += (x[i] - g->mu1[i]) * r1;
            }
            return const_term_ + 0.5 * (q0 - q1);
        }

        // ring mixture: log-sum-exp difference of the class mixture
        // densities, accumulated online with running max subtraction so the
        // evaluator stays stateless and shareable across threads
        const auto class_log_density = [&](const std::vector<Vec>& means) {
            double m = -HUGE_VAL, s = 0.0;
            for (const Vec& mu : means) {
                const double l = detail::log_iso_gauss(x, mu, ring_var_);
                if (l <= m) {
                    s += std::exp(l - m);
                } else {
                    s = s * std::exp(m - l) + 1.0;
                    m = l;
                }
            }
            return m + std::log(s) - std::log(static_cast<double>(means.size()));
        };
        return prior_odds_ + class_log_density(means1_) - class_log_density(means0_);
    }

    double eta(std::span<const double> x) const { return sigmoid((*this)(x)); }

  private:
    JointModel model_;
    double sigma_;
    double prior_odds_ = 0.0;
    // CcgGeneral cache
    Mat inv0_, inv1_;
    double const_term_ = 0.0;
    // RingMixture cache
    std::vector<Vec> means0_, means1_;
    double ring_var_ = 0.0;
};

// One-shot log posterior odds log(p f1^sigma / (1-p) f0^sigma) at a point.
inline double theta_sigma(const JointModel& model, double sigma,
                          std::span<const double> x) {
    return ThetaEvaluator(model, sigma)(x);
}

// Posterior mean E[S | X^sigma = x], computed through the stable log-odds.
inline double eta_sigma(const JointModel& model, double sigma,
                        std::span<const double> x) {
    return sigmoid(theta_sigma(model, sigma, x));
}

struct McEstimate {
    double value = 0.0;
    double std_err = 0.0;
    std::size_t n = 0;
};

// Monte-Carlo estimate of MMSE(S | X^sigma) = E[(S - eta^sigma(X^sigma))^2]
// over fresh samples.
inline McEstimate true_mmse_mc(const JointModel& model, double sigma,
                               std::size_t n_mc, std::uint64_t seed) {
    if (n_mc < 1) throw std::invalid_argument("true_mmse_mc: need n_mc >= 1");
    const NoisyDataset ds = sample(model, n_mc, sigma, seed);
    const ThetaEvaluator theta(model, sigma);
    double sum = 0.0, sum2 = 0.0;
    for (std::size_t i = 0; i < n_mc; ++i) {
        const double e = sigmoid(theta(ds.xs.row(i)));
        const double w = (ds.ss[i] - e) * (ds.ss[i] - e);
        sum += w;
        sum2 += w * w;
    }
    const double mean = sum / static_cast<double>(n_mc);
    const double var =
        n_mc > 1 ? (sum2 - sum * mean) / static_cast<double>(n_mc - 1) : 0.0;
    return {mean, std::sqrt(std::max(var, 0.0) / static_cast<double>(n_mc)), n_mc};
}

// Reuses an already-sampled evaluation set (the second oracle half of an
// audit) instead of drawing fresh samples.
inline McEstimate mmse_mc_on(const NoisyDataset& ds, const JointModel& model) {
    const ThetaEvaluator theta(model, ds.sigma);
    double sum = 0.0, sum2 = 0.0;
    const std::size_t n = ds.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double e = sigmoid(theta(ds.xs.row(i)));
        const double w = (ds.ss[i] - e) * (ds.ss[i] - e);
        sum += w;
        sum2 += w * w;
    }
    const double mean = sum / static_cast<double>(n);
    const double var = n > 1 ? (sum2 - sum * mean) / static_cast<double>(n - 1) : 0.0;
    return {mean, std::sqrt(std::max(var, 0.0) / static_cast<double>(n)), n};
}

}  // namespace mmse
