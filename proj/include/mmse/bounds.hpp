#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>

#include "mmse/util.hpp"

namespace mmse {

inline void check_delta(double delta) {
    if (!(delta > 0.0 && delta < 1.0))
        throw std::invalid_argument("delta must lie strictly inside (0,1)");
}

// Hoeffding-style bound on the concentration term: sqrt(log(1/delta) / 2n).
inline double eps_c_hoeffding(std::size_t n, double delta) {
    if (n < 1) throw std::invalid_argument("eps_c_hoeffding: need n >= 1");
    check_delta(delta);
    return std::sqrt(std::log(1.0 / delta) / (2.0 * static_cast<double>(n)));
}

// Sample variance via the pairwise form 1/(n(n-1)) sum_{i<j} (W_i - W_j)^2.
// Quadratic in n; used only to cross-check the single-pass formula.
inline double pairwise_sample_variance(std::span<const double> w) {
    const std::size_t n = w.size();
    if (n < 2) throw std::invalid_argument("pairwise_sample_variance: need n >= 2");
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double d = w[i] - w[j];
            s += d * d;
        }
    return s / (static_cast<double>(n) * static_cast<double>(n - 1));
}

// Empirical Bernstein bound on the concentration term,
//   sqrt(2 Var_n(W) log(2/delta) / n) + 7 log(2/delta) / (3(n-1)),
// for squared residuals W_i in [0,1] of a model fit independently of these
// samples. Var_n is the unbiased sample variance (equal to the pairwise form).
inline double eps_c_bernstein(std::span<const double> w, double delta) {
    const std::size_t n = w.size();
    if (n < 2) throw std::invalid_argument("eps_c_bernstein: need n >= 2");
    check_delta(delta);
    for (double v : w)
        if (!(v >= 0.0 && v <= 1.0))
            throw std::invalid_argument("eps_c_bernstein: residuals must lie in [0,1]");
    const double var_n = mean_var(w).var;
    const double l = std::log(2.0 / delta);
    return std::sqrt(2.0 * var_n * l / static_cast<double>(n)) +
           7.0 * l / (3.0 * static_cast<double>(n - 1));
}

// Compression-based generalization bound:
//   sqrt((C log 2 + 2 log C + log(1/delta)) / (2n)).
inline double eps_g_compression(std::size_t c_bits, std::size_t n, double delta) {
    if (c_bits < 1) throw std::invalid_argument("eps_g_compression: need c_bits >= 1");
    if (n < 1) throw std::invalid_argument("eps_g_compression: need n >= 1");
    check_delta(delta);
    const double c = static_cast<double>(c_bits);
    return std::sqrt((c * std::log(2.0) + 2.0 * std::log(c) + std::log(1.0 / delta)) /
                     (2.0 * static_cast<double>(n)));
}

// An epsilon term together with the confidence parameter it was computed at.
struct ConfidenceTerm {
    double value = 0.0;
    double delta = 0.0;
};

struct LowerBound {
    double value = 0.0;
    bool vacuous = false;  // value <= 0 carries no information; never clamped
};

// Training-data bound: MMSE >= MSE_train - eps_C - eps_A.
inline LowerBound assemble_train_bound(double mse_train, double eps_c, double eps_a) {
    if (mse_train < 0.0 || eps_c < 0.0 || eps_a < 0.0)
        throw std::invalid_argument("assemble_train_bound: inputs must be >= 0");
    const double v = mse_train - eps_c - eps_a;
    return {v, v <= 0.0};
}

// Validation-data bound: MMSE >= MSE_val - eps~_C - eps_G - eps_C - eps_A.
// The three probabilistic terms must each have been computed at delta/3 so
// the assembled bound holds with confidence 1 - delta.
inline LowerBound assemble_val_bound(double mse_val, const ConfidenceTerm& eps_c_tilde,
                                     const ConfidenceTerm& eps_g,
                                     const ConfidenceTerm& eps_c, double eps_a,
                                     double delta) {
    check_delta(delta);
    if (mse_val < 0.0 || eps_a < 0.0)
        throw std::invalid_argument("assemble_val_bound: inputs must be >= 0");
    const double want = delta / 3.0;
    for (const auto* t : {&eps_c_tilde, &eps_g, &eps_c}) {
        if (t->value < 0.0)
            throw std::invalid_argument("assemble_val_bound: epsilon terms must be >= 0");
        if (std::abs(t->delta - want) > 1e-12 * delta)
            throw consistency_error(
                "assemble_val_bound: probabilistic terms must each be computed at delta/3");
    }
    const double v = mse_val - eps_c_tilde.value - eps_g.value - eps_c.value - eps_a;
    return {v, v <= 0.0};
}

enum class EpsAMode { closed_form, monte_carlo };

inline std::string to_string(EpsAMode m) {
    return m == EpsAMode::closed_form ? "closed_form" : "monte_carlo";
}

// All terms of one audit. Optional fields are absent when the audit had no
// validation set (or no oracle model for the Bernstein variant). Negative
// lower bounds are reported as-is with the vacuous flag set.
struct BoundReport {
    double mse_train = 0.0;
    std::optional<double> mse_val;

    double eps_c_hoeffding = 0.0;           // at delta
    std::optional<double> eps_c_bernstein;  // at delta, needs h*_H
    std::optional<double> eps_c_tilde;      // at delta/3, Bernstein on val residuals
    std::optional<double> eps_g;            // at delta/3, compression bound

    double eps_a = 0.0;
    EpsAMode eps_a_mode = EpsAMode::monte_carlo;
    std::optional<double> eps_a_std_err;  // carried as metadata, not folded into delta
    std::string eps_a_note;               // e.g. series truncation caveat

    double delta = 0.05;
    std::size_t n = 0;
    std::size_t m = 0;

    LowerBound train_bound;
    std::optional<LowerBound> val_bound;
};

}  // namespace mmse
