#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mmse {

// Thrown when a numeric routine cannot proceed (singular system, non-PD
// matrix, ...). Distinct from std::invalid_argument, which signals a broken
// caller contract.
struct numerical_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Two independent code paths that must agree disagreed beyond tolerance.
struct consistency_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct training_error : std::runtime_error {
    int epoch;
    training_error(const std::string& what, int ep)
        : std::runtime_error(what), epoch(ep) {}
};

// Overflow-safe logistic function, branch on sign of z.
inline double sigmoid(double z) {
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// log(a + b*e^t) for a,b >= 0 (not both zero), stable for any t.
inline double log_a_plus_b_exp(double a, double b, double t) {
    if (a == 0.0) return std::log(b) + t;
    if (b == 0.0) return std::log(a);
    if (t > 0.0) {
        return t + std::log(b + a * std::exp(-t));
    }
    return std::log(a + b * std::exp(t));
}

// log(sum_i e^{x_i}) with max subtraction.
inline double log_sum_exp(std::span<const double> xs) {
    double m = -HUGE_VAL;
    for (double x : xs) m = std::max(m, x);
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double x : xs) s += std::exp(x - m);
    return m + std::log(s);
}

struct MeanVar {
    double mean = 0.0;
    double var = 0.0;  // unbiased (n-1 normalized)
    std::size_t n = 0;

    double std_err() const {
        return n > 0 ? std::sqrt(var / static_cast<double>(n)) : 0.0;
    }
};

inline MeanVar mean_var(std::span<const double> xs) {
    const std::size_t n = xs.size();
    if (n == 0) return {};
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double x : xs) {
        const double d = x - mean;
        ss += d * d;
    }
    const double var = n > 1 ? ss / static_cast<double>(n - 1) : 0.0;
    return {mean, var, n};
}

}  // namespace mmse
