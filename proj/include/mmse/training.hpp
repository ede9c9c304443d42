#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "mmse/distributions.hpp"
#include "mmse/hypotheses.hpp"
#include "mmse/linalg.hpp"
#include "mmse/rng.hpp"
#include "mmse/util.hpp"

namespace mmse {

enum class LrSchedule { cosine, constant };

struct TrainConfig {
    double learning_rate = 0.1;
    int epochs = 5000;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double weight_decay = 0.01;
    LrSchedule schedule = LrSchedule::cosine;
    std::uint64_t seed = 0;
    std::size_t width = 10;  // hidden width d_w, shallow net only

    // hyperparameter table defaults
    static TrainConfig logistic_defaults() {
        TrainConfig c;
        c.learning_rate = 0.1;
        c.epochs = 5000;
        return c;
    }
    static TrainConfig net_defaults(std::size_t width, int epochs = 5000) {
        TrainConfig c;
        c.learning_rate = 0.01;
        c.epochs = epochs;
        c.width = width;
        return c;
    }

    void validate() const {
        if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be > 0");
        if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
        if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0))
            throw std::invalid_argument("betas must lie in (0,1)");
        if (weight_decay < 0.0) throw std::invalid_argument("weight_decay must be >= 0");
    }
};

// Population-optimal logistic via the closed form
//   a* = Var(X^s)^{-1} Cov(X^s, theta(X^s)),  b* = E[theta] - a*.E[X^s],
// with moments estimated from the given dataset. The theta oracle must match
// the distribution the data came from.
inline Logistic fit_logistic_closed_form(const NoisyDataset& ds,
                                         const ThetaEvaluator& theta) {
    const std::size_t n = ds.size(), d = ds.dim();
    if (n < d + 2) throw std::invalid_argument("fit_logistic_closed_form: need n >= d + 2");
    Vec th(n);
    for (std::size_t i = 0; i < n; ++i) th[i] = theta(ds.xs.row(i));
    const EmpStats st = emp_stats(ds.xs, th);
    Mat l;
    try {
        l = cholesky(st.var_x);
    } catch (const numerical_error&) {
        throw numerical_error("fit_logistic_closed_form: singular empirical Var(X)");
    }
    Logistic h;
    h.a = cholesky_solve(l, st.cov_xy);
    h.b = st.mean_y - dot(h.a, st.mean_x);
    return h;
}

// --- flattened parameter view used by the optimizer and gradient checks ---

inline Vec flatten(const Hypothesis& h) {
    Vec out;
    if (const auto* lg = std::get_if<Logistic>(&h)) {
        out = lg->a;
        out.push_back(lg->b);
    } else {
        const auto& net = std::get<ShallowNet>(h);
        out = net.w1.data();
        out.insert(out.end(), net.b1.begin(), net.b1.end());
        out.insert(out.end(), net.w2.begin(), net.w2.end());
        out.push_back(net.b2);
    }
    return out;
}

inline Hypothesis unflatten_like(const Hypothesis& shape, std::span<const double> p) {
    if (const auto* lg = std::get_if<Logistic>(&shape)) {
        Logistic h;
        h.a.assign(p.begin(), p.begin() + static_cast<std::ptrdiff_t>(lg->a.size()));
        h.b = p[lg->a.size()];
        return h;
    }
    const auto& net = std::get<ShallowNet>(shape);
    const std::size_t dw = net.width(), d = net.in_dim();
    ShallowNet h;
    h.w1 = Mat(dw, d);
    std::size_t k = 0;
    for (std::size_t i = 0; i < dw * d; ++i, ++k) h.w1.data()[i] = p[k];
    h.b1.assign(p.begin() + static_cast<std::ptrdiff_t>(k),
                p.begin() + static_cast<std::ptrdiff_t>(k + dw));
    k += dw;
    h.w2.assign(p.begin() + static_cast<std::ptrdiff_t>(k),
                p.begin() + static_cast<std::ptrdiff_t>(k + dw));
    k += dw;
    h.b2 = p[k];
    return h;
}

// Mean squared loss and its gradient w.r.t. the flattened parameters.
// Returns the loss; grad is resized and overwritten.
inline double sq_loss_grad(const Hypothesis& h, const NoisyDataset& ds, Vec& grad) {
    const std::size_t n = ds.size();
    if (n == 0) throw std::invalid_argument("sq_loss_grad: empty dataset");
    const double inv_n = 1.0 / static_cast<double>(n);

    if (const auto* lg = std::get_if<Logistic>(&h)) {
        const std::size_t d = lg->a.size();
        grad.assign(d + 1, 0.0);
        double loss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto x = ds.xs.row(i);
            const double hv = sigmoid(dot(lg->a, x) + lg->b);
            const double r = hv - ds.ss[i];
            loss += r * r;
            const double gz = 2.0 * inv_n * r * hv * (1.0 - hv);
            for (std::size_t j = 0; j < d; ++j) grad[j] += gz * x[j];
            grad[d] += gz;
        }
        return loss * inv_n;
    }

    const auto& net = std::get<ShallowNet>(h);
    const std::size_t d = net.in_dim(), dw = net.width();
    grad.assign(dw * d + 2 * dw + 1, 0.0);
    double* gw1 = grad.data();
    double* gb1 = grad.data() + dw * d;
    double* gw2 = gb1 + dw;
    double* gb2 = gw2 + dw;
    Vec act(dw);
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto x = ds.xs.row(i);
        double z = net.b2;
        for (std::size_t k = 0; k < dw; ++k) {
            double a = net.b1[k];
            const double* wrow = net.w1.data().data() + k * d;
            for (std::size_t j = 0; j < d; ++j) a += wrow[j] * x[j];
            act[k] = a > 0.0 ? a : 0.0;
            z += net.w2[k] * act[k];
        }
        const double hv = sigmoid(z);
        const double r = hv - ds.ss[i];
        loss += r * r;
        const double gz = 2.0 * inv_n * r * hv * (1.0 - hv);
        *gb2 += gz;
        for (std::size_t k = 0; k < dw; ++k) {
            gw2[k] += gz * act[k];
            if (act[k] > 0.0) {
                const double gpre = gz * net.w2[k];
                gb1[k] += gpre;
                double* grow = gw1 + k * d;
                for (std::size_t j = 0; j < d; ++j) grow[j] += gpre * x[j];
            }
        }
    }
    return loss * inv_n;
}

// Seeded uniform +-1/sqrt(fan_in) initialization for both classes.
inline Hypothesis init_hypothesis(HypothesisClass cls, std::size_t d,
                                  std::size_t width, std::uint64_t seed) {
    Rng rng(seed);
    if (cls == HypothesisClass::logistic) {
        Logistic h;
        const double bound = 1.0 / std::sqrt(static_cast<double>(d));
        h.a.resize(d);
        for (double& v : h.a) v = rng.uniform(-bound, bound);
        h.b = rng.uniform(-bound, bound);
        return h;
    }
    ShallowNet h;
    const double b1 = 1.0 / std::sqrt(static_cast<double>(d));
    const double b2 = 1.0 / std::sqrt(static_cast<double>(width));
    h.w1 = Mat(width, d);
    for (double& v : h.w1.data()) v = rng.uniform(-b1, b1);
    h.b1.resize(width);
    for (double& v : h.b1) v = rng.uniform(-b1, b1);
    h.w2.resize(width);
    for (double& v : h.w2) v = rng.uniform(-b2, b2);
    h.b2 = rng.uniform(-b2, b2);
    return h;
}

// Full-batch AdamW on the mean squared error, decoupled weight decay on all
// parameters, cosine decay lr_t = lr (1 + cos(pi t / T)) / 2. Deterministic
// given cfg.seed. Returns the final-epoch parameters.
inline Hypothesis train(HypothesisClass cls, const TrainConfig& cfg,
                        const NoisyDataset& data) {
    cfg.validate();
    if (data.size() == 0) throw std::invalid_argument("train: empty dataset");

    Hypothesis h = init_hypothesis(cls, data.dim(), cfg.width, cfg.seed);
    Vec params = flatten(h);
    Vec grad, m(params.size(), 0.0), v(params.size(), 0.0);
    const double eps = 1e-8;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr_t =
            cfg.schedule == LrSchedule::cosine
                ? cfg.learning_rate * 0.5 *
                      (1.0 + std::cos(M_PI * static_cast<double>(epoch) /
                                      static_cast<double>(cfg.epochs)))
                : cfg.learning_rate;

        h = unflatten_like(h, params);
        const double loss = sq_loss_grad(h, data, grad);
        if (!std::isfinite(loss))
            throw training_error("train: loss diverged", epoch);

        const double bc1 = 1.0 - std::pow(cfg.beta1, epoch + 1);
        const double bc2 = 1.0 - std::pow(cfg.beta2, epoch + 1);
        for (std::size_t i = 0; i < params.size(); ++i) {
            params[i] -= lr_t * cfg.weight_decay * params[i];
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grad[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            params[i] -= lr_t * mhat / (std::sqrt(vhat) + eps);
        }
    }
    return unflatten_like(h, params);
}

}  // namespace mmse
