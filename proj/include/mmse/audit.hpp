#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "mmse/approx.hpp"
#include "mmse/bounds.hpp"
#include "mmse/distributions.hpp"
#include "mmse/hypotheses.hpp"
#include "mmse/training.hpp"

namespace mmse {

enum class SweepAxis { sigma, dimension, n_train, modes };

inline std::string to_string(SweepAxis a) {
    switch (a) {
        case SweepAxis::sigma: return "sigma";
        case SweepAxis::dimension: return "dimension";
        case SweepAxis::n_train: return "n_train";
        case SweepAxis::modes: return "modes";
    }
    return "?";
}

struct HypothesisSpec {
    HypothesisClass cls = HypothesisClass::logistic;
    TrainConfig train = TrainConfig::logistic_defaults();
    // population fit for the oracle model h*_H (nets only; the logistic
    // oracle is the closed-form moment fit). Defaults to `train`.
    std::optional<TrainConfig> oracle_train;
    // optional grid search: the trained model is the argmin of the training
    // MSE over these learning rates
    std::vector<double> lr_search;
};

struct ExperimentConfig {
    std::string name = "audit";
    JointModel model = Bsc{0.25, 0.25};
    SweepAxis axis = SweepAxis::sigma;
    std::vector<double> grid{1.0};
    double sigma = 1.0;  // noise level when the sweep axis is not sigma
    HypothesisSpec hypothesis;
    std::size_t n_train = 500;
    std::size_t m_val = 0;  // 0 disables the validation-side bound
    std::size_t n_oracle = 1000000;  // per oracle half
    std::size_t runs = 30;
    double delta = 0.05;
    EpsAMode eps_a_mode = EpsAMode::monte_carlo;
    std::uint64_t master_seed = 0;

    void validate() const {
        mmse::validate(model);
        if (grid.empty()) throw std::invalid_argument("sweep grid must be non-empty");
        for (std::size_t i = 1; i < grid.size(); ++i)
            if (!(grid[i] > grid[i - 1]))
                throw std::invalid_argument("sweep grid must be strictly increasing");
        if (runs < 1) throw std::invalid_argument("runs must be >= 1");
        check_delta(delta);
        if (n_train < 2) throw std::invalid_argument("n_train must be >= 2");
        if (n_oracle < 2) throw std::invalid_argument("n_oracle must be >= 2");
        hypothesis.train.validate();
        if (hypothesis.oracle_train) hypothesis.oracle_train->validate();
        if (axis == SweepAxis::dimension && !std::holds_alternative<CcgDiag>(model))
            throw std::invalid_argument("dimension sweeps need a ccg_diag model");
        if (axis == SweepAxis::modes && !std::holds_alternative<RingMixture>(model))
            throw std::invalid_argument("mode sweeps need a ring model");
        if (eps_a_mode == EpsAMode::closed_form) {
            if (hypothesis.cls != HypothesisClass::logistic)
                throw std::invalid_argument(
                    "closed-form eps_a exists only for the logistic class");
            if (std::holds_alternative<RingMixture>(model))
                throw std::invalid_argument(
                    "the ring mixture has no closed-form eps_a; use monte_carlo");
        }
    }
};

// One (grid point, run) cell of a sweep.
struct RunRecord {
    std::size_t point_id = 0;
    std::size_t run = 0;
    double sigma = 0.0;
    std::size_t d = 0;
    std::size_t n = 0;
    std::size_t m = 0;
    BoundReport report;
    double mmse_mc = 0.0;
    double mmse_se = 0.0;
    std::string error;  // non-empty marks a row-level failure

    bool ok() const { return error.empty(); }
};

namespace detail {

struct ResolvedPoint {
    JointModel model;
    double sigma;
    std::size_t n_train;
};

inline ResolvedPoint resolve_point(const ExperimentConfig& cfg, std::size_t idx) {
    const double g = cfg.grid[idx];
    switch (cfg.axis) {
        case SweepAxis::sigma:
            return {cfg.model, g, cfg.n_train};
        case SweepAxis::n_train:
            return {cfg.model, cfg.sigma, static_cast<std::size_t>(g)};
        case SweepAxis::modes: {
            RingMixture m = std::get<RingMixture>(cfg.model);
            m.n_modes = static_cast<int>(g);
            return {m, cfg.sigma, cfg.n_train};
        }
        case SweepAxis::dimension: {
            // hold |mu1 - mu0| fixed while spreading it evenly over the
            // coordinates: mu1 - mu0 = (|mu_d| / sqrt(d)) * 1
            CcgDiag m = std::get<CcgDiag>(cfg.model);
            double md2 = 0.0;
            for (std::size_t j = 0; j < m.mu0.size(); ++j) {
                const double t = m.mu1[j] - m.mu0[j];
                md2 += t * t;
            }
            const std::size_t d = static_cast<std::size_t>(g);
            const double half = 0.5 * std::sqrt(md2 / static_cast<double>(d));
            m.mu0.assign(d, -half);
            m.mu1.assign(d, half);
            return {m, cfg.sigma, cfg.n_train};
        }
    }
    throw std::logic_error("unreachable");
}

inline std::uint64_t substream(std::uint64_t seed, std::uint64_t k) {
    return mix64(seed ^ (0x8BB84B93962EACC9ull * (k + 1)));
}

// substream indices of one run's independent sample draws
enum : std::uint64_t {
    kOracleFit = 0,
    kOracleEval = 1,
    kTrainSet = 2,
    kValSet = 3,
    kOracleInit = 4,
    kTrainInit = 5,
};

inline Hypothesis fit_oracle_model(const ExperimentConfig& cfg,
                                   const ResolvedPoint& pt,
                                   const NoisyDataset& oracle_fit,
                                   std::uint64_t seed) {
    if (cfg.hypothesis.cls == HypothesisClass::logistic) {
        const ThetaEvaluator theta(pt.model, pt.sigma);
        return fit_logistic_closed_form(oracle_fit, theta);
    }
    TrainConfig tc = cfg.hypothesis.oracle_train.value_or(cfg.hypothesis.train);
    tc.seed = substream(seed, kOracleInit);
    return train(HypothesisClass::shallow_net, tc, oracle_fit);
}

inline Hypothesis fit_trained_model(const ExperimentConfig& cfg,
                                    const NoisyDataset& train_set,
                                    std::uint64_t seed) {
    TrainConfig tc = cfg.hypothesis.train;
    tc.seed = substream(seed, kTrainInit);
    if (cfg.hypothesis.lr_search.empty())
        return train(cfg.hypothesis.cls, tc, train_set);
    // the trained model is defined as the training-MSE minimizer, so a
    // hyperparameter search keeps the arm with the smallest training error
    Hypothesis best;
    double best_mse = HUGE_VAL;
    for (double lr : cfg.hypothesis.lr_search) {
        tc.learning_rate = lr;
        Hypothesis h = train(cfg.hypothesis.cls, tc, train_set);
        const double mse = emp_mse(h, train_set);
        if (mse < best_mse) {
            best_mse = mse;
            best = std::move(h);
        }
    }
    return best;
}

inline RunRecord run_cell(const ExperimentConfig& cfg, std::size_t point,
                          std::size_t run) {
    const ResolvedPoint pt = resolve_point(cfg, point);
    RunRecord rec;
    rec.point_id = point;
    rec.run = run;
    rec.sigma = pt.sigma;
    rec.d = dim(pt.model);
    rec.n = pt.n_train;
    rec.m = cfg.m_val;

    const std::uint64_t seed = derive_seed(cfg.master_seed, point, run);

    // population quantities from the two oracle halves
    const NoisyDataset oracle_fit =
        sample(pt.model, cfg.n_oracle, pt.sigma, substream(seed, kOracleFit));
    const NoisyDataset oracle_eval =
        sample(pt.model, cfg.n_oracle, pt.sigma, substream(seed, kOracleEval));
    const Hypothesis h_star = fit_oracle_model(cfg, pt, oracle_fit, seed);

    const McEstimate mmse = mmse_mc_on(oracle_eval, pt.model);
    rec.mmse_mc = mmse.value;
    rec.mmse_se = mmse.std_err;

    // finite-sample side
    const NoisyDataset train_set =
        sample(pt.model, pt.n_train, pt.sigma, substream(seed, kTrainSet));
    const Hypothesis h_hat = fit_trained_model(cfg, train_set, seed);

    BoundReport& rep = rec.report;
    rep.n = pt.n_train;
    rep.m = cfg.m_val;
    rep.delta = cfg.delta;
    rep.mse_train = emp_mse(h_hat, train_set);
    rep.eps_c_hoeffding = eps_c_hoeffding(pt.n_train, cfg.delta);
    const Vec w_star = squared_residuals(h_star, train_set);
    rep.eps_c_bernstein = eps_c_bernstein(w_star, cfg.delta);

    rep.eps_a_mode = cfg.eps_a_mode;
    if (cfg.eps_a_mode == EpsAMode::monte_carlo) {
        const McEstimate est = eps_a_mc_on(oracle_eval, pt.model, h_star);
        rep.eps_a = est.value;
        rep.eps_a_std_err = est.std_err;
    } else if (const auto* b = std::get_if<Bsc>(&pt.model)) {
        rep.eps_a = eps_a_bsc_series(b->p, b->p_n, pt.sigma, 4);
        if (pt.sigma < 1.0) rep.eps_a_note = "series, uncertified for sigma < 1";
    } else if (const auto* dg = std::get_if<CcgDiag>(&pt.model)) {
        rep.eps_a = eps_a_ccg_diag(dg->p, dg->mu0, dg->mu1, dg->var0, dg->var1,
                                   pt.sigma, dg->mu0.size());
    } else {
        const auto& g = std::get<CcgGeneral>(pt.model);
        rep.eps_a = eps_a_ccg_general(g.p, g.mu0, g.mu1, g.sigma0, g.sigma1, pt.sigma);
    }

    rep.train_bound =
        assemble_train_bound(rep.mse_train, *rep.eps_c_bernstein, rep.eps_a);

    if (cfg.m_val > 0) {
        const NoisyDataset val_set =
            sample(pt.model, cfg.m_val, pt.sigma, substream(seed, kValSet));
        rep.mse_val = emp_mse(h_hat, val_set);
        const double third = cfg.delta / 3.0;
        const Vec w_hat = squared_residuals(h_hat, val_set);
        rep.eps_c_tilde = eps_c_bernstein(w_hat, third);
        rep.eps_g = eps_g_compression(compressed_size_bits(h_hat), pt.n_train, third);
        const double eps_c_third = eps_c_bernstein(w_star, third);
        rep.val_bound = assemble_val_bound(
            *rep.mse_val, {*rep.eps_c_tilde, third}, {*rep.eps_g, third},
            {eps_c_third, third}, rep.eps_a, cfg.delta);
    }
    return rec;
}

}  // namespace detail

// Runs the whole sweep: every grid point x run cell, dispatched to a bounded
// worker pool. Cells are pure functions of the derived seed, and the table is
// assembled in (point, run) order, so the result is deterministic regardless
// of the job count.
inline std::vector<RunRecord> run_audit(const ExperimentConfig& cfg,
                                        unsigned jobs = 1) {
    cfg.validate();
    const std::size_t total = cfg.grid.size() * cfg.runs;
    std::vector<RunRecord> out(total);
    std::atomic<std::size_t> next{0};
    if (jobs == 0) jobs = 1;
    jobs = std::min<unsigned>(jobs, static_cast<unsigned>(total));

    const auto worker = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= total) return;
            const std::size_t point = i / cfg.runs;
            const std::size_t run = i % cfg.runs;
            try {
                out[i] = detail::run_cell(cfg, point, run);
            } catch (const std::exception& e) {
                RunRecord rec;
                rec.point_id = point;
                rec.run = run;
                try {
                    const auto pt = detail::resolve_point(cfg, point);
                    rec.sigma = pt.sigma;
                    rec.d = dim(pt.model);
                    rec.n = pt.n_train;
                } catch (...) {
                }
                rec.m = cfg.m_val;
                rec.error = e.what();
                out[i] = std::move(rec);
            }
        }
    };

    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(jobs);
        for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    return out;
}

}  // namespace mmse
