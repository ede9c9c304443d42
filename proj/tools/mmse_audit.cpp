// Config-driven MMSE audit runner.
//
//   mmse-audit audit  --config cfg.json [--out DIR] [--seed N] [--delta F]
//   mmse-audit sweep  --config cfg.json --out DIR [--jobs K] [--seed N]
//   mmse-audit figure --config cfg.json --out DIR
//   mmse-audit verify [--jobs K]

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include "mmse/approx.hpp"
#include "mmse/audit.hpp"
#include "mmse/config_json.hpp"
#include "mmse/plot.hpp"
#include "mmse/table.hpp"

namespace fs = std::filesystem;
using namespace mmse;

namespace {

json load_json(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open config: " + path);
    return json::parse(f);
}

void apply_overrides(ExperimentConfig& cfg, const std::optional<std::uint64_t>& seed,
                     const std::optional<double>& delta) {
    if (seed) cfg.master_seed = *seed;
    if (delta) cfg.delta = *delta;
}

void write_outputs(const ExperimentConfig& cfg, const json& raw_cfg,
                   const std::vector<RunRecord>& records, const std::string& out_dir) {
    fs::create_directories(out_dir);
    const std::string csv = to_csv(records);
    write_file(out_dir + "/results.csv", csv);
    write_file(out_dir + "/report.json", report_json(cfg, records).dump(2) + "\n");
    // figures regenerate from the csv just written, never from the records
    const auto plots = plots_from_json(raw_cfg);
    if (!plots.empty()) {
        const CsvTable table = parse_csv(read_file(out_dir + "/results.csv"));
        for (const PlotSpec& spec : plots)
            emit_plot(table, spec, out_dir + "/" + spec.out_name);
    }
    std::printf("wrote %s/results.csv (%zu rows)\n", out_dir.c_str(), records.size());
    if (!plots.empty()) std::printf("wrote %zu figure(s)\n", plots.size());
}

void print_report(const RunRecord& r) {
    const BoundReport& b = r.report;
    std::printf("point %zu run %zu  sigma=%g d=%zu n=%zu m=%zu\n", r.point_id, r.run,
                r.sigma, r.d, r.n, r.m);
    if (!r.ok()) {
        std::printf("  error: %s\n", r.error.c_str());
        return;
    }
    std::printf("  mse_train      %.6f\n", b.mse_train);
    if (b.mse_val) std::printf("  mse_val        %.6f\n", *b.mse_val);
    std::printf("  eps_c hoeffding %.6f\n", b.eps_c_hoeffding);
    if (b.eps_c_bernstein) std::printf("  eps_c bernstein %.6f\n", *b.eps_c_bernstein);
    if (b.eps_c_tilde) std::printf("  eps_c~ (d/3)    %.6f\n", *b.eps_c_tilde);
    if (b.eps_g) std::printf("  eps_g (d/3)     %.6f\n", *b.eps_g);
    std::printf("  eps_a [%s]%s  %.6f", to_string(b.eps_a_mode).c_str(),
                b.eps_a_note.empty() ? "" : (" (" + b.eps_a_note + ")").c_str(),
                b.eps_a);
    if (b.eps_a_std_err) std::printf("  (se %.2g)", *b.eps_a_std_err);
    std::printf("\n");
    std::printf("  mmse (mc)      %.6f  (se %.2g)\n", r.mmse_mc, r.mmse_se);
    std::printf("  lower bound (train) %.6f%s\n", b.train_bound.value,
                b.train_bound.vacuous ? "  [vacuous]" : "");
    if (b.val_bound)
        std::printf("  lower bound (val)   %.6f%s\n", b.val_bound->value,
                    b.val_bound->vacuous ? "  [vacuous]" : "");
}

int run_verify(unsigned jobs) {
    int failures = 0;
    const auto check = [&](bool ok, const char* name) {
        std::printf("[%s] %s\n", ok ? "ok" : "FAIL", name);
        if (!ok) ++failures;
    };

    // eta = sigmoid(theta) across every model family
    {
        Mat c0 = Mat::identity(2), c1 = Mat::identity(2);
        c0(0, 1) = c0(1, 0) = 0.3;
        const std::vector<JointModel> models{
            Bsc{0.25, 0.25}, CcgDiag{0.4, {-1.0, 0.0}, {1.0, 0.5}, 1.0, 3.0},
            CcgGeneral{0.3, {0.0, 0.0}, {1.0, 1.0}, c0, c1}, RingMixture{0.5, 3, 2.0}};
        bool ok = true;
        Rng rng(1);
        for (const auto& m : models) {
            for (int t = 0; t < 200; ++t) {
                Vec x(dim(m));
                for (double& v : x) v = rng.uniform(-4.0, 4.0);
                const double eta = eta_sigma(m, 1.0, x);
                ok &= std::abs(eta - sigmoid(theta_sigma(m, 1.0, x))) <= 1e-12;
                ok &= eta >= 0.0 && eta <= 1.0;
            }
        }
        check(ok, "posterior consistency eta = sigmoid(theta)");
    }

    // closed-form cross paths
    {
        bool ok = true;
        Rng rng(2);
        for (int t = 0; t < 20; ++t) {
            const std::size_t d = 1 + rng.uniform_index(3);
            const double v0 = rng.uniform(0.3, 2.5), v1 = rng.uniform(0.3, 2.5);
            const double p = rng.uniform(0.1, 0.9), sigma = rng.uniform(0.2, 2.5);
            Vec mu0(d), mu1(d);
            for (std::size_t j = 0; j < d; ++j) {
                mu0[j] = rng.uniform(-1.0, 1.0);
                mu1[j] = rng.uniform(-1.0, 1.0);
            }
            Mat s0 = Mat::identity(d), s1 = Mat::identity(d);
            for (std::size_t j = 0; j < d; ++j) {
                s0(j, j) = v0;
                s1(j, j) = v1;
            }
            ok &= std::abs(eps_a_ccg_general(p, mu0, mu1, s0, s1, sigma) -
                           eps_a_ccg_diag(p, mu0, mu1, v0, v1, sigma, d)) <= 1e-9;
        }
        check(ok, "ccg general/diagonal closed forms agree");
    }

    // deterministic sweep and byte-stable csv
    {
        ExperimentConfig cfg;
        cfg.model = Bsc{0.25, 0.25};
        cfg.grid = {0.5, 1.0};
        cfg.hypothesis.train.epochs = 200;
        cfg.n_train = 100;
        cfg.n_oracle = 2000;
        cfg.runs = 2;
        cfg.master_seed = 7;
        const std::string a = to_csv(run_audit(cfg, jobs));
        const std::string b = to_csv(run_audit(cfg, jobs > 1 ? 1 : 2));
        check(a == b, "sweep determinism across thread counts");
    }

    // vacuous bounds are reported, never clamped
    {
        const LowerBound lb = assemble_train_bound(0.01, 0.05, 0.0);
        check(lb.vacuous && lb.value < 0.0, "vacuous bounds keep their value");
    }

    std::printf(failures == 0 ? "verify: all checks passed\n"
                              : "verify: %d check(s) failed\n",
                failures);
    return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"MMSE lower-bound audit toolkit"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out";
    std::optional<std::uint64_t> seed;
    std::optional<double> delta;
    unsigned jobs = 1;

    auto* audit = app.add_subcommand("audit", "run a single-cell audit and print the bound report");
    audit->add_option("--config", config_path, "experiment config json")->required();
    audit->add_option("--out", out_dir, "output directory");
    audit->add_option("--seed", seed, "master seed override");
    audit->add_option("--delta", delta, "confidence parameter override");
    audit->add_option("--jobs", jobs, "worker threads");

    auto* sweep = app.add_subcommand("sweep", "run the full grid x runs sweep");
    sweep->add_option("--config", config_path, "experiment config json")->required();
    sweep->add_option("--out", out_dir, "output directory")->required();
    sweep->add_option("--seed", seed, "master seed override");
    sweep->add_option("--delta", delta, "confidence parameter override");
    sweep->add_option("--jobs", jobs, "worker threads");

    auto* figure = app.add_subcommand("figure", "re-render figures from an existing results.csv");
    figure->add_option("--config", config_path, "config json with a plots section")->required();
    figure->add_option("--out", out_dir, "directory holding results.csv")->required();

    auto* verify = app.add_subcommand("verify", "run the built-in invariant suite");
    verify->add_option("--jobs", jobs, "worker threads");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(audit)) {
            const json raw = load_json(config_path);
            ExperimentConfig cfg = config_from_json(raw);
            apply_overrides(cfg, seed, delta);
            cfg.runs = 1;  // a single bound
            if (cfg.grid.size() > 1) cfg.grid = {cfg.grid.front()};
            const auto records = run_audit(cfg, jobs);
            print_report(records.at(0));
            fs::create_directories(out_dir);
            write_file(out_dir + "/report.json",
                       report_json(cfg, records).dump(2) + "\n");
            return records.at(0).ok() ? 0 : 1;
        }
        if (app.got_subcommand(sweep)) {
            const json raw = load_json(config_path);
            ExperimentConfig cfg = config_from_json(raw);
            apply_overrides(cfg, seed, delta);
            const auto records = run_audit(cfg, jobs);
            write_outputs(cfg, raw, records, out_dir);
            for (const auto& r : records)
                if (!r.ok())
                    std::fprintf(stderr, "cell (%zu,%zu) failed: %s\n", r.point_id,
                                 r.run, r.error.c_str());
            return 0;
        }
        if (app.got_subcommand(figure)) {
            const json raw = load_json(config_path);
            const auto plots = plots_from_json(raw);
            if (plots.empty()) throw std::runtime_error("config carries no plots section");
            const CsvTable table = parse_csv(read_file(out_dir + "/results.csv"));
            for (const PlotSpec& spec : plots)
                emit_plot(table, spec, out_dir + "/" + spec.out_name);
            std::printf("wrote %zu figure(s) to %s\n", plots.size(), out_dir.c_str());
            return 0;
        }
        return run_verify(jobs);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
