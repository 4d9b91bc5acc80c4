// Experiment driver: dataset generation, training, calibration sweeps,
// ablations and diagnostics, all reproducible from a config echo.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "vmfcal/calibrate.hpp"
#include "vmfcal/io.hpp"
#include "vmfcal/selfcheck.hpp"
#include "vmfcal/trainer.hpp"

using namespace vmfcal;

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitNumerical = 2;
constexpr int kExitVerification = 3;

// Removes partially written artifacts when a command fails midway.
struct OutputGuard {
    std::vector<std::string> paths;
    bool armed = true;

    std::string track(const std::string& p) {
        paths.push_back(p);
        return p;
    }
    void dismiss() { armed = false; }
    ~OutputGuard() {
        if (!armed) return;
        for (const std::string& p : paths) {
            std::error_code ec;
            std::filesystem::remove(p, ec);
        }
    }
};

struct CommonOpts {
    std::string out = "out";
    uint64_t seed = 0;
    std::string format = "csv";  // csv | text
    int parallel = 1;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--out", opts.out, "output directory");
    cmd->add_option("--seed", opts.seed, "master seed");
    cmd->add_option("--format", opts.format, "table format")
        ->check(CLI::IsMember({"csv", "text"}));
    cmd->add_option("--parallel", opts.parallel, "worker threads for sweeps")
        ->check(CLI::PositiveNumber);
}

// Post-merge provenance: the echo is written next to the outputs and its
// hash stamps every table. Timestamps go to a separate file so numeric
// outputs stay byte-identical across runs.
uint64_t write_echo(OutputGuard& guard, const std::string& out_dir,
                    const std::string& echo) {
    std::filesystem::create_directories(out_dir);
    {
        std::ofstream f(guard.track(out_dir + "/config_echo.txt"));
        if (!f) throw std::runtime_error("cannot write config echo in " + out_dir);
        f << echo;
    }
    {
        std::ofstream f(out_dir + "/run_info.txt");
        const auto now = std::chrono::system_clock::now();
        f << "timestamp_unix_ms "
          << std::chrono::duration_cast<std::chrono::milliseconds>(
                 now.time_since_epoch())
                 .count()
          << "\n";
    }
    return fnv1a_hash(echo);
}

std::string hash_line(uint64_t hash) {
    std::ostringstream out;
    out << "# config " << std::hex << hash << "\n";
    return out.str();
}

void write_table(OutputGuard& guard, const std::string& path, uint64_t hash,
                 const std::string& format,
                 const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows) {
    std::ofstream out(guard.track(path));
    if (!out) throw std::runtime_error("cannot write " + path);
    out << hash_line(hash);
    const char sep = format == "csv" ? ',' : ' ';
    for (size_t i = 0; i < header.size(); ++i)
        out << (i ? std::string(1, sep) : "") << header[i];
    out << "\n";
    for (const auto& row : rows) {
        for (size_t i = 0; i < row.size(); ++i)
            out << (i ? std::string(1, sep) : "") << row[i];
        out << "\n";
    }
}

std::string acc_str(bool present, double value) {
    return present ? format_double(value) : "absent";
}

std::vector<std::string> metrics_row(const EvalMetrics& m) {
    return {format_double(m.overall), acc_str(m.has_many, m.many),
            acc_str(m.has_medium, m.medium), acc_str(m.has_few, m.few),
            format_double(m.mean_per_class)};
}

Eigen::VectorXd uniform_prior(int c) {
    return Eigen::VectorXd::Constant(c, 1.0 / c);
}

// Serial-or-threaded map over [0, n) with results in fixed slots, so the
// output never depends on scheduling.
template <typename F>
void parallel_for(int n, int workers, F body) {
    if (workers <= 1) {
        for (int i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int w = 0; w < std::min(workers, n); ++w)
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) body(i);
        });
    for (std::thread& t : pool) t.join();
}

// ---------------------------------------------------------------- gen-data

struct GenDataOpts {
    CommonOpts common;
    SynthSpec spec;
};

int run_gen_data(const GenDataOpts& o) {
    SynthSpec spec = o.spec;
    spec.seed = o.common.seed;
    spec.validate();

    std::ostringstream echo;
    echo << "command gen-data\n"
         << "classes " << spec.num_classes << "\ndim " << spec.dim
         << "\nmax_per_class " << spec.max_per_class << "\npareto_power "
         << format_double(spec.pareto_power) << "\nclass_kappa "
         << format_double(spec.class_kappa) << "\ntest_per_class "
         << spec.test_per_class << "\nmany_min " << spec.many_min << "\nfew_max "
         << spec.few_max << "\nseed " << spec.seed << "\n";

    OutputGuard guard;
    write_echo(guard, o.common.out, echo.str());
    const SynthDataset ds = make_dataset(spec);
    guard.track(o.common.out + "/train.csv");
    guard.track(o.common.out + "/test.csv");
    guard.track(o.common.out + "/meta.txt");
    export_dataset(ds, spec, o.common.out);
    guard.dismiss();
    std::cout << "wrote dataset (" << ds.train.size() << " train / " << ds.test.size()
              << " test) to " << o.common.out << "\n";
    return 0;
}

// ------------------------------------------------------------------- train

struct TrainOpts {
    CommonOpts common;
    std::string data;
    TrainConfig cfg;
    bool no_icd = false, no_cfc = false;
    std::string schedule = "cosine";
};

std::string train_echo(const TrainOpts& o, const TrainConfig& cfg) {
    std::ostringstream echo;
    echo << "command train\ndata " << o.data << "\nepochs " << cfg.epochs
         << "\nbatch_size " << cfg.batch_size << "\nlr " << format_double(cfg.lr)
         << "\nlr_schedule " << to_string(cfg.lr_schedule) << "\nmomentum "
         << format_double(cfg.momentum) << "\nkappa_init "
         << format_double(cfg.kappa_init) << "\nlambda " << format_double(cfg.lambda)
         << "\nkappa_floor " << format_double(cfg.kappa_floor) << "\nfreeze_kappa "
         << cfg.freeze_kappa << "\nenable_icd " << cfg.enable_icd << "\nenable_cfc "
         << cfg.enable_cfc << "\nseed " << cfg.seed << "\n";
    return echo.str();
}

int run_train(const TrainOpts& o) {
    TrainConfig cfg = o.cfg;
    cfg.seed = o.common.seed;
    cfg.lr_schedule = lr_schedule_from_string(o.schedule);
    cfg.enable_icd = !o.no_icd;
    cfg.enable_cfc = !o.no_cfc;
    cfg.validate();

    OutputGuard guard;
    const uint64_t hash = write_echo(guard, o.common.out, train_echo(o, cfg));
    const SynthDataset ds = import_dataset(o.data);
    const TrainState state = train(ds, cfg);

    save_checkpoint(state.clf, guard.track(o.common.out + "/checkpoint.txt"));
    {
        std::ofstream metrics(guard.track(o.common.out + "/metrics.txt"));
        metrics << hash_line(hash);
        for (const EpochRecord& r : state.metrics)
            metrics << format_epoch_record(r) << "\n";
    }
    const EvalMetrics m = evaluate(state.clf, ds.test, ds.groups);
    write_table(guard, o.common.out + "/eval." + o.common.format, hash, o.common.format,
                {"all", "many", "medium", "few", "mean_per_class"}, {metrics_row(m)});
    guard.dismiss();
    std::cout << "test accuracy " << format_double(m.overall) << "; artifacts in "
              << o.common.out << "\n";
    return 0;
}

// --------------------------------------------------------------- calibrate

struct CalibrateOpts {
    CommonOpts common;
    std::string checkpoint;
    std::string weights;  // generic-classifier CSV path; overrides checkpoint
    CalibrationConfig cal;
};

int run_calibrate(const CalibrateOpts& o) {
    std::ostringstream echo;
    echo << "command calibrate\nalpha " << format_double(o.cal.alpha) << "\n";

    OutputGuard guard;
    if (!o.weights.empty()) {
        CalibrationConfig cfg = o.cal;
        const GenericClassifierWeights gw = load_weights_csv(o.weights, cfg);
        echo << "weights " << o.weights << "\nkind " << to_string(gw.kind) << "\ntau "
             << format_double(cfg.tau) << "\ngamma " << format_double(cfg.gamma)
             << "\n";
        write_echo(guard, o.common.out, echo.str());
        const int c = static_cast<int>(gw.weights.rows());
        const GenericClassifierWeights out =
            calibrate_generic(gw, cfg, uniform_prior(c));
        save_weights_csv(out, cfg,
                         guard.track(o.common.out + "/calibrated_weights.csv"));
        guard.dismiss();
        std::cout << "calibrated " << c << " weight rows into " << o.common.out << "\n";
        return 0;
    }

    echo << "checkpoint " << o.checkpoint << "\n";
    const uint64_t hash = write_echo(guard, o.common.out, echo.str());
    const VmfClassifier clf = load_checkpoint(o.checkpoint);
    const int c = clf.num_classes();
    const VmfClassifier cal = calibrate(clf, o.cal, uniform_prior(c));
    save_checkpoint(cal, guard.track(o.common.out + "/calibrated.txt"));

    const OverlapMatrix om = overlap_matrix(clf);
    std::vector<std::vector<std::string>> rows;
    for (int i = 0; i < c; ++i)
        rows.push_back({std::to_string(i), format_double(clf.classes[i].kappa),
                        format_double(cal.classes[i].kappa),
                        format_double(om.row_avg[i])});
    write_table(guard, o.common.out + "/kappa." + o.common.format, hash,
                o.common.format, {"class", "kappa", "kappa_hat", "row_avg_overlap"},
                rows);
    guard.dismiss();
    std::cout << "calibrated " << c << " classes into " << o.common.out << "\n";
    return 0;
}

// ------------------------------------------------------------- sweep-alpha

struct SweepOpts {
    CommonOpts common;
    std::string data;
    std::string checkpoint;
};

int run_sweep_alpha(const SweepOpts& o) {
    std::ostringstream echo;
    echo << "command sweep-alpha\ndata " << o.data << "\ncheckpoint " << o.checkpoint
         << "\n";
    OutputGuard guard;
    const uint64_t hash = write_echo(guard, o.common.out, echo.str());

    const SynthDataset ds = import_dataset(o.data);
    const VmfClassifier clf = load_checkpoint(o.checkpoint);
    const Eigen::VectorXd prior = uniform_prior(clf.num_classes());

    std::vector<EvalMetrics> results(11);
    parallel_for(11, o.common.parallel, [&](int i) {
        CalibrationConfig cal;
        cal.alpha = 0.1 * i;
        results[i] = evaluate(calibrate(clf, cal, prior), ds.test, ds.groups);
    });

    std::vector<std::vector<std::string>> rows;
    for (int i = 0; i <= 10; ++i) {
        std::vector<std::string> row = {format_double(0.1 * i)};
        const std::vector<std::string> m = metrics_row(results[i]);
        row.insert(row.end(), m.begin(), m.end());
        rows.push_back(row);
    }
    write_table(guard, o.common.out + "/sweep_alpha." + o.common.format, hash,
                o.common.format, {"alpha", "all", "many", "medium", "few",
                                  "mean_per_class"},
                rows);
    guard.dismiss();
    std::cout << "alpha sweep (11 rows) written to " << o.common.out << "\n";
    return 0;
}

// ------------------------------------------------------------- ablate-loss

struct AblateOpts {
    CommonOpts common;
    std::string data;
    TrainConfig cfg;
    std::string schedule = "cosine";
};

int run_ablate_loss(const AblateOpts& o) {
    TrainConfig base = o.cfg;
    base.seed = o.common.seed;
    base.lr_schedule = lr_schedule_from_string(o.schedule);
    base.validate();

    std::ostringstream echo;
    echo << "command ablate-loss\ndata " << o.data << "\nepochs " << base.epochs
         << "\nseed " << base.seed << "\n";
    OutputGuard guard;
    const uint64_t hash = write_echo(guard, o.common.out, echo.str());

    const SynthDataset ds = import_dataset(o.data);
    const std::vector<std::pair<std::string, std::pair<bool, bool>>> variants = {
        {"none", {false, false}},
        {"icd", {true, false}},
        {"cfc", {false, true}},
        {"both", {true, true}}};
    const std::vector<double> lambdas = {0.1, 0.2, 0.3, 0.4};

    const int n_runs = static_cast<int>(variants.size() * lambdas.size());
    std::vector<EvalMetrics> results(n_runs);
    parallel_for(n_runs, o.common.parallel, [&](int i) {
        TrainConfig cfg = base;
        cfg.enable_icd = variants[i / 4].second.first;
        cfg.enable_cfc = variants[i / 4].second.second;
        cfg.lambda = lambdas[i % 4];
        const TrainState state = train(ds, cfg);
        results[i] = evaluate(state.clf, ds.test, ds.groups);
    });

    std::vector<std::vector<std::string>> rows;
    for (int i = 0; i < n_runs; ++i) {
        std::vector<std::string> row = {variants[i / 4].first,
                                        format_double(lambdas[i % 4])};
        const std::vector<std::string> m = metrics_row(results[i]);
        row.insert(row.end(), m.begin(), m.end());
        rows.push_back(row);
    }
    write_table(guard, o.common.out + "/ablate_loss." + o.common.format, hash,
                o.common.format,
                {"variant", "lambda", "all", "many", "medium", "few",
                 "mean_per_class"},
                rows);
    guard.dismiss();
    std::cout << "loss ablation (" << n_runs << " rows) written to " << o.common.out
              << "\n";
    return 0;
}

// ---------------------------------------------------------------- diagnose

struct DiagnoseOpts {
    CommonOpts common;
    std::string checkpoint;
    int grid = 100;
};

int run_diagnose(const DiagnoseOpts& o) {
    std::ostringstream echo;
    echo << "command diagnose\ncheckpoint "
         << (o.checkpoint.empty() ? "(none)" : o.checkpoint) << "\ngrid " << o.grid
         << "\n";
    OutputGuard guard;
    const uint64_t hash = write_echo(guard, o.common.out, echo.str());

    // overlap surface over (kappa_i, cosine) at kappa_j = 16 in d = 512:
    // orientations live in a fixed 2-plane so only the cosine matters. The
    // kappa axis is sampled half-open so the kappa_i = kappa_j = 16 slice
    // falls exactly on the grid; the cosine axis includes both endpoints.
    const int d = 512;
    Eigen::VectorXd e1 = Eigen::VectorXd::Unit(d, 0);
    Eigen::VectorXd e2 = Eigen::VectorXd::Unit(d, 1);
    std::vector<std::vector<std::string>> surf;
    for (int a = 0; a < o.grid; ++a) {
        const double kappa_i = 12.0 + 8.0 * a / o.grid;
        for (int b = 0; b < o.grid; ++b) {
            const double t = -1.0 + 2.0 * b / (o.grid - 1);
            const Eigen::VectorXd mu_j =
                t * e1 + std::sqrt(std::max(0.0, 1.0 - t * t)) * e2;
            const double v = overlap_coeff({kappa_i, e1}, {16.0, mu_j});
            surf.push_back({format_double(kappa_i), format_double(t),
                            format_double(v)});
        }
    }
    write_table(guard, o.common.out + "/overlap_surface." + o.common.format, hash,
                o.common.format, {"kappa_i", "cosine", "overlap"}, surf);

    if (!o.checkpoint.empty()) {
        const VmfClassifier clf = load_checkpoint(o.checkpoint);
        const OverlapMatrix om = overlap_matrix(clf);
        std::vector<std::vector<std::string>> rows;
        for (int i = 0; i < clf.num_classes(); ++i)
            rows.push_back({std::to_string(i), format_double(clf.classes[i].kappa),
                            format_double(om.row_avg[i])});
        write_table(guard, o.common.out + "/per_class." + o.common.format, hash,
                    o.common.format, {"class", "kappa", "row_avg_overlap"}, rows);
    }
    guard.dismiss();
    std::cout << "diagnostics written to " << o.common.out << "\n";
    return 0;
}

// ------------------------------------------------------------------ verify

int run_verify(uint64_t seed) {
    const std::vector<CheckResult> results = run_selfchecks(seed);
    for (const CheckResult& r : results)
        std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << " (" << r.detail
                  << ")\n";
    return all_passed(results) ? 0 : kExitVerification;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"von Mises-Fisher mixture classifier experiments"};
    app.require_subcommand(1);
    app.set_config("--config", "", "config file (flags take precedence)");
    app.allow_config_extras(CLI::config_extras_mode::error);

    GenDataOpts gen;
    CLI::App* gen_cmd = app.add_subcommand("gen-data", "generate a synthetic dataset");
    add_common(gen_cmd, gen.common);
    gen_cmd->add_option("--classes", gen.spec.num_classes, "number of classes");
    gen_cmd->add_option("--dim", gen.spec.dim, "feature dimension");
    gen_cmd->add_option("--max-per-class", gen.spec.max_per_class, "head class count");
    gen_cmd->add_option("--pareto-power", gen.spec.pareto_power, "count decay power");
    gen_cmd->add_option("--kappa", gen.spec.class_kappa, "generating compactness");
    gen_cmd->add_option("--test-per-class", gen.spec.test_per_class,
                        "balanced test samples per class");

    TrainOpts tr;
    CLI::App* tr_cmd = app.add_subcommand("train", "train a vMF classifier");
    add_common(tr_cmd, tr.common);
    tr_cmd->add_option("--data", tr.data, "dataset directory")->required();
    tr_cmd->add_option("--epochs", tr.cfg.epochs, "training epochs");
    tr_cmd->add_option("--batch-size", tr.cfg.batch_size, "mini-batch size");
    tr_cmd->add_option("--lr", tr.cfg.lr, "base learning rate");
    tr_cmd->add_option("--schedule", tr.schedule, "lr schedule")
        ->check(CLI::IsMember({"constant", "cosine"}));
    tr_cmd->add_option("--momentum", tr.cfg.momentum, "momentum in [0,1)");
    tr_cmd->add_option("--kappa-init", tr.cfg.kappa_init, "initial compactness");
    tr_cmd->add_option("--lambda", tr.cfg.lambda, "overlap loss weight");
    tr_cmd->add_flag("--freeze-kappa", tr.cfg.freeze_kappa, "keep kappa fixed");
    tr_cmd->add_flag("--no-icd", tr.no_icd, "disable the inter-class term");
    tr_cmd->add_flag("--no-cfc", tr.no_cfc, "disable the class-feature term");

    CalibrateOpts cal;
    CLI::App* cal_cmd =
        app.add_subcommand("calibrate", "post-training compactness calibration");
    add_common(cal_cmd, cal.common);
    cal_cmd->add_option("--checkpoint", cal.checkpoint, "trained checkpoint");
    cal_cmd->add_option("--weights", cal.weights,
                        "generic classifier weight CSV (overrides --checkpoint)");
    cal_cmd->add_option("--alpha", cal.cal.alpha, "interpolation exponent in [0,1]");

    SweepOpts sweep;
    CLI::App* sweep_cmd =
        app.add_subcommand("sweep-alpha", "accuracy across the alpha grid");
    add_common(sweep_cmd, sweep.common);
    sweep_cmd->add_option("--data", sweep.data, "dataset directory")->required();
    sweep_cmd->add_option("--checkpoint", sweep.checkpoint, "trained checkpoint")
        ->required();

    AblateOpts abl;
    CLI::App* abl_cmd =
        app.add_subcommand("ablate-loss", "loss-term x lambda ablation grid");
    add_common(abl_cmd, abl.common);
    abl_cmd->add_option("--data", abl.data, "dataset directory")->required();
    abl_cmd->add_option("--epochs", abl.cfg.epochs, "training epochs per cell");
    abl_cmd->add_option("--batch-size", abl.cfg.batch_size, "mini-batch size");
    abl_cmd->add_option("--lr", abl.cfg.lr, "base learning rate");
    abl_cmd->add_option("--schedule", abl.schedule, "lr schedule")
        ->check(CLI::IsMember({"constant", "cosine"}));

    DiagnoseOpts diag;
    CLI::App* diag_cmd =
        app.add_subcommand("diagnose", "per-class stats and the overlap surface");
    add_common(diag_cmd, diag.common);
    diag_cmd->add_option("--checkpoint", diag.checkpoint,
                         "trained checkpoint (optional)");

    CommonOpts ver;
    CLI::App* ver_cmd =
        app.add_subcommand("verify", "run the numerical self-check suite");
    add_common(ver_cmd, ver);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_exit_code() == 0 ? 0 : kExitConfig;
    }

    try {
        if (gen_cmd->parsed()) return run_gen_data(gen);
        if (tr_cmd->parsed()) return run_train(tr);
        if (cal_cmd->parsed()) return run_calibrate(cal);
        if (sweep_cmd->parsed()) return run_sweep_alpha(sweep);
        if (abl_cmd->parsed()) return run_ablate_loss(abl);
        if (diag_cmd->parsed()) return run_diagnose(diag);
        if (ver_cmd->parsed()) return run_verify(ver.seed);
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitConfig;
}
