#include "vmfcal/trainer.hpp"

#include <cmath>
#include <filesystem>
#include <numeric>
#include <sstream>

#include "vmfcal/io.hpp"
#include "vmfcal/overlap.hpp"
#include "vmfcal/rng.hpp"

namespace vmfcal {

LrSchedule lr_schedule_from_string(const std::string& s) {
    if (s == "constant") return LrSchedule::constant;
    if (s == "cosine") return LrSchedule::cosine;
    throw std::domain_error("unknown lr schedule: " + s);
}

std::string to_string(LrSchedule s) {
    return s == LrSchedule::constant ? "constant" : "cosine";
}

void TrainConfig::validate() const {
    if (epochs < 1) throw std::domain_error("epochs must be >= 1");
    if (batch_size < 1) throw std::domain_error("batch_size must be >= 1");
    if (lr <= 0.0) throw std::domain_error("lr must be positive");
    if (momentum < 0.0 || momentum >= 1.0)
        throw std::domain_error("momentum must be in [0, 1)");
    if (kappa_init <= 0.0) throw std::domain_error("kappa_init must be positive");
    if (lambda < 0.0) throw std::domain_error("lambda must be non-negative");
    if (kappa_floor <= 0.0) throw std::domain_error("kappa_floor must be positive");
    if (kappa_grad_clip <= 0.0)
        throw std::domain_error("kappa_grad_clip must be positive");
    if (train_feature_map && (feature_map_in < 2 || feature_map_out < 2))
        throw std::domain_error("feature map dimensions must both be >= 2");
    if (checkpoint_every < 0) throw std::domain_error("checkpoint_every must be >= 0");
}

VmfClassifier init_classifier(int num_classes, int dim, double kappa_init,
                              const Eigen::VectorXd& prior, uint64_t seed) {
    if (num_classes < 2) throw std::domain_error("num_classes must be >= 2");
    if (dim < 2) throw std::domain_error("dim must be >= 2");
    if (kappa_init <= 0.0) throw std::domain_error("kappa_init must be positive");
    Rng rng(seed);
    VmfClassifier clf;
    clf.dim = dim;
    for (int i = 0; i < num_classes; ++i)
        clf.classes.push_back({kappa_init, rng.unit_vector(dim)});
    clf.prior = prior;
    clf.validate();
    return clf;
}

namespace {

Eigen::VectorXd train_frequencies(const FeatureBatch& b, int num_classes) {
    Eigen::VectorXd freq = Eigen::VectorXd::Zero(num_classes);
    for (int l = 0; l < b.size(); ++l) freq[b.labels[l]] += 1.0;
    return freq / freq.sum();
}

FeatureBatch apply_map(const TrainState& state, const FeatureBatch& batch) {
    if (state.feature_map.size() == 0) return batch;
    FeatureBatch mapped;
    mapped.features = batch.features * state.feature_map;
    mapped.labels = batch.labels;
    return mapped;
}

void check_finite(const LossReport& report, const VmfClassifier& clf) {
    std::ostringstream bad;
    for (int i = 0; i < report.grads.dkappa.size(); ++i) {
        if (!std::isfinite(report.grads.dkappa[i]) ||
            !report.grads.dmu.row(i).allFinite())
            bad << " class " << i << " (kappa=" << clf.classes[i].kappa << ")";
    }
    if (bad.tellp() > 0)
        throw NumericalError("non-finite gradient; offending parameters:" + bad.str());
}

}  // namespace

TrainState init_state(const SynthDataset& ds, const TrainConfig& cfg) {
    cfg.validate();
    const int c = static_cast<int>(ds.counts.size());
    const int d_raw = static_cast<int>(ds.train.features.cols());
    const int d = cfg.train_feature_map ? cfg.feature_map_out : d_raw;
    if (cfg.train_feature_map && cfg.feature_map_in != d_raw)
        throw std::domain_error("feature_map_in does not match the dataset width");

    TrainState state;
    state.clf = init_classifier(c, d, cfg.kappa_init, train_frequencies(ds.train, c),
                                substream_seed(cfg.seed, 0));
    if (cfg.train_feature_map) {
        if (d_raw == d) {
            state.feature_map = Eigen::MatrixXd::Identity(d_raw, d);
        } else {
            Rng rng(substream_seed(cfg.seed, 2));
            state.feature_map.resize(d_raw, d);
            for (int i = 0; i < d_raw; ++i)
                state.feature_map.row(i) =
                    rng.gaussian_vector(d) / std::sqrt(static_cast<double>(d_raw));
        }
        state.vel_map = Eigen::MatrixXd::Zero(d_raw, d);
    }
    state.vel_kappa = Eigen::VectorXd::Zero(c);
    state.vel_mu = Eigen::MatrixXd::Zero(c, d);
    return state;
}

void sgd_step(TrainState& state, const FeatureBatch& batch, const TrainConfig& cfg,
              double lr) {
    LossConfig loss_cfg;
    loss_cfg.lambda = cfg.lambda;
    loss_cfg.enable_icd = cfg.enable_icd;
    loss_cfg.enable_cfc = cfg.enable_cfc;

    const FeatureBatch mapped = apply_map(state, batch);
    const LossReport report = total_loss(state.clf, mapped, loss_cfg);
    check_finite(report, state.clf);

    const int c = state.clf.num_classes();
    for (int i = 0; i < c; ++i) {
        if (!cfg.freeze_kappa) {
            const double g = std::clamp(report.grads.dkappa[i], -cfg.kappa_grad_clip,
                                        cfg.kappa_grad_clip);
            state.vel_kappa[i] = cfg.momentum * state.vel_kappa[i] + g;
            if (state.vel_kappa[i] != 0.0)
                state.clf.classes[i].kappa = std::max(
                    cfg.kappa_floor, state.clf.classes[i].kappa - lr * state.vel_kappa[i]);
        }
        Eigen::VectorXd g_mu = report.grads.dmu.row(i);
        const Eigen::VectorXd& mu = state.clf.classes[i].mu;
        g_mu -= g_mu.dot(mu) * mu;  // tangent projection
        state.vel_mu.row(i) = cfg.momentum * state.vel_mu.row(i) + g_mu.transpose();
        if (state.vel_mu.row(i).squaredNorm() != 0.0)
            state.clf.classes[i].mu = project_to_sphere(
                Eigen::VectorXd(mu - lr * state.vel_mu.row(i).transpose()));
    }

    if (cfg.train_feature_map && state.feature_map.size() != 0) {
        if (!report.dfeatures.allFinite())
            throw NumericalError("non-finite feature-map gradient");
        const Eigen::MatrixXd g_map = batch.features.transpose() * report.dfeatures;
        state.vel_map = cfg.momentum * state.vel_map + g_map;
        if (state.vel_map.squaredNorm() != 0.0) state.feature_map -= lr * state.vel_map;
    }
    ++state.step;
}

double epoch_lr(const TrainConfig& cfg, int epoch) {
    if (cfg.lr_schedule == LrSchedule::constant) return cfg.lr;
    return cfg.lr * 0.5 * (1.0 + std::cos(M_PI * epoch / cfg.epochs));
}

TrainState train(const SynthDataset& ds, const TrainConfig& cfg) {
    TrainState state = init_state(ds, cfg);
    const int n = ds.train.size();
    ds.train.validate(state.clf.num_classes());
    ds.test.validate(state.clf.num_classes());

    Rng shuffle_rng(substream_seed(cfg.seed, 1));
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);

    const bool every_step_checks = log_level() >= LogLevel::debug;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = epoch_lr(cfg, epoch);
        shuffle_rng.shuffle(order);
        for (int start = 0; start < n; start += cfg.batch_size) {
            const int len = std::min(cfg.batch_size, n - start);
            FeatureBatch batch;
            batch.features.resize(len, ds.train.features.cols());
            batch.labels.resize(len);
            for (int s = 0; s < len; ++s) {
                batch.features.row(s) = ds.train.features.row(order[start + s]);
                batch.labels[s] = ds.train.labels[order[start + s]];
            }
            sgd_step(state, batch, cfg, lr);
            if (every_step_checks) state.clf.validate();
        }
        state.clf.validate();  // sphere + positivity constraints hold per epoch

        const FeatureBatch train_mapped = apply_map(state, ds.train);
        const FeatureBatch test_mapped = apply_map(state, ds.test);
        EpochRecord rec;
        rec.epoch = epoch;
        rec.perf = performance_loss(state.clf, train_mapped);
        rec.icd = cfg.enable_icd ? icd_loss(state.clf) : 0.0;
        rec.cfc = cfg.enable_cfc ? cfc_loss(state.clf, train_mapped) : 0.0;
        rec.total = rec.perf + cfg.lambda * (rec.icd + rec.cfc);
        rec.train_acc = evaluate(state.clf, train_mapped, ds.groups).overall;
        rec.test_acc = evaluate(state.clf, test_mapped, ds.groups).overall;
        rec.kappa_min = rec.kappa_max = state.clf.classes[0].kappa;
        for (const VmfParams& p : state.clf.classes) {
            rec.kappa_min = std::min(rec.kappa_min, p.kappa);
            rec.kappa_max = std::max(rec.kappa_max, p.kappa);
        }
        rec.mean_overlap = overlap_matrix(state.clf).row_avg.mean();
        state.metrics.push_back(rec);
        log_message(LogLevel::info, format_epoch_record(rec));

        if (cfg.checkpoint_every > 0 && (epoch + 1) % cfg.checkpoint_every == 0 &&
            !cfg.checkpoint_dir.empty()) {
            std::filesystem::create_directories(cfg.checkpoint_dir);
            save_checkpoint(state.clf, cfg.checkpoint_dir + "/epoch_" +
                                           std::to_string(epoch + 1) + ".txt");
        }
    }
    return state;
}

EvalMetrics evaluate(const VmfClassifier& clf, const FeatureBatch& batch,
                     const std::vector<Group>& groups) {
    const int c = clf.num_classes();
    batch.validate(c);
    if (static_cast<int>(groups.size()) != c)
        throw std::domain_error("group assignment must cover every class");

    std::vector<long> class_n(c, 0), class_correct(c, 0);
    for (int l = 0; l < batch.size(); ++l) {
        const Eigen::VectorXd x =
            project_to_sphere(Eigen::VectorXd(batch.features.row(l)));
        int argmax = 0;
        logits(clf, x).maxCoeff(&argmax);
        ++class_n[batch.labels[l]];
        if (argmax == batch.labels[l]) ++class_correct[batch.labels[l]];
    }

    EvalMetrics m;
    long n = 0, correct = 0;
    long gn[3] = {0, 0, 0}, gc[3] = {0, 0, 0};
    double per_class_sum = 0.0;
    int per_class_seen = 0;
    for (int i = 0; i < c; ++i) {
        n += class_n[i];
        correct += class_correct[i];
        const int g = static_cast<int>(groups[i]);
        gn[g] += class_n[i];
        gc[g] += class_correct[i];
        if (class_n[i] > 0) {
            per_class_sum += static_cast<double>(class_correct[i]) / class_n[i];
            ++per_class_seen;
        }
    }
    m.overall = n > 0 ? static_cast<double>(correct) / n : 0.0;
    m.mean_per_class = per_class_seen > 0 ? per_class_sum / per_class_seen : 0.0;
    m.has_many = gn[0] > 0;
    m.has_medium = gn[1] > 0;
    m.has_few = gn[2] > 0;
    if (m.has_many) m.many = static_cast<double>(gc[0]) / gn[0];
    if (m.has_medium) m.medium = static_cast<double>(gc[1]) / gn[1];
    if (m.has_few) m.few = static_cast<double>(gc[2]) / gn[2];
    return m;
}

std::string format_epoch_record(const EpochRecord& r) {
    std::ostringstream out;
    out << "epoch " << r.epoch << " perf " << format_double(r.perf) << " icd "
        << format_double(r.icd) << " cfc " << format_double(r.cfc) << " total "
        << format_double(r.total) << " train_acc " << format_double(r.train_acc)
        << " test_acc " << format_double(r.test_acc) << " kappa_min "
        << format_double(r.kappa_min) << " kappa_max " << format_double(r.kappa_max)
        << " mean_overlap " << format_double(r.mean_overlap);
    return out.str();
}

}  // namespace vmfcal
