#include "vmfcal/losses.hpp"

#include <cmath>
#include <map>
#include <vector>

#include "vmfcal/specfn.hpp"

namespace vmfcal {

namespace {

// Per-class special-function values, computed once per evaluation.
struct ClassCache {
    Eigen::VectorXd log_c;     // log C_d(kappa_i)
    Eigen::VectorXd a;         // A_d(kappa_i)
    Eigen::VectorXd a_deriv;   // A'_d(kappa_i)
    Eigen::VectorXd kappa;     // kappa_i
    Eigen::MatrixXd mu;        // C x d
    Eigen::VectorXd log_prior;
};

ClassCache build_cache(const VmfClassifier& clf, bool need_deriv) {
    const int c = clf.num_classes();
    ClassCache cache;
    cache.log_c.resize(c);
    cache.a.resize(c);
    cache.a_deriv.resize(c);
    cache.kappa.resize(c);
    cache.mu.resize(c, clf.dim);
    cache.log_prior.resize(c);
    for (int i = 0; i < c; ++i) {
        const double k = clf.classes[i].kappa;
        cache.kappa[i] = k;
        cache.log_c[i] = log_norm_const(clf.dim, k);
        cache.a[i] = bessel_ratio(clf.dim, k);
        cache.a_deriv[i] = need_deriv ? bessel_ratio_deriv(clf.dim, k) : 0.0;
        cache.mu.row(i) = clf.classes[i].mu;
        cache.log_prior[i] = clf.prior[i] > 0.0
                                 ? std::log(clf.prior[i])
                                 : -std::numeric_limits<double>::infinity();
    }
    return cache;
}

// Posterior for one projected sample from cached class values.
Eigen::VectorXd cached_posterior(const ClassCache& cache, const Eigen::VectorXd& x) {
    Eigen::VectorXd z = cache.log_prior + cache.log_c +
                        (cache.kappa.array() * (cache.mu * x).array()).matrix();
    const double zmax = z.maxCoeff();
    if (!std::isfinite(zmax)) throw std::domain_error("no prior mass on the support");
    Eigen::VectorXd p = (z.array() - zmax).exp();
    return p / p.sum();
}

double icd_value_and_maybe_grads(const VmfClassifier& clf, ParamGrads* grads) {
    const int c = clf.num_classes();
    if (c < 2) throw std::domain_error("icd_loss needs at least 2 classes");
    const ClassCache cache = build_cache(clf, grads != nullptr);
    const double weight = 1.0 / (static_cast<double>(c) * (c - 1));
    if (grads != nullptr) grads->setZero(c, clf.dim);

    double sum = 0.0;
    for (int i = 0; i < c; ++i) {
        for (int j = 0; j < c; ++j) {
            if (i == j) continue;
            const double t = cache.mu.row(i).dot(cache.mu.row(j));
            const double kl = cache.log_c[i] - cache.log_c[j] +
                              cache.a[i] * (cache.kappa[i] - cache.kappa[j] * t);
            const double o = 1.0 / (1.0 + kl);
            sum += o;
            if (grads == nullptr) continue;
            const double o2w = o * o * weight;
            grads->dkappa[i] += o2w * cache.a_deriv[i] * (cache.kappa[j] * t - cache.kappa[i]);
            grads->dkappa[j] += o2w * (cache.a[i] * t - cache.a[j]);
            grads->dmu.row(i) += o2w * cache.kappa[j] * cache.a[i] * cache.mu.row(j);
            grads->dmu.row(j) += o2w * cache.kappa[j] * cache.a[i] * cache.mu.row(i);
        }
    }
    return sum * weight;
}

}  // namespace

double icd_loss(const VmfClassifier& clf) {
    return icd_value_and_maybe_grads(clf, nullptr);
}

double icd_loss_with_grads(const VmfClassifier& clf, ParamGrads& grads) {
    return icd_value_and_maybe_grads(clf, &grads);
}

Eigen::VectorXd feature_direction(const FeatureBatch& batch, int class_id,
                                  bool project_features) {
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(batch.features.cols());
    bool found = false;
    for (int l = 0; l < batch.size(); ++l) {
        if (batch.labels[l] != class_id) continue;
        found = true;
        if (project_features)
            sum += project_to_sphere(batch.features.row(l));
        else
            sum += batch.features.row(l).transpose();
    }
    if (!found) throw std::domain_error("class absent from batch");
    const double norm = sum.norm();
    if (norm == 0.0)
        throw NumericalError("degenerate feature direction: class resultant is zero");
    return sum / norm;
}

double cfc_loss(const VmfClassifier& clf, const FeatureBatch& batch,
                bool project_features) {
    batch.validate(clf.num_classes());
    std::map<int, bool> present;
    for (int l = 0; l < batch.size(); ++l) present[batch.labels[l]] = true;
    double sum = 0.0;
    for (const auto& [i, _] : present) {
        const Eigen::VectorXd m = feature_direction(batch, i, project_features);
        const double k = clf.classes[i].kappa;
        // shared kappa cancels the log C terms; KL reduces to A*k*(1 - cos)
        const double kl = bessel_ratio(clf.dim, k) * k * (1.0 - clf.classes[i].mu.dot(m));
        sum += 1.0 - 1.0 / (1.0 + kl);
    }
    return sum / static_cast<double>(present.size());
}

ParamGrads logpost_grads(const VmfClassifier& clf, const Eigen::VectorXd& x_tilde,
                         int label) {
    clf.validate();
    if (label < 0 || label >= clf.num_classes())
        throw std::domain_error("label out of range");
    const ClassCache cache = build_cache(clf, false);
    const Eigen::VectorXd x = project_to_sphere(x_tilde);
    const Eigen::VectorXd p = cached_posterior(cache, x);
    const Eigen::VectorXd cos = cache.mu * x;

    ParamGrads g;
    g.setZero(clf.num_classes(), clf.dim);
    for (int j = 0; j < clf.num_classes(); ++j) {
        if (j == label) {
            g.dkappa[j] = (1.0 - p[j]) * (cos[j] - cache.a[j]);
            g.dmu.row(j) = (1.0 - p[j]) * cache.kappa[j] * x;
        } else {
            g.dkappa[j] = -p[j] * (cos[j] - cache.a[j]);
            g.dmu.row(j) = -p[j] * cache.kappa[j] * x;
        }
    }
    return g;
}

LossReport total_loss(const VmfClassifier& clf, const FeatureBatch& batch,
                      const LossConfig& cfg) {
    cfg.validate();
    batch.validate(clf.num_classes());
    const int c = clf.num_classes();
    const int d = clf.dim;
    const int n = batch.size();
    const ClassCache cache = build_cache(clf, cfg.enable_icd || cfg.enable_cfc);

    LossReport report;
    report.grads.setZero(c, d);
    report.dfeatures = Eigen::MatrixXd::Zero(n, d);

    // performance term
    for (int l = 0; l < n; ++l) {
        const Eigen::VectorXd raw = batch.features.row(l);
        const double raw_norm = raw.norm();
        const Eigen::VectorXd x = raw / raw_norm;
        const Eigen::VectorXd p = cached_posterior(cache, x);
        const int y = batch.labels[l];
        report.perf -= std::log(std::max(p[y], 1e-300));

        const Eigen::VectorXd cos = cache.mu * x;
        for (int j = 0; j < c; ++j) {
            const double w = (j == y) ? (1.0 - p[j]) : -p[j];
            report.grads.dkappa[j] -= w * (cos[j] - cache.a[j]) / n;
            report.grads.dmu.row(j) -= (w * cache.kappa[j] / n) * x;
        }
        // d(-log p_y)/dx_tilde, then through the projection Jacobian
        Eigen::VectorXd gx = -cache.kappa[y] * cache.mu.row(y).transpose();
        for (int j = 0; j < c; ++j)
            gx += p[j] * cache.kappa[j] * cache.mu.row(j).transpose();
        gx = (gx - gx.dot(x) * x) / raw_norm;
        report.dfeatures.row(l) += gx / n;
    }
    report.perf /= n;

    // inter-class discrepancy term
    if (cfg.enable_icd) {
        ParamGrads icd_grads;
        report.icd = icd_loss_with_grads(clf, icd_grads);
        report.grads.dkappa += cfg.lambda * icd_grads.dkappa;
        report.grads.dmu += cfg.lambda * icd_grads.dmu;
    } else {
        report.icd = icd_loss(clf);
    }

    // class-feature consistency term
    std::map<int, std::vector<int>> by_class;
    for (int l = 0; l < n; ++l) by_class[batch.labels[l]].push_back(l);
    const double inv_present = 1.0 / static_cast<double>(by_class.size());
    for (const auto& [i, rows] : by_class) {
        Eigen::VectorXd s = Eigen::VectorXd::Zero(d);
        for (int l : rows) {
            if (cfg.project_features)
                s += project_to_sphere(batch.features.row(l));
            else
                s += batch.features.row(l).transpose();
        }
        const double s_norm = s.norm();
        if (s_norm == 0.0)
            throw NumericalError("degenerate feature direction: class resultant is zero");
        const Eigen::VectorXd m = s / s_norm;
        const double t = clf.classes[i].mu.dot(m);
        const double kl = cache.a[i] * cache.kappa[i] * (1.0 - t);
        const double o = 1.0 / (1.0 + kl);
        report.cfc += (1.0 - o) * inv_present;
        if (!cfg.enable_cfc) continue;

        const double dl_dkl = o * o * inv_present * cfg.lambda;
        // kappa appears on both sides of the reduced KL
        report.grads.dkappa[i] +=
            dl_dkl * (cache.a_deriv[i] * cache.kappa[i] + cache.a[i]) * (1.0 - t);
        report.grads.dmu.row(i) += dl_dkl * (-cache.a[i] * cache.kappa[i]) * m;
        // back through the normalization of the resultant
        Eigen::VectorXd gm = dl_dkl * (-cache.a[i] * cache.kappa[i]) *
                             clf.classes[i].mu;
        Eigen::VectorXd gs = (gm - gm.dot(m) * m) / s_norm;
        for (int l : rows) {
            if (cfg.project_features) {
                const Eigen::VectorXd raw = batch.features.row(l);
                const double rn = raw.norm();
                const Eigen::VectorXd xt = raw / rn;
                report.dfeatures.row(l) += (gs - gs.dot(xt) * xt) / rn;
            } else {
                report.dfeatures.row(l) += gs;
            }
        }
    }

    report.total = report.perf + cfg.lambda * ((cfg.enable_icd ? report.icd : 0.0) +
                                               (cfg.enable_cfc ? report.cfc : 0.0));
    return report;
}

}  // namespace vmfcal
