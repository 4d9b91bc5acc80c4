#include "vmfcal/selfcheck.hpp"

#include <cmath>
#include <sstream>

#include "vmfcal/losses.hpp"
#include "vmfcal/overlap.hpp"
#include "vmfcal/rng.hpp"
#include "vmfcal/specfn.hpp"
#include "vmfcal/synth.hpp"

namespace vmfcal {

namespace {

template <typename F>
double central_diff(F f, double x, double h) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

std::string worst_str(double worst) {
    std::ostringstream out;
    out.precision(3);
    out << std::scientific << "worst " << worst;
    return out.str();
}

VmfParams random_params(Rng& rng, int d, double lo, double hi) {
    return {lo + (hi - lo) * rng.uniform(), rng.unit_vector(d)};
}

CheckResult check_bessel_ratio_deriv(uint64_t seed) {
    Rng rng(seed);
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const double d = 2.0 + 62.0 * rng.uniform();
        const double kappa = 0.5 + 30.0 * rng.uniform();
        const double fd = central_diff([&](double k) { return bessel_ratio(d, k); },
                                       kappa, 1e-5 * kappa);
        const double got = bessel_ratio_deriv(d, kappa);
        worst = std::max(worst, std::abs(got - fd) / std::max(std::abs(fd), 1e-8));
    }
    return {"bessel-ratio-derivative-fd", worst < 1e-5, worst_str(worst)};
}

CheckResult check_overlap_grads(uint64_t seed) {
    Rng rng(seed + 1);
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const int d = 16;
        const VmfParams pi = random_params(rng, d, 2.0, 12.0);
        const VmfParams pj = random_params(rng, d, 2.0, 12.0);
        const OverlapGrads g = overlap_grads(pi, pj);

        auto rel = [&](double got, double want) {
            worst = std::max(worst,
                             std::abs(got - want) / std::max(std::abs(want), 1e-8));
        };
        rel(g.dkappa_i,
            central_diff([&](double k) { return overlap_coeff({k, pi.mu}, pj); },
                         pi.kappa, 1e-5 * pi.kappa));
        rel(g.dkappa_j,
            central_diff([&](double k) { return overlap_coeff(pi, {k, pj.mu}); },
                         pj.kappa, 1e-5 * pj.kappa));

        Eigen::VectorXd dir = rng.gaussian_vector(d);
        dir -= dir.dot(pi.mu) * pi.mu;
        dir.normalize();
        const double fd = central_diff(
            [&](double eps) {
                const Eigen::VectorXd mu =
                    project_to_sphere(Eigen::VectorXd(pi.mu + eps * dir));
                return overlap_coeff({pi.kappa, mu}, pj);
            },
            0.0, 1e-5);
        const Eigen::VectorXd tang = g.dmu_i - g.dmu_i.dot(pi.mu) * pi.mu;
        rel(tang.dot(dir), fd);
    }
    return {"overlap-gradients-fd", worst < 1e-4, worst_str(worst)};
}

CheckResult check_total_loss_grads(uint64_t seed) {
    Rng rng(seed + 2);
    double worst = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
        const int c = 4, d = 8, n = 12;
        VmfClassifier clf;
        clf.dim = d;
        Eigen::VectorXd prior(c);
        for (int i = 0; i < c; ++i) {
            clf.classes.push_back(random_params(rng, d, 3.0, 10.0));
            prior[i] = 0.1 + rng.uniform();
        }
        clf.prior = prior / prior.sum();
        FeatureBatch batch;
        batch.features.resize(n, d);
        batch.labels.resize(n);
        for (int l = 0; l < n; ++l) {
            batch.features.row(l) = (0.5 + rng.uniform()) * rng.unit_vector(d).transpose();
            batch.labels[l] = l % c;
        }
        LossConfig cfg;
        const LossReport report = total_loss(clf, batch, cfg);

        for (int i = 0; i < c; ++i) {
            const double fd = central_diff(
                [&](double k) {
                    VmfClassifier pert = clf;
                    pert.classes[i].kappa = k;
                    return total_loss(pert, batch, cfg).total;
                },
                clf.classes[i].kappa, 1e-5 * clf.classes[i].kappa);
            worst = std::max(worst, std::abs(report.grads.dkappa[i] - fd) /
                                        std::max(std::abs(fd), 1e-7));

            Eigen::VectorXd dir = rng.gaussian_vector(d);
            dir -= dir.dot(clf.classes[i].mu) * clf.classes[i].mu;
            dir.normalize();
            const double fd_mu = central_diff(
                [&](double eps) {
                    VmfClassifier pert = clf;
                    pert.classes[i].mu = project_to_sphere(
                        Eigen::VectorXd(clf.classes[i].mu + eps * dir));
                    return total_loss(pert, batch, cfg).total;
                },
                0.0, 1e-6);
            const Eigen::VectorXd g = report.grads.dmu.row(i);
            const Eigen::VectorXd tang = g - g.dot(clf.classes[i].mu) * clf.classes[i].mu;
            worst = std::max(worst,
                             std::abs(tang.dot(dir) - fd_mu) / std::max(std::abs(fd_mu), 1e-7));
        }
    }
    return {"total-loss-gradients-fd", worst < 1e-3, worst_str(worst)};
}

CheckResult check_mc_kl(uint64_t seed) {
    Rng rng(seed + 3);
    double worst_sigma = 0.0;
    for (int trial = 0; trial < 3; ++trial) {
        const int d = 3 + 5 * trial;
        const VmfParams pi = random_params(rng, d, 2.0, 8.0);
        const VmfParams pj = random_params(rng, d, 2.0, 8.0);
        const int n = 200000;
        const Eigen::MatrixXd draws = sample_vmf(pi, n, seed + 100 + trial);
        double sum = 0.0, sum2 = 0.0;
        for (int s = 0; s < n; ++s) {
            const Eigen::VectorXd x = draws.row(s);
            const double v = log_pdf(pi, x) - log_pdf(pj, x);
            sum += v;
            sum2 += v * v;
        }
        const double mean = sum / n;
        const double se = std::sqrt(std::max(0.0, (sum2 / n - mean * mean) / (n - 1)));
        worst_sigma = std::max(worst_sigma, std::abs(kl_vmf(pi, pj) - mean) / se);
    }
    return {"kl-monte-carlo", worst_sigma < 4.0, worst_str(worst_sigma) + " sigma"};
}

CheckResult check_sampler_moments(uint64_t seed) {
    Rng rng(seed + 4);
    double worst = 0.0;
    for (double kappa : {1.0, 8.0, 64.0}) {
        const int d = 8, n = 100000;
        const VmfParams p{kappa, rng.unit_vector(d)};
        const Eigen::MatrixXd x = sample_vmf(p, n, seed + 200 + static_cast<int>(kappa));
        const Eigen::VectorXd mean = x.colwise().mean();
        const double a = bessel_ratio(static_cast<double>(d), kappa);
        worst = std::max(worst, (mean - a * p.mu).lpNorm<Eigen::Infinity>() *
                                    std::sqrt(static_cast<double>(n)));
    }
    // per-coordinate variance is bounded by 1/n; worst is in sigma units
    return {"sampler-moment", worst < 4.5, worst_str(worst) + " sigma"};
}

}  // namespace

std::vector<CheckResult> run_selfchecks(uint64_t seed) {
    return {check_bessel_ratio_deriv(seed), check_overlap_grads(seed),
            check_total_loss_grads(seed), check_mc_kl(seed),
            check_sampler_moments(seed)};
}

bool all_passed(const std::vector<CheckResult>& results) {
    for (const CheckResult& r : results)
        if (!r.passed) return false;
    return true;
}

}  // namespace vmfcal
