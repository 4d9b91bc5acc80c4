#include "doctest.h"
#include "oracles.hpp"
#include "vmfcal/losses.hpp"
#include "vmfcal/rng.hpp"
#include "vmfcal/specfn.hpp"

#include <cmath>
#include <functional>
#include <set>

using namespace vmfcal;

namespace {

VmfClassifier random_classifier(int c, int d, uint64_t seed, double kappa_lo = 2.0,
                                double kappa_hi = 12.0) {
    Rng rng(seed);
    VmfClassifier clf;
    clf.dim = d;
    Eigen::VectorXd prior(c);
    for (int i = 0; i < c; ++i) {
        clf.classes.push_back(
            {kappa_lo + (kappa_hi - kappa_lo) * rng.uniform(), rng.unit_vector(d)});
        prior[i] = rng.uniform() + 0.1;
    }
    clf.prior = prior / prior.sum();
    return clf;
}

FeatureBatch random_batch(int n, int c, int d, uint64_t seed) {
    Rng rng(seed);
    FeatureBatch b;
    b.features.resize(n, d);
    b.labels.resize(n);
    for (int l = 0; l < n; ++l) {
        b.features.row(l) = 2.5 * rng.gaussian_vector(d);
        b.labels[l] = static_cast<int>(rng.uniform() * c);
    }
    return b;
}

void check_rel(double got, double want, double tol = 1e-4) {
    const double scale = std::max(std::abs(want), 1e-7);
    CHECK(std::abs(got - want) / scale < tol);
}

// FD check of a ParamGrads bundle against a scalar function of the
// classifier; mu perturbations re-projected to the sphere.
void check_param_grads(const VmfClassifier& clf, const ParamGrads& grads,
                       const std::function<double(const VmfClassifier&)>& f,
                       Rng& rng, double tol = 1e-4) {
    for (int i = 0; i < clf.num_classes(); ++i) {
        const double hk = 1e-5 * clf.classes[i].kappa;
        const double fd_k = oracles::central_diff(
            [&](double k) {
                auto c2 = clf;
                c2.classes[i].kappa = k;
                return f(c2);
            },
            clf.classes[i].kappa, hk);
        check_rel(grads.dkappa[i], fd_k, tol);

        Eigen::VectorXd dir = rng.gaussian_vector(clf.dim);
        dir -= dir.dot(clf.classes[i].mu) * clf.classes[i].mu;
        dir.normalize();
        const double fd_mu = oracles::central_diff(
            [&](double eps) {
                auto c2 = clf;
                c2.classes[i].mu =
                    project_to_sphere(Eigen::VectorXd(clf.classes[i].mu + eps * dir));
                return f(c2);
            },
            0.0, 1e-5);
        Eigen::VectorXd tang =
            grads.dmu.row(i).transpose() -
            grads.dmu.row(i).dot(clf.classes[i].mu) * clf.classes[i].mu;
        check_rel(tang.dot(dir), fd_mu, tol);
    }
}

}  // namespace

TEST_CASE("icd_loss values") {
    Rng rng(3);
    SUBCASE("identical classes give 1") {
        VmfClassifier clf;
        clf.dim = 8;
        const VmfParams p{8.0, rng.unit_vector(8)};
        clf.classes = {p, p, p};
        clf.prior = Eigen::VectorXd::Constant(3, 1.0 / 3);
        CHECK(icd_loss(clf) == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("antipodal high-kappa pair is near zero") {
        VmfClassifier clf;
        clf.dim = 8;
        const Eigen::VectorXd mu = rng.unit_vector(8);
        clf.classes = {{64.0, mu}, {64.0, Eigen::VectorXd(-mu)}};
        clf.prior = Eigen::VectorXd::Constant(2, 0.5);
        CHECK(icd_loss(clf) < 1e-2);
    }
    SUBCASE("matches mean of overlap_matrix row averages") {
        const auto clf = random_classifier(10, 16, 5);
        const OverlapMatrix om = overlap_matrix(clf);
        CHECK(icd_loss(clf) == doctest::Approx(om.row_avg.mean()).epsilon(1e-12));
    }
    SUBCASE("single class is a domain error") {
        VmfClassifier clf;
        clf.dim = 4;
        clf.classes = {{4.0, rng.unit_vector(4)}};
        clf.prior = Eigen::VectorXd::Ones(1);
        CHECK_THROWS_AS(icd_loss(clf), std::domain_error);
    }
}

TEST_CASE("icd gradients match finite differences") {
    Rng rng(7);
    const auto clf = random_classifier(6, 16, 11);
    ParamGrads grads;
    icd_loss_with_grads(clf, grads);
    check_param_grads(clf, grads, [](const VmfClassifier& c) { return icd_loss(c); },
                      rng);
}

TEST_CASE("feature_direction") {
    FeatureBatch b;
    b.features.resize(4, 2);
    b.features << 1, 0, 0, 1, 2, 0, 4, 0;
    b.labels.resize(4);
    b.labels << 0, 0, 1, 1;
    SUBCASE("two unit samples average to the diagonal") {
        const Eigen::VectorXd m = feature_direction(b, 0);
        CHECK(m[0] == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-14));
        CHECK(m[1] == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-14));
    }
    SUBCASE("magnitude-weighted, not mean of projections") {
        const Eigen::VectorXd m = feature_direction(b, 1);
        CHECK(m[0] == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(m[1] == doctest::Approx(0.0).epsilon(1e-14));
    }
    SUBCASE("single sample is its own direction") {
        FeatureBatch one;
        one.features.resize(1, 2);
        one.features << 3, 4;
        one.labels.resize(1);
        one.labels << 0;
        const Eigen::VectorXd m = feature_direction(one, 0);
        CHECK(m[0] == doctest::Approx(0.6).epsilon(1e-14));
        CHECK(m[1] == doctest::Approx(0.8).epsilon(1e-14));
    }
    SUBCASE("absent class throws") {
        CHECK_THROWS_AS(feature_direction(b, 2), std::domain_error);
    }
    SUBCASE("cancelling samples are a degenerate direction") {
        FeatureBatch z;
        z.features.resize(2, 2);
        z.features << 1, 0, -1, 0;
        z.labels.resize(2);
        z.labels << 0, 0;
        CHECK_THROWS_AS(feature_direction(z, 0), NumericalError);
    }
}

TEST_CASE("cfc_loss values") {
    Rng rng(13);
    SUBCASE("aligned features give 0") {
        auto clf = random_classifier(3, 8, 17);
        FeatureBatch b;
        b.features.resize(3, 8);
        b.labels.resize(3);
        for (int i = 0; i < 3; ++i) {
            b.features.row(i) = 2.0 * clf.classes[i].mu;
            b.labels[i] = i;
        }
        CHECK(cfc_loss(clf, b) == doctest::Approx(0.0).epsilon(1e-12));
    }
    SUBCASE("orthogonal direction, kappa=16, d=512") {
        VmfClassifier clf;
        clf.dim = 512;
        clf.classes = {{16.0, rng.unit_vector(512)}, {16.0, rng.unit_vector(512)}};
        clf.prior = Eigen::VectorXd::Constant(2, 0.5);
        Eigen::VectorXd ortho = rng.gaussian_vector(512);
        ortho -= ortho.dot(clf.classes[0].mu) * clf.classes[0].mu;
        ortho.normalize();
        FeatureBatch b;
        b.features.resize(1, 512);
        b.features.row(0) = ortho;
        b.labels.resize(1);
        b.labels << 0;
        const double expected = 1.0 - 1.0 / (1.0 + 16.0 * bessel_ratio(512, 16.0));
        CHECK(cfc_loss(clf, b) == doctest::Approx(expected).epsilon(1e-12));
    }
    SUBCASE("averages over exactly the present classes") {
        auto clf = random_classifier(10, 8, 19);
        FeatureBatch b = random_batch(12, 3, 8, 23);  // labels only in [0, 3)
        double manual = 0.0;
        std::set<int> present(b.labels.begin(), b.labels.end());
        for (int i : present) {
            const Eigen::VectorXd m = feature_direction(b, i);
            const double k = clf.classes[i].kappa;
            const double kl = bessel_ratio(8, k) * k * (1.0 - clf.classes[i].mu.dot(m));
            manual += 1.0 - 1.0 / (1.0 + kl);
        }
        manual /= present.size();
        CHECK(cfc_loss(clf, b) == doctest::Approx(manual).epsilon(1e-12));
    }
}

TEST_CASE("cfc invariance to common feature rescaling") {
    auto clf = random_classifier(4, 8, 29);
    FeatureBatch b = random_batch(16, 4, 8, 31);
    const double base = cfc_loss(clf, b);
    SUBCASE("global batch scaling") {
        auto b2 = b;
        b2.features *= 17.0;
        CHECK(cfc_loss(clf, b2) == doctest::Approx(base).epsilon(1e-12));
    }
    SUBCASE("per-class common factor") {
        auto b2 = b;
        for (int l = 0; l < b2.size(); ++l)
            if (b2.labels[l] == 2) b2.features.row(l) *= 5.0;
        CHECK(cfc_loss(clf, b2) == doctest::Approx(base).epsilon(1e-12));
    }
    SUBCASE("scaling one sample is NOT invariant") {
        auto b2 = b;
        b2.features.row(0) *= 50.0;
        CHECK(cfc_loss(clf, b2) != doctest::Approx(base).epsilon(1e-12));
    }
}

TEST_CASE("logpost_grads") {
    Rng rng(37);
    SUBCASE("saturated posterior gives vanishing gradients") {
        VmfClassifier clf;
        clf.dim = 8;
        const Eigen::VectorXd mu = rng.unit_vector(8);
        clf.classes = {{200.0, mu}, {200.0, Eigen::VectorXd(-mu)}};
        clf.prior = Eigen::VectorXd::Constant(2, 0.5);
        const ParamGrads g = logpost_grads(clf, mu, 0);
        CHECK(std::abs(g.dkappa[0]) < 1e-10);
        CHECK(std::abs(g.dkappa[1]) < 1e-10);
        CHECK(g.dmu.row(0).norm() < 1e-10);
        CHECK(g.dmu.row(1).norm() < 1e-10);
    }
    SUBCASE("two-class mirror symmetry") {
        VmfClassifier clf;
        clf.dim = 4;
        Eigen::VectorXd mu1(4), mu2(4), x(4);
        mu1 << 1, 0, 0, 0;
        mu2 << 0, 1, 0, 0;
        x << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0), 0, 0;
        clf.classes = {{6.0, mu1}, {6.0, mu2}};
        clf.prior = Eigen::VectorXd::Constant(2, 0.5);
        const ParamGrads g = logpost_grads(clf, x, 0);
        CHECK(g.dkappa[0] == doctest::Approx(-g.dkappa[1]).epsilon(1e-12));
    }
    SUBCASE("matches finite differences of the log posterior") {
        Rng local(41);
        for (int trial = 0; trial < 20; ++trial) {
            auto clf = random_classifier(5, 16, 100 + trial);
            const Eigen::VectorXd x = local.unit_vector(16);
            const int label = trial % 5;
            const ParamGrads g = logpost_grads(clf, x, label);
            check_param_grads(clf, g,
                              [&](const VmfClassifier& c) {
                                  return log_posterior(c, x)[label];
                              },
                              local);
        }
    }
}

TEST_CASE("total_loss arithmetic") {
    auto clf = random_classifier(5, 8, 43);
    FeatureBatch b = random_batch(20, 5, 8, 47);
    SUBCASE("lambda 0 gives perf exactly") {
        LossConfig cfg;
        cfg.lambda = 0.0;
        const LossReport r = total_loss(clf, b, cfg);
        CHECK(r.total == r.perf);
        CHECK(r.perf == doctest::Approx(performance_loss(clf, b)).epsilon(1e-12));
    }
    SUBCASE("report invariant") {
        LossConfig cfg;
        cfg.lambda = 0.2;
        const LossReport r = total_loss(clf, b, cfg);
        CHECK(r.total == doctest::Approx(r.perf + 0.2 * (r.icd + r.cfc)).epsilon(1e-14));
        CHECK(r.icd > 0.0);
        CHECK(r.icd <= 1.0);
        CHECK(r.cfc >= 0.0);
        CHECK(r.cfc < 1.0);
        CHECK(r.perf >= 0.0);
    }
    SUBCASE("known term arithmetic: 1.0 + 0.2*(0.3+0.4) = 1.14") {
        CHECK(1.0 + 0.2 * (0.3 + 0.4) == doctest::Approx(1.14).epsilon(1e-15));
    }
    SUBCASE("term toggles") {
        LossConfig cfg;
        cfg.lambda = 0.2;
        cfg.enable_icd = false;
        const LossReport r = total_loss(clf, b, cfg);
        CHECK(r.total == doctest::Approx(r.perf + 0.2 * r.cfc).epsilon(1e-14));
    }
}

TEST_CASE("total_loss gradients match finite differences") {
    Rng rng(53);
    for (int d : {3, 16, 64}) {
        auto clf = random_classifier(4, d, 400 + d);
        FeatureBatch b = random_batch(12, 4, d, 500 + d);
        LossConfig cfg;
        cfg.lambda = 0.2;
        const LossReport r = total_loss(clf, b, cfg);
        check_param_grads(clf, r.grads,
                          [&](const VmfClassifier& c) {
                              return total_loss(c, b, cfg).total;
                          },
                          rng);
        // raw-feature gradients, random direction per sample
        for (int l = 0; l < b.size(); ++l) {
            const Eigen::VectorXd dir = project_to_sphere(rng.gaussian_vector(d));
            const double fd = oracles::central_diff(
                [&](double eps) {
                    auto b2 = b;
                    b2.features.row(l) += eps * dir.transpose();
                    return total_loss(clf, b2, cfg).total;
                },
                0.0, 1e-6);
            check_rel(r.dfeatures.row(l).dot(dir), fd, 2e-4);
        }
    }
}

TEST_CASE("descent sanity: one small step does not increase the term") {
    Rng rng(59);
    for (int trial = 0; trial < 100; ++trial) {
        auto clf = random_classifier(4, 8, 600 + trial);
        ParamGrads g;
        const double before = icd_loss_with_grads(clf, g);
        auto stepped = clf;
        const double lr = 1e-3;
        for (int i = 0; i < 4; ++i) {
            stepped.classes[i].kappa = std::max(1e-3, clf.classes[i].kappa - lr * g.dkappa[i]);
            Eigen::VectorXd gm = g.dmu.row(i);
            gm -= gm.dot(clf.classes[i].mu) * clf.classes[i].mu;
            stepped.classes[i].mu =
                project_to_sphere(Eigen::VectorXd(clf.classes[i].mu - lr * gm));
        }
        CHECK(icd_loss(stepped) <= before + 1e-12);
    }
}

TEST_CASE("descent sanity for cfc") {
    Rng rng(61);
    for (int trial = 0; trial < 100; ++trial) {
        auto clf = random_classifier(4, 8, 700 + trial);
        FeatureBatch b = random_batch(12, 4, 8, 800 + trial);
        // cfc-only gradient: lambda=1 cfc-enabled grads minus the perf part
        LossConfig cfg;
        cfg.lambda = 1.0;
        cfg.enable_icd = false;
        const LossReport rc = total_loss(clf, b, cfg);
        ParamGrads perf_only;
        {
            LossConfig pc;
            pc.lambda = 0.0;
            perf_only = total_loss(clf, b, pc).grads;
        }
        auto stepped = clf;
        const double lr = 1e-3;
        for (int i = 0; i < 4; ++i) {
            const double gk = rc.grads.dkappa[i] - perf_only.dkappa[i];
            Eigen::VectorXd gm = rc.grads.dmu.row(i).transpose() -
                                 perf_only.dmu.row(i).transpose();
            gm -= gm.dot(clf.classes[i].mu) * clf.classes[i].mu;
            stepped.classes[i].kappa = std::max(1e-3, clf.classes[i].kappa - lr * gk);
            stepped.classes[i].mu =
                project_to_sphere(Eigen::VectorXd(clf.classes[i].mu - lr * gm));
        }
        CHECK(cfc_loss(clf, b) >= cfc_loss(stepped, b) - 1e-12);
    }
}
