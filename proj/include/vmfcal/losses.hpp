#pragma once

#include <Eigen/Dense>

#include "vmfcal/classifier.hpp"
#include "vmfcal/overlap.hpp"

namespace vmfcal {

struct LossConfig {
    double lambda = 0.2;
    bool enable_icd = true;
    bool enable_cfc = true;
    // Ablation switch: estimate class feature directions from sphere-projected
    // features instead of raw sums.
    bool project_features = false;

    void validate() const {
        if (lambda < 0.0) throw std::domain_error("lambda must be non-negative");
    }
};

// Gradients over the classifier parameters, ambient coordinates for mu.
struct ParamGrads {
    Eigen::VectorXd dkappa;  // C
    Eigen::MatrixXd dmu;     // C x d

    void setZero(int c, int d) {
        dkappa = Eigen::VectorXd::Zero(c);
        dmu = Eigen::MatrixXd::Zero(c, d);
    }
    ParamGrads& operator+=(const ParamGrads& other) {
        dkappa += other.dkappa;
        dmu += other.dmu;
        return *this;
    }
};

struct LossReport {
    double perf = 0.0;
    double icd = 0.0;
    double cfc = 0.0;
    double total = 0.0;
    ParamGrads grads;
    Eigen::MatrixXd dfeatures;  // N' x d, gradients w.r.t. raw features
};

// L_icd = (1/C) sum_i o_i, the mean of the directed row-average overlaps.
double icd_loss(const VmfClassifier& clf);
double icd_loss_with_grads(const VmfClassifier& clf, ParamGrads& grads);

// Class feature direction: normalized sum of RAW features with the given
// label (sum-then-normalize, magnitude-weighted).
Eigen::VectorXd feature_direction(const FeatureBatch& batch, int class_id,
                                  bool project_features = false);

// L_cfc = E_{i in C'} [1 - o(kappa_i, kappa_i, mu_i, mu_i^x)], averaged over
// the classes present in the batch; kappa is shared between feature and
// classifier sides.
double cfc_loss(const VmfClassifier& clf, const FeatureBatch& batch,
                bool project_features = false);

// Table of log-posterior derivatives for the true class `label`.
ParamGrads logpost_grads(const VmfClassifier& clf, const Eigen::VectorXd& x_tilde,
                         int label);

// Total objective perf + lambda * (icd + cfc) with analytic gradients over
// (K, M) and per-sample raw-feature gradients.
LossReport total_loss(const VmfClassifier& clf, const FeatureBatch& batch,
                      const LossConfig& cfg);

}  // namespace vmfcal
