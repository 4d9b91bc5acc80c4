#pragma once

#include <Eigen/Dense>

#include "vmfcal/classifier.hpp"

namespace vmfcal {

enum class ClassifierKind { vmf, linear, tau_norm, causal };

ClassifierKind classifier_kind_from_string(const std::string& s);
std::string to_string(ClassifierKind kind);

struct CalibrationConfig {
    double alpha = 0.2;
    ClassifierKind source_kind = ClassifierKind::vmf;
    double tau = 0.7;    // tau_norm only
    double gamma = 1.0;  // causal only

    void validate() const;
};

// Weight-matrix classifier (one row per class) or a vMF classifier when
// kind == vmf.
struct GenericClassifierWeights {
    ClassifierKind kind = ClassifierKind::linear;
    Eigen::MatrixXd weights;  // C x d, matrix kinds
    VmfClassifier clf;        // kind == vmf
};

// Express generic weights as (kappa, mu) pairs:
//   linear:   kappa = ||w||
//   tau_norm: kappa = ||w||^(1-tau)
//   causal:   kappa = ||w|| / (||w|| + gamma)
// always with mu = w/||w||. kind == vmf passes through.
VmfClassifier to_vmf(const GenericClassifierWeights& gw, const CalibrationConfig& cfg,
                     const Eigen::VectorXd& prior);

// Max-min normalization mapping the overlap range onto the kappa range:
//   o_hat_i = (o_i - o_min)/(o_max - o_min) * (k_max - k_min) + k_min.
// Degenerate ranges fall back to the identity (o_hat = kappas) with a
// logged warning.
Eigen::VectorXd normalize_overlaps(const Eigen::VectorXd& overlaps,
                                   const Eigen::VectorXd& kappas);

// Post-training compactness calibration: kappa_hat_i = kappa_i^alpha *
// o_hat_i^(1-alpha); orientations unchanged; prior replaced by test_prior.
VmfClassifier calibrate(const VmfClassifier& clf, const CalibrationConfig& cfg,
                        const Eigen::VectorXd& test_prior);

// Calibrate in vMF space and rebuild the source representation: weight rows
// become the kind's inverse kappa-map norm times the orientation.
GenericClassifierWeights calibrate_generic(const GenericClassifierWeights& gw,
                                           const CalibrationConfig& cfg,
                                           const Eigen::VectorXd& test_prior);

// CSV weight-matrix I/O with a one-line header naming kind and
// hyper-parameters.
void save_weights_csv(const GenericClassifierWeights& gw, const CalibrationConfig& cfg,
                      const std::string& path);
GenericClassifierWeights load_weights_csv(const std::string& path,
                                          CalibrationConfig& cfg_out);

}  // namespace vmfcal
