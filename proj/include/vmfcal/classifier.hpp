#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <vector>

#include "vmfcal/specfn.hpp"

namespace vmfcal {

// One class's vMF component: compactness kappa and unit orientation mu.
struct VmfParams {
    double kappa = 1.0;
    Eigen::VectorXd mu;

    int dim() const { return static_cast<int>(mu.size()); }
    void validate() const;
};

// C-class vMF mixture classifier with a class prior.
struct VmfClassifier {
    int dim = 0;
    std::vector<VmfParams> classes;
    Eigen::VectorXd prior;

    int num_classes() const { return static_cast<int>(classes.size()); }
    void validate() const;
};

// Raw feature vectors with 0-based contiguous labels.
struct FeatureBatch {
    Eigen::MatrixXd features;  // N' x d
    Eigen::VectorXi labels;    // N'

    int size() const { return static_cast<int>(features.rows()); }
    void validate(int num_classes) const;
};

// x / ||x||_2; zero or non-finite input is a domain error.
Eigen::VectorXd project_to_sphere(const Eigen::VectorXd& x);

// log p(x_tilde | kappa, mu) = log C_d(kappa) + kappa * <x_tilde, mu>.
// Inputs off the sphere by more than 1e-6 are rejected; smaller drift is
// re-projected.
double log_pdf(const VmfParams& params, const Eigen::VectorXd& x_tilde);

// Per-class logits log prior_i + log C_d(kappa_i) + kappa_i * <x, mu_i>.
Eigen::VectorXd logits(const VmfClassifier& clf, const Eigen::VectorXd& x_tilde);

// Prior-weighted posterior over classes via log-sum-exp.
Eigen::VectorXd posterior(const VmfClassifier& clf, const Eigen::VectorXd& x_tilde);
Eigen::VectorXd log_posterior(const VmfClassifier& clf, const Eigen::VectorXd& x_tilde);

// Mean cross-entropy -log p_{y} over the batch. Features are raw; projection
// happens inside.
double performance_loss(const VmfClassifier& clf, const FeatureBatch& batch);

// Plain-text checkpoint, hex-float encoded so save/load round-trips
// bit-exactly.
void save_checkpoint(const VmfClassifier& clf, std::ostream& out);
void save_checkpoint(const VmfClassifier& clf, const std::string& path);
VmfClassifier load_checkpoint(std::istream& in);
VmfClassifier load_checkpoint(const std::string& path);

}  // namespace vmfcal
