#pragma once

#include <Eigen/Dense>
#include <iosfwd>

#include "vmfcal/classifier.hpp"

namespace vmfcal {

// KL{p_i || p_j} = log C_d(k_i) - log C_d(k_j) + A_d(k_i) * (k_i - k_j <mu_i, mu_j>).
// Directed; asymmetric in its arguments.
double kl_vmf(const VmfParams& pi, const VmfParams& pj);

// o = 1 / (1 + KL), in (0, 1]; 1 iff the distributions coincide.
double overlap_coeff(const VmfParams& pi, const VmfParams& pj);

// Ambient-space partial derivatives of the overlap coefficient. Consumers
// stepping on the sphere must tangent-project the mu gradients first.
struct OverlapGrads {
    double dkappa_i = 0.0;
    double dkappa_j = 0.0;
    Eigen::VectorXd dmu_i;
    Eigen::VectorXd dmu_j;
};
OverlapGrads overlap_grads(const VmfParams& pi, const VmfParams& pj);

// Directed C x C overlap matrix; diagonal fixed at 1 and excluded from the
// row averages.
struct OverlapMatrix {
    Eigen::MatrixXd values;
    Eigen::VectorXd row_avg;
};
OverlapMatrix overlap_matrix(const VmfClassifier& clf);

// CSV rows (i, j, value) followed by (i, row_avg) rows.
void write_overlap_csv(const OverlapMatrix& om, std::ostream& out);

}  // namespace vmfcal
