#include "vmfcal/overlap.hpp"

#include <cmath>
#include <ostream>

#include "vmfcal/io.hpp"
#include "vmfcal/specfn.hpp"

namespace vmfcal {

namespace {

void check_same_dim(const VmfParams& pi, const VmfParams& pj) {
    if (pi.dim() != pj.dim())
        throw std::domain_error("vMF parameters have mismatched dimensions");
}

}  // namespace

double kl_vmf(const VmfParams& pi, const VmfParams& pj) {
    check_same_dim(pi, pj);
    const int d = pi.dim();
    const double cos_ij = pi.mu.dot(pj.mu);
    return log_norm_const(d, pi.kappa) - log_norm_const(d, pj.kappa) +
           bessel_ratio(d, pi.kappa) * (pi.kappa - pj.kappa * cos_ij);
}

double overlap_coeff(const VmfParams& pi, const VmfParams& pj) {
    return 1.0 / (1.0 + kl_vmf(pi, pj));
}

OverlapGrads overlap_grads(const VmfParams& pi, const VmfParams& pj) {
    const int d = pi.dim();
    const double o = overlap_coeff(pi, pj);
    const double o2 = o * o;
    const double cos_ij = pi.mu.dot(pj.mu);
    const double a_i = bessel_ratio(d, pi.kappa);
    const double a_j = bessel_ratio(d, pj.kappa);
    OverlapGrads g;
    g.dkappa_i = o2 * bessel_ratio_deriv(d, pi.kappa) * (pj.kappa * cos_ij - pi.kappa);
    g.dkappa_j = o2 * (a_i * cos_ij - a_j);
    g.dmu_i = o2 * pj.kappa * a_i * pj.mu;
    g.dmu_j = o2 * pj.kappa * a_i * pi.mu;
    return g;
}

OverlapMatrix overlap_matrix(const VmfClassifier& clf) {
    const int c = clf.num_classes();
    if (c < 2) throw std::domain_error("overlap matrix needs at least 2 classes");

    double kmin = clf.classes[0].kappa, kmax = kmin;
    for (const auto& cls : clf.classes) {
        kmin = std::min(kmin, cls.kappa);
        kmax = std::max(kmax, cls.kappa);
    }
    if (kmax / kmin > 100.0)
        log_message(LogLevel::warn,
                    "kappa spread exceeds two orders of magnitude (" +
                        format_double(kmin) + " .. " + format_double(kmax) +
                        "); overlap-driven optimization may behave poorly");

    OverlapMatrix om;
    om.values.resize(c, c);
    om.row_avg.resize(c);
    for (int i = 0; i < c; ++i) {
        double sum = 0.0;
        for (int j = 0; j < c; ++j) {
            if (i == j) {
                om.values(i, j) = 1.0;
                continue;
            }
            om.values(i, j) = overlap_coeff(clf.classes[i], clf.classes[j]);
            sum += om.values(i, j);
        }
        om.row_avg[i] = sum / (c - 1);
    }
    return om;
}

void write_overlap_csv(const OverlapMatrix& om, std::ostream& out) {
    const int c = static_cast<int>(om.row_avg.size());
    out << "i,j,overlap\n";
    for (int i = 0; i < c; ++i)
        for (int j = 0; j < c; ++j)
            out << i << ',' << j << ',' << format_double(om.values(i, j)) << "\n";
    out << "i,row_avg\n";
    for (int i = 0; i < c; ++i) out << i << ',' << format_double(om.row_avg[i]) << "\n";
}

}  // namespace vmfcal
