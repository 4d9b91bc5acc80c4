#pragma once

#include <stdexcept>
#include <string>

namespace vmfcal {

// Raised when an iteration fails to converge or an intermediate quantity
// overflows. Carries the residual where one is available.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what, double residual = 0.0)
        : std::runtime_error(what), residual_(residual) {}
    double residual() const { return residual_; }

private:
    double residual_;
};

// Numerical controls for the Bessel-ratio continued fraction and the
// small-argument power series.
struct SpecFnConfig {
    int series_terms = 64;
    double cf_tolerance = 1e-15;
    int cf_max_iters = 20000;

    void validate() const;
};

// A_d(kappa) = I_{d/2}(kappa) / I_{d/2-1}(kappa), strictly in (0,1),
// non-decreasing in kappa. Stable up to d = 1024 and beyond.
double bessel_ratio(int dim, double kappa, const SpecFnConfig& cfg = {});

// dA_d/dkappa = 1 - A^2 - (d-1)*A/kappa, always positive.
double bessel_ratio_deriv(int dim, double kappa, const SpecFnConfig& cfg = {});

// log I_nu(x) for nu >= 0 integer or half-integer, x > 0.
double log_bessel_i(double order, double x, const SpecFnConfig& cfg = {});

// log C_d(kappa) = (d/2-1)*log(kappa) - (d/2)*log(2*pi) - log I_{d/2-1}(kappa).
// The constant itself is never materialized anywhere in this library.
double log_norm_const(int dim, double kappa, const SpecFnConfig& cfg = {});

}  // namespace vmfcal
