#include "vmfcal/specfn.hpp"

#include <cmath>
#include <limits>

namespace vmfcal {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

void check_kappa(double kappa) {
    if (!std::isfinite(kappa) || kappa <= 0.0)
        throw std::domain_error("kappa must be positive and finite");
}

void check_dim(int dim) {
    if (dim < 2) throw std::domain_error("dimension must be >= 2");
}

// I_{nu+1}(x)/I_nu(x) by the Gautschi/Perron continued fraction
//   r = 1/(b1 + 1/(b2 + ...)),  b_k = 2*(nu+k)/x,
// evaluated with the modified Lentz algorithm. Works for any order and
// argument without forming I_nu itself.
double ratio_cf(double nu, double x, const SpecFnConfig& cfg) {
    const double tiny = 1e-300;
    double f = tiny, c = f, d = 0.0;
    double delta = 0.0;
    for (int k = 1; k <= cfg.cf_max_iters; ++k) {
        const double b = 2.0 * (nu + k) / x;
        d = b + d;
        if (d == 0.0) d = tiny;
        c = b + 1.0 / c;
        if (c == 0.0) c = tiny;
        d = 1.0 / d;
        delta = c * d;
        f *= delta;
        if (std::abs(delta - 1.0) < cfg.cf_tolerance) return f;
    }
    throw NumericalError("Bessel ratio continued fraction did not converge",
                         std::abs(delta - 1.0));
}

// Truncated ascending series factor S_mu = sum_k (x^2/4)^k / (k! (mu+1)_k).
double series_factor(double mu, double x, const SpecFnConfig& cfg) {
    const double q = 0.25 * x * x;
    double term = 1.0, sum = 1.0;
    for (int k = 0; k < cfg.series_terms; ++k) {
        term *= q / ((k + 1.0) * (mu + k + 1.0));
        sum += term;
        if (term < sum * 1e-17) break;
    }
    return sum;
}

// log I_0(x): ascending series for small x, large-argument asymptotic
// expansion otherwise.
double log_bessel_i0(double x) {
    if (x < 25.0) {
        const double q = 0.25 * x * x;
        double term = 1.0, sum = 1.0;
        for (int k = 1; k <= 200; ++k) {
            term *= q / (static_cast<double>(k) * k);
            sum += term;
            if (term < sum * 1e-18) break;
        }
        return std::log(sum);
    }
    // I_0(x) ~ e^x/sqrt(2 pi x) * sum_k a_k / x^k with
    // a_k = ((2k-1)!!)^2 / (k! 8^k); asymptotic, truncate at the smallest term
    double sum = 1.0, term = 1.0;
    double prev = std::numeric_limits<double>::max();
    for (int k = 1; k <= 12; ++k) {
        const double odd = 2.0 * k - 1.0;
        term *= odd * odd / (8.0 * k * x);
        if (term >= prev) break;
        sum += term;
        prev = term;
    }
    return x - 0.5 * (kLog2Pi + std::log(x)) + std::log(sum);
}

// log I_{1/2}(x) = 0.5*log(2/(pi x)) + log(sinh x), with sinh in log form.
double log_bessel_i_half(double x) {
    const double log_sinh = x + std::log1p(-std::exp(-2.0 * x)) - std::log(2.0);
    return 0.5 * (std::log(2.0 / x) - std::log(M_PI)) + log_sinh;
}

}  // namespace

void SpecFnConfig::validate() const {
    if (series_terms < 16) throw std::domain_error("series_terms must be >= 16");
    if (!(cf_tolerance > 0.0 && cf_tolerance <= 1e-8))
        throw std::domain_error("cf_tolerance must be in (0, 1e-8]");
    if (cf_max_iters < 64) throw std::domain_error("cf_max_iters must be >= 64");
}

double bessel_ratio(int dim, double kappa, const SpecFnConfig& cfg) {
    cfg.validate();
    check_dim(dim);
    check_kappa(kappa);
    const double nu = 0.5 * dim - 1.0;  // denominator order
    if (kappa < nu * 1e-4) {
        // I_{nu+1}/I_nu = x/(2(nu+1)) * S_{nu+1}/S_nu; the continued fraction
        // loses nothing here but the series needs only a couple of terms.
        return kappa / (2.0 * (nu + 1.0)) *
               (series_factor(nu + 1.0, kappa, cfg) / series_factor(nu, kappa, cfg));
    }
    return ratio_cf(nu, kappa, cfg);
}

double bessel_ratio_deriv(int dim, double kappa, const SpecFnConfig& cfg) {
    const double a = bessel_ratio(dim, kappa, cfg);
    return 1.0 - a * a - (dim - 1.0) * a / kappa;
}

double log_bessel_i(double order, double x, const SpecFnConfig& cfg) {
    cfg.validate();
    if (order < 0.0) throw std::domain_error("order must be >= 0");
    check_kappa(x);
    const double frac = order - std::floor(order);
    if (frac != 0.0 && frac != 0.5)
        throw std::domain_error("order must be integer or half-integer");

    const double base = frac;  // chain terminates at I_0 or I_{1/2}
    const int steps = static_cast<int>(std::lround(order - base));
    double log_base = (base == 0.0) ? log_bessel_i0(x) : log_bessel_i_half(x);
    if (steps == 0) return log_base;

    // r_k = I_k/I_{k-1}: top ratio from the continued fraction, the rest by
    // the stable downward recurrence 1/r_k = 2k/x + r_{k+1}.
    double r = ratio_cf(order - 1.0, x, cfg);
    double log_sum = std::log(r);
    double k = order;
    for (int s = 1; s < steps; ++s) {
        k -= 1.0;
        r = 1.0 / (2.0 * k / x + r);
        log_sum += std::log(r);
    }
    return log_base + log_sum;
}

double log_norm_const(int dim, double kappa, const SpecFnConfig& cfg) {
    check_dim(dim);
    check_kappa(kappa);
    const double half_d = 0.5 * dim;
    const double value = (half_d - 1.0) * std::log(kappa) - half_d * kLog2Pi -
                         log_bessel_i(half_d - 1.0, kappa, cfg);
    if (!std::isfinite(value))
        throw NumericalError("log_norm_const overflowed", value);
    return value;
}

}  // namespace vmfcal
