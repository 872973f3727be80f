#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace aptest {

inline double normal_pdf(double x) {
    constexpr double inv_sqrt_2pi = 0.3989422804014326779;
    return inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

inline double normal_cdf(double x) {
    return 0.5 * std::erfc(-x * std::numbers::sqrt2 / 2.0);
}

/// Inverse standard-normal CDF. Acklam's rational approximation followed by
/// one Halley refinement step, accurate to full double precision on (0,1).
inline double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw std::domain_error("normal_quantile: p must lie in (0,1)");
    }
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                   -2.759285104469687e+02, 1.383577518672690e+02,
                                   -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                   -1.556989798598866e+02, 6.680131188771972e+01,
                                   -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                   -2.400758277161838e+00, -2.549732539343734e+00,
                                   4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                   2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double p_low = 0.02425;

    double x;
    if (p < p_low) {
        double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        double q = p - 0.5;
        double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    // Halley step against the exact CDF.
    double e = normal_cdf(x) - p;
    double u = e / normal_pdf(x);
    x = x - u / (1.0 + 0.5 * x * u);
    return x;
}

namespace detail {

template <class F>
double adaptive_simpson_impl(F& f, double lo, double hi, double f_lo, double f_mid, double f_hi,
                             double whole, double tol, int depth) {
    double mid = 0.5 * (lo + hi);
    double lq = 0.5 * (lo + mid);
    double rq = 0.5 * (mid + hi);
    double f_lq = f(lq);
    double f_rq = f(rq);
    double left = (mid - lo) / 6.0 * (f_lo + 4.0 * f_lq + f_mid);
    double right = (hi - mid) / 6.0 * (f_mid + 4.0 * f_rq + f_hi);
    double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
        return left + right + delta / 15.0;
    }
    return adaptive_simpson_impl(f, lo, mid, f_lo, f_lq, f_mid, left, 0.5 * tol, depth - 1) +
           adaptive_simpson_impl(f, mid, hi, f_mid, f_rq, f_hi, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

/// Adaptive Simpson quadrature with absolute tolerance `tol` over [lo, hi].
template <class F>
double integrate_adaptive(F&& f, double lo, double hi, double tol = 1e-9, int max_depth = 48) {
    if (!(hi > lo)) {
        return 0.0;
    }
    double mid = 0.5 * (lo + hi);
    double f_lo = f(lo);
    double f_mid = f(mid);
    double f_hi = f(hi);
    double whole = (hi - lo) / 6.0 * (f_lo + 4.0 * f_mid + f_hi);
    return detail::adaptive_simpson_impl(f, lo, hi, f_lo, f_mid, f_hi, whole, tol, max_depth);
}

}  // namespace aptest
