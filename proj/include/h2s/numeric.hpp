#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace h2s {

/// Median of a sample (average of the two middle order statistics for even n).
inline double median(std::vector<double> v) {
    if (v.empty()) throw std::invalid_argument("median: empty sample");
    const std::size_t n = v.size();
    const std::size_t mid = n / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    double hi = v[mid];
    if (n % 2 == 1) return hi;
    double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lo + hi);
}

inline double median(const Eigen::VectorXd& v) {
    return median(std::vector<double>(v.data(), v.data() + v.size()));
}

/// Unbiased sample variance (n-1 denominator); 0 for n < 2.
inline double sample_variance(const Eigen::VectorXd& v) {
    const Eigen::Index n = v.size();
    if (n < 2) return 0.0;
    const double mean = v.mean();
    return (v.array() - mean).square().sum() / static_cast<double>(n - 1);
}

inline double sample_stddev(const Eigen::VectorXd& v) { return std::sqrt(sample_variance(v)); }

/// Empirical quantile with linear interpolation between order statistics.
/// Expects q in [0,1]; data need not be sorted.
inline double quantile(std::vector<double> v, double q) {
    if (v.empty()) throw std::invalid_argument("quantile: empty sample");
    q = std::clamp(q, 0.0, 1.0);
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = static_cast<std::size_t>(std::ceil(pos));
    const double frac = pos - static_cast<double>(lo);
    return v[lo] + frac * (v[hi] - v[lo]);
}

/// Standard normal CDF.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// Standard normal quantile (Acklam's rational approximation plus one
/// Halley refinement step; accurate to ~1e-15 over (0,1)).
inline double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("normal_quantile: p outside (0,1)");

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
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }

    const double e = normal_cdf(x) - p;
    const double u = e * std::numbers::sqrt2 * std::sqrt(std::numbers::pi) * std::exp(0.5 * x * x);
    return x - u / (1.0 + 0.5 * x * u);
}

/// log of the volume of the unit-radius ball in n dimensions.
inline double log_unit_ball_volume(int n) {
    return 0.5 * n * std::log(std::numbers::pi) - std::lgamma(0.5 * n + 1.0);
}

/// Mean of the chi distribution with n degrees of freedom:
/// sqrt(2) * Gamma((n+1)/2) / Gamma(n/2), via log-gamma for stability.
inline double chi_mean(int n) {
    if (n < 1) throw std::invalid_argument("chi_mean: n must be >= 1");
    return std::exp(0.5 * std::numbers::ln2 + std::lgamma(0.5 * (n + 1)) - std::lgamma(0.5 * n));
}

/// Mean of the strict upper triangle of a square matrix.
inline double mean_upper_triangle(const Eigen::MatrixXd& m) {
    const Eigen::Index t = m.rows();
    if (t < 2) throw std::invalid_argument("mean_upper_triangle: need at least a 2x2 matrix");
    double sum = 0.0;
    for (Eigen::Index i = 0; i < t; ++i)
        for (Eigen::Index j = i + 1; j < t; ++j) sum += m(i, j);
    return sum / (0.5 * static_cast<double>(t) * static_cast<double>(t - 1));
}

}  // namespace h2s
