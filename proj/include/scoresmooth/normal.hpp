#pragma once

#include <cmath>
#include <numbers>

namespace scoresmooth {

inline double normal_pdf(double u) {
    return std::exp(-0.5 * u * u) / std::sqrt(2.0 * std::numbers::pi);
}

/// Upper tail P[Z > u] of the standard normal.
inline double normal_upper_tail(double u) {
    return 0.5 * std::erfc(u / std::numbers::sqrt2);
}

inline double normal_cdf(double u) {
    return 0.5 * std::erfc(-u / std::numbers::sqrt2);
}

/// Mass of N(mean, sd^2) on [a, b]; a and b may be infinite.
inline double normal_interval_mass(double a, double b, double mean, double sd) {
    if (!(b > a)) return 0.0;
    const double ua = (a - mean) / sd;
    const double ub = (b - mean) / sd;
    // use whichever tail keeps the difference well conditioned
    if (ua > 0.0) return normal_upper_tail(ua) - normal_upper_tail(ub);
    if (ub < 0.0) return normal_cdf(ub) - normal_cdf(ua);
    return 1.0 - normal_cdf(ua) - normal_upper_tail(ub);
}

}  // namespace scoresmooth
