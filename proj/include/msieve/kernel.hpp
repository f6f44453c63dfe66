#pragma once

#include <cmath>
#include <numbers>

namespace msieve {

inline constexpr double inv_sqrt_pi = 0.56418958354775628695;
inline constexpr double log_sqrt_pi = 0.57236494292470008707;

//! psi(x) = pi^{-1/2} exp(-x^2). Note the variance is 1/2, not 1.
inline double psi(double x) { return inv_sqrt_pi * std::exp(-x * x); }

//! psi_sigma(x) = psi(x / sigma) / sigma, variance sigma^2 / 2.
inline double psi_sigma(double x, double sigma)
{
    const double z = x / sigma;
    return inv_sqrt_pi * std::exp(-z * z) / sigma;
}

inline double log_psi_sigma(double x, double sigma)
{
    const double z = x / sigma;
    return -z * z - log_sqrt_pi - std::log(sigma);
}

//! Standard deviation of a draw from psi_sigma.
inline double draw_sd(double sigma) { return sigma / std::numbers::sqrt2; }

}  // namespace msieve
