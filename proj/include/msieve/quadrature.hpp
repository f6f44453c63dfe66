#pragma once

#include <functional>
#include <vector>

namespace msieve {

using real_fn = std::function<double(double)>;

struct quad_options {
    double abs_tol = 1e-10;
    double rel_tol = 0.0;
    int initial_panels = 32;
    int max_panels = 40000;
};

struct quad_result {
    double value = 0.0;
    double error = 0.0;
    long evaluations = 0;
};

//! Globally adaptive Gauss-Kronrod (7/15) over [a, b]. Breakpoints inside
//! (a, b) become panel edges. Throws quadrature_error when the panel cap is hit.
quad_result integrate_interval(const real_fn& f, double a, double b, const quad_options& opt = {},
                               const std::vector<double>& breakpoints = {});

//! Half-width T with M * erfc(T / width) < tail_tol, i.e. the mass of
//! M * psi(x / width) outside [-T, T] (times width) is below tail_tol.
double truncation_radius(double log_M, double width, double tail_tol);

//! Integral over the real line of f with f <= M psi. The domain is truncated
//! so the envelope tail mass is below tol / 10.
double integrate(const real_fn& f, double envelope_M, double tol);

//! Fixed n-point Gauss-Legendre rule on [-1, 1] (Golub-Welsch).
struct gauss_rule {
    std::vector<double> nodes;
    std::vector<double> weights;
};
const gauss_rule& gauss_legendre(int n);

}  // namespace msieve
