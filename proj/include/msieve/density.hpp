#pragma once

#include "msieve/mixture.hpp"
#include "msieve/quadrature.hpp"

#include <functional>
#include <optional>
#include <utility>
#include <vector>

namespace msieve {

struct interval {
    double lo = 0.0;
    double hi = 0.0;
};

//! Evaluable density. The effective domain for a tail tolerance comes from the
//! support when given, else from the envelope f <= M psi, else from `domain`.
struct numeric_density {
    real_fn eval;
    real_fn log_eval;                          //!< optional, used by KL when present
    std::optional<double> envelope_M;          //!< f <= M psi
    std::optional<interval> support;           //!< f = 0 outside
    std::function<interval(double)> domain;    //!< optional custom truncation
    std::vector<double> breakpoints;           //!< kinks or jumps of f

    double operator()(double x) const { return eval(x); }
    double log_at(double x) const;
    //! Interval outside of which the mass is below tail_tol.
    interval effective_domain(double tail_tol) const;
};

//! Checks that the density integrates to one within 1e-6 and that a declared
//! envelope holds on a 10^4-point grid over [-10, 10]. Throws input_error.
void check_density(const numeric_density& f);

numeric_density mixture_density(const mixture& mix);

//! Integral of g over the effective domain of f (g must be dominated by f's tails).
double integrate_over(const numeric_density& f, const real_fn& g, double tol);

}  // namespace msieve
