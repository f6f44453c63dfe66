#include "msieve/density.hpp"
#include "msieve/errors.hpp"
#include "msieve/kernel.hpp"
#include "msieve/util.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

namespace msieve {

double numeric_density::log_at(double x) const
{
    if (log_eval)
        return log_eval(x);
    const double v = eval(x);
    return v > 0 ? std::log(v) : -std::numeric_limits<double>::infinity();
}

interval numeric_density::effective_domain(double tail_tol) const
{
    if (support)
        return *support;
    if (domain)
        return domain(tail_tol);
    if (envelope_M) {
        const double T = truncation_radius(std::log(*envelope_M), 1.0, tail_tol);
        return {-T, T};
    }
    throw input_error("density has neither support, envelope nor domain");
}

void check_density(const numeric_density& f)
{
    if (!f.eval)
        throw input_error("density has no evaluator");
    const interval d = f.effective_domain(1e-9);
    quad_options opt;
    opt.abs_tol = 1e-9;
    const double mass = integrate_interval(f.eval, d.lo, d.hi, opt, f.breakpoints).value;
    if (std::abs(mass - 1.0) > 1e-6)
        throw input_error("density integrates to " + format_double(mass));
    if (f.envelope_M) {
        for (int i = 0; i < 10000; ++i) {
            const double x = -10.0 + 20.0 * i / 9999.0;
            const double v = f.eval(x);
            if (v > *f.envelope_M * psi(x) * (1 + 1e-12) + 1e-300)
                throw input_error("envelope violated at x = " + format_double(x));
        }
    }
}

numeric_density mixture_density(const mixture& mix)
{
    numeric_density d;
    auto shared = std::make_shared<mixture>(mix);
    d.eval = [shared](double x) { return shared->density(x); };
    d.log_eval = [shared](double x) { return shared->log_density(x); };
    d.domain = [shared](double tail_tol) {
        double smax = 0.0, lo = INFINITY, hi = -INFINITY;
        for (const auto& c : shared->components()) {
            if (c.weight < min_active_weight)
                continue;
            const double s = std::sqrt(c.variance);
            smax = std::max(smax, s);
            lo = std::min(lo, c.mean);
            hi = std::max(hi, c.mean);
        }
        // each component has tail mass erfc(t / sigma) beyond t
        const double t = truncation_radius(-std::log(smax), smax, tail_tol);
        return interval{lo - t, hi + t};
    };
    return d;
}

double integrate_over(const numeric_density& f, const real_fn& g, double tol)
{
    const interval d = f.effective_domain(tol / 10.0);
    quad_options opt;
    opt.abs_tol = tol * 0.9;
    return integrate_interval(g, d.lo, d.hi, opt, f.breakpoints).value;
}

}  // namespace msieve
