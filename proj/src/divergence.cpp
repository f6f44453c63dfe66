#include "msieve/divergence.hpp"
#include "msieve/errors.hpp"
#include "msieve/util.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace msieve {

namespace {

std::vector<double> merged_breaks(const numeric_density& f, const numeric_density& g)
{
    std::vector<double> b = f.breakpoints;
    b.insert(b.end(), g.breakpoints.begin(), g.breakpoints.end());
    if (f.support) {
        b.push_back(f.support->lo);
        b.push_back(f.support->hi);
    }
    if (g.support) {
        b.push_back(g.support->lo);
        b.push_back(g.support->hi);
    }
    return b;
}

double eval_in_support(const numeric_density& f, double x)
{
    if (f.support && (x < f.support->lo || x > f.support->hi))
        return 0.0;
    return f.eval(x);
}

}  // namespace

double hellinger_sq(const numeric_density& f, const numeric_density& g, double tol)
{
    const interval df = f.effective_domain(tol / 10.0);
    const interval dg = g.effective_domain(tol / 10.0);
    const double lo = std::min(df.lo, dg.lo), hi = std::max(df.hi, dg.hi);
    quad_options opt;
    opt.abs_tol = tol * 0.8;
    auto integrand = [&](double x) {
        const double a = std::sqrt(std::max(0.0, eval_in_support(f, x)));
        const double b = std::sqrt(std::max(0.0, eval_in_support(g, x)));
        return 0.5 * (a - b) * (a - b);
    };
    const double h = integrate_interval(integrand, lo, hi, opt, merged_breaks(f, g)).value;
    return std::clamp(h, 0.0, 1.0);
}

kl_result kl_div(const numeric_density& f, const numeric_density& g, double tol)
{
    // the log ratio grows in the tails, so truncate more tightly than the mass alone needs
    const interval d = f.effective_domain(tol * 1e-3);
    quad_options opt;
    opt.abs_tol = tol * 0.9;
    bool infinite = false;
    struct stop {};
    auto integrand = [&](double x) {
        const double fx = eval_in_support(f, x);
        if (!(fx >= 1e-300))
            return 0.0;
        double lg;
        if (g.support && (x < g.support->lo || x > g.support->hi))
            lg = -std::numeric_limits<double>::infinity();
        else
            lg = g.log_at(x);
        if (!std::isfinite(lg) || (!g.log_eval && g.eval(x) <= 1e-300)) {
            infinite = true;
            throw stop{};
        }
        const double lf = f.log_eval ? f.log_eval(x) : std::log(fx);
        return fx * (lf - lg);
    };
    kl_result r;
    try {
        r.value = integrate_interval(integrand, d.lo, d.hi, opt, merged_breaks(f, g)).value;
    } catch (const stop&) {
    }
    if (infinite) {
        r.infinite = true;
        r.value = std::numeric_limits<double>::infinity();
    }
    return r;
}

void fit_risk_slope(risk_report& r)
{
    std::vector<double> x, y;
    for (const auto& row : r.rows) {
        if (row.reps > 0 && row.mean_risk > 0) {
            x.push_back(std::log(double(row.n)));
            y.push_back(std::log(row.mean_risk));
        }
    }
    r.slope.reset();
    r.ci_low.reset();
    r.ci_high.reset();
    if (x.size() < 2) {
        r.note = "slope undefined: fewer than two sample sizes with positive risk";
        return;
    }
    line_fit lf = fit_line(x, y);
    if (!std::isfinite(lf.slope)) {
        r.note = "slope undefined: degenerate regression";
        return;
    }
    r.slope = lf.slope;
    if (x.size() >= 3) {
        const double q = t_quantile_975(double(x.size() - 2));
        r.ci_low = lf.slope - q * lf.slope_se;
        r.ci_high = lf.slope + q * lf.slope_se;
    } else {
        r.note = "confidence band undefined with two sample sizes";
    }
}

risk_report mc_hellinger_risk(const numeric_density& truth, const sampler_fn& sampler,
                              const procedure_fn& procedure, const std::vector<std::size_t>& n_grid,
                              int reps, std::uint64_t seed, const risk_options& opt)
{
    if (reps < 1)
        throw input_error("reps must be >= 1");
    if (n_grid.empty())
        throw input_error("n grid is empty");
    risk_report rep;
    const std::size_t cells = n_grid.size() * reps;
    std::vector<double> values(cells, std::numeric_limits<double>::quiet_NaN());
    parallel_for(cells, thread_budget(opt.threads), [&](std::size_t c) {
        const std::size_t gi = c / reps, r = c % reps;
        const std::size_t n = n_grid[gi];
        const std::uint64_t s = derive_seed(seed, "risk-sample", {std::uint64_t(n), std::uint64_t(r)});
        try {
            sample smp = sampler(n, s);
            smp.seed = s;
            numeric_density est = procedure(smp);
            values[c] = hellinger_sq(truth, est, opt.tol);
        } catch (const error&) {
            values[c] = std::numeric_limits<double>::quiet_NaN();
        }
    });
    for (std::size_t gi = 0; gi < n_grid.size(); ++gi) {
        risk_row row;
        row.n = n_grid[gi];
        std::vector<double> ok;
        std::vector<double> all;
        for (int r = 0; r < reps; ++r) {
            const double v = values[gi * reps + r];
            all.push_back(v);
            if (std::isfinite(v))
                ok.push_back(v);
        }
        rep.risks.push_back(all);
        row.reps = static_cast<int>(ok.size());
        row.failures = reps - row.reps;
        if (row.failures > opt.max_failure_rate * reps)
            throw risk_error("n = " + std::to_string(row.n) + ": " + std::to_string(row.failures) +
                             " of " + std::to_string(reps) + " replications failed");
        double sum = 0.0;
        for (double v : ok)
            sum += v;
        row.mean_risk = sum / ok.size();
        double ss = 0.0;
        for (double v : ok)
            ss += (v - row.mean_risk) * (v - row.mean_risk);
        row.stderr_risk = ok.size() > 1 ? std::sqrt(ss / (ok.size() - 1) / ok.size()) : 0.0;
        rep.rows.push_back(row);
    }
    fit_risk_slope(rep);
    return rep;
}

std::string risk_csv(const risk_report& r)
{
    std::string out = "n,reps,mean_risk,stderr\n";
    for (const auto& row : r.rows)
        out += std::to_string(row.n) + "," + std::to_string(row.reps) + "," +
               format_double(row.mean_risk) + "," + format_double(row.stderr_risk) + "\n";
    auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string("nan"); };
    out += "slope,ci_low,ci_high\n";
    out += opt(r.slope) + "," + opt(r.ci_low) + "," + opt(r.ci_high) + "\n";
    return out;
}

}  // namespace msieve
