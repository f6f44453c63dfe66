#include "msieve/em.hpp"
#include "msieve/errors.hpp"
#include "msieve/kernel.hpp"
#include "msieve/util.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace msieve {

init_strategy parse_init_strategy(const std::string& name)
{
    if (name == "quantile")
        return init_strategy::quantile;
    if (name == "random_points")
        return init_strategy::random_points;
    if (name == "plus_plus_style")
        return init_strategy::plus_plus_style;
    throw config_error("unknown init strategy '" + name + "'");
}

std::string to_string(init_strategy s)
{
    switch (s) {
    case init_strategy::quantile: return "quantile";
    case init_strategy::random_points: return "random_points";
    case init_strategy::plus_plus_style: return "plus_plus_style";
    }
    return "quantile";
}

void validate(const em_config& cfg)
{
    if (cfg.max_iterations < 1)
        throw config_error("max_iterations must be >= 1");
    if (!(cfg.rel_tolerance > 0))
        throw config_error("rel_tolerance must be positive");
    if (cfg.n_starts < 1)
        throw config_error("n_starts must be >= 1");
}

namespace {

double clamp_mean(double mu, const sieve_spec& spec)
{
    return std::clamp(mu, -spec.mu_bound, spec.mu_bound);
}

double clamp_var(double v, const sieve_spec& spec)
{
    return std::clamp(v, spec.lambda_low, spec.lambda_bar);
}

// sigma^2 whose draw variance equals the sample variance
double moment_variance(const std::vector<double>& x)
{
    const double n = static_cast<double>(x.size());
    double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : x)
        ss += (v - mean) * (v - mean);
    return 2.0 * ss / n;
}

double quantile_sorted(const std::vector<double>& sorted, double p)
{
    const double h = (sorted.size() - 1) * p;
    const std::size_t lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - lo) * (sorted[hi] - sorted[lo]);
}

}  // namespace

mixture initialize(const sample& s, int m, const sieve_spec& spec, init_strategy strategy,
                   std::uint64_t seed)
{
    check_sample(s);
    if (m < 1)
        throw input_error("initialize needs m >= 1");
    const std::size_t n = s.values.size();
    if (n < static_cast<std::size_t>(m))
        throw input_error("sample of size " + std::to_string(n) + " is smaller than m = " +
                          std::to_string(m));
    const double var = clamp_var(moment_variance(s.values), spec);
    std::vector<double> means;
    std::mt19937_64 gen(seed);
    switch (strategy) {
    case init_strategy::quantile: {
        std::vector<double> sorted = s.values;
        std::sort(sorted.begin(), sorted.end());
        for (int u = 1; u <= m; ++u)
            means.push_back(quantile_sorted(sorted, (2.0 * u - 1.0) / (2.0 * m)));
        break;
    }
    case init_strategy::random_points: {
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        for (int u = 0; u < m; ++u) {
            std::uniform_int_distribution<std::size_t> pick(u, n - 1);
            std::swap(idx[u], idx[pick(gen)]);
            means.push_back(s.values[idx[u]]);
        }
        break;
    }
    case init_strategy::plus_plus_style: {
        std::uniform_int_distribution<std::size_t> first(0, n - 1);
        means.push_back(s.values[first(gen)]);
        std::vector<double> d2(n, std::numeric_limits<double>::infinity());
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        while (static_cast<int>(means.size()) < m) {
            double total = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double d = s.values[i] - means.back();
                d2[i] = std::min(d2[i], d * d);
                total += d2[i];
            }
            std::size_t chosen = 0;
            if (total > 0.0) {
                double target = unit(gen) * total;
                double acc = 0.0;
                chosen = n - 1;
                for (std::size_t i = 0; i < n; ++i) {
                    acc += d2[i];
                    if (acc >= target && d2[i] > 0.0) {
                        chosen = i;
                        break;
                    }
                }
            } else {
                chosen = first(gen);
            }
            means.push_back(s.values[chosen]);
        }
        std::sort(means.begin(), means.end());
        break;
    }
    }
    std::vector<component> comps;
    for (double mu : means)
        comps.push_back({1.0 / m, clamp_mean(mu, spec), var});
    return mixture::normalized(std::move(comps));
}

namespace {

// One EM step on raw arrays. Returns the contrast of the incoming parameters.
struct step_buffers {
    std::vector<double> resp;  // n x m, row major
    std::vector<double> lse;
};

double e_step(const std::vector<double>& x, const std::vector<double>& w, const std::vector<double>& mu,
              const std::vector<double>& var, step_buffers& buf)
{
    const std::size_t n = x.size(), m = w.size();
    buf.resp.resize(n * m);
    buf.lse.resize(n);
    std::vector<double> coef(m), inv(m);
    for (std::size_t u = 0; u < m; ++u) {
        coef[u] = w[u] < min_active_weight ? -std::numeric_limits<double>::infinity()
                                           : std::log(w[u]) - 0.5 * std::log(var[u]) - log_sqrt_pi;
        inv[u] = 1.0 / var[u];
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double* r = &buf.resp[i * m];
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t u = 0; u < m; ++u) {
            const double d = x[i] - mu[u];
            r[u] = coef[u] - d * d * inv[u];
            best = std::max(best, r[u]);
        }
        if (!std::isfinite(best))
            throw numeric_error("density underflows to zero at sample index " + std::to_string(i),
                                static_cast<long>(i));
        double s = 0.0;
        for (std::size_t u = 0; u < m; ++u) {
            r[u] = std::exp(r[u] - best);
            s += r[u];
        }
        const double is = 1.0 / s;
        for (std::size_t u = 0; u < m; ++u)
            r[u] *= is;
        buf.lse[i] = best + std::log(s);
        acc += buf.lse[i];
    }
    return -acc / static_cast<double>(n);
}

constexpr double starved_mass = 1e-10;

}  // namespace

em_step em_iterate(const mixture& current, const sample& s, const sieve_spec& spec)
{
    check_sample(s);
    const auto& x = s.values;
    const std::size_t n = x.size(), m = current.size();
    std::vector<double> w(m), mu(m), var(m);
    for (std::size_t u = 0; u < m; ++u) {
        w[u] = current[u].weight;
        mu[u] = current[u].mean;
        var[u] = current[u].variance;
    }
    step_buffers buf;
    em_step out;
    out.contrast_before = e_step(x, w, mu, var, buf);

    std::vector<double> N(m, 0.0), S1(m, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t u = 0; u < m; ++u) {
            const double r = buf.resp[i * m + u];
            N[u] += r;
            S1[u] += r * x[i];
        }
    std::vector<double> nmu(m), nvar(m), nw(m);
    std::vector<std::size_t> starved;
    for (std::size_t u = 0; u < m; ++u) {
        if (N[u] <= starved_mass) {
            starved.push_back(u);
            continue;
        }
        nmu[u] = S1[u] / N[u];
        nw[u] = N[u] / static_cast<double>(n);
    }
    std::vector<double> S2(m, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t u = 0; u < m; ++u) {
            const double d = x[i] - nmu[u];
            S2[u] += buf.resp[i * m + u] * d * d;
        }
    for (std::size_t u = 0; u < m; ++u) {
        if (N[u] <= starved_mass)
            continue;
        // the draw variance is sigma^2 / 2
        nvar[u] = 2.0 * S2[u] / N[u];
        const double cm = clamp_mean(nmu[u], spec);
        const double cv = clamp_var(nvar[u], spec);
        if (cm != nmu[u] || cv != nvar[u])
            out.clamped = true;
        nmu[u] = cm;
        nvar[u] = cv;
    }
    if (!starved.empty()) {
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return buf.lse[a] < buf.lse[b]; });
        double pooled = 0.0;
        std::size_t alive = 0;
        for (std::size_t u = 0; u < m; ++u)
            if (N[u] > starved_mass) {
                pooled += nvar[u];
                ++alive;
            }
        const double v = clamp_var(alive ? pooled / alive : moment_variance(x), spec);
        for (std::size_t k = 0; k < starved.size(); ++k) {
            const std::size_t u = starved[k];
            nmu[u] = clamp_mean(x[order[std::min(k, n - 1)]], spec);
            nvar[u] = v;
            nw[u] = 1.0 / static_cast<double>(n);
        }
        out.reseeded = starved;
    }
    std::vector<component> comps(m);
    for (std::size_t u = 0; u < m; ++u)
        comps[u] = {nw[u], nmu[u], nvar[u]};
    out.next = mixture::normalized(std::move(comps));
    return out;
}

em_run run_em(const mixture& start, const sample& s, const sieve_spec& spec, const em_config& cfg,
              bool keep_trace)
{
    em_run run;
    mixture cur = start;
    double prev = std::numeric_limits<double>::quiet_NaN();
    double cur_contrast = prev;
    for (int it = 1; it <= cfg.max_iterations; ++it) {
        em_step step = em_iterate(cur, s, spec);
        cur_contrast = step.contrast_before;
        if (keep_trace)
            run.trace.push_back({cur_contrast, step.clamped, !step.reseeded.empty()});
        run.iterations = it;
        if (std::isfinite(prev) &&
            std::abs(prev - cur_contrast) <= cfg.rel_tolerance * std::max(1.0, std::abs(cur_contrast))) {
            run.converged = true;
            break;
        }
        if (!step.reseeded.empty())
            ++run.reseed_count;
        prev = cur_contrast;
        cur = std::move(step.next);
    }
    if (!run.converged)
        cur_contrast = empirical_contrast(cur, s);
    run.fitted = std::move(cur);
    run.final_contrast = cur_contrast;
    return run;
}

fitted_model fit_mle(const sample& s, const sieve_spec& spec, const em_config& cfg)
{
    validate(cfg);
    check_sample(s);
    if (s.values.size() < static_cast<std::size_t>(spec.m))
        throw input_error("sample smaller than the number of components");
    fitted_model best;
    best.final_contrast = std::numeric_limits<double>::infinity();
    bool any = false;
    std::string last_error;
    for (int st = 0; st < cfg.n_starts; ++st) {
        init_strategy strat = cfg.strategy;
        if (st > 0 && strat == init_strategy::quantile)
            strat = init_strategy::plus_plus_style;
        const std::uint64_t seed = derive_seed(cfg.seed, "em-start", {std::uint64_t(st)});
        try {
            mixture start = initialize(s, spec.m, spec, strat, seed);
            em_run run = run_em(start, s, spec, cfg);
            best.start_contrasts.push_back(run.final_contrast);
            if (!any || run.final_contrast < best.final_contrast) {
                any = true;
                best.fitted = run.fitted;
                best.final_contrast = run.final_contrast;
                best.iterations_used = run.iterations;
                best.converged = run.converged;
                best.start_index = st;
            }
        } catch (const numeric_error& e) {
            best.start_contrasts.push_back(std::numeric_limits<double>::quiet_NaN());
            last_error = e.what();
        }
    }
    if (!any)
        throw fit_error("all " + std::to_string(cfg.n_starts) + " EM starts failed: " + last_error);
    return best;
}

}  // namespace msieve
