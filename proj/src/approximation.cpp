#include "msieve/approximation.hpp"
#include "msieve/divergence.hpp"
#include "msieve/errors.hpp"
#include "msieve/kernel.hpp"
#include "msieve/moments.hpp"
#include "msieve/sieve.hpp"
#include "msieve/util.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <memory>

namespace msieve {

namespace {

double binomial(int n, int k)
{
    double r = 1.0;
    for (int i = 1; i <= k; ++i)
        r = r * (n - k + i) / i;
    return r;
}

constexpr double kernel_cut = 9.0;

}  // namespace

approx_budget make_budget(double beta, double sigma, double M)
{
    if (!(sigma > 0 && sigma < 1))
        throw config_error("sigma must lie in (0, 1)");
    if (!(M > 0))
        throw config_error("envelope M must be positive");
    approx_budget b;
    b.beta = beta;
    b.k = approx_order(beta);
    b.sigma = sigma;
    b.M = M;
    b.H1 = 4.0 * (beta + 1.0);
    b.epsilon = std::pow(sigma, 6.0 * beta + 5.0);
    if (!(b.epsilon > 0))
        throw config_error("sigma^{6 beta + 5} underflows");
    const double arg = std::log(4.0 * M * inv_sqrt_pi) + b.k * std::log(4.0 / std::sqrt(3.0)) +
                       std::log(sigma) - std::log(b.epsilon);
    b.mu_sigma = std::max(sigma, 2.0 * std::sqrt(std::max(0.0, arg)));
    return b;
}

double convolve(const numeric_density& f, double sigma, int order, double x, double tol)
{
    if (order < 0)
        throw input_error("convolution order must be >= 0");
    if (!(sigma > 0))
        throw input_error("sigma must be positive");
    if (!std::isfinite(x))
        throw input_error("non-finite evaluation point");
    if (order == 0)
        return f.eval(x);
    const double s = sigma * std::sqrt(double(order));
    const interval d = f.effective_domain(tol * 1e-3);
    const double lo = std::max(d.lo, x - kernel_cut * s), hi = std::min(d.hi, x + kernel_cut * s);
    if (!(lo < hi))
        return 0.0;
    std::vector<double> br = f.breakpoints;
    br.push_back(x);
    quad_options opt;
    opt.abs_tol = tol;
    opt.initial_panels = 8;
    return integrate_interval([&](double y) { return f.eval(y) * psi_sigma(x - y, s); }, lo, hi, opt, br).value;
}

double f_k_eval(const numeric_density& f, double sigma, int k, double x, double tol)
{
    if (k < 0)
        throw input_error("k must be >= 0");
    double v = 0.0;
    for (int i = 0; i <= k; ++i)
        v += binomial(k + 1, i + 1) * (i % 2 == 0 ? 1.0 : -1.0) * convolve(f, sigma, i, x, tol);
    return v;
}

h_k_density build_h_k(const numeric_density& f, const approx_budget& b)
{
    h_k_density out;
    out.k = b.k;
    if (b.k == 0) {
        out.h = f;
        return out;
    }
    const int k = b.k;
    const double sigma = b.sigma;
    auto base = std::make_shared<numeric_density>(f);
    auto g = [base, sigma, k](double x) { return std::max(f_k_eval(*base, sigma, k, x), 0.5 * base->eval(x)); };
    const double width = std::sqrt(1.0 + k * sigma * sigma);
    const double log_env = std::log(b.M) + (k + 1) * std::log(2.0);
    auto domain = [log_env, width](double tol) {
        const double T = truncation_radius(log_env, width, tol);
        return interval{-T, T};
    };
    const interval d = domain(1e-12);
    quad_options opt;
    opt.abs_tol = 1e-11;
    const double mass = integrate_interval(g, d.lo, d.hi, opt, f.breakpoints).value;
    if (!(mass > 0))
        throw construction_error("normalization of g_k is not positive");
    out.g_mass = mass;
    out.h.eval = [g, mass](double x) { return g(x) / mass; };
    out.h.domain = domain;
    out.h.breakpoints = f.breakpoints;
    return out;
}

double support_count_bound(double a, double sigma, double epsilon)
{
    return 54.0 * a / sigma * std::exp(2.0) * std::max(1.0, std::log(1.0 / (std::sqrt(M_PI) * epsilon)));
}

namespace {

struct cell_atoms {
    std::vector<double> points, weights;
};

cell_atoms discretize_cell(const mixing_measure& F, double c0, double c1, bool last, const discretize_options& opt)
{
    std::vector<double> y, w;
    if (F.density) {
        const auto& gl = gauss_legendre(opt.panel_points);
        const double pw = (c1 - c0) / opt.panels;
        for (int p = 0; p < opt.panels; ++p) {
            const double a = c0 + p * pw;
            for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
                const double yy = a + 0.5 * pw * (gl.nodes[i] + 1.0);
                const double v = F.density(yy) * 0.5 * pw * gl.weights[i];
                if (v > 0) {
                    y.push_back(yy);
                    w.push_back(v);
                }
            }
        }
    } else {
        for (std::size_t i = 0; i < F.atoms.size(); ++i) {
            const double p = F.atoms[i];
            if ((p >= c0 && p < c1) || (last && p == c1))
                if (F.atom_weights[i] > 0) {
                    y.push_back(p);
                    w.push_back(F.atom_weights[i]);
                }
        }
    }
    cell_atoms out;
    double mass = 0.0;
    for (double v : w)
        mass += v;
    if (!(mass > 0))
        return out;
    const int n_nodes = std::max(1, opt.n_max / 2);
    if (static_cast<int>(y.size()) <= n_nodes) {
        out.points = y;
        out.weights = w;
        return out;
    }
    const double width = c1 - c0;
    std::vector<double> t(y.size()), wn(w.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        t[i] = (y[i] - c0) / width;
        wn[i] = w[i] / mass;
    }
    const gauss_rule r = gauss_from_measure(t, wn, n_nodes);
    double s = 0.0;
    for (double v : r.weights)
        s += v;
    for (std::size_t i = 0; i < r.nodes.size(); ++i) {
        out.points.push_back(c0 + r.nodes[i] * width);
        out.weights.push_back(mass * r.weights[i] / s);
    }
    return out;
}

}  // namespace

discrete_mixing_measure discretize_mixing(const mixing_measure& F, double a, double sigma, double epsilon,
                                          const discretize_options& opt)
{
    if (!(a > 0) || !(sigma > 0) || !(sigma < a))
        throw config_error("discretize_mixing needs 0 < sigma < a");
    if (!(epsilon > 0 && epsilon < inv_sqrt_pi))
        throw config_error("epsilon must lie in (0, pi^{-1/2})");
    if (!F.density) {
        if (F.atoms.empty() || F.atoms.size() != F.atom_weights.size())
            throw input_error("mixing measure needs a density or matching atoms and weights");
        for (std::size_t i = 0; i < F.atoms.size(); ++i)
            if (!(std::abs(F.atoms[i]) <= a) || !(F.atom_weights[i] >= 0))
                throw input_error("atom outside [-a, a] or negative weight");
    }

    // reference convolution F * psi_sigma on the check grid
    const int G = opt.grid_points;
    std::vector<double> xs(G), truth(G);
    const double glo = -a - 8 * sigma, ghi = a + 8 * sigma;
    for (int i = 0; i < G; ++i)
        xs[i] = glo + (ghi - glo) * i / (G - 1);
    const double bound = 2.0 * epsilon / sigma;
    if (F.density) {
        quad_options q;
        q.abs_tol = 1e-14;
        q.initial_panels = 64;
        const double Z = integrate_interval(F.density, -a, a, q).value;
        if (!(Z > 0))
            throw input_error("mixing density has no mass on [-a, a]");
        quad_options qc;
        qc.abs_tol = std::min(1e-12, bound * 1e-3) * Z;
        qc.initial_panels = 4;
        for (int i = 0; i < G; ++i) {
            const double x = xs[i];
            const double lo = std::max(-a, x - kernel_cut * sigma), hi = std::min(a, x + kernel_cut * sigma);
            truth[i] = lo < hi ? integrate_interval([&](double y) { return F.density(y) * psi_sigma(x - y, sigma); },
                                                    lo, hi, qc, {x})
                                         .value /
                                     Z
                               : 0.0;
        }
    } else {
        double Z = 0.0;
        for (double w : F.atom_weights)
            Z += w;
        if (!(Z > 0))
            throw input_error("atoms carry no mass");
        for (int i = 0; i < G; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < F.atoms.size(); ++j)
                s += F.atom_weights[j] * psi_sigma(xs[i] - F.atoms[j], sigma);
            truth[i] = s / Z;
        }
    }

    double best = INFINITY;
    for (int level = 0; level <= opt.max_levels; ++level) {
        const double w = sigma / std::ldexp(1.0, level);
        const int cells = std::max(1, static_cast<int>(std::ceil(2 * a / w - 1e-9)));
        discrete_mixing_measure out;
        out.bound = bound;
        out.count_bound = support_count_bound(a, sigma, epsilon);
        out.levels = level;
        for (int c = 0; c < cells; ++c) {
            const double c0 = -a + c * w, c1 = c + 1 == cells ? a : std::min(a, -a + (c + 1) * w);
            const cell_atoms ca = discretize_cell(F, c0, c1, c + 1 == cells, opt);
            out.points.insert(out.points.end(), ca.points.begin(), ca.points.end());
            out.weights.insert(out.weights.end(), ca.weights.begin(), ca.weights.end());
        }
        double total = 0.0;
        for (double v : out.weights)
            total += v;
        if (!(total > 0))
            throw discretization_error("discretized measure has no mass", INFINITY);
        for (double& v : out.weights)
            v /= total;
        double sup = 0.0;
        for (int i = 0; i < G; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < out.points.size(); ++j) {
                const double z = xs[i] - out.points[j];
                if (std::abs(z) < kernel_cut * sigma)
                    s += out.weights[j] * psi_sigma(z, sigma);
            }
            sup = std::max(sup, std::abs(s - truth[i]));
        }
        out.sup_norm_achieved = sup;
        best = std::min(best, sup);
        if (sup <= bound)
            return out;
    }
    throw discretization_error("sup-norm bound " + format_double(bound) + " not reached; best " +
                                   format_double(best),
                               best);
}

nlohmann::json discretization_json(const discrete_mixing_measure& d)
{
    return {{"points", d.points},
            {"weights", d.weights},
            {"sup_norm_achieved", d.sup_norm_achieved},
            {"bound", d.bound},
            {"count_bound", d.count_bound},
            {"levels", d.levels}};
}

wp_sigma build_wp_sigma(const numeric_density& f, const approx_budget& b, const wp_options& opt)
{
    const h_k_density hk = build_h_k(f, b);
    const double mu = b.mu_sigma;
    quad_options q;
    q.abs_tol = 1e-14;
    q.initial_panels = 64;
    std::vector<double> br;
    for (double p : hk.h.breakpoints)
        if (p > -mu && p < mu)
            br.push_back(p);
    const double window_mass = integrate_interval(hk.h.eval, -mu, mu, q, br).value;
    if (!(window_mass > 0))
        throw construction_error("h_k has no mass on the mixing window");
    mixing_measure F;
    auto h = hk.h.eval;
    F.density = [h, mu](double y) { return std::abs(y) <= mu ? h(y) : 0.0; };
    const double eps = std::max(b.epsilon, opt.epsilon_floor);
    wp_sigma out;
    out.disc = discretize_mixing(F, mu, b.sigma, eps, opt.disc);
    out.window_mass = window_mass;
    out.g_mass = hk.g_mass;
    out.count_bound = 54.0 * mu / b.sigma * std::exp(2.0) *
                          std::max(1.0, std::log(1.0 / (std::sqrt(M_PI) * b.epsilon))) +
                      1.0;
    std::vector<component> comps;
    const double var = b.sigma * b.sigma;
    for (std::size_t i = 0; i < out.disc.points.size(); ++i)
        comps.push_back({window_mass * out.disc.weights[i], out.disc.points[i], var});
    comps.push_back({b.epsilon, 0.0, var});
    out.mix = mixture::normalized(std::move(comps));
    return out;
}

decay_curve kl_decay_curve(const numeric_density& f, double beta, double M, const std::vector<double>& sigma_grid,
                           const decay_options& opt)
{
    if (sigma_grid.empty())
        throw config_error("sigma grid is empty");
    for (std::size_t i = 1; i < sigma_grid.size(); ++i)
        if (!(sigma_grid[i] < sigma_grid[i - 1]))
            throw config_error("sigma grid must be decreasing");
    decay_curve c;
    c.rows.resize(sigma_grid.size());
    parallel_for(sigma_grid.size(), thread_budget(opt.threads), [&](std::size_t i) {
        decay_row r;
        r.sigma = sigma_grid[i];
        try {
            const wp_sigma w = build_wp_sigma(f, make_budget(beta, r.sigma, M), opt.wp);
            r.components = w.mix.size();
            r.kl = kl_div(f, mixture_density(w.mix), opt.kl_tol).value;
        } catch (const error& e) {
            r.ok = false;
            r.kl = std::nan("");
            r.error = std::string(e.kind()) + ": " + e.what();
        }
        c.rows[i] = r;
    });
    std::vector<double> lx, ly;
    for (const auto& r : c.rows)
        if (r.ok && r.kl > 0) {
            lx.push_back(std::log(r.sigma));
            ly.push_back(std::log(r.kl));
        }
    if (lx.size() >= 2)
        c.slope = fit_line(lx, ly).slope;
    return c;
}

std::string decay_csv(const decay_curve& c)
{
    std::string s = "sigma,kl,components\n";
    for (const auto& r : c.rows)
        s += format_double(r.sigma) + "," + format_double(r.kl) + "," + std::to_string(r.components) + "\n";
    return s;
}

double gaussian_moment_nu(int h, int t)
{
    if (h < 1 || t < 0)
        throw input_error("nu needs h >= 1 and t >= 0");
    if (t % 2 == 1)
        return 0.0;
    double df = 1.0;
    for (int i = t - 1; i > 1; i -= 2)
        df *= i;
    return df * std::pow(h / 2.0, t / 2.0);
}

double gaussian_moment_nu_quadrature(int h, int t)
{
    if (h < 1 || t < 0)
        throw input_error("nu needs h >= 1 and t >= 0");
    const double s = std::sqrt(double(h));
    const double T = s * (6.0 + std::sqrt(double(t)));
    quad_options q;
    q.abs_tol = 1e-13;
    q.rel_tol = 1e-13;
    return integrate_interval([&](double x) { return std::pow(x, t) * psi_sigma(x, s); }, -T, T, q, {0.0}).value;
}

double alternating_moment_sum(int u, int k, bool by_quadrature)
{
    double s = 0.0;
    for (int j = 1; j <= k + 1; ++j) {
        const double nu = by_quadrature ? gaussian_moment_nu_quadrature(j, 2 * u) : gaussian_moment_nu(j, 2 * u);
        s += (j % 2 == 0 ? 1.0 : -1.0) * binomial(k + 1, j) * nu;
    }
    return s;
}

double floor_sigma_bar(double alpha, bool kernel_reading)
{
    if (!(alpha > 0))
        throw config_error("alpha must be positive");
    const double z = boost::math::quantile(boost::math::normal(), 5.0 / 6.0);
    const double s = 2.0 * alpha / z;
    return kernel_reading ? std::sqrt(2.0) * s : s;
}

namespace {

std::vector<double> dom_grid(const domination_grid& g)
{
    std::vector<double> xs(g.points);
    for (int i = 0; i < g.points; ++i)
        xs[i] = -g.radius + 2 * g.radius * i / (g.points - 1);
    return xs;
}

void track(clause_result& c, double ratio, double x)
{
    if (!(ratio <= c.worst)) {
        c.worst = ratio;
        c.witness_x = x;
    }
}

}  // namespace

clause_result check_convolution_floor(const numeric_density& f, double xi, double M, double sigma,
                                      const domination_grid& g)
{
    clause_result c;
    c.name = "convolution_floor";
    const double coef = xi * std::sqrt(M_PI) / (3.0 * M);
    for (double x : dom_grid(g)) {
        const double fx = f.eval(x);
        if (fx <= 0)
            continue;
        track(c, coef * fx / convolve(f, sigma, 1, x), x);
    }
    c.pass = c.worst <= 1.0 + g.slack;
    c.detail = "max of xi sqrt(pi) f / (3 M K f)";
    return c;
}

std::vector<clause_result> check_iterate_envelopes(const numeric_density& f, double M, double sigma, int k,
                                                   double p, const domination_grid& g)
{
    std::vector<clause_result> out;
    const auto xs = dom_grid(g);
    for (int i = 1; i <= k; ++i) {
        clause_result c;
        c.name = "iterate_envelope_" + std::to_string(i);
        const double coef = M * std::pow(2.0 / std::sqrt(3.0), i);
        for (double x : xs)
            track(c, convolve(f, sigma, i, x) / (coef * psi(p * x)), x);
        c.pass = c.worst <= 1.0 + g.slack;
        c.detail = "max of K^i f / (M (2/sqrt 3)^i psi(p x))";
        out.push_back(c);
    }
    approx_budget b;
    b.k = k;
    b.sigma = sigma;
    b.M = M;
    const h_k_density hk = build_h_k(f, b);
    clause_result c;
    c.name = "h_k_envelope";
    const double coef = 2.0 * M * std::pow(4.0 / std::sqrt(3.0), k);
    for (double x : xs) {
        const double fk = f_k_eval(f, sigma, k, x);
        const double gk = std::max(fk, 0.5 * f.eval(x));
        const double v = std::max({fk, gk, 0.5 * gk / hk.g_mass});
        track(c, v / (coef * psi(p * x)), x);
    }
    c.pass = c.worst <= 1.0 + g.slack;
    c.detail = "max of max(f_k, g_k, h_k / 2) / (2 M (4/sqrt 3)^k psi(p x))";
    out.push_back(c);
    return out;
}

clause_result check_convolution_envelope(const numeric_density& f, double M, double q1, double q2, double sigma,
                                         const domination_grid& g)
{
    clause_result c;
    c.name = "convolution_envelope";
    const auto xs = dom_grid(g);
    double pre = 0.0;
    for (double x : xs)
        pre = std::max(pre, f.eval(x) / (M * psi(q1 * x)));
    const double coef = 2.0 / std::sqrt(3.0) * M;
    for (double x : xs)
        track(c, convolve(f, sigma, 1, x) / (coef * psi(q1 * q2 * x)), x);
    c.pass = c.worst <= 1.0 + g.slack && pre <= 1.0 + g.slack;
    c.detail = "max of K f / ((2/sqrt 3) M psi(q1 q2 x)); hypothesis ratio " + format_double(pre);
    return c;
}

clause_result check_iterate_bound(const numeric_density& f, double M, double sigma, int k, const domination_grid& g)
{
    clause_result c;
    c.name = "iterate_bound_" + std::to_string(k);
    const double bound = (std::ldexp(1.0, k + 1) - 1.0) * M * inv_sqrt_pi;
    for (double x : dom_grid(g))
        track(c, std::abs(f_k_eval(f, sigma, k, x)) / bound, x);
    c.pass = c.worst <= 1.0 + g.slack;
    c.detail = "max of |f_k| / ((2^{k+1} - 1) M / sqrt(pi))";
    return c;
}

}  // namespace msieve
