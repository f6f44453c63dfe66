#include "msieve/holder.hpp"
#include "msieve/errors.hpp"
#include "msieve/kernel.hpp"
#include "msieve/util.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <unordered_set>

namespace msieve {

int holder_order(double beta)
{
    if (!(beta > 0))
        throw config_error("beta must be positive");
    return static_cast<int>(std::ceil(beta)) - 1;
}

namespace {

constexpr double exp_cutoff = 700.0;

// exp(-1/t) for t > 0, zero otherwise
jet flat_exp(const jet& t)
{
    if (!(t[0] > 0) || 1.0 / t[0] > exp_cutoff)
        return jet(t.order(), 0.0);
    return exp(reciprocal(t) * -1.0);
}

double flat_exp(double t) { return (t > 0 && 1.0 / t <= exp_cutoff) ? std::exp(-1.0 / t) : 0.0; }

jet smoothstep(const jet& t)
{
    if (t[0] <= 0)
        return jet(t.order(), 0.0);
    if (t[0] >= 1)
        return jet(t.order(), 1.0);
    jet a = flat_exp(t);
    jet b = flat_exp(1.0 - t);
    return a / (a + b);
}

double smoothstep(double t)
{
    if (t <= 0)
        return 0.0;
    if (t >= 1)
        return 1.0;
    const double a = flat_exp(t), b = flat_exp(1.0 - t);
    return a / (a + b);
}

double factorial(int k)
{
    double f = 1.0;
    for (int i = 2; i <= k; ++i)
        f *= i;
    return f;
}

}  // namespace

// ---------------------------------------------------------------- bump

double bump_spec::phi(double u) const
{
    if (u <= 0.25 || u >= 0.75)
        return 0.0;
    const double q = (u - 0.25) * (0.75 - u);
    if (1.0 / q > exp_cutoff)
        return 0.0;
    return c * std::exp(-1.0 / q) * (1.0 - 2.0 * u) / (q * q);
}

jet bump_spec::phi_jet(double u, int order) const
{
    jet out(order, 0.0);
    if (u <= 0.25 || u >= 0.75)
        return out;
    jet x = jet::variable(order + 1, u);
    jet q = (x + (-0.25)) * (0.75 - x);
    jet b = flat_exp(q);
    for (int k = 0; k <= order; ++k)
        out[k] = c * (k + 1) * b[k + 1];
    return out;
}

bump_spec build_bump(double beta_high)
{
    if (!(beta_high > 0))
        throw config_error("beta_high must be positive");
    bump_spec b;
    b.beta_high = beta_high;
    b.max_order = holder_order(beta_high) + 1;
    b.c = 1.0;
    quad_options opt;
    opt.abs_tol = 1e-22;
    opt.rel_tol = 1e-14;
    opt.initial_panels = 64;
    const double l2 = integrate_interval([&](double u) { double v = b.phi(u); return v * v; }, 0.25, 0.75,
                                         opt)
                          .value;
    b.c = 1.0 / std::sqrt(l2);

    const int K = b.max_order;
    b.sup_by_order.assign(K + 1, 0.0);
    std::vector<double> arg(K + 1, 0.5);
    const int N = 20001;
    const double h = 0.5 / (N - 1);
    for (int i = 1; i < N - 1; ++i) {
        const double u = 0.25 + i * h;
        jet j = b.phi_jet(u, K);
        for (int k = 0; k <= K; ++k) {
            const double v = std::abs(j.derivative(k));
            if (v > b.sup_by_order[k]) {
                b.sup_by_order[k] = v;
                arg[k] = u;
            }
        }
    }
    // golden-section refinement around each grid maximum
    for (int k = 0; k <= K; ++k) {
        double lo = std::max(0.25, arg[k] - h), hi = std::min(0.75, arg[k] + h);
        auto g = [&](double u) { return std::abs(b.phi_jet(u, K).derivative(k)); };
        const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
        double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
        double g1 = g(x1), g2 = g(x2);
        for (int it = 0; it < 80; ++it) {
            if (g1 > g2) {
                hi = x2;
                x2 = x1;
                g2 = g1;
                x1 = hi - gr * (hi - lo);
                g1 = g(x1);
            } else {
                lo = x1;
                x1 = x2;
                g1 = g2;
                x2 = lo + gr * (hi - lo);
                g2 = g(x2);
            }
        }
        b.sup_by_order[k] = std::max({b.sup_by_order[k], g1, g2});
    }
    b.A_phi = *std::max_element(b.sup_by_order.begin(), b.sup_by_order.end());
    return b;
}

// ---------------------------------------------------------------- omega

namespace {

double log_omega_abs(const base_density& w, double a)
{
    const double al = w.alpha;
    double v = std::log(2.0 * w.xi);
    if (a <= 0.75 * al)
        return v;
    v -= std::log(2.0) * smoothstep((a - 0.75 * al) / (0.25 * al));
    const double u = a - al;
    if (u > 0)
        v -= w.curvature * u * u * smoothstep(u / (0.25 * al));
    return v;
}

jet log_omega_abs_jet(const base_density& w, double a, int order)
{
    const double al = w.alpha;
    jet x = jet::variable(order, a);
    jet v(order, std::log(2.0 * w.xi));
    if (a <= 0.75 * al)
        return v;
    v -= smoothstep((x + (-0.75 * al)) * (1.0 / (0.25 * al))) * std::log(2.0);
    if (a > al) {
        jet u = x + (-al);
        v -= (u * u) * smoothstep(u * (1.0 / (0.25 * al))) * w.curvature;
    }
    return v;
}

double omega_mass(const base_density& w)
{
    // plateau exactly, the rest by quadrature on the half line
    const double al = w.alpha;
    const double plateau = 2.0 * (2.0 * w.xi) * 0.75 * al;
    const double tail_end = 1.25 * al + std::sqrt((std::log(w.xi) + 60.0) / w.curvature) + 1.0;
    quad_options opt;
    opt.abs_tol = 1e-15;
    opt.initial_panels = 64;
    const double rest =
        integrate_interval([&](double a) { return std::exp(log_omega_abs(w, a)); }, 0.75 * al, tail_end, opt,
                           {al, 1.25 * al})
            .value;
    return plateau + 2.0 * rest;
}

}  // namespace

double base_density::log_omega(double x) const { return log_omega_abs(*this, std::abs(x)); }

jet base_density::log_omega_jet(double x, int order) const
{
    jet j = log_omega_abs_jet(*this, std::abs(x), order);
    return x < 0 ? j.scaled(-1.0) : j;
}

base_density build_omega(double alpha, double xi, double target_beta)
{
    if (!(alpha > 0) || !(xi > 0) || !(target_beta > 0))
        throw config_error("alpha, xi and target_beta must be positive");
    if (3.0 * xi * alpha > 1.0)
        throw config_error("base density needs 3 xi alpha <= 1");
    base_density w;
    w.alpha = alpha;
    w.xi = xi;
    w.target_beta = target_beta;
    auto mass_at = [&](double c) {
        base_density t = w;
        t.curvature = c;
        return omega_mass(t);
    };
    double lo = 1e-4, hi = 1e6;
    if (mass_at(hi) > 1.0 || mass_at(lo) < 1.0)
        throw construction_error("no tail curvature normalizes the base density");
    for (int it = 0; it < 200 && (hi - lo) > 1e-12 * hi; ++it) {
        const double mid = std::sqrt(lo * hi);
        if (mass_at(mid) > 1.0)
            lo = mid;
        else
            hi = mid;
    }
    w.curvature = 0.5 * (lo + hi);
    if (w.curvature <= 1.0)
        throw construction_error("base density tail is not dominated by psi (curvature " +
                                 format_double(w.curvature) + " <= 1)");
    // sup of omega / psi: ln omega(a) + a^2 + ln sqrt(pi)
    const double peak = w.curvature * alpha / (w.curvature - 1.0);
    const double span = std::max(peak, 1.25 * alpha) + 5.0;
    double best = -INFINITY, arg = 0;
    const int N = 200001;
    for (int i = 0; i < N; ++i) {
        const double a = span * i / (N - 1);
        const double v = log_omega_abs(w, a) + a * a;
        if (v > best) {
            best = v;
            arg = a;
        }
    }
    {
        double lo2 = std::max(0.0, arg - span / (N - 1)), hi2 = arg + span / (N - 1);
        for (int it = 0; it < 100; ++it) {
            const double m1 = lo2 + (hi2 - lo2) / 3, m2 = hi2 - (hi2 - lo2) / 3;
            if (log_omega_abs(w, m1) + m1 * m1 > log_omega_abs(w, m2) + m2 * m2)
                hi2 = m2;
            else
                lo2 = m1;
            best = std::max(best, log_omega_abs(w, m1) + m1 * m1);
        }
    }
    w.M_tilde = std::exp(best + log_sqrt_pi) * (1.0 + 1e-9);
    return w;
}

// ---------------------------------------------------------------- family

double perturbation_family::amplitude() const { return base.xi * std::pow(double(D), -beta) / bump.A_phi; }

double perturbation_family::envelope_M() const
{
    return std::max(base.M_tilde, 3.0 * std::sqrt(M_PI) * base.xi * std::exp(base.alpha * base.alpha / 4.0));
}

double perturbation_family::phi_j(int j, double x) const
{
    const double u = (D / base.alpha) * (x + base.alpha / 2.0) - (j - 1);
    return amplitude() * bump.phi(u);
}

namespace {

bool locate(const perturbation_family& f, double x, int& j, double& u)
{
    const double al = f.base.alpha;
    if (x < -al / 2 || x >= al / 2)
        return false;
    const double pos = (f.D / al) * (x + al / 2);
    j = std::min(f.D, static_cast<int>(std::floor(pos)) + 1);
    u = pos - (j - 1);
    return true;
}

}  // namespace

double perturbation_family::perturbation(double x) const
{
    int j;
    double u;
    if (!locate(*this, x, j, u))
        return 0.0;
    return (2 * theta[j - 1] - 1) * amplitude() * bump.phi(u);
}

double perturbation_family::density(double x) const { return base.omega(x) + perturbation(x); }

jet perturbation_family::log_jet(double x, int order) const
{
    jet f = exp(base.log_omega_jet(x, order));
    int j;
    double u;
    if (locate(*this, x, j, u)) {
        jet p = bump.phi_jet(u, order).scaled(D / base.alpha);
        f += p * ((2 * theta[j - 1] - 1) * amplitude());
    }
    return log(f);
}

std::vector<double> perturbation_family::cell_edges() const
{
    std::vector<double> e;
    for (int j = 0; j <= D; ++j)
        e.push_back(-base.alpha / 2 + base.alpha * j / D);
    return e;
}

perturbation_family make_family(double beta, int D, std::vector<int> theta, const base_density& base,
                                const bump_spec& bump)
{
    if (!(beta > 0))
        throw config_error("beta must be positive");
    if (D < 2 || D % 2 != 0)
        throw config_error("D must be an even count >= 2");
    if (static_cast<int>(theta.size()) != D)
        throw config_error("theta must have D entries");
    for (int t : theta)
        if (t != 0 && t != 1)
            throw config_error("theta entries must be 0 or 1");
    perturbation_family f;
    f.beta = beta;
    f.D = D;
    f.theta = std::move(theta);
    f.base = base;
    f.bump = bump;
    return f;
}

double f_theta_density(const perturbation_family& fam, double x) { return fam.density(x); }

namespace {

std::vector<double> jet_derivatives(const jet& j)
{
    std::vector<double> out;
    for (int k = 0; k <= j.order(); ++k)
        out.push_back(j.derivative(k));
    return out;
}

}  // namespace

log_smooth_density family_density(const perturbation_family& fam)
{
    auto f = std::make_shared<perturbation_family>(fam);
    log_smooth_density d;
    d.density.eval = [f](double x) { return f->density(x); };
    d.density.log_eval = [f](double x) {
        const double p = f->perturbation(x);
        return p == 0.0 ? f->base.log_omega(x) : std::log(f->density(x));
    };
    d.density.envelope_M = f->envelope_M();
    d.density.breakpoints = f->cell_edges();
    const double al = f->base.alpha;
    for (double b : {-al, -0.75 * al, 0.75 * al, al})
        d.density.breakpoints.push_back(b);
    d.log_derivatives = [f](double x, int order) { return jet_derivatives(f->log_jet(x, order)); };
    return d;
}

log_smooth_density omega_density(const base_density& base)
{
    auto w = std::make_shared<base_density>(base);
    log_smooth_density d;
    d.density.eval = [w](double x) { return w->omega(x); };
    d.density.log_eval = [w](double x) { return w->log_omega(x); };
    d.density.envelope_M = w->M_tilde;
    const double al = w->alpha;
    d.density.breakpoints = {-1.25 * al, -al, -0.75 * al, 0.75 * al, al, 1.25 * al};
    d.log_derivatives = [w](double x, int order) { return jet_derivatives(w->log_omega_jet(x, order)); };
    return d;
}

// ---------------------------------------------------------------- split Gaussian

double split_gaussian::norm() const { return 2.0 / (std::sqrt(M_PI) * (s_left + s_right)); }

double split_gaussian::log_density(double x) const
{
    const double s = x < 0 ? s_left : s_right;
    return std::log(norm()) - x * x / (s * s);
}

double split_gaussian::density(double x) const { return std::exp(log_density(x)); }

sample split_gaussian::draw(std::size_t n, std::uint64_t seed) const
{
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> z(0.0, 1.0);
    const double p_left = s_left / (s_left + s_right);
    sample out;
    out.seed = seed;
    out.values.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const bool left = unit(gen) < p_left;
        const double v = std::abs(z(gen));
        out.values.push_back(left ? -draw_sd(s_left) * v : draw_sd(s_right) * v);
    }
    return out;
}

log_smooth_density split_gaussian_density(const split_gaussian& g)
{
    if (!(g.s_left > 0) || !(g.s_right > 0))
        throw config_error("split Gaussian widths must be positive");
    log_smooth_density d;
    d.density.eval = [g](double x) { return g.density(x); };
    d.density.log_eval = [g](double x) { return g.log_density(x); };
    if (g.s_left <= 1.0 && g.s_right <= 1.0)
        d.density.envelope_M = g.norm() * std::sqrt(M_PI) * (1.0 + 1e-12);
    else
        d.density.domain = [g](double tol) {
            const double s = std::max(g.s_left, g.s_right);
            const double t = truncation_radius(-std::log(s), s, tol);
            return interval{-t, t};
        };
    d.density.breakpoints = {0.0};
    d.log_derivatives = [g](double x, int order) {
        const double s = x < 0 ? g.s_left : g.s_right;
        std::vector<double> l(order + 1, 0.0);
        l[0] = std::log(g.norm()) - x * x / (s * s);
        if (order >= 1)
            l[1] = -2.0 * x / (s * s);
        if (order >= 2)
            l[2] = -2.0 / (s * s);
        return l;
    };
    return d;
}

// ---------------------------------------------------------------- sampling

family_draw draw_from_family(const perturbation_family& fam, std::size_t n, std::uint64_t seed)
{
    const double M = fam.envelope_M();
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> z(0.0, draw_sd(1.0));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    family_draw out;
    out.values.seed = seed;
    out.values.values.reserve(n);
    std::size_t proposals = 0;
    while (out.values.values.size() < n) {
        const double x = z(gen);
        const double u = unit(gen);
        ++proposals;
        if (u * M * psi(x) <= fam.density(x))
            out.values.values.push_back(x);
        if (proposals >= 1000000 && proposals % 1000000 == 0) {
            const double rate = double(out.values.values.size()) / double(proposals);
            if (rate < 1.0 / (10.0 * M))
                throw sampling_error("acceptance rate " + format_double(rate) + " below 1/(10 M)");
        }
    }
    out.acceptance_rate = double(n) / double(proposals);
    return out;
}

// ---------------------------------------------------------------- class checks

double class_params::L_at(double x) const
{
    double v = 0.0;
    for (auto it = L.rbegin(); it != L.rend(); ++it)
        v = v * x + *it;
    return v;
}

namespace {

std::vector<double> make_grid(const grid_options& g)
{
    std::vector<double> xs(g.points);
    for (int i = 0; i < g.points; ++i)
        xs[i] = -g.radius + 2.0 * g.radius * i / (g.points - 1);
    return xs;
}

// largest Hölder quotient |l_r(x) - l_r(y)| / (r! |y - x|^{beta - r}) per grid point
std::vector<double> holder_quotients(const std::vector<double>& xs, const std::vector<double>& lr, double beta,
                                     int r, double gamma)
{
    const std::size_t N = xs.size();
    const double h = xs[1] - xs[0];
    const std::size_t W = static_cast<std::size_t>(std::floor(gamma / h + 1e-9));
    const double rf = factorial(r);
    std::vector<double> q(N, 0.0);
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = i + 1; j <= std::min(N - 1, i + W); ++j) {
            const double d = xs[j] - xs[i];
            const double v = std::abs(lr[j] - lr[i]) / (rf * std::pow(d, beta - r));
            q[i] = std::max(q[i], v);
            q[j] = std::max(q[j], v);
        }
    return q;
}

}  // namespace

class_report verify_class_conditions(const log_smooth_density& f, double beta, const class_params& P,
                                     const grid_options& grid)
{
    class_report rep;
    const int r = holder_order(beta);
    const auto xs = make_grid(grid);
    const std::size_t N = xs.size();
    std::vector<double> fv(N), lr(N);
    for (std::size_t i = 0; i < N; ++i) {
        fv[i] = f.density.eval(xs[i]);
        lr[i] = f.log_derivatives(xs[i], r)[r];
    }

    {  // smoothness
        clause_result c;
        c.name = "smoothness";
        const double h = xs[1] - xs[0];
        const std::size_t W = static_cast<std::size_t>(std::floor(P.gamma / h + 1e-9));
        const double rf = factorial(r);
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t j = i + 1; j <= std::min(N - 1, i + W); ++j) {
                const double d = xs[j] - xs[i];
                const double lhs = std::abs(lr[j] - lr[i]);
                const double bound = rf * std::min(P.L_at(xs[i]), P.L_at(xs[j])) * std::pow(d, beta - r);
                const double ratio = bound > 0 ? lhs / bound : (lhs > 0 ? INFINITY : 0.0);
                if (!std::isfinite(ratio) || ratio > c.worst) {
                    c.worst = ratio;
                    c.witness_x = xs[i];
                    c.witness_y = xs[j];
                }
            }
        c.pass = std::isfinite(lr[0]) && c.worst <= 1.0 + grid.slack;
        for (double v : lr)
            if (!std::isfinite(v))
                c.pass = false;
        c.detail = "max ratio of log-derivative increment to its bound";
        rep.clauses.push_back(c);
    }
    {  // origin
        clause_result c;
        c.name = "origin";
        const auto l0 = f.log_derivatives(0.0, r);
        for (int j = 0; j <= r; ++j) {
            const double ratio = std::abs(l0[j]) / P.l_plus;
            if (ratio > c.worst) {
                c.worst = ratio;
                c.witness_x = 0.0;
                c.witness_y = j;
            }
        }
        c.pass = c.worst <= 1.0 + grid.slack;
        c.detail = "max |l_j(0)| / l+ (witness_y holds j)";
        rep.clauses.push_back(c);
    }
    {  // moments
        clause_result c;
        c.name = "moments";
        const interval d = f.density.effective_domain(grid.quad_tol / 10);
        quad_options opt;
        opt.abs_tol = grid.quad_tol;
        opt.rel_tol = 1e-9;
        for (int j = 1; j <= r + 1; ++j) {
            double val;
            if (j <= r) {
                const double p = (2.0 * beta + P.epsilon) / j;
                val = integrate_interval(
                          [&](double x) {
                              const double fx = f.density.eval(x);
                              if (fx <= 0)
                                  return 0.0;
                              return std::pow(std::abs(f.log_derivatives(x, j)[j]), p) * fx;
                          },
                          d.lo, d.hi, opt, f.density.breakpoints)
                          .value;
            } else {
                const double p = (2.0 * beta + P.epsilon) / beta;
                val = integrate_interval(
                          [&](double x) { return std::pow(std::abs(P.L_at(x)), p) * f.density.eval(x); }, d.lo,
                          d.hi, opt, f.density.breakpoints)
                          .value;
            }
            const double ratio = val / P.C;
            if (ratio > c.worst) {
                c.worst = ratio;
                c.witness_y = j;
            }
        }
        c.pass = c.worst <= 1.0 + grid.slack;
        c.detail = "max moment / C (witness_y = j, r + 1 stands for the L moment)";
        rep.clauses.push_back(c);
    }
    {  // tail
        clause_result c;
        c.name = "tail";
        for (std::size_t i = 0; i < N; ++i) {
            const double ratio = fv[i] / (P.M * psi(xs[i]));
            if (ratio > c.worst) {
                c.worst = ratio;
                c.witness_x = xs[i];
            }
        }
        c.pass = c.worst <= 1.0 + grid.slack;
        c.detail = "max f / (M psi)";
        rep.clauses.push_back(c);
    }
    {  // monotonicity and floor
        clause_result c;
        c.name = "monotonicity";
        c.worst = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            double viol = 0.0;
            if (!(fv[i] > 0))
                viol = 1.0;
            if (i + 1 < N && xs[i + 1] <= -P.alpha && fv[i + 1] < fv[i] * (1 - grid.slack))
                viol = std::max(viol, (fv[i] - fv[i + 1]) / fv[i]);
            if (i + 1 < N && xs[i] >= P.alpha && fv[i + 1] > fv[i] * (1 + grid.slack))
                viol = std::max(viol, (fv[i + 1] - fv[i]) / fv[i]);
            if (std::abs(xs[i]) <= P.alpha && fv[i] < P.xi * (1 - grid.slack))
                viol = std::max(viol, (P.xi - fv[i]) / P.xi);
            if (viol > c.worst) {
                c.worst = viol;
                c.witness_x = xs[i];
            }
        }
        c.pass = c.worst == 0.0;
        c.detail = "largest relative violation of positivity, monotone tails or the floor xi";
        rep.clauses.push_back(c);
    }
    for (const auto& c : rep.clauses)
        rep.pass = rep.pass && c.pass;
    return rep;
}

log_derivative_coefficients log_derivative_structure(int t)
{
    if (t < 1)
        throw input_error("log-derivative structure needs t >= 1");
    // P_1 = f'; P_{i+1} = f^{2^{i-1}} P_i' - 2^{i-1} f^{2^{i-1}-1} f' P_i
    using mono = std::vector<int>;
    std::map<mono, double> P;
    {
        mono m(t + 1, 0);
        m[1] = 1;
        P[m] = 1.0;
    }
    for (int i = 1; i < t; ++i) {
        const int p = 1 << (i - 1);
        std::map<mono, double> next;
        for (const auto& [m, coef] : P) {
            for (int u = 0; u < t; ++u) {
                if (m[u] == 0)
                    continue;
                mono d = m;
                d[u] -= 1;
                d[u + 1] += 1;
                d[0] += p;
                next[d] += coef * m[u];
            }
            mono s = m;
            s[0] += p - 1;
            s[1] += 1;
            next[s] -= coef * p;
        }
        P.clear();
        for (const auto& [m, c] : next)
            if (c != 0.0)
                P[m] = c;
    }
    log_derivative_coefficients out;
    for (const auto& [m, c] : P)
        out.max_abs = std::max(out.max_abs, std::abs(c));
    // tuples with sum u eta_u = t and sum eta_u = 2^{t-1}: partitions of t
    std::vector<std::vector<long>> part(t + 1, std::vector<long>(t + 1, 0));
    for (int k = 0; k <= t; ++k)
        part[0][k] = 1;
    for (int s = 1; s <= t; ++s)
        for (int k = 1; k <= t; ++k)
            part[s][k] = part[s][k - 1] + (s >= k ? part[s - k][k] : 0);
    out.cardinality = static_cast<int>(part[t][t]);
    return out;
}

class_params family_class_params(const base_density& base, const bump_spec& bump, double beta_low,
                                 double beta_high, double epsilon, const grid_options& grid)
{
    if (!(beta_low > 0) || beta_high < beta_low)
        throw config_error("need 0 < beta_low <= beta_high");
    if (holder_order(beta_high) + 1 > bump.max_order)
        throw config_error("bump was built for a smaller beta_high");
    std::vector<double> betas{beta_low, beta_high};
    for (double b = std::ceil(beta_low * 4) / 4; b < beta_high; b += 0.25)
        betas.push_back(b);
    for (double b = std::ceil(beta_low); b < beta_high; b += 1.0)
        betas.push_back(b);
    std::sort(betas.begin(), betas.end());
    betas.erase(std::unique(betas.begin(), betas.end()), betas.end());

    class_params P;
    P.alpha = base.alpha;
    P.xi = base.xi;
    P.gamma = base.alpha / 4.0;
    P.epsilon = epsilon;
    P.l_plus = std::abs(std::log(2.0 * base.xi));
    P.M = std::max(base.M_tilde, 3.0 * std::sqrt(M_PI) * base.xi * std::exp(base.alpha * base.alpha / 4.0));

    const auto w = omega_density(base);
    const auto xs = make_grid(grid);
    const int rmax = holder_order(beta_high);
    std::vector<std::vector<double>> lw(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i)
        lw[i] = w.log_derivatives(xs[i], rmax);

    double c0 = 0, c2 = 0, K = 0;
    for (double b : betas) {
        const int r = holder_order(b);
        std::vector<double> lr(xs.size());
        for (std::size_t i = 0; i < xs.size(); ++i)
            lr[i] = lw[i][r];
        const auto q = holder_quotients(xs, lr, b, r, P.gamma);
        for (std::size_t i = 0; i < xs.size(); ++i) {
            c0 = std::max(c0, q[i]);
            if (std::abs(xs[i]) > 1.0)
                c2 = std::max(c2, q[i] / (xs[i] * xs[i]));
        }
        const int t = static_cast<int>(std::ceil(b));
        const auto s = log_derivative_structure(t);
        K = std::max(K, 2.0 * s.cardinality * s.max_abs / factorial(t) * std::pow(4.0 / base.alpha, b));
    }
    P.L = {1.25 * c0 + K, 0.0, 1.25 * c2};

    const interval d = w.density.effective_domain(1e-12);
    quad_options opt;
    opt.abs_tol = 1e-12;
    opt.rel_tol = 1e-10;
    double C = 0;
    for (double b : betas) {
        const int r = holder_order(b);
        double c_tilde = 0;
        for (int j = 1; j <= r; ++j) {
            const double p = (2.0 * b + epsilon) / j;
            const double v = integrate_interval(
                                 [&](double x) {
                                     return std::pow(std::abs(w.log_derivatives(x, j)[j]), p) * w.density.eval(x);
                                 },
                                 d.lo, d.hi, opt, w.density.breakpoints)
                                 .value;
            c_tilde = std::max(c_tilde, v);
        }
        double bump_term = 0;
        for (int j = 1; j <= r + 1; ++j) {
            const auto s = log_derivative_structure(j);
            bump_term = std::max(bump_term, std::pow(s.cardinality * s.max_abs * std::pow(base.alpha, -j),
                                                     (2.0 * b + epsilon) / j));
        }
        const double pL = (2.0 * b + epsilon) / b;
        const double cL =
            integrate_interval([&](double x) { return std::pow(std::abs(P.L_at(x)), pL) * w.density.eval(x); },
                               d.lo, d.hi, opt, w.density.breakpoints)
                .value +
            base.xi * base.alpha * std::pow(std::abs(P.L_at(base.alpha / 2.0)), pL);
        C = std::max({C, c_tilde + bump_term, cL});
    }
    P.C = 1.01 * C;
    return P;
}

// ---------------------------------------------------------------- codes

int hamming(const std::vector<int>& a, const std::vector<int>& b)
{
    int d = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        d += a[i] != b[i];
    return d;
}

std::vector<std::vector<int>> vg_subset(int D, double alpha_code, std::uint64_t seed)
{
    if (D < 2 || D > 64)
        throw config_error("vg_subset supports 2 <= D <= 64");
    if (!(alpha_code > 0 && alpha_code < 1))
        throw config_error("alpha_code must lie in (0, 1)");
    const double a = alpha_code;
    const double rho = (1 + a) * std::log(1 + a) + (1 - a) * std::log(1 - a);
    const double target = rho * D / 2.0;
    const double min_dist = (1 - a) * D / 2.0;
    const std::uint64_t full = D == 64 ? ~0ULL : ((1ULL << D) - 1);
    for (int attempt = 0; attempt < 8; ++attempt) {
        std::mt19937_64 gen(derive_seed(seed, "vg", {std::uint64_t(D), std::uint64_t(attempt)}));
        std::vector<std::uint64_t> kept;
        auto consider = [&](std::uint64_t w) {
            for (auto k : kept)
                if (std::popcount(k ^ w) <= min_dist)
                    return;
            kept.push_back(w);
        };
        auto done = [&] { return !kept.empty() && std::log(double(kept.size())) > target; };
        if (D <= 20) {
            std::vector<std::uint64_t> all(std::size_t(1) << D);
            std::iota(all.begin(), all.end(), 0);
            std::shuffle(all.begin(), all.end(), gen);
            for (auto w : all) {
                consider(w);
                if (done())
                    break;
            }
        } else {
            std::unordered_set<std::uint64_t> seen;
            for (int draw = 0; draw < 2000000 && !done(); ++draw) {
                const std::uint64_t w = gen() & full;
                if (seen.insert(w).second)
                    consider(w);
            }
        }
        if (done()) {
            std::vector<std::vector<int>> out;
            for (auto k : kept) {
                std::vector<int> th(D);
                for (int i = 0; i < D; ++i)
                    th[i] = (k >> i) & 1;
                out.push_back(th);
            }
            return out;
        }
    }
    throw construction_error("Varshamov-Gilbert target not reached for D = " + std::to_string(D));
}

int choose_D(std::size_t n, double beta)
{
    if (n < 1)
        throw input_error("choose_D needs n >= 1");
    int D = 2;
    while (std::pow(double(D), 2.0 * beta + 1.0) < 7.0 * double(n))
        D += 2;
    return D;
}

std::string bits(const std::vector<int>& theta)
{
    std::string s;
    for (int t : theta)
        s.push_back(t ? '1' : '0');
    return s;
}

audit_report audit_separation(const std::function<perturbation_family(const std::vector<int>&)>& builder,
                              const std::vector<std::vector<int>>& Theta, double beta, int D,
                              const audit_options& opt)
{
    audit_report rep;
    rep.beta = beta;
    rep.D = D;
    std::vector<perturbation_family> fams;
    for (const auto& th : Theta)
        fams.push_back(builder(th));
    if (fams.empty())
        throw input_error("empty code");
    const auto& f0 = fams.front();
    const double A = f0.bump.A_phi, xi = f0.base.xi, al = f0.base.alpha;
    rep.A = A;
    const double Dd = D;
    const double upper = xi * al / (8 * A * A) * std::pow(Dd, -2 * beta);
    const double kl_upper = 5 * xi * al / (4 * A * A) * std::pow(Dd, -2 * beta);
    rep.lower_bound_value = (1 - opt.kappa) * xi * al / (A * A) * std::pow(2.0, -6 - 2 * beta) *
                            std::pow(7.0 * double(opt.n), -2 * beta / (2 * beta + 1));
    std::vector<std::pair<std::size_t, std::size_t>> idx;
    for (std::size_t a = 0; a < fams.size(); ++a)
        for (std::size_t b = 0; b < fams.size(); ++b)
            if (a != b)
                idx.emplace_back(a, b);
    rep.pairs.resize(idx.size());
    parallel_for(idx.size(), thread_budget(opt.threads), [&](std::size_t k) {
        const auto& fa = fams[idx[k].first];
        const auto& fb = fams[idx[k].second];
        audit_pair p;
        p.theta_a = bits(fa.theta);
        p.theta_b = bits(fb.theta);
        p.hamming = hamming(fa.theta, fb.theta);
        quad_options q;
        q.abs_tol = 1e-300;
        q.rel_tol = opt.quad_rel_tol;
        q.initial_panels = 4 * D;
        const auto edges = fa.cell_edges();
        // both densities equal omega outside [-alpha/2, alpha/2]
        p.h2 = integrate_interval(
                   [&](double x) {
                       const double w = fa.base.omega(x);
                       const double pa = fa.perturbation(x), pb = fb.perturbation(x);
                       const double diff = pa - pb;
                       if (diff == 0.0)
                           return 0.0;
                       const double s = diff / (std::sqrt(w + pa) + std::sqrt(w + pb));
                       return 0.5 * s * s;
                   },
                   -al / 2, al / 2, q, edges)
                   .value;
        p.kl = integrate_interval(
                   [&](double x) {
                       const double w = fa.base.omega(x);
                       const double pa = fa.perturbation(x), pb = fb.perturbation(x);
                       if (pa == pb)
                           return 0.0;
                       return (w + pa) * std::log1p((pa - pb) / (w + pb));
                   },
                   -al / 2, al / 2, q, edges)
                   .value;
        p.h2_upper = upper;
        p.h2_lower = xi * al / (4 * A * A) * p.hamming * std::pow(Dd, -(2 * beta + 1));
        p.kl_upper = kl_upper;
        p.kl_vs_h2_ok = p.kl <= 10 * p.h2 + opt.slack;
        p.pass = p.h2 >= p.h2_lower - opt.slack && p.h2 <= p.h2_upper + opt.slack &&
                 p.kl <= p.kl_upper + opt.slack && p.kl_vs_h2_ok;
        rep.pairs[k] = p;
    });
    for (const auto& p : rep.pairs)
        rep.pass = rep.pass && p.pass;
    return rep;
}

nlohmann::json audit_json(const audit_report& r)
{
    nlohmann::json pairs = nlohmann::json::array();
    for (const auto& p : r.pairs)
        pairs.push_back({{"theta_a", p.theta_a},
                         {"theta_b", p.theta_b},
                         {"hamming", p.hamming},
                         {"h2", p.h2},
                         {"h2_lower", p.h2_lower},
                         {"h2_upper", p.h2_upper},
                         {"h2_upper_ratio", p.h2 / p.h2_upper},
                         {"kl", p.kl},
                         {"kl_upper", p.kl_upper},
                         {"pass", p.pass}});
    double worst = 0;
    for (const auto& p : r.pairs)
        worst = std::max(worst, p.h2 / p.h2_upper);
    return {{"beta", r.beta}, {"D", r.D}, {"A", r.A}, {"lower_bound_value", r.lower_bound_value},
            {"max_h2_upper_ratio", worst}, {"pass", r.pass}, {"pairs", pairs}};
}

}  // namespace msieve
