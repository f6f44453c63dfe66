#include "msieve/sieve.hpp"
#include "msieve/errors.hpp"
#include "msieve/kernel.hpp"
#include "msieve/util.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace msieve {

namespace {

double sqrt_lambda_low(int m, double a) { return a * std::pow(std::log(double(m)), 1.5) / m; }

}  // namespace

void validate(const sieve_config& cfg)
{
    if (!(cfg.beta_low > 0) || !(cfg.beta_high > cfg.beta_low))
        throw config_error("need 0 < beta_low < beta_high");
    if (!(cfg.a_bar > 1))
        throw config_error("a_bar must exceed 1");
    if (!(cfg.g_tilde > 0) || !(cfg.lambda_bar > 0) || !(cfg.c1 > 0))
        throw config_error("g_tilde, lambda_bar and c1 must be positive");
    if (!(cfg.kappa >= 0))
        throw config_error("kappa must be nonnegative");
    if (cfg.m_max < 2)
        throw config_error("m_max must be at least 2");
    for (int m = 2; m <= cfg.m_max; ++m)
        make_sieve_spec(m, cfg);
}

sieve_spec make_sieve_spec(int m, const sieve_config& cfg)
{
    if (m < 2)
        throw config_error("sieve models need m >= 2");
    const double s = sqrt_lambda_low(m, cfg.a_bar);
    sieve_spec spec;
    spec.m = m;
    spec.lambda_low = s * s;
    spec.lambda_bar = cfg.lambda_bar;
    if (spec.lambda_low >= 1.0)
        throw config_error("lambda_low(" + std::to_string(m) + ") = " + format_double(spec.lambda_low) +
                           " is not below 1");
    if (spec.lambda_low >= spec.lambda_bar)
        throw config_error("lambda_low(" + std::to_string(m) + ") = " + format_double(spec.lambda_low) +
                           " is not below lambda_bar = " + format_double(spec.lambda_bar));
    spec.mu_bound = cfg.g_tilde * std::sqrt(std::abs(std::log(s)));
    return spec;
}

int dimension(int m)
{
    if (m < 1)
        throw input_error("dimension needs m >= 1");
    return 3 * m - 1;
}

constant_a_terms constant_a_parts(const sieve_spec& spec, double c1)
{
    const double arg3 = spec.mu_bound * std::sqrt(8.0 / (c1 * spec.lambda_low));
    const double arg4 = 144.0 * spec.lambda_bar / spec.lambda_low;
    if (!(arg3 >= 1.0))
        throw config_error("constant A: mu_bound sqrt(8/(c1 lambda_low)) = " + format_double(arg3) +
                           " is below 1");
    if (!(arg4 >= 1.0))
        throw config_error("constant A: 144 lambda_bar / lambda_low = " + format_double(arg4) +
                           " is below 1");
    constant_a_terms t;
    t.t1 = std::sqrt(std::log(6.0 * std::numbers::pi * std::exp(2.0)));
    t.t2 = std::sqrt(std::numbers::pi);
    t.t3 = std::sqrt(std::log(arg3));
    t.t4 = std::sqrt(std::log(arg4));
    return t;
}

double constant_A(const sieve_spec& spec, double c1) { return constant_a_parts(spec, c1).total(); }

double penalty_shape(int m, std::size_t n, const sieve_spec& spec, double c1)
{
    if (n < 1)
        throw input_error("penalty needs n >= 1");
    const double A = constant_A(spec, c1);
    const double A2 = A * A;
    const double r = double(dimension(m)) / double(n);
    return r * (1.0 + 2.0 * A2 + std::log(1.0 / std::min(1.0, r * A2)));
}

double penalty(int m, std::size_t n, const sieve_spec& spec, const sieve_config& cfg)
{
    if (cfg.kappa == 0.0)
        return 0.0;
    return cfg.kappa * penalty_shape(m, n, spec, cfg.c1);
}

int approx_order(double beta)
{
    if (!(beta > 0))
        throw config_error("beta must be positive");
    const double half = beta / 2.0;
    if (half == std::floor(half))
        return static_cast<int>(half) - 1;
    return static_cast<int>(std::ceil(half)) - 1;
}

double g_tilde_from_envelope(double M, double beta)
{
    const int k = approx_order(beta);
    const double inner = std::log(4.0 * M * inv_sqrt_pi) + k * std::log(4.0 / std::sqrt(3.0)) +
                         (6.0 * beta + 4.0);
    if (!(inner > 0))
        throw config_error("G~ undefined for this envelope");
    return 2.0 * std::sqrt(inner);
}

double g_support_constant(double g_tilde, double beta)
{
    return 54.0 * std::exp(2.0) * (6.0 * beta + 5.0) * g_tilde;
}

feasibility_report check_feasibility(const sieve_config& cfg)
{
    feasibility_report r;
    r.g_beta = g_support_constant(cfg.g_tilde, cfg.beta_high);
    const double a = cfg.a_bar;
    r.value = (r.g_beta / a) * std::pow(std::log(a) / std::log(2.0) + 3.0, 1.5);
    r.feasible = r.value <= 1.0;
    r.note = r.feasible ? "support condition on a_bar holds"
                        : "support condition on a_bar fails; reported only, not enforced";
    return r;
}

}  // namespace msieve
