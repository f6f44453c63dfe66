#pragma once

#include "msieve/sieve_spec.hpp"

#include <string>

namespace msieve {

struct sieve_config {
    double beta_low = 0.5;
    double beta_high = 2.0;
    double a_bar = 2.0;        //!< a in sqrt(lambda_low(m)) = a (ln m)^{3/2} / m
    double g_tilde = 1.0;      //!< G~ in mu_bound(m) = G~ |ln sqrt(lambda_low)|^{1/2}
    double lambda_bar = 4.0;
    double kappa = 1.0;
    double c1 = 1.0;           //!< constant of A; its value is not fixed by theory
    int m_max = 10;
};

//! Checks field ranges and that lambda_low(m) < min(1, lambda_bar) for 2 <= m <= m_max.
void validate(const sieve_config& cfg);

sieve_spec make_sieve_spec(int m, const sieve_config& cfg);

//! D(m) = 3m - 1.
int dimension(int m);

struct constant_a_terms {
    double t1 = 0, t2 = 0, t3 = 0, t4 = 0;
    double total() const { return t1 + t2 + t3 + t4; }
};
constant_a_terms constant_a_parts(const sieve_spec& spec, double c1);
double constant_A(const sieve_spec& spec, double c1);

//! pen = kappa (D/n)(1 + 2A^2 + ln(1 / min(1, (D/n) A^2))).
double penalty(int m, std::size_t n, const sieve_spec& spec, const sieve_config& cfg);
//! The same with kappa = 1.
double penalty_shape(int m, std::size_t n, const sieve_spec& spec, double c1);

//! G~_beta from the envelope M: 2 sqrt(ln(4M/sqrt(pi)) + k ln(4/sqrt(3)) + 6 beta + 4).
double g_tilde_from_envelope(double M, double beta);

//! Approximation support constant G_beta implied by G~_beta (54 e^2 (6 beta + 5) G~).
double g_support_constant(double g_tilde, double beta);

struct feasibility_report {
    double g_beta = 0;
    double value = 0;   //!< (G/a)(ln a / ln 2 + 3)^{3/2}
    bool feasible = false;
    std::string note;
};
feasibility_report check_feasibility(const sieve_config& cfg);

//! k with beta in (2k, 2k + 2].
int approx_order(double beta);

}  // namespace msieve
