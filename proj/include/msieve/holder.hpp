#pragma once

#include "msieve/density.hpp"
#include "msieve/jet.hpp"
#include "msieve/mixture.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

namespace msieve {

//! Order r of the Hölder condition: the largest integer strictly below beta.
int holder_order(double beta);

//! phi = c d/dx exp(-1/((x - 1/4)(3/4 - x))) on (1/4, 3/4), with int phi^2 = 1.
struct bump_spec {
    double beta_high = 1.0;
    int max_order = 1;                 //!< derivatives 0..max_order enter A_phi
    double c = 1.0;
    double A_phi = 1.0;
    std::vector<double> sup_by_order;  //!< sup |phi^(k)|

    double phi(double u) const;
    //! Taylor jet of phi at u.
    jet phi_jet(double u, int order) const;
};

bump_spec build_bump(double beta_high);

//! Symmetric base density: ln omega = ln(2 xi) on [-3a/4, 3a/4], a smooth step
//! down to ln xi at +-a, then a smooth quadratic tail of curvature `curvature`.
struct base_density {
    double alpha = 1.0;
    double xi = 0.2;
    double target_beta = 2.0;
    double curvature = 1.0;
    double M_tilde = 1.0;  //!< omega <= M_tilde psi

    double log_omega(double x) const;
    double omega(double x) const { return std::exp(log_omega(x)); }
    jet log_omega_jet(double x, int order) const;
};

base_density build_omega(double alpha, double xi, double target_beta);

//! Hypercube member f_theta = omega + sum_j (2 theta_j - 1) phi_j.
struct perturbation_family {
    double beta = 1.0;
    int D = 2;
    std::vector<int> theta;
    base_density base;
    bump_spec bump;

    double amplitude() const;   //!< xi D^{-beta} / A
    double envelope_M() const;  //!< M_tilde v 3 sqrt(pi) xi exp(alpha^2 / 4)
    double phi_j(int j, double x) const;   //!< j in 1..D
    //! The perturbation term sum_j (2 theta_j - 1) phi_j(x).
    double perturbation(double x) const;
    double density(double x) const;
    jet log_jet(double x, int order) const;
    std::vector<double> cell_edges() const;
};

perturbation_family make_family(double beta, int D, std::vector<int> theta, const base_density& base,
                                const bump_spec& bump);

double f_theta_density(const perturbation_family& fam, double x);

//! Density with log-derivatives l_j = (ln f)^(j) for the class checks.
struct log_smooth_density {
    numeric_density density;
    std::function<std::vector<double>(double x, int order)> log_derivatives;
};

log_smooth_density family_density(const perturbation_family& fam);
log_smooth_density omega_density(const base_density& base);

//! Split Gaussian: c exp(-x^2 / s_left^2) for x < 0 and c exp(-x^2 / s_right^2) for x >= 0.
struct split_gaussian {
    double s_left = 1.0;
    double s_right = 0.5;
    double norm() const;
    double density(double x) const;
    double log_density(double x) const;
    sample draw(std::size_t n, std::uint64_t seed) const;
};
log_smooth_density split_gaussian_density(const split_gaussian& g);

struct family_draw {
    sample values;
    double acceptance_rate = 0.0;
};
family_draw draw_from_family(const perturbation_family& fam, std::size_t n, std::uint64_t seed);

//! Parameter set {gamma, l+, L, eps, C, alpha, xi, M}; L is a polynomial.
struct class_params {
    double gamma = 0.25;
    double l_plus = 1.0;
    std::vector<double> L;  //!< coefficients, constant term first
    double epsilon = 0.1;
    double C = 1.0;
    double alpha = 1.0;
    double xi = 0.2;
    double M = 1.0;
    double L_at(double x) const;
};

struct grid_options {
    double radius = 10.0;
    int points = 4001;
    double slack = 1e-9;
    double quad_tol = 1e-9;
};

struct clause_result {
    std::string name;
    bool pass = true;
    double worst = 0.0;  //!< worst ratio (value / bound) or worst margin
    double witness_x = 0.0;
    double witness_y = 0.0;
    std::string detail;
};

struct class_report {
    bool pass = true;
    std::vector<clause_result> clauses;
};

class_report verify_class_conditions(const log_smooth_density& f, double beta, const class_params& P,
                                     const grid_options& grid = {});

//! Index-tuple count and largest coefficient magnitude of the t-th log-derivative expansion.
struct log_derivative_coefficients {
    int cardinality = 0;
    double max_abs = 0.0;
};
log_derivative_coefficients log_derivative_structure(int t);

//! Parameter set that covers f_theta for all beta in [beta_low, beta_high] and all D.
class_params family_class_params(const base_density& base, const bump_spec& bump, double beta_low,
                                 double beta_high, double epsilon = 0.1, const grid_options& grid = {});

//! Greedy Varshamov-Gilbert subset of {0,1}^D (D <= 64).
std::vector<std::vector<int>> vg_subset(int D, double alpha_code, std::uint64_t seed);
int hamming(const std::vector<int>& a, const std::vector<int>& b);

//! Smallest even D with D^{2 beta + 1} >= 7 n.
int choose_D(std::size_t n, double beta);

struct audit_pair {
    std::string theta_a, theta_b;
    int hamming = 0;
    double h2 = 0, h2_lower = 0, h2_upper = 0;
    double kl = 0, kl_upper = 0;
    bool kl_vs_h2_ok = true;  //!< KL <= 10 d_H^2 + slack
    bool pass = true;
};

struct audit_options {
    double slack = 1e-6;
    double quad_rel_tol = 1e-9;
    std::size_t n = 100;
    double kappa = 0.5;
    unsigned threads = 1;
};

struct audit_report {
    double beta = 0;
    int D = 0;
    double A = 0;
    std::vector<audit_pair> pairs;
    double lower_bound_value = 0;  //!< (1 - kappa) xi alpha A^-2 2^{-6-2 beta} (7n)^{-2beta/(2beta+1)}
    bool pass = true;
};

audit_report audit_separation(const std::function<perturbation_family(const std::vector<int>&)>& builder,
                              const std::vector<std::vector<int>>& Theta, double beta, int D,
                              const audit_options& opt = {});

nlohmann::json audit_json(const audit_report& r);
std::string bits(const std::vector<int>& theta);

}  // namespace msieve
