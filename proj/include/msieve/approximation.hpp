#pragma once

#include "msieve/density.hpp"
#include "msieve/holder.hpp"
#include "msieve/mixture.hpp"

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace msieve {

//! Quantities that drive the finite-mixture construction at scale sigma.
struct approx_budget {
    double beta = 2.0;
    int k = 0;              //!< beta in (2k, 2k + 2]
    double sigma = 0.1;
    double epsilon = 0.0;   //!< sigma^{6 beta + 5}
    double mu_sigma = 0.0;  //!< half-width of the mixing window
    double H1 = 12.0;       //!< 4 (beta + 1)
    double M = 1.0;         //!< envelope f <= M psi
};

approx_budget make_budget(double beta, double sigma, double M);

//! (K_sigma^order f)(x). Uses K_sigma^h f = f * psi_{sigma sqrt(h)}.
double convolve(const numeric_density& f, double sigma, int order, double x, double tol = 1e-13);

//! f_k = sum_{i=0}^k C(k+1, i+1) (-1)^i K_sigma^i f.
double f_k_eval(const numeric_density& f, double sigma, int k, double x, double tol = 1e-13);

struct h_k_density {
    numeric_density h;
    double g_mass = 1.0;  //!< integral of g_k
    int k = 0;
};

//! g_k = f_k where f_k > f/2 and f/2 elsewhere; h_k = g_k / int g_k.
h_k_density build_h_k(const numeric_density& f, const approx_budget& b);

//! Probability measure on [-a, a] given by a density or by weighted atoms.
struct mixing_measure {
    real_fn density;  //!< need not be normalized
    std::vector<double> atoms;
    std::vector<double> atom_weights;
};

struct discretize_options {
    int n_max = 20;          //!< matched moments per cell (n_max / 2 nodes)
    int max_levels = 6;      //!< cell halvings after a failed sup-norm check
    int grid_points = 10000;
    int panels = 4;          //!< Gauss-Legendre panels per cell for a density
    int panel_points = 20;
};

struct discrete_mixing_measure {
    std::vector<double> points;
    std::vector<double> weights;
    double sup_norm_achieved = 0.0;
    double bound = 0.0;        //!< 2 epsilon / sigma
    double count_bound = 0.0;  //!< 54 a e^2 (1 v ln(1/(sqrt(pi) epsilon))) / sigma
    int levels = 0;            //!< halvings used
};

double support_count_bound(double a, double sigma, double epsilon);

discrete_mixing_measure discretize_mixing(const mixing_measure& F, double a, double sigma, double epsilon,
                                          const discretize_options& opt = {});

nlohmann::json discretization_json(const discrete_mixing_measure& d);

struct wp_options {
    double epsilon_floor = 1e-10;  //!< lower limit on the discretization target
    discretize_options disc;
};

struct wp_sigma {
    mixture mix;
    double window_mass = 1.0;
    double g_mass = 1.0;
    double count_bound = 0.0;  //!< 54 mu e^2 (1 v ln(1/(sqrt(pi) eps))) / sigma + 1
    discrete_mixing_measure disc;
};

//! Finite mixture of common variance sigma^2 approximating f in KL.
wp_sigma build_wp_sigma(const numeric_density& f, const approx_budget& b, const wp_options& opt = {});

struct decay_row {
    double sigma = 0.0;
    double kl = 0.0;
    std::size_t components = 0;
    bool ok = true;
    std::string error;
};

struct decay_curve {
    std::vector<decay_row> rows;
    std::optional<double> slope;
};

struct decay_options {
    wp_options wp;
    double kl_tol = 1e-14;
    unsigned threads = 1;
};

decay_curve kl_decay_curve(const numeric_density& f, double beta, double M, const std::vector<double>& sigma_grid,
                           const decay_options& opt = {});

//! CSV with header sigma,kl,components.
std::string decay_csv(const decay_curve& c);

//! int x^t psi^{*h}(x) dx = (t-1)!! (h/2)^{t/2} for even t.
double gaussian_moment_nu(int h, int t);
double gaussian_moment_nu_quadrature(int h, int t);
//! sum_{j=1}^{k+1} (-1)^j C(k+1, j) nu_{j, 2u}; zero for k >= u.
double alternating_moment_sum(int u, int k, bool by_quadrature = false);

struct domination_grid {
    double radius = 6.0;
    int points = 241;
    double slack = 1e-9;
};

//! Standard deviation s with P(0 < Y < 2 alpha) = 1/3 for Y ~ N(0, s^2); with
//! kernel_reading the Gaussian is psi_s (variance s^2 / 2).
double floor_sigma_bar(double alpha, bool kernel_reading = false);

//! K_sigma f >= xi sqrt(pi) / (3 M) f.
clause_result check_convolution_floor(const numeric_density& f, double xi, double M, double sigma,
                                      const domination_grid& g = {});
//! K_sigma^i f <= M (2/sqrt 3)^i psi(p x) for i <= k and
//! max(f_k, g_k, h_k / 2) <= 2 M (4/sqrt 3)^k psi(p x).
std::vector<clause_result> check_iterate_envelopes(const numeric_density& f, double M, double sigma, int k,
                                                   double p, const domination_grid& g = {});
//! K_sigma f <= (2/sqrt 3) M psi(q1 q2 x) when f <= M psi(q1 x).
clause_result check_convolution_envelope(const numeric_density& f, double M, double q1, double q2, double sigma,
                                         const domination_grid& g = {});
//! |f_k| <= (2^{k+1} - 1) M / sqrt(pi).
clause_result check_iterate_bound(const numeric_density& f, double M, double sigma, int k,
                                  const domination_grid& g = {});

}  // namespace msieve
