#include "msieve/approximation.hpp"
#include "msieve/divergence.hpp"
#include "msieve/errors.hpp"
#include "msieve/holder.hpp"
#include "msieve/kernel.hpp"

#include <doctest.h>

#include <cmath>
#include <map>

using namespace msieve;

namespace {

numeric_density psi_density(double s)
{
    return mixture_density(mixture({{1.0, 0.0, s * s}}));
}

// f_k for f = psi_s by the recursion f_{j+1} = f + f_j - K f_j on Gaussian coefficients
double f_k_recursive(double s, double sigma, int k, double x)
{
    std::map<int, double> coef = {{0, 1.0}};  // index i stands for psi_{sqrt(s^2 + i sigma^2)}
    for (int j = 0; j < k; ++j) {
        std::map<int, double> next = {{0, 1.0}};
        for (const auto& [i, c] : coef) {
            next[i] += c;
            next[i + 1] -= c;
        }
        coef = next;
    }
    double v = 0;
    for (const auto& [i, c] : coef)
        v += c * psi_sigma(x, std::sqrt(s * s + i * sigma * sigma));
    return v;
}

}  // namespace

TEST_CASE("budget")
{
    const auto b = make_budget(2.0, 0.2, 1.5);
    CHECK(b.k == 0);
    CHECK(b.epsilon == doctest::Approx(std::pow(0.2, 17)).epsilon(1e-14));
    CHECK(b.H1 == 12.0);
    CHECK(b.mu_sigma >= b.sigma);
    CHECK(b.mu_sigma == doctest::Approx(2 * std::sqrt(std::log(4 * 1.5 / std::sqrt(M_PI) * 0.2 / b.epsilon))).epsilon(1e-14));
    CHECK(make_budget(2.5, 0.2, 1.5).k == 1);
    CHECK(make_budget(4.0, 0.2, 1.5).k == 1);
    CHECK_THROWS_AS(make_budget(2.0, 1.5, 1.5), error);
}

TEST_CASE("convolution")
{
    const auto f = psi_density(1.0);
    CHECK(convolve(f, 1.0, 1, 0.0) == doctest::Approx(inv_sqrt_pi / std::sqrt(2.0)).epsilon(1e-12));
    CHECK(convolve(f, 0.3, 0, 0.7) == f(0.7));
    for (double a : {0.5, 1.0})
        for (double b : {0.2, 0.7})
            for (double x : {-2.0, -0.4, 0.0, 1.3, 3.1})
                CHECK(std::abs(convolve(psi_density(a), b, 1, x) - psi_sigma(x, std::hypot(a, b))) < 1e-9);
    const split_gaussian sg{1.0, 0.5};
    const auto g = split_gaussian_density(sg).density;
    quad_options o;
    o.abs_tol = 1e-10;
    const double mass = integrate_interval([&](double x) { return convolve(g, 0.3, 2, x, 1e-12); }, -9, 9, o).value;
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-8));
    for (double x : {-1.0, 0.0, 2.0})
        CHECK(convolve(g, 0.3, 3, x) <= sg.norm() * std::sqrt(M_PI) / std::sqrt(M_PI));
}

TEST_CASE("iterates f_k")
{
    const double s = 0.8, sigma = 0.4;
    const auto f = psi_density(s);
    for (double x : {-2.0, -0.5, 0.0, 0.9, 2.4}) {
        CHECK(f_k_eval(f, sigma, 0, x) == f(x));
        CHECK(f_k_eval(f, sigma, 1, x) == doctest::Approx(2 * f(x) - convolve(f, sigma, 1, x)).epsilon(1e-13));
        for (int k = 0; k <= 3; ++k) {
            CHECK(std::abs(f_k_eval(f, sigma, k, x) - f_k_recursive(s, sigma, k, x)) < 1e-8);
            CHECK(std::abs(f_k_eval(f, sigma, k, x)) <= (std::pow(2.0, k + 1) - 1) / (s * std::sqrt(M_PI)) + 1e-12);
        }
    }
    quad_options o;
    o.abs_tol = 1e-9;
    for (int k = 1; k <= 3; ++k)
        CHECK(integrate_interval([&](double x) { return f_k_eval(f, sigma, k, x, 1e-12); }, -10, 10, o).value ==
              doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("density h_k")
{
    const auto f = psi_density(0.8);
    const auto h0 = build_h_k(f, make_budget(2.0, 0.2, 1.25));
    CHECK(h0.k == 0);
    CHECK(h0.g_mass == doctest::Approx(1.0).epsilon(1e-9));
    for (double x : {-1.0, 0.0, 0.5})
        CHECK(h0.h(x) == doctest::Approx(f(x)).epsilon(1e-9));

    double prev = INFINITY;
    for (double sigma : {0.4, 0.2, 0.1}) {
        const auto h = build_h_k(f, make_budget(4.0, sigma, 1.25));
        CHECK(h.k == 1);
        const double dev = std::abs(h.g_mass - 1);
        CHECK(dev < prev);
        prev = dev;
        for (int i = 0; i <= 60; ++i) {
            const double x = -6 + 0.2 * i;
            CHECK(h.h(x) >= f(x) / (2 * h.g_mass) * (1 - 1e-12));
        }
    }
}

TEST_CASE("discretization of mixing measures")
{
    mixing_measure point;
    point.atoms = {0.0};
    point.atom_weights = {1.0};
    const auto d0 = discretize_mixing(point, 1.0, 0.5, 1e-2);
    REQUIRE(d0.points.size() == 1);
    CHECK(d0.points[0] == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(d0.weights[0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(d0.sup_norm_achieved < 1e-14);

    mixing_measure uni;
    uni.density = [](double) { return 0.5; };
    const double sigma = 0.5, eps = 1e-2;
    const auto d = discretize_mixing(uni, 1.0, sigma, eps);
    CHECK(d.bound == doctest::Approx(2 * eps / sigma));
    double sum = 0;
    for (std::size_t i = 0; i < d.points.size(); ++i) {
        sum += d.weights[i];
        CHECK(d.weights[i] >= 0);
        CHECK(std::abs(d.points[i]) <= 1.0);
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(double(d.points.size()) <= support_count_bound(1.0, sigma, eps));
    CHECK(support_count_bound(1.0, sigma, eps) ==
          doctest::Approx(54 * std::exp(2.0) * std::log(1 / (std::sqrt(M_PI) * eps)) / sigma));
    double sup = 0;
    for (int i = 0; i <= 10000; ++i) {
        const double x = -4 + 8.0 * i / 10000;
        const double exact = 0.25 * (std::erf((x + 1) / sigma) - std::erf((x - 1) / sigma));
        double approx = 0;
        for (std::size_t j = 0; j < d.points.size(); ++j)
            approx += d.weights[j] * psi_sigma(x - d.points[j], sigma);
        sup = std::max(sup, std::abs(exact - approx));
    }
    CHECK(sup <= 2 * eps / sigma);
    CHECK(sup == doctest::Approx(d.sup_norm_achieved).epsilon(0.05));
    CHECK_THROWS_AS(discretize_mixing(uni, 1.0, 2.0, eps), error);
    CHECK_THROWS_AS(discretize_mixing(uni, 1.0, 0.5, 0.9), error);
}

TEST_CASE("finite mixture at scale sigma")
{
    const split_gaussian sg{1.0, 0.5};
    const auto f = split_gaussian_density(sg).density;
    const double M = sg.norm() * std::sqrt(M_PI);
    double prev = INFINITY;
    for (double sigma : {0.4, 0.3, 0.2}) {
        const auto b = make_budget(2.0, sigma, M);
        const auto w = build_wp_sigma(f, b);
        CHECK(double(w.mix.size()) <= w.count_bound);
        double sum = 0;
        for (const auto& c : w.mix.components()) {
            sum += c.weight;
            CHECK(c.variance == doctest::Approx(sigma * sigma).epsilon(1e-15));
            CHECK(std::abs(c.mean) <= b.mu_sigma);
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
        const auto kl = kl_div(f, mixture_density(w.mix), 1e-13);
        CHECK_FALSE(kl.infinite);
        CHECK(kl.value >= -1e-9);
        CHECK(kl.value < prev);
        prev = kl.value;
    }
    const auto curve = kl_decay_curve(f, 2.0, M, {0.4, 0.3, 0.2});
    REQUIRE(curve.rows.size() == 3);
    CHECK(curve.slope.has_value());
    CHECK(decay_csv(curve).rfind("sigma,kl,components\n", 0) == 0);
}

TEST_CASE("Gaussian moments and alternating sums")
{
    CHECK(gaussian_moment_nu(1, 2) == 0.5);
    CHECK(gaussian_moment_nu(2, 2) == 1.0);
    CHECK(gaussian_moment_nu(3, 4) == doctest::Approx(3 * 2.25));
    CHECK(gaussian_moment_nu_quadrature(2, 2) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(alternating_moment_sum(1, 1) == 0.0);
    CHECK(std::abs(alternating_moment_sum(2, 2)) < 1e-12);
    CHECK(std::abs(alternating_moment_sum(2, 1)) > 0.1);
    for (int u = 1; u <= 4; ++u)
        for (int k = u; k <= 4; ++k) {
            CHECK(std::abs(alternating_moment_sum(u, k)) < 1e-9);
            CHECK(std::abs(alternating_moment_sum(u, k, true)) < 1e-6);
        }
}

TEST_CASE("domination inequalities")
{
    const auto w = build_omega(1.0, 0.2, 2.0);
    const auto f = omega_density(w).density;
    const double sbar = floor_sigma_bar(1.0);
    CHECK(sbar == doctest::Approx(2 / 0.967421566101701).epsilon(1e-12));
    CHECK(floor_sigma_bar(1.0, true) == doctest::Approx(sbar * std::sqrt(2.0)).epsilon(1e-14));
    CHECK(check_convolution_floor(f, 0.2, w.M_tilde, sbar / 2).pass);
    for (const auto& c : check_iterate_envelopes(f, w.M_tilde, 0.1, 1, 0.5))
        CHECK_MESSAGE(c.pass, c.name);
    CHECK(check_convolution_envelope(f, w.M_tilde, 1.0, 0.5, 0.5).pass);
    CHECK(check_iterate_bound(f, w.M_tilde, 0.1, 2).pass);
    // an understated envelope is caught
    CHECK_FALSE(check_convolution_envelope(f, 0.5, 1.0, 0.5, 0.5).pass);
}
