#include "msieve/errors.hpp"
#include "msieve/select.hpp"
#include "msieve/sieve.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace msieve;

TEST_CASE("sieve parameterization")
{
    sieve_config cfg;
    cfg.a_bar = 1.5;
    cfg.g_tilde = 2.0;
    cfg.lambda_bar = 4.0;
    cfg.m_max = 40;
    const auto s2 = make_sieve_spec(2, cfg);
    CHECK(std::sqrt(s2.lambda_low) == doctest::Approx(1.5 * std::pow(std::log(2.0), 1.5) / 2).epsilon(1e-14));
    for (int m = 2; m <= 40; ++m) {
        const auto s = make_sieve_spec(m, cfg);
        CHECK(std::abs(s.mu_bound - 2.0 * std::sqrt(std::abs(std::log(std::sqrt(s.lambda_low))))) < 1e-12);
        CHECK(s.lambda_bar == 4.0);
        if (m >= 8)
            CHECK(make_sieve_spec(m + 1, cfg).lambda_low < s.lambda_low);
    }
    CHECK_THROWS_AS(make_sieve_spec(1, cfg), config_error);
    cfg.a_bar = 4.0;  // lambda_low(m) >= 1 for small m
    CHECK_THROWS_AS(make_sieve_spec(3, cfg), config_error);
    CHECK_THROWS_AS(validate(cfg), config_error);
}

TEST_CASE("dimension")
{
    CHECK(dimension(1) == 2);
    CHECK(dimension(2) == 5);
    CHECK(dimension(10) == 29);
}

namespace {

sieve_spec unit_log_spec(double lambda)
{
    // third and fourth log arguments equal 1 and 144
    return sieve_spec{2, lambda, std::sqrt(lambda / 8.0), lambda};
}

}  // namespace

TEST_CASE("constant A")
{
    const auto parts = constant_a_parts(unit_log_spec(0.3), 1.0);
    CHECK(parts.t3 == 0.0);
    const double expect = std::sqrt(std::log(6 * M_PI) + 2) + std::sqrt(M_PI) + std::sqrt(std::log(144.0));
    CHECK(constant_A(unit_log_spec(0.3), 1.0) == doctest::Approx(expect).epsilon(1e-15));
    CHECK(expect == doctest::Approx(6.224).epsilon(1e-3));

    sieve_spec s{2, 0.1, 1.0, 1.0};
    double prev = constant_A(s, 1.0);
    for (int i = 1; i < 10; ++i) {
        s.mu_bound *= 1.5;
        const double a = constant_A(s, 1.0);
        CHECK(a >= prev);
        prev = a;
    }
    s.lambda_bar *= 3;
    CHECK(constant_A(s, 1.0) >= prev);
    CHECK_THROWS_AS(constant_A(sieve_spec{2, 1.0, 0.1, 1.0}, 1.0), config_error);
}

TEST_CASE("penalty")
{
    const auto spec = unit_log_spec(0.3);
    const double A = constant_A(spec, 1.0);
    sieve_config cfg;
    cfg.kappa = 1.0;
    // D/n = 0.05, (D/n) A^2 ~ 1.94 >= 1
    CHECK(penalty(2, 100, spec, cfg) == doctest::Approx(0.05 * (1 + 2 * A * A)).epsilon(1e-14));
    // hand evaluation in the log branch
    const double r = 5.0 / 10000.0;
    CHECK(penalty(2, 10000, spec, cfg) == doctest::Approx(r * (1 + 2 * A * A - std::log(r * A * A))).epsilon(1e-14));
    cfg.kappa = 0.0;
    CHECK(penalty(2, 100, spec, cfg) == 0.0);
    cfg.kappa = 0.7;
    for (int m = 2; m <= 8; ++m)
        for (std::size_t n : {10u, 100u, 1000u, 100000u}) {
            const double p = penalty(m, n, spec, cfg);
            CHECK(p >= 0.7 * dimension(m) / double(n) * (1 + 2 * A * A) * (1 - 1e-15));
            CHECK(penalty(m, 2 * n, spec, cfg) <= p);
        }
}

TEST_CASE("envelope constants and feasibility")
{
    CHECK(approx_order(2.0) == 0);
    CHECK(approx_order(2.5) == 1);
    CHECK(approx_order(4.0) == 1);
    CHECK(approx_order(0.5) == 0);
    const double g = g_tilde_from_envelope(3.0, 2.0);
    CHECK(g == doctest::Approx(2 * std::sqrt(std::log(12 / std::sqrt(M_PI)) + 16)).epsilon(1e-14));
    sieve_config cfg;
    const auto rep = check_feasibility(cfg);
    CHECK(rep.g_beta == doctest::Approx(g_support_constant(cfg.g_tilde, cfg.beta_high)));
    CHECK(rep.value == doctest::Approx(rep.g_beta / cfg.a_bar * std::pow(std::log(cfg.a_bar) / std::log(2.0) + 3, 1.5)));
    CHECK(rep.feasible == (rep.value <= 1));
}

namespace {

selection_row row(int m, double contrast, double shape, double kappa = 1.0)
{
    selection_row r;
    r.m = m;
    r.D = dimension(m);
    r.ok = true;
    r.contrast = contrast;
    r.shape = shape;
    r.penalty = kappa * shape;
    r.criterion = contrast + r.penalty;
    return r;
}

}  // namespace

TEST_CASE("argmin with ties to the smallest m")
{
    CHECK(select_argmin({row(3, 1.0, 0.0)}) == 3);
    CHECK(select_argmin({row(2, 1.0, 0.5), row(3, 1.2, 0.3)}) == 2);
    CHECK(select_argmin({row(2, 1.0, 0.5), row(3, 0.9, 0.5)}) == 3);
    auto bad = row(2, 0.0, 0.0);
    bad.ok = false;
    CHECK(select_argmin({bad, row(4, 5.0, 1.0)}) == 4);
    CHECK_THROWS_AS(select_argmin({bad}), selection_error);
}

TEST_CASE("reselect and constant shift invariance")
{
    selection_table t;
    t.n = 100;
    for (int m = 2; m <= 12; ++m)
        t.rows.push_back(row(m, 1.0 / m, 0.01 * m));
    t.selected_m = select_argmin(t.rows);
    auto shifted = t;
    for (auto& r : shifted.rows) {
        r.contrast += 17.0;
        r.criterion += 17.0;
    }
    CHECK(select_argmin(shifted.rows) == t.selected_m);
    CHECK(reselect(t, 0.0).selected_m == 12);
    CHECK(reselect(t, 100.0).selected_m == 2);
}

TEST_CASE("slope heuristic")
{
    selection_table t;
    for (int m = 2; m <= 13; ++m)
        t.rows.push_back(row(m, 3.0 - 0.4 * (0.1 * m * m), 0.1 * m * m));
    auto k = calibrate_kappa(t);
    CHECK(k.kappa_hat == doctest::Approx(0.8).epsilon(1e-10));

    std::mt19937_64 g(1);
    std::uniform_real_distribution<double> u(-0.02, 0.02);
    for (auto& r : t.rows)
        r.contrast += u(g);
    k = calibrate_kappa(t);
    CHECK(k.ci_low <= 0.8);
    CHECK(k.ci_high >= 0.8);

    for (auto& r : t.rows)
        r.contrast = 1.0;
    CHECK_THROWS_AS(calibrate_kappa(t), calibration_error);
    t.rows.resize(9);
    CHECK_THROWS_AS(calibrate_kappa(t), calibration_error);
}

TEST_CASE("selection on a three-component truth matches a recomputed table")
{
    mixture truth({{0.3, -2.0, 0.3}, {0.4, 0.0, 0.3}, {0.3, 2.0, 0.3}});
    const auto s = draw_sample(truth, 2000, 17);
    sieve_config cfg;
    cfg.a_bar = 1.1;
    cfg.g_tilde = 10.0;
    em_config em;
    em.n_starts = 3;
    em.seed = 5;
    const auto t = select_model(s, 2, 6, cfg, em);
    REQUIRE(t.rows.size() == 5);
    std::vector<selection_row> recomputed;
    for (const auto& r : t.rows) {
        REQUIRE(r.ok);
        const auto spec = make_sieve_spec(r.m, cfg);
        CHECK(r.contrast == doctest::Approx(empirical_contrast(r.fit->fitted, s)).epsilon(1e-12));
        CHECK(r.penalty == doctest::Approx(penalty(r.m, 2000, spec, cfg)).epsilon(1e-14));
        CHECK(validate_membership(r.fit->fitted, spec).pass);
        recomputed.push_back(row(r.m, r.contrast, r.penalty));
    }
    CHECK(t.selected_m == select_argmin(recomputed));
    const auto single = select_model(s, 3, 3, cfg, em);
    CHECK(single.selected_m == 3);
    const auto csv = selection_csv(t);
    CHECK(csv.rfind("m,D,contrast,penalty,criterion,selected\n", 0) == 0);
}
