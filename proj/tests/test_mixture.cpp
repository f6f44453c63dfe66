#include "msieve/density.hpp"
#include "msieve/errors.hpp"
#include "msieve/kernel.hpp"
#include "msieve/mixture.hpp"
#include "msieve/quadrature.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

using namespace msieve;

namespace {

mixture two_sided()
{
    return mixture({{0.5, -1.0, 1.0}, {0.5, 1.0, 1.0}});
}

double brute_density(const std::vector<component>& c, double x)
{
    double s = 0;
    for (const auto& k : c) {
        const double sd = std::sqrt(k.variance);
        s += k.weight / sd / std::sqrt(M_PI) * std::exp(-(x - k.mean) * (x - k.mean) / k.variance);
    }
    return s;
}

}  // namespace

TEST_CASE("single standard component peaks at pi^-1/2")
{
    mixture m({{1.0, 0.0, 1.0}});
    CHECK(eval_density(m, 0.0) == doctest::Approx(0.5641895835477563).epsilon(1e-15));
}

TEST_CASE("symmetric pair at the origin equals psi(1)")
{
    CHECK(eval_density(two_sided(), 0.0) == doctest::Approx(0.20755374871029736).epsilon(1e-14));
}

TEST_CASE("density vanishes in the tails and rejects non-finite input")
{
    const auto m = two_sided();
    CHECK(eval_density(m, 60.0) < 1e-300);
    CHECK_THROWS_AS(eval_density(m, std::numeric_limits<double>::quiet_NaN()), input_error);
    CHECK_THROWS_AS(eval_density(m, INFINITY), input_error);
}

TEST_CASE("mixture validation")
{
    CHECK_THROWS_AS(mixture(std::vector<component>{}), input_error);
    CHECK_THROWS_AS(mixture({{0.5, 0, 1}, {0.4, 0, 1}}), input_error);
    CHECK_THROWS_AS(mixture({{1.0, 0, 0.0}}), input_error);
    CHECK_THROWS_AS(mixture({{1.2, 0, 1}, {-0.2, 0, 1}}), input_error);
    const auto n = mixture::normalized({{2, 0, 1}, {2, 1, 1}});
    CHECK(n[0].weight == doctest::Approx(0.5));
}

TEST_CASE("random mixtures integrate to one and match the direct formula")
{
    std::mt19937_64 g(3);
    std::uniform_real_distribution<double> u(0, 1);
    for (int t = 0; t < 20; ++t) {
        std::vector<component> c;
        const int m = 1 + t % 5;
        for (int i = 0; i < m; ++i)
            c.push_back({0.1 + u(g), 6 * u(g) - 3, 0.05 + 2 * u(g)});
        const auto mix = mixture::normalized(c);
        const auto d = mixture_density(mix);
        const interval dom = d.effective_domain(1e-12);
        quad_options o;
        o.abs_tol = 1e-11;
        CHECK(integrate_interval(d.eval, dom.lo, dom.hi, o).value == doctest::Approx(1.0).epsilon(1e-8));
        for (double x : {-2.5, -0.3, 0.0, 1.7})
            CHECK(mix.density(x) == doctest::Approx(brute_density(mix.components(), x)).epsilon(1e-13));
        CHECK(mix.log_density(0.3) == doctest::Approx(std::log(mix.density(0.3))).epsilon(1e-13));
    }
}

TEST_CASE("log density survives far tails")
{
    mixture m({{1.0, 0.0, 0.01}});
    CHECK(std::isfinite(m.log_density(40.0)));
    CHECK(m.log_density(40.0) == doctest::Approx(-1600.0 / 0.01 - std::log(0.1) - log_sqrt_pi).epsilon(1e-12));
}

TEST_CASE("psi scaling identity and variance convention")
{
    for (double s : {0.1, 1.0, 10.0})
        for (double x : {-3.0, -0.2, 0.0, 1.1, 7.5})
            CHECK(psi_sigma(x, s) == doctest::Approx(psi(x / s) / s).epsilon(1e-15));
    quad_options o;
    o.abs_tol = 1e-13;
    const double var = integrate_interval([](double x) { return x * x * psi(x); }, -40, 40, o).value;
    CHECK(var == doctest::Approx(0.5).epsilon(1e-10));
}

TEST_CASE("empirical contrast")
{
    const auto m = two_sided();
    sample s{{-0.5, 0.25, 2.0}, std::nullopt};
    const double expect = -(std::log(brute_density(m.components(), -0.5)) +
                            std::log(brute_density(m.components(), 0.25)) +
                            std::log(brute_density(m.components(), 2.0))) /
                          3.0;
    CHECK(empirical_contrast(m, s) == doctest::Approx(expect).epsilon(1e-14));

    mixture single({{1.0, 0.0, 1.0}});
    sample mode{{0.0}, std::nullopt};
    CHECK(empirical_contrast(single, mode) == doctest::Approx(-std::log(inv_sqrt_pi)));

    const auto doubled = mixture::normalized({{1.0, -1.0, 1.0}, {1.0, 1.0, 1.0}});
    CHECK(empirical_contrast(doubled, s) == empirical_contrast(m, s));
    mixture permuted({{0.5, 1.0, 1.0}, {0.5, -1.0, 1.0}});
    CHECK(empirical_contrast(permuted, s) == doctest::Approx(empirical_contrast(m, s)).epsilon(1e-12));
}

TEST_CASE("contrast stays finite when the linear density underflows")
{
    mixture narrow({{1.0, 0.0, 1e-4}});
    sample s{{0.0, 0.0, 50.0}, std::nullopt};
    CHECK(narrow.density(50.0) == 0.0);
    const double expect = (2 * (-log_sqrt_pi - std::log(1e-2)) + (-2500.0 / 1e-4 - log_sqrt_pi - std::log(1e-2))) / -3.0;
    CHECK(empirical_contrast(narrow, s) == doctest::Approx(expect).epsilon(1e-13));
}

TEST_CASE("sampling is deterministic and uses sd sigma / sqrt 2")
{
    mixture m({{1.0, 0.0, 1.0}});
    const auto a = draw_sample(m, 1000, 11), b = draw_sample(m, 1000, 11);
    CHECK(a.values == b.values);
    const auto big = draw_sample(m, 100000, 5);
    double mean = 0, sq = 0;
    for (double v : big.values) {
        mean += v;
        sq += v * v;
    }
    mean /= 1e5;
    const double var = sq / 1e5 - mean * mean;
    // var of the sample variance for N(0, 1/2) is 2 (1/2)^2 / n
    CHECK(std::abs(var - 0.5) < 3 * std::sqrt(0.5 / 1e5));

    mixture degenerate({{1.0, -5.0, 0.01}, {0.0, 5.0, 0.01}});
    for (double v : draw_sample(degenerate, 500, 2).values)
        CHECK(v < 0);
}

TEST_CASE("MAP clustering")
{
    mixture m({{0.5, -4.0, 1.0}, {0.5, 4.0, 1.0}});
    sample s{{-4.0, 4.0, 0.0, -0.1, 0.3}, std::nullopt};
    const auto c = map_cluster(m, s);
    CHECK(c.labels[0] == 0);
    CHECK(c.labels[1] == 1);
    CHECK(c.labels[2] == 0);  // tie goes to the lowest index
    for (std::size_t i = 0; i < s.values.size(); ++i) {
        const double a = 0.5 * psi_sigma(s.values[i] + 4.0, 1.0), b = 0.5 * psi_sigma(s.values[i] - 4.0, 1.0);
        CHECK(c.posteriors[i][0] == doctest::Approx(a / (a + b)).epsilon(1e-12));
        CHECK(c.posteriors[i][0] + c.posteriors[i][1] == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(c.labels[i] == (a >= b ? 0u : 1u));
    }
    mixture swapped({{0.5, 4.0, 1.0}, {0.5, -4.0, 1.0}});
    const auto c2 = map_cluster(swapped, sample{{-4.0, 4.0, -0.1, 0.3}, std::nullopt});
    CHECK(c2.labels[0] == 1);
    CHECK(c2.labels[1] == 0);
    CHECK(c2.labels[2] == 1);
    CHECK(c2.labels[3] == 0);
}

TEST_CASE("membership against the box")
{
    sieve_spec spec{3, 0.1, 2.0, 4.0};
    CHECK(validate_membership(mixture({{0.5, 0.0, 2.0}, {0.5, 1.0, 1.0}}), spec).pass);
    const auto bad = validate_membership(mixture({{0.5, 0.0, 0.05}, {0.5, 1.0, 1.0}}), spec);
    CHECK_FALSE(bad.pass);
    REQUIRE(bad.failing().size() == 1);
    CHECK(bad.failing()[0] == 0);
    CHECK_FALSE(validate_membership(mixture({{0.25, 0, 1}, {0.25, 0, 1}, {0.25, 0, 1}, {0.25, 0, 1}}), spec).pass);

    std::mt19937_64 g(9);
    std::uniform_real_distribution<double> u(0, 1);
    for (int t = 0; t < 50; ++t) {
        std::vector<component> c;
        for (int i = 0; i < 3; ++i)
            c.push_back({1.0 / 3, 5 * u(g) - 2.5, 5 * u(g)});
        const mixture mix(c);
        const auto r = validate_membership(mix, spec);
        bool all = true;
        for (std::size_t i = 0; i < 3; ++i) {
            const bool mo = std::abs(c[i].mean) <= 2.0, vo = c[i].variance >= 0.1 && c[i].variance <= 4.0;
            CHECK(r.components[i].mean_ok == mo);
            CHECK(r.components[i].variance_ok == vo);
            all = all && mo && vo;
        }
        CHECK(r.pass == all);
    }
}

TEST_CASE("mixture JSON round trip")
{
    const auto m = two_sided();
    const auto back = mixture_from_json(mixture_to_json(m));
    REQUIRE(back.size() == 2);
    CHECK(back[1].mean == m[1].mean);
    CHECK_THROWS_AS(mixture_from_json(nlohmann::json{{"components", 3}}), input_error);
}
