#include "msieve/divergence.hpp"
#include "msieve/errors.hpp"
#include "msieve/kernel.hpp"

#include <doctest.h>

#include <cmath>

using namespace msieve;

namespace {

numeric_density gauss(double mean, double var)
{
    return mixture_density(mixture({{1.0, mean, var}}));
}

numeric_density uniform(double a, double b)
{
    numeric_density d;
    d.eval = [a, b](double x) { return x >= a && x <= b ? 1.0 / (b - a) : 0.0; };
    d.support = interval{a, b};
    d.breakpoints = {a, b};
    return d;
}

}  // namespace

TEST_CASE("Hellinger distance")
{
    CHECK(hellinger_sq(gauss(0, 1), gauss(0, 1)) < 1e-10);
    CHECK(hellinger_sq(gauss(0, 1), gauss(2, 1)) == doctest::Approx(1 - std::exp(-1.0)).epsilon(1e-9));
    CHECK(hellinger_sq(uniform(0, 1), uniform(2, 3)) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(hellinger_sq(uniform(0, 1), uniform(0.5, 1.5)) == doctest::Approx(0.5).epsilon(1e-9));
    const auto f = mixture_density(mixture({{0.3, -1, 0.4}, {0.7, 1, 2}}));
    const auto g = gauss(0.3, 1.7);
    CHECK(std::abs(hellinger_sq(f, g) - hellinger_sq(g, f)) < 1e-12);
}

TEST_CASE("Kullback-Leibler divergence")
{
    CHECK(std::abs(kl_div(gauss(0, 1), gauss(0, 1)).value) < 1e-9);
    CHECK(kl_div(gauss(0, 1), gauss(1, 1)).value == doctest::Approx(1.0).epsilon(1e-6));
    // KL of psi_s1 to psi_s2 with draw variances s^2 / 2
    const double v1 = 0.5, v2 = 2.0;
    const double expect = 0.5 * (v1 / v2 - 1 - std::log(v1 / v2));
    CHECK(kl_div(gauss(0, v1), gauss(0, v2)).value == doctest::Approx(expect).epsilon(1e-8));
    const auto inf = kl_div(uniform(0, 1), uniform(0.5, 1.5));
    CHECK(inf.infinite);
    CHECK_FALSE(kl_div(uniform(0.2, 0.8), uniform(0, 1)).infinite);
    CHECK(kl_div(uniform(0.2, 0.8), uniform(0, 1)).value == doctest::Approx(std::log(1 / 0.6)).epsilon(1e-9));
}

TEST_CASE("Hellinger is dominated by half the KL on Gaussian pairs")
{
    for (double d : {0.0, 0.3, 1.0, 2.5})
        for (double v : {0.3, 1.0, 3.0}) {
            const auto f = gauss(0, 1), g = gauss(d, v);
            CHECK(hellinger_sq(f, g) <= kl_div(f, g).value / 2 + 1e-9);
            CHECK(kl_div(f, g).value >= -1e-9);
        }
}

TEST_CASE("density registration checks")
{
    CHECK_NOTHROW(check_density(gauss(0.5, 0.3)));
    auto bad = gauss(0, 1);
    bad.eval = [](double x) { return 2 * psi(x); };
    CHECK_THROWS_AS(check_density(bad), input_error);
    auto liar = gauss(0, 4);
    liar.envelope_M = 1.0;
    CHECK_THROWS_AS(check_density(liar), input_error);
}

TEST_CASE("Monte Carlo risk")
{
    const mixture truth_mix({{1.0, 0.0, 1.0}});
    const auto truth = mixture_density(truth_mix);
    sampler_fn sampler = [&](std::size_t n, std::uint64_t seed) { return draw_sample(truth_mix, n, seed); };

    const auto exact = mc_hellinger_risk(truth, sampler, [&](const sample&) { return truth; }, {50, 100}, 3, 1);
    for (const auto& r : exact.rows)
        CHECK(r.mean_risk < 1e-9);

    const auto off = gauss(1.0, 1.0);
    const auto fixed = mc_hellinger_risk(truth, sampler, [&](const sample&) { return off; }, {50, 100, 200, 400}, 2, 1);
    REQUIRE(fixed.slope);
    CHECK(std::abs(*fixed.slope) < 1e-6);
    CHECK(fixed.rows[0].mean_risk == doctest::Approx(1 - std::exp(-0.25)).epsilon(1e-8));

    procedure_fn plug_in = [](const sample& s) {
        double m = 0, q = 0;
        for (double v : s.values)
            m += v;
        m /= s.values.size();
        for (double v : s.values)
            q += (v - m) * (v - m);
        return gauss(m, 2 * q / s.values.size());
    };
    const auto a = mc_hellinger_risk(truth, sampler, plug_in, {100, 400}, 4, 7);
    const auto b = mc_hellinger_risk(truth, sampler, plug_in, {100, 400}, 4, 7);
    CHECK(a.rows[1].mean_risk == b.rows[1].mean_risk);
    CHECK(a.rows[1].mean_risk < a.rows[0].mean_risk);

    int calls = 0;
    procedure_fn flaky = [&](const sample& s) -> numeric_density {
        if (++calls % 2 == 0)
            throw fit_error("no");
        return plug_in(s);
    };
    CHECK_THROWS_AS(mc_hellinger_risk(truth, sampler, flaky, {100}, 4, 1), risk_error);
    const auto csv = risk_csv(a);
    CHECK(csv.rfind("n,reps,mean_risk,stderr\n", 0) == 0);
    CHECK(csv.find("slope,") != std::string::npos);
}
