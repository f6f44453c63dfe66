#include "msieve/em.hpp"
#include "msieve/errors.hpp"
#include "msieve/kernel.hpp"
#include "msieve/sieve.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace msieve;

namespace {

const sieve_spec wide{2, 0.01, 50.0, 100.0};

// textbook EM update for the psi_sigma parameterization
std::vector<component> brute_em(const mixture& cur, const std::vector<double>& x)
{
    const std::size_t m = cur.size();
    std::vector<std::vector<double>> r(x.size(), std::vector<double>(m));
    for (std::size_t i = 0; i < x.size(); ++i) {
        double s = 0;
        for (std::size_t u = 0; u < m; ++u) {
            r[i][u] = cur[u].weight * psi_sigma(x[i] - cur[u].mean, std::sqrt(cur[u].variance));
            s += r[i][u];
        }
        for (auto& v : r[i])
            v /= s;
    }
    std::vector<component> out(m);
    for (std::size_t u = 0; u < m; ++u) {
        double N = 0, S = 0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            N += r[i][u];
            S += r[i][u] * x[i];
        }
        const double mu = S / N;
        double V = 0;
        for (std::size_t i = 0; i < x.size(); ++i)
            V += r[i][u] * (x[i] - mu) * (x[i] - mu);
        out[u] = {N / x.size(), mu, 2 * V / N};
    }
    return out;
}

}  // namespace

TEST_CASE("quantile initialization on a symmetric sample")
{
    sample s;
    for (int i = -50; i <= 50; ++i)
        s.values.push_back(0.1 * i);
    const auto m = initialize(s, 2, wide, init_strategy::quantile, 0);
    CHECK(m[0].mean == doctest::Approx(-2.5).epsilon(1e-12));
    CHECK(m[1].mean == doctest::Approx(2.5).epsilon(1e-12));
    CHECK(m[0].weight == 0.5);

    sieve_spec tight{2, 0.01, 1.0, 100.0};
    const auto c = initialize(s, 2, tight, init_strategy::quantile, 0);
    CHECK(c[0].mean == -1.0);
    CHECK(c[1].mean == 1.0);
    CHECK_THROWS_AS(initialize(sample{{1.0}, std::nullopt}, 2, wide, init_strategy::quantile, 0), input_error);
}

TEST_CASE("every strategy is deterministic and feasible")
{
    const auto s = draw_sample(mixture({{0.5, -3, 0.2}, {0.5, 2, 1.0}}), 300, 4);
    sieve_spec spec{4, 0.5, 1.5, 0.8};
    for (auto st : {init_strategy::quantile, init_strategy::random_points, init_strategy::plus_plus_style}) {
        const auto a = initialize(s, 4, spec, st, 21), b = initialize(s, 4, spec, st, 21);
        CHECK(mixture_to_json(a) == mixture_to_json(b));
        CHECK(validate_membership(a, spec).pass);
        CHECK(parse_init_strategy(to_string(st)) == st);
    }
    CHECK_THROWS_AS(parse_init_strategy("kmeans"), config_error);
}

TEST_CASE("one unclamped step equals the brute-force update")
{
    const std::vector<double> x = {-2.1, -1.3, -0.2, 0.4, 1.7, 2.2, 3.0};
    const mixture cur({{0.4, -1.0, 1.2}, {0.6, 1.5, 0.8}});
    const auto step = em_iterate(cur, sample{x, std::nullopt}, wide);
    CHECK_FALSE(step.clamped);
    const auto ref = brute_em(cur, x);
    for (std::size_t u = 0; u < 2; ++u) {
        CHECK(step.next[u].weight == doctest::Approx(ref[u].weight).epsilon(1e-13));
        CHECK(step.next[u].mean == doctest::Approx(ref[u].mean).epsilon(1e-13));
        CHECK(step.next[u].variance == doctest::Approx(ref[u].variance).epsilon(1e-13));
    }
    CHECK(step.contrast_before == doctest::Approx(empirical_contrast(cur, sample{x, std::nullopt})).epsilon(1e-14));
}

TEST_CASE("fixed point and variance clamp")
{
    const auto s = draw_sample(mixture({{0.5, -3, 0.5}, {0.5, 3, 0.5}}), 400, 8);
    em_config cfg;
    cfg.rel_tolerance = 1e-15;
    cfg.max_iterations = 5000;
    auto run = run_em(initialize(s, 2, wide, init_strategy::quantile, 0), s, wide, cfg);
    const auto again = em_iterate(run.fitted, s, wide).next;
    for (std::size_t u = 0; u < 2; ++u) {
        CHECK(std::abs(again[u].mean - run.fitted[u].mean) < 1e-10);
        CHECK(std::abs(again[u].variance - run.fitted[u].variance) < 1e-10);
        CHECK(std::abs(again[u].weight - run.fitted[u].weight) < 1e-10);
    }
    sieve_spec floor_spec{2, 2.0, 50.0, 100.0};
    const auto clamped = em_iterate(mixture({{0.5, -3, 2.0}, {0.5, 3, 2.0}}), s, floor_spec);
    CHECK(clamped.clamped);
    CHECK(clamped.next[0].variance == 2.0);
    CHECK(clamped.next[1].variance == 2.0);
}

TEST_CASE("starved component is re-seeded at the worst-fit point")
{
    sample s{{-1.0, -0.5, 0.0, 0.5, 1.0, 30.0}, std::nullopt};
    const mixture cur({{0.5, 0.0, 0.5}, {0.5, -40.0, 0.01}});
    const auto step = em_iterate(cur, s, wide);
    REQUIRE(step.reseeded.size() == 1);
    CHECK(step.reseeded[0] == 1);
    CHECK(step.next[1].mean == 30.0);
}

TEST_CASE("contrast is monotone along unclamped trajectories")
{
    const auto s = draw_sample(mixture({{0.3, -2, 0.5}, {0.7, 1, 1.5}}), 500, 2);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        em_config cfg;
        cfg.max_iterations = 200;
        cfg.rel_tolerance = 1e-14;
        sieve_spec spec{3, 0.05, 10.0, 10.0};
        const auto run = run_em(initialize(s, 3, spec, init_strategy::random_points, seed), s, spec, cfg, true);
        for (std::size_t i = 1; i < run.trace.size(); ++i) {
            const auto& prev = run.trace[i - 1];
            if (!prev.clamped && !prev.reseeded)
                CHECK(run.trace[i].contrast <= prev.contrast + 1e-9);
        }
    }
}

TEST_CASE("fit_mle")
{
    const mixture truth({{0.5, -2.0, 0.5}, {0.5, 2.0, 0.5}});
    const auto s = draw_sample(truth, 2000, 31);
    em_config cfg;
    cfg.seed = 9;
    const auto spec = sieve_spec{2, 0.05, 10.0, 10.0};
    const auto fit = fit_mle(s, spec, cfg);
    CHECK(fit.final_contrast <= empirical_contrast(truth, s) + 1e-6);
    CHECK(validate_membership(fit.fitted, spec).pass);
    CHECK(fit.start_contrasts.size() == 10);

    em_config one = cfg;
    one.n_starts = 1;
    CHECK(fit.final_contrast <= fit_mle(s, spec, one).final_contrast);

    const auto again = fit_mle(s, spec, cfg);
    CHECK(mixture_to_json(again.fitted) == mixture_to_json(fit.fitted));
    CHECK(again.final_contrast == fit.final_contrast);

    em_config bad;
    bad.n_starts = 0;
    CHECK_THROWS_AS(validate(bad), config_error);
}

TEST_CASE("well separated means are recovered across seeds")
{
    const mixture truth({{0.5, -2.0, 0.5}, {0.5, 2.0, 0.5}});
    const auto spec = sieve_spec{2, 0.05, 10.0, 10.0};
    em_config cfg;
    cfg.n_starts = 2;
    int good = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto s = draw_sample(truth, 2000, 1000 + seed);
        cfg.seed = seed;
        const auto f = fit_mle(s, spec, cfg).fitted;
        const double lo = std::min(f[0].mean, f[1].mean), hi = std::max(f[0].mean, f[1].mean);
        good += std::abs(lo + 2.0) < 0.1 && std::abs(hi - 2.0) < 0.1;
    }
    CHECK(good >= 90);
}
