#pragma once

#include "msieve/density.hpp"
#include "msieve/mixture.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace msieve {

//! 1 - int sqrt(f g), computed as (1/2) int (sqrt f - sqrt g)^2 and clamped to [0, 1].
double hellinger_sq(const numeric_density& f, const numeric_density& g, double tol = 1e-10);

struct kl_result {
    double value = 0.0;
    bool infinite = false;  //!< g vanishes where f does not
};

kl_result kl_div(const numeric_density& f, const numeric_density& g, double tol = 1e-10);

using sampler_fn = std::function<sample(std::size_t n, std::uint64_t seed)>;
using procedure_fn = std::function<numeric_density(const sample&)>;

struct risk_row {
    std::size_t n = 0;
    int reps = 0;       //!< successful replications
    int failures = 0;
    double mean_risk = 0.0;
    double stderr_risk = 0.0;
};

struct risk_report {
    std::vector<risk_row> rows;
    std::vector<std::vector<double>> risks;  //!< per n, per replication (NaN when failed)
    std::optional<double> slope;
    std::optional<double> ci_low, ci_high;
    std::string note;
};

struct risk_options {
    unsigned threads = 1;
    double tol = 1e-9;
    double max_failure_rate = 0.2;
};

risk_report mc_hellinger_risk(const numeric_density& truth, const sampler_fn& sampler,
                              const procedure_fn& procedure, const std::vector<std::size_t>& n_grid,
                              int reps, std::uint64_t seed, const risk_options& opt = {});

//! Fills slope and the 95% band from the rows.
void fit_risk_slope(risk_report& r);

std::string risk_csv(const risk_report& r);

}  // namespace msieve
