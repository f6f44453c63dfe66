#pragma once

#include "msieve/mixture.hpp"
#include "msieve/sieve_spec.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace msieve {

enum class init_strategy { quantile, random_points, plus_plus_style };

init_strategy parse_init_strategy(const std::string& name);
std::string to_string(init_strategy s);

struct em_config {
    int max_iterations = 500;
    double rel_tolerance = 1e-8;
    int n_starts = 10;
    init_strategy strategy = init_strategy::quantile;
    std::uint64_t seed = 0;
};

void validate(const em_config& cfg);

//! Starting point with m components inside the box of `spec`.
mixture initialize(const sample& s, int m, const sieve_spec& spec, init_strategy strategy,
                   std::uint64_t seed);

struct em_step {
    mixture next;
    double contrast_before = 0.0;    //!< contrast of the input mixture
    bool clamped = false;            //!< a projection changed some parameter
    std::vector<std::size_t> reseeded;
};

//! One E-step, M-step and projection onto the box.
em_step em_iterate(const mixture& current, const sample& s, const sieve_spec& spec);

struct em_trace_entry {
    double contrast = 0.0;  //!< contrast of the mixture entering the iteration
    bool clamped = false;
    bool reseeded = false;
};

struct em_run {
    mixture fitted;
    double final_contrast = 0.0;
    int iterations = 0;
    bool converged = false;
    int reseed_count = 0;
    std::vector<em_trace_entry> trace;
};

//! EM from a given start until the relative contrast change drops below tolerance.
em_run run_em(const mixture& start, const sample& s, const sieve_spec& spec, const em_config& cfg,
              bool keep_trace = false);

struct fitted_model {
    mixture fitted;
    double final_contrast = 0.0;
    int iterations_used = 0;
    bool converged = false;
    int start_index = 0;
    std::vector<double> start_contrasts;  //!< one per start, NaN for failed starts
};

fitted_model fit_mle(const sample& s, const sieve_spec& spec, const em_config& cfg);

}  // namespace msieve
