#pragma once

namespace msieve {

//! Box constraints of the model S_m.
struct sieve_spec {
    int m = 2;
    double lambda_low = 0.0;   //!< lower variance bound
    double mu_bound = 0.0;     //!< means lie in [-mu_bound, mu_bound]
    double lambda_bar = 0.0;   //!< upper variance bound, shared across m
};

}  // namespace msieve
