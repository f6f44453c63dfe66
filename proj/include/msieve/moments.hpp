#pragma once

#include "msieve/quadrature.hpp"

#include <vector>

namespace msieve {

//! Gauss rule with at most n_nodes nodes for the discrete measure sum_i w_i delta_{t_i}
//! on [0, 1]. Modified moments in the shifted Legendre basis feed the modified
//! Chebyshev algorithm; nodes and weights come from the Jacobi matrix eigenpairs.
//! The recurrence is cut short when it stops producing positive b_k.
gauss_rule gauss_from_measure(const std::vector<double>& t, const std::vector<double>& w, int n_nodes);

}  // namespace msieve
