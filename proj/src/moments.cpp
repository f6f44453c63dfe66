#include "msieve/moments.hpp"
#include "msieve/errors.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace msieve {

namespace {

// monic shifted Legendre recurrence on [0, 1]
double leg_a(int) { return 0.5; }
double leg_b(int l) { return l == 0 ? 1.0 : double(l) * l / (4.0 * (4.0 * l * l - 1.0)); }

}  // namespace

gauss_rule gauss_from_measure(const std::vector<double>& t, const std::vector<double>& w, int n_nodes)
{
    if (t.size() != w.size() || t.empty())
        throw input_error("gauss_from_measure needs matching nonempty nodes and weights");
    if (n_nodes < 1)
        throw input_error("gauss_from_measure needs n_nodes >= 1");
    const int L = 2 * n_nodes;
    std::vector<double> mom(L, 0.0);
    for (std::size_t i = 0; i < t.size(); ++i) {
        double pm = 0.0, p = 1.0;
        for (int l = 0; l < L; ++l) {
            mom[l] += w[i] * p;
            const double next = (t[i] - leg_a(l)) * p - (l == 0 ? 0.0 : leg_b(l) * pm);
            pm = p;
            p = next;
        }
    }
    if (!(mom[0] > 0))
        throw numeric_error("measure has no mass", 0);

    std::vector<double> alpha, beta;
    alpha.push_back(leg_a(0) + mom[1] / mom[0]);
    beta.push_back(mom[0]);
    std::vector<double> prev(L, 0.0), cur = mom;
    for (int k = 1; k < n_nodes; ++k) {
        std::vector<double> next(L, 0.0);
        for (int l = k; l < L - k; ++l)
            next[l] = cur[l + 1] - (alpha[k - 1] - leg_a(l)) * cur[l] - beta[k - 1] * prev[l] +
                      leg_b(l) * cur[l - 1];
        if (!(next[k] > 1e-300) || !(cur[k - 1] > 0))
            break;
        const double b = next[k] / cur[k - 1];
        if (!(b > 0) || !std::isfinite(b))
            break;
        alpha.push_back(leg_a(k) + next[k + 1] / next[k] - cur[k] / cur[k - 1]);
        beta.push_back(b);
        prev = std::move(cur);
        cur = std::move(next);
    }

    const int n = static_cast<int>(alpha.size());
    Eigen::VectorXd diag(n), sub(std::max(n - 1, 0));
    for (int i = 0; i < n; ++i)
        diag[i] = alpha[i];
    for (int i = 1; i < n; ++i)
        sub[i - 1] = std::sqrt(beta[i]);
    gauss_rule r;
    if (n == 1) {
        r.nodes = {diag[0]};
        r.weights = {beta[0]};
        return r;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    if (es.info() != Eigen::Success)
        throw numeric_error("Jacobi eigen-solve failed", 0);
    for (int i = 0; i < n; ++i) {
        const double v = es.eigenvectors()(0, i);
        r.nodes.push_back(std::min(1.0, std::max(0.0, es.eigenvalues()[i])));
        r.weights.push_back(beta[0] * v * v);
    }
    return r;
}

}  // namespace msieve
