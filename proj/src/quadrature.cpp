#include "msieve/quadrature.hpp"
#include "msieve/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <queue>
#include <string>

namespace msieve {

namespace {

// Kronrod 15 abscissae (positive half) and weights; Gauss 7 weights.
constexpr double xgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr double wgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr double wg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct panel {
    double a, b, value, error;
    bool operator<(const panel& o) const { return error < o.error; }
};

panel gk15(const real_fn& f, double a, double b)
{
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    const double fc = f(c);
    double rk = fc * wgk[7];
    double rg = fc * wg[3];
    for (int j = 0; j < 7; ++j) {
        const double dx = h * xgk[j];
        const double f1 = f(c - dx);
        const double f2 = f(c + dx);
        rk += wgk[j] * (f1 + f2);
        if (j % 2 == 1)
            rg += wg[j / 2] * (f1 + f2);
    }
    panel p{a, b, rk * h, std::abs((rk - rg) * h)};
    if (!std::isfinite(p.value))
        throw quadrature_error("non-finite integrand on [" + std::to_string(a) + ", " +
                                   std::to_string(b) + "]",
                               p.value, INFINITY);
    return p;
}

}  // namespace

quad_result integrate_interval(const real_fn& f, double a, double b, const quad_options& opt,
                               const std::vector<double>& breakpoints)
{
    quad_result res;
    if (!(b > a))
        return res;
    std::vector<double> edges{a};
    {
        std::vector<double> bp;
        for (double x : breakpoints)
            if (x > a && x < b)
                bp.push_back(x);
        std::sort(bp.begin(), bp.end());
        bp.erase(std::unique(bp.begin(), bp.end()), bp.end());
        edges.insert(edges.end(), bp.begin(), bp.end());
        edges.push_back(b);
    }
    // Split each breakpoint segment into panels proportional to its length.
    const int base = std::max(1, opt.initial_panels);
    std::priority_queue<panel> heap;
    double total = 0.0, total_err = 0.0;
    int count = 0;
    for (std::size_t s = 0; s + 1 < edges.size(); ++s) {
        const double lo = edges[s], hi = edges[s + 1];
        int pieces = std::max(1, static_cast<int>(std::ceil(base * (hi - lo) / (b - a))));
        for (int i = 0; i < pieces; ++i) {
            double pa = lo + (hi - lo) * i / pieces;
            double pb = (i + 1 == pieces) ? hi : lo + (hi - lo) * (i + 1) / pieces;
            panel p = gk15(f, pa, pb);
            total += p.value;
            total_err += p.error;
            heap.push(p);
            ++count;
        }
    }
    auto done = [&] {
        return total_err <= std::max(opt.abs_tol, opt.rel_tol * std::abs(total));
    };
    while (!done()) {
        if (count >= opt.max_panels) {
            res.value = total;
            res.error = total_err;
            res.evaluations = 15L * count;
            throw quadrature_error("adaptive quadrature did not converge: estimate " +
                                       std::to_string(total) + " error " + std::to_string(total_err),
                                   total, total_err);
        }
        panel p = heap.top();
        heap.pop();
        const double m = 0.5 * (p.a + p.b);
        if (!(m > p.a && m < p.b)) {
            // interval at machine resolution; accept it as is
            total_err -= p.error;
            p.error = 0.0;
            heap.push(p);
            continue;
        }
        panel l = gk15(f, p.a, m);
        panel r = gk15(f, m, p.b);
        total += l.value + r.value - p.value;
        total_err += l.error + r.error - p.error;
        heap.push(l);
        heap.push(r);
        ++count;
    }
    // Resum to avoid drift from incremental updates.
    double sum = 0.0, err = 0.0;
    std::vector<panel> all;
    all.reserve(heap.size());
    while (!heap.empty()) {
        all.push_back(heap.top());
        heap.pop();
    }
    std::sort(all.begin(), all.end(), [](const panel& x, const panel& y) { return x.a < y.a; });
    for (const auto& p : all) {
        sum += p.value;
        err += p.error;
    }
    res.value = sum;
    res.error = err;
    res.evaluations = 15L * (count + 1);
    return res;
}

double truncation_radius(double log_M, double width, double tail_tol)
{
    // M * width * erfc(T / width) < tail_tol
    const double target = std::log(tail_tol) - log_M - std::log(width);
    if (target >= 0.0)
        return 0.0;
    double lo = 0.0, hi = 1.0;
    auto log_tail = [](double t) {
        double e = std::erfc(t);
        if (e > 0)
            return std::log(e);
        // asymptotic erfc(t) ~ exp(-t^2) / (t sqrt(pi))
        return -t * t - std::log(t) - 0.5 * std::log(M_PI);
    };
    while (log_tail(hi) > target)
        hi *= 2.0;
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        if (log_tail(mid) > target)
            lo = mid;
        else
            hi = mid;
    }
    return hi * width;
}

double integrate(const real_fn& f, double envelope_M, double tol)
{
    const double T = truncation_radius(std::log(envelope_M), 1.0, tol / 10.0);
    quad_options opt;
    opt.abs_tol = tol * 0.9;
    return integrate_interval(f, -T, T, opt).value;
}

const gauss_rule& gauss_legendre(int n)
{
    static std::mutex mu;
    static std::map<int, gauss_rule> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it != cache.end())
        return it->second;
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd sub(std::max(n - 1, 0));
    for (int k = 1; k < n; ++k)
        sub[k - 1] = k / std::sqrt(4.0 * k * k - 1.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    gauss_rule r;
    for (int i = 0; i < n; ++i) {
        r.nodes.push_back(es.eigenvalues()[i]);
        double v = es.eigenvectors()(0, i);
        r.weights.push_back(2.0 * v * v);
    }
    return cache.emplace(n, std::move(r)).first->second;
}

}  // namespace msieve
