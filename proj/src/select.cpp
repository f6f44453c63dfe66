#include "msieve/select.hpp"
#include "msieve/errors.hpp"
#include "msieve/util.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace msieve {

const selection_row& selection_table::selected() const
{
    for (const auto& r : rows)
        if (r.m == selected_m)
            return r;
    throw selection_error("no selected row");
}

int select_argmin(const std::vector<selection_row>& rows)
{
    const selection_row* best = nullptr;
    for (const auto& r : rows) {
        if (!r.ok)
            continue;
        if (!best || r.criterion < best->criterion - 1e-12 ||
            (std::abs(r.criterion - best->criterion) <= 1e-12 && r.m < best->m))
            best = &r;
    }
    if (!best)
        throw selection_error("every model fit failed");
    return best->m;
}

selection_table select_model(const sample& s, int m_lo, int m_hi, const sieve_config& cfg,
                             const em_config& em, unsigned threads)
{
    check_sample(s);
    validate(em);
    const std::size_t n = s.values.size();
    if (m_lo < 2 || m_hi < m_lo)
        throw input_error("m range must satisfy 2 <= m_lo <= m_hi");
    if (static_cast<std::size_t>(m_hi) > n)
        throw input_error("m range exceeds the sample size");
    selection_table t;
    t.n = n;
    t.kappa = cfg.kappa;
    t.rows.resize(m_hi - m_lo + 1);
    parallel_for(t.rows.size(), thread_budget(threads), [&](std::size_t k) {
        selection_row& row = t.rows[k];
        row.m = m_lo + static_cast<int>(k);
        row.D = dimension(row.m);
        try {
            sieve_spec spec = make_sieve_spec(row.m, cfg);
            row.shape = penalty_shape(row.m, n, spec, cfg.c1);
            row.penalty = cfg.kappa == 0.0 ? 0.0 : cfg.kappa * row.shape;
            em_config ec = em;
            ec.seed = derive_seed(em.seed, "select", {std::uint64_t(row.m)});
            row.fit = fit_mle(s, spec, ec);
            row.contrast = row.fit->final_contrast;
            row.criterion = row.contrast + row.penalty;
            row.ok = true;
        } catch (const error& e) {
            row.ok = false;
            row.error = std::string(e.kind()) + ": " + e.what();
        }
    });
    t.selected_m = select_argmin(t.rows);
    return t;
}

selection_table reselect(const selection_table& t, double kappa)
{
    selection_table out = t;
    out.kappa = kappa;
    for (auto& r : out.rows) {
        if (!r.ok)
            continue;
        r.penalty = kappa == 0.0 ? 0.0 : kappa * r.shape;
        r.criterion = r.contrast + r.penalty;
    }
    out.selected_m = select_argmin(out.rows);
    return out;
}

namespace {

double median(std::vector<double> v)
{
    std::sort(v.begin(), v.end());
    const std::size_t k = v.size();
    return k % 2 ? v[k / 2] : 0.5 * (v[k / 2 - 1] + v[k / 2]);
}

}  // namespace

kappa_calibration calibrate_kappa(const selection_table& t)
{
    std::vector<const selection_row*> ok;
    for (const auto& r : t.rows)
        if (r.ok)
            ok.push_back(&r);
    if (ok.size() < 10)
        throw calibration_error("slope heuristic needs at least 10 fitted models, got " +
                                std::to_string(ok.size()));
    std::sort(ok.begin(), ok.end(), [](auto a, auto b) { return a->m < b->m; });
    // larger half of the grid
    std::vector<double> x, y;
    for (std::size_t i = ok.size() / 2; i < ok.size(); ++i) {
        x.push_back(ok[i]->shape);
        y.push_back(ok[i]->contrast);
    }
    const std::size_t n = x.size();
    double mx = 0;
    for (double v : x)
        mx += v;
    mx /= n;
    double sxx = 0;
    for (double v : x)
        sxx += (v - mx) * (v - mx);
    if (sxx <= 1e-24 * std::max(1.0, mx * mx) * n)
        throw calibration_error("penalty shape has near-zero variance");

    // Huber IRLS
    std::vector<double> w(n, 1.0);
    double a = 0, b = 0;
    for (int it = 0; it < 50; ++it) {
        double sw = 0, swx = 0, swy = 0;
        for (std::size_t i = 0; i < n; ++i) {
            sw += w[i];
            swx += w[i] * x[i];
            swy += w[i] * y[i];
        }
        const double wx = swx / sw, wy = swy / sw;
        double sxxw = 0, sxyw = 0;
        for (std::size_t i = 0; i < n; ++i) {
            sxxw += w[i] * (x[i] - wx) * (x[i] - wx);
            sxyw += w[i] * (x[i] - wx) * (y[i] - wy);
        }
        const double nb = sxyw / sxxw;
        const double na = wy - nb * wx;
        std::vector<double> res(n);
        for (std::size_t i = 0; i < n; ++i)
            res[i] = std::abs(y[i] - na - nb * x[i]);
        double scale = median(res) / 0.6745;
        const bool stable = std::abs(nb - b) <= 1e-14 * std::max(1.0, std::abs(nb)) && it > 0;
        a = na;
        b = nb;
        if (stable || scale <= 0)
            break;
        const double c = 1.345 * scale;
        for (std::size_t i = 0; i < n; ++i)
            w[i] = res[i] <= c ? 1.0 : c / res[i];
    }
    kappa_calibration out;
    out.slope = b;
    out.rows_used = static_cast<int>(n);
    {
        double sw = 0, swx = 0;
        for (std::size_t i = 0; i < n; ++i) {
            sw += w[i];
            swx += w[i] * x[i];
        }
        const double wx = swx / sw;
        double sxxw = 0, rss = 0;
        for (std::size_t i = 0; i < n; ++i) {
            sxxw += w[i] * (x[i] - wx) * (x[i] - wx);
            const double r = y[i] - a - b * x[i];
            rss += w[i] * r * r;
        }
        out.slope_se = n > 2 ? std::sqrt(rss / (sw - 2.0) / sxxw) : 0.0;
    }
    if (!(b < 0) || std::abs(b) <= 1e-15)
        throw calibration_error("contrast does not decrease with the penalty shape (slope " +
                                format_double(b) + ")");
    out.kappa_hat = 2.0 * std::abs(b);
    const double tq = n > 2 ? t_quantile_975(double(n - 2)) : 0.0;
    out.ci_low = 2.0 * std::max(0.0, std::abs(b) - tq * out.slope_se);
    out.ci_high = 2.0 * (std::abs(b) + tq * out.slope_se);

    // dimension jump over a geometric kappa grid
    const double kmax = std::max(out.kappa_hat * 4.0, 1e-12);
    int prev_m = -1;
    double prev_k = 0;
    int best_drop = 0;
    for (int i = 0; i <= 400; ++i) {
        const double k = kmax * std::pow(10.0, -4.0 + 4.0 * i / 400.0);
        const int m = reselect(t, k).selected_m;
        if (prev_m > 0 && prev_m - m > best_drop) {
            best_drop = prev_m - m;
            out.jump_kappa = 0.5 * (prev_k + k);
            out.jump_from_m = prev_m;
            out.jump_to_m = m;
        }
        prev_m = m;
        prev_k = k;
    }
    out.selected_m_at_kappa_hat = reselect(t, out.kappa_hat).selected_m;
    return out;
}

std::string selection_csv(const selection_table& t)
{
    std::string out = "m,D,contrast,penalty,criterion,selected\n";
    for (const auto& r : t.rows) {
        out += std::to_string(r.m) + "," + std::to_string(r.D) + ",";
        if (r.ok)
            out += format_double(r.contrast) + "," + format_double(r.penalty) + "," +
                   format_double(r.criterion);
        else
            out += "nan," + format_double(r.penalty) + ",nan";
        out += r.m == t.selected_m ? ",1\n" : ",0\n";
    }
    return out;
}

nlohmann::json selection_json(const selection_table& t)
{
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : t.rows) {
        nlohmann::json j = {{"m", r.m}, {"D", r.D}, {"ok", r.ok}, {"penalty", r.penalty},
                            {"selected", r.m == t.selected_m}};
        if (r.ok) {
            j["contrast"] = r.contrast;
            j["criterion"] = r.criterion;
            j["iterations"] = r.fit->iterations_used;
            j["converged"] = r.fit->converged;
            j["start_index"] = r.fit->start_index;
            nlohmann::json sc = nlohmann::json::array();
            for (double c : r.fit->start_contrasts)
                sc.push_back(std::isfinite(c) ? nlohmann::json(c) : nlohmann::json(nullptr));
            j["start_contrasts"] = sc;
        } else {
            j["error"] = r.error;
        }
        rows.push_back(j);
    }
    return {{"n", t.n}, {"kappa", t.kappa}, {"selected_m", t.selected_m}, {"rows", rows}};
}

}  // namespace msieve
