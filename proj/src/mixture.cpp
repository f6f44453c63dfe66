#include "msieve/mixture.hpp"
#include "msieve/errors.hpp"
#include "msieve/kernel.hpp"
#include "msieve/util.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

namespace msieve {

mixture::mixture(std::vector<component> comps) : comps_(std::move(comps))
{
    if (comps_.empty())
        throw input_error("mixture needs at least one component");
    double total = 0.0;
    for (std::size_t u = 0; u < comps_.size(); ++u) {
        const auto& c = comps_[u];
        if (!std::isfinite(c.weight) || c.weight < 0.0 || c.weight > 1.0)
            throw input_error("component " + std::to_string(u) + ": weight outside [0,1]");
        if (!std::isfinite(c.mean))
            throw input_error("component " + std::to_string(u) + ": non-finite mean");
        if (!std::isfinite(c.variance) || c.variance <= 0.0)
            throw input_error("component " + std::to_string(u) + ": variance must be positive");
        total += c.weight;
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw input_error("mixture weights sum to " + format_double(total) + ", not 1");
    sigma_.resize(comps_.size());
    log_coef_.resize(comps_.size());
    for (std::size_t u = 0; u < comps_.size(); ++u) {
        sigma_[u] = std::sqrt(comps_[u].variance);
        log_coef_[u] = comps_[u].weight < min_active_weight
                           ? -std::numeric_limits<double>::infinity()
                           : std::log(comps_[u].weight) - std::log(sigma_[u]) - log_sqrt_pi;
    }
}

mixture mixture::normalized(std::vector<component> comps)
{
    double total = 0.0;
    for (const auto& c : comps) {
        if (!std::isfinite(c.weight) || c.weight < 0.0)
            throw input_error("negative or non-finite weight");
        total += c.weight;
    }
    if (!(total > 0.0))
        throw input_error("weights sum to zero");
    for (auto& c : comps)
        c.weight /= total;
    // guard the 1e-12 check against rounding in long lists
    double again = 0.0;
    for (const auto& c : comps)
        again += c.weight;
    if (std::abs(again - 1.0) > 1e-13) {
        for (auto& c : comps)
            c.weight /= again;
    }
    return mixture(std::move(comps));
}

double mixture::density(double x) const
{
    if (!std::isfinite(x))
        throw input_error("density evaluated at a non-finite point");
    double s = 0.0;
    for (std::size_t u = 0; u < comps_.size(); ++u) {
        if (comps_[u].weight < min_active_weight)
            continue;
        s += comps_[u].weight * psi_sigma(x - comps_[u].mean, sigma_[u]);
    }
    return s;
}

double mixture::log_density(double x) const
{
    if (!std::isfinite(x))
        throw input_error("density evaluated at a non-finite point");
    double best = -std::numeric_limits<double>::infinity();
    const std::size_t m = comps_.size();
    double terms[64];
    std::vector<double> big;
    double* t = terms;
    if (m > 64) {
        big.resize(m);
        t = big.data();
    }
    for (std::size_t u = 0; u < m; ++u) {
        const double z = (x - comps_[u].mean) / sigma_[u];
        t[u] = log_coef_[u] - z * z;
        best = std::max(best, t[u]);
    }
    if (!std::isfinite(best))
        return best;
    double s = 0.0;
    for (std::size_t u = 0; u < m; ++u)
        s += std::exp(t[u] - best);
    return best + std::log(s);
}

double eval_density(const mixture& mix, double x) { return mix.density(x); }
double eval_log_density(const mixture& mix, double x) { return mix.log_density(x); }

void check_sample(const sample& s)
{
    if (s.values.empty())
        throw input_error("sample is empty");
    for (std::size_t i = 0; i < s.values.size(); ++i)
        if (!std::isfinite(s.values[i]))
            throw input_error("sample value " + std::to_string(i) + " is not finite");
}

double empirical_contrast(const mixture& mix, const sample& s)
{
    check_sample(s);
    double acc = 0.0;
    for (std::size_t i = 0; i < s.values.size(); ++i) {
        const double l = mix.log_density(s.values[i]);
        if (!std::isfinite(l))
            throw numeric_error("density underflows to zero at sample index " + std::to_string(i),
                                static_cast<long>(i));
        acc += l;
    }
    return -acc / static_cast<double>(s.values.size());
}

sample draw_sample(const mixture& mix, std::size_t n, std::uint64_t seed)
{
    if (n == 0)
        throw input_error("draw_sample needs n >= 1");
    std::mt19937_64 gen(seed);
    std::vector<double> w;
    for (const auto& c : mix.components())
        w.push_back(c.weight);
    std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
    std::normal_distribution<double> z(0.0, 1.0);
    sample s;
    s.seed = seed;
    s.values.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& c = mix[pick(gen)];
        s.values.push_back(c.mean + draw_sd(std::sqrt(c.variance)) * z(gen));
    }
    return s;
}

clustering map_cluster(const mixture& mix, const sample& s)
{
    check_sample(s);
    const std::size_t m = mix.size();
    clustering out;
    out.labels.resize(s.values.size());
    out.posteriors.assign(s.values.size(), std::vector<double>(m, 0.0));
    std::vector<double> lt(m);
    for (std::size_t i = 0; i < s.values.size(); ++i) {
        const double x = s.values[i];
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t u = 0; u < m; ++u) {
            const auto& c = mix[u];
            lt[u] = c.weight < min_active_weight
                        ? -std::numeric_limits<double>::infinity()
                        : std::log(c.weight) + log_psi_sigma(x - c.mean, std::sqrt(c.variance));
            best = std::max(best, lt[u]);
        }
        if (!std::isfinite(best))
            throw numeric_error("all-zero posterior row at index " + std::to_string(i),
                                static_cast<long>(i));
        double total = 0.0;
        for (std::size_t u = 0; u < m; ++u)
            total += (out.posteriors[i][u] = std::exp(lt[u] - best));
        std::size_t arg = 0;
        for (std::size_t u = 0; u < m; ++u) {
            out.posteriors[i][u] /= total;
            if (lt[u] > lt[arg])
                arg = u;
        }
        out.labels[i] = arg;
    }
    return out;
}

std::vector<std::size_t> membership_report::failing() const
{
    std::vector<std::size_t> out;
    for (const auto& c : components)
        if (!c.mean_ok || !c.variance_ok)
            out.push_back(c.index);
    return out;
}

membership_report validate_membership(const mixture& mix, const sieve_spec& spec)
{
    membership_report rep;
    rep.count_ok = mix.size() <= static_cast<std::size_t>(spec.m);
    rep.pass = rep.count_ok;
    for (std::size_t u = 0; u < mix.size(); ++u) {
        component_check c;
        c.index = u;
        c.mean_ok = std::abs(mix[u].mean) <= spec.mu_bound;
        c.variance_ok = mix[u].variance >= spec.lambda_low && mix[u].variance <= spec.lambda_bar;
        rep.pass = rep.pass && c.mean_ok && c.variance_ok;
        rep.components.push_back(c);
    }
    return rep;
}

nlohmann::json mixture_to_json(const mixture& mix)
{
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& c : mix.components())
        arr.push_back({{"weight", c.weight}, {"mean", c.mean}, {"variance", c.variance}});
    return {{"components", arr}};
}

mixture mixture_from_json(const nlohmann::json& j)
{
    if (!j.is_object() || !j.contains("components") || !j["components"].is_array())
        throw input_error("mixture JSON needs a \"components\" array");
    std::vector<component> comps;
    for (const auto& c : j["components"]) {
        if (!c.contains("weight") || !c.contains("mean") || !c.contains("variance"))
            throw input_error("mixture component needs weight, mean and variance");
        comps.push_back({c["weight"].get<double>(), c["mean"].get<double>(),
                         c["variance"].get<double>()});
    }
    return mixture(std::move(comps));
}

sample read_sample(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw input_error("cannot open sample file " + path);
    sample s;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos)
            continue;
        auto e = line.find_last_not_of(" \t\r");
        std::string tok = line.substr(b, e - b + 1);
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(tok, &used);
        } catch (const std::exception&) {
            throw input_error(path + ":" + std::to_string(lineno) + ": not a number");
        }
        if (used != tok.size() || !std::isfinite(v))
            throw input_error(path + ":" + std::to_string(lineno) + ": not a finite number");
        s.values.push_back(v);
    }
    check_sample(s);
    return s;
}

std::string format_sample(const sample& s)
{
    std::string out;
    for (double v : s.values) {
        out += format_double(v);
        out += '\n';
    }
    return out;
}

}  // namespace msieve
