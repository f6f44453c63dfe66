#pragma once

#include "msieve/sieve_spec.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace msieve {

struct component {
    double weight = 1.0;
    double mean = 0.0;
    double variance = 1.0;  //!< sigma^2; the draw variance is sigma^2 / 2
};

//! Finite mixture sum_u p_u psi_{sigma_u}(x - mu_u).
class mixture {
public:
    mixture() = default;
    //! Validates: nonempty, weights in [0,1] summing to 1 within 1e-12, variances > 0.
    explicit mixture(std::vector<component> comps);
    //! Rescales the weights to sum to one before validating.
    static mixture normalized(std::vector<component> comps);

    const std::vector<component>& components() const { return comps_; }
    std::size_t size() const { return comps_.size(); }
    const component& operator[](std::size_t i) const { return comps_[i]; }

    double density(double x) const;
    double log_density(double x) const;

private:
    std::vector<component> comps_;
    std::vector<double> sigma_;
    std::vector<double> log_coef_;  // ln p_u - ln sigma_u - ln sqrt(pi)
};

inline constexpr double min_active_weight = 1e-15;

double eval_density(const mixture& mix, double x);
double eval_log_density(const mixture& mix, double x);

struct sample {
    std::vector<double> values;
    std::optional<std::uint64_t> seed;
};

//! Validates n >= 1 and finite values.
void check_sample(const sample& s);

double empirical_contrast(const mixture& mix, const sample& s);

sample draw_sample(const mixture& mix, std::size_t n, std::uint64_t seed);

struct clustering {
    std::vector<std::size_t> labels;
    std::vector<std::vector<double>> posteriors;  //!< n rows of m entries
};
clustering map_cluster(const mixture& mix, const sample& s);

struct component_check {
    std::size_t index = 0;
    bool mean_ok = true;
    bool variance_ok = true;
};
struct membership_report {
    bool pass = true;
    bool count_ok = true;
    std::vector<component_check> components;
    std::vector<std::size_t> failing() const;
};
membership_report validate_membership(const mixture& mix, const sieve_spec& spec);

nlohmann::json mixture_to_json(const mixture& mix);
mixture mixture_from_json(const nlohmann::json& j);

sample read_sample(const std::string& path);
std::string format_sample(const sample& s);

}  // namespace msieve
