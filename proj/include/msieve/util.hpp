#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

namespace msieve {

//! Child seed from a root seed, a task name and indices (FNV-1a + splitmix64).
std::uint64_t derive_seed(std::uint64_t root, std::string_view task,
                          std::initializer_list<std::uint64_t> indices = {});

//! Thread budget: MSIEVE_THREADS if set, else hardware concurrency, capped by `requested` when > 0.
unsigned thread_budget(unsigned requested = 0);

//! Runs fn(i) for i in [0, count) on up to `threads` workers. Exceptions from
//! fn propagate (the one with the smallest index wins).
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn);

//! Shortest decimal form that round-trips a double.
std::string format_double(double x);

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::string& path);

//! Write through a temporary file in the same directory, then rename.
void write_file_atomic(const std::string& path, std::string_view contents);

//! Least squares fit y = a + b x. Returns {a, b, se_b}.
struct line_fit {
    double intercept = 0.0;
    double slope = 0.0;
    double slope_se = 0.0;
    std::size_t points = 0;
};
line_fit fit_line(const std::vector<double>& x, const std::vector<double>& y);

//! Two sided 95% Student t quantile with `dof` degrees of freedom.
double t_quantile_975(double dof);

}  // namespace msieve
