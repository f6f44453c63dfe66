#pragma once

#include "msieve/divergence.hpp"
#include "msieve/em.hpp"
#include "msieve/errors.hpp"
#include "msieve/sieve.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace msieve {

inline constexpr const char* tool_version = "1.0.0";

enum class command_kind { select, cluster, rate, approx, lowerbound, audit };
command_kind parse_command(const std::string& name);
std::string to_string(command_kind c);

//! Parsed experiment configuration. Relative paths resolve against the config file directory.
struct experiment_config {
    command_kind command = command_kind::select;
    nlohmann::json raw;               //!< effective config (overrides applied, output dir removed)
    std::filesystem::path base_dir;
    std::filesystem::path out_dir;
    std::uint64_t seed = 0;
    unsigned threads = 0;
};

//! Reads the JSON file and applies the seed and output-directory overrides.
//! The config must carry a seed unless one is given on the command line.
experiment_config load_config(const std::filesystem::path& path, command_kind command,
                              std::optional<std::uint64_t> seed_override = std::nullopt,
                              std::optional<std::filesystem::path> out_override = std::nullopt);
experiment_config config_from_json(const nlohmann::json& j, command_kind command, const std::filesystem::path& base_dir,
                                   const std::filesystem::path& out_dir);

sieve_config sieve_from_json(const nlohmann::json& j);
em_config em_from_json(const nlohmann::json& j, std::uint64_t seed);

//! Truth density plus sampler, parsed from {"family": "mixture" | "split_gaussian" | "perturbation", ...}.
struct truth_model {
    std::string name;
    numeric_density density;
    sampler_fn sampler;
};
truth_model truth_from_json(const nlohmann::json& j);

struct run_output {
    std::vector<std::string> files;  //!< names relative to the output directory
    std::vector<std::pair<std::string, std::uint64_t>> seeds;
    nlohmann::json summary;
    int exit_code = 0;               //!< 4 when an audit fails
};

run_output run_select(const experiment_config& cfg);
run_output run_cluster(const experiment_config& cfg);
run_output run_rate(const experiment_config& cfg);
run_output run_approx(const experiment_config& cfg);
run_output run_lowerbound(const experiment_config& cfg);
run_output run_audit(const experiment_config& cfg);

//! Dispatches on cfg.command and writes manifest.json next to the outputs.
run_output run_experiment(const experiment_config& cfg);

//! Machine-readable description of a failure.
nlohmann::json error_json(const std::exception& e);

}  // namespace msieve
