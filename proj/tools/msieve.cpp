#include "msieve/experiments.hpp"
#include "msieve/util.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

int main(int argc, char** argv)
{
    CLI::App app{"Penalized Gaussian-mixture sieve toolkit"};
    app.set_version_flag("--version", msieve::tool_version);
    app.require_subcommand(1);

    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    for (const char* name : {"select", "cluster", "rate", "approx", "lowerbound", "audit"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config, "experiment config (JSON)")->required();
        sub->add_option("--seed", seed, "root seed override");
        sub->add_option("--out", out, "output directory override");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    const std::string command = app.get_subcommands().front()->get_name();

    std::filesystem::path out_dir;
    try {
        std::optional<std::filesystem::path> out_path;
        if (out)
            out_path = std::filesystem::path(*out);
        const auto cfg = msieve::load_config(config, msieve::parse_command(command), seed, out_path);
        out_dir = cfg.out_dir;
        const auto res = msieve::run_experiment(cfg);
        std::cout << res.summary.dump() << "\n";
        return res.exit_code;
    } catch (const std::exception& e) {
        const auto j = msieve::error_json(e);
        std::cerr << j.dump() << "\n";
        if (!out_dir.empty() && std::filesystem::is_directory(out_dir)) {
            try {
                msieve::write_file_atomic((out_dir / "error.json").string(), j.dump(2) + "\n");
            } catch (...) {
            }
        }
        return j.value("exit_code", 3);
    }
}
