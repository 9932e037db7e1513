#include "curvlab/config.hpp"
#include "curvlab/errors.hpp"
#include "curvlab/run.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <string>

int main(int argc, char** argv)
{
    using namespace curvlab;

    CLI::App app{"Curvature criteria on rotationally symmetric manifolds"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    struct Options {
        std::string config;
        std::optional<std::string> out;
        std::optional<std::string> format;
        std::optional<std::uint64_t> seed;
    } opts;

    const std::map<Subcommand, std::string> help{
        {Subcommand::geometry, "series of h, V, Delta r, k and ball volume"},
        {Subcommand::check, "evaluate the curvature criteria and emit verdicts"},
        {Subcommand::solve, "integrate the radial scalar curvature equation"},
        {Subcommand::verify, "lower bound, conformal length and infimum on a solution"},
        {Subcommand::report, "everything above in one JSON document"},
    };
    std::map<CLI::App*, Subcommand> subs;
    for (const auto& [cmd, text] : help) {
        auto* sub = app.add_subcommand(std::string(subcommand_name(cmd)), text);
        sub->add_option("--config", opts.config, "configuration file")->required();
        sub->add_option("--out", opts.out, "output file (default: standard output)");
        sub->add_option("--format", opts.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
        sub->add_option("--seed", opts.seed, "seed for the Monte Carlo spot check");
        subs.emplace(sub, cmd);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    Subcommand cmd{};
    for (const auto& [sub, c] : subs) {
        if (sub->parsed()) cmd = c;
    }

    Config cfg;
    try {
        cfg = load_config(opts.config);
    } catch (const Error& e) {
        std::cerr << "curvlab " << subcommand_name(cmd) << ": error: " << e.what() << '\n';
        return 1;
    }

    RunFlags flags;
    flags.out = opts.out;
    flags.seed = opts.seed;
    if (opts.format) flags.format = *opts.format == "csv" ? OutputFormat::csv : OutputFormat::json;
    return run(cmd, std::move(cfg), flags, std::cout, std::cerr);
}
