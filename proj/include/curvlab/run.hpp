#pragma once

#include "curvlab/config.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>

namespace curvlab {

enum class Subcommand { geometry, check, solve, verify, report };

std::string_view subcommand_name(Subcommand s);

/// Command-line overrides of the config's output and seed.
struct RunFlags {
    std::optional<std::string> out;
    std::optional<OutputFormat> format;
    std::optional<std::uint64_t> seed;
};

inline constexpr std::string_view kVersion = "1.0.0";

/// Renders the subcommand's document (JSON or CSV text). Throws Error.
std::string render(Subcommand cmd, const Config& cfg, OutputFormat format);

/// Runs a subcommand and writes its document to the output path, or to `out`
/// when no path is set. Returns 0 on success, 1 on evaluation or config
/// errors and 2 on internal failures, with a diagnostic on `err`.
int run(Subcommand cmd, Config cfg, const RunFlags& flags, std::ostream& out, std::ostream& err);

} // namespace curvlab
