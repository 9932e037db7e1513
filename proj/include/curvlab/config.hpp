#pragma once

#include "curvlab/criteria.hpp"
#include "curvlab/funcexpr.hpp"
#include "curvlab/model_manifold.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace curvlab {

enum class OutputFormat { json, csv };

std::string_view format_name(OutputFormat f);

struct ManifoldConfig {
    int n = 3;
    /// Exactly one of preset and h is set.
    std::optional<Preset> preset;
    double c = 1.0;
    std::optional<std::string> h;
    std::optional<std::string> k_override;
};

struct PolicyConfig {
    double quad_rel_tol = 1e-10;
    double tol = 1e-6;
    double big = 1e8;
    int doublings = 20;
    double beta_tol = 1e-6;
    double R_max = 100.0;
    int grid = 64;
    int tail_points = 16;
    int ch_grid = 200;
    double growth_factor = 1.1;
    double delta = 0.5;
    std::uint64_t seed = 42;
    int mc_samples = 4000;
    double u0 = 1.0;
    double r_max = 10.0;
    double ode_tol = 1e-10;
    /// Start of the conformal length integral.
    double a = 0.0;
    int geometry_points = 100;
};

struct OutputConfig {
    OutputFormat format = OutputFormat::json;
    std::optional<std::string> path;
};

struct Config {
    ManifoldConfig manifold;
    std::string K;
    PolicyConfig policy;
    OutputConfig output;
};

/// Parses the configuration text:
///
///   [manifold]
///   n = 3
///   preset = hyperbolic   # or: h = "sinh(r)"
///   c = 1.0
///   [curvature]
///   K = "r^2"
///
/// Tokens may share a line. Values are bare words or double-quoted strings;
/// '#' and ';' start comments. Throws ParseError (with line) for malformed
/// text and ValidationError (with section.key) for bad or missing values.
Config parse_config(std::string_view text);

/// Reads and parses a file; ConfigError when it cannot be read.
Config load_config(const std::string& path);

ModelManifold build_manifold(const Config& cfg);
RadialFn build_curvature(const Config& cfg);
CriteriaPolicy criteria_policy(const Config& cfg);

} // namespace curvlab
