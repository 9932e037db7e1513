#pragma once

#include "curvlab/funcexpr.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace curvlab {

enum class Preset { euclidean, hyperbolic, custom };

std::string_view preset_name(Preset p);

/// Below this radius the coordinate formulas for the Laplacian of r and the
/// scalar curvature are replaced by their pole expansions.
inline constexpr double kPoleRadius = 1e-6;

/// Sign tolerance for the curvature checks.
inline constexpr double kCurvatureTolerance = 1e-12;

/// Area of the unit (n-1)-sphere, 2 pi^{n/2} / Gamma(n/2).
double sphere_area_unit(int n);

/// Rotationally symmetric manifold with metric dr^2 + h(r)^2 dTheta^2 in
/// dimension n >= 3. Immutable; copies are cheap.
///
/// The presets carry closed forms for log h, the Laplacian of r and the
/// curvatures, so they stay finite at radii where h itself overflows.
class ModelManifold {
public:
    static ModelManifold euclidean(int n);
    /// Constant curvature -c^2, warp sinh(c r)/c.
    static ModelManifold hyperbolic(int n, double c);
    /// Arbitrary warp; checked for h(0) = 0 and h'(0) = 1.
    static ModelManifold custom(int n, RadialFn warp, std::string description = {});

    /// Replaces the derived scalar curvature. The manifold's verdicts are then
    /// no longer tied to its metric, which callers should surface.
    ModelManifold with_k_override(RadialFn k, std::string description = {}) const;

    int dim() const noexcept { return n_; }
    Preset preset() const noexcept { return preset_; }
    /// Curvature scale of the hyperbolic preset (0 otherwise).
    double scale() const noexcept { return c_; }
    const std::string& description() const noexcept { return description_; }
    bool has_k_override() const noexcept { return k_override_.has_value(); }
    const std::string& k_override_description() const noexcept { return k_override_text_; }

    /// omega_{n-1}: area of the unit sphere.
    double omega_sphere() const noexcept { return omega_sphere_; }
    /// omega_n: volume of the unit ball.
    double omega_ball() const noexcept { return omega_ball_; }

    Jet2 warp(double r) const;
    /// log h(r), computed without forming h for the presets.
    double log_warp(double r) const;
    /// h'''(0), used by the pole expansions.
    double warp_third_at_pole() const noexcept { return h3_pole_; }

    /// Radial and tangential sectional curvature, -h''/h and (1 - h'^2)/h^2.
    std::pair<double, double> sectional_curvatures(double r) const;

    const std::optional<RadialFn>& k_override() const noexcept { return k_override_; }

private:
    ModelManifold(int n, Preset preset, double c, RadialFn warp, std::string description);

    int n_;
    Preset preset_;
    double c_ = 0.0;
    RadialFn warp_;
    std::string description_;
    std::optional<RadialFn> k_override_;
    std::string k_override_text_;
    double omega_sphere_;
    double omega_ball_;
    double h3_pole_ = 0.0;
};

/// V(r) = omega_{n-1} h(r)^{n-1}, the area of the geodesic sphere.
double volume_sphere(const ModelManifold& m, double r);

/// log V(r).
double log_volume_sphere(const ModelManifold& m, double r);

/// Laplacian of the distance function, (n-1) h'/h = V'/V. PoleError at r <= 0.
double laplacian_r(const ModelManifold& m, double r);

/// Scalar curvature of the warped product:
///   k = -2(n-1) h''/h + (n-1)(n-2)(1 - h'^2)/h^2.
/// Below kPoleRadius the limit -n(n-1) h'''(0) is returned.
double scalar_curvature(const ModelManifold& m, double r);

/// Volume of the geodesic ball, the integral of V over [0, r].
double ball_volume(const ModelManifold& m, double r, double rel_tol = 1e-11);

struct CurvatureSample {
    double r;
    double radial;
    double tangential;
};

struct ValidityReport {
    bool valid = true;
    /// Tightest c with -c^2 <= both curvatures on the grid; empty when invalid.
    std::optional<double> pinching;
    double min_curvature = 0.0;
    double max_curvature = 0.0;
    std::vector<CurvatureSample> samples;
    std::vector<CurvatureSample> violations;
    /// First grid radius with h(r) <= 0, where the scan stopped.
    std::optional<double> degenerate_at;
};

/// Checks nonpositive sectional curvature on r_i = r_max i / n_grid, i = 1..n_grid.
/// A warp that stops being positive makes the report invalid.
ValidityReport check_ch(const ModelManifold& m, double r_max, int n_grid);

/// Unit vector in R^n; only produced by normalization.
class UnitVector {
public:
    /// Normalizes v; throws InvalidArgument for a zero or non-finite vector.
    static UnitVector normalize(std::vector<double> v);

    std::size_t dim() const noexcept { return v_.size(); }
    double operator[](std::size_t i) const { return v_[i]; }
    std::span<const double> components() const noexcept { return v_; }

private:
    explicit UnitVector(std::vector<double> v) : v_(std::move(v)) {}
    std::vector<double> v_;
};

/// f(r xi) on the manifold, for the direction xi of the unit sphere.
using DirectionFn = std::function<double(double r, const UnitVector& xi)>;

struct SphereAverage {
    double mean;
    double std_error;
};

/// Monte Carlo mean of f over the geodesic sphere S_r. Directions are drawn
/// uniformly on the unit sphere; the warp factor cancels in the average.
SphereAverage sphere_average(const ModelManifold& m, const DirectionFn& f, double r, int n_samples,
                             std::uint64_t seed);

} // namespace curvlab
