#pragma once

#include "curvlab/funcexpr.hpp"
#include "curvlab/model_manifold.hpp"
#include "curvlab/quadrature.hpp"

#include <optional>
#include <string>
#include <vector>

namespace curvlab {

/// Exponents of c_n Delta u - k u + K u^sigma = 0 in dimension n.
struct ConformalExponents {
    int n;
    /// 4(n-1)/(n-2)
    double c_n;
    /// (n+2)/(n-2)
    double sigma;
    /// 1 - sigma = -4/(n-2)
    double alpha;

    static ConformalExponents of(int n);
};

enum class SolveStatus { completed, blow_up, underflow, step_failure };

std::string_view solve_status_name(SolveStatus s);

inline constexpr double kBlowUpThreshold = 1e12;
inline constexpr double kUnderflowThreshold = 1e-12;

/// Radial profile u on a strictly increasing grid with u, u', u'' at every
/// node. Between nodes u is the quintic Hermite interpolant of that data.
class Solution {
public:
    /// Wraps sampled data. Throws InvalidArgument for mismatched sizes, a grid
    /// that is not strictly increasing, or u <= 0.
    static Solution from_samples(std::vector<double> grid, std::vector<double> u, std::vector<double> u_prime,
                                 std::vector<double> u_second);

    const std::vector<double>& grid() const noexcept { return grid_; }
    const std::vector<double>& u() const noexcept { return u_; }
    const std::vector<double>& u_prime() const noexcept { return up_; }
    const std::vector<double>& u_second() const noexcept { return upp_; }

    SolveStatus status() const noexcept { return status_; }
    /// Radius at which integration stopped (the last grid point when completed).
    double stop_radius() const noexcept { return stop_radius_; }
    double u0() const noexcept { return u_.front(); }
    /// Sum of the accepted local error estimates of u.
    double error_estimate() const noexcept { return error_estimate_; }
    /// Manifold and curvature the solution belongs to.
    const std::string& problem() const noexcept { return problem_; }

    double r_end() const noexcept { return grid_.back(); }
    /// Interpolated jet; throws InvalidArgument outside [grid.front(), grid.back()].
    Jet2 operator()(double r) const;
    RadialFn as_radial() const;

private:
    friend Solution solve_radial(const ModelManifold&, const RadialFn&, double, double, double, std::string_view);
    Solution() = default;

    std::vector<double> grid_;
    std::vector<double> u_;
    std::vector<double> up_;
    std::vector<double> upp_;
    SolveStatus status_ = SolveStatus::completed;
    double stop_radius_ = 0.0;
    double error_estimate_ = 0.0;
    std::string problem_;
};

/// Start radius of the Taylor expansion at the pole.
inline constexpr double kTaylorStart = 1e-4;

/// Integrates u'' = (k u - K u^sigma)/c_n - (Delta r) u' with u(0) = u0,
/// u'(0) = 0 by Dormand-Prince 5(4) with local tolerance tol (mixed absolute
/// and relative). The first step is the Taylor start at kTaylorStart.
/// Stops with blow_up once u > 1e12 or when the step size collapses while u
/// grows without bound, and with underflow once u < 1e-12.
Solution solve_radial(const ModelManifold& m, const RadialFn& k, double u0, double r_max, double tol,
                      std::string_view k_description = {});

enum class ResidualClass { solution, supersolution, subsolution, mixed };

std::string_view residual_class_name(ResidualClass c);

inline constexpr double kResidualTolerance = 1e-8;

struct ResidualReport {
    double max_abs = 0.0;
    /// Radius of max_abs.
    double at = 0.0;
    ResidualClass classification = ResidualClass::solution;
    std::vector<TracePoint> values;
};

/// R(r) = c_n Delta u - k u + K u^sigma on the grid. Supersolutions have
/// R <= 0 (with Delta u = u'' + (Delta r) u', and n u''(0) at the pole).
ResidualReport residual(const ModelManifold& m, const RadialFn& k, const RadialFn& u, const std::vector<double>& grid,
                        double tol_res = kResidualTolerance);

struct LowerBoundReport {
    /// min over the grid of v(r) - I(r)/(n-1), v = u^alpha.
    double min_margin = 0.0;
    double at = 0.0;
    bool holds = false;
    /// The residual classification is solution or supersolution.
    bool precondition_holds = false;
    ResidualClass classification = ResidualClass::mixed;
    double slack = 0.0;
    std::vector<TracePoint> margin;
};

/// Checks v(r) >= I(r)/(n-1) - slack for v = u^alpha on the solution grid.
LowerBoundReport verify_lower_bound(const ModelManifold& m, const RadialFn& k, const Solution& u,
                                    double slack = 1e-6);

enum class TailKind { finite, infinite, inconclusive };

std::string_view tail_kind_name(TailKind t);

struct LengthReport {
    /// int_a^{r_end} u^{2/(n-2)} dr, plus the extrapolated tail when finite.
    double length = 0.0;
    double body = 0.0;
    double tail_value = 0.0;
    TailKind tail = TailKind::inconclusive;
    /// Fitted decay u ~ r^{-p} over the last decade.
    std::optional<double> decay_exponent;
    std::string rationale;
};

/// Radial length of the conformal metric u^{4/(n-2)} g from r = a.
LengthReport conformal_length(const ModelManifold& m, const Solution& u, double a);

enum class InfTrend { decreasing_to_zero, bounded_below, inconclusive };

std::string_view inf_trend_name(InfTrend t);

struct InfReport {
    double inf_on_grid = 0.0;
    double at = 0.0;
    InfTrend trend = InfTrend::inconclusive;
    std::optional<double> decay_exponent;
};

/// Minimum of u over the grid and the trend over the last decade of radii.
InfReport inf_estimate(const Solution& u);

} // namespace curvlab
