#pragma once

#include "curvlab/funcexpr.hpp"
#include "curvlab/model_manifold.hpp"
#include "curvlab/quadrature.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace curvlab {

/// Radii on which "for r large" conditions are inspected: a geometric grid
/// from r_min to the scan horizon r_max.
struct ScanPolicy {
    double r_min = 0.01;
    double r_max = 100.0;
    int n_grid = 64;
    /// A tail condition needs at least this many trailing grid points.
    int min_tail_points = 16;
};

std::vector<double> scan_grid(const ScanPolicy& scan);

struct CriteriaPolicy {
    ScanPolicy scan;
    ClassifyPolicy classify;
    LimitPolicy limit;
    /// A finite limit beta counts as positive above this value.
    double beta_tol = 1e-6;
    /// Lower end of the improper integrals of the integral criteria.
    double integral_start = 1.0;
    /// Grid for the curvature checks, over (0, scan.r_max].
    int ch_grid = 200;
    /// Required increase of V / r^{n-2+delta} from r_max/4 to r_max.
    double growth_factor = 1.1;
};

enum class VerdictKind { inf_zero_forced, no_complete_metric, not_applicable, inconclusive };

std::string_view verdict_kind_name(VerdictKind k);

struct NamedImproper {
    std::string name;
    ImproperResult result;
};

struct NamedLimit {
    std::string name;
    LimitResult result;
};

struct NamedScan {
    std::string name;
    std::vector<TracePoint> samples;
};

/// Everything that fed a verdict.
struct CriterionReport {
    /// Start of the scanned tail on which int_{B(r)} K dmu >= 0.
    std::optional<double> tail_start;
    /// Start of the scanned tail on which the nested integral is positive.
    std::optional<double> a_found;
    std::optional<double> pinching_c;
    std::vector<NamedImproper> integrals;
    std::vector<NamedLimit> limits;
    std::vector<NamedScan> scans;
};

struct Verdict {
    /// Role name of the criterion, e.g. "inf_zero_integral".
    std::string criterion;
    VerdictKind kind = VerdictKind::inconclusive;
    /// Clauses whose hypotheses all held ("a", "b"); empty unless fired.
    std::vector<std::string> clauses;
    /// What a firing verdict asserts, or why it did not fire.
    std::string statement;
    CriterionReport evidence;

    bool fired() const noexcept
    {
        return kind == VerdictKind::inf_zero_forced || kind == VerdictKind::no_complete_metric;
    }
    bool has_clause(std::string_view c) const;
};

/// Integral criterion for inf u = 0 over positive supersolutions.
/// (a) int_0^inf (1/V(s)) int_{B(s)} K dmu ds = +inf.
/// (b) int_{B(r)} K dmu >= 0 for r large and the same integral of |k| diverges.
Verdict check_inf_zero_integral(const ModelManifold& m, const RadialFn& k, const CriteriaPolicy& policy = {});

/// Limit form of the criterion above. With int_{B(r)} K dmu >= 0 for r large:
/// (a) int_{B(r)} K dmu -> +inf and r^2 K / (r Delta r - 1) -> beta > 0 or +inf;
/// (b) the same with |k| in both places.
Verdict check_inf_zero_limit(const ModelManifold& m, const RadialFn& k, const CriteriaPolicy& policy = {});

/// Nonexistence of complete conformal metrics with scalar curvature K:
/// I(r) > 0 for r >= a and int_a^inf I(r)^{-1/2} dr < inf.
Verdict check_no_complete_metric_integral(const ModelManifold& m, const RadialFn& k,
                                          const CriteriaPolicy& policy = {});

/// Pinched version: -c^2 <= sec <= 0 and K / r^{1+delta} -> +inf, delta > 0.
Verdict check_no_complete_metric_pinched(const ModelManifold& m, const RadialFn& k, double delta,
                                         const CriteriaPolicy& policy = {});

struct VolumeGrowthReport {
    double delta;
    /// V(r) / r^{n-2+delta} on the grid; may be +inf where V overflows.
    std::vector<TracePoint> ratio;
    bool nondecreasing = true;
    /// First grid radius where the ratio decreased.
    std::optional<double> first_decrease;
    /// ratio(r_max) / ratio(r_max / 4).
    double growth = 0.0;
    double required_growth = 0.0;
    bool growth_ok = false;
    bool pass() const noexcept { return nondecreasing && growth_ok; }
};

/// ratio(hi) / ratio(lo) for ratio = V(r) / r^{n-2+delta}, computed in logs.
double growth_ratio(const ModelManifold& m, double delta, double lo, double hi);

/// Volume growth V(r) / r^{n-2+delta} on r_i = r_max i / n_grid for delta in [0, 1).
/// Throws DeltaOutOfRange outside that range.
VolumeGrowthReport verify_volume_growth(const ModelManifold& m, double delta, double r_max, int n_grid,
                                        double growth_factor = CriteriaPolicy{}.growth_factor);

} // namespace curvlab
