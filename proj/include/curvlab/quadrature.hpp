#pragma once

#include "curvlab/funcexpr.hpp"
#include "curvlab/model_manifold.hpp"

#include <map>
#include <string>
#include <vector>

namespace curvlab {

struct QuadResult {
    double value = 0.0;
    double error_estimate = 0.0;
    int n_evals = 0;
    /// The subdivision budget ran out; value is the best available estimate.
    bool hit_limit = false;
};

inline constexpr int kMaxSubdivisions = 2000;

/// Adaptive Gauss-Kronrod (7/15) quadrature on [a, b] with global bisection of
/// the worst interval. Stops once the error estimate is below
/// max(abs_tol, rel_tol |value|) or at the round-off floor. Endpoints are
/// never evaluated, so integrable endpoint singularities are allowed.
QuadResult integrate(const ScalarFn& f, double a, double b, double rel_tol = 1e-9, double abs_tol = 0.0,
                     int max_subdivisions = kMaxSubdivisions);

/// Same, after splitting [a, b] at a + 1, a + 2, a + 4, ... so that long
/// intervals are resolved on every scale.
QuadResult integrate_graded(const ScalarFn& f, double a, double b, double rel_tol = 1e-9, double abs_tol = 0.0);

/// Mirror of integrate_graded with the pieces refined towards b.
QuadResult integrate_graded_to_end(const ScalarFn& f, double a, double b, double rel_tol = 1e-9,
                                   double abs_tol = 0.0);

/// Below this radius the ball mean is taken from its expansion at the pole.
inline constexpr double kBallSeriesRadius = 1e-4;

/// Mean of K over geodesic balls, m(s) = (1/V(s)) int_{B(s)} K dmu.
///
/// Works with the scaled quantity J(s) = int_0^s K(t) (h(t)/h(s))^{n-1} dt,
/// which is exactly m(s) and never forms V, and caches J at every radius it has
/// seen so later radii only integrate from the nearest cached point:
///   J(s2) = J(s1) (h(s1)/h(s2))^{n-1} + int_{s1}^{s2} K(t) (h(t)/h(s2))^{n-1} dt.
/// Not thread-safe; create one per thread.
class BallAverage {
public:
    BallAverage(ModelManifold m, ScalarFn k, double rel_tol = 1e-12);

    double mean(double s);
    /// int_{B(s)} K dmu. Throws OverflowError when not representable.
    double ball_integral(double s);

    const ModelManifold& manifold() const noexcept { return m_; }

private:
    ModelManifold m_;
    ScalarFn k_;
    double rel_tol_;
    std::map<double, double> cache_;
};

/// I(r) = int_0^r m(s) ds with m the ball mean of K, cached like BallAverage.
class NestedIntegral {
public:
    NestedIntegral(ModelManifold m, ScalarFn k, double rel_tol = 1e-12);

    double operator()(double r);
    BallAverage& ball() noexcept { return ball_; }

private:
    BallAverage ball_;
    double rel_tol_;
    std::map<double, double> cache_;
};

double mean_K_ball(const ModelManifold& m, const RadialFn& k, double s);

/// int_0^r (1/V(s)) int_{B(s)} K dmu ds, without the 1/(n-1) factor.
double nested_I(const ModelManifold& m, const RadialFn& k, double r);

inline ScalarFn value_of(RadialFn f)
{
    return [f = std::move(f)](double r) { return f(r).value; };
}

// ---------------------------------------------------------------------------
// Behaviour at infinity

struct ClassifyPolicy {
    int max_doublings = 20;
    /// Agreement tolerance for the convergence rules, also the slack allowed
    /// in "nondecreasing" for the divergence rule.
    double tol = 1e-6;
    /// Reported in the rationale when the partial integrals exceed it.
    double big = 1e8;
    /// Largest increment ratio accepted as geometric decay.
    double max_ratio = 0.99;
    double quad_rel_tol = 1e-10;
};

enum class ImproperKind { convergent, divergent, inconclusive };

std::string_view improper_kind_name(ImproperKind k);

struct TracePoint {
    double r;
    double value;
};

struct ImproperResult {
    ImproperKind kind = ImproperKind::inconclusive;
    /// Limit for convergent results.
    double value = 0.0;
    /// +1 or -1 for divergent results.
    int sign = 0;
    /// Partial integrals from a to R_k, strictly increasing in R.
    std::vector<TracePoint> trace;
    std::string rationale;
    /// Set when an overflow ended the truncation sequence early.
    bool truncated = false;
};

/// Classifies int_a^inf g from partial integrals at R_k = a 2^k.
///
/// Divergent: the last three doubling increments share a strict sign and do
/// not shrink (|d_k| >= (1 - tol)|d_{k-1}|), so the tail cannot vanish.
/// Convergent: the last three partial sums agree within tol (1 + |S|), or the
/// increments decay geometrically (ratios in (-max_ratio, max_ratio)) and the
/// Aitken-extrapolated limits of the last three steps agree within
/// tol (1 + |A|). Everything else is inconclusive.
///
/// An OverflowError after at least four truncations ends the sequence and the
/// rules run on what was collected; other evaluation errors propagate.
ImproperResult classify_improper(const ScalarFn& g, double a, const ClassifyPolicy& policy = {});

struct LimitPolicy {
    double r0 = 1.0;
    int doublings = 60;
    double big = 1e8;
    double tol = 1e-6;
    /// Power-law growth at least this fast counts as divergence to infinity.
    double min_growth_exponent = 0.05;
    int window = 6;
};

enum class LimitKind { finite, pos_infinite, neg_infinite, inconclusive };

std::string_view limit_kind_name(LimitKind k);

struct LimitResult {
    LimitKind kind = LimitKind::inconclusive;
    double value = 0.0;
    std::vector<TracePoint> trace;
    std::string rationale;
    bool truncated = false;
};

/// Limit of g at infinity from samples at r0 2^j.
///
/// Infinite: the last `window` samples are strictly monotone and either pass
/// +-big or grow like a power with exponent >= min_growth_exponent.
/// Finite: the last three samples agree within tol (1 + |L|), or the sample
/// increments contract and the last three Aitken estimates agree.
LimitResult limit_at_infinity(const ScalarFn& g, const LimitPolicy& policy = {});

} // namespace curvlab
