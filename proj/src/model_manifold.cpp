#include "curvlab/model_manifold.hpp"

#include "curvlab/errors.hpp"
#include "curvlab/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <fmt/format.h>

namespace curvlab {

namespace {

constexpr double kWarpTolerance = 1e-9;
constexpr double kThirdDerivativeStep = 1e-4;

double finite_or_throw(double v, const char* what, double r)
{
    if (!std::isfinite(v)) {
        OverflowError e(fmt::format("{} is not finite", what));
        e.set_location(r);
        throw e;
    }
    return v;
}

void require_nonnegative_radius(double r)
{
    if (!(r >= 0.0)) throw InvalidArgument(fmt::format("radius must be nonnegative, got {}", r));
}

[[noreturn]] void non_positive_warp(double h, double r)
{
    NonPositiveWarp e(fmt::format("warp h = {} is not positive", h));
    e.set_location(r);
    throw e;
}

} // namespace

std::string_view preset_name(Preset p)
{
    switch (p) {
    case Preset::euclidean: return "euclidean";
    case Preset::hyperbolic: return "hyperbolic";
    case Preset::custom: return "custom";
    }
    return "unknown";
}

double sphere_area_unit(int n)
{
    if (n < 2) throw InvalidDimension(fmt::format("sphere area needs n >= 2, got {}", n));
    const double half = 0.5 * n;
    return 2.0 * std::pow(std::numbers::pi, half) / std::tgamma(half);
}

ModelManifold::ModelManifold(int n, Preset preset, double c, RadialFn warp, std::string description)
    : n_(n), preset_(preset), c_(c), warp_(std::move(warp)), description_(std::move(description))
{
    if (n < 3) throw InvalidDimension(fmt::format("dimension must be at least 3, got {}", n));
    omega_sphere_ = sphere_area_unit(n);
    omega_ball_ = omega_sphere_ / n;

    const Jet2 at_pole = warp_(0.0);
    if (std::fabs(at_pole.value) > kWarpTolerance || std::fabs(at_pole.d1 - 1.0) > kWarpTolerance) {
        throw InvalidWarp(fmt::format("warp must satisfy h(0) = 0 and h'(0) = 1, got h(0) = {}, h'(0) = {}",
                                      at_pole.value, at_pole.d1));
    }

    switch (preset_) {
    case Preset::euclidean: h3_pole_ = 0.0; break;
    case Preset::hyperbolic: h3_pole_ = c_ * c_; break;
    case Preset::custom:
        h3_pole_ = (warp_(kThirdDerivativeStep).d2 - at_pole.d2) / kThirdDerivativeStep;
        break;
    }
}

ModelManifold ModelManifold::euclidean(int n)
{
    return ModelManifold(n, Preset::euclidean, 0.0, [](double r) { return Jet2::variable(r); }, "r");
}

ModelManifold ModelManifold::hyperbolic(int n, double c)
{
    if (!(c > 0.0) || !std::isfinite(c))
        throw InvalidArgument(fmt::format("hyperbolic scale must be positive, got {}", c));
    auto warp = [c](double r) {
        const double s = std::sinh(c * r);
        const double ch = std::cosh(c * r);
        if (!std::isfinite(s) || !std::isfinite(ch)) {
            OverflowError e("hyperbolic warp overflows");
            e.set_location(r);
            throw e;
        }
        return Jet2{s / c, ch, c * s};
    };
    return ModelManifold(n, Preset::hyperbolic, c, std::move(warp), fmt::format("sinh({}*r)/{}", c, c));
}

ModelManifold ModelManifold::custom(int n, RadialFn warp, std::string description)
{
    return ModelManifold(n, Preset::custom, 0.0, std::move(warp), std::move(description));
}

ModelManifold ModelManifold::with_k_override(RadialFn k, std::string description) const
{
    ModelManifold copy = *this;
    copy.k_override_ = std::move(k);
    copy.k_override_text_ = std::move(description);
    return copy;
}

Jet2 ModelManifold::warp(double r) const { return warp_(r); }

double ModelManifold::log_warp(double r) const
{
    require_nonnegative_radius(r);
    if (r == 0.0) return -std::numeric_limits<double>::infinity();
    switch (preset_) {
    case Preset::euclidean: return std::log(r);
    case Preset::hyperbolic: {
        // log(sinh(x)/c) = x + log(1 - exp(-2x)) - log(2c)
        const double x = c_ * r;
        return x + std::log(-std::expm1(-2.0 * x)) - std::log(2.0 * c_);
    }
    case Preset::custom: break;
    }
    const double h = warp_(r).value;
    if (!(h > 0.0)) non_positive_warp(h, r);
    return std::log(h);
}

std::pair<double, double> ModelManifold::sectional_curvatures(double r) const
{
    if (!(r > 0.0)) {
        PoleError e("sectional curvatures are evaluated for r > 0 only");
        e.set_location(r);
        throw e;
    }
    switch (preset_) {
    case Preset::euclidean: return {0.0, 0.0};
    case Preset::hyperbolic: return {-c_ * c_, -c_ * c_};
    case Preset::custom: break;
    }
    const Jet2 h = warp_(r);
    if (!(h.value > 0.0)) non_positive_warp(h.value, r);
    return {-h.d2 / h.value, (1.0 - h.d1 * h.d1) / (h.value * h.value)};
}

double volume_sphere(const ModelManifold& m, double r)
{
    require_nonnegative_radius(r);
    if (r == 0.0) return 0.0;
    const double h = m.warp(r).value;
    if (!(h > 0.0)) non_positive_warp(h, r);
    return finite_or_throw(m.omega_sphere() * std::pow(h, m.dim() - 1), "sphere volume", r);
}

double log_volume_sphere(const ModelManifold& m, double r)
{
    return std::log(m.omega_sphere()) + (m.dim() - 1) * m.log_warp(r);
}

double laplacian_r(const ModelManifold& m, double r)
{
    if (!(r > 0.0)) {
        PoleError e("the Laplacian of r is singular at the pole");
        e.set_location(r);
        throw e;
    }
    const int n = m.dim();
    switch (m.preset()) {
    case Preset::euclidean: return (n - 1) / r;
    case Preset::hyperbolic: return (n - 1) * m.scale() / std::tanh(m.scale() * r);
    case Preset::custom: break;
    }
    if (r < kPoleRadius) {
        // h = r + h'''(0) r^3/6 + O(r^5) gives h'/h = (1 + h'''(0) r^2/3)/r + O(r^3).
        return (n - 1) / r * (1.0 + m.warp_third_at_pole() * r * r / 3.0);
    }
    const Jet2 h = m.warp(r);
    if (!(h.value > 0.0)) non_positive_warp(h.value, r);
    return finite_or_throw((n - 1) * h.d1 / h.value, "Laplacian of r", r);
}

double scalar_curvature(const ModelManifold& m, double r)
{
    require_nonnegative_radius(r);
    if (m.k_override()) return finite_or_throw((*m.k_override())(r).value, "overridden scalar curvature", r);

    const int n = m.dim();
    switch (m.preset()) {
    case Preset::euclidean: return 0.0;
    case Preset::hyperbolic: return -static_cast<double>(n) * (n - 1) * m.scale() * m.scale();
    case Preset::custom: break;
    }
    if (r < kPoleRadius) return -static_cast<double>(n) * (n - 1) * m.warp_third_at_pole();

    const Jet2 h = m.warp(r);
    if (!(h.value > 0.0)) non_positive_warp(h.value, r);
    const double k = -2.0 * (n - 1) * h.d2 / h.value + (n - 1.0) * (n - 2.0) * (1.0 - h.d1 * h.d1) / (h.value * h.value);
    return finite_or_throw(k, "scalar curvature", r);
}

double ball_volume(const ModelManifold& m, double r, double rel_tol)
{
    require_nonnegative_radius(r);
    if (r == 0.0) return 0.0;
    return integrate_graded([&](double t) { return volume_sphere(m, t); }, 0.0, r, rel_tol).value;
}

ValidityReport check_ch(const ModelManifold& m, double r_max, int n_grid)
{
    if (!(r_max > 0.0)) throw InvalidArgument(fmt::format("r_max must be positive, got {}", r_max));
    if (n_grid < 16) throw InvalidArgument(fmt::format("n_grid must be at least 16, got {}", n_grid));

    ValidityReport rep;
    rep.samples.reserve(static_cast<std::size_t>(n_grid));
    double lo = 0.0;
    double hi = -std::numeric_limits<double>::infinity();
    for (int i = 1; i <= n_grid; ++i) {
        const double r = r_max * i / n_grid;
        if (!(m.warp(r).value > 0.0)) {
            rep.valid = false;
            rep.degenerate_at = r;
            break;
        }
        const auto [radial, tangential] = m.sectional_curvatures(r);
        const CurvatureSample s{r, radial, tangential};
        rep.samples.push_back(s);
        lo = std::min({lo, radial, tangential});
        hi = std::max({hi, radial, tangential});
        if (radial > kCurvatureTolerance || tangential > kCurvatureTolerance) {
            rep.valid = false;
            rep.violations.push_back(s);
        }
    }
    rep.min_curvature = lo;
    rep.max_curvature = hi;
    if (rep.valid) rep.pinching = std::sqrt(std::max(0.0, -lo));
    return rep;
}

UnitVector UnitVector::normalize(std::vector<double> v)
{
    double norm2 = 0.0;
    for (double x : v) norm2 += x * x;
    const double norm = std::sqrt(norm2);
    if (!(norm > 0.0) || !std::isfinite(norm)) throw InvalidArgument("cannot normalize a zero or non-finite vector");
    for (double& x : v) x /= norm;
    return UnitVector(std::move(v));
}

SphereAverage sphere_average(const ModelManifold& m, const DirectionFn& f, double r, int n_samples,
                             std::uint64_t seed)
{
    if (!(r > 0.0)) throw InvalidArgument(fmt::format("sphere radius must be positive, got {}", r));
    if (n_samples < 100) throw InvalidArgument(fmt::format("need at least 100 samples, got {}", n_samples));

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const auto n = static_cast<std::size_t>(m.dim());

    // Welford: identical samples leave the mean bit-exact and the spread 0.
    double mean = 0.0;
    double m2 = 0.0;
    std::vector<double> g(n);
    for (int k = 1; k <= n_samples; ++k) {
        double norm2 = 0.0;
        do {
            norm2 = 0.0;
            for (auto& x : g) {
                x = normal(rng);
                norm2 += x * x;
            }
        } while (norm2 == 0.0);
        const double value = f(r, UnitVector::normalize(g));
        if (!std::isfinite(value)) {
            OverflowError e("non-finite sample in sphere average");
            e.set_location(r);
            throw e;
        }
        const double delta = value - mean;
        mean += delta / k;
        m2 += delta * (value - mean);
    }
    const double variance = m2 / (n_samples - 1);
    return {mean, std::sqrt(variance / n_samples)};
}

} // namespace curvlab
