#include "curvlab/radial_ode.hpp"

#include "curvlab/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <memory>

#include <fmt/format.h>

namespace curvlab {

ConformalExponents ConformalExponents::of(int n)
{
    if (n < 3) throw InvalidDimension(fmt::format("dimension must be at least 3, got {}", n));
    const double nn = n;
    return {n, 4.0 * (nn - 1.0) / (nn - 2.0), (nn + 2.0) / (nn - 2.0), -4.0 / (nn - 2.0)};
}

std::string_view solve_status_name(SolveStatus s)
{
    switch (s) {
    case SolveStatus::completed: return "Completed";
    case SolveStatus::blow_up: return "BlowUp";
    case SolveStatus::underflow: return "Underflow";
    case SolveStatus::step_failure: return "StepFailure";
    }
    return "unknown";
}

std::string_view residual_class_name(ResidualClass c)
{
    switch (c) {
    case ResidualClass::solution: return "Solution";
    case ResidualClass::supersolution: return "Supersolution";
    case ResidualClass::subsolution: return "Subsolution";
    case ResidualClass::mixed: return "Mixed";
    }
    return "unknown";
}

std::string_view tail_kind_name(TailKind t)
{
    switch (t) {
    case TailKind::finite: return "Finite";
    case TailKind::infinite: return "Infinite";
    case TailKind::inconclusive: return "Inconclusive";
    }
    return "unknown";
}

std::string_view inf_trend_name(InfTrend t)
{
    switch (t) {
    case InfTrend::decreasing_to_zero: return "DecreasingToZero";
    case InfTrend::bounded_below: return "BoundedBelow";
    case InfTrend::inconclusive: return "Inconclusive";
    }
    return "unknown";
}

// ---------------------------------------------------------------------------
// Solution

Solution Solution::from_samples(std::vector<double> grid, std::vector<double> u, std::vector<double> u_prime,
                                std::vector<double> u_second)
{
    if (grid.empty()) throw InvalidArgument("a solution needs at least one grid point");
    if (u.size() != grid.size() || u_prime.size() != grid.size() || u_second.size() != grid.size())
        throw InvalidArgument("grid, u, u' and u'' must have the same length");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!std::isfinite(grid[i]) || grid[i] < 0.0) throw InvalidArgument(fmt::format("invalid radius {}", grid[i]));
        if (i > 0 && !(grid[i] > grid[i - 1])) throw InvalidArgument("grid must be strictly increasing");
        if (!(u[i] > 0.0) || !std::isfinite(u[i]))
            throw InvalidArgument(fmt::format("u must be positive, got {} at r = {}", u[i], grid[i]));
    }
    Solution s;
    s.stop_radius_ = grid.back();
    s.grid_ = std::move(grid);
    s.u_ = std::move(u);
    s.up_ = std::move(u_prime);
    s.upp_ = std::move(u_second);
    return s;
}

Jet2 Solution::operator()(double r) const
{
    if (!(r >= grid_.front() && r <= grid_.back()))
        throw InvalidArgument(fmt::format("r = {} is outside the solution grid [{}, {}]", r, grid_.front(), grid_.back()));
    if (grid_.size() == 1) return {u_[0], up_[0], upp_[0]};

    auto it = std::upper_bound(grid_.begin(), grid_.end(), r);
    std::size_t i = static_cast<std::size_t>(it - grid_.begin());
    i = std::clamp<std::size_t>(i, 1, grid_.size() - 1) - 1;
    const double h = grid_[i + 1] - grid_[i];
    const double t = (r - grid_[i]) / h;

    // Quintic Hermite basis in t, with value, first and second t-derivatives.
    const double t2 = t * t, t3 = t2 * t, t4 = t3 * t, t5 = t4 * t;
    const std::array<std::array<double, 3>, 6> basis{{
        {1 - 10 * t3 + 15 * t4 - 6 * t5, -30 * t2 + 60 * t3 - 30 * t4, -60 * t + 180 * t2 - 120 * t3},
        {t - 6 * t3 + 8 * t4 - 3 * t5, 1 - 18 * t2 + 32 * t3 - 15 * t4, -36 * t + 96 * t2 - 60 * t3},
        {0.5 * (t2 - 3 * t3 + 3 * t4 - t5), 0.5 * (2 * t - 9 * t2 + 12 * t3 - 5 * t4),
         0.5 * (2 - 18 * t + 36 * t2 - 20 * t3)},
        {0.5 * (t3 - 2 * t4 + t5), 0.5 * (3 * t2 - 8 * t3 + 5 * t4), 0.5 * (6 * t - 24 * t2 + 20 * t3)},
        {-4 * t3 + 7 * t4 - 3 * t5, -12 * t2 + 28 * t3 - 15 * t4, -24 * t + 84 * t2 - 60 * t3},
        {10 * t3 - 15 * t4 + 6 * t5, 30 * t2 - 60 * t3 + 30 * t4, 60 * t - 180 * t2 + 120 * t3},
    }};
    const std::array<double, 6> coef{u_[i], h * up_[i], h * h * upp_[i], h * h * upp_[i + 1], h * up_[i + 1], u_[i + 1]};
    Jet2 out{};
    for (std::size_t b = 0; b < 6; ++b) {
        out.value += coef[b] * basis[b][0];
        out.d1 += coef[b] * basis[b][1];
        out.d2 += coef[b] * basis[b][2];
    }
    out.d1 /= h;
    out.d2 /= h * h;
    return out;
}

RadialFn Solution::as_radial() const
{
    auto self = std::make_shared<const Solution>(*this);
    return [self](double r) { return (*self)(r); };
}

// ---------------------------------------------------------------------------
// Integration

namespace {

struct State {
    double u;
    double v;
};

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200, e6 = 22.0 / 525,
                 e7 = -1.0 / 40;

constexpr int kMaxSteps = 2'000'000;
constexpr double kMinRelativeStep = 1e-14;
constexpr double kStallGrowth = 1e6;

double signed_pow(double u, double p) { return std::copysign(std::pow(std::fabs(u), p), u); }

class RadialRhs {
public:
    RadialRhs(const ModelManifold& m, const RadialFn& k) : m_(m), k_(k), e_(ConformalExponents::of(m.dim())) {}

    double second(double r, double u, double v) const
    {
        const double big_k = k_(r).value;
        const double small_k = scalar_curvature(m_, r);
        const double lap = r < kPoleRadius ? 0.0 : laplacian_r(m_, r) * v;
        return (small_k * u - big_k * signed_pow(u, e_.sigma)) / e_.c_n - lap;
    }

    State operator()(double r, const State& y) const { return {y.v, second(r, y.u, y.v)}; }

    const ConformalExponents& exponents() const { return e_; }

private:
    const ModelManifold& m_;
    const RadialFn& k_;
    ConformalExponents e_;
};

State axpy(const State& y, double h, std::initializer_list<std::pair<double, const State*>> terms)
{
    State out = y;
    for (const auto& [a, k] : terms) {
        out.u += h * a * k->u;
        out.v += h * a * k->v;
    }
    return out;
}

bool finite(const State& s) { return std::isfinite(s.u) && std::isfinite(s.v); }

} // namespace

Solution solve_radial(const ModelManifold& m, const RadialFn& k, double u0, double r_max, double tol,
                      std::string_view k_description)
{
    if (!(u0 > 0.0) || !std::isfinite(u0)) throw InvalidArgument(fmt::format("u0 must be positive, got {}", u0));
    if (!(r_max > kTaylorStart) || !std::isfinite(r_max))
        throw InvalidArgument(fmt::format("r_max must exceed {}, got {}", kTaylorStart, r_max));
    if (!(tol > 0.0) || !(tol < 1.0)) throw InvalidArgument(fmt::format("tol must lie in (0, 1), got {}", tol));

    const RadialRhs rhs(m, k);
    const auto& e = rhs.exponents();

    Solution sol;
    sol.problem_ = fmt::format("n={} h={} K={}", m.dim(), m.description(), k_description);

    // Delta u(0) = n u''(0) at the pole.
    const double a0 = scalar_curvature(m, 0.0) * u0 - k(0.0).value * std::pow(u0, e.sigma);
    const double upp0 = a0 / (m.dim() * e.c_n);
    auto record = [&](double r, double u, double v) {
        sol.grid_.push_back(r);
        sol.u_.push_back(u);
        sol.up_.push_back(v);
        sol.upp_.push_back(rhs.second(r, u, v));
    };
    sol.grid_.push_back(0.0);
    sol.u_.push_back(u0);
    sol.up_.push_back(0.0);
    sol.upp_.push_back(upp0);

    double r = kTaylorStart;
    State y{u0 + 0.5 * r * r * upp0, r * upp0};
    record(r, y.u, y.v);

    double h = std::min(1e-3, 0.01 * r_max);
    sol.status_ = SolveStatus::completed;
    for (int step = 0;; ++step) {
        if (r >= r_max) break;
        if (step >= kMaxSteps) {
            sol.status_ = SolveStatus::step_failure;
            break;
        }
        bool last = false;
        if (r + h >= r_max) {
            h = r_max - r;
            last = true;
        }
        if (h < kMinRelativeStep * std::max(1.0, r)) {
            const bool growing = y.v > 0.0 && y.u > kStallGrowth * u0;
            sol.status_ = growing ? SolveStatus::blow_up : SolveStatus::step_failure;
            break;
        }

        const State k1 = rhs(r, y);
        const State k2 = rhs(r + c2 * h, axpy(y, h, {{a21, &k1}}));
        const State k3 = rhs(r + c3 * h, axpy(y, h, {{a31, &k1}, {a32, &k2}}));
        const State k4 = rhs(r + c4 * h, axpy(y, h, {{a41, &k1}, {a42, &k2}, {a43, &k3}}));
        const State k5 = rhs(r + c5 * h, axpy(y, h, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}));
        const State k6 = rhs(r + h, axpy(y, h, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}));
        const State y_new = axpy(y, h, {{b1, &k1}, {b3, &k3}, {b4, &k4}, {b5, &k5}, {b6, &k6}});
        const State k7 = rhs(r + h, y_new);
        const State err = axpy(State{0.0, 0.0}, h, {{e1, &k1}, {e3, &k3}, {e4, &k4}, {e5, &k5}, {e6, &k6}, {e7, &k7}});

        double norm = std::numeric_limits<double>::infinity();
        if (finite(y_new) && finite(err)) {
            const double su = tol * (1.0 + std::max(std::fabs(y.u), std::fabs(y_new.u)));
            const double sv = tol * (1.0 + std::max(std::fabs(y.v), std::fabs(y_new.v)));
            norm = std::max(std::fabs(err.u) / su, std::fabs(err.v) / sv);
        }

        if (norm <= 1.0) {
            r = last ? r_max : r + h;
            y = y_new;
            sol.error_estimate_ += std::fabs(err.u);
            if (y.u > kBlowUpThreshold) {
                record(r, y.u, y.v);
                sol.status_ = SolveStatus::blow_up;
                break;
            }
            if (y.u < kUnderflowThreshold) {
                if (y.u > 0.0) record(r, y.u, y.v);
                sol.status_ = SolveStatus::underflow;
                sol.stop_radius_ = r;
                return sol;
            }
            record(r, y.u, y.v);
        }
        const double factor = norm == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(norm, -0.2), 0.2, 5.0);
        h *= std::isfinite(norm) ? (norm <= 1.0 ? factor : std::min(factor, 1.0)) : 0.2;
    }
    sol.stop_radius_ = sol.grid_.back();
    return sol;
}

// ---------------------------------------------------------------------------
// Residual and the lower bound

ResidualReport residual(const ModelManifold& m, const RadialFn& k, const RadialFn& u, const std::vector<double>& grid,
                        double tol_res)
{
    const auto e = ConformalExponents::of(m.dim());
    ResidualReport rep;
    bool any_pos = false;
    bool any_neg = false;
    for (double r : grid) {
        const Jet2 uj = u(r);
        if (!(uj.value > 0.0)) {
            DomainError err(fmt::format("u = {} is not positive", uj.value));
            err.set_location(r);
            throw err;
        }
        const double lap_u = r < kPoleRadius ? m.dim() * uj.d2 : uj.d2 + laplacian_r(m, r) * uj.d1;
        const double res =
            e.c_n * lap_u - scalar_curvature(m, r) * uj.value + k(r).value * std::pow(uj.value, e.sigma);
        rep.values.push_back({r, res});
        if (std::fabs(res) > rep.max_abs) {
            rep.max_abs = std::fabs(res);
            rep.at = r;
        }
        any_pos = any_pos || res > tol_res;
        any_neg = any_neg || res < -tol_res;
    }
    if (any_pos && any_neg) rep.classification = ResidualClass::mixed;
    else if (any_neg) rep.classification = ResidualClass::supersolution;
    else if (any_pos) rep.classification = ResidualClass::subsolution;
    else rep.classification = ResidualClass::solution;
    return rep;
}

LowerBoundReport verify_lower_bound(const ModelManifold& m, const RadialFn& k, const Solution& u, double slack)
{
    const auto e = ConformalExponents::of(m.dim());
    LowerBoundReport rep;
    rep.slack = slack;
    rep.classification = residual(m, k, u.as_radial(), u.grid()).classification;
    rep.precondition_holds =
        rep.classification == ResidualClass::solution || rep.classification == ResidualClass::supersolution;

    NestedIntegral nested(m, value_of(k));
    rep.min_margin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < u.grid().size(); ++i) {
        const double r = u.grid()[i];
        const double v = std::pow(u.u()[i], e.alpha);
        const double margin = v - nested(r) / (m.dim() - 1);
        rep.margin.push_back({r, margin});
        if (margin < rep.min_margin) {
            rep.min_margin = margin;
            rep.at = r;
        }
    }
    rep.holds = rep.min_margin >= -slack;
    return rep;
}

// ---------------------------------------------------------------------------
// Conformal length and the infimum

namespace {

/// Least-squares slope of log u against log r over [r_end / 10, r_end],
/// sampled on the interpolant so sparse solver grids still yield a fit.
std::optional<double> last_decade_decay(const Solution& u, std::size_t& first)
{
    constexpr int kSamples = 33;
    const double r_end = u.r_end();
    if (!(r_end > 0.0)) return std::nullopt;
    const auto& g = u.grid();
    const double lo = std::max(r_end / 10.0, g.front());
    first = static_cast<std::size_t>(std::lower_bound(g.begin(), g.end(), lo) - g.begin());
    if (!(lo > 0.0) || !(r_end > lo)) return std::nullopt;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < kSamples; ++i) {
        const double r = lo * std::pow(r_end / lo, static_cast<double>(i) / (kSamples - 1));
        const double value = u(r).value;
        if (!(value > 0.0)) return std::nullopt;
        const double x = std::log(r);
        const double y = std::log(value);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double nn = kSamples;
    const double denom = nn * sxx - sx * sx;
    if (!(denom > 0.0)) return std::nullopt;
    return -(nn * sxy - sx * sy) / denom;
}

} // namespace

LengthReport conformal_length(const ModelManifold& m, const Solution& u, double a)
{
    const auto& g = u.grid();
    if (!(a >= g.front() && a <= g.back()))
        throw InvalidArgument(fmt::format("a = {} is outside the solution grid [{}, {}]", a, g.front(), g.back()));
    const double power = 2.0 / (m.dim() - 2);
    auto density = [&](double r) { return std::pow(u(r).value, power); };

    LengthReport rep;
    for (std::size_t i = 1; i < g.size(); ++i) {
        const double lo = std::max(a, g[i - 1]);
        const double hi = g[i];
        if (hi <= lo) continue;
        rep.body += integrate(density, lo, hi, 1e-12).value;
    }
    rep.length = rep.body;

    if (u.status() != SolveStatus::completed) {
        rep.rationale = fmt::format("integration stopped early ({}); no tail", solve_status_name(u.status()));
        return rep;
    }
    std::size_t first = 0;
    rep.decay_exponent = last_decade_decay(u, first);
    if (!rep.decay_exponent) {
        rep.rationale = "no usable decay fit over the last decade of radii";
        return rep;
    }
    const double r_end = u.r_end();
    const double w_end = std::pow(u.u().back(), power);
    const double q = power * *rep.decay_exponent;
    auto tail = classify_improper([=](double r) { return w_end * std::pow(r / r_end, -q); }, r_end);
    rep.rationale = fmt::format("u ~ r^(-{:.6g}) over the last decade; tail integral {}: {}", *rep.decay_exponent,
                                improper_kind_name(tail.kind), tail.rationale);
    if (tail.kind == ImproperKind::convergent) {
        rep.tail = TailKind::finite;
        rep.tail_value = tail.value;
        rep.length += tail.value;
    } else if (tail.kind == ImproperKind::divergent) {
        rep.tail = TailKind::infinite;
    }
    return rep;
}

InfReport inf_estimate(const Solution& u)
{
    const auto& g = u.grid();
    const auto& v = u.u();
    InfReport rep;
    const auto it = std::min_element(v.begin(), v.end());
    rep.inf_on_grid = *it;
    rep.at = g[static_cast<std::size_t>(it - v.begin())];

    std::size_t first = 0;
    rep.decay_exponent = last_decade_decay(u, first);
    if (!rep.decay_exponent) return rep;

    bool decreasing = true;
    bool nondecreasing = true;
    for (std::size_t i = first + 1; i < g.size(); ++i) {
        const double slack = 1e-12 * std::max(std::fabs(v[i]), std::fabs(v[i - 1]));
        decreasing = decreasing && v[i] < v[i - 1];
        nondecreasing = nondecreasing && v[i] >= v[i - 1] - slack;
    }
    if (decreasing && *rep.decay_exponent >= 0.05) rep.trend = InfTrend::decreasing_to_zero;
    else if (nondecreasing) rep.trend = InfTrend::bounded_below;
    return rep;
}

} // namespace curvlab
