#include "curvlab/quadrature.hpp"

#include "curvlab/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <queue>

#include <fmt/format.h>

namespace curvlab {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

// Kronrod abscissae and weights; odd indices are the 7-point Gauss nodes.
constexpr std::array<double, 8> kXgk{
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWgk{
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg{
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
    double a;
    double b;
    double value;
    double error;
    double resabs;

    bool operator<(const Segment& o) const { return error < o.error; }
};

double call_checked(const ScalarFn& f, double x)
{
    double y = 0.0;
    try {
        y = f(x);
    } catch (EvalError& e) {
        e.set_location(x);
        throw;
    }
    if (!std::isfinite(y)) {
        OverflowError e("integrand is not finite");
        e.set_location(x);
        throw e;
    }
    return y;
}

Segment gauss_kronrod(const ScalarFn& f, double a, double b)
{
    const double centre = 0.5 * (a + b);
    const double half = 0.5 * (b - a);

    const double fc = call_checked(f, centre);
    double resg = fc * kWg[3];
    double resk = fc * kWgk[7];
    double resabs = std::fabs(resk);

    std::array<double, 7> fv1{};
    std::array<double, 7> fv2{};
    for (int j = 0; j < 7; ++j) {
        const double dx = half * kXgk[static_cast<std::size_t>(j)];
        const double f1 = call_checked(f, centre - dx);
        const double f2 = call_checked(f, centre + dx);
        fv1[static_cast<std::size_t>(j)] = f1;
        fv2[static_cast<std::size_t>(j)] = f2;
        resk += kWgk[static_cast<std::size_t>(j)] * (f1 + f2);
        resabs += kWgk[static_cast<std::size_t>(j)] * (std::fabs(f1) + std::fabs(f2));
        if (j % 2 == 1) resg += kWg[static_cast<std::size_t>(j / 2)] * (f1 + f2);
    }

    const double mean = 0.5 * resk;
    double resasc = kWgk[7] * std::fabs(fc - mean);
    for (std::size_t j = 0; j < 7; ++j)
        resasc += kWgk[j] * (std::fabs(fv1[j] - mean) + std::fabs(fv2[j] - mean));

    const double width = std::fabs(half);
    resabs *= width;
    resasc *= width;
    double err = std::fabs((resk - resg) * half);
    if (resasc != 0.0 && err != 0.0) err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
    if (resabs > std::numeric_limits<double>::min() / (50.0 * kEps)) err = std::max(50.0 * kEps * resabs, err);
    return {a, b, resk * half, err, resabs};
}

} // namespace

QuadResult integrate(const ScalarFn& f, double a, double b, double rel_tol, double abs_tol, int max_subdivisions)
{
    if (!std::isfinite(a) || !std::isfinite(b) || a > b)
        throw InvalidArgument(fmt::format("integration bounds must satisfy a <= b, got [{}, {}]", a, b));
    if (a == b) return {};

    std::priority_queue<Segment> heap;
    double total = 0.0;
    double total_err = 0.0;
    double floor_err = 0.0;
    int evals = 15;

    Segment first = gauss_kronrod(f, a, b);
    total = first.value;
    total_err = first.error;
    floor_err = 50.0 * kEps * first.resabs;
    heap.push(first);

    std::vector<Segment> frozen;
    int segments = 1;
    bool hit_limit = false;
    while (!heap.empty()) {
        const double target = std::max(abs_tol, rel_tol * std::fabs(total));
        if (total_err <= target || total_err <= 2.0 * floor_err) break;
        if (segments >= max_subdivisions) {
            hit_limit = true;
            break;
        }

        const Segment worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b)) {
            frozen.push_back(worst);
            continue;
        }
        const Segment left = gauss_kronrod(f, worst.a, mid);
        const Segment right = gauss_kronrod(f, mid, worst.b);
        evals += 30;
        ++segments;

        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        floor_err += 50.0 * kEps * (left.resabs + right.resabs - worst.resabs);
        heap.push(left);
        heap.push(right);
    }

    // Re-sum in order to shed the drift of the running updates.
    while (!heap.empty()) {
        frozen.push_back(heap.top());
        heap.pop();
    }
    std::sort(frozen.begin(), frozen.end(), [](const Segment& x, const Segment& y) { return x.a < y.a; });
    double sum = 0.0;
    double err = 0.0;
    for (const auto& s : frozen) {
        sum += s.value;
        err += s.error;
    }
    return {sum, err, evals, hit_limit};
}

namespace {

QuadResult accumulate(const ScalarFn& f, const std::vector<double>& cuts, double rel_tol, double abs_tol)
{
    QuadResult out;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const QuadResult piece = integrate(f, cuts[i], cuts[i + 1], rel_tol, abs_tol);
        out.value += piece.value;
        out.error_estimate += piece.error_estimate;
        out.n_evals += piece.n_evals;
        out.hit_limit = out.hit_limit || piece.hit_limit;
    }
    return out;
}

} // namespace

QuadResult integrate_graded(const ScalarFn& f, double a, double b, double rel_tol, double abs_tol)
{
    if (!(b - a > 2.0)) return integrate(f, a, b, rel_tol, abs_tol);
    std::vector<double> cuts{a};
    for (double step = 1.0; a + step < b; step *= 2.0) cuts.push_back(a + step);
    cuts.push_back(b);
    return accumulate(f, cuts, rel_tol, abs_tol);
}

QuadResult integrate_graded_to_end(const ScalarFn& f, double a, double b, double rel_tol, double abs_tol)
{
    if (!(b - a > 2.0)) return integrate(f, a, b, rel_tol, abs_tol);
    std::vector<double> cuts{b};
    for (double step = 1.0; b - step > a; step *= 2.0) cuts.push_back(b - step);
    cuts.push_back(a);
    std::reverse(cuts.begin(), cuts.end());
    return accumulate(f, cuts, rel_tol, abs_tol);
}

// ---------------------------------------------------------------------------
// Ball means and the nested integral

BallAverage::BallAverage(ModelManifold m, ScalarFn k, double rel_tol)
    : m_(std::move(m)), k_(std::move(k)), rel_tol_(rel_tol)
{
    cache_.emplace(0.0, 0.0);
}

double BallAverage::mean(double s)
{
    if (!(s >= 0.0) || !std::isfinite(s)) throw InvalidArgument(fmt::format("ball radius must be nonnegative, got {}", s));
    if (s == 0.0) return 0.0;

    const int n = m_.dim();
    if (s < kBallSeriesRadius) {
        // V(t) ~ omega t^{n-1} near the pole; the mean value point of K under
        // the weight t^{n-1} on [0, s] is s n/(n+1) to first order.
        return s / n * k_(s * n / (n + 1.0));
    }

    if (auto hit = cache_.find(s); hit != cache_.end()) return hit->second;
    auto below = std::prev(cache_.upper_bound(s));
    const double s1 = below->first;
    const double j1 = below->second;

    const double log_h2 = m_.log_warp(s);
    const double power = n - 1.0;
    auto weighted = [&](double t) {
        const double w = std::exp(power * (m_.log_warp(t) - log_h2));
        return w == 0.0 ? 0.0 : k_(t) * w;
    };
    const double carry = (j1 == 0.0) ? 0.0 : j1 * std::exp(power * (m_.log_warp(s1) - log_h2));
    const double inc = integrate_graded_to_end(weighted, s1, s, rel_tol_).value;
    const double j = carry + inc;
    cache_.emplace(s, j);
    return j;
}

double BallAverage::ball_integral(double s)
{
    const double j = mean(s);
    if (j == 0.0) return 0.0;
    const double v = j * std::exp(log_volume_sphere(m_, s));
    if (!std::isfinite(v)) {
        OverflowError e("ball integral is not representable");
        e.set_location(s);
        throw e;
    }
    return v;
}

namespace {

// The ball means carry relative noise at the inner tolerance; the outer
// quadrature asks for less so that noise cannot drive endless bisection.
constexpr double kOuterTolFactor = 10.0;

} // namespace

NestedIntegral::NestedIntegral(ModelManifold m, ScalarFn k, double rel_tol)
    : ball_(std::move(m), std::move(k), rel_tol), rel_tol_(kOuterTolFactor * rel_tol)
{
    cache_.emplace(0.0, 0.0);
}

double NestedIntegral::operator()(double r)
{
    if (!(r >= 0.0) || !std::isfinite(r)) throw InvalidArgument(fmt::format("radius must be nonnegative, got {}", r));
    if (auto hit = cache_.find(r); hit != cache_.end()) return hit->second;
    auto below = std::prev(cache_.upper_bound(r));
    const double inc = integrate_graded([this](double s) { return ball_.mean(s); }, below->first, r, rel_tol_).value;
    const double value = below->second + inc;
    cache_.emplace(r, value);
    return value;
}

double mean_K_ball(const ModelManifold& m, const RadialFn& k, double s)
{
    return BallAverage(m, value_of(k)).mean(s);
}

double nested_I(const ModelManifold& m, const RadialFn& k, double r)
{
    return NestedIntegral(m, value_of(k))(r);
}

// ---------------------------------------------------------------------------
// Improper integrals

std::string_view improper_kind_name(ImproperKind k)
{
    switch (k) {
    case ImproperKind::convergent: return "convergent";
    case ImproperKind::divergent: return "divergent";
    case ImproperKind::inconclusive: return "inconclusive";
    }
    return "unknown";
}

std::string_view limit_kind_name(LimitKind k)
{
    switch (k) {
    case LimitKind::finite: return "finite";
    case LimitKind::pos_infinite: return "+infinity";
    case LimitKind::neg_infinite: return "-infinity";
    case LimitKind::inconclusive: return "inconclusive";
    }
    return "unknown";
}

namespace {

bool agree(double x, double y, double tol) { return std::fabs(x - y) <= tol * (1.0 + std::fabs(x)); }

int strict_sign(double x) { return x > 0.0 ? 1 : (x < 0.0 ? -1 : 0); }

constexpr double kSettlingRatio = 0.75;
constexpr double kSettlingDeficit = 0.01;

} // namespace

ImproperResult classify_improper(const ScalarFn& g, double a, const ClassifyPolicy& policy)
{
    if (!(a > 0.0) || !std::isfinite(a))
        throw InvalidArgument(fmt::format("classification needs a positive lower limit, got {}", a));
    if (policy.max_doublings < 3) throw InvalidArgument("classification needs at least 3 doublings");

    ImproperResult res;
    res.trace.push_back({a, 0.0});
    std::vector<double> inc;
    double partial = 0.0;
    double lo = a;
    for (int k = 1; k <= policy.max_doublings; ++k) {
        const double hi = a * std::ldexp(1.0, k);
        double d = 0.0;
        try {
            d = integrate_graded(g, lo, hi, policy.quad_rel_tol).value;
        } catch (const OverflowError& e) {
            if (inc.size() < 3) throw;
            res.truncated = true;
            res.rationale = fmt::format("truncations stopped at R = {} by overflow; ", lo);
            break;
        }
        partial += d;
        inc.push_back(d);
        res.trace.push_back({hi, partial});
        lo = hi;
    }

    if (inc.size() < 3) {
        res.rationale += "too few truncations to classify";
        return res;
    }

    const std::size_t m = inc.size();
    const double d0 = inc[m - 3];
    const double d1 = inc[m - 2];
    const double d2 = inc[m - 1];
    const double slack = 1.0 - policy.tol;

    // Increments d_k -> d > 0 show up either as no shrinking or as shrink
    // deficits 1 - d_k/d_{k-1} that themselves decay geometrically.
    const int sg = strict_sign(d2);
    const bool same_sign = sg != 0 && strict_sign(d1) == sg && strict_sign(d0) == sg;
    const double e1 = same_sign ? 1.0 - d1 / d0 : 0.0;
    const double e2 = same_sign ? 1.0 - d2 / d1 : 0.0;
    const bool flat = std::fabs(d1) >= slack * std::fabs(d0) && std::fabs(d2) >= slack * std::fabs(d1);
    const bool settling = e1 > 0.0 && e2 <= kSettlingRatio * e1 && e2 <= kSettlingDeficit;
    if (same_sign && (flat || settling)) {
        res.kind = ImproperKind::divergent;
        res.sign = sg;
        res.rationale += fmt::format("last three doubling increments {:.6g}, {:.6g}, {:.6g} share a sign and {}",
                                     d0, d1, d2, flat ? "do not shrink" : "settle to a nonzero limit");
        if (std::fabs(partial) > policy.big) res.rationale += fmt::format("; |partial| = {:.6g} exceeds {:.3g}", std::fabs(partial), policy.big);
        return res;
    }

    const auto& t = res.trace;
    const std::size_t p = t.size();
    if (agree(t[p - 1].value, t[p - 2].value, policy.tol) && agree(t[p - 1].value, t[p - 3].value, policy.tol)) {
        res.kind = ImproperKind::convergent;
        res.value = t[p - 1].value;
        res.rationale += "last three partial integrals agree";
        return res;
    }

    if (m >= 4) {
        // Aitken: with increment ratio q the remaining tail is d q / (1 - q).
        std::array<double, 3> limits{};
        bool geometric = true;
        for (std::size_t i = 0; i < 3; ++i) {
            const std::size_t j = m - 3 + i;
            if (inc[j - 1] == 0.0) {
                geometric = false;
                break;
            }
            const double q = inc[j] / inc[j - 1];
            if (!(std::fabs(q) < policy.max_ratio)) {
                geometric = false;
                break;
            }
            limits[i] = t[j + 1].value + inc[j] * q / (1.0 - q);
        }
        if (geometric && agree(limits[2], limits[1], policy.tol) && agree(limits[2], limits[0], policy.tol)) {
            res.kind = ImproperKind::convergent;
            res.value = limits[2];
            res.rationale += fmt::format("increments decay geometrically (ratio {:.6g}); extrapolated limits agree",
                                         inc[m - 1] / inc[m - 2]);
            return res;
        }
    }

    res.rationale += "neither the divergence nor the convergence rule fired";
    return res;
}

LimitResult limit_at_infinity(const ScalarFn& g, const LimitPolicy& policy)
{
    if (!(policy.r0 > 0.0)) throw InvalidArgument("limit sampling needs a positive starting radius");
    if (policy.window < 3) throw InvalidArgument("limit window must be at least 3");

    LimitResult res;
    for (int j = 0; j <= policy.doublings; ++j) {
        const double r = policy.r0 * std::ldexp(1.0, j);
        double v = 0.0;
        try {
            v = g(r);
            if (!std::isfinite(v)) {
                OverflowError e("limit sample is not finite");
                e.set_location(r);
                throw e;
            }
        } catch (OverflowError& e) {
            e.set_location(r);
            if (static_cast<int>(res.trace.size()) < policy.window) throw;
            res.truncated = true;
            res.rationale = fmt::format("sampling stopped at r = {} by overflow; ", r);
            break;
        }
        res.trace.push_back({r, v});
    }

    const auto& t = res.trace;
    const std::size_t n = t.size();
    const auto w = static_cast<std::size_t>(policy.window);
    if (n < w) {
        res.rationale += "too few samples";
        return res;
    }

    for (int sg : {1, -1}) {
        bool monotone = true;
        bool power_growth = true;
        for (std::size_t i = n - w + 1; i < n; ++i) {
            const double prev = sg * t[i - 1].value;
            const double cur = sg * t[i].value;
            if (!(cur > prev)) monotone = false;
            if (!(prev > 0.0 && cur > 0.0) ||
                std::log(cur / prev) / std::log(t[i].r / t[i - 1].r) < policy.min_growth_exponent)
                power_growth = false;
        }
        if (!monotone) continue;
        const double last = sg * t[n - 1].value;
        if (last > policy.big || power_growth) {
            res.kind = sg > 0 ? LimitKind::pos_infinite : LimitKind::neg_infinite;
            res.value = sg * std::numeric_limits<double>::infinity();
            res.rationale += last > policy.big ? fmt::format("monotone beyond {:.3g}", policy.big)
                                               : fmt::format("monotone with power growth of exponent >= {}",
                                                             policy.min_growth_exponent);
            return res;
        }
    }

    const double g2 = t[n - 1].value;
    if (agree(g2, t[n - 2].value, policy.tol) && agree(g2, t[n - 3].value, policy.tol)) {
        res.kind = LimitKind::finite;
        res.value = g2;
        res.rationale += "last three samples agree";
        return res;
    }

    if (n >= 5) {
        std::array<double, 3> est{};
        bool contracting = true;
        for (std::size_t i = 0; i < 3; ++i) {
            const std::size_t j = n - 3 + i;
            const double dj = t[j].value - t[j - 1].value;
            const double dp = t[j - 1].value - t[j - 2].value;
            if (!(std::fabs(dj) < std::fabs(dp)) || dj == dp) {
                contracting = false;
                break;
            }
            est[i] = t[j].value - dj * dj / (dj - dp);
        }
        if (contracting && agree(est[2], est[1], policy.tol) && agree(est[2], est[0], policy.tol)) {
            res.kind = LimitKind::finite;
            res.value = est[2];
            res.rationale += "increments contract and extrapolated limits agree";
            return res;
        }
    }

    res.rationale += "no limit rule fired";
    return res;
}

} // namespace curvlab
