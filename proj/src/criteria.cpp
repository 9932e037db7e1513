#include "curvlab/criteria.hpp"

#include "curvlab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace curvlab {

namespace {

constexpr const char* kInfZeroStatement =
    "every positive C^2 supersolution u of c_n Delta u - k u + K u^sigma <= 0 has inf u = 0";
constexpr const char* kNoCompleteStatement =
    "there is no complete conformal metric u^{4/(n-2)} g with scalar curvature K and u radial";

struct TailScan {
    std::optional<double> start;
    std::vector<TracePoint> samples;
};

/// Longest trailing run of grid points on which keep(value) holds.
template <class F, class Keep>
TailScan scan_tail(const std::vector<double>& grid, F&& f, Keep&& keep, int min_points)
{
    TailScan out;
    out.samples.reserve(grid.size());
    for (double r : grid) out.samples.push_back({r, f(r)});
    std::size_t first = out.samples.size();
    while (first > 0 && keep(out.samples[first - 1].value)) --first;
    if (static_cast<int>(out.samples.size() - first) >= min_points) out.start = out.samples[first].r;
    return out;
}

bool ch_valid(const ModelManifold& m, const CriteriaPolicy& policy, Verdict& v)
{
    const auto rep = check_ch(m, policy.scan.r_max, policy.ch_grid);
    if (rep.valid) return true;
    v.kind = VerdictKind::not_applicable;
    v.statement = rep.violations.empty()
                      ? fmt::format("the warp vanishes at r = {}; the manifold is not Cartan-Hadamard", *rep.degenerate_at)
                      : fmt::format("sectional curvature is positive at r = {}; the manifold is not Cartan-Hadamard",
                                    rep.violations.front().r);
    return false;
}

ScalarFn abs_k(const ModelManifold& m)
{
    return [m](double r) { return std::fabs(scalar_curvature(m, r)); };
}

bool positive_divergence(const ImproperResult& r) { return r.kind == ImproperKind::divergent && r.sign > 0; }

bool positive_limit(const LimitResult& l, double beta_tol)
{
    return l.kind == LimitKind::pos_infinite || (l.kind == LimitKind::finite && l.value > beta_tol);
}

std::string describe(const ImproperResult& r)
{
    if (r.kind == ImproperKind::divergent) return fmt::format("diverges to {}infinity", r.sign > 0 ? "+" : "-");
    if (r.kind == ImproperKind::convergent) return fmt::format("converges to {:.6g}", r.value);
    return "is inconclusive";
}

std::string describe(const LimitResult& l)
{
    if (l.kind == LimitKind::finite) return fmt::format("has the finite limit {:.6g}", l.value);
    if (l.kind == LimitKind::inconclusive) return "has no detectable limit";
    return fmt::format("tends to {}", limit_kind_name(l.kind));
}

} // namespace

std::string_view verdict_kind_name(VerdictKind k)
{
    switch (k) {
    case VerdictKind::inf_zero_forced: return "InfZeroForced";
    case VerdictKind::no_complete_metric: return "NoCompleteMetric";
    case VerdictKind::not_applicable: return "NotApplicable";
    case VerdictKind::inconclusive: return "Inconclusive";
    }
    return "unknown";
}

bool Verdict::has_clause(std::string_view c) const
{
    return std::find(clauses.begin(), clauses.end(), c) != clauses.end();
}

std::vector<double> scan_grid(const ScanPolicy& scan)
{
    if (!(scan.r_min > 0.0) || !(scan.r_max > scan.r_min))
        throw InvalidArgument(fmt::format("scan needs 0 < r_min < r_max, got [{}, {}]", scan.r_min, scan.r_max));
    if (scan.n_grid < 2) throw InvalidArgument(fmt::format("scan grid needs at least 2 points, got {}", scan.n_grid));
    if (scan.min_tail_points < 1 || scan.min_tail_points > scan.n_grid)
        throw InvalidArgument(fmt::format("min_tail_points must lie in [1, {}], got {}", scan.n_grid, scan.min_tail_points));
    std::vector<double> grid(static_cast<std::size_t>(scan.n_grid));
    const double ratio = std::log(scan.r_max / scan.r_min);
    for (int i = 0; i < scan.n_grid; ++i) grid[static_cast<std::size_t>(i)] = scan.r_min * std::exp(ratio * i / (scan.n_grid - 1));
    grid.back() = scan.r_max;
    return grid;
}

Verdict check_inf_zero_integral(const ModelManifold& m, const RadialFn& k, const CriteriaPolicy& policy)
{
    Verdict v;
    v.criterion = "inf_zero_integral";
    if (!ch_valid(m, policy, v)) return v;

    BallAverage ball(m, value_of(k));
    auto mean = [&](double s) { return ball.mean(s); };

    auto ia = classify_improper(mean, policy.integral_start, policy.classify);
    const bool a = positive_divergence(ia);
    std::string why = fmt::format("int (1/V) int_B K {}", describe(ia));
    v.evidence.integrals.push_back({"mean_K_ball", std::move(ia)});

    auto tail = scan_tail(scan_grid(policy.scan), mean, [](double x) { return x >= 0.0; }, policy.scan.min_tail_points);
    v.evidence.tail_start = tail.start;
    v.evidence.scans.push_back({"mean_K_ball", std::move(tail.samples)});

    bool b = false;
    if (v.evidence.tail_start) {
        BallAverage abs_ball(m, abs_k(m));
        auto ib = classify_improper([&](double s) { return abs_ball.mean(s); }, policy.integral_start, policy.classify);
        b = positive_divergence(ib);
        why += fmt::format("; int (1/V) int_B |k| {}", describe(ib));
        v.evidence.integrals.push_back({"mean_abs_k_ball", std::move(ib)});
    } else {
        why += fmt::format("; int_B K dmu >= 0 does not hold on the scanned tail up to r = {}", policy.scan.r_max);
    }

    if (a) v.clauses.emplace_back("a");
    if (b) v.clauses.emplace_back("b");
    if (a || b) {
        v.kind = VerdictKind::inf_zero_forced;
        v.statement = kInfZeroStatement;
    } else {
        v.kind = VerdictKind::inconclusive;
        v.statement = why;
    }
    return v;
}

Verdict check_inf_zero_limit(const ModelManifold& m, const RadialFn& k, const CriteriaPolicy& policy)
{
    Verdict v;
    v.criterion = "inf_zero_limit";
    if (!ch_valid(m, policy, v)) return v;

    BallAverage ball(m, value_of(k));
    auto tail = scan_tail(scan_grid(policy.scan), [&](double s) { return ball.mean(s); },
                          [](double x) { return x >= 0.0; }, policy.scan.min_tail_points);
    v.evidence.tail_start = tail.start;
    v.evidence.scans.push_back({"mean_K_ball", std::move(tail.samples)});
    if (!v.evidence.tail_start) {
        v.kind = VerdictKind::not_applicable;
        v.statement = fmt::format("int_B K dmu >= 0 does not hold on the scanned tail up to r = {}", policy.scan.r_max);
        return v;
    }

    auto clause = [&](const char* tag, const ScalarFn& f, BallAverage& avg, std::string& why) {
        auto mass = limit_at_infinity([&](double r) { return avg.ball_integral(r); }, policy.limit);
        auto ratio = limit_at_infinity(
            [&](double r) { return r * r * f(r) / (r * laplacian_r(m, r) - 1.0); }, policy.limit);
        const bool ok = mass.kind == LimitKind::pos_infinite && positive_limit(ratio, policy.beta_tol);
        why += fmt::format("{}int_B {} dmu {}; r^2 {} / (r Delta r - 1) {}", why.empty() ? "" : "; ", tag,
                           describe(mass), tag, describe(ratio));
        v.evidence.limits.push_back({fmt::format("ball_integral_{}", tag), std::move(mass)});
        v.evidence.limits.push_back({fmt::format("ratio_{}", tag), std::move(ratio)});
        return ok;
    };

    std::string why;
    const auto kv = value_of(k);
    const bool a = clause("K", kv, ball, why);
    const auto absk = abs_k(m);
    BallAverage abs_ball(m, absk);
    const bool b = clause("|k|", absk, abs_ball, why);

    if (a) v.clauses.emplace_back("a");
    if (b) v.clauses.emplace_back("b");
    if (a || b) {
        v.kind = VerdictKind::inf_zero_forced;
        v.statement = kInfZeroStatement;
    } else {
        v.kind = VerdictKind::inconclusive;
        v.statement = why;
    }
    return v;
}

Verdict check_no_complete_metric_integral(const ModelManifold& m, const RadialFn& k, const CriteriaPolicy& policy)
{
    Verdict v;
    v.criterion = "no_complete_metric_integral";
    if (!ch_valid(m, policy, v)) return v;

    NestedIntegral nested(m, value_of(k));
    auto tail = scan_tail(scan_grid(policy.scan), [&](double r) { return nested(r); },
                          [](double x) { return x > 0.0; }, policy.scan.min_tail_points);
    v.evidence.a_found = tail.start;
    v.evidence.scans.push_back({"nested_I", std::move(tail.samples)});
    if (!v.evidence.a_found) {
        v.kind = VerdictKind::not_applicable;
        v.statement = fmt::format("no a with I(r) > 0 on the scanned tail up to r = {}", policy.scan.r_max);
        return v;
    }

    auto g = [&](double r) {
        const double i = nested(r);
        if (!(i > 0.0)) {
            DomainError e(fmt::format("I = {} is not positive beyond the scan horizon", i));
            e.set_location(r);
            throw e;
        }
        return 1.0 / std::sqrt(i);
    };
    ImproperResult res;
    try {
        res = classify_improper(g, *v.evidence.a_found, policy.classify);
    } catch (const DomainError& e) {
        v.kind = VerdictKind::inconclusive;
        v.statement = e.what();
        return v;
    }
    const bool fired = res.kind == ImproperKind::convergent;
    const std::string why = fmt::format("int_a^inf I^(-1/2) dr {}", describe(res));
    v.evidence.integrals.push_back({"inv_sqrt_nested_I", std::move(res)});
    if (fired) {
        v.kind = VerdictKind::no_complete_metric;
        v.clauses.emplace_back("integral");
        v.statement = kNoCompleteStatement;
    } else {
        v.kind = VerdictKind::inconclusive;
        v.statement = why;
    }
    return v;
}

Verdict check_no_complete_metric_pinched(const ModelManifold& m, const RadialFn& k, double delta,
                                         const CriteriaPolicy& policy)
{
    if (!(delta > 0.0) || !std::isfinite(delta))
        throw DeltaOutOfRange(fmt::format("delta must be positive, got {}", delta));

    Verdict v;
    v.criterion = "no_complete_metric_pinched";
    const auto rep = check_ch(m, policy.scan.r_max, policy.ch_grid);
    if (!rep.valid) {
        v.kind = VerdictKind::not_applicable;
        v.statement = fmt::format("no pinching -c^2 <= sec <= 0 holds on (0, {}]", policy.scan.r_max);
        return v;
    }
    v.evidence.pinching_c = rep.pinching;

    const auto kv = value_of(k);
    const double power = 1.0 + delta;
    auto lim = limit_at_infinity([&](double r) { return kv(r) / std::pow(r, power); }, policy.limit);
    const bool fired = lim.kind == LimitKind::pos_infinite;
    const std::string why = fmt::format("K / r^{} {}", power, describe(lim));
    v.evidence.limits.push_back({"K_over_power", std::move(lim)});
    if (fired) {
        v.kind = VerdictKind::no_complete_metric;
        v.clauses.emplace_back("pinched");
        v.statement = kNoCompleteStatement;
    } else {
        v.kind = VerdictKind::inconclusive;
        v.statement = why;
    }
    return v;
}

namespace {

void require_delta(double delta)
{
    if (!(delta >= 0.0 && delta < 1.0)) throw DeltaOutOfRange(fmt::format("delta must lie in [0, 1), got {}", delta));
}

double log_ratio(const ModelManifold& m, double delta, double r)
{
    return log_volume_sphere(m, r) - (m.dim() - 2 + delta) * std::log(r);
}

} // namespace

double growth_ratio(const ModelManifold& m, double delta, double lo, double hi)
{
    require_delta(delta);
    if (!(lo > 0.0) || !(hi > lo)) throw InvalidArgument(fmt::format("growth needs 0 < lo < hi, got [{}, {}]", lo, hi));
    return std::exp(log_ratio(m, delta, hi) - log_ratio(m, delta, lo));
}

VolumeGrowthReport verify_volume_growth(const ModelManifold& m, double delta, double r_max, int n_grid,
                                        double growth_factor)
{
    require_delta(delta);
    if (!(r_max > 0.0)) throw InvalidArgument(fmt::format("r_max must be positive, got {}", r_max));
    if (n_grid < 4) throw InvalidArgument(fmt::format("n_grid must be at least 4, got {}", n_grid));

    VolumeGrowthReport rep;
    rep.delta = delta;
    rep.required_growth = growth_factor;
    double prev = -std::numeric_limits<double>::infinity();
    for (int i = 1; i <= n_grid; ++i) {
        const double r = r_max * i / n_grid;
        const double lr = log_ratio(m, delta, r);
        rep.ratio.push_back({r, std::exp(lr)});
        if (lr < prev - 1e-12 * std::max(1.0, std::fabs(prev)) && rep.nondecreasing) {
            rep.nondecreasing = false;
            rep.first_decrease = r;
        }
        prev = lr;
    }
    rep.growth = growth_ratio(m, delta, r_max / 4.0, r_max);
    rep.growth_ok = rep.growth >= growth_factor;
    return rep;
}

} // namespace curvlab
