#include "curvlab/errors.hpp"
#include "curvlab/funcexpr.hpp"
#include "curvlab/model_manifold.hpp"
#include "curvlab/quadrature.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace curvlab;

namespace {

RadialFn fn(const char* text) { return as_radial(parse(text)); }

// (1/V(s)) int_{B(s)} r^p in flat R^n, V the sphere area: s^{p+1} / (n + p)
double flat_power_mean(int n, double p, double s) { return std::pow(s, p + 1) / (n + p); }

} // namespace

TEST_SUITE("quadrature") {

TEST_CASE("basic integrals")
{
    CHECK(integrate([](double x) { return x * x; }, 0.0, 1.0).value == doctest::Approx(1.0 / 3).epsilon(1e-12));
    CHECK(integrate([](double x) { return std::sin(x); }, 0.0, std::numbers::pi).value ==
          doctest::Approx(2.0).epsilon(1e-12));
    const auto sing = integrate([](double x) { return 1.0 / std::sqrt(x); }, 0.0, 1.0, 1e-10);
    CHECK(sing.value == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(integrate([](double x) { return x; }, 1.0, 1.0).value == 0.0);
    CHECK_THROWS_AS(integrate([](double x) { return x; }, 1.0, 0.0), InvalidArgument);

    const auto graded = integrate_graded([](double x) { return std::exp(-x); }, 0.0, 200.0, 1e-12);
    CHECK(graded.value == doctest::Approx(1.0).epsilon(1e-11));
    const auto to_end = integrate_graded_to_end([](double x) { return std::exp(x - 200.0); }, 0.0, 200.0, 1e-12);
    CHECK(to_end.value == doctest::Approx(1.0).epsilon(1e-11));
}

TEST_CASE("ball means of K")
{
    const auto flat3 = ModelManifold::euclidean(3);
    CHECK(mean_K_ball(flat3, fn("r"), 1.0) == doctest::Approx(0.25).epsilon(1e-11));
    CHECK(mean_K_ball(flat3, fn("r^2"), 2.0) == doctest::Approx(1.6).epsilon(1e-11));
    CHECK(mean_K_ball(flat3, fn("1"), 7.0) == doctest::Approx(7.0 / 3).epsilon(1e-12));
    for (double s : {1e-6, 5e-5, 0.3, 3.0, 40.0}) {
        INFO(s);
        CHECK(mean_K_ball(flat3, fn("r"), s) == doctest::Approx(flat_power_mean(3, 1, s)).epsilon(1e-10));
        CHECK(mean_K_ball(ModelManifold::euclidean(5), fn("r^3"), s) ==
              doctest::Approx(flat_power_mean(5, 3, s)).epsilon(1e-10));
    }

    // hyperbolic n = 3, K = 1: (sinh(2s)/4 - s/2) / sinh(s)^2, tending to 1/2,
    // also where h itself overflows
    const auto hyp = ModelManifold::hyperbolic(3, 1.0);
    for (double s : {0.5, 2.0, 10.0}) {
        const double exact = (std::sinh(2 * s) / 4 - s / 2) / (std::sinh(s) * std::sinh(s));
        CHECK(mean_K_ball(hyp, fn("1"), s) == doctest::Approx(exact).epsilon(1e-10));
    }
    for (double s : {400.0, 2000.0}) CHECK(mean_K_ball(hyp, fn("1"), s) == doctest::Approx(0.5).epsilon(1e-10));

    BallAverage avg(flat3, value_of(fn("r")));
    CHECK(avg.ball_integral(2.0) == doctest::Approx(std::numbers::pi * 16).epsilon(1e-11));
    CHECK(avg.mean(0.0) == 0.0);
}

TEST_CASE("ball average cache is order independent")
{
    const auto m = ModelManifold::hyperbolic(4, 0.7);
    const auto k = value_of(fn("sin(r) + r/3"));
    BallAverage up(m, k);
    BallAverage down(m, k);
    const std::vector<double> radii{0.1, 0.5, 1.5, 3.0, 9.0, 30.0};
    std::vector<double> a;
    for (double s : radii) a.push_back(up.mean(s));
    for (std::size_t i = radii.size(); i-- > 0;) CHECK(down.mean(radii[i]) == doctest::Approx(a[i]).epsilon(1e-10));
}

TEST_CASE("nested integral")
{
    const auto flat3 = ModelManifold::euclidean(3);
    CHECK(nested_I(flat3, fn("1"), 1.0) == doctest::Approx(1.0 / 6).epsilon(1e-11));
    CHECK(nested_I(flat3, fn("1"), 2.0) == doctest::Approx(4.0 / 6).epsilon(1e-11));
    CHECK(nested_I(flat3, fn("r^2"), 2.0) == doctest::Approx(16.0 / 20).epsilon(1e-11));
    // closed form r^{p+2} / ((p + 2)(n + p)) in flat R^n
    for (int n : {3, 4, 6}) {
        for (double p : {0.0, 0.5, 1.0, 2.5}) {
            const auto k = [p](double r) { return r == 0.0 && p == 0.0 ? Jet2::constant(1.0) : Jet2{std::pow(r, p), 0, 0}; };
            for (double r : {0.01, 1.0, 5.0}) {
                const double exact = std::pow(r, p + 2) / ((p + 2) * (n + p));
                CHECK(nested_I(ModelManifold::euclidean(n), k, r) == doctest::Approx(exact).epsilon(1e-10));
            }
        }
    }

    NestedIntegral I(ModelManifold::hyperbolic(3, 1.0), value_of(fn("r")));
    double prev = 0.0;
    for (double r = 0.25; r <= 50.0; r *= 1.3) {
        const double v = I(r);
        CHECK(v > prev);
        prev = v;
    }
}

TEST_CASE("improper integral classification on power laws")
{
    const auto c1 = classify_improper([](double r) { return 1.0 / (r * r); }, 1.0);
    CHECK(c1.kind == ImproperKind::convergent);
    CHECK(c1.value == doctest::Approx(1.0).epsilon(1e-5));

    const auto d1 = classify_improper([](double r) { return 1.0 / r; }, 1.0);
    CHECK(d1.kind == ImproperKind::divergent);
    CHECK(d1.sign == 1);

    const auto dneg = classify_improper([](double r) { return -1.0 / std::sqrt(r); }, 1.0);
    CHECK(dneg.kind == ImproperKind::divergent);
    CHECK(dneg.sign == -1);

    for (double p : {1.5, 2.0, 3.0, 4.0}) {
        INFO(p);
        const auto res = classify_improper([p](double r) { return std::pow(r, -p); }, 1.0);
        CHECK(res.kind == ImproperKind::convergent);
        CHECK(res.value == doctest::Approx(1.0 / (p - 1)).epsilon(1e-4));
    }
    for (double p : {-1.0, 0.0, 0.5, 1.0}) {
        INFO(p);
        const auto res = classify_improper([p](double r) { return std::pow(r, -p); }, 1.0);
        CHECK(res.kind == ImproperKind::divergent);
    }

    // increments tend to log 2 from above, shrinking by less each doubling
    const auto settling = classify_improper([](double r) { return 1.0 / r + 1.0 / (r * r); }, 1.0);
    CHECK(settling.kind == ImproperKind::divergent);
    for (double p : {1.1, 1.25}) {
        INFO(p);
        const auto res = classify_improper([p](double r) { return std::pow(r, -p) * (1.0 + 1.0 / r); }, 1.0);
        CHECK(res.kind != ImproperKind::divergent);
    }

    const auto exp_decay = classify_improper([](double r) { return std::exp(-r); }, 1.0);
    CHECK(exp_decay.kind == ImproperKind::convergent);
    CHECK(exp_decay.value == doctest::Approx(std::exp(-1.0)).epsilon(1e-8));
    CHECK_THROWS_AS(classify_improper([](double r) { return r; }, 0.0), InvalidArgument);

    // trace radii double and the partial integrals are recorded in order
    REQUIRE(d1.trace.size() >= 2);
    for (std::size_t i = 1; i < d1.trace.size(); ++i) CHECK(d1.trace[i].r == 2 * d1.trace[i - 1].r);
    CHECK_FALSE(d1.rationale.empty());
}

TEST_CASE("limits at infinity")
{
    const auto coth = limit_at_infinity([](double r) { return 1.0 / std::tanh(r); });
    CHECK(coth.kind == LimitKind::finite);
    CHECK(coth.value == doctest::Approx(1.0).epsilon(1e-9));

    CHECK(limit_at_infinity([](double r) { return r * r; }).kind == LimitKind::pos_infinite);
    CHECK(limit_at_infinity([](double r) { return -r; }).kind == LimitKind::neg_infinite);
    CHECK(limit_at_infinity([](double r) { return std::sqrt(r); }).kind == LimitKind::pos_infinite);
    CHECK(limit_at_infinity([](double r) { return std::sin(r); }).kind == LimitKind::inconclusive);

    const auto rational = limit_at_infinity([](double r) { return (2 * r + 1) / (r + 3); });
    CHECK(rational.kind == LimitKind::finite);
    CHECK(rational.value == doctest::Approx(2.0).epsilon(1e-6));

    // overflow past a point truncates instead of failing
    const auto huge = limit_at_infinity([](double r) {
        const double v = std::exp(r);
        if (!std::isfinite(v)) throw OverflowError("exp overflow");
        return v;
    });
    CHECK(huge.kind == LimitKind::pos_infinite);
    CHECK(huge.truncated);
}

}
