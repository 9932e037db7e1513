#include "curvlab/criteria.hpp"
#include "curvlab/errors.hpp"
#include "curvlab/funcexpr.hpp"
#include "curvlab/radial_ode.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace curvlab;

namespace {

RadialFn fn(const char* text) { return as_radial(parse(text)); }

double bubble(double r) { return 1.0 / std::sqrt(1.0 + r * r); }

Solution sampled(const char* u_text, double r_max, int points)
{
    const auto e = parse(u_text);
    std::vector<double> g, u, up, upp;
    for (int i = 0; i <= points; ++i) {
        const double r = r_max * i / points;
        const Jet2 j = eval_jet2(e, r);
        g.push_back(r);
        u.push_back(j.value);
        up.push_back(j.d1);
        upp.push_back(j.d2);
    }
    return Solution::from_samples(g, u, up, upp);
}

// Geometric grid from 0 with a dense start, for long synthetic profiles.
Solution sampled_geometric(const char* u_text, double r_max, int points)
{
    const auto e = parse(u_text);
    std::vector<double> g{0.0}, u, up, upp;
    for (int i = 0; i < points; ++i) g.push_back(1e-3 * std::pow(r_max / 1e-3, i / double(points - 1)));
    for (double r : g) {
        const Jet2 j = eval_jet2(e, r);
        u.push_back(j.value);
        up.push_back(j.d1);
        upp.push_back(j.d2);
    }
    return Solution::from_samples(g, u, up, upp);
}

} // namespace

TEST_SUITE("radial_ode") {

TEST_CASE("conformal exponents")
{
    const auto e3 = ConformalExponents::of(3);
    CHECK(e3.c_n == 8.0);
    CHECK(e3.sigma == 5.0);
    CHECK(e3.alpha == -4.0);
    const auto e4 = ConformalExponents::of(4);
    CHECK(e4.c_n == 6.0);
    CHECK(e4.sigma == 3.0);
    CHECK(e4.alpha == -2.0);
    for (int n = 3; n < 12; ++n) {
        const auto e = ConformalExponents::of(n);
        CHECK(e.c_n > 0);
        CHECK(e.sigma > 1);
        CHECK(e.alpha == doctest::Approx(1 - e.sigma));
    }
    CHECK_THROWS_AS(ConformalExponents::of(2), InvalidDimension);
}

TEST_CASE("constant solution when K equals k")
{
    const auto sol = solve_radial(ModelManifold::hyperbolic(3, 1.0), fn("-6"), 1.0, 20.0, 1e-10);
    CHECK(sol.status() == SolveStatus::completed);
    CHECK(sol.stop_radius() == 20.0);
    double dev = 0;
    for (double u : sol.u()) dev = std::max(dev, std::fabs(u - 1.0));
    CHECK(dev <= 1e-9);
}

TEST_CASE("bubble")
{
    const auto m = ModelManifold::euclidean(3);
    const auto sol = solve_radial(m, fn("24"), 1.0, 10.0, 1e-10, "24");
    REQUIRE(sol.status() == SolveStatus::completed);
    CHECK(sol.grid().front() == 0.0);
    CHECK(sol.grid().back() == 10.0);
    double worst = 0;
    for (std::size_t i = 0; i < sol.grid().size(); ++i)
        worst = std::max(worst, std::fabs(sol.u()[i] / bubble(sol.grid()[i]) - 1.0));
    CHECK(worst <= 1e-6);
    // interpolant between nodes
    for (double r = 0.05; r < 10.0; r += 0.37) CHECK(std::fabs(sol(r).value / bubble(r) - 1.0) <= 1e-6);

    // residual on the solver's grid
    const auto res = residual(m, fn("24"), sol.as_radial(), sol.grid());
    CHECK(res.max_abs <= 100 * 1e-10);
    CHECK(res.classification == ResidualClass::solution);
}

TEST_CASE("refining the tolerance stays within the reported error")
{
    const auto m = ModelManifold::euclidean(3);
    for (double tol : {1e-6, 1e-8}) {
        const auto coarse = solve_radial(m, fn("24"), 1.0, 10.0, tol);
        const auto fine = solve_radial(m, fn("24"), 1.0, 10.0, tol / 2);
        CHECK(std::fabs(coarse.u().back() - fine.u().back()) <= 10 * coarse.error_estimate());
    }
}

TEST_CASE("negative K blows up monotonically and matches a fixed-step reference")
{
    const auto m = ModelManifold::euclidean(3);
    const auto sol = solve_radial(m, fn("-24"), 1.0, 5.0, 1e-10);
    CHECK((sol.status() == SolveStatus::completed || sol.status() == SolveStatus::blow_up));
    CHECK(sol.status() == SolveStatus::blow_up);
    for (std::size_t i = 1; i < sol.u().size(); ++i) CHECK(sol.u()[i] > sol.u()[i - 1]);

    // classical RK4 with ten substeps per solver step, same Taylor start
    const auto& g = sol.grid();
    auto f = [](double r, double u, double v) { return 3.0 * std::pow(u, 5) - 2.0 * v / r; };
    double u = sol.u()[1];
    double v = sol.u_prime()[1];
    for (std::size_t i = 2; i < g.size(); ++i) {
        const double h = (g[i] - g[i - 1]) / 10;
        double r = g[i - 1];
        for (int s = 0; s < 10; ++s) {
            const double k1u = v, k1v = f(r, u, v);
            const double k2u = v + h / 2 * k1v, k2v = f(r + h / 2, u + h / 2 * k1u, v + h / 2 * k1v);
            const double k3u = v + h / 2 * k2v, k3v = f(r + h / 2, u + h / 2 * k2u, v + h / 2 * k2v);
            const double k4u = v + h * k3v, k4v = f(r + h, u + h * k3u, v + h * k3v);
            u += h / 6 * (k1u + 2 * k2u + 2 * k3u + k4u);
            v += h / 6 * (k1v + 2 * k2v + 2 * k3v + k4v);
            r += h;
        }
        if (sol.u()[i] > 100.0) break;
        CHECK(std::fabs(u / sol.u()[i] - 1.0) <= 1e-6);
    }
}

TEST_CASE("Taylor start matches the pole expansion")
{
    // K = 24 on flat R^3: u = 1 - r^2/2 + O(r^4)
    const auto sol = solve_radial(ModelManifold::euclidean(3), fn("24"), 1.0, 1.0, 1e-10);
    CHECK(sol.u_second().front() == doctest::Approx(-1.0));
    CHECK(sol.u()[1] == doctest::Approx(bubble(kTaylorStart)).epsilon(1e-15));
}

TEST_CASE("argument checks")
{
    const auto m = ModelManifold::euclidean(3);
    CHECK_THROWS_AS(solve_radial(m, fn("1"), 0.0, 1.0, 1e-8), InvalidArgument);
    CHECK_THROWS_AS(solve_radial(m, fn("1"), 1.0, 0.0, 1e-8), InvalidArgument);
    CHECK_THROWS_AS(solve_radial(m, fn("1"), 1.0, 1.0, 0.0), InvalidArgument);
    CHECK_THROWS_AS(Solution::from_samples({0, 1}, {1, -1}, {0, 0}, {0, 0}), InvalidArgument);
    CHECK_THROWS_AS(Solution::from_samples({0, 0}, {1, 1}, {0, 0}, {0, 0}), InvalidArgument);
    CHECK_THROWS_AS(Solution::from_samples({0, 1}, {1}, {0, 0}, {0, 0}), InvalidArgument);
}

TEST_CASE("residual classification")
{
    const auto flat = ModelManifold::euclidean(3);
    std::vector<double> grid;
    for (int i = 0; i <= 200; ++i) grid.push_back(0.05 * i);
    const auto exact = residual(flat, fn("24"), fn("(1 + r^2)^(-1/2)"), grid);
    CHECK(exact.max_abs <= 1e-8);
    CHECK(exact.classification == ResidualClass::solution);

    const auto hyp = ModelManifold::hyperbolic(3, 1.0);
    const auto sub = residual(hyp, fn("0"), fn("1"), grid);
    CHECK(sub.classification == ResidualClass::subsolution);
    for (const auto& p : sub.values) CHECK(p.value == doctest::Approx(6.0));
    CHECK(residual(hyp, fn("-6"), fn("1"), grid).classification == ResidualClass::solution);
    CHECK(residual(hyp, fn("-12"), fn("1"), grid).classification == ResidualClass::supersolution);
    CHECK(residual(flat, fn("0"), fn("1 + 0.1*sin(r)"), grid).classification == ResidualClass::mixed);
}

TEST_CASE("lower bound on solutions and supersolutions")
{
    const auto flat = ModelManifold::euclidean(3);
    const auto sol = solve_radial(flat, fn("24"), 1.0, 10.0, 1e-10);
    const auto rep = verify_lower_bound(flat, fn("24"), sol);
    CHECK(rep.precondition_holds);
    CHECK(rep.holds);
    CHECK(rep.min_margin >= -1e-6);
    // margin (1 + r^2)^2 - 2 r^2 = 1 + r^4
    for (const auto& p : rep.margin) CHECK(p.value == doctest::Approx(1 + std::pow(p.r, 4)).epsilon(1e-5));
    CHECK(rep.at == 0.0);

    const auto hyp = ModelManifold::hyperbolic(3, 1.0);
    const auto one = sampled("1", 10.0, 100);
    const auto hrep = verify_lower_bound(hyp, fn("-6"), one);
    CHECK(hrep.precondition_holds);
    CHECK(hrep.holds);
    CHECK(hrep.min_margin == doctest::Approx(1.0));
    for (const auto& p : hrep.margin) CHECK(p.value >= 1.0);

    // a supersolution: u = 1 on hyperbolic space with K = -12
    const auto super = verify_lower_bound(hyp, fn("-12"), one);
    CHECK(super.classification == ResidualClass::supersolution);
    CHECK(super.holds);

    // the bound fails for a subsolution with large K
    const auto bad = verify_lower_bound(flat, fn("100"), sampled("1", 5.0, 50));
    CHECK_FALSE(bad.precondition_holds);
    CHECK_FALSE(bad.holds);
}

TEST_CASE("conformal length")
{
    const auto flat = ModelManifold::euclidean(3);
    const auto sol = solve_radial(flat, fn("24"), 1.0, 1000.0, 1e-11);
    REQUIRE(sol.status() == SolveStatus::completed);
    const auto len = conformal_length(flat, sol, 0.0);
    CHECK(len.tail == TailKind::finite);
    CHECK(len.length == doctest::Approx(std::numbers::pi / 2).epsilon(1e-6));
    CHECK(len.body == doctest::Approx(std::atan(1000.0)).epsilon(1e-8));
    REQUIRE(len.decay_exponent);
    CHECK(*len.decay_exponent == doctest::Approx(1.0).epsilon(1e-4));

    const auto from_one = conformal_length(flat, sol, 1.0);
    CHECK(from_one.length == doctest::Approx(std::numbers::pi / 4).epsilon(1e-6));

    const auto one = sampled_geometric("1", 1000.0, 400);
    const auto flat_len = conformal_length(flat, one, 0.0);
    CHECK(flat_len.tail == TailKind::infinite);
    CHECK(flat_len.body == doctest::Approx(1000.0).epsilon(1e-10));

    const auto inv = sampled_geometric("1/(1 + r)", 1000.0, 400);
    const auto inv_len = conformal_length(flat, inv, 0.0);
    CHECK(inv_len.tail == TailKind::finite);
    CHECK(inv_len.length == doctest::Approx(1.0).epsilon(1e-3));

    CHECK_THROWS_AS(conformal_length(flat, sol, 2000.0), InvalidArgument);

    const auto blown = solve_radial(flat, fn("-24"), 1.0, 5.0, 1e-10);
    CHECK(conformal_length(flat, blown, 0.0).tail == TailKind::inconclusive);
}

TEST_CASE("infimum estimate")
{
    const auto flat = ModelManifold::euclidean(3);
    const auto sol = solve_radial(flat, fn("24"), 1.0, 1000.0, 1e-11);
    const auto inf = inf_estimate(sol);
    CHECK(inf.trend == InfTrend::decreasing_to_zero);
    CHECK(inf.inf_on_grid == doctest::Approx(bubble(1000.0)).epsilon(1e-6));
    CHECK(inf.at == 1000.0);

    const auto one = inf_estimate(sampled_geometric("1", 100.0, 200));
    CHECK(one.trend == InfTrend::bounded_below);
    CHECK(one.inf_on_grid == 1.0);

    CHECK(inf_estimate(sampled("2 + sin(r)", 100.0, 2000)).trend == InfTrend::inconclusive);
}

TEST_CASE("the positive-K chain agrees")
{
    const auto flat = ModelManifold::euclidean(3);
    const auto verdict = check_inf_zero_integral(flat, fn("24"));
    CHECK(verdict.has_clause("a"));
    const auto sol = solve_radial(flat, fn("24"), 1.0, 1000.0, 1e-11);
    CHECK(inf_estimate(sol).trend == InfTrend::decreasing_to_zero);
    CHECK(conformal_length(flat, sol, 0.0).tail == TailKind::finite);
}

}
