#include "curvlab/errors.hpp"
#include "curvlab/funcexpr.hpp"
#include "curvlab/model_manifold.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace curvlab;
using std::numbers::pi;

namespace {

ModelManifold from_text(int n, const char* h) { return ModelManifold::custom(n, as_radial(parse(h)), h); }

bool close_rel(double a, double b, double tol) { return std::fabs(a - b) <= tol * std::max(1.0, std::fabs(b)); }

} // namespace

TEST_SUITE("model_manifold") {

TEST_CASE("unit sphere areas")
{
    CHECK(sphere_area_unit(3) == doctest::Approx(4 * pi).epsilon(1e-15));
    CHECK(sphere_area_unit(2) == doctest::Approx(2 * pi).epsilon(1e-15));
    CHECK(sphere_area_unit(4) == doctest::Approx(2 * pi * pi).epsilon(1e-15));
    CHECK(sphere_area_unit(4) == doctest::Approx(19.739209).epsilon(1e-7));
    CHECK_THROWS_AS(sphere_area_unit(1), InvalidDimension);
}

TEST_CASE("construction validates dimension and pole behaviour")
{
    CHECK_THROWS_AS(ModelManifold::euclidean(2), InvalidDimension);
    CHECK_THROWS_AS(from_text(3, "2*r"), InvalidWarp);
    CHECK_THROWS_AS(from_text(3, "r + 1"), InvalidWarp);
    CHECK_THROWS_AS(ModelManifold::hyperbolic(3, 0.0), InvalidArgument);
    const auto m = ModelManifold::euclidean(5);
    CHECK(m.omega_ball() == doctest::Approx(8 * pi * pi / 15).epsilon(1e-14));
}

TEST_CASE("sphere volumes")
{
    CHECK(volume_sphere(ModelManifold::euclidean(3), 2.0) == doctest::Approx(16 * pi).epsilon(1e-15));
    CHECK(volume_sphere(ModelManifold::hyperbolic(3, 1.0), 1.0) ==
          doctest::Approx(4 * pi * std::sinh(1.0) * std::sinh(1.0)).epsilon(1e-14));
    CHECK(volume_sphere(ModelManifold::hyperbolic(3, 1.0), 1.0) == doctest::Approx(17.355387).epsilon(1e-6));
    CHECK(volume_sphere(from_text(4, "sinh(r)"), 0.0) == 0.0);
    CHECK_THROWS_AS(volume_sphere(from_text(3, "sin(r)"), 4.0), NonPositiveWarp);
}

TEST_CASE("Laplacian of the distance function")
{
    CHECK(laplacian_r(ModelManifold::euclidean(3), 2.0) == doctest::Approx(1.0));
    CHECK(laplacian_r(ModelManifold::hyperbolic(3, 1.0), 1.0) == doctest::Approx(2.0 / std::tanh(1.0)).epsilon(1e-14));
    CHECK(laplacian_r(ModelManifold::hyperbolic(3, 1.0), 1.0) == doctest::Approx(2.626071).epsilon(1e-6));
    CHECK(laplacian_r(ModelManifold::hyperbolic(4, 2.0), 1e3) == doctest::Approx(6.0).epsilon(1e-14));
    CHECK_THROWS_AS(laplacian_r(ModelManifold::euclidean(3), 0.0), PoleError);

    // the custom path near the pole uses the expansion and matches coth
    const auto sinh_warp = from_text(3, "sinh(r)");
    for (double r : {1e-8, 5e-7, 2e-6, 1e-3, 0.5, 3.0}) {
        INFO(r);
        CHECK(close_rel(laplacian_r(sinh_warp, r), 2.0 / std::tanh(r), 1e-9));
    }
}

TEST_CASE("Laplacian of r is the log-derivative of the sphere volume")
{
    for (const auto& m : {from_text(3, "sinh(r)"), from_text(4, "r + r^3/6"), from_text(3, "(r + sinh(r))/2")}) {
        for (double r : {0.3, 1.0, 2.5, 6.0}) {
            const double step = 1e-5 * r;
            const double fd = (std::log(volume_sphere(m, r + step)) - std::log(volume_sphere(m, r - step))) / (2 * step);
            CHECK(std::fabs(laplacian_r(m, r) - fd) <= 1e-8 * std::max(1.0, fd));
        }
    }
}

TEST_CASE("scalar curvature")
{
    CHECK(scalar_curvature(ModelManifold::euclidean(5), 1.0) == 0.0);
    CHECK(scalar_curvature(ModelManifold::hyperbolic(3, 1.0), 1.0) == doctest::Approx(-6.0));
    CHECK(scalar_curvature(ModelManifold::hyperbolic(4, 2.0), 0.5) == doctest::Approx(-48.0));

    // the warped-product formula on h = sinh reproduces the constant value
    const auto sinh_warp = from_text(3, "sinh(r)");
    for (double r : {0.0, 1e-7, 0.1, 1.0, 5.0}) {
        INFO(r);
        CHECK(scalar_curvature(sinh_warp, r) == doctest::Approx(-6.0).epsilon(1e-6));
    }
    const auto h4 = from_text(4, "sinh(2*r)/2");
    CHECK(scalar_curvature(h4, 0.5) == doctest::Approx(-48.0).epsilon(1e-10));

    const auto overridden = ModelManifold::euclidean(3).with_k_override(as_radial(parse("-r")), "-r");
    CHECK(overridden.has_k_override());
    CHECK(scalar_curvature(overridden, 2.0) == -2.0);
}

TEST_CASE("ball volumes")
{
    CHECK(ball_volume(ModelManifold::euclidean(3), 1.0) == doctest::Approx(4 * pi / 3).epsilon(1e-12));
    CHECK(ball_volume(ModelManifold::hyperbolic(3, 1.0), 1.0) ==
          doctest::Approx(pi * (std::sinh(2.0) - 2.0)).epsilon(1e-11));
    CHECK(ball_volume(ModelManifold::hyperbolic(3, 1.0), 1.0) == doctest::Approx(5.110933).epsilon(1e-6));
    CHECK(ball_volume(ModelManifold::euclidean(4), 0.0) == 0.0);
}

TEST_CASE("Cartan-Hadamard validity and pinching")
{
    const auto flat = check_ch(ModelManifold::euclidean(3), 10.0, 64);
    CHECK(flat.valid);
    REQUIRE(flat.pinching);
    CHECK(*flat.pinching == 0.0);

    const auto sphere_like = check_ch(from_text(3, "sin(r)"), 3.0, 64);
    CHECK_FALSE(sphere_like.degenerate_at);
    CHECK_FALSE(sphere_like.valid);
    CHECK_FALSE(sphere_like.pinching);
    CHECK(!sphere_like.violations.empty());

    const auto hyp = check_ch(from_text(3, "sinh(r)"), 10.0, 64);
    CHECK(hyp.valid);
    REQUIRE(hyp.pinching);
    CHECK(*hyp.pinching == doctest::Approx(1.0).epsilon(1e-9));

    CHECK_THROWS_AS(check_ch(ModelManifold::euclidean(3), 10.0, 8), InvalidArgument);
}

TEST_CASE("comparison properties on valid manifolds")
{
    const std::vector<std::pair<ModelManifold, double>> corpus{
        {ModelManifold::euclidean(3), 0.0},
        {ModelManifold::hyperbolic(3, 1.0), 1.0},
        {ModelManifold::hyperbolic(5, 0.5), 0.5},
        {from_text(3, "(r + sinh(r))/2"), 1.0},
        {from_text(4, "r + r^3/6"), 3.0},
    };
    for (const auto& [m, c_bound] : corpus) {
        const auto rep = check_ch(m, 10.0, 200);
        REQUIRE(rep.valid);
        const int n = m.dim();
        for (const auto& s : rep.samples) {
            const double lap = laplacian_r(m, s.r);
            CHECK(lap >= (n - 1) / s.r - 1e-10);
            CHECK(scalar_curvature(m, s.r) <= 1e-10);
            const double c = *rep.pinching;
            if (c > 0.0) CHECK(lap <= (n - 1) * c / std::tanh(c * s.r) + 1e-10);
            (void)c_bound;
        }
        for (double r : {0.5, 1.0, 3.0, 7.0}) {
            const double rn = std::pow(r, n);
            CHECK(ball_volume(m, r) >= rn * m.omega_ball() - 1e-9 * rn);
        }
    }
}

TEST_CASE("sphere averages")
{
    const auto m = ModelManifold::euclidean(3);
    const auto radial = sphere_average(m, [](double r, const UnitVector&) { return 0.1 * r; }, 2.0, 500, 3);
    CHECK(radial.mean == 0.1 * 2.0);
    CHECK(radial.std_error == 0.0);

    const auto odd = sphere_average(m, [](double, const UnitVector& xi) { return xi[2]; }, 2.0, 20000, 42);
    CHECK(odd.std_error > 0.0);
    CHECK(std::fabs(odd.mean) <= 3 * odd.std_error);

    const auto lin = sphere_average(m, [](double r, const UnitVector& xi) { return r * r * (1 + xi[2]); }, 2.0, 20000, 42);
    CHECK(std::fabs(lin.mean - 4.0) <= 3 * lin.std_error);

    // deterministic for a fixed seed
    const auto again = sphere_average(m, [](double, const UnitVector& xi) { return xi[2]; }, 2.0, 20000, 42);
    CHECK(again.mean == odd.mean);
    CHECK(again.std_error == odd.std_error);

    // second moment of a coordinate is 1/n in any dimension
    const auto m5 = ModelManifold::hyperbolic(5, 1.0);
    const auto sq = sphere_average(m5, [](double, const UnitVector& xi) { return xi[0] * xi[0]; }, 1.0, 40000, 9);
    CHECK(std::fabs(sq.mean - 0.2) <= 4 * sq.std_error);

    CHECK_THROWS_AS(sphere_average(m, [](double, const UnitVector&) { return 1.0; }, 1.0, 50, 1), InvalidArgument);
}

TEST_CASE("a vanishing warp ends the curvature scan")
{
    const auto rep = check_ch(ModelManifold::custom(3, as_radial(parse("sin(r)"))), 10.0, 100);
    CHECK_FALSE(rep.valid);
    REQUIRE(rep.degenerate_at);
    CHECK(*rep.degenerate_at == doctest::Approx(3.2));
}

}
