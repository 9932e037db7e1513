#pragma once

// Random expression trees for the property tests. Test-only.

#include "curvlab/errors.hpp"
#include "curvlab/funcexpr.hpp"

#include <cmath>

#include <random>

namespace curvlab::testing {

class ExprGenerator {
public:
    explicit ExprGenerator(std::uint64_t seed) : rng_(seed) {}

    Expr operator()(int depth) { return gen(depth); }

private:
    Expr leaf()
    {
        const int pick = uniform_int(0, 9);
        if (pick < 5) return Expr::var();
        if (pick == 5) return Expr::constant(Constant::pi);
        if (pick == 6) return Expr::constant(Constant::e);
        return Expr::number(std::uniform_real_distribution<double>(0.1, 3.0)(rng_));
    }

    Expr gen(int depth)
    {
        if (depth <= 0 || uniform_int(0, 3) == 0) return leaf();
        const int pick = uniform_int(0, 9);
        if (pick == 0) return Expr::neg(gen(depth - 1));
        if (pick <= 4) {
            const auto op = static_cast<BinaryOp>(uniform_int(0, 4));
            if (op == BinaryOp::pow) {
                // Small exponents keep values in a sane range.
                Expr expo = uniform_int(0, 1) == 0 ? Expr::number(uniform_int(1, 3))
                                                   : Expr::number(std::uniform_real_distribution<double>(0.2, 2.5)(rng_));
                return Expr::binary(op, gen(depth - 1), expo);
            }
            return Expr::binary(op, gen(depth - 1), gen(depth - 1));
        }
        const auto fn = static_cast<Func>(uniform_int(0, 12));
        if (func_arity(fn) == 2) return Expr::call(fn, {gen(depth - 1), gen(depth - 1)});
        return Expr::call(fn, {gen(depth - 1)});
    }

    int uniform_int(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

    std::mt19937_64 rng_;
};

/// Outcome of checking one jet against centred differences.
struct FdCheck {
    bool usable = false;  ///< point is well conditioned for the difference oracle
    bool pass = false;
    double err_d1 = 0.0;
    double err_d2 = 0.0;
};

/// d1 is compared with the centred difference of the value, d2 with the centred
/// difference of d1 (both step h). Points where the difference quotient itself
/// is unstable (h vs 2h disagree) or magnitudes exceed 1e4 are marked unusable.
inline FdCheck check_against_differences(const Expr& e, double r, double h = 1e-5, double tol = 1e-6)
{
    FdCheck out;
    try {
        const Jet2 j = eval_jet2(e, r);
        if (std::fabs(j.value) > 1e4 || std::fabs(j.d1) > 1e4 || std::fabs(j.d2) > 1e4) return out;
        auto val = [&](double x) { return eval_jet2(e, x).value; };
        auto der = [&](double x) { return eval_jet2(e, x).d1; };
        const double fd1 = (val(r + h) - val(r - h)) / (2 * h);
        const double fd1_wide = (val(r + 2 * h) - val(r - 2 * h)) / (4 * h);
        const double fd2 = (der(r + h) - der(r - h)) / (2 * h);
        const double fd2_wide = (der(r + 2 * h) - der(r - 2 * h)) / (4 * h);
        if (std::fabs(fd1 - fd1_wide) > 0.1 * tol * (1 + std::fabs(fd1))) return out;
        if (std::fabs(fd2 - fd2_wide) > 0.1 * tol * (1 + std::fabs(fd2))) return out;
        out.usable = true;
        out.err_d1 = std::fabs(j.d1 - fd1) / (1 + std::fabs(j.d1));
        out.err_d2 = std::fabs(j.d2 - fd2) / (1 + std::fabs(j.d2));
        out.pass = out.err_d1 <= tol && out.err_d2 <= tol;
    } catch (const Error&) {
    }
    return out;
}

} // namespace curvlab::testing
