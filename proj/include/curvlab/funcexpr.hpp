#pragma once

#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace curvlab {

/// Second-order jet of a function of r: value, first and second derivative.
struct Jet2 {
    double value = 0.0;
    double d1 = 0.0;
    double d2 = 0.0;

    static constexpr Jet2 constant(double c) { return {c, 0.0, 0.0}; }
    static constexpr Jet2 variable(double r) { return {r, 1.0, 0.0}; }

    friend bool operator==(const Jet2&, const Jet2&) = default;
};

Jet2 operator+(const Jet2& a, const Jet2& b);
Jet2 operator-(const Jet2& a, const Jet2& b);
Jet2 operator-(const Jet2& a);
Jet2 operator*(const Jet2& a, const Jet2& b);
Jet2 operator*(double s, const Jet2& a);
Jet2 operator/(const Jet2& a, const Jet2& b);

/// Chain rule for an outer function with known value, slope and curvature at a.value.
Jet2 compose(const Jet2& a, double f, double df, double d2f);

/// A function of the radius returning its second-order jet.
using RadialFn = std::function<Jet2(double)>;
/// A plain scalar function of the radius.
using ScalarFn = std::function<double(double)>;

enum class BinaryOp { add, sub, mul, div, pow };
enum class Func { sin, cos, tan, sinh, cosh, tanh, coth, exp, log, sqrt, abs, pow, atan };
enum class Constant { pi, e };

std::string_view func_name(Func f);
int func_arity(Func f);

/// Immutable expression tree over the single variable r. Copies share nodes.
class Expr {
public:
    struct Number;
    struct Var;
    struct Const;
    struct Neg;
    struct Binary;
    struct Call;
    using Node = std::variant<Number, Var, Const, Neg, Binary, Call>;

    static Expr number(double v);
    static Expr var();
    static Expr constant(Constant c);
    static Expr neg(Expr operand);
    static Expr binary(BinaryOp op, Expr lhs, Expr rhs);
    static Expr call(Func fn, std::vector<Expr> args);

    const Node& node() const;

    friend bool operator==(const Expr& a, const Expr& b);

private:
    explicit Expr(Node n);
    std::shared_ptr<const Node> node_;
};

struct Expr::Number { double value; };
struct Expr::Var {};
struct Expr::Const { Constant which; };
struct Expr::Neg { Expr operand; };
struct Expr::Binary { BinaryOp op; Expr lhs; Expr rhs; };
struct Expr::Call { Func fn; std::vector<Expr> args; };

/// Parses the expression language. Precedence from loosest: + -, * /, unary
/// minus, ^ (right associative). Throws SyntaxError.
Expr parse(std::string_view source);

/// Canonical text form; parse(to_string(e)) == e.
std::string to_string(const Expr& e);

/// Value and exact first/second derivatives at r. Throws DomainError or
/// OverflowError naming the offending sub-expression.
Jet2 eval_jet2(const Expr& e, double r);

inline double eval(const Expr& e, double r) { return eval_jet2(e, r).value; }

/// Wraps an expression as a radial function (captures the tree by value).
RadialFn as_radial(Expr e);

} // namespace curvlab
