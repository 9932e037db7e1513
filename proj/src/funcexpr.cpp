#include "curvlab/funcexpr.hpp"

#include "curvlab/errors.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>
#include <optional>

#include <fmt/format.h>

namespace curvlab {

// ---------------------------------------------------------------------------
// Jet arithmetic

Jet2 operator+(const Jet2& a, const Jet2& b) { return {a.value + b.value, a.d1 + b.d1, a.d2 + b.d2}; }
Jet2 operator-(const Jet2& a, const Jet2& b) { return {a.value - b.value, a.d1 - b.d1, a.d2 - b.d2}; }
Jet2 operator-(const Jet2& a) { return {-a.value, -a.d1, -a.d2}; }
Jet2 operator*(double s, const Jet2& a) { return {s * a.value, s * a.d1, s * a.d2}; }

Jet2 operator*(const Jet2& a, const Jet2& b)
{
    return {a.value * b.value,
            a.d1 * b.value + a.value * b.d1,
            a.d2 * b.value + 2.0 * a.d1 * b.d1 + a.value * b.d2};
}

Jet2 operator/(const Jet2& a, const Jet2& b)
{
    const double q = a.value / b.value;
    const double q1 = (a.d1 - q * b.d1) / b.value;
    const double q2 = (a.d2 - 2.0 * q1 * b.d1 - q * b.d2) / b.value;
    return {q, q1, q2};
}

Jet2 compose(const Jet2& a, double f, double df, double d2f)
{
    // Terms with a zero factor are dropped so that an infinite outer
    // derivative times a vanishing inner one stays 0 instead of NaN.
    const double t1 = a.d1 == 0.0 ? 0.0 : df * a.d1;
    const double t2a = a.d1 == 0.0 ? 0.0 : d2f * a.d1 * a.d1;
    const double t2b = a.d2 == 0.0 ? 0.0 : df * a.d2;
    return {f, t1, t2a + t2b};
}

// ---------------------------------------------------------------------------
// Tree

namespace {

struct FuncInfo {
    Func fn;
    std::string_view name;
    int arity;
};

constexpr std::array<FuncInfo, 13> kFuncs{{
    {Func::sin, "sin", 1},   {Func::cos, "cos", 1},   {Func::tan, "tan", 1},
    {Func::sinh, "sinh", 1}, {Func::cosh, "cosh", 1}, {Func::tanh, "tanh", 1},
    {Func::coth, "coth", 1}, {Func::exp, "exp", 1},   {Func::log, "log", 1},
    {Func::sqrt, "sqrt", 1}, {Func::abs, "abs", 1},   {Func::pow, "pow", 2},
    {Func::atan, "atan", 1},
}};

std::optional<Func> lookup_func(std::string_view name)
{
    for (const auto& f : kFuncs)
        if (f.name == name) return f.fn;
    return std::nullopt;
}

} // namespace

std::string_view func_name(Func f) { return kFuncs[static_cast<std::size_t>(f)].name; }
int func_arity(Func f) { return kFuncs[static_cast<std::size_t>(f)].arity; }

Expr::Expr(Node n) : node_(std::make_shared<const Node>(std::move(n))) {}

const Expr::Node& Expr::node() const { return *node_; }

Expr Expr::number(double v) { return Expr(Number{v}); }
Expr Expr::var() { return Expr(Var{}); }
Expr Expr::constant(Constant c) { return Expr(Const{c}); }
Expr Expr::neg(Expr operand) { return Expr(Neg{std::move(operand)}); }
Expr Expr::binary(BinaryOp op, Expr lhs, Expr rhs) { return Expr(Binary{op, std::move(lhs), std::move(rhs)}); }

Expr Expr::call(Func fn, std::vector<Expr> args)
{
    if (static_cast<int>(args.size()) != func_arity(fn))
        throw InvalidArgument(fmt::format("{} takes {} argument(s), got {}", func_name(fn), func_arity(fn), args.size()));
    return Expr(Call{fn, std::move(args)});
}

bool operator==(const Expr& a, const Expr& b)
{
    if (a.node_ == b.node_) return true;
    const auto& na = a.node();
    const auto& nb = b.node();
    if (na.index() != nb.index()) return false;
    return std::visit(
        [&](const auto& x) -> bool {
            using T = std::decay_t<decltype(x)>;
            const auto& y = std::get<T>(nb);
            if constexpr (std::is_same_v<T, Expr::Number>) {
                return x.value == y.value;
            } else if constexpr (std::is_same_v<T, Expr::Var>) {
                return true;
            } else if constexpr (std::is_same_v<T, Expr::Const>) {
                return x.which == y.which;
            } else if constexpr (std::is_same_v<T, Expr::Neg>) {
                return x.operand == y.operand;
            } else if constexpr (std::is_same_v<T, Expr::Binary>) {
                return x.op == y.op && x.lhs == y.lhs && x.rhs == y.rhs;
            } else {
                return x.fn == y.fn && x.args == y.args;
            }
        },
        na);
}

// ---------------------------------------------------------------------------
// Parser

namespace {

const std::vector<std::string> kOperandStart{"number", "r", "pi", "e", "function name", "(", "-"};

class Parser {
public:
    explicit Parser(std::string_view src) : src_(src) {}

    Expr parse_all()
    {
        Expr e = parse_sum();
        skip_ws();
        if (pos_ < src_.size()) {
            throw SyntaxError(pos_, {"+", "-", "*", "/", "^", "end of input"},
                              fmt::format("unexpected '{}'", src_[pos_]));
        }
        return e;
    }

private:
    void skip_ws()
    {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }

    bool accept(char c)
    {
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c)
    {
        if (!accept(c)) {
            throw SyntaxError(pos_, {std::string(1, c)},
                              pos_ < src_.size() ? fmt::format("unexpected '{}'", src_[pos_])
                                                 : std::string("unexpected end of input"));
        }
    }

    Expr parse_sum()
    {
        Expr lhs = parse_product();
        for (;;) {
            if (accept('+')) {
                lhs = Expr::binary(BinaryOp::add, lhs, parse_product());
            } else if (accept('-')) {
                lhs = Expr::binary(BinaryOp::sub, lhs, parse_product());
            } else {
                return lhs;
            }
        }
    }

    Expr parse_product()
    {
        Expr lhs = parse_unary();
        for (;;) {
            if (accept('*')) {
                lhs = Expr::binary(BinaryOp::mul, lhs, parse_unary());
            } else if (accept('/')) {
                lhs = Expr::binary(BinaryOp::div, lhs, parse_unary());
            } else {
                return lhs;
            }
        }
    }

    Expr parse_unary()
    {
        if (accept('-')) return Expr::neg(parse_unary());
        return parse_power();
    }

    Expr parse_power()
    {
        Expr base = parse_primary();
        if (accept('^')) return Expr::binary(BinaryOp::pow, base, parse_unary());
        return base;
    }

    Expr parse_primary()
    {
        skip_ws();
        if (pos_ >= src_.size()) throw SyntaxError(pos_, kOperandStart, "unexpected end of input");

        const char c = src_[pos_];
        if (c == '(') {
            ++pos_;
            Expr inner = parse_sum();
            expect(')');
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();

        throw SyntaxError(pos_, kOperandStart, fmt::format("unexpected '{}'", c));
    }

    Expr parse_number()
    {
        const std::size_t start = pos_;
        auto digits = [&] {
            std::size_t n = 0;
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
                ++pos_;
                ++n;
            }
            return n;
        };
        std::size_t n = digits();
        if (pos_ < src_.size() && src_[pos_] == '.') {
            ++pos_;
            n += digits();
        }
        if (n == 0) throw SyntaxError(start, {"digit"}, "malformed number");

        // Exponent only when well formed, so "2e" is left for the caller to reject.
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            std::size_t look = pos_ + 1;
            if (look < src_.size() && (src_[look] == '+' || src_[look] == '-')) ++look;
            if (look < src_.size() && std::isdigit(static_cast<unsigned char>(src_[look]))) {
                pos_ = look;
                digits();
            }
        }

        double value = 0.0;
        const auto* first = src_.data() + start;
        const auto* last = src_.data() + pos_;
        auto [ptr, ec] = std::from_chars(first, last, value);
        if (ec != std::errc() || ptr != last) throw SyntaxError(start, {"number"}, "malformed number");
        if (!std::isfinite(value)) throw SyntaxError(start, {"number"}, "number out of range");
        return Expr::number(value);
    }

    Expr parse_identifier()
    {
        const std::size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
            ++pos_;
        const std::string_view name = src_.substr(start, pos_ - start);

        if (name == "r") return Expr::var();
        if (name == "pi") return Expr::constant(Constant::pi);
        if (name == "e") return Expr::constant(Constant::e);

        const auto fn = lookup_func(name);
        if (!fn) {
            std::vector<std::string> names{"r", "pi", "e"};
            for (const auto& f : kFuncs) names.emplace_back(f.name);
            throw SyntaxError(start, std::move(names), fmt::format("unknown identifier '{}'", name));
        }

        expect('(');
        std::vector<Expr> args;
        args.push_back(parse_sum());
        while (static_cast<int>(args.size()) < func_arity(*fn)) {
            expect(',');
            args.push_back(parse_sum());
        }
        expect(')');
        return Expr::call(*fn, std::move(args));
    }

    std::string_view src_;
    std::size_t pos_ = 0;
};

} // namespace

Expr parse(std::string_view source) { return Parser(source).parse_all(); }

// ---------------------------------------------------------------------------
// Printer

namespace {

int precedence(const Expr& e)
{
    const auto& n = e.node();
    if (const auto* b = std::get_if<Expr::Binary>(&n)) {
        switch (b->op) {
        case BinaryOp::add:
        case BinaryOp::sub: return 1;
        case BinaryOp::mul:
        case BinaryOp::div: return 2;
        case BinaryOp::pow: return 4;
        }
    }
    if (std::holds_alternative<Expr::Neg>(n)) return 3;
    if (const auto* num = std::get_if<Expr::Number>(&n); num && std::signbit(num->value)) return 3;
    return 5;
}

void print(const Expr& e, std::string& out);

void print_wrapped(const Expr& e, bool parens, std::string& out)
{
    if (parens) out += '(';
    print(e, out);
    if (parens) out += ')';
}

void print(const Expr& e, std::string& out)
{
    std::visit(
        [&](const auto& x) {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, Expr::Number>) {
                out += fmt::format("{}", x.value);
            } else if constexpr (std::is_same_v<T, Expr::Var>) {
                out += 'r';
            } else if constexpr (std::is_same_v<T, Expr::Const>) {
                out += x.which == Constant::pi ? "pi" : "e";
            } else if constexpr (std::is_same_v<T, Expr::Neg>) {
                out += '-';
                print_wrapped(x.operand, precedence(x.operand) < 3, out);
            } else if constexpr (std::is_same_v<T, Expr::Binary>) {
                if (x.op == BinaryOp::pow) {
                    print_wrapped(x.lhs, precedence(x.lhs) <= 4, out);
                    out += '^';
                    print_wrapped(x.rhs, precedence(x.rhs) < 3, out);
                    return;
                }
                const int p = precedence(e);
                print_wrapped(x.lhs, precedence(x.lhs) < p, out);
                switch (x.op) {
                case BinaryOp::add: out += " + "; break;
                case BinaryOp::sub: out += " - "; break;
                case BinaryOp::mul: out += " * "; break;
                case BinaryOp::div: out += " / "; break;
                case BinaryOp::pow: break;
                }
                print_wrapped(x.rhs, precedence(x.rhs) <= p, out);
            } else {
                out += func_name(x.fn);
                out += '(';
                for (std::size_t i = 0; i < x.args.size(); ++i) {
                    if (i > 0) out += ", ";
                    print(x.args[i], out);
                }
                out += ')';
            }
        },
        e.node());
}

} // namespace

std::string to_string(const Expr& e)
{
    std::string out;
    print(e, out);
    return out;
}

// ---------------------------------------------------------------------------
// Evaluation

namespace {

bool is_integer(double p) { return std::floor(p) == p && std::fabs(p) < 9007199254740992.0; }

[[noreturn]] void domain_error(const Expr& node, const std::string& detail)
{
    throw DomainError(fmt::format("{} in '{}'", detail, to_string(node)));
}

Jet2 power(const Expr& node, const Jet2& base, const Jet2& expo)
{
    const double x = base.value;
    if (expo.d1 == 0.0 && expo.d2 == 0.0) {
        const double p = expo.value;
        if (x < 0.0 && !is_integer(p))
            domain_error(node, fmt::format("negative base {} with non-integer exponent {}", x, p));
        if (p == 0.0) return Jet2::constant(1.0);
        const double f = std::pow(x, p);
        const double df = p * std::pow(x, p - 1.0);
        const double d2f = (p == 1.0) ? 0.0 : p * (p - 1.0) * std::pow(x, p - 2.0);
        return compose(base, f, df, d2f);
    }
    if (x <= 0.0)
        domain_error(node, fmt::format("non-positive base {} with variable exponent", x));
    const double lx = std::log(x);
    const Jet2 log_base = compose(base, lx, 1.0 / x, -1.0 / (x * x));
    const Jet2 w = expo * log_base;
    const double ew = std::exp(w.value);
    return compose(w, ew, ew, ew);
}

Jet2 apply(const Expr& node, Func fn, const std::vector<Jet2>& a)
{
    const Jet2& u = a[0];
    const double x = u.value;
    switch (fn) {
    case Func::sin: return compose(u, std::sin(x), std::cos(x), -std::sin(x));
    case Func::cos: return compose(u, std::cos(x), -std::sin(x), -std::cos(x));
    case Func::tan: {
        const double t = std::tan(x);
        const double s = 1.0 + t * t;
        return compose(u, t, s, 2.0 * t * s);
    }
    case Func::sinh: return compose(u, std::sinh(x), std::cosh(x), std::sinh(x));
    case Func::cosh: return compose(u, std::cosh(x), std::sinh(x), std::cosh(x));
    case Func::tanh: {
        const double t = std::tanh(x);
        const double s = 1.0 - t * t;
        return compose(u, t, s, -2.0 * t * s);
    }
    case Func::coth: {
        if (x == 0.0) domain_error(node, "coth pole at 0");
        // cosh/sinh written as 1/tanh so that large arguments stay finite.
        const double c = 1.0 / std::tanh(x);
        const double s = 1.0 - c * c;
        return compose(u, c, s, -2.0 * c * s);
    }
    case Func::exp: {
        const double ex = std::exp(x);
        return compose(u, ex, ex, ex);
    }
    case Func::log:
        if (x <= 0.0) domain_error(node, fmt::format("log of non-positive value {}", x));
        return compose(u, std::log(x), 1.0 / x, -1.0 / (x * x));
    case Func::sqrt: {
        if (x < 0.0) domain_error(node, fmt::format("sqrt of negative value {}", x));
        if (x == 0.0 && (u.d1 != 0.0 || u.d2 != 0.0))
            domain_error(node, "sqrt is not differentiable at 0");
        const double s = std::sqrt(x);
        if (x == 0.0) return Jet2::constant(0.0);
        return compose(u, s, 0.5 / s, -0.25 / (s * x));
    }
    case Func::abs: {
        const double sg = x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
        return compose(u, std::fabs(x), sg, 0.0);
    }
    case Func::pow: return power(node, a[0], a[1]);
    case Func::atan: {
        const double q = 1.0 / (1.0 + x * x);
        return compose(u, std::atan(x), q, -2.0 * x * q * q);
    }
    }
    throw std::logic_error("unhandled function");
}

Jet2 checked(const Expr& node, Jet2 j)
{
    if (!std::isfinite(j.value) || !std::isfinite(j.d1) || !std::isfinite(j.d2))
        throw OverflowError(fmt::format("non-finite value in '{}'", to_string(node)));
    return j;
}

Jet2 eval_node(const Expr& e, double r)
{
    return std::visit(
        [&](const auto& x) -> Jet2 {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, Expr::Number>) {
                return Jet2::constant(x.value);
            } else if constexpr (std::is_same_v<T, Expr::Var>) {
                return Jet2::variable(r);
            } else if constexpr (std::is_same_v<T, Expr::Const>) {
                return Jet2::constant(x.which == Constant::pi ? std::numbers::pi : std::numbers::e);
            } else if constexpr (std::is_same_v<T, Expr::Neg>) {
                return -eval_node(x.operand, r);
            } else if constexpr (std::is_same_v<T, Expr::Binary>) {
                const Jet2 a = eval_node(x.lhs, r);
                const Jet2 b = eval_node(x.rhs, r);
                switch (x.op) {
                case BinaryOp::add: return checked(e, a + b);
                case BinaryOp::sub: return checked(e, a - b);
                case BinaryOp::mul: return checked(e, a * b);
                case BinaryOp::div:
                    if (b.value == 0.0) domain_error(e, "division by zero");
                    return checked(e, a / b);
                case BinaryOp::pow: return checked(e, power(e, a, b));
                }
                throw std::logic_error("unhandled operator");
            } else {
                std::vector<Jet2> args;
                args.reserve(x.args.size());
                for (const auto& arg : x.args) args.push_back(eval_node(arg, r));
                return checked(e, apply(e, x.fn, args));
            }
        },
        e.node());
}

} // namespace

Jet2 eval_jet2(const Expr& e, double r)
{
    if (!std::isfinite(r)) throw DomainError(fmt::format("non-finite radius {}", r));
    return eval_node(e, r);
}

RadialFn as_radial(Expr e)
{
    return [expr = std::move(e)](double r) { return eval_jet2(expr, r); };
}

} // namespace curvlab
