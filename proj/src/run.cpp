#include "curvlab/run.hpp"

#include "curvlab/criteria.hpp"
#include "curvlab/errors.hpp"
#include "curvlab/model_manifold.hpp"
#include "curvlab/quadrature.hpp"
#include "curvlab/radial_ode.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <ostream>

#include <fmt/format.h>
#include <json.hpp>

namespace curvlab {

namespace {

using Json = nlohmann::ordered_json;

constexpr double kMonteCarloRadius = 1.0;

std::string num(double v) { return fmt::format("{:.17g}", v); }

std::string csv_text(std::string_view s)
{
    if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

/// A series value; overflow becomes +inf (null in JSON).
double cell(const std::function<double()>& f)
{
    try {
        return f();
    } catch (const OverflowError&) {
        return std::numeric_limits<double>::infinity();
    }
}

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

Json trace_json(const std::vector<TracePoint>& t)
{
    Json a = Json::array();
    for (const auto& p : t) a.push_back(Json::array({p.r, p.value}));
    return a;
}

struct Series {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    Json json() const
    {
        Json rows_json = Json::array();
        for (const auto& r : rows) rows_json.push_back(r);
        return Json{{"columns", columns}, {"rows", std::move(rows_json)}};
    }

    std::string csv() const
    {
        std::string out;
        for (std::size_t i = 0; i < columns.size(); ++i) out += (i ? "," : "") + columns[i];
        out += '\n';
        for (const auto& r : rows) {
            for (std::size_t i = 0; i < r.size(); ++i) out += (i ? "," : "") + num(r[i]);
            out += '\n';
        }
        return out;
    }
};

class Context {
public:
    explicit Context(const Config& cfg)
        : cfg_(cfg), m_(build_manifold(cfg)), k_(build_curvature(cfg)), policy_(criteria_policy(cfg))
    {
    }

    Json meta(Subcommand cmd) const
    {
        const auto& mc = cfg_.manifold;
        Json manifold{{"n", mc.n}};
        if (mc.preset) {
            manifold["preset"] = preset_name(*mc.preset);
            if (*mc.preset == Preset::hyperbolic) manifold["c"] = mc.c;
        } else {
            manifold["h"] = *mc.h;
        }
        if (mc.k_override) manifold["k_override"] = *mc.k_override;

        const auto& p = cfg_.policy;
        Json policy{{"quad_rel_tol", p.quad_rel_tol}, {"tol", p.tol},
                    {"big", p.big},                   {"doublings", p.doublings},
                    {"beta_tol", p.beta_tol},         {"R_max", p.R_max},
                    {"grid", p.grid},                 {"tail_points", p.tail_points},
                    {"ch_grid", p.ch_grid},           {"growth_factor", p.growth_factor},
                    {"delta", p.delta},               {"seed", p.seed},
                    {"mc_samples", p.mc_samples},     {"u0", p.u0},
                    {"r_max", p.r_max},               {"ode_tol", p.ode_tol},
                    {"a", p.a},                       {"geometry_points", p.geometry_points}};
        Json out{{"tool", "curvlab"},     {"version", kVersion},
                 {"subcommand", subcommand_name(cmd)}, {"manifold", std::move(manifold)},
                 {"curvature", {{"K", cfg_.K}}},      {"policy", std::move(policy)}};
        if (mc.k_override) {
            out["warning"] = fmt::format("scalar curvature k is overridden by '{}' and no longer derived from the "
                                         "metric; verdicts do not describe the manifold",
                                         *mc.k_override);
        }
        return out;
    }

    Series geometry() const
    {
        Series s{{"r", "h", "V", "Delta_r", "k", "vol_B"}, {}};
        const int n_pts = cfg_.policy.geometry_points;
        for (int i = 1; i <= n_pts; ++i) {
            const double r = cfg_.policy.r_max * i / n_pts;
            s.rows.push_back({r, cell([&] { return m_.warp(r).value; }), cell([&] { return volume_sphere(m_, r); }),
                              laplacian_r(m_, r), scalar_curvature(m_, r), cell([&] { return ball_volume(m_, r); })});
        }
        return s;
    }

    // ---- verdicts

    Json criteria_policy_json(bool with_delta) const
    {
        const auto& p = policy_;
        Json out{{"scan", {{"r_min", p.scan.r_min}, {"r_max", p.scan.r_max}, {"n_grid", p.scan.n_grid},
                           {"min_tail_points", p.scan.min_tail_points}}},
                 {"classify", {{"max_doublings", p.classify.max_doublings}, {"tol", p.classify.tol},
                               {"big", p.classify.big}, {"max_ratio", p.classify.max_ratio},
                               {"quad_rel_tol", p.classify.quad_rel_tol}}},
                 {"limit", {{"r0", p.limit.r0}, {"doublings", p.limit.doublings}, {"big", p.limit.big},
                            {"tol", p.limit.tol}, {"min_growth_exponent", p.limit.min_growth_exponent},
                            {"window", p.limit.window}}},
                 {"beta_tol", p.beta_tol},
                 {"integral_start", p.integral_start},
                 {"ch_grid", p.ch_grid}};
        if (with_delta) out["delta"] = cfg_.policy.delta;
        return out;
    }

    static Json verdict_json(const Verdict& v, Json policy)
    {
        const auto& ev = v.evidence;
        Json integrals = Json::array();
        for (const auto& i : ev.integrals) {
            integrals.push_back({{"name", i.name},
                                 {"kind", improper_kind_name(i.result.kind)},
                                 {"value", i.result.value},
                                 {"sign", i.result.sign},
                                 {"truncated", i.result.truncated},
                                 {"rationale", i.result.rationale},
                                 {"trace", trace_json(i.result.trace)}});
        }
        Json limits = Json::array();
        for (const auto& l : ev.limits) {
            limits.push_back({{"name", l.name},
                              {"kind", limit_kind_name(l.result.kind)},
                              {"value", l.result.value},
                              {"truncated", l.result.truncated},
                              {"rationale", l.result.rationale},
                              {"trace", trace_json(l.result.trace)}});
        }
        Json scans = Json::array();
        for (const auto& s : ev.scans) scans.push_back({{"name", s.name}, {"samples", trace_json(s.samples)}});
        return {{"criterion", v.criterion},
                {"kind", verdict_kind_name(v.kind)},
                {"clauses", v.clauses},
                {"statement", v.statement},
                {"policy", std::move(policy)},
                {"evidence",
                 {{"tail_start", optional_number(ev.tail_start)},
                  {"a_found", optional_number(ev.a_found)},
                  {"pinching_c", optional_number(ev.pinching_c)},
                  {"integrals", std::move(integrals)},
                  {"limits", std::move(limits)},
                  {"scans", std::move(scans)}}}};
    }

    static Json error_json(std::string_view criterion, const Error& e)
    {
        return {{"criterion", criterion}, {"kind", "Error"}, {"error", e.what()}};
    }

    Json checks() const
    {
        Json out = Json::array();
        out.push_back(verdict_json(check_inf_zero_integral(m_, k_, policy_), criteria_policy_json(false)));
        out.push_back(verdict_json(check_inf_zero_limit(m_, k_, policy_), criteria_policy_json(false)));
        out.push_back(verdict_json(check_no_complete_metric_integral(m_, k_, policy_), criteria_policy_json(false)));
        try {
            out.push_back(verdict_json(check_no_complete_metric_pinched(m_, k_, cfg_.policy.delta, policy_),
                                       criteria_policy_json(true)));
        } catch (const DeltaOutOfRange& e) {
            out.push_back(error_json("no_complete_metric_pinched", e));
        }
        try {
            const auto g = verify_volume_growth(m_, cfg_.policy.delta, cfg_.policy.R_max, cfg_.policy.ch_grid,
                                                cfg_.policy.growth_factor);
            out.push_back({{"criterion", "volume_growth"},
                           {"kind", g.pass() ? "Pass" : "Fail"},
                           {"statement", fmt::format("V(r) / r^(n-2+{}) nondecreasing and growing by at least {} "
                                                     "from r = {} to r = {}",
                                                     g.delta, g.required_growth, cfg_.policy.R_max / 4,
                                                     cfg_.policy.R_max)},
                           {"policy", {{"delta", g.delta}, {"r_max", cfg_.policy.R_max},
                                       {"n_grid", cfg_.policy.ch_grid}, {"growth_factor", g.required_growth}}},
                           {"evidence", {{"nondecreasing", g.nondecreasing},
                                         {"first_decrease", optional_number(g.first_decrease)},
                                         {"growth", g.growth},
                                         {"growth_ok", g.growth_ok},
                                         {"ratio", trace_json(g.ratio)}}}});
        } catch (const DeltaOutOfRange& e) {
            out.push_back(error_json("volume_growth", e));
        }
        return out;
    }

    std::string checks_csv(const Json& verdicts) const
    {
        std::string out = "criterion,kind,clauses,tail_start,a_found,pinching_c,statement\n";
        for (const auto& v : verdicts) {
            std::string clauses;
            std::string tail, a, c;
            if (v.contains("clauses")) {
                for (const auto& cl : v["clauses"]) clauses += (clauses.empty() ? "" : ";") + cl.get<std::string>();
            }
            if (v.contains("evidence")) {
                const auto& ev = v["evidence"];
                auto opt = [&](const char* key) {
                    return ev.contains(key) && ev[key].is_number() ? num(ev[key].get<double>()) : std::string();
                };
                tail = opt("tail_start");
                a = opt("a_found");
                c = opt("pinching_c");
            }
            const std::string statement =
                v.contains("statement") ? v["statement"].get<std::string>() : v["error"].get<std::string>();
            out += fmt::format("{},{},{},{},{},{},{}\n", v["criterion"].get<std::string>(), v["kind"].get<std::string>(),
                               clauses, tail, a, c, csv_text(statement));
        }
        return out;
    }

    // ---- solutions

    Solution solve() const
    {
        return solve_radial(m_, k_, cfg_.policy.u0, cfg_.policy.r_max, cfg_.policy.ode_tol, cfg_.K);
    }

    Series solve_series(const Solution& sol) const
    {
        const auto res = residual(m_, k_, sol.as_radial(), sol.grid());
        Series s{{"r", "u", "u_prime", "residual"}, {}};
        for (std::size_t i = 0; i < sol.grid().size(); ++i)
            s.rows.push_back({sol.grid()[i], sol.u()[i], sol.u_prime()[i], res.values[i].value});
        return s;
    }

    static Json solution_summary(const Solution& sol)
    {
        return {{"status", solve_status_name(sol.status())},
                {"stop_radius", sol.stop_radius()},
                {"u0", sol.u0()},
                {"points", sol.grid().size()},
                {"error_estimate", sol.error_estimate()},
                {"problem", sol.problem()}};
    }

    Json verify(const Solution& sol) const
    {
        const auto lb = verify_lower_bound(m_, k_, sol);
        const double a = std::min(cfg_.policy.a, sol.r_end());
        const auto len = conformal_length(m_, sol, a);
        const auto inf = inf_estimate(sol);
        Json out = Json::array();
        out.push_back({{"criterion", "lower_bound"},
                       {"kind", lb.holds ? "Holds" : "Fails"},
                       {"statement", "u^alpha >= I(r)/(n-1) - slack on the solution grid"},
                       {"policy", {{"slack", lb.slack}, {"tol_res", kResidualTolerance}}},
                       {"evidence", {{"classification", residual_class_name(lb.classification)},
                                     {"precondition_holds", lb.precondition_holds},
                                     {"min_margin", lb.min_margin},
                                     {"at", lb.at},
                                     {"margin", trace_json(lb.margin)}}}});
        out.push_back({{"criterion", "conformal_length"},
                       {"kind", tail_kind_name(len.tail)},
                       {"statement", fmt::format("radial length of u^(4/(n-2)) g from r = {}", a)},
                       {"policy", {{"a", a}}},
                       {"evidence", {{"length", len.length},
                                     {"body", len.body},
                                     {"tail_value", len.tail_value},
                                     {"decay_exponent", optional_number(len.decay_exponent)},
                                     {"rationale", len.rationale}}}});
        out.push_back({{"criterion", "inf_estimate"},
                       {"kind", inf_trend_name(inf.trend)},
                       {"statement", "minimum of u on the grid and its trend over the last decade"},
                       {"evidence", {{"inf_on_grid", inf.inf_on_grid},
                                     {"at", inf.at},
                                     {"decay_exponent", optional_number(inf.decay_exponent)}}}});
        return out;
    }

    static std::string verify_csv(const Json& summary, const Json& v)
    {
        std::string out = "quantity,value\n";
        out += fmt::format("status,{}\n", summary["status"].get<std::string>());
        out += fmt::format("stop_radius,{}\n", num(summary["stop_radius"].get<double>()));
        out += fmt::format("lower_bound,{}\n", v[0]["kind"].get<std::string>());
        out += fmt::format("residual_classification,{}\n", v[0]["evidence"]["classification"].get<std::string>());
        out += fmt::format("min_margin,{}\n", num(v[0]["evidence"]["min_margin"].get<double>()));
        out += fmt::format("min_margin_at,{}\n", num(v[0]["evidence"]["at"].get<double>()));
        out += fmt::format("length_tail,{}\n", v[1]["kind"].get<std::string>());
        out += fmt::format("length,{}\n", num(v[1]["evidence"]["length"].get<double>()));
        out += fmt::format("inf_trend,{}\n", v[2]["kind"].get<std::string>());
        out += fmt::format("inf_on_grid,{}\n", num(v[2]["evidence"]["inf_on_grid"].get<double>()));
        return out;
    }

    Json monte_carlo() const
    {
        const double r = std::min(kMonteCarloRadius, cfg_.policy.r_max);
        const double exact = k_(r).value;
        const auto avg = sphere_average(
            m_, [&](double rr, const UnitVector& xi) { return k_(rr).value * (1.0 + xi[0]); }, r,
            cfg_.policy.mc_samples, cfg_.policy.seed);
        return {{"radius", r},
                {"function", "K(r) (1 + xi_1)"},
                {"samples", cfg_.policy.mc_samples},
                {"seed", cfg_.policy.seed},
                {"mean", avg.mean},
                {"std_error", avg.std_error},
                {"exact", exact},
                {"within_3_sigma", std::fabs(avg.mean - exact) <= 3.0 * avg.std_error}};
    }

private:
    const Config& cfg_;
    ModelManifold m_;
    RadialFn k_;
    CriteriaPolicy policy_;
};

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

} // namespace

std::string_view subcommand_name(Subcommand s)
{
    switch (s) {
    case Subcommand::geometry: return "geometry";
    case Subcommand::check: return "check";
    case Subcommand::solve: return "solve";
    case Subcommand::verify: return "verify";
    case Subcommand::report: return "report";
    }
    return "unknown";
}

std::string render(Subcommand cmd, const Config& cfg, OutputFormat format)
{
    const Context ctx(cfg);
    const bool json = format == OutputFormat::json;
    switch (cmd) {
    case Subcommand::geometry: {
        const auto s = ctx.geometry();
        return json ? dump({{"meta", ctx.meta(cmd)}, {"series", s.json()}}) : s.csv();
    }
    case Subcommand::check: {
        const auto v = ctx.checks();
        return json ? dump({{"meta", ctx.meta(cmd)}, {"verdicts", v}}) : ctx.checks_csv(v);
    }
    case Subcommand::solve: {
        const auto sol = ctx.solve();
        const auto s = ctx.solve_series(sol);
        return json ? dump({{"meta", ctx.meta(cmd)}, {"solution", Context::solution_summary(sol)}, {"series", s.json()}})
                    : s.csv();
    }
    case Subcommand::verify: {
        const auto sol = ctx.solve();
        const auto summary = Context::solution_summary(sol);
        const auto v = ctx.verify(sol);
        return json ? dump({{"meta", ctx.meta(cmd)}, {"solution", summary}, {"verdicts", v}})
                    : Context::verify_csv(summary, v);
    }
    case Subcommand::report: {
        if (!json) throw ConfigError("report writes json only; use --format json");
        const auto sol = ctx.solve();
        Json verdicts = ctx.checks();
        for (auto& v : ctx.verify(sol)) verdicts.push_back(std::move(v));
        return dump({{"meta", ctx.meta(cmd)},
                     {"solution", Context::solution_summary(sol)},
                     {"series", {{"geometry", ctx.geometry().json()}, {"solve", ctx.solve_series(sol).json()}}},
                     {"verdicts", std::move(verdicts)},
                     {"monte_carlo", ctx.monte_carlo()}});
    }
    }
    throw Error("unknown subcommand");
}

int run(Subcommand cmd, Config cfg, const RunFlags& flags, std::ostream& out, std::ostream& err)
{
    try {
        if (flags.seed) cfg.policy.seed = *flags.seed;
        if (flags.format) cfg.output.format = *flags.format;
        if (flags.out) cfg.output.path = *flags.out;

        const std::string doc = render(cmd, cfg, cfg.output.format);
        if (cfg.output.path) {
            std::ofstream f(*cfg.output.path, std::ios::binary | std::ios::trunc);
            if (!f) throw ConfigError(fmt::format("cannot write output file '{}'", *cfg.output.path));
            f << doc;
            if (!f) throw ConfigError(fmt::format("failed writing output file '{}'", *cfg.output.path));
        } else {
            out << doc;
        }
        return 0;
    } catch (const Error& e) {
        err << "curvlab " << subcommand_name(cmd) << ": error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "curvlab " << subcommand_name(cmd) << ": internal error: " << e.what() << '\n';
        return 2;
    }
}

} // namespace curvlab
