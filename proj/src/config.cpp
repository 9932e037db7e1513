#include "curvlab/config.hpp"

#include "curvlab/errors.hpp"
#include "curvlab/radial_ode.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>

namespace curvlab {

std::string_view format_name(OutputFormat f) { return f == OutputFormat::json ? "json" : "csv"; }

namespace {

struct Entry {
    std::string value;
    int line;
};

using Sections = std::map<std::string, std::map<std::string, Entry>>;

bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

class Lexer {
public:
    explicit Lexer(std::string_view s) : s_(s) {}

    Sections run()
    {
        Sections out;
        std::string section;
        for (;;) {
            skip_blank();
            if (pos_ >= s_.size()) break;
            if (s_[pos_] == '[') {
                ++pos_;
                skip_inline();
                section = ident("section name");
                skip_inline();
                expect(']');
                out[section];
                continue;
            }
            const int key_line = line_;
            std::string key = ident("key");
            skip_inline();
            expect('=');
            skip_inline();
            std::string value = this->value();
            if (section.empty()) throw ParseError(key_line, fmt::format("key '{}' appears before any [section]", key));
            auto& keys = out[section];
            if (keys.count(key)) throw ParseError(key_line, fmt::format("duplicate key {}.{}", section, key));
            keys.emplace(std::move(key), Entry{std::move(value), key_line});
        }
        return out;
    }

private:
    void skip_inline()
    {
        while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t' || s_[pos_] == '\r')) ++pos_;
    }

    void skip_blank()
    {
        while (pos_ < s_.size()) {
            const char c = s_[pos_];
            if (c == '\n') {
                ++line_;
                ++pos_;
            } else if (c == ' ' || c == '\t' || c == '\r') {
                ++pos_;
            } else if (c == '#' || c == ';') {
                while (pos_ < s_.size() && s_[pos_] != '\n') ++pos_;
            } else {
                break;
            }
        }
    }

    void expect(char c)
    {
        if (pos_ >= s_.size() || s_[pos_] != c) throw ParseError(line_, fmt::format("expected '{}' {}", c, found()));
        ++pos_;
    }

    std::string found() const
    {
        if (pos_ >= s_.size()) return "at end of input";
        if (s_[pos_] == '\n') return "at end of line";
        return fmt::format("before '{}'", s_[pos_]);
    }

    std::string ident(const char* what)
    {
        const std::size_t start = pos_;
        while (pos_ < s_.size() && ident_char(s_[pos_])) ++pos_;
        if (pos_ == start) throw ParseError(line_, fmt::format("expected {} {}", what, found()));
        return std::string(s_.substr(start, pos_ - start));
    }

    std::string value()
    {
        if (pos_ < s_.size() && s_[pos_] == '"') {
            ++pos_;
            std::string out;
            while (pos_ < s_.size() && s_[pos_] != '"') {
                if (s_[pos_] == '\n') throw ParseError(line_, "unterminated string");
                if (s_[pos_] == '\\' && pos_ + 1 < s_.size() && (s_[pos_ + 1] == '"' || s_[pos_ + 1] == '\\')) ++pos_;
                out += s_[pos_++];
            }
            if (pos_ >= s_.size()) throw ParseError(line_, "unterminated string");
            ++pos_;
            return out;
        }
        const std::size_t start = pos_;
        while (pos_ < s_.size() && !std::isspace(static_cast<unsigned char>(s_[pos_])) && s_[pos_] != '#' &&
               s_[pos_] != ';' && s_[pos_] != '[')
            ++pos_;
        if (pos_ == start) throw ParseError(line_, fmt::format("expected a value {}", found()));
        return std::string(s_.substr(start, pos_ - start));
    }

    std::string_view s_;
    std::size_t pos_ = 0;
    int line_ = 1;
};

class Reader {
public:
    explicit Reader(Sections s) : s_(std::move(s)) {}

    const Entry* find(const std::string& section, const std::string& key)
    {
        used_.insert(section + "." + key);
        auto sec = s_.find(section);
        if (sec == s_.end()) return nullptr;
        auto it = sec->second.find(key);
        return it == sec->second.end() ? nullptr : &it->second;
    }

    template <class T>
    void number(const std::string& section, const std::string& key, T& out)
    {
        const Entry* e = find(section, key);
        if (!e) return;
        const auto& v = e->value;
        const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
        if (res.ec != std::errc() || res.ptr != v.data() + v.size())
            throw ValidationError(section + "." + key, fmt::format("'{}' is not a valid number (line {})", v, e->line));
    }

    void text(const std::string& section, const std::string& key, std::optional<std::string>& out)
    {
        if (const Entry* e = find(section, key)) out = e->value;
    }

    void reject_unknown() const
    {
        static const std::set<std::string> sections{"manifold", "curvature", "policy", "output"};
        for (const auto& [name, keys] : s_) {
            if (!sections.count(name)) throw ValidationError(name, "unknown section");
            for (const auto& [key, entry] : keys) {
                if (!used_.count(name + "." + key))
                    throw ValidationError(name + "." + key, fmt::format("unknown key (line {})", entry.line));
            }
        }
    }

private:
    Sections s_;
    std::set<std::string> used_;
};

void require_positive(double v, const char* key)
{
    if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError(key, fmt::format("must be positive, got {}", v));
}

void require_at_least(int v, int lo, const char* key)
{
    if (v < lo) throw ValidationError(key, fmt::format("must be at least {}, got {}", lo, v));
}

void require_expression(const std::string& text, const char* key)
{
    try {
        (void)parse(text);
    } catch (const SyntaxError& e) {
        throw ValidationError(key, e.what());
    }
}

} // namespace

Config parse_config(std::string_view text)
{
    Reader rd(Lexer(text).run());
    Config cfg;

    auto& m = cfg.manifold;
    rd.number("manifold", "n", m.n);
    std::optional<std::string> preset;
    rd.text("manifold", "preset", preset);
    rd.number("manifold", "c", m.c);
    rd.text("manifold", "h", m.h);
    rd.text("manifold", "k_override", m.k_override);

    std::optional<std::string> k;
    rd.text("curvature", "K", k);

    auto& p = cfg.policy;
    rd.number("policy", "quad_rel_tol", p.quad_rel_tol);
    rd.number("policy", "tol", p.tol);
    rd.number("policy", "big", p.big);
    rd.number("policy", "doublings", p.doublings);
    rd.number("policy", "beta_tol", p.beta_tol);
    rd.number("policy", "R_max", p.R_max);
    rd.number("policy", "grid", p.grid);
    rd.number("policy", "tail_points", p.tail_points);
    rd.number("policy", "ch_grid", p.ch_grid);
    rd.number("policy", "growth_factor", p.growth_factor);
    rd.number("policy", "delta", p.delta);
    rd.number("policy", "seed", p.seed);
    rd.number("policy", "mc_samples", p.mc_samples);
    rd.number("policy", "u0", p.u0);
    rd.number("policy", "r_max", p.r_max);
    rd.number("policy", "ode_tol", p.ode_tol);
    rd.number("policy", "a", p.a);
    rd.number("policy", "geometry_points", p.geometry_points);

    std::optional<std::string> format;
    rd.text("output", "format", format);
    rd.text("output", "path", cfg.output.path);

    rd.reject_unknown();

    if (m.n < 3) throw ValidationError("manifold.n", fmt::format("dimension must satisfy n >= 3, got {}", m.n));
    if (preset && m.h) throw ValidationError("manifold", "give exactly one of preset and h, not both");
    if (!preset && !m.h) throw ValidationError("manifold", "one of preset or h is required");
    if (preset) {
        if (*preset == "euclidean") m.preset = Preset::euclidean;
        else if (*preset == "hyperbolic") m.preset = Preset::hyperbolic;
        else throw ValidationError("manifold.preset", fmt::format("expected euclidean or hyperbolic, got '{}'", *preset));
    }
    require_positive(m.c, "manifold.c");
    if (m.h) require_expression(*m.h, "manifold.h");
    if (m.k_override) require_expression(*m.k_override, "manifold.k_override");

    if (!k) throw ValidationError("curvature.K", "required");
    require_expression(*k, "curvature.K");
    cfg.K = *k;

    require_positive(p.quad_rel_tol, "policy.quad_rel_tol");
    require_positive(p.tol, "policy.tol");
    require_positive(p.big, "policy.big");
    require_positive(p.beta_tol, "policy.beta_tol");
    require_positive(p.R_max, "policy.R_max");
    require_positive(p.growth_factor, "policy.growth_factor");
    require_positive(p.u0, "policy.u0");
    require_positive(p.r_max, "policy.r_max");
    require_positive(p.ode_tol, "policy.ode_tol");
    if (!(p.ode_tol < 1.0)) throw ValidationError("policy.ode_tol", "must be below 1");
    if (!std::isfinite(p.delta)) throw ValidationError("policy.delta", "must be finite");
    if (!(p.a >= 0.0) || !(p.a < p.r_max)) throw ValidationError("policy.a", "must lie in [0, r_max)");
    if (!(p.R_max > 0.01)) throw ValidationError("policy.R_max", "must exceed the scan start 0.01");
    if (p.r_max <= kTaylorStart) throw ValidationError("policy.r_max", fmt::format("must exceed {}", kTaylorStart));
    require_at_least(p.doublings, 3, "policy.doublings");
    require_at_least(p.grid, 2, "policy.grid");
    require_at_least(p.tail_points, 1, "policy.tail_points");
    if (p.tail_points > p.grid) throw ValidationError("policy.tail_points", "must not exceed policy.grid");
    require_at_least(p.ch_grid, 16, "policy.ch_grid");
    require_at_least(p.mc_samples, 100, "policy.mc_samples");
    require_at_least(p.geometry_points, 1, "policy.geometry_points");

    if (format) {
        if (*format == "json") cfg.output.format = OutputFormat::json;
        else if (*format == "csv") cfg.output.format = OutputFormat::csv;
        else throw ValidationError("output.format", fmt::format("expected csv or json, got '{}'", *format));
    }
    return cfg;
}

Config load_config(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(fmt::format("cannot read config file '{}'", path));
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

ModelManifold build_manifold(const Config& cfg)
{
    const auto& mc = cfg.manifold;
    ModelManifold m = [&] {
        if (mc.preset == Preset::euclidean) return ModelManifold::euclidean(mc.n);
        if (mc.preset == Preset::hyperbolic) return ModelManifold::hyperbolic(mc.n, mc.c);
        return ModelManifold::custom(mc.n, as_radial(parse(*mc.h)), *mc.h);
    }();
    if (mc.k_override) m = m.with_k_override(as_radial(parse(*mc.k_override)), *mc.k_override);
    return m;
}

RadialFn build_curvature(const Config& cfg) { return as_radial(parse(cfg.K)); }

CriteriaPolicy criteria_policy(const Config& cfg)
{
    const auto& p = cfg.policy;
    CriteriaPolicy out;
    out.scan.r_max = p.R_max;
    out.scan.n_grid = p.grid;
    out.scan.min_tail_points = p.tail_points;
    out.classify.max_doublings = p.doublings;
    out.classify.tol = p.tol;
    out.classify.big = p.big;
    out.classify.quad_rel_tol = p.quad_rel_tol;
    out.limit.big = p.big;
    out.limit.tol = p.tol;
    out.beta_tol = p.beta_tol;
    out.ch_grid = p.ch_grid;
    out.growth_factor = p.growth_factor;
    return out;
}

} // namespace curvlab
