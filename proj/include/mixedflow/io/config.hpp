#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "mixedflow/analysis/sphere.hpp"
#include "mixedflow/errors.hpp"
#include "mixedflow/flow/engine.hpp"
#include "mixedflow/harmonic/transform.hpp"
#include "mixedflow/speeds.hpp"

namespace mixedflow::io {

/// One term of the initial height. Terms are summed.
struct InitTerm {
    enum class Kind { constant, harmonic, random, sphere };
    Kind kind = Kind::constant;
    /// const: {c}; harmonic: {l, p, amp}; random: {amp, lmax, seed}; sphere: {z0, z1, ...}.
    std::vector<double> args;
};

struct ExperimentConfig {
    flow::FlowConfig flow;
    std::vector<InitTerm> init;
    std::string out_dir = "out";
    /// Config lines in canonical `key = value` form, echoed into outputs.
    std::vector<std::string> echo;
};

namespace detail {

inline std::string_view trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

inline std::vector<std::string_view> split(std::string_view s, char sep)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline double parse_double(std::string_view s, int line, std::string_view what)
{
    s = trim(s);
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size() || s.empty()) {
        throw ParseError("expected a number for " + std::string(what) + ", got '" + std::string(s) + "'", line);
    }
    return v;
}

inline long parse_int(std::string_view s, int line, std::string_view what)
{
    s = trim(s);
    long v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size() || s.empty()) {
        throw ParseError("expected an integer for " + std::string(what) + ", got '" + std::string(s) + "'", line);
    }
    return v;
}

inline std::vector<InitTerm> parse_init(std::string_view text, int line)
{
    std::vector<InitTerm> terms;
    for (std::string_view term : split(text, ';')) {
        const auto colon = term.find(':');
        if (colon == std::string_view::npos) throw ParseError("init term '" + std::string(term) + "' needs kind:args", line);
        const std::string_view kind = trim(term.substr(0, colon));
        std::vector<double> args;
        for (std::string_view a : split(term.substr(colon + 1), ',')) args.push_back(parse_double(a, line, "init"));
        InitTerm t;
        t.args = args;
        auto need = [&](std::size_t count) {
            if (args.size() != count) {
                throw ParseError("init " + std::string(kind) + " takes " + std::to_string(count) + " arguments, got " +
                                     std::to_string(args.size()),
                                 line);
            }
        };
        auto integral = [&](double v, std::string_view what) {
            if (v != std::floor(v)) throw ParseError("init " + std::string(what) + " must be an integer", line);
        };
        if (kind == "const") {
            t.kind = InitTerm::Kind::constant;
            need(1);
        } else if (kind == "harmonic") {
            t.kind = InitTerm::Kind::harmonic;
            need(3);
            integral(args[0], "harmonic degree");
            integral(args[1], "harmonic index");
        } else if (kind == "random") {
            t.kind = InitTerm::Kind::random;
            need(3);
            integral(args[1], "random lmax");
            integral(args[2], "random seed");
            if (args[2] < 0.0) throw ParseError("init random seed must be non-negative", line);
            if (args[1] < 2.0) throw ParseError("init random lmax must be at least 2", line);
        } else if (kind == "sphere") {
            t.kind = InitTerm::Kind::sphere;
            if (args.size() < 3 || args.size() > 4) throw ParseError("init sphere takes z0 and n + 1 centre coordinates", line);
        } else {
            throw ParseError("unknown init kind '" + std::string(kind) + "'", line);
        }
        terms.push_back(std::move(t));
    }
    return terms;
}

struct SpeedText {
    std::string kind = "mean";
    std::map<std::string, double> params;
};

inline SpeedText parse_speed_text(std::string_view text, int line)
{
    std::istringstream is{std::string(text)};
    SpeedText out;
    is >> out.kind;
    std::string tok;
    while (is >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) throw ParseError("speed parameter '" + tok + "' must be name=value", line);
        out.params[tok.substr(0, eq)] = parse_double(std::string_view(tok).substr(eq + 1), line, "speed parameter");
    }
    return out;
}

inline speeds::SpeedSpec build_speed(const SpeedText& st, int n, double R, int line)
{
    auto param = [&](const std::string& name) {
        const auto it = st.params.find(name);
        if (it == st.params.end()) throw ParseError("speed " + st.kind + " needs " + name + "=", line);
        return it->second;
    };
    auto allow = [&](std::initializer_list<const char*> names) {
        for (const auto& [k, v] : st.params) {
            bool ok = false;
            for (const char* nm : names) ok = ok || k == nm;
            if (!ok) throw ParseError("speed " + st.kind + " has no parameter " + k, line);
        }
    };
    try {
        if (st.kind == "mean") {
            allow({});
            return speeds::SpeedSpec::mean(n, R);
        }
        if (st.kind == "power_mean") {
            allow({"m", "beta"});
            const double m = param("m");
            if (m != std::floor(m)) throw ParseError("power_mean m must be an integer", line);
            return speeds::SpeedSpec::power_mean(n, R, static_cast<int>(m), param("beta"));
        }
        if (st.kind == "elementary") {
            allow({"l"});
            const double l = param("l");
            if (l != std::floor(l)) throw ParseError("elementary l must be an integer", line);
            return speeds::SpeedSpec::elementary(n, R, static_cast<int>(l));
        }
    } catch (const ParseError&) {
        throw;
    } catch (const Error& e) {
        throw ParseError(e.what(), line);
    }
    throw ParseError("unknown speed '" + st.kind + "' (mean, power_mean, elementary)", line);
}

} // namespace detail

/// Parses line-based `key = value` text. `#` starts a comment. Every key may
/// appear at most once; unknown keys are rejected. Errors carry line numbers.
inline ExperimentConfig parse_config_text(std::string_view text)
{
    struct Entry {
        std::string value;
        int line;
    };
    std::map<std::string, Entry> entries;
    static const char* const known[] = {"n",  "R",     "k",       "speed",   "integrator", "dt",     "T",
                                        "L_max", "init", "out_dir", "cadence", "oversample", "c_cfl", "g_tol"};

    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
        raw = detail::trim(raw);
        if (raw.empty()) continue;
        const auto eq = raw.find('=');
        if (eq == std::string_view::npos) throw ParseError("expected key = value", line_no);
        const std::string key(detail::trim(raw.substr(0, eq)));
        const std::string value(detail::trim(raw.substr(eq + 1)));
        bool ok = false;
        for (const char* k : known) ok = ok || key == k;
        if (!ok) throw ParseError("unknown key '" + key + "'", line_no);
        if (value.empty()) throw ParseError("key '" + key + "' has no value", line_no);
        if (const auto it = entries.find(key); it != entries.end()) {
            throw ParseError("key '" + key + "' repeats line " + std::to_string(it->second.line), line_no);
        }
        entries[key] = Entry{value, line_no};
    }

    ExperimentConfig cfg;
    flow::FlowConfig& f = cfg.flow;
    auto get = [&](const char* key) -> const Entry* {
        const auto it = entries.find(key);
        return it == entries.end() ? nullptr : &it->second;
    };

    const Entry* n_entry = get("n");
    if (!n_entry) throw ParseError("missing required key 'n'", line_no);
    f.n = static_cast<int>(detail::parse_int(n_entry->value, n_entry->line, "n"));
    if (f.n != 1 && f.n != 2) throw ParseError("n must be 1 or 2", n_entry->line);

    if (const Entry* e = get("R")) {
        f.R = detail::parse_double(e->value, e->line, "R");
        if (!(f.R > 0.0)) throw ParseError("R must be positive", e->line);
    }
    if (const Entry* e = get("k")) {
        f.k = static_cast<int>(detail::parse_int(e->value, e->line, "k"));
        if (f.k < -1 || f.k > f.n - 1) {
            throw ParseError("k=" + std::to_string(f.k) + " outside -1.." + std::to_string(f.n - 1), e->line);
        }
    }
    if (const Entry* e = get("integrator")) {
        if (e->value == "rk4") {
            f.integrator = flow::Integrator::rk4;
        } else if (e->value == "imex") {
            f.integrator = flow::Integrator::imex;
        } else {
            throw ParseError("integrator must be rk4 or imex", e->line);
        }
    }
    if (const Entry* e = get("dt")) {
        f.dt = detail::parse_double(e->value, e->line, "dt");
        if (!(f.dt > 0.0)) throw ParseError("dt must be positive", e->line);
    }
    if (const Entry* e = get("T")) {
        f.T = detail::parse_double(e->value, e->line, "T");
        if (!(f.T > 0.0)) throw ParseError("T must be positive", e->line);
    }
    if (const Entry* e = get("L_max")) {
        f.lmax = static_cast<int>(detail::parse_int(e->value, e->line, "L_max"));
        if (f.lmax < 4) throw ParseError("L_max must be at least 4", e->line);
    }
    if (const Entry* e = get("oversample")) {
        f.oversample = static_cast<int>(detail::parse_int(e->value, e->line, "oversample"));
        if (f.oversample < 1) throw ParseError("oversample must be at least 1", e->line);
    }
    if (const Entry* e = get("cadence")) {
        f.cadence = static_cast<int>(detail::parse_int(e->value, e->line, "cadence"));
        if (f.cadence < 1) throw ParseError("cadence must be at least 1", e->line);
    }
    if (const Entry* e = get("c_cfl")) {
        f.c_cfl = detail::parse_double(e->value, e->line, "c_cfl");
        if (!(f.c_cfl > 0.0)) throw ParseError("c_cfl must be positive", e->line);
    }
    if (const Entry* e = get("g_tol")) {
        f.g_tol = detail::parse_double(e->value, e->line, "g_tol");
        if (!(f.g_tol >= 0.0)) throw ParseError("g_tol must be non-negative", e->line);
    }
    if (const Entry* e = get("speed")) {
        f.speed = detail::build_speed(detail::parse_speed_text(e->value, e->line), f.n, f.R, e->line);
    } else {
        f.speed = speeds::SpeedSpec::mean(f.n, f.R);
    }
    if (const Entry* e = get("out_dir")) cfg.out_dir = e->value;

    if (const Entry* e = get("init")) {
        cfg.init = detail::parse_init(e->value, e->line);
        for (const InitTerm& t : cfg.init) {
            if (t.kind == InitTerm::Kind::harmonic) {
                const int l = static_cast<int>(t.args[0]);
                const int p = static_cast<int>(t.args[1]);
                if (l < 0 || l > f.lmax) throw ParseError("init harmonic degree outside 0..L_max", e->line);
                if (p < 1 || p > harmonic::harmonic_count(l, f.n)) throw ParseError("init harmonic index p out of range", e->line);
            } else if (t.kind == InitTerm::Kind::random) {
                if (t.args[1] > f.lmax) throw ParseError("init random lmax exceeds L_max", e->line);
            } else if (t.kind == InitTerm::Kind::sphere) {
                if (static_cast<int>(t.args.size()) != f.n + 2) {
                    throw ParseError("init sphere needs n + 2 = " + std::to_string(f.n + 2) + " values", e->line);
                }
            }
        }
    }

    try {
        f.validate();
    } catch (const Error& err) {
        throw ParseError(err.what(), line_no);
    }

    for (const char* key : known) {
        if (const Entry* e = get(key)) cfg.echo.push_back(std::string(key) + " = " + e->value);
    }
    return cfg;
}

inline ExperimentConfig parse_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open config file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

/// Uniform double in [-1, 1) from the top 53 bits of one mt19937_64 draw.
/// Spelled out so the stream is identical across standard libraries.
inline double portable_uniform(std::mt19937_64& rng)
{
    const std::uint64_t bits = rng() >> 11;
    return 2.0 * (static_cast<double>(bits) * 0x1.0p-53) - 1.0;
}

/// Band-limited random height on degrees 2..lmax, scaled so sup|rho| = amp.
/// The sup is sampled on a fixed 4x-oversampled grid for degree lmax, so the
/// field does not depend on the truncation of the run it seeds.
inline std::vector<double> random_height(const harmonic::Grid& g, double R, double amp, int lmax, std::uint64_t seed)
{
    if (lmax > g.lmax) throw InvalidArgument("random initial degree exceeds L_max");
    std::mt19937_64 rng(seed);
    std::vector<double> a(g.num_coeffs(), 0.0);
    for (std::size_t i = harmonic::basis_size(g.n, 1); i < harmonic::basis_size(g.n, lmax); ++i) a[i] = portable_uniform(rng);
    const harmonic::Grid probe = harmonic::build_grid(g.n, std::max(lmax, 4), 4);
    const std::vector<double> v = harmonic::synthesize(std::span<const double>(a).first(probe.num_coeffs()), probe, R);
    double sup = 0.0;
    for (double x : v) sup = std::max(sup, std::abs(x));
    if (sup > 0.0) {
        for (double& x : a) x *= amp / sup;
    }
    return a;
}

/// Initial coefficients for a config. Sphere terms are projected onto the
/// truncated basis.
inline std::vector<double> initial_height(const std::vector<InitTerm>& init, const harmonic::Grid& g, double R)
{
    std::vector<double> a(g.num_coeffs(), 0.0);
    for (const InitTerm& t : init) {
        std::vector<double> term(g.num_coeffs(), 0.0);
        switch (t.kind) {
        case InitTerm::Kind::constant:
            term[0] = t.args[0] * analysis::constant_scale(g.n, R);
            break;
        case InitTerm::Kind::harmonic:
            term[harmonic::coeff_index(g.n, static_cast<int>(t.args[0]), static_cast<int>(t.args[1]))] = t.args[2];
            break;
        case InitTerm::Kind::random:
            term = random_height(g, R, t.args[0], static_cast<int>(t.args[1]), static_cast<std::uint64_t>(t.args[2]));
            break;
        case InitTerm::Kind::sphere:
            term = harmonic::analyze(analysis::sphere_from_coords(analysis::SphereCoords{t.args}, g, R), g, R);
            break;
        }
        for (std::size_t i = 0; i < a.size(); ++i) a[i] += term[i];
    }
    return a;
}

} // namespace mixedflow::io
