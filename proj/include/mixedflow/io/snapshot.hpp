#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mixedflow/errors.hpp"
#include "mixedflow/flow/engine.hpp"
#include "mixedflow/harmonic/grid.hpp"
#include "mixedflow/io/config.hpp"

namespace mixedflow::io {

struct Snapshot {
    int n = 2;
    double R = 1.0;
    int lmax = 0;
    flow::FlowState state;
};

namespace detail {

inline std::string g17(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace detail

/// Header lines `n`, `R`, `L_max`, `t`, then `l p value` for every
/// coefficient, l ascending then p ascending.
inline std::string format_snapshot(const Snapshot& s)
{
    std::ostringstream os;
    os << "n " << s.n << '\n';
    os << "R " << detail::g17(s.R) << '\n';
    os << "L_max " << s.lmax << '\n';
    os << "t " << detail::g17(s.state.t) << '\n';
    const std::size_t count = harmonic::basis_size(s.n, s.lmax);
    for (std::size_t i = 0; i < count; ++i) {
        const auto d = harmonic::degree_index_of(s.n, i);
        const double v = i < s.state.rho.size() ? s.state.rho[i] : 0.0;
        os << d.l << ' ' << d.p << ' ' << detail::g17(v) << '\n';
    }
    return os.str();
}

/// Inverse of format_snapshot. Coefficient lines may be omitted (zero) or
/// appear in any order, but each (l, p) at most once.
inline Snapshot parse_snapshot_text(const std::string& text)
{
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    Snapshot s;
    const char* const header[] = {"n", "R", "L_max", "t"};
    for (const char* key : header) {
        std::string value;
        while (true) {
            if (!std::getline(in, line)) throw ParseError(std::string("missing header line '") + key + "'", line_no + 1);
            ++line_no;
            if (!detail::trim(line).empty()) break;
        }
        std::istringstream ls(line);
        std::string k, extra;
        if (!(ls >> k >> value) || k != key || (ls >> extra)) {
            throw ParseError(std::string("expected header '") + key + " <value>'", line_no);
        }
        if (k == "n") s.n = static_cast<int>(detail::parse_int(value, line_no, "n"));
        if (k == "R") s.R = detail::parse_double(value, line_no, "R");
        if (k == "L_max") s.lmax = static_cast<int>(detail::parse_int(value, line_no, "L_max"));
        if (k == "t") s.state.t = detail::parse_double(value, line_no, "t");
    }
    if (s.n != 1 && s.n != 2) throw ParseError("n must be 1 or 2", 1);
    if (!(s.R > 0.0)) throw ParseError("R must be positive", 2);
    if (s.lmax < 0) throw ParseError("L_max must be non-negative", 3);

    const std::size_t count = harmonic::basis_size(s.n, s.lmax);
    s.state.rho.assign(count, 0.0);
    std::vector<bool> seen(count, false);
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        std::istringstream ls(line);
        std::string ls_l, ls_p, ls_v, extra;
        if (!(ls >> ls_l >> ls_p >> ls_v) || (ls >> extra)) throw ParseError("expected 'l p value'", line_no);
        const long l = detail::parse_int(ls_l, line_no, "l");
        const long p = detail::parse_int(ls_p, line_no, "p");
        if (l < 0 || l > s.lmax) throw ParseError("degree " + std::to_string(l) + " outside 0..L_max", line_no);
        if (p < 1 || p > harmonic::harmonic_count(static_cast<int>(l), s.n)) {
            throw ParseError("index p=" + std::to_string(p) + " out of range for degree " + std::to_string(l), line_no);
        }
        const std::size_t i = harmonic::coeff_index(s.n, static_cast<int>(l), static_cast<int>(p));
        if (seen[i]) throw ParseError("coefficient (" + std::to_string(l) + ", " + std::to_string(p) + ") repeated", line_no);
        seen[i] = true;
        s.state.rho[i] = detail::parse_double(ls_v, line_no, "coefficient");
    }
    return s;
}

inline void write_snapshot(const Snapshot& s, const std::string& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidArgument("cannot write snapshot " + path);
    out << format_snapshot(s);
}

inline Snapshot read_snapshot(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidArgument("cannot open snapshot " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_snapshot_text(ss.str());
}

} // namespace mixedflow::io
